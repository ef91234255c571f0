//! Consistency checks over solved tables.
//!
//! The relation system is overdetermined, so independent subsets of it must
//! agree wherever both determine a value. Absolute values are also compared
//! against a small list of classical counts kept in `data/expected_p2.csv`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::complex_gw::ComplexProvider;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::relations::{self, RealKey, RelationInstance, RelationKind};
use crate::solver::{self, InvariantTable, KeyStatus, NonlinearPolicy, SolveOptions, SolveReport};
use crate::table_io::{self, Row};

const EXPECTED_P2: &str = include_str!("../data/expected_p2.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreedValue {
    pub key: RealKey,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSummary {
    pub lead: RelationKind,
    pub r1_instances: usize,
    pub r2_instances: usize,
    pub r3_instances: usize,
    pub pinned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossSubsetReport {
    pub degree_bound: i64,
    pub subsets: Vec<SubsetSummary>,
    /// Keys pinned by both subsets, in listing order.
    pub agreed: Vec<AgreedValue>,
}

fn pinned(table: &InvariantTable) -> BTreeMap<RealKey, BigRational> {
    table
        .iter()
        .filter_map(|(k, e)| match (e.status, &e.value) {
            (KeyStatus::Solved | KeyStatus::Straggler, Some(v)) => Some((k.clone(), v.clone())),
            _ => None,
        })
        .collect()
}

/// Starts from every instance and drops instances of the other kind, highest
/// degree first, whenever the remaining system still pins `target`.
fn led_subset(
    config: &RunConfig,
    all: &[RelationInstance],
    drop_kind: RelationKind,
    target: &BTreeMap<RealKey, BigRational>,
    options: SolveOptions,
) -> Result<(Vec<RelationInstance>, BTreeMap<RealKey, BigRational>)> {
    let solve = |keep: &[bool]| -> Result<BTreeMap<RealKey, BigRational>> {
        let subset: Vec<_> = all
            .iter()
            .zip(keep)
            .filter(|(_, k)| **k)
            .map(|(i, _)| i.clone())
            .collect();
        let (t, _) = solver::solve_instances(&config.model, &subset, config.degree_bound, &config.seeds, options)?;
        Ok(pinned(&t))
    };
    let mut keep = vec![true; all.len()];
    let mut current = solve(&keep)?;
    for idx in (0..all.len()).rev().filter(|&i| all[i].kind == drop_kind) {
        keep[idx] = false;
        let trial = solve(&keep)?;
        if target.keys().all(|k| trial.contains_key(k)) {
            current = trial;
        } else {
            keep[idx] = true;
        }
    }
    let subset = all
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(i, _)| i.clone())
        .collect();
    Ok((subset, current))
}

fn summarize(lead: RelationKind, subset: &[RelationInstance], pinned: usize) -> SubsetSummary {
    let count = |k| subset.iter().filter(|i| i.kind == k).count();
    SubsetSummary {
        lead,
        r1_instances: count(RelationKind::R1),
        r2_instances: count(RelationKind::R2),
        r3_instances: count(RelationKind::R3),
        pinned,
    }
}

/// Solves two reduced systems and compares every key pinned by both. The
/// R1-led system keeps every R1 instance and only the R2 instances needed to
/// keep the staged system determined; the R2-led system does the converse.
/// Equations that stay nonlinear are deferred rather than fatal.
pub fn cross_subset_check(config: &RunConfig, provider: &ComplexProvider) -> Result<CrossSubsetReport> {
    let horizon = config.options.horizon(config.degree_bound);
    let all = relations::enumerate_instances(&config.model, horizon, &config.triples, provider)?;
    cross_subset_check_instances(config, &all)
}

pub fn cross_subset_check_instances(config: &RunConfig, all: &[RelationInstance]) -> Result<CrossSubsetReport> {
    let options = SolveOptions {
        nonlinear: NonlinearPolicy::Defer,
        ..config.options
    };
    let (full, _) = solver::solve_instances(&config.model, all, config.degree_bound, &config.seeds, options)?;
    let target = pinned(&full);
    let (sa, pa) = led_subset(config, all, RelationKind::R2, &target, options)?;
    let (sb, pb) = led_subset(config, all, RelationKind::R1, &target, options)?;

    let mut agreed = Vec::new();
    for (k, va) in full.iter().filter_map(|(k, _)| pa.get_key_value(k)) {
        let Some(vb) = pb.get(k) else { continue };
        if va != vb {
            return Err(Error::Mismatch {
                key: k.clone(),
                left: va.to_string(),
                right: vb.to_string(),
            });
        }
        agreed.push(AgreedValue {
            key: k.clone(),
            value: va.to_string(),
        });
    }
    Ok(CrossSubsetReport {
        degree_bound: config.degree_bound,
        subsets: vec![
            summarize(RelationKind::R1, &sa, pa.len()),
            summarize(RelationKind::R2, &sb, pb.len()),
        ],
        agreed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Mismatch,
    NotComputed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub key: RealKey,
    pub expected_abs: String,
    pub actual: Option<String>,
    pub outcome: Outcome,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedReport {
    pub comparisons: Vec<Comparison>,
}

impl ExpectedReport {
    pub fn passed(&self) -> usize {
        self.count(Outcome::Pass)
    }

    pub fn mismatches(&self) -> usize {
        self.count(Outcome::Mismatch)
    }

    pub fn not_computed(&self) -> usize {
        self.count(Outcome::NotComputed)
    }

    fn count(&self, o: Outcome) -> usize {
        self.comparisons.iter().filter(|c| c.outcome == o).count()
    }
}

/// The built-in expected absolute values for P².
pub fn expected_p2() -> Result<Vec<Row>> {
    Ok(table_io::parse_csv_rows(EXPECTED_P2, "expected_p2.csv")?.1)
}

/// Compares absolute values against the built-in list. Entries missing from
/// the table are reported as not computed rather than failed.
pub fn expected_values_check(table: &InvariantTable) -> Result<ExpectedReport> {
    Ok(compare_expected(table, &expected_p2()?))
}

pub fn compare_expected(table: &InvariantTable, expected: &[Row]) -> ExpectedReport {
    let comparisons = expected
        .iter()
        .filter_map(|row| {
            let want = row.value.as_ref()?.abs();
            let actual = table.value(&row.key);
            let outcome = match actual {
                None => Outcome::NotComputed,
                Some(v) if v.abs() == want => Outcome::Pass,
                Some(_) => Outcome::Mismatch,
            };
            Some(Comparison {
                key: row.key.clone(),
                expected_abs: want.to_string(),
                actual: actual.map(ToString::to_string),
                outcome,
                provenance: row.provenance.clone().unwrap_or_default(),
            })
        })
        .collect();
    ExpectedReport { comparisons }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonzeroResidual {
    pub kind: RelationKind,
    pub key: RealKey,
    pub triple: usize,
    pub residual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualSweep {
    pub instances: usize,
    pub nonzero: Vec<NonzeroResidual>,
    /// Instances referencing a key with no value in the table.
    pub unevaluated: usize,
}

/// Evaluates every instance against the table.
pub fn residual_sweep(instances: &[RelationInstance], table: &InvariantTable) -> ResidualSweep {
    let mut nonzero = Vec::new();
    let mut unevaluated = 0;
    for inst in instances {
        match solver::residual(inst, table) {
            Ok(r) if r.is_zero() => {}
            Ok(r) => nonzero.push(NonzeroResidual {
                kind: inst.kind,
                key: inst.lhs_key.clone(),
                triple: inst.triple_index,
                residual: r.to_string(),
            }),
            Err(_) => unevaluated += 1,
        }
    }
    ResidualSweep {
        instances: instances.len(),
        nonzero,
        unevaluated,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CrossSubsetOutcome {
    Ok(CrossSubsetReport),
    Mismatch { key: RealKey, left: String, right: String },
}

/// Everything `check` verifies, in one serializable document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub surface: String,
    pub degree_bound: i64,
    pub solve: SolveReport,
    pub residuals: ResidualSweep,
    pub integrality_violations: Vec<RealKey>,
    pub cross_subset: CrossSubsetOutcome,
    pub expected_values: Option<ExpectedReport>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.residuals.nonzero.is_empty()
            && self.integrality_violations.is_empty()
            && matches!(self.cross_subset, CrossSubsetOutcome::Ok(_))
            && self.expected_values.as_ref().is_none_or(|e| e.mismatches() == 0)
            && self.solve.unresolved.is_empty()
    }

    /// Short human-readable summary, one fact per line.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let r = &self.residuals;
        s.push_str(&format!(
            "residuals: {} nonzero / {} instances\n",
            r.nonzero.len(),
            r.instances
        ));
        if r.unevaluated > 0 {
            s.push_str(&format!("unevaluated instances: {}\n", r.unevaluated));
        }
        s.push_str(&format!(
            "integrality: {} violations\n",
            self.integrality_violations.len()
        ));
        match &self.cross_subset {
            CrossSubsetOutcome::Ok(c) => s.push_str(&format!("cross-subset: {} keys agree\n", c.agreed.len())),
            CrossSubsetOutcome::Mismatch { key, left, right } => {
                s.push_str(&format!("cross-subset: MISMATCH at {key}: {left} vs {right}\n"))
            }
        }
        if let Some(e) = &self.expected_values {
            s.push_str(&format!(
                "expected values: {} comparisons, {} pass, {} mismatch, {} not computed\n",
                e.comparisons.len(),
                e.passed(),
                e.mismatches(),
                e.not_computed()
            ));
            for c in &e.comparisons {
                let outcome = match c.outcome {
                    Outcome::Pass => "pass",
                    Outcome::Mismatch => "MISMATCH",
                    Outcome::NotComputed => "not computed",
                };
                s.push_str(&format!(
                    "  |{}| = {} expected, got {}: {outcome}\n",
                    c.key,
                    c.expected_abs,
                    c.actual.as_deref().unwrap_or("-")
                ));
            }
        }
        if !self.solve.unresolved.is_empty() {
            s.push_str(&format!("unresolved: {} keys\n", self.solve.unresolved.len()));
        }
        s
    }
}

/// Solves, then runs the residual sweep, integrality check, cross-subset check
/// and, for P², the expected-value comparison.
pub fn run_checks(config: &RunConfig, provider: &ComplexProvider) -> Result<(InvariantTable, CheckReport)> {
    let horizon = config.options.horizon(config.degree_bound);
    let instances = relations::enumerate_instances(&config.model, horizon, &config.triples, provider)?;
    let (table, solve) = solver::solve_instances(
        &config.model,
        &instances,
        config.degree_bound,
        &config.seeds,
        config.options,
    )?;
    let in_bound: Vec<RelationInstance> = instances
        .iter()
        .filter(|i| {
            config
                .model
                .c1_degree(&i.lhs_key.class)
                .is_ok_and(|d| d <= config.degree_bound)
        })
        .cloned()
        .collect();
    let residuals = residual_sweep(&in_bound, &table);
    let integrality_violations = solver::check_integrality(&table);
    let cross_subset = match cross_subset_check_instances(config, &instances) {
        Ok(r) => CrossSubsetOutcome::Ok(r),
        Err(Error::Mismatch { key, left, right }) => CrossSubsetOutcome::Mismatch { key, left, right },
        Err(e) => return Err(e),
    };
    let expected_values = match config.model.kind() {
        crate::lattice::SurfaceKind::P2 => Some(expected_values_check(&table)?),
        _ => None,
    };
    let report = CheckReport {
        surface: config.model.kind().to_string(),
        degree_bound: config.degree_bound,
        solve,
        residuals,
        integrality_violations,
        cross_subset,
        expected_values,
    };
    Ok((table, report))
}

//! Staged exact elimination over the overdetermined relation system.
//!
//! Stages run in increasing `c1`-degree. At stage `D` every relation whose
//! left-hand side has degree `D` joins the active pool; known values are
//! substituted, the pool is reduced, and every unknown the reduction isolates
//! is pinned. Keys left free carry forward as stragglers and stay eligible at
//! later stages, which is how the `l = 0` invariants (never on a left-hand
//! side) get determined. Equations that still mention unknowns also carry
//! forward.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::complex_gw::ComplexProvider;
use crate::error::{Error, Result};
use crate::lattice::{CurveClass, DivisorTriple, SurfaceModel};
use crate::linalg::{self, Equation};
use crate::relations::{self, RealKey, RelationInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyStatus {
    Seeded,
    /// Pinned at its own stage.
    Solved,
    /// Pinned at a later stage than its own.
    Straggler,
    Unresolved,
}

impl KeyStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyStatus::Seeded => "seeded",
            KeyStatus::Solved => "solved",
            KeyStatus::Straggler => "straggler",
            KeyStatus::Unresolved => "unresolved",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "seeded" => KeyStatus::Seeded,
            "solved" => KeyStatus::Solved,
            "straggler" => KeyStatus::Straggler,
            "unresolved" => KeyStatus::Unresolved,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub value: Option<BigRational>,
    pub status: KeyStatus,
}

/// Real invariants keyed by `(B, l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantTable {
    basis_labels: Vec<String>,
    entries: BTreeMap<RealKey, TableEntry>,
}

/// Sort key used for every listing: `(c1·B, B, l)` in the standard lattice.
fn listing_order(key: &RealKey) -> (i64, &CurveClass, u32) {
    let c = key.class.coeffs();
    let c1 = 3 * c[0] + c[1..].iter().sum::<i64>();
    (c1, &key.class, key.l)
}

impl InvariantTable {
    pub fn new(basis_labels: Vec<String>) -> Self {
        InvariantTable {
            basis_labels,
            entries: BTreeMap::new(),
        }
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn rank(&self) -> usize {
        self.basis_labels.len()
    }

    pub fn insert(&mut self, key: RealKey, value: Option<BigRational>, status: KeyStatus) {
        self.entries.insert(key, TableEntry { value, status });
    }

    pub fn get(&self, key: &RealKey) -> Option<&TableEntry> {
        self.entries.get(key)
    }

    pub fn value(&self, key: &RealKey) -> Option<&BigRational> {
        self.entries.get(key).and_then(|e| e.value.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in `(c1·B, B, l)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&RealKey, &TableEntry)> {
        let mut items: Vec<_> = self.entries.iter().collect();
        items.sort_by(|a, b| listing_order(a.0).cmp(&listing_order(b.0)));
        items.into_iter()
    }

    /// Copy with every value replaced by its absolute value.
    pub fn abs(&self) -> InvariantTable {
        let mut out = self.clone();
        for e in out.entries.values_mut() {
            e.value = e.value.as_ref().map(Signed::abs);
        }
        out
    }
}

/// Fixed values fed to the solver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Seeds(pub BTreeMap<RealKey, BigRational>);

impl Seeds {
    /// `N_{L,0} = 1`, plus `N_{E_i,0} = 1` for blowups.
    pub fn default_for(model: &SurfaceModel) -> Self {
        let n = model.rank();
        let one = BigRational::from_integer(1.into());
        let mut map = BTreeMap::new();
        map.insert(RealKey::new(CurveClass::line_multiple(n, 1), 0), one.clone());
        for i in 1..n {
            map.insert(RealKey::new(CurveClass::exceptional(n, i), 0), one.clone());
        }
        Seeds(map)
    }

    /// Parses `coeffs… l : value` lines; `#` starts a comment.
    pub fn parse(text: &str, source_name: &str, model: &SurfaceModel) -> Result<Self> {
        let mut map: BTreeMap<RealKey, BigRational> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(source_name, line_no, "expected `coeffs… l : value`"))?;
            let nums = lhs
                .split_whitespace()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|_| Error::parse(source_name, line_no, format!("bad integer `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != model.rank() + 1 {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    format!(
                        "expected {} coefficients and l, found {} fields",
                        model.rank(),
                        nums.len()
                    ),
                ));
            }
            let l = u32::try_from(nums[model.rank()])
                .map_err(|_| Error::parse(source_name, line_no, "l must be non-negative"))?;
            let rhs = rhs.trim();
            let value: BigRational = rhs
                .parse()
                .map_err(|_| Error::parse(source_name, line_no, format!("bad value `{rhs}`")))?;
            let key = RealKey::new(CurveClass::new(nums[..model.rank()].to_vec()), l);
            if let Some(prev) = map.get(&key) {
                if *prev != value {
                    return Err(Error::ConflictingEntry {
                        key: key.to_string(),
                        first: prev.to_string(),
                        second: value.to_string(),
                    });
                }
            }
            map.insert(key, value);
        }
        Ok(Seeds(map))
    }

    pub fn load(path: &Path, model: &SurfaceModel) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), model)
    }
}

/// What to do when a product of two unknowns survives substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearPolicy {
    #[default]
    Abort,
    /// Keep the equation in the pool and retry at later stages.
    Defer,
}

/// Extra degrees solved past the bound by default: the `c1`-degree of a
/// line. An `l = 0` invariant of degree `D` first appears inside relations of
/// degree `D + 3`.
pub const DEFAULT_LOOKAHEAD: i64 = 3;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub nonlinear: NonlinearPolicy,
    /// Stages run up to `degree_bound + lookahead`; the output keeps only
    /// classes with `c1·B <= degree_bound`.
    pub lookahead: i64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            nonlinear: NonlinearPolicy::Abort,
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }
}

impl SolveOptions {
    pub fn strict() -> Self {
        SolveOptions {
            lookahead: 0,
            ..Self::default()
        }
    }

    pub fn horizon(&self, degree_bound: i64) -> i64 {
        degree_bound + self.lookahead.max(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub degree: i64,
    /// Equations whose left-hand side has this degree.
    pub new_equations: usize,
    /// Equations in the pool when the stage opened, including carried ones.
    pub equations_used: usize,
    /// Unknowns of the first reduction pass; `rank` belongs to the same pass.
    pub unknowns: Vec<RealKey>,
    pub rank: usize,
    pub pinned: Vec<RealKey>,
    pub stragglers_out: Vec<RealKey>,
    pub deferred_nonlinear: usize,
    /// Equations of this stage whose residual was checked exactly zero right
    /// after the stage closed.
    pub residual_checks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub degree_bound: i64,
    /// Last stage processed.
    pub horizon: i64,
    pub instances: usize,
    pub stages: Vec<StageReport>,
    /// Live keys referenced by some equation but never pinned.
    pub unresolved: Vec<RealKey>,
    /// Live keys within the bound that no equation mentions.
    pub unconstrained: Vec<RealKey>,
    /// Equations still containing unknowns after the last stage.
    pub open_equations: usize,
    pub residuals_checked: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

enum Linearized {
    Affine {
        coeffs: BTreeMap<RealKey, BigRational>,
        rhs: BigRational,
    },
    Nonlinear(Vec<RealKey>),
}

/// Substitutes known values; returns the affine remainder `Σ a_k x_k = rhs`.
fn linearize(inst: &RelationInstance, known: &BTreeMap<RealKey, BigRational>) -> Linearized {
    let mut coeffs: BTreeMap<RealKey, BigRational> = BTreeMap::new();
    // Expression: lhs_coeff·N_lhs - Σ monomials = 0, accumulated as linear + constant.
    let mut constant = BigRational::zero();
    if inst.lhs_live && inst.lhs_coeff != 0 {
        let c = BigRational::from_integer(inst.lhs_coeff.into());
        match known.get(&inst.lhs_key) {
            Some(v) => constant += c * v,
            None => *coeffs.entry(inst.lhs_key.clone()).or_insert_with(BigRational::zero) += c,
        }
    }
    for m in &inst.monomials {
        let mut coeff = -m.coeff.clone();
        let mut unknown = Vec::new();
        for f in &m.factors {
            match known.get(f) {
                Some(v) => coeff *= v,
                None => unknown.push(f.clone()),
            }
        }
        if coeff.is_zero() {
            continue;
        }
        match unknown.len() {
            0 => constant += coeff,
            1 => *coeffs.entry(unknown.pop().unwrap()).or_insert_with(BigRational::zero) += coeff,
            _ => return Linearized::Nonlinear(unknown),
        }
    }
    coeffs.retain(|_, c| !c.is_zero());
    Linearized::Affine { coeffs, rhs: -constant }
}

/// `lhs_coeff · value(lhs) - Σ monomials`, with dead keys reading zero.
pub fn residual(inst: &RelationInstance, table: &InvariantTable) -> Result<BigRational> {
    let lookup = |k: &RealKey| table.value(k).cloned().ok_or_else(|| Error::UnknownKey(k.clone()));
    let mut total = BigRational::zero();
    if inst.lhs_live && inst.lhs_coeff != 0 {
        total += BigRational::from_integer(inst.lhs_coeff.into()) * lookup(&inst.lhs_key)?;
    }
    for m in &inst.monomials {
        let mut term = m.coeff.clone();
        for f in &m.factors {
            term *= lookup(f)?;
        }
        total -= term;
    }
    Ok(total)
}

/// Keys whose value has a denominator other than 1.
pub fn check_integrality(table: &InvariantTable) -> Vec<RealKey> {
    table
        .iter()
        .filter(|(_, e)| e.value.as_ref().is_some_and(|v| !linalg::is_integral(v)))
        .map(|(k, _)| k.clone())
        .collect()
}

/// Enumerates every relation instance up to the horizon and solves with the
/// default options.
pub fn solve(
    model: &SurfaceModel,
    provider: &ComplexProvider,
    degree_bound: i64,
    triples: &[DivisorTriple],
    seeds: &Seeds,
) -> Result<(InvariantTable, SolveReport)> {
    solve_with(model, provider, degree_bound, triples, seeds, SolveOptions::default())
}

pub fn solve_with(
    model: &SurfaceModel,
    provider: &ComplexProvider,
    degree_bound: i64,
    triples: &[DivisorTriple],
    seeds: &Seeds,
    options: SolveOptions,
) -> Result<(InvariantTable, SolveReport)> {
    let instances = relations::enumerate_instances(model, options.horizon(degree_bound), triples, provider)?;
    solve_instances(model, &instances, degree_bound, seeds, options)
}

/// Solves a prebuilt instance list. Instances past the horizon are ignored.
pub fn solve_instances(
    model: &SurfaceModel,
    instances: &[RelationInstance],
    degree_bound: i64,
    seeds: &Seeds,
    options: SolveOptions,
) -> Result<(InvariantTable, SolveReport)> {
    let started = Instant::now();
    let horizon = options.horizon(degree_bound);
    let mut selected = Vec::with_capacity(instances.len());
    for inst in instances {
        relations::check_well_founded(model, inst)?;
        if model.c1_degree(&inst.lhs_key.class)? <= horizon {
            selected.push(inst.clone());
        }
    }
    let instances = &selected[..];

    let mut known: BTreeMap<RealKey, BigRational> = BTreeMap::new();
    let mut status: BTreeMap<RealKey, KeyStatus> = BTreeMap::new();
    for (k, v) in &seeds.0 {
        model.check_class(&k.class)?;
        known.insert(k.clone(), v.clone());
        status.insert(k.clone(), KeyStatus::Seeded);
    }

    let mut referenced: BTreeSet<RealKey> = BTreeSet::new();
    for inst in instances {
        if inst.lhs_live && inst.lhs_coeff != 0 {
            referenced.insert(inst.lhs_key.clone());
        }
        for m in &inst.monomials {
            referenced.extend(m.factors.iter().cloned());
        }
    }

    let mut by_degree: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        by_degree
            .entry(model.c1_degree(&inst.lhs_key.class)?)
            .or_default()
            .push(i);
    }

    let classes = model.admissible_classes(horizon);
    let mut stragglers: BTreeSet<RealKey> = BTreeSet::new();
    let mut pool: Vec<usize> = Vec::new();
    let mut stages = Vec::new();

    for degree in 1..=horizon {
        let mut stage_keys: Vec<RealKey> = Vec::new();
        for class in classes.iter().filter(|c| model.c1_degree(c).is_ok_and(|d| d == degree)) {
            let ell = model.ell_omega(class)?;
            for l in 0..=u32::try_from(ell.max(0) / 2).unwrap_or(0) {
                let key = RealKey::new(class.clone(), l);
                if key.is_live(model) && !known.contains_key(&key) {
                    stage_keys.push(key);
                }
            }
        }
        let new_ids = by_degree.get(&degree).cloned().unwrap_or_default();
        pool.extend(new_ids.iter().copied());
        let equations_used = pool.len();

        let mut pinned: Vec<RealKey> = Vec::new();
        let mut first_pass: Option<(Vec<RealKey>, usize)> = None;
        let mut nonlinear: Vec<(usize, Vec<RealKey>)>;
        loop {
            let mut rows: Vec<(usize, BTreeMap<RealKey, BigRational>, BigRational)> = Vec::new();
            nonlinear = Vec::new();
            for &id in &pool {
                match linearize(&instances[id], &known) {
                    Linearized::Affine { coeffs, rhs } => rows.push((id, coeffs, rhs)),
                    Linearized::Nonlinear(keys) => nonlinear.push((id, keys)),
                }
            }
            let column_set: BTreeSet<RealKey> = rows.iter().flat_map(|(_, c, _)| c.keys().cloned()).collect();
            let mut columns: Vec<RealKey> = column_set.into_iter().collect();
            columns.sort_by(|a, b| listing_order(a).cmp(&listing_order(b)));
            let index: BTreeMap<&RealKey, usize> = columns.iter().enumerate().map(|(i, k)| (k, i)).collect();
            let equations: Vec<Equation> = rows
                .iter()
                .map(|(_, coeffs, rhs)| {
                    let mut dense = vec![BigRational::zero(); columns.len()];
                    for (k, c) in coeffs {
                        dense[index[k]] = c.clone();
                    }
                    Equation {
                        coeffs: dense,
                        rhs: rhs.clone(),
                    }
                })
                .collect();
            let reduction = linalg::reduce(&equations, columns.len());
            if first_pass.is_none() {
                first_pass = Some((columns.clone(), reduction.rank));
            }
            if let Some(bad) = reduction.contradiction {
                let inst = &instances[rows[bad].0];
                return Err(Error::InconsistentSystem {
                    degree,
                    detail: format!(
                        "{} at {} (triple {}) cannot be satisfied",
                        inst.kind, inst.lhs_key, inst.triple_index
                    ),
                });
            }
            if reduction.pinned.is_empty() {
                break;
            }
            for (col, value) in reduction.pinned {
                let key = columns[col].clone();
                let own_degree = model.c1_degree(&key.class)?;
                let st = if own_degree == degree {
                    KeyStatus::Solved
                } else {
                    KeyStatus::Straggler
                };
                status.insert(key.clone(), st);
                known.insert(key.clone(), value);
                pinned.push(key);
            }
            // Drop equations with nothing left to determine; they are
            // re-verified in the residual sweep.
            pool.retain(|&id| match linearize(&instances[id], &known) {
                Linearized::Affine { coeffs, .. } => !coeffs.is_empty(),
                Linearized::Nonlinear(_) => true,
            });
        }
        pool.retain(|&id| match linearize(&instances[id], &known) {
            Linearized::Affine { coeffs, rhs } => !coeffs.is_empty() || !rhs.is_zero(),
            Linearized::Nonlinear(_) => true,
        });

        if !nonlinear.is_empty() && options.nonlinear == NonlinearPolicy::Abort {
            let keys: BTreeSet<RealKey> = nonlinear.iter().flat_map(|(_, k)| k.iter().cloned()).collect();
            return Err(Error::NonlinearFrontier {
                degree,
                keys: keys.into_iter().collect(),
            });
        }

        stragglers.extend(stage_keys.iter().cloned());
        stragglers.retain(|k| !known.contains_key(k));

        let mut residual_checks = 0;
        for &id in &new_ids {
            if let Some(r) = evaluate_known(&instances[id], &known) {
                if !r.is_zero() {
                    let inst = &instances[id];
                    return Err(Error::InconsistentSystem {
                        degree,
                        detail: format!("{} at {} leaves residual {r}", inst.kind, inst.lhs_key),
                    });
                }
                residual_checks += 1;
            }
        }

        let (unknowns, rank) = first_pass.unwrap_or_default();
        stages.push(StageReport {
            degree,
            new_equations: new_ids.len(),
            equations_used,
            unknowns,
            rank,
            pinned,
            stragglers_out: stragglers.iter().cloned().collect(),
            deferred_nonlinear: nonlinear.len(),
            residual_checks,
        });
    }

    let within = |k: &RealKey| model.c1_degree(&k.class).is_ok_and(|d| d <= degree_bound);
    let mut table = InvariantTable::new(model.basis_labels().to_vec());
    for (k, v) in &known {
        if !linalg::is_integral(v) {
            return Err(Error::NonIntegral(k.clone(), v.to_string()));
        }
        if within(k) || status[k] == KeyStatus::Seeded {
            table.insert(k.clone(), Some(v.clone()), status[k]);
        }
    }

    let mut residuals_checked = 0;
    for inst in instances {
        if let Some(r) = evaluate_known(inst, &known) {
            if !r.is_zero() {
                return Err(Error::InconsistentSystem {
                    degree: model.c1_degree(&inst.lhs_key.class)?,
                    detail: format!("{} at {} leaves residual {r}", inst.kind, inst.lhs_key),
                });
            }
            residuals_checked += 1;
        }
    }

    let mut unresolved = Vec::new();
    let mut unconstrained = Vec::new();
    for k in stragglers.iter().filter(|k| within(k)) {
        if referenced.contains(k) {
            table.insert(k.clone(), None, KeyStatus::Unresolved);
            unresolved.push(k.clone());
        } else {
            unconstrained.push(k.clone());
        }
    }
    unresolved.sort_by(|a, b| listing_order(a).cmp(&listing_order(b)));
    unconstrained.sort_by(|a, b| listing_order(a).cmp(&listing_order(b)));

    let report = SolveReport {
        degree_bound,
        horizon,
        instances: instances.len(),
        stages,
        unresolved,
        unconstrained,
        open_equations: pool.len(),
        residuals_checked,
        elapsed: started.elapsed(),
    };
    Ok((table, report))
}

/// Residual when every live key in the instance is known.
fn evaluate_known(inst: &RelationInstance, known: &BTreeMap<RealKey, BigRational>) -> Option<BigRational> {
    match linearize(inst, known) {
        Linearized::Affine { coeffs, rhs } if coeffs.is_empty() => Some(-rhs),
        _ => None,
    }
}

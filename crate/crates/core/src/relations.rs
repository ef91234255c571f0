//! The three real WDVV-type relations, instantiated as explicit equations.
//!
//! Each instance reads `lhs_coeff · N_{B,l} = Σ monomials`, where a monomial
//! is an exact rational coefficient times zero, one or two real invariants.
//! Complex invariants, binomials, pairings and powers of two are folded into
//! the coefficients, so the solver only ever sees polynomials of degree at
//! most two in the real unknowns.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::complex_gw::ComplexProvider;
use crate::error::{Error, Result};
use crate::lattice::{CurveClass, DivisorClass, DivisorTriple, SurfaceModel};

/// `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationKind {
    R1,
    R2,
    R3,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [RelationKind::R1, RelationKind::R2, RelationKind::R3];
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationKind::R1 => "R1",
            RelationKind::R2 => "R2",
            RelationKind::R3 => "R3",
        };
        f.write_str(s)
    }
}

/// Index `(B, l)` of a real invariant: class `B` through `ℓ(B) - 2l` real
/// points and `l` conjugate pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RealKey {
    pub class: CurveClass,
    pub l: u32,
}

impl RealKey {
    pub fn new(class: CurveClass, l: u32) -> Self {
        RealKey { class, l }
    }

    /// A key is live when its class is admissible and `k >= 0`; dead keys
    /// denote zero.
    pub fn is_live(&self, model: &SurfaceModel) -> bool {
        model.is_admissible(&self.class) && model.real_dim_k(&self.class, self.l).is_ok_and(|k| k >= 0)
    }
}

impl fmt::Display for RealKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N[{}; l={}]", self.class, self.l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: BigRational,
    /// Sorted; at most two entries.
    pub factors: Vec<RealKey>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationInstance {
    pub kind: RelationKind,
    pub lhs_key: RealKey,
    pub lhs_live: bool,
    pub lhs_coeff: i64,
    pub triple_index: usize,
    pub triple: DivisorTriple,
    pub monomials: Vec<Monomial>,
}

impl RelationInstance {
    /// The degree-zero part of the right-hand side.
    pub fn constant(&self) -> BigRational {
        self.monomials
            .iter()
            .filter(|m| m.factors.is_empty())
            .map(|m| m.coeff.clone())
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let monomials: Vec<_> = self
            .monomials
            .iter()
            .map(|m| {
                let factors: Vec<_> = m.factors.iter().map(|k| json!([k.class, k.l])).collect();
                json!({ "coeff": m.coeff.to_string(), "factors": factors })
            })
            .collect();
        json!({
            "kind": self.kind,
            "B": self.lhs_key.class,
            "l": self.lhs_key.l,
            "triple": self.triple_index,
            "lhs_coeff": self.lhs_coeff,
            "monomials": monomials,
        })
    }
}

/// Applicability of a relation to `(B, l)` with the given triple.
pub fn check_gate(
    kind: RelationKind,
    model: &SurfaceModel,
    class: &CurveClass,
    l: u32,
    triple: &DivisorTriple,
) -> Result<()> {
    let key = || RealKey::new(class.clone(), l);
    let violation = |reason: &str| Error::GateViolation {
        kind,
        key: key(),
        reason: reason.to_string(),
    };
    model.check_class(class)?;
    if !model.is_admissible(class) {
        return Err(violation("class is outside the admissible cone"));
    }
    match kind {
        RelationKind::R1 => {
            if l < 1 {
                return Err(violation("needs l >= 1"));
            }
            if model.real_dim_k(class, l)? < 1 {
                return Err(violation("needs at least one real point (k >= 1)"));
            }
        }
        RelationKind::R2 => {
            if l < 2 {
                return Err(violation("needs l >= 2"));
            }
        }
        RelationKind::R3 => {
            if l < 1 {
                return Err(violation("needs l >= 1"));
            }
            if triple.h3.is_none() {
                return Err(violation("needs a triple with H3"));
            }
        }
    }
    Ok(())
}

struct Accumulator<'a> {
    model: &'a SurfaceModel,
    terms: BTreeMap<Vec<RealKey>, BigRational>,
}

impl Accumulator<'_> {
    fn add(&mut self, coeff: BigRational, mut factors: Vec<RealKey>) {
        if coeff.is_zero() || factors.iter().any(|k| !k.is_live(self.model)) {
            return;
        }
        factors.sort();
        *self.terms.entry(factors).or_insert_with(BigRational::zero) += coeff;
    }

    fn finish(self) -> Vec<Monomial> {
        let mut monomials: Vec<Monomial> = self
            .terms
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(factors, coeff)| Monomial { coeff, factors })
            .collect();
        monomials.sort_by(|a, b| (a.factors.len(), &a.factors).cmp(&(b.factors.len(), &b.factors)));
        monomials
    }
}

fn int(x: i64) -> BigInt {
    BigInt::from(x)
}

fn key(class: &CurveClass, l: i64) -> Option<RealKey> {
    u32::try_from(l).ok().map(|l| RealKey::new(class.clone(), l))
}

/// Builds `kind` at `(B, l)` with the given divisor triple.
pub fn instantiate(
    kind: RelationKind,
    model: &SurfaceModel,
    class: &CurveClass,
    l: u32,
    triple: &DivisorTriple,
    provider: &ComplexProvider,
) -> Result<RelationInstance> {
    instantiate_indexed(kind, model, class, l, triple, 0, provider)
}

fn instantiate_indexed(
    kind: RelationKind,
    model: &SurfaceModel,
    class: &CurveClass,
    l: u32,
    triple: &DivisorTriple,
    triple_index: usize,
    provider: &ComplexProvider,
) -> Result<RelationInstance> {
    check_gate(kind, model, class, l, triple)?;
    let b = class;
    let li = i64::from(l);
    let ell_b = model.ell_omega(b)?;
    let pair = |h: &DivisorClass, c: &CurveClass| model.pair(h, c);
    let (h1, h2) = (&triple.h1, &triple.h2);
    let zero_h = DivisorClass::new(vec![0; model.rank()]);
    let h3 = triple.h3.as_ref().unwrap_or(&zero_h);

    let mut acc = Accumulator {
        model,
        terms: BTreeMap::new(),
    };

    // Complex doubles: N_{B0, l-1-ℓ(B')} N_{B'} over B0 + 𝔡(B') = B.
    let total_c1 = model.c1_degree(b)?;
    for bp in model.admissible_classes((total_c1 - 1) / 2) {
        let b0 = b - &model.doubling(&bp)?;
        if b0.is_zero() || !model.is_admissible(&b0) {
            continue;
        }
        let ell_p = model.ell_omega(&bp)?;
        let Some(factor) = key(&b0, li - 1 - ell_p) else {
            continue;
        };
        let dot = int(model.intersect(&b0, &bp)?);
        let h1p = int(pair(h1, &bp)?);
        let weight: BigInt = match kind {
            RelationKind::R1 => -(dot * h1p * int(pair(h2, &bp)?) * binom(li - 1, ell_p)),
            RelationKind::R2 => {
                let bracket =
                    int(pair(h2, &b0)?) * binom(li - 2, ell_p - 1) - int(2 * pair(h2, &bp)?) * binom(li - 2, ell_p);
                dot * h1p * bracket
            }
            RelationKind::R3 => {
                let bracket = int(pair(h2, &b0)? * pair(h3, &bp)? - pair(h3, &b0)? * pair(h2, &bp)?);
                dot * h1p * binom(li - 1, ell_p) * bracket
            }
        };
        if weight.is_zero() || !factor.is_live(model) {
            continue;
        }
        let exponent = if kind == RelationKind::R2 { ell_p - 1 } else { ell_p };
        let nx = provider.complex_invariant(model, &bp)?;
        if nx.is_zero() {
            continue;
        }
        acc.add(pow2(exponent) * BigRational::from_integer(weight * nx), vec![factor]);
    }

    // Splittings B1 + B2 = B.
    let shift = match kind {
        RelationKind::R1 => 1,
        RelationKind::R2 | RelationKind::R3 => 0,
    };
    let top = ell_b - 2 * li - shift;
    let pairs_l = match kind {
        RelationKind::R2 => li - 2,
        RelationKind::R1 | RelationKind::R3 => li - 1,
    };
    for (b1, b2) in model.decompositions(b) {
        let ell_1 = model.ell_omega(&b1)?;
        let (p11, p21, p31) = (pair(h1, &b1)?, pair(h2, &b1)?, pair(h3, &b1)?);
        let (p12, p22, p32) = (pair(h1, &b2)?, pair(h2, &b2)?, pair(h3, &b2)?);
        for l1 in 0..=pairs_l {
            let l2 = pairs_l - l1;
            let lo = ell_1 - 2 * l1;
            let (weight, second_l) = match kind {
                RelationKind::R1 => (
                    int(p11) * binom(pairs_l, l1) * (int(p22) * binom(top, lo - 1) - int(p21) * binom(top, lo)),
                    l2,
                ),
                RelationKind::R2 => (
                    int(p21) * binom(pairs_l, l1) * (int(p12) * binom(top, lo - 1) - int(p11) * binom(top, lo)),
                    l2 + 1,
                ),
                RelationKind::R3 => (
                    int(p11) * int(p31 * p22 - p21 * p32) * binom(pairs_l, l1) * binom(top, lo),
                    l2,
                ),
            };
            if weight.is_zero() {
                continue;
            }
            let (Some(k1), Some(k2)) = (key(&b1, l1), key(&b2, second_l)) else {
                continue;
            };
            acc.add(BigRational::from_integer(weight), vec![k1, k2]);
        }
    }

    // Doubled classes 𝔡(B') = B when 2l = ℓ(B) - 1.
    if kind == RelationKind::R1 && model.bracket_indicator(b, l)? == 1 {
        let weight = int(pair(h1, b)? * pair(h2, b)?);
        if !weight.is_zero() {
            if let Some(half) = model.halve(b)? {
                let nx = provider.complex_invariant(model, &half)?;
                acc.add(-pow2(li - 3) * BigRational::from_integer(weight * nx), Vec::new());
            }
        }
    }

    let lhs_key = RealKey::new(b.clone(), l);
    let lhs_coeff = match kind {
        RelationKind::R3 => pair(h3, b)?,
        _ => 1,
    };
    Ok(RelationInstance {
        kind,
        lhs_live: lhs_key.is_live(model),
        lhs_key,
        lhs_coeff,
        triple_index,
        triple: triple.clone(),
        monomials: acc.finish(),
    })
}

/// All applicable instances for admissible `B` with `1 <= c1·B <= degree_bound`
/// and live `(B, l)`, ordered by `(c1·B, kind, l, triple, B)`.
pub fn enumerate_instances(
    model: &SurfaceModel,
    degree_bound: i64,
    triples: &[DivisorTriple],
    provider: &ComplexProvider,
) -> Result<Vec<RelationInstance>> {
    let mut jobs = Vec::new();
    for class in model.admissible_classes(degree_bound) {
        let c1 = model.c1_degree(&class)?;
        let ell = model.ell_omega(&class)?;
        for kind in RelationKind::ALL {
            for l in 0..=u32::try_from(ell.max(0) / 2).unwrap_or(0) {
                for (ti, triple) in triples.iter().enumerate() {
                    if check_gate(kind, model, &class, l, triple).is_ok() {
                        jobs.push((c1, kind, l, ti, class.clone()));
                    }
                }
            }
        }
    }
    jobs.sort();

    let built: Vec<Result<RelationInstance>> = jobs
        .par_iter()
        .map(|(_, kind, l, ti, class)| instantiate_indexed(*kind, model, class, *l, &triples[*ti], *ti, provider))
        .collect();
    let instances = built.into_iter().collect::<Result<Vec<_>>>()?;

    for inst in &instances {
        check_well_founded(model, inst)?;
    }
    Ok(instances)
}

/// Every factor must have strictly smaller `c1`-degree than the left-hand side.
pub fn check_well_founded(model: &SurfaceModel, inst: &RelationInstance) -> Result<()> {
    let top = model.c1_degree(&inst.lhs_key.class)?;
    for m in &inst.monomials {
        for f in &m.factors {
            if model.c1_degree(&f.class)? >= top {
                return Err(Error::IllFounded {
                    key: inst.lhs_key.clone(),
                    factor: f.clone(),
                });
            }
        }
    }
    Ok(())
}

/// True when every coefficient's denominator is a power of two.
pub fn has_dyadic_coefficients(inst: &RelationInstance) -> bool {
    inst.monomials.iter().all(|m| {
        let d = m.coeff.denom().abs();
        (&d & (&d - BigInt::one())).is_zero()
    })
}

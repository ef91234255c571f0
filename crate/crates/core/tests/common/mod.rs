//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use realwdvv::complex_gw::ComplexProvider;
use realwdvv::lattice::DivisorClass;
use realwdvv::relations::{self, binom};
use realwdvv::solver::{self, SolveOptions};
use realwdvv::{CurveClass, DivisorTriple, RealKey, RelationInstance, RelationKind, Seeds, SurfaceModel};

/// Kontsevich's recursion in `i128`, indexed by degree.
pub fn kontsevich_i128(max: usize) -> Vec<i128> {
    fn c(n: i128, k: i128) -> i128 {
        if k < 0 || n < 0 || k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    let mut n = vec![0i128; max + 1];
    if max >= 1 {
        n[1] = 1;
    }
    for d in 2..=max {
        let d = d as i128;
        let mut total = 0;
        for a in 1..d {
            let b = d - a;
            total += n[a as usize]
                * n[b as usize]
                * (a * a * b * b * c(3 * d - 4, 3 * a - 2) - a * a * a * b * c(3 * d - 4, 3 * a - 1));
        }
        n[d as usize] = total;
    }
    n
}

fn form(x: &[i64], y: &[i64]) -> i64 {
    x[0] * y[0] - x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum::<i64>()
}

fn ell(b: &[i64]) -> i64 {
    3 * b[0] + b[1..].iter().sum::<i64>() - 1
}

fn pow2(e: i64) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    if e >= 0 {
        num_traits::pow(two, e as usize)
    } else {
        num_traits::pow(two, (-e) as usize).recip()
    }
}

/// Every integer vector with entries in `[-m, m]`.
pub fn integer_box(rank: usize, m: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..rank {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-m..=m).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

pub type MonomialMap = BTreeMap<Vec<RealKey>, BigRational>;

pub fn monomial_map(inst: &RelationInstance) -> MonomialMap {
    inst.monomials
        .iter()
        .map(|m| (m.factors.clone(), m.coeff.clone()))
        .collect()
}

/// Builds a relation by scanning a full integer box for `B'`, `B_1` instead of
/// the cone enumeration. Invariants outside the admissible cone, and keys with
/// negative `l` or `k`, are zero.
pub struct BoxOracle<'a> {
    pub model: &'a SurfaceModel,
    pub provider: &'a ComplexProvider,
    pub radius: i64,
}

impl BoxOracle<'_> {
    fn live(&self, b: &[i64], l: i64) -> Option<RealKey> {
        let class = CurveClass::new(b.to_vec());
        (l >= 0 && ell(b) - 2 * l >= 0 && self.model.is_admissible(&class)).then(|| RealKey::new(class, l as u32))
    }

    fn complex(&self, b: &[i64]) -> BigInt {
        self.provider
            .complex_invariant(self.model, &CurveClass::new(b.to_vec()))
            .unwrap()
    }

    pub fn build(&self, kind: RelationKind, b: &[i64], l: i64, t: &DivisorTriple) -> (i64, MonomialMap) {
        let n = b.len();
        let zero = vec![0; n];
        let h1 = t.h1.covector();
        let h2 = t.h2.covector();
        let h3 = t.h3.as_ref().map_or(&zero[..], DivisorClass::covector);
        let mut terms: MonomialMap = BTreeMap::new();
        let mut add = |coeff: BigRational, mut factors: Vec<RealKey>| {
            if coeff.is_zero() {
                return;
            }
            factors.sort();
            *terms.entry(factors).or_insert_with(BigRational::zero) += coeff;
        };
        let ell_b = ell(b);
        let q = |x: i64| BigRational::from_integer(BigInt::from(x));
        let bz = |x: BigInt| BigRational::from_integer(x);

        for bp in integer_box(n, self.radius) {
            if bp.iter().all(|&x| x == 0) {
                continue;
            }
            let b0: Vec<i64> = b.iter().zip(&bp).map(|(x, y)| x - 2 * y).collect();
            if b0.iter().all(|&x| x == 0) {
                continue;
            }
            let lp = ell(&bp);
            let Some(factor) = self.live(&b0, l - 1 - lp) else {
                continue;
            };
            let nx = self.complex(&bp);
            if nx.is_zero() {
                continue;
            }
            let dot = q(form(&b0, &bp));
            let coeff = match kind {
                RelationKind::R1 => -pow2(lp) * dot * q(form(h1, &bp) * form(h2, &bp)) * bz(binom(l - 1, lp)),
                RelationKind::R2 => {
                    pow2(lp - 1)
                        * dot
                        * q(form(h1, &bp))
                        * (q(form(h2, &b0)) * bz(binom(l - 2, lp - 1)) - q(2 * form(h2, &bp)) * bz(binom(l - 2, lp)))
                }
                RelationKind::R3 => {
                    pow2(lp)
                        * dot
                        * q(form(h1, &bp))
                        * bz(binom(l - 1, lp))
                        * q(form(h2, &b0) * form(h3, &bp) - form(h3, &b0) * form(h2, &bp))
                }
            };
            add(coeff * bz(nx), vec![factor]);
        }

        for b1 in integer_box(n, self.radius) {
            let b2: Vec<i64> = b.iter().zip(&b1).map(|(x, y)| x - y).collect();
            if b1.iter().all(|&x| x == 0) || b2.iter().all(|&x| x == 0) {
                continue;
            }
            let l1_top = if kind == RelationKind::R2 { l - 2 } else { l - 1 };
            for l1 in 0..=l1_top {
                let l2 = l1_top - l1;
                let lo = ell(&b1) - 2 * l1;
                let (coeff, second) = match kind {
                    RelationKind::R1 => {
                        let top = ell_b - 2 * l - 1;
                        (
                            q(form(h1, &b1))
                                * bz(binom(l - 1, l1))
                                * (q(form(h2, &b2)) * bz(binom(top, lo - 1)) - q(form(h2, &b1)) * bz(binom(top, lo))),
                            l2,
                        )
                    }
                    RelationKind::R2 => {
                        let top = ell_b - 2 * l;
                        (
                            q(form(h2, &b1))
                                * bz(binom(l - 2, l1))
                                * (q(form(h1, &b2)) * bz(binom(top, lo - 1)) - q(form(h1, &b1)) * bz(binom(top, lo))),
                            l2 + 1,
                        )
                    }
                    RelationKind::R3 => {
                        let top = ell_b - 2 * l;
                        (
                            q(form(h1, &b1))
                                * q(form(h3, &b1) * form(h2, &b2) - form(h2, &b1) * form(h3, &b2))
                                * bz(binom(l - 1, l1))
                                * bz(binom(top, lo)),
                            l2,
                        )
                    }
                };
                let (Some(k1), Some(k2)) = (self.live(&b1, l1), self.live(&b2, second)) else {
                    continue;
                };
                add(coeff, vec![k1, k2]);
            }
        }

        if kind == RelationKind::R1 && 2 * l == ell_b - 1 {
            let mut total = BigInt::zero();
            for bp in integer_box(n, self.radius) {
                if bp.iter().zip(b).all(|(x, y)| 2 * x == *y) {
                    total += self.complex(&bp);
                }
            }
            add(-pow2(l - 3) * q(form(h1, b) * form(h2, b)) * bz(total), Vec::new());
        }

        terms.retain(|_, c| !c.is_zero());
        let lhs_coeff = if kind == RelationKind::R3 { form(h3, b) } else { 1 };
        (lhs_coeff, terms)
    }

    /// Applicable `(kind, B, l, triple)` found by scanning the box.
    pub fn applicable(
        &self,
        bound: i64,
        triples: &[DivisorTriple],
    ) -> BTreeSet<(i64, RelationKind, u32, usize, CurveClass)> {
        let mut out = BTreeSet::new();
        for b in integer_box(self.model.rank(), self.radius) {
            let class = CurveClass::new(b.clone());
            let c1 = ell(&b) + 1;
            if c1 < 1 || c1 > bound || !self.model.is_admissible(&class) {
                continue;
            }
            for l in 0..=ell(&b).max(0) / 2 {
                let k = ell(&b) - 2 * l;
                for (ti, t) in triples.iter().enumerate() {
                    if l >= 1 && k >= 1 {
                        out.insert((c1, RelationKind::R1, l as u32, ti, class.clone()));
                    }
                    if l >= 2 {
                        out.insert((c1, RelationKind::R2, l as u32, ti, class.clone()));
                    }
                    if l >= 1 && t.h3.is_some() {
                        out.insert((c1, RelationKind::R3, l as u32, ti, class.clone()));
                    }
                }
            }
        }
        out
    }
}

/// Compares every enumerated instance with the box oracle. Returns the number
/// of instances checked.
pub fn box_oracle_check(
    model: &SurfaceModel,
    provider: &ComplexProvider,
    bound: i64,
    triples: &[DivisorTriple],
) -> Result<usize, String> {
    let oracle = BoxOracle {
        model,
        provider,
        radius: bound.max(2),
    };
    let instances = relations::enumerate_instances(model, bound, triples, provider).map_err(|e| e.to_string())?;
    let found: BTreeSet<_> = instances
        .iter()
        .map(|i| {
            let c1 = model.c1_degree(&i.lhs_key.class).unwrap();
            (c1, i.kind, i.lhs_key.l, i.triple_index, i.lhs_key.class.clone())
        })
        .collect();
    let expected = oracle.applicable(bound, triples);
    if found != expected {
        return Err(format!(
            "applicable set differs: {} enumerated vs {} by box scan",
            found.len(),
            expected.len()
        ));
    }
    for inst in &instances {
        let (lhs, terms) = oracle.build(
            inst.kind,
            inst.lhs_key.class.coeffs(),
            i64::from(inst.lhs_key.l),
            &inst.triple,
        );
        if lhs != inst.lhs_coeff || terms != monomial_map(inst) {
            return Err(format!(
                "{} at {} (triple {}) differs from box oracle",
                inst.kind, inst.lhs_key, inst.triple_index
            ));
        }
    }
    Ok(instances.len())
}

/// Table provider with arbitrary nonzero values on every admissible class of
/// `c1` at most `bound`. Structural checks do not depend on the values.
pub fn synthetic_provider(model: &SurfaceModel, bound: i64) -> ComplexProvider {
    let entries = model
        .admissible_classes(bound)
        .into_iter()
        .filter(|c| !realwdvv::complex_gw::blowup_seeds(model).contains_key(c))
        .map(|c| {
            let v = c
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, x)| (i as i64 + 2) * x.abs())
                .sum::<i64>()
                % 11
                + 1;
            (c, BigInt::from(v))
        })
        .collect();
    ComplexProvider::from_entries(model, entries).unwrap()
}

/// `(-H1, -H2, H3)` reproduces every instance; `H3 -> -H3` negates R3.
pub fn parity_check(
    model: &SurfaceModel,
    provider: &ComplexProvider,
    bound: i64,
    triples: &[DivisorTriple],
) -> Result<usize, String> {
    let err = |e: realwdvv::Error| e.to_string();
    let mut checked = 0;
    for inst in relations::enumerate_instances(model, bound, triples, provider).map_err(err)? {
        let t = &inst.triple;
        let flipped = DivisorTriple {
            h1: t.h1.negated(),
            h2: t.h2.negated(),
            h3: t.h3.clone(),
        };
        let (b, l) = (&inst.lhs_key.class, inst.lhs_key.l);
        let other = relations::instantiate(inst.kind, model, b, l, &flipped, provider).map_err(err)?;
        if other.monomials != inst.monomials || other.lhs_coeff != inst.lhs_coeff {
            return Err(format!("(-H1,-H2) changes {} at {}", inst.kind, inst.lhs_key));
        }
        if let Some(h3) = &t.h3 {
            let neg3 = DivisorTriple {
                h1: t.h1.clone(),
                h2: t.h2.clone(),
                h3: Some(h3.negated()),
            };
            let other = relations::instantiate(inst.kind, model, b, l, &neg3, provider).map_err(err)?;
            let (expect_lhs, expect) = if inst.kind == RelationKind::R3 {
                (
                    -inst.lhs_coeff,
                    monomial_map(&inst).into_iter().map(|(k, v)| (k, -v)).collect(),
                )
            } else {
                (inst.lhs_coeff, monomial_map(&inst))
            };
            if other.lhs_coeff != expect_lhs || monomial_map(&other) != expect {
                return Err(format!("H3 -> -H3 mishandled for {} at {}", inst.kind, inst.lhs_key));
            }
        }
        checked += 1;
    }
    Ok(checked)
}

/// Re-solves P² with `N_{L,0} = -1`: residuals vanish and absolute values match.
pub fn sign_flip_check(bound: i64) -> Result<usize, String> {
    let m = SurfaceModel::p2();
    let p = ComplexProvider::kontsevich();
    let err = |e: realwdvv::Error| e.to_string();
    let instances = relations::enumerate_instances(&m, bound + 3, &m.default_triples(), &p).map_err(err)?;
    let plus = Seeds::default_for(&m);
    let mut minus = plus.clone();
    *minus.0.values_mut().next().unwrap() = -BigRational::one();
    let (tp, _) = solver::solve_instances(&m, &instances, bound, &plus, SolveOptions::default()).map_err(err)?;
    let (tm, _) = solver::solve_instances(&m, &instances, bound, &minus, SolveOptions::default()).map_err(err)?;
    if tp.abs() != tm.abs() {
        return Err("absolute tables differ".into());
    }
    for (k, e) in tp.iter() {
        let (Some(a), Some(b)) = (&e.value, tm.value(k)) else {
            continue;
        };
        let odd = k.class.degree() % 2 != 0;
        let expected = if odd { -a.clone() } else { a.clone() };
        if *b != expected {
            return Err(format!("{k}: {a} vs {b} is not an odd-degree sign flip"));
        }
    }
    for inst in instances
        .iter()
        .filter(|i| m.c1_degree(&i.lhs_key.class).unwrap() <= bound)
    {
        let r = solver::residual(inst, &tm).map_err(err)?;
        if !r.is_zero() {
            return Err(format!("residual {r} at {} with negated seed", inst.lhs_key));
        }
    }
    Ok(tp.len())
}

/// `halve(doubling(B)) = B` and `doubling(halve(B)) = B` over a box.
pub fn doubling_round_trips(model: &SurfaceModel, radius: i64) -> Result<usize, String> {
    let mut checked = 0;
    for b in integer_box(model.rank(), radius) {
        let b = CurveClass::new(b);
        let d = model.doubling(&b).map_err(|e| e.to_string())?;
        if model.halve(&d).map_err(|e| e.to_string())? != Some(b.clone()) {
            return Err(format!("halve(doubling({b})) != {b}"));
        }
        match model.halve(&b).map_err(|e| e.to_string())? {
            Some(h) if model.doubling(&h).map_err(|e| e.to_string())? != b => {
                return Err(format!("doubling(halve({b})) != {b}"))
            }
            None if b.coeffs().iter().all(|x| x % 2 == 0) => return Err(format!("{b} should halve")),
            _ => {}
        }
        checked += 1;
    }
    Ok(checked)
}

/// Spot values, out-of-range zeros, and Pascal's rule against a factorial formula.
pub fn binomial_conventions() -> Result<(), String> {
    let z = BigInt::zero();
    let spot = [
        ((2, 1), BigInt::from(2)),
        ((0, -1), z.clone()),
        ((-1, 0), z.clone()),
        ((3, 4), z.clone()),
        ((-3, -1), z),
    ];
    for ((n, k), want) in spot {
        if binom(n, k) != want {
            return Err(format!("C({n},{k}) = {} not {want}", binom(n, k)));
        }
    }
    let fact = |n: i64| (1..=n).fold(BigInt::one(), |a, x| a * x);
    for n in 0..40i64 {
        for k in 0..=n {
            if binom(n, k) != fact(n) / (fact(k) * fact(n - k)) {
                return Err(format!("C({n},{k}) disagrees with factorials"));
            }
            if n > 0 && k > 0 && binom(n, k) != binom(n - 1, k - 1) + binom(n - 1, k) {
                return Err(format!("Pascal fails at ({n},{k})"));
            }
        }
        if !binom(n, -1).is_zero() || !binom(n, n + 1).is_zero() || binom(n, 0).is_negative() {
            return Err(format!("range convention fails at n = {n}"));
        }
    }
    Ok(())
}

//! Curve-class lattice of P² and its blowups at real points.
//!
//! Classes are integer vectors `(d, c_1, ..., c_r)` standing for
//! `d·L + Σ c_i·E_i`. The exceptional curve `E_i` therefore has `+1` in slot
//! `i`, and the usual multiplicity of a plane curve at the i-th point is
//! `m_i = -c_i`. Divisors use the same coordinates and are paired with classes
//! through the intersection matrix.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest number of blown-up points for which the admissible cone is finite
/// in every degree.
pub const MAX_BLOWUP_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurveClass(Vec<i64>);

impl CurveClass {
    pub fn new(coeffs: Vec<i64>) -> Self {
        CurveClass(coeffs)
    }

    pub fn zero(rank: usize) -> Self {
        CurveClass(vec![0; rank])
    }

    /// `d·L` in a lattice of the given rank.
    pub fn line_multiple(rank: usize, d: i64) -> Self {
        let mut v = vec![0; rank];
        v[0] = d;
        CurveClass(v)
    }

    /// The exceptional class `E_i` (1-based).
    pub fn exceptional(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        CurveClass(v)
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> i64 {
        self.0[0]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn scale(&self, k: i64) -> CurveClass {
        CurveClass(self.0.iter().map(|x| x * k).collect())
    }
}

impl Add for &CurveClass {
    type Output = CurveClass;
    fn add(self, rhs: &CurveClass) -> CurveClass {
        debug_assert_eq!(self.rank(), rhs.rank());
        CurveClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CurveClass {
    type Output = CurveClass;
    fn sub(self, rhs: &CurveClass) -> CurveClass {
        debug_assert_eq!(self.rank(), rhs.rank());
        CurveClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &CurveClass {
    type Output = CurveClass;
    fn neg(self) -> CurveClass {
        self.scale(-1)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, coeff: i64, label: &str, first: bool) -> fmt::Result {
    match (coeff, first) {
        (1, true) => write!(f, "{label}"),
        (-1, _) => write!(f, "-{label}"),
        (1, false) => write!(f, "+{label}"),
        (c, false) if c > 0 => write!(f, "+{c}{label}"),
        (c, _) => write!(f, "{c}{label}"),
    }
}

/// Displays in the canonical basis, e.g. `2L-E1`.
impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let label = if i == 0 { "L".to_string() } else { format!("E{i}") };
            write_term(f, c, &label, first)?;
            first = false;
        }
        Ok(())
    }
}

/// A cohomology class given by its coordinates in the `(L, E_i)` basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivisorClass(Vec<i64>);

impl DivisorClass {
    pub fn new(covector: Vec<i64>) -> Self {
        DivisorClass(covector)
    }

    /// Hyperplane class `h`.
    pub fn hyperplane(rank: usize) -> Self {
        let mut v = vec![0; rank];
        v[0] = 1;
        DivisorClass(v)
    }

    /// Exceptional divisor `e_i` (1-based).
    pub fn exceptional(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        DivisorClass(v)
    }

    pub fn covector(&self) -> &[i64] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        DivisorClass(self.0.iter().map(|x| -x).collect())
    }
}

/// `(H1, H2, H3?)` with `H1·H2 = 1` and, when present, `H1·H3 = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorTriple {
    pub h1: DivisorClass,
    pub h2: DivisorClass,
    pub h3: Option<DivisorClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    P2,
    Blowup(usize),
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceKind::P2 => write!(f, "p2"),
            SurfaceKind::Blowup(r) => write!(f, "blowup:{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceModel {
    kind: SurfaceKind,
    basis_labels: Vec<String>,
    intersection: Vec<Vec<i64>>,
    c1: Vec<i64>,
    phi_star: Vec<Vec<i64>>,
    divisor_triples: Vec<DivisorTriple>,
}

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn mat_vec(a: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

impl SurfaceModel {
    pub fn p2() -> Self {
        Self::standard(
            SurfaceKind::P2,
            0,
            identity(1)
                .into_iter()
                .map(|r| r.iter().map(|x| -x).collect())
                .collect(),
        )
        .expect("P² model is valid")
    }

    /// Blowup of P² at `r` real points, `1 <= r <= 8`.
    pub fn blowup(r: usize) -> Result<Self> {
        if r == 0 || r > MAX_BLOWUP_POINTS {
            return Err(Error::InvalidModel(format!(
                "blowups are supported for 1..={MAX_BLOWUP_POINTS} points, got {r}"
            )));
        }
        let phi = identity(r + 1)
            .into_iter()
            .map(|row| row.iter().map(|x| -x).collect())
            .collect();
        Self::standard(SurfaceKind::Blowup(r), r, phi)
    }

    /// Standard lattice of `Bl_r P²` (or P² when `r = 0`) with an arbitrary
    /// conjugation action on `H_2`.
    pub fn with_conjugation(kind: SurfaceKind, phi_star: Vec<Vec<i64>>) -> Result<Self> {
        let r = match kind {
            SurfaceKind::P2 => 0,
            SurfaceKind::Blowup(r) => r,
        };
        Self::standard(kind, r, phi_star)
    }

    fn standard(kind: SurfaceKind, r: usize, phi_star: Vec<Vec<i64>>) -> Result<Self> {
        let rank = r + 1;
        let mut intersection = identity(rank);
        for (i, row) in intersection.iter_mut().enumerate().skip(1) {
            row[i] = -1;
        }
        let mut c1 = vec![-1; rank];
        c1[0] = 3;
        let basis_labels = std::iter::once("L".to_string())
            .chain((1..rank).map(|i| format!("E{i}")))
            .collect();
        let model = SurfaceModel {
            kind,
            basis_labels,
            intersection,
            c1,
            phi_star,
            divisor_triples: Vec::new(),
        };
        model.check_structure()?;
        Ok(model)
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.rank();
        let square = |m: &[Vec<i64>]| m.len() == n && m.iter().all(|row| row.len() == n);
        if !square(&self.intersection) || !square(&self.phi_star) || self.c1.len() != n {
            return Err(Error::InvalidModel("matrix dimensions do not match the rank".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if self.intersection[i][j] != self.intersection[j][i] {
                    return Err(Error::InvalidModel("intersection matrix is not symmetric".into()));
                }
            }
        }
        let det = linalg::determinant(&self.intersection);
        if !(det.is_one() || (-det).is_one()) {
            return Err(Error::InvalidModel("intersection matrix is not unimodular".into()));
        }
        if mat_mul(&self.phi_star, &self.phi_star) != identity(n) {
            return Err(Error::InvalidModel("conjugation action is not an involution".into()));
        }
        let negated: Vec<i64> = self.c1.iter().map(|x| -x).collect();
        if mat_vec(&self.phi_star, &self.c1) != negated {
            return Err(Error::InvalidModel("first Chern class is not anti-invariant".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.basis_labels.len()
    }

    pub fn blown_up_points(&self) -> usize {
        self.rank() - 1
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn intersection_matrix(&self) -> &[Vec<i64>] {
        &self.intersection
    }

    pub fn c1(&self) -> &[i64] {
        &self.c1
    }

    pub fn phi_star(&self) -> &[Vec<i64>] {
        &self.phi_star
    }

    pub fn divisor_triples(&self) -> &[DivisorTriple] {
        &self.divisor_triples
    }

    /// Validates and attaches a divisor triple.
    pub fn push_triple(&mut self, h1: DivisorClass, h2: DivisorClass, h3: Option<DivisorClass>) -> Result<()> {
        let triple = self.validate_triple(h1, h2, h3)?;
        self.divisor_triples.push(triple);
        Ok(())
    }

    /// `(h, h)` for P²; `(h, h)` and `(h, h, e1)` for blowups.
    pub fn default_triples(&self) -> Vec<DivisorTriple> {
        let n = self.rank();
        let mut triples = vec![DivisorTriple {
            h1: DivisorClass::hyperplane(n),
            h2: DivisorClass::hyperplane(n),
            h3: None,
        }];
        if n > 1 {
            triples.push(DivisorTriple {
                h1: DivisorClass::hyperplane(n),
                h2: DivisorClass::hyperplane(n),
                h3: Some(DivisorClass::exceptional(n, 1)),
            });
        }
        triples
    }

    pub fn check_class(&self, b: &CurveClass) -> Result<()> {
        if b.rank() != self.rank() {
            return Err(Error::InvalidClass {
                expected: self.rank(),
                got: b.rank(),
            });
        }
        Ok(())
    }

    fn form(&self, u: &[i64], v: &[i64]) -> i64 {
        u.iter()
            .zip(&self.intersection)
            .map(|(ui, row)| ui * row.iter().zip(v).map(|(q, vj)| q * vj).sum::<i64>())
            .sum()
    }

    /// Intersection number `B·B'`.
    pub fn intersect(&self, b: &CurveClass, b2: &CurveClass) -> Result<i64> {
        self.check_class(b)?;
        self.check_class(b2)?;
        Ok(self.form(b.coeffs(), b2.coeffs()))
    }

    /// `⟨H, B⟩`.
    pub fn pair(&self, h: &DivisorClass, b: &CurveClass) -> Result<i64> {
        self.check_class(b)?;
        if h.covector().len() != self.rank() {
            return Err(Error::InvalidClass {
                expected: self.rank(),
                got: h.covector().len(),
            });
        }
        Ok(self.form(h.covector(), b.coeffs()))
    }

    /// `c1·B`, the degree used to order solver stages.
    pub fn c1_degree(&self, b: &CurveClass) -> Result<i64> {
        self.check_class(b)?;
        Ok(self.form(&self.c1, b.coeffs()))
    }

    /// Number of point conditions a rational curve of class `B` can satisfy:
    /// `c1·B - 1`.
    pub fn ell_omega(&self, b: &CurveClass) -> Result<i64> {
        Ok(self.c1_degree(b)? - 1)
    }

    /// Number of real point constraints `ℓ(B) - 2l`; negative means the
    /// invariant vanishes.
    pub fn real_dim_k(&self, b: &CurveClass, l: u32) -> Result<i64> {
        Ok(self.ell_omega(b)? - 2 * i64::from(l))
    }

    /// 1 when `2l = ℓ(B) - 1`, else 0.
    pub fn bracket_indicator(&self, b: &CurveClass, l: u32) -> Result<i64> {
        Ok(i64::from(2 * i64::from(l) == self.ell_omega(b)? - 1))
    }

    /// Arithmetic genus `1 + (B² - c1·B)/2` of a curve in class `B`.
    pub fn arithmetic_genus(&self, b: &CurveClass) -> Result<i64> {
        let self_int = self.intersect(b, b)?;
        Ok(1 + (self_int - self.c1_degree(b)?).div_euclid(2))
    }

    /// `B - φ*(B)`.
    pub fn doubling(&self, b: &CurveClass) -> Result<CurveClass> {
        self.check_class(b)?;
        let image = mat_vec(&self.phi_star, b.coeffs());
        Ok(CurveClass(b.coeffs().iter().zip(image).map(|(x, y)| x - y).collect()))
    }

    /// The unique `B'` with `B' - φ*(B') = B`, if it exists.
    pub fn halve(&self, b: &CurveClass) -> Result<Option<CurveClass>> {
        self.check_class(b)?;
        let n = self.rank();
        let system: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..n).map(|j| i64::from(i == j) - self.phi_star[i][j]).collect())
            .collect();
        if linalg::rank(&system) < n {
            return Err(Error::NonInjectiveConjugation);
        }
        let Some(solution) = linalg::solve_unique(&system, b.coeffs()) else {
            return Ok(None);
        };
        if !solution.iter().all(linalg::is_integral) {
            return Ok(None);
        }
        let coeffs = solution
            .iter()
            .map(|q| i64::try_from(q.to_integer()).expect("halved coefficient fits in i64"))
            .collect();
        Ok(Some(CurveClass(coeffs)))
    }

    /// Membership in the finite support used to truncate the lattice sums.
    ///
    /// The cone is `{E_i}` together with `d·L - Σ m_i·E_i` for `d >= 1`,
    /// `0 <= m_i <= d`, intersected with `c1·B >= 1` and non-negative
    /// arithmetic genus. Classes outside it carry no irreducible rational
    /// curve, so their invariants are zero.
    pub fn is_admissible(&self, b: &CurveClass) -> bool {
        if b.rank() != self.rank() {
            return false;
        }
        let d = b.degree();
        let exc = &b.coeffs()[1..];
        if d == 0 {
            return exc.iter().filter(|&&c| c == 1).count() == 1 && exc.iter().all(|&c| c == 0 || c == 1);
        }
        d >= 1
            && exc.iter().all(|&c| -d <= c && c <= 0)
            && self.form(&self.c1, b.coeffs()) >= 1
            && self.arithmetic_genus(b).is_ok_and(|g| g >= 0)
    }

    /// Beyond this degree no admissible class has `c1·B <= max_c1`.
    fn degree_horizon(&self, max_c1: i64) -> i64 {
        let r = self.blown_up_points() as i128;
        let big_d = i128::from(max_c1);
        let g = |d: i128| (9 - r) * d * d - 6 * big_d * d + big_d * big_d + r * big_d - 2 * r;
        let mut d: i128 = 1;
        loop {
            let past_shift = 3 * d >= big_d + r;
            let increasing = 2 * (9 - r) * d > 6 * big_d;
            if past_shift && increasing && g(d) > 0 {
                return d as i64;
            }
            d += 1;
        }
    }

    /// All admissible classes with `1 <= c1·B <= max_c1`, ordered by
    /// `(c1·B, coefficients)`.
    pub fn admissible_classes(&self, max_c1: i64) -> Vec<CurveClass> {
        let n = self.rank();
        let mut out = Vec::new();
        if max_c1 < 1 {
            return out;
        }
        out.extend((1..n).map(|i| CurveClass::exceptional(n, i)));
        let horizon = self.degree_horizon(max_c1);
        let mut buf = vec![0i64; n];
        for d in 1..horizon {
            buf[0] = d;
            // c1·B = 3d - Σ m_i must lie in [1, max_c1].
            let lo = 3 * d - max_c1;
            let hi = 3 * d - 1;
            self.fill_multiplicities(&mut buf, 1, 0, lo, hi, &mut out);
        }
        out.retain(|b| self.is_admissible(b));
        out.sort_by_cached_key(|b| (self.form(&self.c1, b.coeffs()), b.clone()));
        out
    }

    fn fill_multiplicities(
        &self,
        buf: &mut Vec<i64>,
        slot: usize,
        sum: i64,
        lo: i64,
        hi: i64,
        out: &mut Vec<CurveClass>,
    ) {
        let d = buf[0];
        let n = buf.len();
        if slot == n {
            if (lo..=hi).contains(&sum) {
                out.push(CurveClass(buf.clone()));
            }
            return;
        }
        let remaining = (n - slot) as i64;
        for m in 0..=d {
            let s = sum + m;
            if s > hi {
                break;
            }
            if s + (remaining - 1) * d < lo {
                continue;
            }
            buf[slot] = -m;
            self.fill_multiplicities(buf, slot + 1, s, lo, hi, out);
        }
        buf[slot] = 0;
    }

    /// All ordered pairs of admissible classes summing to `B`.
    pub fn decompositions(&self, b: &CurveClass) -> Vec<(CurveClass, CurveClass)> {
        if b.rank() != self.rank() {
            return Vec::new();
        }
        let total = self.form(&self.c1, b.coeffs());
        self.admissible_classes(total - 1)
            .into_iter()
            .filter(|b1| b1.degree() <= b.degree())
            .filter_map(|b1| {
                let b2 = b - &b1;
                self.is_admissible(&b2).then_some((b1, b2))
            })
            .collect()
    }

    /// Checks `H1·H2 = 1`, `H1·H3 = 0` and anti-invariance of each divisor.
    pub fn validate_triple(
        &self,
        h1: DivisorClass,
        h2: DivisorClass,
        h3: Option<DivisorClass>,
    ) -> Result<DivisorTriple> {
        let n = self.rank();
        for (name, h) in [("H1", Some(&h1)), ("H2", Some(&h2)), ("H3", h3.as_ref())] {
            let Some(h) = h else { continue };
            if h.covector().len() != n {
                return Err(Error::InvalidDivisorTriple(format!(
                    "{name} has {} coordinates, expected {n}",
                    h.covector().len()
                )));
            }
            let image = mat_vec(&self.phi_star, h.covector());
            if image.iter().zip(h.covector()).any(|(x, y)| *x != -y) {
                return Err(Error::InvalidDivisorTriple(format!("{name} is not anti-invariant")));
            }
        }
        let h12 = self.form(h1.covector(), h2.covector());
        if h12 != 1 {
            return Err(Error::InvalidDivisorTriple(format!("H1·H2 = {h12}, expected 1")));
        }
        if let Some(h3) = &h3 {
            let h13 = self.form(h1.covector(), h3.covector());
            if !h13.is_zero() {
                return Err(Error::InvalidDivisorTriple(format!("H1·H3 = {h13}, expected 0")));
            }
        }
        Ok(DivisorTriple { h1, h2, h3 })
    }
}

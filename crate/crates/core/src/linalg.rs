//! Exact elimination over the integers and rationals.
//!
//! Rows are cleared of denominators up front and reduced with
//! cross-multiplication, dividing each row by its content after every update
//! so entries stay small. Pivots are chosen by fixed column order, first
//! eligible row wins, which makes every reduction reproducible.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// A single affine equation `sum(coeffs[j] * x_j) = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub coeffs: Vec<BigRational>,
    pub rhs: BigRational,
}

/// Outcome of a Gauss-Jordan reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub rank: usize,
    /// Columns whose value is forced by the system, in column order.
    pub pinned: Vec<(usize, BigRational)>,
    /// Index (in input order) of an equation reduced to `0 = c` with `c != 0`.
    pub contradiction: Option<usize>,
}

struct IntRow {
    entries: Vec<BigInt>,
    rhs: BigInt,
    origin: usize,
}

impl IntRow {
    fn from_equation(eq: &Equation, origin: usize) -> Self {
        let lcm = eq
            .coeffs
            .iter()
            .chain(std::iter::once(&eq.rhs))
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let scale = |q: &BigRational| q.numer() * (&lcm / q.denom());
        let mut row = IntRow {
            entries: eq.coeffs.iter().map(scale).collect(),
            rhs: scale(&eq.rhs),
            origin,
        };
        row.normalize();
        row
    }

    fn content(&self) -> BigInt {
        self.entries
            .iter()
            .chain(std::iter::once(&self.rhs))
            .fold(BigInt::zero(), |acc, x| acc.gcd(x))
    }

    fn normalize(&mut self) {
        let g = self.content();
        if g.is_zero() || g.is_one() {
            return;
        }
        for x in self.entries.iter_mut() {
            *x /= &g;
        }
        self.rhs /= &g;
    }

    fn is_zero_lhs(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }
}

/// Reduces `equations` (each over `columns` unknowns) to reduced row echelon
/// form and reports which unknowns are determined.
pub fn reduce(equations: &[Equation], columns: usize) -> Reduction {
    let mut rows: Vec<IntRow> = equations
        .iter()
        .enumerate()
        .map(|(i, eq)| {
            assert_eq!(eq.coeffs.len(), columns, "equation width mismatch");
            IntRow::from_equation(eq, i)
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, column)
    let mut next_row = 0;
    for col in 0..columns {
        let Some(found) = (next_row..rows.len()).find(|&r| !rows[r].entries[col].is_zero()) else {
            continue;
        };
        rows.swap(next_row, found);
        let pivot = rows[next_row].entries[col].clone();
        let (pivot_row, pivot_rhs) = (rows[next_row].entries.clone(), rows[next_row].rhs.clone());
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next_row || row.entries[col].is_zero() {
                continue;
            }
            let factor = row.entries[col].clone();
            for (x, p) in row.entries.iter_mut().zip(&pivot_row) {
                *x = &*x * &pivot - &factor * p;
            }
            row.rhs = &row.rhs * &pivot - &factor * &pivot_rhs;
            row.normalize();
        }
        pivots.push((next_row, col));
        next_row += 1;
    }

    let contradiction = rows[next_row..]
        .iter()
        .filter(|row| row.is_zero_lhs() && !row.rhs.is_zero())
        .map(|row| row.origin)
        .min();

    let pinned = pivots
        .iter()
        .filter_map(|&(r, col)| {
            let row = &rows[r];
            let others = row.entries.iter().enumerate().any(|(j, x)| j != col && !x.is_zero());
            (!others).then(|| (col, BigRational::new(row.rhs.clone(), row.entries[col].clone())))
        })
        .collect();

    Reduction {
        rank: pivots.len(),
        pinned,
        contradiction,
    }
}

/// Determinant of a square integer matrix (Bareiss elimination).
pub fn determinant(matrix: &[Vec<i64>]) -> BigInt {
    let n = matrix.len();
    let mut m: Vec<Vec<BigInt>> = matrix
        .iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &m[n - 1][n - 1]
}

/// Rank of an integer matrix.
pub fn rank(matrix: &[Vec<i64>]) -> usize {
    let Some(width) = matrix.first().map(Vec::len) else {
        return 0;
    };
    let equations: Vec<Equation> = matrix
        .iter()
        .map(|row| Equation {
            coeffs: row.iter().map(|&x| BigRational::from_integer(x.into())).collect(),
            rhs: BigRational::zero(),
        })
        .collect();
    reduce(&equations, width).rank
}

/// Unique rational solution of the square-or-tall system `matrix * x = rhs`,
/// when the matrix has full column rank and the system is consistent.
pub fn solve_unique(matrix: &[Vec<i64>], rhs: &[i64]) -> Option<Vec<BigRational>> {
    let width = matrix.first().map(Vec::len)?;
    let equations: Vec<Equation> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, &b)| Equation {
            coeffs: row.iter().map(|&x| BigRational::from_integer(x.into())).collect(),
            rhs: BigRational::from_integer(b.into()),
        })
        .collect();
    let red = reduce(&equations, width);
    if red.contradiction.is_some() || red.pinned.len() != width {
        return None;
    }
    Some(red.pinned.into_iter().map(|(_, v)| v).collect())
}

pub(crate) fn is_integral(q: &BigRational) -> bool {
    q.denom().is_one() || q.denom().abs().is_one()
}

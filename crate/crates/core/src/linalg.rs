//! Exact linear algebra over the rationals.
//!
//! Rank and null-space decisions are made by fraction-free (Bareiss)
//! elimination on integer matrices; rational input rows are cleared of
//! denominators first. No floating-point rank decisions anywhere.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect())
                .collect(),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Integer matrix with the same row spans: each row scaled by the lcm of
    /// its denominators and divided by the gcd of its numerators.
    fn to_int_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut l = BigInt::one();
                for x in row {
                    l = l.lcm(x.denom());
                }
                let mut ints: Vec<BigInt> =
                    row.iter().map(|x| x.numer() * (&l / x.denom())).collect();
                let mut g = BigInt::zero();
                for x in &ints {
                    g = g.gcd(x);
                }
                if !g.is_zero() && !g.is_one() {
                    for x in &mut ints {
                        *x /= &g;
                    }
                }
                ints
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        bareiss(&mut self.to_int_rows()).len()
    }

    /// Exact basis of `ker(self)` (as column vectors of length `cols`).
    pub fn nullspace(&self) -> Vec<Vec<Rat>> {
        if self.cols == 0 {
            return Vec::new();
        }
        if self.rows == 0 {
            return (0..self.cols)
                .map(|j| {
                    let mut v = vec![Rat::zero(); self.cols];
                    v[j] = Rat::one();
                    v
                })
                .collect();
        }
        let mut m = self.to_int_rows();
        let pivots = bareiss(&mut m);
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let free_cols: Vec<usize> =
            (0..self.cols).filter(|c| !pivot_cols.contains(c)).collect();

        let mut basis = Vec::with_capacity(free_cols.len());
        for &f in &free_cols {
            let mut x = vec![Rat::zero(); self.cols];
            x[f] = Rat::one();
            // Back-substitute through the echelon rows in reverse.
            for &(pr, pc) in pivots.iter().rev() {
                let mut s = Rat::zero();
                for j in (pc + 1)..self.cols {
                    if !m[pr][j].is_zero() && !x[j].is_zero() {
                        s += Rat::from_integer(m[pr][j].clone()) * &x[j];
                    }
                }
                x[pc] = -s / Rat::from_integer(m[pr][pc].clone());
            }
            basis.push(x);
        }
        basis
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }
}

/// Fraction-free forward elimination in place; returns the pivot positions.
///
/// Every row below the pivot is updated at every step, zero-column rows
/// included; skipping them would leave rows at mixed scaling generations
/// and break the exact-division invariant once such a row is chosen as a
/// later pivot.
fn bareiss(m: &mut [Vec<BigInt>]) -> Vec<(usize, usize)> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0usize;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // Smallest-magnitude pivot keeps the intermediate entries modest.
        let pivot_row = (r..rows)
            .filter(|&i| !m[i][c].is_zero())
            .min_by_key(|&i| m[i][c].magnitude().clone());
        let Some(p) = pivot_row else { continue };
        m.swap(r, p);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let num = &m[i][j] * &m[r][c] - &m[i][c] * &m[r][j];
                let (q, rem) = num.div_rem(&prev);
                assert!(rem.is_zero(), "fraction-free elimination lost exactness");
                m[i][j] = q;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push((r, c));
        r += 1;
    }
    pivots
}

/// Do the rows of `a` and `b` span the same subspace?
pub fn same_row_span(a: &RatMatrix, b: &RatMatrix) -> bool {
    if a.cols != b.cols {
        return false;
    }
    let ra = a.rank();
    let rb = b.rank();
    if ra != rb {
        return false;
    }
    let mut stacked = Vec::with_capacity(a.rows + b.rows);
    for i in 0..a.rows {
        stacked.push(a.row(i).to_vec());
    }
    for i in 0..b.rows {
        stacked.push(b.row(i).to_vec());
    }
    RatMatrix::from_rows(stacked).rank() == ra
}

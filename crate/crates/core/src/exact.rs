//! Exact linear algebra over `Rational64`.
//!
//! Only what the Lie-subspace solver and the decomposition checks need:
//! row reduction, rank, determinant and affine solution sets.

use num_traits::{One, Signed, Zero};

use crate::Rational;

/// Row-reduced echelon form together with the pivot column of each nonzero row.
#[derive(Clone, Debug, PartialEq)]
pub struct Rref {
    pub rows: Vec<Vec<Rational>>,
    pub pivots: Vec<usize>,
}

pub fn rref(mut rows: Vec<Vec<Rational>>) -> Rref {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c];
                for j in 0..ncols {
                    let sub = f * rows[r][j];
                    rows[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    Rref { rows, pivots }
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    rref(rows.to_vec()).pivots.len()
}

pub fn determinant(rows: &[Vec<Rational>]) -> Rational {
    let n = rows.len();
    let mut a = rows.to_vec();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for i in (c + 1)..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                let sub = f * a[c][j];
                a[i][j] -= sub;
            }
        }
    }
    det
}

/// Solution set `{ particular + Σ t_k null[k] }` of `A x = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSolution {
    pub particular: Vec<Rational>,
    pub null_space: Vec<Vec<Rational>>,
    /// Index of the free unknown that generates each null-space vector.
    pub free_columns: Vec<usize>,
}

/// Solves `A x = b` exactly. Returns `None` when the system is inconsistent.
pub fn solve_affine(a: &[Vec<Rational>], b: &[Rational], nvars: usize) -> Option<AffineSolution> {
    let augmented: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    if augmented.is_empty() {
        return Some(AffineSolution {
            particular: vec![Rational::zero(); nvars],
            null_space: unit_vectors(nvars),
            free_columns: (0..nvars).collect(),
        });
    }
    let red = rref(augmented);
    if red.pivots.contains(&nvars) {
        return None;
    }
    let mut particular = vec![Rational::zero(); nvars];
    for (row, &pc) in red.rows.iter().zip(&red.pivots) {
        particular[pc] = row[nvars];
    }
    let free_columns: Vec<usize> = (0..nvars).filter(|c| !red.pivots.contains(c)).collect();
    let null_space = free_columns
        .iter()
        .map(|&fc| {
            let mut v = vec![Rational::zero(); nvars];
            v[fc] = Rational::one();
            for (row, &pc) in red.rows.iter().zip(&red.pivots) {
                v[pc] = -row[fc];
            }
            v
        })
        .collect();
    Some(AffineSolution {
        particular,
        null_space,
        free_columns,
    })
}

fn unit_vectors(n: usize) -> Vec<Vec<Rational>> {
    (0..n)
        .map(|i| {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::one();
            v
        })
        .collect()
}

pub fn max_abs(values: impl IntoIterator<Item = Rational>) -> Rational {
    values
        .into_iter()
        .map(|v| v.abs())
        .fold(Rational::zero(), |a, b| if b > a { b } else { a })
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

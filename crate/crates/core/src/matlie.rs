//! Small matrix Lie algebras: so(3)⊕ℝ, sl(2,ℝ)⊕ℝ and the three-dimensional
//! solvable algebra of the upper half-space group.
//!
//! Structure constants are stored as exact rationals; matrices are `f64`.
//! Every basis entry is a dyadic rational (0, ±1, ±½), so the matrix
//! commutators of basis elements are computed exactly in floating point too.

use std::fmt;

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::exact;
use crate::Rational;

/// Tolerance for the algebra-membership test applied to bracket results.
pub const CLOSURE_TOL: f64 = 1e-12;
/// Truncation order of the Taylor series inside [`matrix_exp`].
pub const EXP_SERIES_ORDER: usize = 12;
/// Maximum number of squarings [`matrix_exp`] may perform.
pub const EXP_MAX_SQUARINGS: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatLieError {
    #[error("matrix dimension must be 3 or 4, got {0}")]
    BadDimension(usize),
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix dimensions differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("elements live in different algebras: {0} vs {1}")]
    AlgebraMismatch(AlgebraId, AlgebraId),
    #[error("result leaves {algebra} (defect {defect:e})")]
    ClosureViolation { algebra: AlgebraId, defect: f64 },
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("matrix exponential needs more than {EXP_MAX_SQUARINGS} squarings (norm {norm:e})")]
    NonConvergence { norm: f64 },
}

/// The three built-in Lie algebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgebraId {
    /// so(3)⊕ℝ as block-diag(skew 3×3, scalar) inside gl(4,ℝ).
    So3R,
    /// sl(2,ℝ)⊕ℝ as block-diag(traceless 2×2, scalar) inside gl(3,ℝ).
    Sl2rR,
    /// The solvable algebra `[e1,e2] = -e1`, realized as the tangent algebra of
    /// the group of matrices `((y, x, 0), (0, 1, 0), (0, 0, e^z))`.
    Solv,
}

impl AlgebraId {
    pub fn matrix_dim(self) -> usize {
        match self {
            AlgebraId::So3R => 4,
            AlgebraId::Sl2rR | AlgebraId::Solv => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgebraId::So3R => "so(3)⊕ℝ",
            AlgebraId::Sl2rR => "sl(2,ℝ)⊕ℝ",
            AlgebraId::Solv => "solv",
        }
    }
}

impl fmt::Display for AlgebraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A 3×3 or 4×4 real matrix with finite entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    entries: [[f64; 4]; 4],
}

impl SquareMatrix {
    /// Builds a matrix from row-major rows. `rows.len()` is the dimension.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, MatLieError> {
        let dim = rows.len();
        if dim != 3 && dim != 4 {
            return Err(MatLieError::BadDimension(dim));
        }
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(MatLieError::ShapeMismatch(dim, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MatLieError::NonFinite { row: i, col: j });
                }
                entries[i][j] = v;
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Result<Self, MatLieError> {
        if dim != 3 && dim != 4 {
            return Err(MatLieError::BadDimension(dim));
        }
        Ok(Self {
            dim,
            entries: [[0.0; 4]; 4],
        })
    }

    pub fn identity(dim: usize) -> Result<Self, MatLieError> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.entries[i][i] = 1.0;
        }
        Ok(m)
    }

    /// The matrix unit `E_ij` with 1-based indices.
    pub fn unit(dim: usize, row: usize, col: usize) -> Result<Self, MatLieError> {
        let mut m = Self::zeros(dim)?;
        m.entries[row - 1][col - 1] = 1.0;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry with 0-based indices.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.dim && col < self.dim, "index out of range");
        self.entries[row][col]
    }

    fn check_same(&self, other: &Self) -> Result<(), MatLieError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(MatLieError::ShapeMismatch(self.dim, other.dim))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, MatLieError> {
        self.check_same(other)?;
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i][j] = f(self.entries[i][j], other.entries[i][j]);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatLieError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MatLieError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.entries.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatLieError> {
        self.check_same(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n)?;
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.entries[i][j] += a * other.entries[k][j];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i][j] = self.entries[j][i];
            }
        }
        out
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self, MatLieError> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Induced ∞-norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entries[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, MatLieError> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .take(self.dim)
            .flat_map(|r| r.iter().take(self.dim))
            .fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|v| v.is_finite())
    }

    /// Gauss–Jordan inverse with partial pivoting; `None` if singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.dim;
        let mut a = self.entries;
        let mut inv = Self::identity(n).ok()?.entries;
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
            if a[p][c].abs() < 1e-300 {
                return None;
            }
            a.swap(p, c);
            inv.swap(p, c);
            let d = a[c][c];
            for j in 0..n {
                a[c][j] /= d;
                inv[c][j] /= d;
            }
            for i in 0..n {
                if i != c {
                    let f = a[i][c];
                    for j in 0..n {
                        a[i][j] -= f * a[c][j];
                        inv[i][j] -= f * inv[c][j];
                    }
                }
            }
        }
        Some(Self { dim: n, entries: inv })
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.entries;
        let det3 = |r: [usize; 3], c: [usize; 3]| {
            m[r[0]][c[0]] * (m[r[1]][c[1]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[1]])
                - m[r[0]][c[1]] * (m[r[1]][c[0]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[0]])
                + m[r[0]][c[2]] * (m[r[1]][c[0]] * m[r[2]][c[1]] - m[r[1]][c[1]] * m[r[2]][c[0]])
        };
        if self.dim == 3 {
            return det3([0, 1, 2], [0, 1, 2]);
        }
        let mut det = 0.0;
        for j in 0..4 {
            let cols: Vec<usize> = (0..4).filter(|&c| c != j).collect();
            let minor = det3([1, 2, 3], [cols[0], cols[1], cols[2]]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[0][j] * minor;
        }
        det
    }
}

/// Scaling-and-squaring exponential with a fixed Taylor order.
///
/// The matrix is scaled by `2^-s` until its norm is at most ½ and the
/// amplified Taylor remainder bound `2^s · r^13/13! · e^r` drops below `tol`.
pub fn matrix_exp(a: &SquareMatrix, tol: f64) -> Result<SquareMatrix, MatLieError> {
    if !(tol > 0.0) {
        return Err(MatLieError::BadTolerance(tol));
    }
    let norm = a.norm_inf();
    if !norm.is_finite() {
        return Err(MatLieError::NonConvergence { norm });
    }
    let remainder = |r: f64, s: u32| {
        let fact: f64 = (1..=EXP_SERIES_ORDER + 1).map(|k| k as f64).product();
        2f64.powi(s as i32) * r.powi(EXP_SERIES_ORDER as i32 + 1) / fact * r.exp()
    };
    let mut s = 0u32;
    loop {
        let r = norm / 2f64.powi(s as i32);
        if r <= 0.5 && remainder(r, s) < tol {
            break;
        }
        s += 1;
        if s > EXP_MAX_SQUARINGS {
            return Err(MatLieError::NonConvergence { norm });
        }
    }
    let scaled = a.scale(1.0 / 2f64.powi(s as i32));
    let n = a.dim();
    let mut result = SquareMatrix::identity(n)?;
    let mut term = SquareMatrix::identity(n)?;
    for k in 1..=EXP_SERIES_ORDER {
        term = term.mul(&scaled)?.scale(1.0 / k as f64);
        result = result.add(&term)?;
    }
    for _ in 0..s {
        result = result.mul(&result)?;
    }
    Ok(result)
}

/// A matrix tagged with the algebra it belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LieAlgebraElement {
    algebra: AlgebraId,
    matrix: SquareMatrix,
}

impl LieAlgebraElement {
    pub fn new(algebra: AlgebraId, matrix: SquareMatrix) -> Result<Self, MatLieError> {
        if matrix.dim() != algebra.matrix_dim() {
            return Err(MatLieError::ShapeMismatch(algebra.matrix_dim(), matrix.dim()));
        }
        let defect = membership_defect(algebra, &matrix);
        if defect > CLOSURE_TOL {
            return Err(MatLieError::ClosureViolation { algebra, defect });
        }
        Ok(Self { algebra, matrix })
    }

    pub fn algebra(&self) -> AlgebraId {
        self.algebra
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            algebra: self.algebra,
            matrix: self.matrix.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatLieError> {
        if self.algebra != other.algebra {
            return Err(MatLieError::AlgebraMismatch(self.algebra, other.algebra));
        }
        Ok(Self {
            algebra: self.algebra,
            matrix: self.matrix.add(&other.matrix)?,
        })
    }
}

/// Largest entry violating the block pattern of the given algebra.
fn membership_defect(algebra: AlgebraId, m: &SquareMatrix) -> f64 {
    let mut defect: f64 = 0.0;
    let mut bump = |v: f64| defect = defect.max(v.abs());
    match algebra {
        AlgebraId::So3R => {
            for i in 0..3 {
                for j in 0..3 {
                    bump(m.get(i, j) + m.get(j, i));
                }
                bump(m.get(i, 3));
                bump(m.get(3, i));
            }
        }
        AlgebraId::Sl2rR => {
            bump(m.get(0, 0) + m.get(1, 1));
            for i in 0..2 {
                bump(m.get(i, 2));
                bump(m.get(2, i));
            }
        }
        AlgebraId::Solv => {
            // span{E11, E12, E33}
            for (i, j) in [(0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1)] {
                bump(m.get(i, j));
            }
        }
    }
    defect
}

/// Commutator of two elements of the same matrix algebra.
pub fn bracket(a: &LieAlgebraElement, b: &LieAlgebraElement) -> Result<LieAlgebraElement, MatLieError> {
    if a.algebra != b.algebra {
        return Err(MatLieError::AlgebraMismatch(a.algebra, b.algebra));
    }
    let c = a.matrix.commutator(&b.matrix)?;
    LieAlgebraElement::new(a.algebra, c)
}

/// An ordered basis with its structure constants `c[i][j][k] = c^k_{ij}`,
/// i.e. `[b_i, b_j] = Σ_k c^k_{ij} b_k`. The basis is declared orthonormal.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisTable {
    pub algebra: AlgebraId,
    pub labels: Vec<&'static str>,
    pub elements: Vec<LieAlgebraElement>,
    pub constants: Vec<Vec<Vec<Rational>>>,
}

impl BasisTable {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    fn check_len(&self, v: &[Rational]) -> Result<(), MatLieError> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(MatLieError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            })
        }
    }

    /// Bilinear extension of the structure constants.
    pub fn bracket_abstract(&self, x: &[Rational], y: &[Rational]) -> Result<Vec<Rational>, MatLieError> {
        self.check_len(x)?;
        self.check_len(y)?;
        let n = self.dim();
        let mut out = vec![Rational::zero(); n];
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].is_zero() {
                    continue;
                }
                let w = x[i] * y[j];
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.constants[i][j][k];
                }
            }
        }
        Ok(out)
    }

    /// The matrix `Σ x_i b_i`.
    pub fn element(&self, x: &[Rational]) -> Result<LieAlgebraElement, MatLieError> {
        self.check_len(x)?;
        let mut m = SquareMatrix::zeros(self.algebra.matrix_dim())?;
        for (xi, b) in x.iter().zip(&self.elements) {
            m = m.add(&b.matrix.scale(exact::to_f64(*xi)))?;
        }
        LieAlgebraElement::new(self.algebra, m)
    }

    /// Same as [`BasisTable::element`] with real coefficients.
    pub fn element_f64(&self, x: &[f64]) -> Result<LieAlgebraElement, MatLieError> {
        if x.len() != self.dim() {
            return Err(MatLieError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut m = SquareMatrix::zeros(self.algebra.matrix_dim())?;
        for (xi, b) in x.iter().zip(&self.elements) {
            m = m.add(&b.matrix.scale(*xi))?;
        }
        LieAlgebraElement::new(self.algebra, m)
    }

    /// Max absolute entry of the Jacobiator over all basis triples (exact).
    pub fn jacobi_residual(&self) -> Rational {
        let n = self.dim();
        let e = |i: usize| {
            let mut v = vec![Rational::zero(); n];
            v[i] = Rational::from_integer(1);
            v
        };
        let mut worst = Rational::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let br = |a: &[Rational], b: &[Rational]| self.bracket_abstract(a, b).expect("basis length");
                    let t1 = br(&e(i), &br(&e(j), &e(k)));
                    let t2 = br(&e(j), &br(&e(k), &e(i)));
                    let t3 = br(&e(k), &br(&e(i), &e(j)));
                    let sum = (0..n).map(|c| t1[c] + t2[c] + t3[c]);
                    worst = worst.max(exact::max_abs(sum));
                }
            }
        }
        worst
    }

    /// Max deviation between matrix commutators of basis elements and the
    /// matrices predicted by the structure constants.
    pub fn commutator_defect(&self) -> Result<f64, MatLieError> {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c = bracket(&self.elements[i], &self.elements[j])?;
                let predicted = self.element(&self.constants[i][j])?;
                worst = worst.max(c.matrix.max_abs_diff(&predicted.matrix)?);
            }
        }
        Ok(worst)
    }

    /// Inner product of coefficient vectors; the basis is orthonormal.
    pub fn inner(&self, x: &[Rational], y: &[Rational]) -> Rational {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

fn half() -> Rational {
    Rational::new(1, 2)
}

type BracketRow = (usize, usize, Vec<(usize, i64)>);

fn table_from_brackets(
    algebra: AlgebraId,
    labels: Vec<&'static str>,
    elements: Vec<LieAlgebraElement>,
    brackets: &[BracketRow],
) -> BasisTable {
    let n = labels.len();
    let mut c = vec![vec![vec![Rational::zero(); n]; n]; n];
    for (i, j, terms) in brackets {
        for &(k, coef) in terms {
            c[*i][*j][k] = Rational::from_integer(coef);
            c[*j][*i][k] = Rational::from_integer(-coef);
        }
    }
    BasisTable {
        algebra,
        labels,
        elements,
        constants: c,
    }
}

/// The built-in basis of each algebra with its exact structure constants.
///
/// * so(3)⊕ℝ: `u1 = E23-E32, u2 = E12-E21, u3 = E31-E13, e = E44`.
/// * sl(2,ℝ)⊕ℝ: `v1 = ½(E21-E12), v2 = ½(E12+E21), v3 = ½(E22-E11), e = E33`.
/// * solv: `e1 = E12, e2 = E11, e3 = E33`, the values at the identity of the
///   left-invariant frame `y∂x, y∂y, ∂z`.
pub fn builtin_basis(algebra: AlgebraId) -> BasisTable {
    let dim = algebra.matrix_dim();
    let unit = |i, j| SquareMatrix::unit(dim, i, j).expect("valid unit");
    let el = |m: SquareMatrix| LieAlgebraElement::new(algebra, m).expect("built-in basis element");
    let diff = |a: SquareMatrix, b: SquareMatrix| a.sub(&b).expect("same dim");
    let sum = |a: SquareMatrix, b: SquareMatrix| a.add(&b).expect("same dim");
    let h = exact::to_f64(half());
    match algebra {
        AlgebraId::So3R => table_from_brackets(
            algebra,
            vec!["u1", "u2", "u3", "e"],
            vec![
                el(diff(unit(2, 3), unit(3, 2))),
                el(diff(unit(1, 2), unit(2, 1))),
                el(diff(unit(3, 1), unit(1, 3))),
                el(unit(4, 4)),
            ],
            // [u1,u2]=u3, [u2,u3]=u1, [u3,u1]=u2
            &[(0, 1, vec![(2, 1)]), (1, 2, vec![(0, 1)]), (2, 0, vec![(1, 1)])],
        ),
        AlgebraId::Sl2rR => table_from_brackets(
            algebra,
            vec!["v1", "v2", "v3", "e"],
            vec![
                el(diff(unit(2, 1), unit(1, 2)).scale(h)),
                el(sum(unit(1, 2), unit(2, 1)).scale(h)),
                el(diff(unit(2, 2), unit(1, 1)).scale(h)),
                el(unit(3, 3)),
            ],
            // [v1,v2]=v3, [v2,v3]=-v1, [v3,v1]=v2
            &[(0, 1, vec![(2, 1)]), (1, 2, vec![(0, -1)]), (2, 0, vec![(1, 1)])],
        ),
        AlgebraId::Solv => table_from_brackets(
            algebra,
            vec!["e1", "e2", "e3"],
            vec![el(unit(1, 2)), el(unit(1, 1)), el(unit(3, 3))],
            // [e1,e2]=-e1
            &[(0, 1, vec![(0, -1)])],
        ),
    }
}

/// Convert a real parameter to an exact rational (exact for dyadic values).
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    let r = Rational::approximate_float(v)?;
    // approximate_float may round; accept only if it reproduces v
    (r.to_f64()? == v).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn coeffs(table: &BasisTable, label: &str) -> Vec<Rational> {
        let mut v = vec![q(0); table.dim()];
        v[table.labels.iter().position(|l| *l == label).unwrap()] = q(1);
        v
    }

    #[test]
    fn u1_u2_bracket_is_u3() {
        let t = builtin_basis(AlgebraId::So3R);
        let c = bracket(&t.elements[0], &t.elements[1]).unwrap();
        assert_eq!(c, t.elements[2]);
        let z = bracket(&t.elements[0], &t.elements[0]).unwrap();
        assert_eq!(z.matrix().max_abs(), 0.0);
    }

    #[test]
    fn v2_v3_bracket_is_minus_v1() {
        let t = builtin_basis(AlgebraId::Sl2rR);
        let c = bracket(&t.elements[1], &t.elements[2]).unwrap();
        assert_eq!(c, t.elements[0].scale(-1.0));
    }

    #[test]
    fn mismatched_algebras_are_rejected() {
        let a = builtin_basis(AlgebraId::So3R).elements[0];
        let b = builtin_basis(AlgebraId::Sl2rR).elements[0];
        assert!(matches!(bracket(&a, &b), Err(MatLieError::AlgebraMismatch(..))));
    }

    #[test]
    fn non_member_matrix_is_a_closure_violation() {
        let m = SquareMatrix::unit(4, 1, 1).unwrap();
        assert!(matches!(
            LieAlgebraElement::new(AlgebraId::So3R, m),
            Err(MatLieError::ClosureViolation { .. })
        ));
    }

    #[test]
    fn solv_abstract_brackets() {
        let t = builtin_basis(AlgebraId::Solv);
        let b = t.bracket_abstract(&[q(1), q(0), q(0)], &[q(0), q(1), q(0)]).unwrap();
        assert_eq!(b, vec![q(-1), q(0), q(0)]);
        let b = t.bracket_abstract(&[q(1), q(0), q(0)], &[q(0), q(0), q(1)]).unwrap();
        assert_eq!(b, vec![q(0); 3]);
        assert!(matches!(
            t.bracket_abstract(&[q(1)], &[q(0), q(0), q(1)]),
            Err(MatLieError::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn builtin_tables_match_commutators_and_jacobi() {
        for id in [AlgebraId::So3R, AlgebraId::Sl2rR, AlgebraId::Solv] {
            let t = builtin_basis(id);
            assert_eq!(t.commutator_defect().unwrap(), 0.0, "{id}");
            assert_eq!(t.jacobi_residual(), q(0), "{id}");
            for i in 0..t.dim() {
                for j in 0..t.dim() {
                    for k in 0..t.dim() {
                        assert_eq!(t.constants[i][j][k], -t.constants[j][i][k]);
                    }
                }
            }
        }
    }

    #[test]
    fn named_brackets() {
        let t = builtin_basis(AlgebraId::So3R);
        assert_eq!(t.bracket_abstract(&coeffs(&t, "u2"), &coeffs(&t, "u3")).unwrap(), coeffs(&t, "u1"));
        for u in ["u1", "u2", "u3"] {
            assert_eq!(t.bracket_abstract(&coeffs(&t, u), &coeffs(&t, "e")).unwrap(), vec![q(0); 4]);
        }
        let s = builtin_basis(AlgebraId::Sl2rR);
        assert_eq!(s.bracket_abstract(&coeffs(&s, "v1"), &coeffs(&s, "v2")).unwrap(), coeffs(&s, "v3"));
        assert_eq!(s.bracket_abstract(&coeffs(&s, "v3"), &coeffs(&s, "v1")).unwrap(), coeffs(&s, "v2"));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = SquareMatrix::zeros(4).unwrap();
        assert_eq!(matrix_exp(&z, 1e-14).unwrap(), SquareMatrix::identity(4).unwrap());
    }

    #[test]
    fn exp_of_u1_is_plane_rotation() {
        let u1 = *builtin_basis(AlgebraId::So3R).elements[0].matrix();
        for t in [0.1, 1.0] {
            let (c, s) = (f64::cos(t), f64::sin(t));
            // u1 = E23 - E32 generates x2' = c x2 + s x3, x3' = -s x2 + c x3
            let expected = SquareMatrix::from_rows(&[
                &[1.0, 0.0, 0.0, 0.0],
                &[0.0, c, s, 0.0],
                &[0.0, -s, c, 0.0],
                &[0.0, 0.0, 0.0, 1.0],
            ])
            .unwrap();
            let got = matrix_exp(&u1.scale(t), 1e-14).unwrap();
            assert!(got.max_abs_diff(&expected).unwrap() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn exp_of_e44_scales_last_coordinate() {
        let e = SquareMatrix::unit(4, 4, 4).unwrap();
        let got = matrix_exp(&e, 1e-14).unwrap();
        let expected = SquareMatrix::from_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, std::f64::consts::E],
        ])
        .unwrap();
        assert!(got.max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn exp_rejects_huge_norm_and_bad_tol() {
        let big = SquareMatrix::identity(3).unwrap().scale(1e12);
        assert!(matches!(matrix_exp(&big, 1e-12), Err(MatLieError::NonConvergence { .. })));
        assert!(matches!(
            matrix_exp(&SquareMatrix::zeros(3).unwrap(), 0.0),
            Err(MatLieError::BadTolerance(_))
        ));
    }

    #[test]
    fn bad_dimensions_and_nan_are_rejected() {
        assert!(matches!(SquareMatrix::zeros(2), Err(MatLieError::BadDimension(2))));
        assert!(matches!(
            SquareMatrix::from_rows(&[&[0.0, f64::NAN, 0.0], &[0.0; 3], &[0.0; 3]]),
            Err(MatLieError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn exact_rationals_from_dyadic_floats() {
        assert_eq!(rational_from_f64(0.5), Some(Rational::new(1, 2)));
        assert_eq!(rational_from_f64(-3.0), Some(q(-3)));
        assert_eq!(rational_from_f64(f64::NAN), None);
    }
}

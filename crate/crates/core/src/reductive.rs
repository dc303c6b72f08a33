//! Reductive decompositions `g = m ⊕ h` and the structure tensor they induce
//! at the origin.
//!
//! Lie subspaces are found by writing a candidate complement as the graph of
//! a linear map `L: m₀ → h` over a fixed complement `m₀`; the condition
//! `[h, m] ⊆ m` is affine in the entries of `L` and is solved exactly.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::diffgeo::{Point, DIM};
use crate::exact;
use crate::matlie::{self, builtin_basis, AlgebraId, BasisTable, MatLieError};
use crate::models::ModelSpace;
use crate::Rational;

/// Step of the central difference used by [`tau_map`].
pub const TAU_STEP: f64 = 1e-5;
/// Disagreement between the `t` and `t/2` differences above which a warning is logged.
pub const TAU_WARN: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductiveError {
    #[error("h basis is linearly dependent; no complement exists")]
    NoComplement,
    #[error("h basis does not span a subalgebra")]
    NotSubalgebra,
    #[error("m ∪ h is not a basis of the algebra")]
    NotABasis,
    #[error("[m, h] is not contained in m")]
    NotReductive,
    #[error("the invariance system has no solution")]
    DegenerateSystem,
    #[error("metric on m must be symmetric positive definite")]
    BadMetric,
    #[error("expected {expected} parameter values, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("algebra {0} has no coset representation on this model")]
    ModelMismatch(AlgebraId),
    #[error("exp(tX)·o leaves the chart domain")]
    ActionUndefined,
    #[error(transparent)]
    MatLie(#[from] MatLieError),
}

fn zeros(n: usize) -> Vec<Rational> {
    vec![Rational::zero(); n]
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = zeros(n);
    v[i] = Rational::one();
    v
}

fn add_scaled(acc: &mut [Rational], s: Rational, v: &[Rational]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += s * b;
    }
}

/// Coordinates of `z` in the basis `first ∪ second` (exact), split accordingly.
fn split(first: &[Vec<Rational>], second: &[Vec<Rational>], z: &[Rational]) -> Option<(Vec<Rational>, Vec<Rational>)> {
    let n = z.len();
    let cols: Vec<&Vec<Rational>> = first.iter().chain(second).collect();
    let a: Vec<Vec<Rational>> = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let sol = exact::solve_affine(&a, z, cols.len())?;
    if !sol.null_space.is_empty() {
        return None;
    }
    let (x, y) = sol.particular.split_at(first.len());
    Some((x.to_vec(), y.to_vec()))
}

/// `g = m ⊕ h` with both parts given as coefficient vectors over the built-in basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductiveDecomposition {
    pub algebra: AlgebraId,
    pub h_basis: Vec<Vec<Rational>>,
    pub m_basis: Vec<Vec<Rational>>,
    /// Named parameter values the decomposition was instantiated with.
    pub params: Vec<(String, Rational)>,
}

impl ReductiveDecomposition {
    pub fn new(
        algebra: AlgebraId,
        h_basis: Vec<Vec<Rational>>,
        m_basis: Vec<Vec<Rational>>,
        params: Vec<(String, Rational)>,
    ) -> Result<Self, ReductiveError> {
        let dec = Self {
            algebra,
            h_basis,
            m_basis,
            params,
        };
        dec.validate()?;
        Ok(dec)
    }

    /// The trivial decomposition `g = g ⊕ {0}` of a Lie group.
    pub fn lie_group(algebra: AlgebraId) -> Self {
        let n = builtin_basis(algebra).dim();
        Self {
            algebra,
            h_basis: Vec::new(),
            m_basis: (0..n).map(|i| unit(n, i)).collect(),
            params: Vec::new(),
        }
    }

    pub fn table(&self) -> BasisTable {
        builtin_basis(self.algebra)
    }

    pub fn is_lie_group(&self) -> bool {
        self.h_basis.is_empty()
    }

    /// Checks subalgebra, basis and `[m, h] ⊆ m` exactly.
    pub fn validate(&self) -> Result<(), ReductiveError> {
        let table = self.table();
        let n = table.dim();
        if self.h_basis.iter().chain(&self.m_basis).any(|v| v.len() != n) {
            return Err(MatLieError::DimensionMismatch {
                expected: n,
                got: self.h_basis.iter().chain(&self.m_basis).map(Vec::len).find(|&l| l != n).unwrap_or(0),
            }
            .into());
        }
        if exact::rank(&self.h_basis) < self.h_basis.len() {
            return Err(ReductiveError::NoComplement);
        }
        check_subalgebra(&table, &self.h_basis)?;
        let all: Vec<Vec<Rational>> = self.m_basis.iter().chain(&self.h_basis).cloned().collect();
        if all.len() != n || exact::determinant(&all).is_zero() {
            return Err(ReductiveError::NotABasis);
        }
        for x in &self.m_basis {
            for w in &self.h_basis {
                let b = table.bracket_abstract(x, w)?;
                let (_, hpart) = split(&self.m_basis, &self.h_basis, &b).ok_or(ReductiveError::NotABasis)?;
                if hpart.iter().any(|v| !v.is_zero()) {
                    return Err(ReductiveError::NotReductive);
                }
            }
        }
        Ok(())
    }

    /// Coordinates over the m basis of the m-component of `z`.
    pub fn m_part(&self, z: &[Rational]) -> Result<Vec<Rational>, ReductiveError> {
        split(&self.m_basis, &self.h_basis, z)
            .map(|(m, _)| m)
            .ok_or(ReductiveError::NotABasis)
    }

    /// Human-readable labels of the m basis, e.g. `e+λu1`.
    pub fn m_labels(&self) -> Vec<String> {
        let table = self.table();
        self.m_basis.iter().map(|v| combination_label(&table, v)).collect()
    }
}

fn check_subalgebra(table: &BasisTable, h: &[Vec<Rational>]) -> Result<(), ReductiveError> {
    let r = h.len();
    for a in h {
        for b in h {
            let c = table.bracket_abstract(a, b)?;
            let mut rows = h.to_vec();
            rows.push(c);
            if exact::rank(&rows) > r {
                return Err(ReductiveError::NotSubalgebra);
            }
        }
    }
    Ok(())
}

fn combination_label(table: &BasisTable, v: &[Rational]) -> String {
    let mut out = String::new();
    for (c, label) in v.iter().zip(&table.labels) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if !out.is_empty() || c.is_negative() {
            out.push(if c.is_negative() { '-' } else { '+' });
        }
        if mag != Rational::one() {
            out.push_str(&format!("({mag})"));
        }
        out.push_str(label);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// The affine family of Lie subspaces complementing a fixed `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceFamily {
    pub algebra: AlgebraId,
    pub h_basis: Vec<Vec<Rational>>,
    /// The fixed complement `m₀` (built-in basis vectors not in h).
    pub complement: Vec<Vec<Rational>>,
    /// Name of each unknown `ℓ[i·dim h + j]`, the coefficient of `h_j` in the lift of `m₀_i`.
    pub unknowns: Vec<String>,
    pub solution: exact::AffineSolution,
}

impl SubspaceFamily {
    /// Names of the free parameters, one per null-space direction.
    pub fn free_params(&self) -> Vec<String> {
        self.solution.free_columns.iter().map(|&c| self.unknowns[c].clone()).collect()
    }

    /// Unknowns that vanish on the whole family.
    pub fn forced_zero(&self) -> Vec<String> {
        (0..self.unknowns.len())
            .filter(|&c| {
                self.solution.particular[c].is_zero() && self.solution.null_space.iter().all(|v| v[c].is_zero())
            })
            .map(|c| self.unknowns[c].clone())
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.solution.null_space.len()
    }

    /// The family as a span, e.g. `⟨u2, u3, e+λu1⟩`; forced-zero unknowns are dropped.
    pub fn describe(&self) -> String {
        let table = builtin_basis(self.algebra);
        let forced = self.forced_zero();
        let k = self.h_basis.len();
        let parts: Vec<String> = self
            .complement
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut label = combination_label(&table, x);
                for (j, w) in self.h_basis.iter().enumerate() {
                    let name = &self.unknowns[i * k + j];
                    if !forced.contains(name) {
                        label.push_str(&format!("+{}{}", pretty_param(name), combination_label(&table, w)));
                    }
                }
                label
            })
            .collect();
        format!("⟨{}⟩", parts.join(", "))
    }

    /// Values of all unknowns for the given free-parameter values.
    pub fn lift(&self, values: &[Rational]) -> Result<Vec<Rational>, ReductiveError> {
        if values.len() != self.num_params() {
            return Err(ReductiveError::ParameterCount {
                expected: self.num_params(),
                got: values.len(),
            });
        }
        let mut l = self.solution.particular.clone();
        for (t, v) in values.iter().zip(&self.solution.null_space) {
            add_scaled(&mut l, *t, v);
        }
        Ok(l)
    }

    pub fn instantiate(&self, values: &[Rational]) -> Result<ReductiveDecomposition, ReductiveError> {
        let l = self.lift(values)?;
        let k = self.h_basis.len();
        let m_basis = self
            .complement
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut v = x.clone();
                for (j, w) in self.h_basis.iter().enumerate() {
                    add_scaled(&mut v, l[i * k + j], w);
                }
                v
            })
            .collect();
        let params = self.free_params().into_iter().zip(values.iter().copied()).collect();
        ReductiveDecomposition::new(self.algebra, self.h_basis.clone(), m_basis, params)
    }
}

/// `lambda_23` ↦ `λ₂₃`.
pub fn pretty_param(name: &str) -> String {
    let sub = |c: char| match c {
        '0'..='9' => char::from_u32('₀' as u32 + c.to_digit(10).unwrap_or(0)).unwrap_or(c),
        other => other,
    };
    match name.strip_prefix("lambda") {
        Some(rest) => std::iter::once('λ').chain(rest.trim_start_matches('_').chars().map(sub)).collect(),
        None => name.to_string(),
    }
}

fn unknown_name(m0_label: &str, h_label: &str, multi_h: bool) -> String {
    let digits: String = m0_label.chars().filter(char::is_ascii_digit).collect();
    let mut name = String::from("lambda");
    if !digits.is_empty() {
        name.push('_');
        name.push_str(&digits);
    }
    if multi_h {
        name.push('_');
        name.push_str(h_label);
    }
    name
}

/// Solves `[h, m] ⊆ m` for all complements that are graphs over `m₀`.
pub fn enumerate_lie_subspaces(algebra: AlgebraId, h_basis: &[Vec<Rational>]) -> Result<SubspaceFamily, ReductiveError> {
    let table = builtin_basis(algebra);
    let n = table.dim();
    if h_basis.iter().any(|v| v.len() != n) {
        return Err(MatLieError::DimensionMismatch {
            expected: n,
            got: h_basis.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
        }
        .into());
    }
    if exact::rank(h_basis) < h_basis.len() {
        return Err(ReductiveError::NoComplement);
    }
    check_subalgebra(&table, h_basis)?;

    let mut complement = Vec::new();
    let mut complement_idx = Vec::new();
    let mut span = h_basis.to_vec();
    for i in 0..n {
        span.push(unit(n, i));
        if exact::rank(&span) == span.len() {
            complement.push(unit(n, i));
            complement_idx.push(i);
        } else {
            span.pop();
        }
    }
    let k = h_basis.len();
    let h_labels: Vec<String> = h_basis.iter().map(|w| combination_label(&table, w)).collect();
    let unknowns: Vec<String> = complement_idx
        .iter()
        .flat_map(|&i| {
            let l = table.labels[i];
            h_labels.iter().map(move |hl| unknown_name(l, hl, k > 1)).collect::<Vec<_>>()
        })
        .collect();
    let nvars = unknowns.len();

    // s[kk][j] = h-coordinates of [h_kk, h_j]
    let mut s = vec![vec![zeros(k); k]; k];
    for (kk, wk) in h_basis.iter().enumerate() {
        for (j, wj) in h_basis.iter().enumerate() {
            let b = table.bracket_abstract(wk, wj)?;
            s[kk][j] = split(&[], h_basis, &b).ok_or(ReductiveError::DegenerateSystem)?.1;
        }
    }

    // For W_kk ∈ h and X_i ∈ m₀ write [W, X_i] = a + b (a ∈ m₀, b ∈ h). Membership of
    // [W, X_i + L X_i] in graph(L) reads b + [W, L X_i] - L(a) = 0.
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (kk, w) in h_basis.iter().enumerate() {
        for (i, x) in complement.iter().enumerate() {
            let z = table.bracket_abstract(w, x)?;
            let (a, b) = split(&complement, h_basis, &z).ok_or(ReductiveError::DegenerateSystem)?;
            for r in 0..k {
                let mut row = zeros(nvars);
                for j in 0..k {
                    row[i * k + j] += s[kk][j][r];
                }
                for (ip, ai) in a.iter().enumerate() {
                    row[ip * k + r] -= ai;
                }
                rows.push(row);
                rhs.push(-b[r]);
            }
        }
    }
    let solution = exact::solve_affine(&rows, &rhs, nvars).ok_or(ReductiveError::DegenerateSystem)?;
    Ok(SubspaceFamily {
        algebra,
        h_basis: h_basis.to_vec(),
        complement,
        unknowns,
        solution,
    })
}

/// `S[a][b][c] = g(T_{X_a} X_b, X_c)` over the m basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OriginTensor {
    pub components: Vec<Vec<Vec<Rational>>>,
    pub frame_labels: Vec<String>,
}

impl OriginTensor {
    pub fn get(&self, a: usize, b: usize, c: usize) -> Rational {
        self.components[a][b][c]
    }

    pub fn to_f64(&self) -> Vec<Vec<Vec<f64>>> {
        self.components
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(|v| exact::to_f64(*v)).collect()).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().flatten().flatten().all(|v| v.is_zero())
    }
}

fn check_spd(g: &[Vec<Rational>], n: usize) -> Result<(), ReductiveError> {
    if g.len() != n || g.iter().any(|r| r.len() != n) {
        return Err(ReductiveError::BadMetric);
    }
    for i in 0..n {
        for j in 0..n {
            if g[i][j] != g[j][i] {
                return Err(ReductiveError::BadMetric);
            }
        }
    }
    for k in 1..=n {
        let minor: Vec<Vec<Rational>> = g[..k].iter().map(|r| r[..k].to_vec()).collect();
        if !exact::determinant(&minor).is_positive() {
            return Err(ReductiveError::BadMetric);
        }
    }
    Ok(())
}

/// Identity Gram matrix: the m basis is declared orthonormal.
pub fn orthonormal_metric(n: usize) -> Vec<Vec<Rational>> {
    (0..n).map(|i| unit(n, i)).collect()
}

/// Structure tensor at the origin of a reductive decomposition.
///
/// With `B(a,b,c) = g([X_a, X_b]_m, X_c)` and `2S_abc = B'(a,b,c) - B'(b,c,a) + B'(c,a,b)`:
/// * trivial `h` (Lie group, left-invariant frame): `B' = B`;
/// * nontrivial `h` (fundamental fields, `[X*, Y*] = -[X, Y]*`): `B' = -B`.
pub fn structure_tensor_at_origin(dec: &ReductiveDecomposition, metric_at_o: &[Vec<Rational>]) -> Result<OriginTensor, ReductiveError> {
    dec.validate()?;
    let table = dec.table();
    let n = dec.m_basis.len();
    check_spd(metric_at_o, n)?;
    let sign = if dec.is_lie_group() { Rational::one() } else { -Rational::one() };
    let mut bmat = vec![vec![zeros(n); n]; n];
    for a in 0..n {
        for b in 0..n {
            let br = table.bracket_abstract(&dec.m_basis[a], &dec.m_basis[b])?;
            let mc = dec.m_part(&br)?;
            for c in 0..n {
                let v: Rational = (0..n).map(|d| mc[d] * metric_at_o[d][c]).sum();
                bmat[a][b][c] = sign * v;
            }
        }
    }
    let half = Rational::new(1, 2);
    let mut s = vec![vec![zeros(n); n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                s[a][b][c] = half * (bmat[a][b][c] - bmat[b][c][a] + bmat[c][a][b]);
            }
        }
    }
    Ok(OriginTensor {
        components: s,
        frame_labels: dec.m_labels(),
    })
}

/// `τ(X) = d/dt exp(tX)·o |_{t=0}` in chart coordinates.
///
/// Central differences at `t` and `t/2` are combined by Richardson extrapolation.
pub fn tau_map(algebra: AlgebraId, x: &[f64], model: &ModelSpace) -> Result<Point, ReductiveError> {
    let coset = model.coset(algebra).ok_or(ReductiveError::ModelMismatch(algebra))?;
    let table = builtin_basis(algebra);
    let el = table.element_f64(x)?;
    let o = model.origin();
    let chart = &model.metric.chart;
    let flow = |t: f64| -> Result<Point, ReductiveError> {
        let g = matlie::matrix_exp(&el.matrix().scale(t), 1e-15)?;
        let p = coset.act(&g, &o);
        if chart.contains(&p) {
            Ok(p)
        } else {
            Err(ReductiveError::ActionUndefined)
        }
    };
    let diff = |t: f64| -> Result<Point, ReductiveError> {
        let d = chart.displacement(&flow(-t)?, &flow(t)?);
        Ok(d.map(|v| v / (2.0 * t)))
    };
    let coarse = diff(TAU_STEP)?;
    let fine = diff(TAU_STEP / 2.0)?;
    let gap = (0..DIM).map(|i| (coarse[i] - fine[i]).abs()).fold(0.0, f64::max);
    if gap > TAU_WARN {
        log::warn!("τ differencing for {algebra} disagrees by {gap:e} between t and t/2");
    }
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    }
    Ok(out)
}

/// τ images of the m basis as matrix columns: `cols[k][a]` is the `k`-th chart component of `τ(X_a)`.
pub fn tau_frame(dec: &ReductiveDecomposition, model: &ModelSpace) -> Result<[[f64; DIM]; DIM], ReductiveError> {
    if dec.m_basis.len() != DIM {
        return Err(ReductiveError::NotABasis);
    }
    let mut cols = [[0.0; DIM]; DIM];
    for (a, x) in dec.m_basis.iter().enumerate() {
        let xf: Vec<f64> = x.iter().map(|v| exact::to_f64(*v)).collect();
        let t = tau_map(dec.algebra, &xf, model)?;
        for k in 0..DIM {
            cols[k][a] = t[k];
        }
    }
    Ok(cols)
}

/// Closed-form fundamental field of `X = (α β; γ δ)` (traceless block of an
/// sl(2,ℝ)⊕ℝ element) at `w = x + iy`: `X*_w = -γw² + (α-δ)w + β`.
/// Returns the chart vector `(Re, Im, ∂z-component)`.
pub fn sl2_fundamental_field(x: &[f64], w: (f64, f64)) -> Result<Point, ReductiveError> {
    let el = builtin_basis(AlgebraId::Sl2rR).element_f64(x)?;
    let m = el.matrix();
    let (alpha, beta, gamma, delta) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let (re, im) = w;
    let (w2r, w2i) = (re * re - im * im, 2.0 * re * im);
    Ok([
        -gamma * w2r + (alpha - delta) * re + beta,
        -gamma * w2i + (alpha - delta) * im,
        m.get(2, 2),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn h1(algebra: AlgebraId) -> Vec<Vec<Rational>> {
        vec![unit(builtin_basis(algebra).dim(), 0)]
    }

    #[test]
    fn so3_family_forces_lambda2_lambda3() {
        let fam = enumerate_lie_subspaces(AlgebraId::So3R, &h1(AlgebraId::So3R)).unwrap();
        assert_eq!(fam.num_params(), 1);
        assert_eq!(fam.free_params(), vec!["lambda".to_string()]);
        assert_eq!(fam.forced_zero(), vec!["lambda_2".to_string(), "lambda_3".to_string()]);
        let dec = fam.instantiate(&[q(3)]).unwrap();
        assert_eq!(dec.m_labels(), vec!["u2", "u3", "(3)u1+e"]);
        assert_eq!(fam.describe(), "⟨u2, u3, e+λu1⟩");
        assert_eq!(pretty_param("lambda_3"), "λ₃");
    }

    #[test]
    fn sl2_family_has_same_shape() {
        let fam = enumerate_lie_subspaces(AlgebraId::Sl2rR, &h1(AlgebraId::Sl2rR)).unwrap();
        assert_eq!(fam.free_params(), vec!["lambda".to_string()]);
        assert_eq!(fam.forced_zero(), vec!["lambda_2".to_string(), "lambda_3".to_string()]);
        let dec = fam.instantiate(&[Rational::new(1, 2)]).unwrap();
        assert_eq!(dec.m_basis[2], vec![Rational::new(1, 2), q(0), q(0), q(1)]);
    }

    #[test]
    fn solvable_group_has_only_the_trivial_family() {
        let fam = enumerate_lie_subspaces(AlgebraId::Solv, &[]).unwrap();
        assert_eq!(fam.num_params(), 0);
        assert!(fam.unknowns.is_empty());
        let dec = fam.instantiate(&[]).unwrap();
        assert_eq!(dec, ReductiveDecomposition::lie_group(AlgebraId::Solv));
    }

    #[test]
    fn dependent_or_non_subalgebra_h_is_rejected() {
        let u1 = unit(4, 0);
        assert_eq!(
            enumerate_lie_subspaces(AlgebraId::So3R, &[u1.clone(), u1.clone()]),
            Err(ReductiveError::NoComplement)
        );
        // span{u1, u2} is not closed: [u1,u2] = u3
        assert_eq!(
            enumerate_lie_subspaces(AlgebraId::So3R, &[u1, unit(4, 1)]),
            Err(ReductiveError::NotSubalgebra)
        );
    }

    #[test]
    fn non_invariant_complement_is_not_reductive() {
        // m = span{u2 + u1, u3, e} violates [m, h] ⊆ m
        let m = vec![vec![q(1), q(1), q(0), q(0)], unit(4, 2), unit(4, 3)];
        let err = ReductiveDecomposition::new(AlgebraId::So3R, h1(AlgebraId::So3R), m, vec![]);
        assert_eq!(err, Err(ReductiveError::NotReductive));
    }

    #[test]
    fn s2xr_origin_tensor_entries() {
        let fam = enumerate_lie_subspaces(AlgebraId::So3R, &h1(AlgebraId::So3R)).unwrap();
        let lam = Rational::new(3, 2);
        let s = structure_tensor_at_origin(&fam.instantiate(&[lam]).unwrap(), &orthonormal_metric(3)).unwrap();
        // frame (u2, u3, e+λu1); only S(3,1,2) = -S(3,2,1) survive
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let expected = match (a, b, c) {
                        (2, 0, 1) => -lam,
                        (2, 1, 0) => lam,
                        _ => q(0),
                    };
                    assert_eq!(s.get(a, b, c), expected, "({a},{b},{c})");
                }
            }
        }
        let zero = structure_tensor_at_origin(&fam.instantiate(&[q(0)]).unwrap(), &orthonormal_metric(3)).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn solvable_origin_tensor_matches_frame_table() {
        let s = structure_tensor_at_origin(&ReductiveDecomposition::lie_group(AlgebraId::Solv), &orthonormal_metric(3)).unwrap();
        assert_eq!(s.get(0, 0, 1), q(1));
        assert_eq!(s.get(0, 1, 0), q(-1));
        let nonzero = s.components.iter().flatten().flatten().filter(|v| !v.is_zero()).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let dec = ReductiveDecomposition::lie_group(AlgebraId::Solv);
        let mut g = orthonormal_metric(3);
        g[2][2] = q(-1);
        assert_eq!(structure_tensor_at_origin(&dec, &g), Err(ReductiveError::BadMetric));
    }

    fn near(a: &Point, b: &Point, tol: f64) -> bool {
        (0..DIM).all(|i| (a[i] - b[i]).abs() < tol)
    }

    #[test]
    fn tau_on_s2xr_matches_coordinate_vectors() {
        let m = ModelSpace::s2xr();
        // ∂x² = ∂φ, ∂x³ = -∂θ
        let cases = [
            ([0.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            ([0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0]),
            ([0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
            ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
        ];
        for (x, expected) in cases {
            let t = tau_map(AlgebraId::So3R, &x, &m).unwrap();
            assert!(near(&t, &expected, 1e-9), "{x:?} -> {t:?}");
        }
    }

    #[test]
    fn tau_on_h2xr_matches_coordinate_vectors() {
        let m = ModelSpace::h2xr();
        let v3 = tau_map(AlgebraId::Sl2rR, &[0.0, 0.0, 1.0, 0.0], &m).unwrap();
        assert!(near(&v3, &[0.0, -1.0, 0.0], 1e-9));
        let v2 = tau_map(AlgebraId::Sl2rR, &[0.0, 1.0, 0.0, 0.0], &m).unwrap();
        assert!(near(&v2, &[1.0, 0.0, 0.0], 1e-9));
        let e = tau_map(AlgebraId::Sl2rR, &[0.0, 0.0, 0.0, 1.0], &m).unwrap();
        assert!(near(&e, &[0.0, 0.0, 1.0], 1e-9));
        for (i, expected) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
            let mut x = [0.0; 3];
            x[i] = 1.0;
            assert!(near(&tau_map(AlgebraId::Solv, &x, &m).unwrap(), expected, 1e-9));
        }
    }

    #[test]
    fn tau_agrees_with_closed_sl2_field() {
        let m = ModelSpace::h2xr();
        for x in [[0.3, -1.2, 0.7, 0.4], [1.0, 1.0, 1.0, -2.0], [0.0, 0.5, -0.25, 0.0]] {
            let fd = tau_map(AlgebraId::Sl2rR, &x, &m).unwrap();
            let closed = sl2_fundamental_field(&x, (0.0, 1.0)).unwrap();
            assert!(near(&fd, &closed, 1e-9), "{fd:?} vs {closed:?}");
        }
    }

    #[test]
    fn tau_rejects_foreign_algebra() {
        let m = ModelSpace::s2xr();
        assert_eq!(
            tau_map(AlgebraId::Sl2rR, &[1.0, 0.0, 0.0, 0.0], &m),
            Err(ReductiveError::ModelMismatch(AlgebraId::Sl2rR))
        );
    }
}

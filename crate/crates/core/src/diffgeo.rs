//! Chart-based tensor calculus in three dimensions.
//!
//! Fields are closures from chart points to component arrays. Derivatives of
//! components are central differences; Christoffel symbols come either from a
//! closed form supplied with the metric or from differencing the metric.
//!
//! Index conventions:
//! * `Γ[k][i][j] = Γ^k_ij` with `∇_{∂i} ∂j = Γ^k_ij ∂k`.
//! * `R^l_ijk` with `R(∂i, ∂j) ∂k = R^l_ijk ∂l`, stored in the order `[l, i, j, k]`;
//!   the lowered form is `R_lijk = g(R(∂i, ∂j) ∂k, ∂l)`.
//! * A (0,3) structure tensor `T_ijk = g(T_{∂i} ∂j, ∂k)`; its (1,2) form is
//!   `T^k_ij` and the torsionful connection is `Γ̃^k_ij = Γ^k_ij - T^k_ij`.
//! * The covariant derivative places the differentiation slot first:
//!   `(∇T)[d, ...] = (∇_{∂d} T)[...]`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub const DIM: usize = 3;
/// Step for first derivatives of fields.
pub const FD_STEP: f64 = 1e-5;
/// Step for the derivatives of Christoffel symbols inside the curvature.
pub const FD_STEP_CURVATURE: f64 = 1e-4;
/// Determinant threshold below which a metric counts as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Off-block tolerance accepted by [`wedge_area_form`].
pub const PRODUCT_TOL: f64 = 1e-12;

pub type Point = [f64; DIM];
pub type Mat3 = [[f64; DIM]; DIM];
/// `Γ[k][i][j] = Γ^k_ij`.
pub type Christoffel = [[[f64; DIM]; DIM]; DIM];
/// `dΓ[d][k][i][j] = ∂_d Γ^k_ij`.
pub type ChristoffelDerivative = [Christoffel; DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Point),
    #[error("metric is singular at {point:?} (det {det:e})")]
    SingularMetric { point: Point, det: f64 },
    #[error("metric is not block-diagonal across the surface and line slots (defect {0:e})")]
    NotProductMetric(f64),
    #[error("no closed-form Christoffel symbols for this metric")]
    NoClosedForm,
    #[error("slot {slot} is invalid for a tensor with {rank} slots")]
    InvalidSlot { slot: usize, rank: usize },
    #[error("slot {0} already has the requested variance")]
    AlreadyInVariance(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

/// Components of a tensor at one point, one index per slot, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    slots: Vec<Variance>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(slots: Vec<Variance>) -> Self {
        let n = DIM.pow(slots.len() as u32);
        Self {
            slots,
            data: vec![0.0; n],
        }
    }

    /// Fully covariant tensor of the given rank.
    pub fn covariant(rank: usize) -> Self {
        Self::zeros(vec![Variance::Down; rank])
    }

    pub fn from_fn(slots: Vec<Variance>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(slots);
        let mut idx = vec![0; t.rank()];
        for flat in 0..t.data.len() {
            unflatten(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    /// Number of (upper, lower) slots.
    pub fn valence(&self) -> (usize, usize) {
        let up = self.slots.iter().filter(|v| **v == Variance::Up).count();
        (up, self.rank() - up)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flatten(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        self.data[flatten(idx)] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.slots, other.slots, "tensor slot mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        assert_eq!(self.slots, other.slots, "tensor slot mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Tensor {
        Tensor {
            slots: self.slots.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Contract every slot with the matching leg of `legs[slot]`:
    /// `out[a..] = Σ T[i..] legs[0][i][a] ...`. All slots must share variance
    /// handling decided by the caller.
    fn transform(&self, legs: &[&Mat3]) -> Tensor {
        let mut cur = self.data.clone();
        let rank = self.rank();
        for (slot, m) in legs.iter().enumerate() {
            let mut next = vec![0.0; cur.len()];
            let stride = DIM.pow((rank - 1 - slot) as u32);
            for (flat, out) in next.iter_mut().enumerate() {
                let a = (flat / stride) % DIM;
                let base = flat - a * stride;
                *out = (0..DIM).map(|i| cur[base + i * stride] * m[i][a]).sum();
            }
            cur = next;
        }
        Tensor {
            slots: self.slots.clone(),
            data: cur,
        }
    }
}

fn flatten(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| {
        debug_assert!(i < DIM);
        acc * DIM + i
    })
}

fn unflatten(mut flat: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % DIM;
        flat /= DIM;
    }
}

type DomainFn = Arc<dyn Fn(&Point) -> bool + Send + Sync>;
type MatFn = Arc<dyn Fn(&Point) -> Mat3 + Send + Sync>;
type ChristoffelFn = Arc<dyn Fn(&Point) -> Christoffel + Send + Sync>;
type ChristoffelDerivFn = Arc<dyn Fn(&Point) -> ChristoffelDerivative + Send + Sync>;
type TensorFn = Arc<dyn Fn(&Point) -> Tensor + Send + Sync>;

/// A coordinate chart: labels, domain, origin and the compact box used for sampling.
#[derive(Clone)]
pub struct Chart {
    pub name: String,
    pub labels: [&'static str; DIM],
    pub origin: Point,
    /// Sub-box of the domain from which verification samples are drawn.
    pub sample_box: [(f64, f64); DIM],
    /// Period of each coordinate, if it is an angle.
    pub periods: [Option<f64>; DIM],
    domain: DomainFn,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("labels", &self.labels)
            .field("origin", &self.origin)
            .finish_non_exhaustive()
    }
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        labels: [&'static str; DIM],
        origin: Point,
        sample_box: [(f64, f64); DIM],
        periods: [Option<f64>; DIM],
        domain: impl Fn(&Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        let chart = Self {
            name: name.into(),
            labels,
            origin,
            sample_box,
            periods,
            domain: Arc::new(domain),
        };
        assert!(chart.contains(&origin), "chart origin must lie in the domain");
        chart
    }

    /// The whole of ℝ³ with Cartesian labels.
    pub fn euclidean() -> Self {
        Self::new(
            "euclidean",
            ["x", "y", "z"],
            [0.0; DIM],
            [(-1.0, 1.0); DIM],
            [None; DIM],
            |p| p.iter().all(|v| v.is_finite()),
        )
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.iter().all(|v| v.is_finite()) && (self.domain)(p)
    }

    /// Whether the axis-aligned stencil `p ± k·h·e_i`, `k ≤ reach`, stays in the domain.
    pub fn stencil_in_domain(&self, p: &Point, h: f64, reach: usize) -> bool {
        (0..DIM).all(|i| {
            (1..=reach).all(|k| {
                let s = k as f64 * h;
                self.contains(&offset(p, i, s)) && self.contains(&offset(p, i, -s))
            })
        })
    }

    /// `b - a` with periodic coordinates wrapped into `(-period/2, period/2]`.
    pub fn displacement(&self, a: &Point, b: &Point) -> Point {
        let mut d = [0.0; DIM];
        for i in 0..DIM {
            d[i] = b[i] - a[i];
            if let Some(period) = self.periods[i] {
                d[i] -= period * (d[i] / period).round();
            }
        }
        d
    }

    /// Deterministic `3×3×3` grid over the sampling box.
    pub fn grid_points(&self) -> Vec<Point> {
        let axis = |i: usize| {
            let (lo, hi) = self.sample_box[i];
            [lo, 0.5 * (lo + hi), hi]
        };
        let mut out = Vec::with_capacity(27);
        for a in axis(0) {
            for b in axis(1) {
                for c in axis(2) {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }
}

pub(crate) fn offset(p: &Point, axis: usize, s: f64) -> Point {
    let mut q = *p;
    q[axis] += s;
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChristoffelMode {
    ClosedForm,
    FiniteDiff,
}

/// A Riemannian metric `g_ij(p)` on a chart.
#[derive(Clone)]
pub struct MetricField {
    pub chart: Chart,
    components: MatFn,
    closed_christoffel: Option<ChristoffelFn>,
    closed_christoffel_derivative: Option<ChristoffelDerivFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("chart", &self.chart)
            .field("closed_christoffel", &self.closed_christoffel.is_some())
            .finish()
    }
}

impl MetricField {
    pub fn new(chart: Chart, components: impl Fn(&Point) -> Mat3 + Send + Sync + 'static) -> Self {
        Self {
            chart,
            components: Arc::new(components),
            closed_christoffel: None,
            closed_christoffel_derivative: None,
        }
    }

    pub fn with_closed_christoffel(mut self, f: impl Fn(&Point) -> Christoffel + Send + Sync + 'static) -> Self {
        self.closed_christoffel = Some(Arc::new(f));
        self
    }

    /// Closed-form `∂Γ`, used by [`curvature`] in closed-form mode instead of the stencil.
    pub fn with_closed_christoffel_derivative(
        mut self,
        f: impl Fn(&Point) -> ChristoffelDerivative + Send + Sync + 'static,
    ) -> Self {
        self.closed_christoffel_derivative = Some(Arc::new(f));
        self
    }

    /// The same metric with the closed-form `∂Γ` dropped, so curvature falls back to the stencil.
    pub fn without_closed_derivative(&self) -> Self {
        Self {
            closed_christoffel_derivative: None,
            ..self.clone()
        }
    }

    pub fn euclidean() -> Self {
        Self::new(Chart::euclidean(), |_| identity3())
            .with_closed_christoffel(|_| [[[0.0; DIM]; DIM]; DIM])
            .with_closed_christoffel_derivative(|_| [[[[0.0; DIM]; DIM]; DIM]; DIM])
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_christoffel.is_some()
    }

    pub fn at(&self, p: &Point) -> Result<Mat3, GeoError> {
        if !self.chart.contains(p) {
            return Err(GeoError::OutsideDomain(*p));
        }
        Ok((self.components)(p))
    }

    pub fn inverse_at(&self, p: &Point) -> Result<Mat3, GeoError> {
        invert3(&self.at(p)?).ok_or(GeoError::SingularMetric {
            point: *p,
            det: det3(&self.at(p)?),
        })
    }

    /// The metric as a (0,2) tensor field.
    pub fn as_field(&self) -> TensorField {
        let g = self.components.clone();
        TensorField::new(vec![Variance::Down; 2], move |p| {
            let m = g(p);
            Tensor::from_fn(vec![Variance::Down; 2], |i| m[i[0]][i[1]])
        })
    }

    /// `g(u, v)` at `p`.
    pub fn inner(&self, p: &Point, u: &Point, v: &Point) -> Result<f64, GeoError> {
        let g = self.at(p)?;
        Ok((0..DIM).map(|i| (0..DIM).map(|j| g[i][j] * u[i] * v[j]).sum::<f64>()).sum())
    }
}

/// A tensor field given by a component closure.
#[derive(Clone)]
pub struct TensorField {
    slots: Vec<Variance>,
    eval: TensorFn,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField").field("slots", &self.slots).finish_non_exhaustive()
    }
}

impl TensorField {
    pub fn new(slots: Vec<Variance>, eval: impl Fn(&Point) -> Tensor + Send + Sync + 'static) -> Self {
        assert!(slots.len() <= 4, "valence r+s must not exceed 4");
        Self {
            slots,
            eval: Arc::new(eval),
        }
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn at(&self, p: &Point) -> Tensor {
        let t = (self.eval)(p);
        debug_assert_eq!(t.slots, self.slots);
        t
    }

    pub fn zero(slots: Vec<Variance>) -> Self {
        let s = slots.clone();
        Self::new(slots, move |_| Tensor::zeros(s.clone()))
    }

    pub fn sum(&self, other: &TensorField) -> TensorField {
        assert_eq!(self.slots, other.slots, "tensor slot mismatch");
        let (a, b) = (self.clone(), other.clone());
        TensorField::new(self.slots.clone(), move |p| {
            let mut t = a.at(p);
            t.axpy(1.0, &b.at(p));
            t
        })
    }

    pub fn scaled(&self, s: f64) -> TensorField {
        let a = self.clone();
        TensorField::new(self.slots.clone(), move |p| a.at(p).scaled(s))
    }
}

type CoeffFn = dyn Fn(&Point) -> Result<Christoffel, GeoError> + Send + Sync;

/// An affine connection given by its coefficients.
#[derive(Clone)]
pub struct ConnectionField {
    pub chart: Chart,
    coeffs: Arc<CoeffFn>,
    pub torsion_free: bool,
}

impl fmt::Debug for ConnectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionField")
            .field("chart", &self.chart)
            .field("torsion_free", &self.torsion_free)
            .finish_non_exhaustive()
    }
}

impl ConnectionField {
    pub fn levi_civita(metric: &MetricField, mode: ChristoffelMode) -> Self {
        let m = metric.clone();
        Self {
            chart: metric.chart.clone(),
            coeffs: Arc::new(move |p| christoffel(&m, p, mode)),
            torsion_free: true,
        }
    }

    /// `∇̃ = ∇ - T` for a (0,3) tensor `T_ijk = g(T_{∂i}∂j, ∂k)`.
    pub fn with_structure_tensor(metric: &MetricField, mode: ChristoffelMode, structure: &TensorField) -> Self {
        assert_eq!(structure.slots(), &[Variance::Down; 3], "structure tensor must be (0,3)");
        let m = metric.clone();
        let t = structure.clone();
        Self {
            chart: metric.chart.clone(),
            coeffs: Arc::new(move |p| {
                let mut gamma = christoffel(&m, p, mode)?;
                let ginv = m.inverse_at(p)?;
                let tl = t.at(p);
                for k in 0..DIM {
                    for i in 0..DIM {
                        for j in 0..DIM {
                            let tk: f64 = (0..DIM).map(|l| ginv[k][l] * tl.get(&[i, j, l])).sum();
                            gamma[k][i][j] -= tk;
                        }
                    }
                }
                Ok(gamma)
            }),
            torsion_free: false,
        }
    }

    pub fn at(&self, p: &Point) -> Result<Christoffel, GeoError> {
        if !self.chart.contains(p) {
            return Err(GeoError::OutsideDomain(*p));
        }
        (self.coeffs)(p)
    }
}

pub fn identity3() -> Mat3 {
    let mut m = [[0.0; DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn invert3(m: &Mat3) -> Option<Mat3> {
    let det = det3(m);
    if det.abs() < SINGULAR_TOL || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    Some(inv)
}

/// Columns form a `g`-orthonormal frame: `Eᵀ g E = I` (lower-triangular Cholesky based).
pub fn orthonormal_frame(g: &Mat3) -> Option<Mat3> {
    let mut l = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = g[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    // E = L^{-T}
    let linv = invert3(&l)?;
    let mut e = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            e[i][j] = linv[j][i];
        }
    }
    Some(e)
}

/// Components in the orthonormal frame of [`orthonormal_frame`]. Lower slots
/// are evaluated on frame vectors, upper slots on the dual coframe.
pub fn frame_components(t: &Tensor, g: &Mat3) -> Option<Tensor> {
    let e = orthonormal_frame(g)?;
    // dual coframe θ^a = Σ_k (E^{-1})[a][k] dx^k; as a leg: out[a] = Σ_k T[k] (E^{-1})[a][k]
    let einv = invert3(&e)?;
    let mut einv_t = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            einv_t[i][j] = einv[j][i];
        }
    }
    let legs: Vec<&Mat3> = t
        .slots
        .iter()
        .map(|v| match v {
            Variance::Down => &e,
            Variance::Up => &einv_t,
        })
        .collect();
    Some(t.transform(&legs))
}

/// Max absolute component in a `g`-orthonormal frame.
pub fn frame_max_norm(t: &Tensor, g: &Mat3) -> Option<f64> {
    frame_components(t, g).map(|f| f.max_abs())
}

/// Full `g`-norm `√(T·T)` with all slots contracted.
pub fn tensor_norm(t: &Tensor, g: &Mat3) -> Option<f64> {
    frame_components(t, g).map(|f| f.data.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn central_diff<const N: usize>(f: impl Fn(&Point) -> [f64; N], p: &Point, axis: usize, h: f64) -> [f64; N] {
    let a = f(&offset(p, axis, h));
    let b = f(&offset(p, axis, -h));
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (a[i] - b[i]) / (2.0 * h);
    }
    out
}

fn flat9(m: &Mat3) -> [f64; 9] {
    let mut o = [0.0; 9];
    for i in 0..DIM {
        for j in 0..DIM {
            o[i * DIM + j] = m[i][j];
        }
    }
    o
}

fn flat27(c: &Christoffel) -> [f64; 27] {
    let mut o = [0.0; 27];
    for k in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                o[(k * DIM + i) * DIM + j] = c[k][i][j];
            }
        }
    }
    o
}

/// Christoffel symbols of the Levi-Civita connection at `p`.
pub fn christoffel(metric: &MetricField, p: &Point, mode: ChristoffelMode) -> Result<Christoffel, GeoError> {
    let ginv = metric.inverse_at(p)?;
    match mode {
        ChristoffelMode::ClosedForm => {
            let f = metric.closed_christoffel.as_ref().ok_or(GeoError::NoClosedForm)?;
            Ok(f(p))
        }
        ChristoffelMode::FiniteDiff => {
            if !metric.chart.stencil_in_domain(p, 2.0 * FD_STEP, 1) {
                return Err(GeoError::OutsideDomain(*p));
            }
            // dg[l][i][j] = ∂_l g_ij
            let mut dg = [[[0.0; DIM]; DIM]; DIM];
            for (l, slab) in dg.iter_mut().enumerate() {
                let d = central_diff(|q| flat9(&(metric.components)(q)), p, l, FD_STEP);
                for i in 0..DIM {
                    for j in 0..DIM {
                        slab[i][j] = d[i * DIM + j];
                    }
                }
            }
            let mut gamma = [[[0.0; DIM]; DIM]; DIM];
            for (k, gk) in gamma.iter_mut().enumerate() {
                for i in 0..DIM {
                    for j in 0..DIM {
                        gk[i][j] = 0.5
                            * (0..DIM)
                                .map(|l| ginv[k][l] * (dg[j][l][i] + dg[i][l][j] - dg[l][i][j]))
                                .sum::<f64>();
                    }
                }
            }
            Ok(gamma)
        }
    }
}

fn christoffel_derivative_fd(metric: &MetricField, p: &Point, mode: ChristoffelMode) -> Result<ChristoffelDerivative, GeoError> {
    let mut dgamma = [[[[0.0; DIM]; DIM]; DIM]; DIM];
    let h = FD_STEP_CURVATURE;
    for (d, slab) in dgamma.iter_mut().enumerate() {
        let at = |s: f64| christoffel(metric, &offset(p, d, s * h), mode).map(|c| flat27(&c));
        let (f2, f1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
        for k in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    let n = (k * DIM + i) * DIM + j;
                    slab[k][i][j] = (-f2[n] + 8.0 * f1[n] - 8.0 * m1[n] + m2[n]) / (12.0 * h);
                }
            }
        }
    }
    Ok(dgamma)
}

/// `R^l_ijk` at `p`, slots `[Up, Down, Down, Down]`.
///
/// `∂Γ` is taken in closed form when the metric provides it and `mode` is
/// closed-form; otherwise from a five-point central stencil with step
/// [`FD_STEP_CURVATURE`].
pub fn curvature(metric: &MetricField, p: &Point, mode: ChristoffelMode) -> Result<Tensor, GeoError> {
    if !metric.chart.stencil_in_domain(p, FD_STEP_CURVATURE, 2) {
        return Err(GeoError::OutsideDomain(*p));
    }
    let gamma = christoffel(metric, p, mode)?;
    let dgamma = match (&metric.closed_christoffel_derivative, mode) {
        (Some(f), ChristoffelMode::ClosedForm) => f(p),
        _ => christoffel_derivative_fd(metric, p, mode)?,
    };
    Ok(Tensor::from_fn(
        vec![Variance::Up, Variance::Down, Variance::Down, Variance::Down],
        |ix| {
            let (l, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut r = dgamma[i][l][j][k] - dgamma[j][l][i][k];
            for m in 0..DIM {
                r += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
            }
            r
        },
    ))
}

/// `R_lijk = g_lm R^m_ijk`.
pub fn curvature_lowered(metric: &MetricField, p: &Point, mode: ChristoffelMode) -> Result<Tensor, GeoError> {
    let r = curvature(metric, p, mode)?;
    raise_lower(metric, &r, 0, Variance::Down, p)
}

/// The lowered curvature as a (0,4) field. Evaluation outside the domain yields NaN.
pub fn curvature_field(metric: &MetricField, mode: ChristoffelMode) -> TensorField {
    let m = metric.clone();
    TensorField::new(vec![Variance::Down; 4], move |p| {
        curvature_lowered(&m, p, mode).unwrap_or_else(|_| Tensor::from_fn(vec![Variance::Down; 4], |_| f64::NAN))
    })
}

/// Sectional curvature of the plane spanned by `∂a, ∂b`.
pub fn sectional_curvature(
    metric: &MetricField,
    p: &Point,
    a: usize,
    b: usize,
    mode: ChristoffelMode,
) -> Result<f64, GeoError> {
    let r = curvature_lowered(metric, p, mode)?;
    let g = metric.at(p)?;
    Ok(r.get(&[a, a, b, b]) / (g[a][a] * g[b][b] - g[a][b] * g[a][b]))
}

/// Covariant derivative `∇T` at `p`; the new lower slot comes first.
pub fn covariant_derivative(conn: &ConnectionField, field: &TensorField, p: &Point, h: f64) -> Result<Tensor, GeoError> {
    if !conn.chart.contains(p) || !conn.chart.stencil_in_domain(p, h, 1) {
        return Err(GeoError::OutsideDomain(*p));
    }
    let gamma = conn.at(p)?;
    let t = field.at(p);
    let partials: Vec<Tensor> = (0..DIM)
        .map(|d| {
            let mut plus = field.at(&offset(p, d, h));
            plus.axpy(-1.0, &field.at(&offset(p, d, -h)));
            plus.scaled(1.0 / (2.0 * h))
        })
        .collect();
    let mut slots = vec![Variance::Down];
    slots.extend_from_slice(field.slots());
    let rank = t.rank();
    let mut idx_buf = vec![0usize; rank];
    let out = Tensor::from_fn(slots, |ix| {
        let d = ix[0];
        let rest = &ix[1..];
        let mut v = partials[d].get(rest);
        idx_buf.copy_from_slice(rest);
        for (s, var) in t.slots().iter().enumerate() {
            let orig = rest[s];
            for m in 0..DIM {
                idx_buf[s] = m;
                let c = match var {
                    Variance::Up => gamma[orig][d][m],
                    Variance::Down => -gamma[m][d][orig],
                };
                if c != 0.0 {
                    v += c * t.get(&idx_buf);
                }
            }
            idx_buf[s] = orig;
        }
        v
    });
    if !out.is_finite() {
        return Err(GeoError::OutsideDomain(*p));
    }
    Ok(out)
}

/// Raise or lower one slot by contraction with `g^{-1}` or `g` at `p`.
pub fn raise_lower(metric: &MetricField, t: &Tensor, slot: usize, direction: Variance, p: &Point) -> Result<Tensor, GeoError> {
    if slot >= t.rank() {
        return Err(GeoError::InvalidSlot { slot, rank: t.rank() });
    }
    if t.slots[slot] == direction {
        return Err(GeoError::AlreadyInVariance(slot));
    }
    let m = match direction {
        Variance::Up => metric.inverse_at(p)?,
        Variance::Down => metric.at(p)?,
    };
    let mut slots = t.slots.clone();
    slots[slot] = direction;
    let mut buf = vec![0usize; t.rank()];
    Ok(Tensor::from_fn(slots, |ix| {
        buf.copy_from_slice(ix);
        (0..DIM)
            .map(|k| {
                buf[slot] = k;
                m[ix[slot]][k] * t.get(&buf)
            })
            .sum()
    }))
}

/// The metric area form `± √det(g_surface) dx^i ∧ dx^j` of the surface factor
/// spanned by coordinates `i, j` (with `α∧β = α⊗β - β⊗α`).
///
/// The metric must be block-diagonal between the surface slots and the
/// remaining line slot; this is checked on the chart's sampling grid.
pub fn wedge_area_form(metric: &MetricField, slots: (usize, usize), orientation_sign: f64) -> Result<TensorField, GeoError> {
    let (i, j) = slots;
    if i >= DIM || j >= DIM || i == j {
        return Err(GeoError::InvalidSlot { slot: i.max(j), rank: DIM });
    }
    let line = 3 - i - j;
    let mut points = metric.chart.grid_points();
    points.push(metric.chart.origin);
    for p in &points {
        let g = metric.at(p)?;
        let defect = g[i][line].abs().max(g[j][line].abs()).max(g[line][i].abs()).max(g[line][j].abs());
        if defect > PRODUCT_TOL {
            return Err(GeoError::NotProductMetric(defect));
        }
    }
    let m = metric.clone();
    let sign = orientation_sign.signum();
    Ok(TensorField::new(vec![Variance::Down; 2], move |p| {
        let g = (m.components)(p);
        let area = (g[i][i] * g[j][j] - g[i][j] * g[j][i]).sqrt() * sign;
        let mut t = Tensor::covariant(2);
        t.set(&[i, j], area);
        t.set(&[j, i], -area);
        t
    }))
}

/// `α ⊗ β` for a 1-form and a 2-form field.
pub fn one_form_tensor_two_form(alpha: &TensorField, beta: &TensorField) -> TensorField {
    assert_eq!(alpha.slots(), &[Variance::Down]);
    assert_eq!(beta.slots(), &[Variance::Down; 2]);
    let (a, b) = (alpha.clone(), beta.clone());
    TensorField::new(vec![Variance::Down; 3], move |p| {
        let (x, y) = (a.at(p), b.at(p));
        Tensor::from_fn(vec![Variance::Down; 3], |ix| x.get(&ix[..1]) * y.get(&ix[1..]))
    })
}

/// A 1-form field `Σ c_k(p) dx^k`.
pub fn one_form(coeffs: impl Fn(&Point) -> Point + Send + Sync + 'static) -> TensorField {
    TensorField::new(vec![Variance::Down], move |p| {
        let c = coeffs(p);
        Tensor::from_fn(vec![Variance::Down], |ix| c[ix[0]])
    })
}

/// `α ∧ β = α⊗β - β⊗α` of two 1-form fields.
pub fn wedge(alpha: &TensorField, beta: &TensorField) -> TensorField {
    let (a, b) = (alpha.clone(), beta.clone());
    TensorField::new(vec![Variance::Down; 2], move |p| {
        let (x, y) = (a.at(p), b.at(p));
        Tensor::from_fn(vec![Variance::Down; 2], |ix| {
            x.get(&[ix[0]]) * y.get(&[ix[1]]) - y.get(&[ix[0]]) * x.get(&[ix[1]])
        })
    })
}

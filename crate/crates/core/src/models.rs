//! The model spaces S²×ℝ and H²×ℝ: charts, metrics, group actions,
//! isometries and the closed-form structure tensors.
//!
//! S²×ℝ uses spherical coordinates `(θ, φ, y)` on the hyperquadric
//! `(x¹)²+(x²)²+(x³)² = 1` of ℝ⁴, `x = (sinθ cosφ, sinθ sinφ, cosθ)`, with
//! origin `(1,0,0,0) ↔ (π/2, 0, 0)`; there `∂φ = ∂x²` and `∂θ = -∂x³`.
//! Points of the hyperquadric are row vectors and `block-diag(A, e^s)` acts
//! by `(x, y) ↦ (x·A, y + s)`.
//!
//! H²×ℝ uses the upper half-space `(x, y, z)`, `y > 0`, with origin `(0,1,0)`.
//! `(A, e^s)` acts by a Möbius transformation on `w = x + iy` and translation
//! in `z`; the solvable group `((y0, x0, 0), (0, 1, 0), (0, 0, e^z0))` acts by
//! left multiplication `(x, y, z) ↦ (x0 + y0·x, y0·y, z0 + z)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use thiserror::Error;

use crate::diffgeo::{
    self, one_form, one_form_tensor_two_form, wedge, wedge_area_form, Chart, Christoffel, ChristoffelDerivative, GeoError, Mat3, MetricField,
    Point, Tensor, TensorField, Variance, DIM,
};
use crate::matlie::{builtin_basis, matrix_exp, AlgebraId, SquareMatrix};
use crate::Rational;

/// Step of the central differences used for Jacobians of maps.
pub const JACOBIAN_STEP: f64 = 1e-5;

pub const COSET_S2XR: &str = "SO(3)×ℝ/SO(2)";
pub const COSET_H2XR_SL2: &str = "SL(2,ℝ)×ℝ/SO(2)";
pub const COSET_H2XR_SOLV: &str = "H²×ℝ/{Id}";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("structure {label} is not defined on {space}")]
    LabelMismatch { space: SpaceKind, label: String },
    #[error("only covariant tensor fields can be pulled back")]
    NotCovariant,
    #[error("no group element found mapping the origin to {0:?}")]
    NoWitness(Point),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    S2xR,
    H2xR,
}

impl SpaceKind {
    /// Command-line name.
    pub fn key(self) -> &'static str {
        match self {
            SpaceKind::S2xR => "s2xr",
            SpaceKind::H2xR => "h2xr",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "s2xr" => Some(SpaceKind::S2xR),
            "h2xr" => Some(SpaceKind::H2xR),
            _ => None,
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::S2xR => "S²×ℝ",
            SpaceKind::H2xR => "H²×ℝ",
        })
    }
}

type ActionFn = Arc<dyn Fn(&SquareMatrix, &Point) -> Point + Send + Sync>;
type WitnessFn = Arc<dyn Fn(&Point) -> Option<SquareMatrix> + Send + Sync>;

/// One way of writing the space as `G/H`.
#[derive(Clone)]
pub struct CosetRepresentation {
    pub algebra: AlgebraId,
    pub isotropy: Vec<Vec<Rational>>,
    pub tag: &'static str,
    /// `true` when group elements act from the right (`p·g`).
    pub right_action: bool,
    action: ActionFn,
    witness: WitnessFn,
}

impl fmt::Debug for CosetRepresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CosetRepresentation")
            .field("algebra", &self.algebra)
            .field("tag", &self.tag)
            .finish_non_exhaustive()
    }
}

impl CosetRepresentation {
    pub fn act(&self, g: &SquareMatrix, p: &Point) -> Point {
        (self.action)(g, p)
    }

    /// A group element taking the origin to `p`.
    pub fn witness(&self, p: &Point) -> Option<SquareMatrix> {
        (self.witness)(p)
    }

    /// `exp(t · Σ c_i h_i)` for isotropy coefficients `c`.
    pub fn isotropy_element(&self, coeffs: &[f64]) -> SquareMatrix {
        let table = builtin_basis(self.algebra);
        let mut x = vec![0.0; table.dim()];
        for (c, h) in coeffs.iter().zip(&self.isotropy) {
            for (xi, hi) in x.iter_mut().zip(h) {
                *xi += c * crate::exact::to_f64(*hi);
            }
        }
        let el = table.element_f64(&x).expect("isotropy lies in the algebra");
        matrix_exp(el.matrix(), 1e-15).expect("isotropy exponential")
    }

    /// A group element taking `p` to `q`, composed with an isotropy rotation.
    pub fn element_between(&self, p: &Point, q: &Point, isotropy: &[f64]) -> Option<SquareMatrix> {
        let wp = self.witness(p)?;
        let wq = self.witness(q)?;
        let r = self.isotropy_element(isotropy);
        let wp_inv = wp.inverse()?;
        if self.right_action {
            wp_inv.mul(&r).ok()?.mul(&wq).ok()
        } else {
            wq.mul(&r).ok()?.mul(&wp_inv).ok()
        }
    }
}

/// A homogeneous model space with its coset representations.
#[derive(Clone, Debug)]
pub struct ModelSpace {
    pub kind: SpaceKind,
    pub metric: MetricField,
    pub cosets: Vec<CosetRepresentation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Preserving,
    Reversing,
}

type MapFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
type JacFn = Arc<dyn Fn(&Point) -> Mat3 + Send + Sync>;

/// A named isometry of a model, in chart coordinates.
#[derive(Clone)]
pub struct IsometryMap {
    pub name: String,
    pub orientation: Orientation,
    map: MapFn,
    jacobian: Option<JacFn>,
}

impl fmt::Debug for IsometryMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IsometryMap")
            .field("name", &self.name)
            .field("orientation", &self.orientation)
            .field("closed_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl IsometryMap {
    pub fn new(
        name: impl Into<String>,
        orientation: Orientation,
        map: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            orientation,
            map: Arc::new(map),
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&Point) -> Mat3 + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn apply(&self, p: &Point) -> Point {
        (self.map)(p)
    }

    /// `J[i][a] = ∂φ^i/∂p^a`, closed form when available.
    pub fn jacobian_at(&self, chart: &Chart, p: &Point) -> Result<Mat3, GeoError> {
        if let Some(j) = &self.jacobian {
            return Ok(j(p));
        }
        map_jacobian(chart, p, |q| (self.map)(q))
    }
}

/// Central-difference Jacobian of a chart map, wrapping periodic coordinates.
pub fn map_jacobian(chart: &Chart, p: &Point, f: impl Fn(&Point) -> Point) -> Result<Mat3, GeoError> {
    let h = JACOBIAN_STEP;
    let mut j = [[0.0; DIM]; DIM];
    for a in 0..DIM {
        let plus = f(&diffgeo::offset(p, a, h));
        let minus = f(&diffgeo::offset(p, a, -h));
        if !chart.contains(&plus) || !chart.contains(&minus) {
            return Err(GeoError::OutsideDomain(*p));
        }
        let d = chart.displacement(&minus, &plus);
        for i in 0..DIM {
            j[i][a] = d[i] / (2.0 * h);
        }
    }
    Ok(j)
}

/// `(φ*S)_{a..}(p) = S_{i..}(φ(p)) J[i][a] ...` for a covariant field.
pub fn pullback_with(field: &TensorField, image: &Point, jac: &Mat3) -> Result<Tensor, ModelError> {
    if field.slots().iter().any(|v| *v != Variance::Down) {
        return Err(ModelError::NotCovariant);
    }
    let s = field.at(image);
    let rank = s.rank();
    let mut buf = vec![0usize; rank];
    Ok(Tensor::from_fn(field.slots().to_vec(), |ix| {
        let mut total = 0.0;
        let count = DIM.pow(rank as u32);
        for flat in 0..count {
            let mut f = flat;
            let mut w = 1.0;
            for slot in (0..rank).rev() {
                buf[slot] = f % DIM;
                f /= DIM;
                w *= jac[buf[slot]][ix[slot]];
                if w == 0.0 {
                    break;
                }
            }
            if w != 0.0 {
                total += w * s.get(&buf);
            }
        }
        total
    }))
}

/// Pullback of a covariant field under an isometry, evaluated at `p`.
pub fn pullback_tensor(model: &ModelSpace, phi: &IsometryMap, field: &TensorField, p: &Point) -> Result<Tensor, ModelError> {
    let chart = &model.metric.chart;
    let image = phi.apply(p);
    if !chart.contains(p) || !chart.contains(&image) {
        return Err(GeoError::OutsideDomain(*p).into());
    }
    let jac = phi.jacobian_at(chart, p)?;
    pullback_with(field, &image, &jac)
}

/// Which closed-form structure to build.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StructureLabel {
    /// `λ·dy⊗dV_{S²}` on S²×ℝ, `λ·dz⊗dV_{H²}` on H²×ℝ.
    Lambda(f64),
    /// `θ¹⊗(θ¹∧θ²)` on H²×ℝ.
    Solv,
}

impl StructureLabel {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            StructureLabel::Lambda(l) => Some(*l),
            StructureLabel::Solv => None,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            StructureLabel::Lambda(_) => "lambda",
            StructureLabel::Solv => "solv",
        }
    }
}

impl fmt::Display for StructureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureLabel::Lambda(l) => write!(f, "T^λ (λ = {l})"),
            StructureLabel::Solv => f.write_str("T_solv"),
        }
    }
}

/// A closed-form (0,3) structure tensor field.
#[derive(Clone, Debug)]
pub struct NamedStructure {
    pub space: SpaceKind,
    pub label: StructureLabel,
    pub tensor: TensorField,
    pub coset_tag: &'static str,
    pub formula: &'static str,
}

impl NamedStructure {
    /// `|λ|`, the representative with `λ ≥ 0` under `λ ~ -λ`.
    pub fn canonical_lambda(&self) -> Option<f64> {
        self.label.lambda().map(f64::abs)
    }
}

fn s2_embed(p: &Point) -> [f64; 3] {
    let (st, ct) = p[0].sin_cos();
    let (sp, cp) = p[1].sin_cos();
    [st * cp, st * sp, ct]
}

fn s2_chart(x: &[f64; 3], y: f64) -> Point {
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    [rho.atan2(x[2]), x[1].atan2(x[0]), y]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn mobius(a: f64, b: f64, c: f64, d: f64, x: f64, y: f64) -> (f64, f64) {
    // (a w + b) / (c w + d), w = x + i y
    let (nr, ni) = (a * x + b, a * y);
    let (dr, di) = (c * x + d, c * y);
    let den = dr * dr + di * di;
    ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
}

impl ModelSpace {
    /// S²×ℝ = SO(3)×ℝ/SO(2).
    pub fn s2xr() -> Self {
        let chart = Chart::new(
            "spherical (θ, φ, y)",
            ["θ", "φ", "y"],
            [FRAC_PI_2, 0.0, 0.0],
            [(0.3, PI - 0.3), (0.0, TAU), (-2.0, 2.0)],
            [None, Some(TAU), None],
            |p| p[0] > 0.0 && p[0] < PI,
        );
        let metric = MetricField::new(chart, |p| {
            let s = p[0].sin();
            [[1.0, 0.0, 0.0], [0.0, s * s, 0.0], [0.0, 0.0, 1.0]]
        })
        .with_closed_christoffel(|p| {
            let (s, c) = p[0].sin_cos();
            let mut g: Christoffel = [[[0.0; DIM]; DIM]; DIM];
            g[0][1][1] = -s * c;
            g[1][0][1] = c / s;
            g[1][1][0] = c / s;
            g
        })
        .with_closed_christoffel_derivative(|p| {
            let (s, c) = p[0].sin_cos();
            let mut d: ChristoffelDerivative = [[[[0.0; DIM]; DIM]; DIM]; DIM];
            d[0][0][1][1] = s * s - c * c;
            d[0][1][0][1] = -1.0 / (s * s);
            d[0][1][1][0] = -1.0 / (s * s);
            d
        });
        let action: ActionFn = Arc::new(|g, p| {
            let x = s2_embed(p);
            let mut xr = [0.0; 3];
            for (j, out) in xr.iter_mut().enumerate() {
                *out = (0..3).map(|i| x[i] * g.get(i, j)).sum();
            }
            let scale = g.get(3, 3);
            let shift = if scale > 0.0 { scale.ln() } else { f64::NAN };
            s2_chart(&xr, p[2] + shift)
        });
        let witness: WitnessFn = Arc::new(|p| {
            // first row = target point, completed to a rotation
            let r1 = s2_embed(p);
            let helper = if r1[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
            let r2 = normalize(cross(&helper, &r1));
            let r3 = cross(&r1, &r2);
            SquareMatrix::from_rows(&[
                &[r1[0], r1[1], r1[2], 0.0],
                &[r2[0], r2[1], r2[2], 0.0],
                &[r3[0], r3[1], r3[2], 0.0],
                &[0.0, 0.0, 0.0, p[2].exp()],
            ])
            .ok()
        });
        let mut u1 = vec![Rational::zero(); 4];
        u1[0] = Rational::from_integer(1);
        Self {
            kind: SpaceKind::S2xR,
            metric,
            cosets: vec![CosetRepresentation {
                algebra: AlgebraId::So3R,
                isotropy: vec![u1],
                tag: COSET_S2XR,
                right_action: true,
                action,
                witness,
            }],
        }
    }

    /// H²×ℝ = SL(2,ℝ)×ℝ/SO(2) = H²×ℝ/{Id}.
    pub fn h2xr() -> Self {
        let chart = Chart::new(
            "upper half-space (x, y, z)",
            ["x", "y", "z"],
            [0.0, 1.0, 0.0],
            [(-2.0, 2.0), (0.2, 5.0), (-2.0, 2.0)],
            [None; 3],
            |p| p[1] > 0.0,
        );
        let metric = MetricField::new(chart, |p| {
            let w = 1.0 / (p[1] * p[1]);
            [[w, 0.0, 0.0], [0.0, w, 0.0], [0.0, 0.0, 1.0]]
        })
        .with_closed_christoffel(|p| {
            let r = 1.0 / p[1];
            let mut g: Christoffel = [[[0.0; DIM]; DIM]; DIM];
            g[0][0][1] = -r;
            g[0][1][0] = -r;
            g[1][0][0] = r;
            g[1][1][1] = -r;
            g
        })
        .with_closed_christoffel_derivative(|p| {
            let r2 = 1.0 / (p[1] * p[1]);
            let mut d: ChristoffelDerivative = [[[[0.0; DIM]; DIM]; DIM]; DIM];
            d[1][0][0][1] = r2;
            d[1][0][1][0] = r2;
            d[1][1][0][0] = -r2;
            d[1][1][1][1] = r2;
            d
        });
        let translation = |g: &SquareMatrix| {
            let s = g.get(2, 2);
            if s > 0.0 {
                s.ln()
            } else {
                f64::NAN
            }
        };
        let sl2_action: ActionFn = Arc::new(move |g, p| {
            let (x, y) = mobius(g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1), p[0], p[1]);
            [x, y, p[2] + translation(g)]
        });
        let sl2_witness: WitnessFn = Arc::new(|p| {
            if !(p[1] > 0.0) {
                return None;
            }
            let r = p[1].sqrt();
            SquareMatrix::from_rows(&[&[r, p[0] / r, 0.0], &[0.0, 1.0 / r, 0.0], &[0.0, 0.0, p[2].exp()]]).ok()
        });
        let solv_action: ActionFn = Arc::new(move |g, p| {
            [g.get(0, 1) + g.get(0, 0) * p[0], g.get(0, 0) * p[1], p[2] + translation(g)]
        });
        let solv_witness: WitnessFn = Arc::new(|p| {
            if !(p[1] > 0.0) {
                return None;
            }
            SquareMatrix::from_rows(&[&[p[1], p[0], 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, p[2].exp()]]).ok()
        });
        let mut v1 = vec![Rational::zero(); 4];
        v1[0] = Rational::from_integer(1);
        Self {
            kind: SpaceKind::H2xR,
            metric,
            cosets: vec![
                CosetRepresentation {
                    algebra: AlgebraId::Sl2rR,
                    isotropy: vec![v1],
                    tag: COSET_H2XR_SL2,
                    right_action: false,
                    action: sl2_action,
                    witness: sl2_witness,
                },
                CosetRepresentation {
                    algebra: AlgebraId::Solv,
                    isotropy: Vec::new(),
                    tag: COSET_H2XR_SOLV,
                    right_action: false,
                    action: solv_action,
                    witness: solv_witness,
                },
            ],
        }
    }

    pub fn new(kind: SpaceKind) -> Self {
        match kind {
            SpaceKind::S2xR => Self::s2xr(),
            SpaceKind::H2xR => Self::h2xr(),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.metric.chart
    }

    pub fn origin(&self) -> Point {
        self.metric.chart.origin
    }

    pub fn coset(&self, algebra: AlgebraId) -> Option<&CosetRepresentation> {
        self.cosets.iter().find(|c| c.algebra == algebra)
    }

    pub fn primary_coset(&self) -> &CosetRepresentation {
        &self.cosets[0]
    }

    /// Named tangent frame at the origin used in reports: labels and chart columns.
    pub fn origin_frame(&self, algebra: AlgebraId) -> ([&'static str; DIM], Mat3) {
        match (self.kind, algebra) {
            // ∂x² = ∂φ, ∂x³ = -∂θ, ∂y
            (SpaceKind::S2xR, _) => (
                ["∂x²", "∂x³", "∂y"],
                [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            ),
            (SpaceKind::H2xR, AlgebraId::Solv) => (["e1", "e2", "e3"], self.left_invariant_frame(&self.origin())),
            (SpaceKind::H2xR, _) => (["∂x", "∂y", "∂z"], diffgeo::identity3()),
        }
    }

    /// Columns `e1 = y∂x, e2 = y∂y, e3 = ∂z` (meaningful on H²×ℝ).
    pub fn left_invariant_frame(&self, p: &Point) -> Mat3 {
        [[p[1], 0.0, 0.0], [0.0, p[1], 0.0], [0.0, 0.0, 1.0]]
    }

    /// Closed-form structure tensor.
    pub fn named_structure(&self, label: StructureLabel) -> Result<NamedStructure, ModelError> {
        let area = wedge_area_form(&self.metric, (0, 1), 1.0)?;
        match (self.kind, label) {
            (SpaceKind::S2xR, StructureLabel::Lambda(l)) => Ok(NamedStructure {
                space: self.kind,
                label,
                tensor: one_form_tensor_two_form(&one_form(|_| [0.0, 0.0, 1.0]), &area).scaled(l),
                coset_tag: COSET_S2XR,
                formula: "λ·dy⊗dV_{S²}",
            }),
            (SpaceKind::H2xR, StructureLabel::Lambda(l)) => Ok(NamedStructure {
                space: self.kind,
                label,
                tensor: one_form_tensor_two_form(&one_form(|_| [0.0, 0.0, 1.0]), &area).scaled(l),
                coset_tag: COSET_H2XR_SL2,
                formula: "λ·dz⊗dV_{H²}",
            }),
            (SpaceKind::H2xR, StructureLabel::Solv) => {
                let theta1 = one_form(|p| [1.0 / p[1], 0.0, 0.0]);
                let theta2 = one_form(|p| [0.0, 1.0 / p[1], 0.0]);
                Ok(NamedStructure {
                    space: self.kind,
                    label,
                    tensor: one_form_tensor_two_form(&theta1, &wedge(&theta1, &theta2)),
                    coset_tag: COSET_H2XR_SOLV,
                    formula: "θ¹⊗(θ¹∧θ²)",
                })
            }
            (space, label) => Err(ModelError::LabelMismatch {
                space,
                label: label.to_string(),
            }),
        }
    }

    /// The map `p ↦ g·p` of a group element of the given coset.
    pub fn group_isometry(&self, coset: &CosetRepresentation, g: SquareMatrix, name: impl Into<String>) -> IsometryMap {
        let c = coset.clone();
        IsometryMap::new(name, Orientation::Preserving, move |p| c.act(&g, p))
    }

    /// Identity, a group element, a surface reflection and the line flip.
    pub fn isometry_catalog(&self) -> Vec<IsometryMap> {
        let coset = self.primary_coset();
        let table = builtin_basis(coset.algebra);
        let x = table.element_f64(&[0.7, -1.1, 0.4, 0.8]).expect("algebra element");
        let g = matrix_exp(x.matrix(), 1e-15).expect("exponential of a moderate element");
        let id = IsometryMap::new("identity", Orientation::Preserving, |p| *p).with_jacobian(|_| diffgeo::identity3());
        let diag = |a: f64, b: f64, c: f64| [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]];
        match self.kind {
            SpaceKind::S2xR => vec![
                id,
                self.group_isometry(coset, g, "rotation+translation"),
                IsometryMap::new("reflection", Orientation::Reversing, |p| [PI - p[0], p[1], p[2]])
                    .with_jacobian(move |_| diag(-1.0, 1.0, 1.0)),
                IsometryMap::new("line-flip", Orientation::Reversing, |p| [p[0], p[1], -p[2]])
                    .with_jacobian(move |_| diag(1.0, 1.0, -1.0)),
            ],
            SpaceKind::H2xR => vec![
                id,
                self.group_isometry(coset, g, "mobius+translation"),
                IsometryMap::new("reflection", Orientation::Reversing, |p| [-p[0], p[1], p[2]])
                    .with_jacobian(move |_| diag(-1.0, 1.0, 1.0)),
                IsometryMap::new("line-flip", Orientation::Reversing, |p| [p[0], p[1], -p[2]])
                    .with_jacobian(move |_| diag(1.0, 1.0, -1.0)),
            ],
        }
    }

    /// Uniform sample from the chart's sampling box.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let b = self.metric.chart.sample_box;
        [rng.gen_range(b[0].0..b[0].1), rng.gen_range(b[1].0..b[1].1), rng.gen_range(b[2].0..b[2].1)]
    }

    pub fn in_sample_box(&self, p: &Point) -> bool {
        let b = self.metric.chart.sample_box;
        (0..DIM).all(|i| self.metric.chart.periods[i].is_some() || (p[i] >= b[i].0 && p[i] <= b[i].1))
    }

    /// Frame max-norm of `φ*g - g` at `p`.
    pub fn metric_pullback_residual(&self, phi: &IsometryMap, p: &Point) -> Result<f64, ModelError> {
        let pulled = pullback_tensor(self, phi, &self.metric.as_field(), p)?;
        let g = self.metric.at(p)?;
        let mut diff = pulled;
        diff.axpy(-1.0, &self.metric.as_field().at(p));
        diffgeo::frame_max_norm(&diff, &g).ok_or(ModelError::Geo(GeoError::SingularMetric { point: *p, det: 0.0 }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Point, b: &Point, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() < tol)
    }

    #[test]
    fn s2xr_translation_and_isotropy() {
        let m = ModelSpace::s2xr();
        let c = m.primary_coset();
        let e = SquareMatrix::unit(4, 4, 4).unwrap();
        let g = matrix_exp(&e.scale(0.7), 1e-15).unwrap();
        assert!(close(&c.act(&g, &m.origin()), &[FRAC_PI_2, 0.0, 0.7], 1e-14));
        let id = SquareMatrix::identity(4).unwrap();
        let p = [1.0, 2.0, -0.5];
        assert!(close(&c.act(&id, &p), &p, 1e-14));
        for t in [-1.0, -0.3, 0.5, 1.0] {
            let r = c.isotropy_element(&[t]);
            assert!(close(&c.act(&r, &m.origin()), &m.origin(), 1e-9));
        }
    }

    #[test]
    fn h2xr_actions() {
        let m = ModelSpace::h2xr();
        let c = m.primary_coset();
        let g = SquareMatrix::from_rows(&[&[1.0, 0.6, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap();
        let p = [0.3, 1.7, -0.2];
        assert!(close(&c.act(&g, &p), &[0.9, 1.7, -0.2], 1e-14));
        assert!(close(&c.act(&SquareMatrix::identity(3).unwrap(), &p), &p, 1e-14));
        for t in [-1.0, 0.25, 1.0] {
            assert!(close(&c.act(&c.isotropy_element(&[t]), &m.origin()), &m.origin(), 1e-9));
        }
    }

    #[test]
    fn witnesses_reach_sampled_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [ModelSpace::s2xr(), ModelSpace::h2xr()] {
            for coset in &m.cosets {
                for _ in 0..20 {
                    let p = m.sample_point(&mut rng);
                    let w = coset.witness(&p).unwrap();
                    let d = m.chart().displacement(&p, &coset.act(&w, &m.origin()));
                    assert!(d.iter().all(|v| v.abs() < 1e-9), "{} {p:?}", coset.tag);
                }
            }
        }
    }

    #[test]
    fn group_elements_are_isometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [ModelSpace::s2xr(), ModelSpace::h2xr()] {
            for coset in &m.cosets {
                for _ in 0..20 {
                    let (p, q) = (m.sample_point(&mut rng), m.sample_point(&mut rng));
                    let g = coset.element_between(&p, &q, &[rng.gen_range(-3.0..3.0)]).unwrap();
                    let phi = m.group_isometry(coset, g, "g");
                    let r = m.metric_pullback_residual(&phi, &p).unwrap();
                    assert!(r < 1e-7, "{}: {r:e}", coset.tag);
                    let det = diffgeo::det3(&phi.jacobian_at(m.chart(), &p).unwrap());
                    assert!(det > 0.0);
                }
            }
        }
    }

    #[test]
    fn catalog_orientations_and_pullbacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [ModelSpace::s2xr(), ModelSpace::h2xr()] {
            for phi in m.isometry_catalog() {
                for _ in 0..10 {
                    let p = m.sample_point(&mut rng);
                    if !m.chart().contains(&phi.apply(&p)) {
                        continue;
                    }
                    assert!(m.metric_pullback_residual(&phi, &p).unwrap() < 1e-7, "{}", phi.name);
                    let det = diffgeo::det3(&phi.jacobian_at(m.chart(), &p).unwrap());
                    let expected = if phi.orientation == Orientation::Preserving { 1.0 } else { -1.0 };
                    assert_eq!(det.signum(), expected, "{}", phi.name);
                }
            }
        }
    }

    #[test]
    fn h2_reflection_jacobian_is_exact() {
        let m = ModelSpace::h2xr();
        let refl = m.isometry_catalog().into_iter().find(|f| f.name == "reflection").unwrap();
        let p = [0.5, 2.0, 1.0];
        assert_eq!(m.metric_pullback_residual(&refl, &p).unwrap(), 0.0);
        assert_eq!(diffgeo::det3(&refl.jacobian_at(m.chart(), &p).unwrap()), -1.0);
    }

    #[test]
    fn lambda_structure_on_s2xr_at_origin() {
        let m = ModelSpace::s2xr();
        let lam = 1.5;
        let t = m.named_structure(StructureLabel::Lambda(lam)).unwrap().tensor.at(&m.origin());
        let (th, ph, y) = (0, 1, 2);
        assert!((t.get(&[y, th, ph]) - lam).abs() < 1e-15);
        assert!((t.get(&[y, ph, th]) + lam).abs() < 1e-15);
        let nonzero = t.data().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 2);
        // T(∂y, ∂x², ∂x³) with ∂x² = ∂φ, ∂x³ = -∂θ
        assert!((-t.get(&[y, ph, th]) - lam).abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_is_zero_and_solv_needs_h2xr() {
        let h = ModelSpace::h2xr();
        let t = h.named_structure(StructureLabel::Lambda(0.0)).unwrap();
        assert_eq!(t.tensor.at(&[0.3, 0.7, 0.1]).max_abs(), 0.0);
        assert!(matches!(
            ModelSpace::s2xr().named_structure(StructureLabel::Solv),
            Err(ModelError::LabelMismatch { .. })
        ));
    }

    #[test]
    fn solv_structure_in_left_invariant_frame() {
        let m = ModelSpace::h2xr();
        let s = m.named_structure(StructureLabel::Solv).unwrap();
        let p = [0.4, 2.5, -1.0];
        let e = m.left_invariant_frame(&p);
        let framed = pullback_with(&s.tensor, &p, &e).unwrap();
        assert!((framed.get(&[0, 0, 1]) - 1.0).abs() < 1e-14);
        assert!((framed.get(&[0, 1, 0]) + 1.0).abs() < 1e-14);
        assert!(framed.data().iter().filter(|v| v.abs() > 1e-14).count() == 2);
    }

    #[test]
    fn h2_reflection_flips_lambda_but_not_solv() {
        let m = ModelSpace::h2xr();
        let refl = m.isometry_catalog().into_iter().find(|f| f.name == "reflection").unwrap();
        let p = [0.3, 0.9, 0.4];
        let t1 = m.named_structure(StructureLabel::Lambda(1.0)).unwrap().tensor;
        let tm1 = m.named_structure(StructureLabel::Lambda(-1.0)).unwrap().tensor;
        let pulled = pullback_tensor(&m, &refl, &t1, &p).unwrap();
        assert!(pulled.max_abs_diff(&tm1.at(&p)) < 1e-9);
        let solv = m.named_structure(StructureLabel::Solv).unwrap().tensor;
        let pulled = pullback_tensor(&m, &refl, &solv, &p).unwrap();
        assert!(pulled.max_abs_diff(&solv.at(&p)) < 1e-9);
        let id = &m.isometry_catalog()[0];
        assert_eq!(pullback_tensor(&m, id, &t1, &p).unwrap(), t1.at(&p));
    }

    #[test]
    fn closed_christoffel_derivatives_match_the_stencil() {
        use crate::diffgeo::{curvature, ChristoffelMode};
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for m in [ModelSpace::s2xr(), ModelSpace::h2xr()] {
            for _ in 0..20 {
                let p = m.sample_point(&mut rng);
                let closed = curvature(&m.metric, &p, ChristoffelMode::ClosedForm).unwrap();
                let stencil = curvature(&m.metric.without_closed_derivative(), &p, ChristoffelMode::ClosedForm).unwrap();
                let g = m.metric.at(&p).unwrap();
                let mut d = closed;
                d.axpy(-1.0, &stencil);
                assert!(diffgeo::frame_max_norm(&d, &g).unwrap() < 1e-8, "{} {p:?}", m.kind);
            }
        }
    }
}

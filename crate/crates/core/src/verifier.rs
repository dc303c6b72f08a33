//! Numerical certification of the Ambrose–Singer equations
//! `∇̃g = 0, ∇̃R = 0, ∇̃T = 0` for `∇̃ = ∇ - T`, origin cross-checks against the
//! reductive pipeline, and isomorphism tests over the isometry catalog.
//!
//! All residuals are max-norms of components in a `g`-orthonormal frame at
//! each sample point, maximized over the samples.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diffgeo::{
    self, covariant_derivative, curvature_field, frame_max_norm, tensor_norm, ChristoffelMode, ConnectionField,
    GeoError, Point, Tensor, TensorField, Variance, DIM, FD_STEP_CURVATURE,
};
use crate::exact;
use crate::matlie::AlgebraId;
use crate::models::{pullback_tensor, pullback_with, IsometryMap, ModelError, ModelSpace, SpaceKind, StructureLabel};
use crate::reductive::{self, orthonormal_metric, structure_tensor_at_origin, ReductiveDecomposition, ReductiveError};

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEFAULT_SEED: u64 = 42;
/// Draws per sample index before sampling gives up.
pub const SAMPLE_RETRIES: usize = 16;
/// Group elements used by the invariance check.
pub const INVARIANCE_ELEMENTS: usize = 20;
/// Smallest `|det|` of the τ frame accepted by [`crosscheck_origin`].
pub const FRAME_DET_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    /// Sample count must be at least one.
    #[error("sample count must be at least 1")]
    NoSamples,
    /// Tolerance must be positive and finite.
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    /// Finite-difference step outside `(0, 1e-2]`.
    #[error("fd_step must lie in (0, 1e-2], got {0}")]
    BadFdStep(f64),
    /// Every retry for one sample index left the chart.
    #[error("sample {index} left the chart domain after {attempts} attempts")]
    SamplingExhausted { index: usize, attempts: usize },
    /// Structure and model describe different spaces.
    #[error("structure on {structure} cannot be verified on {model}")]
    SpaceMismatch { model: SpaceKind, structure: SpaceKind },
    /// τ images do not span the tangent space at the origin.
    #[error("τ images of the m basis do not span T_oM (det = {0:e})")]
    FrameMismatch(f64),
    /// No coset of the model carries the given algebra.
    #[error("no coset representation with algebra {0}")]
    NoCoset(AlgebraId),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Reductive(#[from] ReductiveError),
}

/// Settings of a verification run.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationConfig {
    pub samples: usize,
    pub tol: f64,
    pub fd_step: f64,
    pub seed: u64,
    pub lambdas: Vec<f64>,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            fd_step: DEFAULT_FD_STEP,
            seed: DEFAULT_SEED,
            lambdas: vec![0.0, 0.5, 1.0, 2.0],
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.samples == 0 {
            return Err(VerifyError::NoSamples);
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(VerifyError::BadTolerance(self.tol));
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 1e-2) {
            return Err(VerifyError::BadFdStep(self.fd_step));
        }
        Ok(())
    }
}

/// Max-norm residuals of the three Ambrose–Singer equations.
#[derive(Clone, Debug, PartialEq)]
pub struct ASResidualReport {
    pub space: SpaceKind,
    pub label: String,
    pub lambda: Option<f64>,
    pub nabla_g: f64,
    pub nabla_r: f64,
    pub nabla_t: f64,
    pub tol: f64,
    pub pass: bool,
    pub seed: u64,
    pub samples: usize,
}

impl ASResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.nabla_g.max(self.nabla_r).max(self.nabla_t)
    }
}

impl fmt::Display for ASResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: ∇̃g {:.3e}  ∇̃R {:.3e}  ∇̃T {:.3e}  [{} at tol {:e}, {} samples, seed {}]",
            self.space,
            self.label,
            self.nabla_g,
            self.nabla_r,
            self.nabla_t,
            if self.pass { "pass" } else { "FAIL" },
            self.tol,
            self.samples,
            self.seed
        )
    }
}

fn fold_max(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken evaluation can never pass
    values.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

/// One RNG stream per sample index, so results do not depend on scheduling.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `cfg.samples` seeded points whose difference stencils stay in the chart.
pub fn sample_points(model: &ModelSpace, cfg: &VerificationConfig) -> Result<Vec<Point>, VerifyError> {
    let reach = cfg.fd_step + 2.0 * FD_STEP_CURVATURE;
    (0..cfg.samples)
        .map(|index| {
            let mut rng = sample_rng(cfg.seed, index);
            (0..SAMPLE_RETRIES)
                .map(|_| model.sample_point(&mut rng))
                .find(|p| model.chart().stencil_in_domain(p, reach, 2))
                .ok_or(VerifyError::SamplingExhausted {
                    index,
                    attempts: SAMPLE_RETRIES,
                })
        })
        .collect()
}

fn framed_residual(model: &ModelSpace, t: &Tensor, p: &Point) -> Result<f64, VerifyError> {
    let g = model.metric.at(p)?;
    frame_max_norm(t, &g).ok_or(VerifyError::Geo(GeoError::SingularMetric { point: *p, det: diffgeo::det3(&g) }))
}

/// The three residuals for an arbitrary (0,3) field, which need not be a structure tensor.
pub fn ambrose_singer_residuals(
    model: &ModelSpace,
    tensor: &TensorField,
    cfg: &VerificationConfig,
) -> Result<(f64, f64, f64), VerifyError> {
    cfg.validate()?;
    let metric = &model.metric;
    let conn = ConnectionField::with_structure_tensor(metric, ChristoffelMode::ClosedForm, tensor);
    let g = metric.as_field();
    let r = curvature_field(metric, ChristoffelMode::ClosedForm);
    let points = sample_points(model, cfg)?;
    let per_point: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64), VerifyError> {
            let dg = covariant_derivative(&conn, &g, p, cfg.fd_step)?;
            let dr = covariant_derivative(&conn, &r, p, cfg.fd_step)?;
            let dt = covariant_derivative(&conn, tensor, p, cfg.fd_step)?;
            Ok((framed_residual(model, &dg, p)?, framed_residual(model, &dr, p)?, framed_residual(model, &dt, p)?))
        })
        .collect::<Result<_, _>>()?;
    Ok((
        fold_max(per_point.iter().map(|r| r.0)),
        fold_max(per_point.iter().map(|r| r.1)),
        fold_max(per_point.iter().map(|r| r.2)),
    ))
}

/// Certifies `∇̃g = ∇̃R = ∇̃T = 0` for a closed-form structure.
pub fn verify_ambrose_singer(
    model: &ModelSpace,
    label: StructureLabel,
    cfg: &VerificationConfig,
) -> Result<ASResidualReport, VerifyError> {
    let structure = model.named_structure(label)?;
    if structure.space != model.kind {
        return Err(VerifyError::SpaceMismatch {
            model: model.kind,
            structure: structure.space,
        });
    }
    let (nabla_g, nabla_r, nabla_t) = ambrose_singer_residuals(model, &structure.tensor, cfg)?;
    Ok(ASResidualReport {
        space: model.kind,
        label: label.key().to_string(),
        lambda: label.lambda(),
        nabla_g,
        nabla_r,
        nabla_t,
        tol: cfg.tol,
        pass: nabla_g < cfg.tol && nabla_r < cfg.tol && nabla_t < cfg.tol,
        seed: cfg.seed,
        samples: cfg.samples,
    })
}

/// Max residual of `∇R` for the Levi-Civita connection itself.
pub fn levi_civita_curvature_residual(model: &ModelSpace, cfg: &VerificationConfig) -> Result<f64, VerifyError> {
    cfg.validate()?;
    let conn = ConnectionField::levi_civita(&model.metric, ChristoffelMode::ClosedForm);
    let r = curvature_field(&model.metric, ChristoffelMode::ClosedForm);
    let points = sample_points(model, cfg)?;
    let values: Vec<f64> = points
        .par_iter()
        .map(|p| framed_residual(model, &covariant_derivative(&conn, &r, p, cfg.fd_step)?, p))
        .collect::<Result<_, _>>()?;
    Ok(fold_max(values))
}

/// Frame max-norm of `T_ijk + T_ikj` at `p`.
pub fn skew_defect(model: &ModelSpace, tensor: &TensorField, p: &Point) -> Result<f64, VerifyError> {
    let t = tensor.at(p);
    let sym = Tensor::from_fn(vec![Variance::Down; 3], |ix| t.get(ix) + t.get(&[ix[0], ix[2], ix[1]]));
    framed_residual(model, &sym, p)
}

/// Max deviation between the reductive origin tensor and the closed form at `o`,
/// both read in the frame given by the m basis.
pub fn crosscheck_origin(
    model: &ModelSpace,
    dec: &ReductiveDecomposition,
    label: StructureLabel,
) -> Result<f64, VerifyError> {
    let structure = model.named_structure(label)?;
    let o = model.origin();
    let frame = if dec.is_lie_group() {
        model.left_invariant_frame(&o)
    } else {
        reductive::tau_frame(dec, model)?
    };
    let det = diffgeo::det3(&frame);
    if det.abs() < FRAME_DET_TOL {
        return Err(VerifyError::FrameMismatch(det));
    }
    let closed = pullback_with(&structure.tensor, &o, &frame)?;
    let pipeline = structure_tensor_at_origin(dec, &orthonormal_metric(DIM))?;
    let mut dev: f64 = 0.0;
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                dev = dev.max((closed.get(&[a, b, c]) - exact::to_f64(pipeline.get(a, b, c))).abs());
            }
        }
    }
    Ok(dev)
}

/// Pointwise norms `‖T^λ‖_g` and `‖T^μ‖_g`, averaged over the samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormCertificate {
    pub norm_lambda: f64,
    pub norm_mu: f64,
}

impl fmt::Display for NormCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "‖T‖_g invariant differs ({} vs {})",
            format_sqrt2(self.norm_lambda),
            format_sqrt2(self.norm_mu)
        )
    }
}

/// Writes multiples of `√2` symbolically when they are close to one.
pub fn format_sqrt2(v: f64) -> String {
    let k = v / std::f64::consts::SQRT_2;
    let r = k.round();
    if (k - r).abs() < 1e-6 && r != 0.0 {
        match r as i64 {
            1 => "√2".to_string(),
            -1 => "-√2".to_string(),
            n => format!("{n}√2"),
        }
    } else if v.abs() < 1e-12 {
        "0".to_string()
    } else {
        format!("{v:.6}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IsomorphismVerdict {
    /// A catalogued isometry carries one structure onto the other.
    Isomorphic { witness: String, deviation: f64 },
    /// The search failed; with a certificate it is a proof of non-isomorphism.
    NoWitnessFound { certificate: Option<NormCertificate> },
}

impl IsomorphismVerdict {
    pub fn key(&self) -> &'static str {
        match self {
            IsomorphismVerdict::Isomorphic { .. } => "isomorphic",
            IsomorphismVerdict::NoWitnessFound { certificate: Some(_) } => "not_isomorphic",
            IsomorphismVerdict::NoWitnessFound { certificate: None } => "no_witness_found",
        }
    }

    pub fn witness(&self) -> Option<&str> {
        match self {
            IsomorphismVerdict::Isomorphic { witness, .. } => Some(witness),
            IsomorphismVerdict::NoWitnessFound { .. } => None,
        }
    }
}

impl fmt::Display for IsomorphismVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsomorphismVerdict::Isomorphic { witness, deviation } => {
                write!(f, "isomorphic, witness \"{witness}\" (deviation {deviation:.3e})")
            }
            IsomorphismVerdict::NoWitnessFound { certificate: Some(c) } => write!(f, "not isomorphic: {c}"),
            IsomorphismVerdict::NoWitnessFound { certificate: None } => f.write_str("no witness found in the catalog"),
        }
    }
}

/// Max over `points` of the frame norm of `φ*S - S'` (points mapped outside the chart are skipped).
pub fn pullback_deviation(
    model: &ModelSpace,
    phi: &IsometryMap,
    source: &TensorField,
    target: &TensorField,
    points: &[Point],
) -> Result<f64, VerifyError> {
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|p| -> Result<Option<f64>, VerifyError> {
            if !model.chart().contains(&phi.apply(p)) {
                return Ok(None);
            }
            let mut d = pullback_tensor(model, phi, source, p)?;
            d.axpy(-1.0, &target.at(p));
            framed_residual(model, &d, p).map(Some)
        })
        .collect::<Result<_, _>>()?;
    Ok(fold_max(values.into_iter().flatten()))
}

/// Mean of `‖T‖_g` and its variance over the points.
pub fn norm_statistics(model: &ModelSpace, tensor: &TensorField, points: &[Point]) -> Result<(f64, f64), VerifyError> {
    let norms: Vec<f64> = points
        .iter()
        .map(|p| {
            let g = model.metric.at(p)?;
            tensor_norm(&tensor.at(p), &g).ok_or(VerifyError::Geo(GeoError::SingularMetric { point: *p, det: diffgeo::det3(&g) }))
        })
        .collect::<Result<_, _>>()?;
    let n = norms.len() as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let var = norms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var))
}

/// Variance of `‖T‖²_g` over the seeded samples.
pub fn norm_invariant_variance(model: &ModelSpace, label: StructureLabel, cfg: &VerificationConfig) -> Result<f64, VerifyError> {
    let tensor = model.named_structure(label)?.tensor;
    let points = sample_points(model, cfg)?;
    let sq: Vec<f64> = points
        .iter()
        .map(|p| {
            let g = model.metric.at(p)?;
            Ok(tensor_norm(&tensor.at(p), &g).unwrap_or(f64::NAN).powi(2))
        })
        .collect::<Result<_, VerifyError>>()?;
    let n = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / n;
    Ok(sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Searches the catalog for `φ` with `φ*T^λ = T^μ`; falls back to the norm invariant.
pub fn isomorphism_test(
    model: &ModelSpace,
    lambda: f64,
    mu: f64,
    catalog: &[IsometryMap],
    cfg: &VerificationConfig,
) -> Result<IsomorphismVerdict, VerifyError> {
    cfg.validate()?;
    let source = model.named_structure(StructureLabel::Lambda(lambda))?.tensor;
    let target = model.named_structure(StructureLabel::Lambda(mu))?.tensor;
    let points = sample_points(model, cfg)?;
    for phi in catalog {
        let dev = pullback_deviation(model, phi, &source, &target, &points)?;
        if dev < cfg.tol {
            return Ok(IsomorphismVerdict::Isomorphic {
                witness: phi.name.clone(),
                deviation: dev,
            });
        }
    }
    let (norm_lambda, _) = norm_statistics(model, &source, &points)?;
    let (norm_mu, _) = norm_statistics(model, &target, &points)?;
    let certificate = ((norm_lambda - norm_mu).abs() > cfg.tol).then_some(NormCertificate { norm_lambda, norm_mu });
    Ok(IsomorphismVerdict::NoWitnessFound { certificate })
}

/// Max deviation of `γ*T` from `T` over random group elements `γ` of the structure's coset.
///
/// Each `γ` maps a sampled `p` to a sampled `q`, composed with a random isotropy element.
pub fn invariance_residual(
    model: &ModelSpace,
    label: StructureLabel,
    elements: usize,
    cfg: &VerificationConfig,
) -> Result<f64, VerifyError> {
    cfg.validate()?;
    let structure = model.named_structure(label)?;
    let coset = model
        .cosets
        .iter()
        .find(|c| c.tag == structure.coset_tag)
        .ok_or(VerifyError::NoCoset(model.primary_coset().algebra))?;
    let values: Vec<f64> = (0..elements)
        .into_par_iter()
        .map(|i| -> Result<f64, VerifyError> {
            let mut rng = sample_rng(cfg.seed ^ 0x1505_1505, i);
            let p = model.sample_point(&mut rng);
            let q = model.sample_point(&mut rng);
            let iso: Vec<f64> = coset.isotropy.iter().map(|_| rng.gen_range(-3.0..3.0)).collect();
            let g = coset
                .element_between(&p, &q, &iso)
                .ok_or(ModelError::NoWitness(q))?;
            let phi = model.group_isometry(coset, g, "γ");
            let mut d = pullback_tensor(model, &phi, &structure.tensor, &p)?;
            d.axpy(-1.0, &structure.tensor.at(&p));
            framed_residual(model, &d, &p)
        })
        .collect::<Result<_, _>>()?;
    Ok(fold_max(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reductive::enumerate_lie_subspaces;
    use crate::Rational;

    fn cfg(samples: usize) -> VerificationConfig {
        VerificationConfig {
            samples,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(VerificationConfig::default().validate().is_ok());
        assert_eq!(cfg(0).validate(), Err(VerifyError::NoSamples));
        let bad = VerificationConfig { tol: 0.0, ..Default::default() };
        assert_eq!(bad.validate(), Err(VerifyError::BadTolerance(0.0)));
        let bad = VerificationConfig { fd_step: 0.1, ..Default::default() };
        assert_eq!(bad.validate(), Err(VerifyError::BadFdStep(0.1)));
    }

    #[test]
    fn samples_are_reproducible_and_inside_the_box() {
        let m = ModelSpace::h2xr();
        let a = sample_points(&m, &cfg(30)).unwrap();
        let b = sample_points(&m, &cfg(30)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| m.in_sample_box(p)));
        let other = sample_points(&m, &VerificationConfig { seed: 7, ..cfg(30) }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn s2xr_lambda_one_passes() {
        let m = ModelSpace::s2xr();
        let r = verify_ambrose_singer(&m, StructureLabel::Lambda(1.0), &cfg(20)).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn h2xr_solv_passes() {
        let m = ModelSpace::h2xr();
        let r = verify_ambrose_singer(&m, StructureLabel::Solv, &cfg(20)).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn symmetric_perturbation_breaks_metric_compatibility() {
        let m = ModelSpace::h2xr();
        let base = m.named_structure(StructureLabel::Lambda(1.0)).unwrap().tensor;
        let bump = TensorField::new(vec![Variance::Down; 3], |_| {
            let mut t = Tensor::covariant(3);
            t.set(&[1, 0, 1], 0.05);
            t.set(&[1, 1, 0], 0.05);
            t
        });
        let (g, _, _) = ambrose_singer_residuals(&m, &base.sum(&bump), &cfg(10)).unwrap();
        assert!(g > 1e-3, "{g}");
    }

    #[test]
    fn nabla_g_residual_tracks_skew_defect() {
        let m = ModelSpace::h2xr();
        let bump = TensorField::new(vec![Variance::Down; 3], |p: &Point| {
            let mut t = Tensor::covariant(3);
            t.set(&[2, 0, 0], 0.3 / (p[1] * p[1]));
            t
        });
        let c = cfg(10);
        let (g, _, _) = ambrose_singer_residuals(&m, &bump, &c).unwrap();
        let skew = fold_max(sample_points(&m, &c).unwrap().iter().map(|p| skew_defect(&m, &bump, p).unwrap()));
        assert!((g - skew).abs() < 1e-8, "{g} vs {skew}");
    }

    #[test]
    fn origin_crosschecks() {
        let s2 = ModelSpace::s2xr();
        let fam = enumerate_lie_subspaces(AlgebraId::So3R, &s2.primary_coset().isotropy).unwrap();
        for lam in [0.0, 0.5, 1.0, 2.0] {
            let dec = fam.instantiate(&[crate::matlie::rational_from_f64(lam).unwrap()]).unwrap();
            let dev = crosscheck_origin(&s2, &dec, StructureLabel::Lambda(lam)).unwrap();
            assert!(dev < 1e-8, "S² λ={lam}: {dev:e}");
        }
        let h2 = ModelSpace::h2xr();
        let fam = enumerate_lie_subspaces(AlgebraId::Sl2rR, &h2.primary_coset().isotropy).unwrap();
        for lam in [0.0, 0.5, 1.0, 2.0] {
            let dec = fam.instantiate(&[crate::matlie::rational_from_f64(lam).unwrap()]).unwrap();
            let dev = crosscheck_origin(&h2, &dec, StructureLabel::Lambda(lam)).unwrap();
            assert!(dev < 1e-8, "H² λ={lam}: {dev:e}");
        }
        let dec = ReductiveDecomposition::lie_group(AlgebraId::Solv);
        assert_eq!(crosscheck_origin(&h2, &dec, StructureLabel::Solv).unwrap(), 0.0);
        // wrong sign of λ is detected
        let dec = fam.instantiate(&[Rational::from_integer(1)]).unwrap();
        assert!(crosscheck_origin(&h2, &dec, StructureLabel::Lambda(-1.0)).unwrap() > 1.0);
    }

    #[test]
    fn isomorphism_verdicts() {
        let m = ModelSpace::s2xr();
        let catalog = m.isometry_catalog();
        let c = cfg(20);
        let v = isomorphism_test(&m, 1.0, -1.0, &catalog, &c).unwrap();
        assert_eq!(v.witness(), Some("reflection"));
        assert_eq!(isomorphism_test(&m, 1.0, 1.0, &catalog, &c).unwrap().witness(), Some("identity"));
        let v = isomorphism_test(&m, 1.0, 2.0, &catalog, &c).unwrap();
        match v {
            IsomorphismVerdict::NoWitnessFound { certificate: Some(cert) } => {
                assert!((cert.norm_lambda - 2f64.sqrt()).abs() < 1e-9);
                assert!((cert.norm_mu - 2.0 * 2f64.sqrt()).abs() < 1e-9);
                assert_eq!(cert.to_string(), "‖T‖_g invariant differs (√2 vs 2√2)");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structures_are_group_invariant() {
        let c = cfg(20);
        let s2 = ModelSpace::s2xr();
        assert!(invariance_residual(&s2, StructureLabel::Lambda(1.5), 10, &c).unwrap() < 1e-6);
        let h2 = ModelSpace::h2xr();
        assert!(invariance_residual(&h2, StructureLabel::Lambda(-2.0), 10, &c).unwrap() < 1e-6);
        assert!(invariance_residual(&h2, StructureLabel::Solv, 10, &c).unwrap() < 1e-6);
    }

    #[test]
    fn norm_invariant_is_constant() {
        let c = cfg(30);
        let h2 = ModelSpace::h2xr();
        assert!(norm_invariant_variance(&h2, StructureLabel::Solv, &c).unwrap() < 1e-10);
        assert!(norm_invariant_variance(&ModelSpace::s2xr(), StructureLabel::Lambda(2.0), &c).unwrap() < 1e-10);
    }

    #[test]
    fn sqrt2_formatting() {
        assert_eq!(format_sqrt2(2f64.sqrt()), "√2");
        assert_eq!(format_sqrt2(3.0 * 2f64.sqrt()), "3√2");
        assert_eq!(format_sqrt2(0.0), "0");
        assert_eq!(format_sqrt2(1.5), "1.500000");
    }
}

//! Front end of the `homstruct` binary.
//!
//! Exit codes: `0` success, `2` verification failure, `64` usage error.

pub mod report;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use homstruct_core::diffgeo::{invert3, Mat3, DIM};
use homstruct_core::matlie::{rational_from_f64, AlgebraId};
use homstruct_core::models::{pullback_with, ModelError, ModelSpace, SpaceKind, StructureLabel};
use homstruct_core::reductive::{
    enumerate_lie_subspaces, orthonormal_metric, structure_tensor_at_origin, tau_frame, ReductiveDecomposition,
};
use homstruct_core::verifier::{
    crosscheck_origin, format_sqrt2, invariance_residual, isomorphism_test, norm_invariant_variance, norm_statistics,
    sample_points, verify_ambrose_singer, IsomorphismVerdict, VerificationConfig, VerifyError, DEFAULT_FD_STEP,
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, INVARIANCE_ELEMENTS,
};

use report::{AsResiduals, Entry, Family, Invariance, Isomorphism, OriginTensorReport, ReportDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Largest accepted origin cross-check deviation.
pub const CROSSCHECK_TOL: f64 = 1e-8;
/// Parameter values at which `classify` cross-checks each family.
pub const CROSSCHECK_LAMBDAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
/// Origin-tensor entries are rounded to this many decimals in reports.
const REPORT_DECIMALS: i32 = 9;

#[derive(Parser, Debug)]
#[command(name = "homstruct", version, about = "Homogeneous Riemannian structure tensors on S²×ℝ and H²×ℝ")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate Lie subspaces and structure tensors for every coset representation
    Classify {
        space: Space,
        /// Also write the JSON report to PATH ("-" for stdout)
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Check the Ambrose–Singer equations for a closed-form structure
    #[command(allow_negative_numbers = true)]
    Verify {
        space: Space,
        #[arg(long, value_enum, default_value_t = Label::Lambda)]
        label: Label,
        /// Ignored for --label solv
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Decide whether T^λ and T^μ are isomorphic
    #[command(allow_negative_numbers = true)]
    Isom {
        space: Space,
        lambda: f64,
        mu: f64,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Space {
    S2xr,
    H2xr,
}

impl Space {
    pub fn kind(self) -> SpaceKind {
        match self {
            Space::S2xr => SpaceKind::S2xR,
            Space::H2xr => SpaceKind::H2xR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Label {
    Lambda,
    Solv,
}

/// Failure of a subcommand, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag values detected after parsing.
    Usage(String),
    /// The computation itself failed.
    Failure(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::NoSamples | VerifyError::BadTolerance(_) | VerifyError::BadFdStep(_) => CliError::Usage(e.to_string()),
            VerifyError::Model(ModelError::LabelMismatch { .. }) => CliError::Usage(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

macro_rules! failure {
    ($e:expr) => {
        $e.map_err(|e| CliError::Failure(e.to_string()))
    };
}

/// Outcome of a subcommand: the report and whether every check passed.
pub struct Outcome {
    pub doc: ReportDocument,
    pub pass: bool,
    pub json: Option<PathBuf>,
    pub space: SpaceKind,
}

fn round_entry(v: f64) -> f64 {
    let s = 10f64.powi(REPORT_DECIMALS);
    let r = (v * s).round() / s;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn tensor_report(frame: &[&str; DIM], value: impl Fn(usize, usize, usize) -> f64) -> OriginTensorReport {
    let mut entries = Vec::new();
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                let v = round_entry(value(i, j, k));
                if v != 0.0 {
                    entries.push(Entry { i, j, k, value: v });
                }
            }
        }
    }
    OriginTensorReport {
        frame: frame.iter().map(|s| s.to_string()).collect(),
        entries,
    }
}

/// Reductive-pipeline tensor at `o`, re-expressed in the model's named frame.
fn pipeline_report(model: &ModelSpace, dec: &ReductiveDecomposition) -> Result<OriginTensorReport, CliError> {
    let s = failure!(structure_tensor_at_origin(dec, &orthonormal_metric(DIM)))?;
    let basis_frame = if dec.is_lie_group() {
        model.left_invariant_frame(&model.origin())
    } else {
        failure!(tau_frame(dec, model))?
    };
    let (labels, named) = model.origin_frame(dec.algebra);
    let finv = invert3(&basis_frame).ok_or_else(|| CliError::Failure("τ frame is singular".into()))?;
    // named vector a = Σ_p m[p][a] X_p
    let mut m: Mat3 = [[0.0; DIM]; DIM];
    for p in 0..DIM {
        for a in 0..DIM {
            m[p][a] = (0..DIM).map(|i| finv[p][i] * named[i][a]).sum();
        }
    }
    let sf = s.to_f64();
    Ok(tensor_report(&labels, |a, b, c| {
        let mut v = 0.0;
        for p in 0..DIM {
            for q in 0..DIM {
                for r in 0..DIM {
                    v += sf[p][q][r] * m[p][a] * m[q][b] * m[r][c];
                }
            }
        }
        v
    }))
}

fn closed_form_report(model: &ModelSpace, label: StructureLabel, algebra: AlgebraId) -> Result<OriginTensorReport, CliError> {
    let structure = failure!(model.named_structure(label))?;
    let (labels, named) = model.origin_frame(algebra);
    let t = failure!(pullback_with(&structure.tensor, &model.origin(), &named))?;
    Ok(tensor_report(&labels, |i, j, k| t.get(&[i, j, k])))
}

fn family_report(model: &ModelSpace, algebra: AlgebraId) -> Result<Family, CliError> {
    let coset = model
        .coset(algebra)
        .ok_or_else(|| CliError::Failure(format!("no coset with algebra {algebra}")))?;
    let fam = failure!(enumerate_lie_subspaces(algebra, &coset.isotropy))?;
    let (tensor, report, deviation) = if fam.num_params() == 0 {
        let dec = failure!(fam.instantiate(&[]))?;
        let structure = failure!(model.named_structure(StructureLabel::Solv))?;
        let dev = crosscheck_origin(model, &dec, StructureLabel::Solv)?;
        (structure.formula.to_string(), pipeline_report(model, &dec)?, dev)
    } else {
        let mut dev: f64 = 0.0;
        for lam in CROSSCHECK_LAMBDAS {
            let q = rational_from_f64(lam).ok_or_else(|| CliError::Failure(format!("λ = {lam} is not exact")))?;
            let dec = failure!(fam.instantiate(&[q]))?;
            dev = dev.max(crosscheck_origin(model, &dec, StructureLabel::Lambda(lam))?);
        }
        let one = failure!(fam.instantiate(&[homstruct_core::Rational::from_integer(1)]))?;
        let formula = failure!(model.named_structure(StructureLabel::Lambda(1.0)))?.formula;
        (formula.to_string(), pipeline_report(model, &one)?, dev)
    };
    Ok(Family {
        label: tensor.clone(),
        free_params: fam.free_params(),
        forced_zero: fam.forced_zero(),
        coset: coset.tag.to_string(),
        subspace: fam.describe(),
        tensor,
        origin_tensor: report,
        crosscheck_deviation: deviation,
    })
}

fn empty_doc(command: Vec<String>, space: Space, coset: String) -> ReportDocument {
    ReportDocument {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        space: space.kind().key().to_string(),
        coset,
        families: Vec::new(),
        origin_tensor: None,
        as_residuals: None,
        invariance: None,
        isomorphism: None,
    }
}

pub fn classify(space: Space) -> Result<(ReportDocument, bool), CliError> {
    let model = ModelSpace::new(space.kind());
    let families = model
        .cosets
        .iter()
        .map(|c| family_report(&model, c.algebra))
        .collect::<Result<Vec<_>, _>>()?;
    let tags: Vec<&str> = model.cosets.iter().map(|c| c.tag).collect();
    let mut doc = empty_doc(vec!["classify".into(), space.kind().key().into()], space, tags.join("; "));
    let pass = families.iter().all(|f| f.crosscheck_deviation < CROSSCHECK_TOL);
    doc.origin_tensor = families.first().map(|f| f.origin_tensor.clone());
    doc.families = families;
    Ok((doc, pass))
}

#[allow(clippy::too_many_arguments)]
pub fn verify(
    space: Space,
    label: Label,
    lambda: f64,
    samples: usize,
    tol: f64,
    seed: u64,
    fd_step: f64,
) -> Result<(ReportDocument, bool), CliError> {
    let cfg = VerificationConfig {
        samples,
        tol,
        fd_step,
        seed,
        lambdas: vec![lambda],
    };
    cfg.validate()?;
    if !lambda.is_finite() {
        return Err(CliError::Usage(format!("λ must be finite, got {lambda}")));
    }
    let model = ModelSpace::new(space.kind());
    let structure_label = match label {
        Label::Lambda => StructureLabel::Lambda(lambda),
        Label::Solv => StructureLabel::Solv,
    };
    let structure = model.named_structure(structure_label).map_err(|e| CliError::Usage(e.to_string()))?;
    let coset = model
        .cosets
        .iter()
        .find(|c| c.tag == structure.coset_tag)
        .ok_or_else(|| CliError::Failure("structure has no coset".into()))?;
    let report = verify_ambrose_singer(&model, structure_label, &cfg)?;
    let inv = invariance_residual(&model, structure_label, INVARIANCE_ELEMENTS, &cfg)?;
    let variance = norm_invariant_variance(&model, structure_label, &cfg)?;
    let points = sample_points(&model, &cfg)?;
    let (norm, _) = norm_statistics(&model, &structure.tensor, &points)?;

    let mut command = vec!["verify".to_string(), space.kind().key().to_string(), "--label".into()];
    command.push(structure_label.key().into());
    if structure_label.lambda().is_some() {
        command.extend(["--lambda".into(), lambda.to_string()]);
    }
    command.extend([
        "--samples".into(),
        samples.to_string(),
        "--tol".into(),
        format!("{tol:e}"),
        "--seed".into(),
        seed.to_string(),
        "--fd-step".into(),
        format!("{fd_step:e}"),
    ]);
    let mut doc = empty_doc(command, space, coset.tag.to_string());
    doc.families = vec![family_report(&model, coset.algebra)?];
    doc.origin_tensor = Some(closed_form_report(&model, structure_label, coset.algebra)?);
    doc.as_residuals = Some(AsResiduals {
        nabla_g: report.nabla_g,
        nabla_r: report.nabla_r,
        nabla_t: report.nabla_t,
        pass: report.pass,
        label: structure.formula.to_string(),
        lambda: report.lambda,
        canonical_lambda: structure.canonical_lambda(),
        tol,
        samples,
        seed,
        fd_step,
    });
    let inv_pass = inv < tol && variance < tol;
    doc.invariance = Some(Invariance {
        group_elements: INVARIANCE_ELEMENTS,
        residual: inv,
        norm,
        norm_squared_variance: variance,
        pass: inv_pass,
    });
    Ok((doc, report.pass && inv_pass))
}

pub fn isom(space: Space, lambda: f64, mu: f64) -> Result<(ReportDocument, bool), CliError> {
    if !lambda.is_finite() || !mu.is_finite() {
        return Err(CliError::Usage("λ and μ must be finite".into()));
    }
    let model = ModelSpace::new(space.kind());
    let cfg = VerificationConfig::default();
    let verdict = isomorphism_test(&model, lambda, mu, &model.isometry_catalog(), &cfg)?;
    let command = vec!["isom".into(), space.kind().key().into(), lambda.to_string(), mu.to_string()];
    let mut doc = empty_doc(command, space, model.primary_coset().tag.to_string());
    let (deviation, certificate) = match &verdict {
        IsomorphismVerdict::Isomorphic { deviation, .. } => (Some(*deviation), None),
        IsomorphismVerdict::NoWitnessFound { certificate } => (
            None,
            certificate.map(|c| format!("‖T‖_g invariant differs ({} vs {})", format_sqrt2(c.norm_lambda), format_sqrt2(c.norm_mu))),
        ),
    };
    doc.isomorphism = Some(Isomorphism {
        lambda,
        mu,
        verdict: verdict.key().to_string(),
        witness: verdict.witness().map(str::to_string),
        deviation,
        certificate,
    });
    Ok((doc, true))
}

/// Runs the parsed command.
pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let (result, json, space) = match cli.command {
        Command::Classify { space, json } => (classify(space), json, space),
        Command::Verify {
            space,
            label,
            lambda,
            samples,
            tol,
            seed,
            fd_step,
            json,
        } => (verify(space, label, lambda, samples, tol, seed, fd_step), json, space),
        Command::Isom { space, lambda, mu, json } => (isom(space, lambda, mu), json, space),
    };
    let (doc, pass) = result?;
    Ok(Outcome {
        doc,
        pass,
        json,
        space: space.kind(),
    })
}

/// Parses `args` (including the program name), runs, writes output and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = match execute(cli) {
        Ok(o) => o,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            return EXIT_USAGE;
        }
        Err(CliError::Failure(m)) => {
            let _ = writeln!(err, "error: {m}");
            return EXIT_FAILURE;
        }
    };
    let _ = write!(out, "{}", report::render_text(&outcome.doc, &outcome.space.to_string()));
    if let Some(path) = &outcome.json {
        let json = outcome.doc.to_json();
        if path.as_os_str() == "-" {
            let _ = write!(out, "{json}");
        } else if let Err(e) = std::fs::write(path, json) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_FAILURE;
        }
    }
    if outcome.pass {
        EXIT_OK
    } else {
        let _ = writeln!(err, "verification failed");
        EXIT_FAILURE
    }
}

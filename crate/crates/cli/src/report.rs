//! The JSON report document and its text rendering.

use std::fmt::Write as _;

use homstruct_core::reductive::pretty_param;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Nonzero components `T(f_i, f_j, f_k)` in a named frame at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginTensorReport {
    pub frame: Vec<String>,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub label: String,
    pub free_params: Vec<String>,
    pub forced_zero: Vec<String>,
    pub coset: String,
    /// Lie subspaces as a span over the algebra basis.
    pub subspace: String,
    pub tensor: String,
    /// Pipeline tensor at `λ = 1` (or the unique structure for a group).
    pub origin_tensor: OriginTensorReport,
    /// Largest deviation from the closed form over the checked parameter values.
    pub crosscheck_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsResiduals {
    pub nabla_g: f64,
    #[serde(rename = "nabla_R")]
    pub nabla_r: f64,
    #[serde(rename = "nabla_T")]
    pub nabla_t: f64,
    pub pass: bool,
    pub label: String,
    pub lambda: Option<f64>,
    pub canonical_lambda: Option<f64>,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub fd_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariance {
    pub group_elements: usize,
    pub residual: f64,
    pub norm: f64,
    pub norm_squared_variance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isomorphism {
    pub lambda: f64,
    pub mu: f64,
    pub verdict: String,
    pub witness: Option<String>,
    pub deviation: Option<f64>,
    pub certificate: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub command: Vec<String>,
    pub space: String,
    pub coset: String,
    pub families: Vec<Family>,
    pub origin_tensor: Option<OriginTensorReport>,
    pub as_residuals: Option<AsResiduals>,
    pub invariance: Option<Invariance>,
    pub isomorphism: Option<Isomorphism>,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

fn fmt_value(v: f64) -> String {
    if v == v.round() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn write_tensor(out: &mut String, t: &OriginTensorReport, indent: &str) {
    if t.entries.is_empty() {
        let _ = writeln!(out, "{indent}T = 0");
        return;
    }
    for e in &t.entries {
        let _ = writeln!(
            out,
            "{indent}T({}, {}, {}) = {}",
            t.frame[e.i],
            t.frame[e.j],
            t.frame[e.k],
            fmt_value(e.value)
        );
    }
}

/// Human-readable rendering.
pub fn render_text(doc: &ReportDocument, space_display: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "homstruct {}: {} {}", doc.version, doc.command.first().map_or("", String::as_str), space_display);
    for (n, f) in doc.families.iter().enumerate() {
        let _ = writeln!(out, "family {}: {}", n + 1, f.coset);
        let _ = writeln!(out, "  Lie subspaces m = {}", f.subspace);
        let names = |v: &[String]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(|n| pretty_param(n)).collect::<Vec<_>>().join(", ")
            }
        };
        let (free, forced) = (names(&f.free_params), names(&f.forced_zero));
        let _ = writeln!(out, "  free parameters: {free}; forced zero: {forced}");
        let _ = writeln!(out, "  structure tensor: {}", f.tensor);
        let _ = writeln!(out, "  origin tensor in frame ({}):", f.origin_tensor.frame.join(", "));
        write_tensor(&mut out, &f.origin_tensor, "    ");
        let _ = writeln!(out, "  closed-form cross-check: max deviation {:.3e}", f.crosscheck_deviation);
    }
    if let Some(r) = &doc.as_residuals {
        let lam = match (r.lambda, r.canonical_lambda) {
            (Some(l), Some(c)) => format!(" λ = {} (canonical {})", fmt_value(l), fmt_value(c)),
            _ => String::new(),
        };
        let _ = writeln!(out, "structure: {}{lam}", r.label);
        if let Some(t) = &doc.origin_tensor {
            let _ = writeln!(out, "  at o in frame ({}):", t.frame.join(", "));
            write_tensor(&mut out, t, "    ");
        }
        let _ = writeln!(out, "Ambrose–Singer residuals over {} samples (seed {}, fd_step {:e}):", r.samples, r.seed, r.fd_step);
        let _ = writeln!(out, "  ∇̃g  {:.3e}", r.nabla_g);
        let _ = writeln!(out, "  ∇̃R  {:.3e}", r.nabla_r);
        let _ = writeln!(out, "  ∇̃T  {:.3e}", r.nabla_t);
        let _ = writeln!(out, "  {} at tol {:e}", if r.pass { "pass" } else { "FAIL" }, r.tol);
    }
    if let Some(inv) = &doc.invariance {
        let _ = writeln!(
            out,
            "invariance under {} group elements: {:.3e} ({}); ‖T‖_g = {:.6}, variance of ‖T‖²_g {:.3e}",
            inv.group_elements,
            inv.residual,
            if inv.pass { "pass" } else { "FAIL" },
            inv.norm,
            inv.norm_squared_variance
        );
    }
    if let Some(iso) = &doc.isomorphism {
        let _ = write!(out, "T^{} vs T^{}: ", fmt_value(iso.lambda), fmt_value(iso.mu));
        match (&iso.witness, &iso.certificate) {
            (Some(w), _) => {
                let _ = writeln!(out, "isomorphic, witness \"{w}\" (deviation {:.3e})", iso.deviation.unwrap_or(0.0));
            }
            (None, Some(c)) => {
                let _ = writeln!(out, "not isomorphic: {c}");
            }
            (None, None) => {
                let _ = writeln!(out, "no witness found in the isometry catalog");
            }
        }
    }
    out
}

use std::process::{Command, Output};

use homstruct_cli::report::ReportDocument;
use homstruct_cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

fn homstruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homstruct")).args(args).output().expect("binary runs")
}

fn run_in_process(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["homstruct"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_doc(args: &[&str]) -> (i32, ReportDocument, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    full.extend(["--json", p]);
    let (code, _, _) = run_in_process(&full);
    let text = std::fs::read_to_string(&path).unwrap();
    (code, ReportDocument::from_json(&text).unwrap(), text)
}

#[test]
fn classify_s2xr_reports_one_family() {
    let (code, doc, _) = json_doc(&["classify", "s2xr"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc.space, "s2xr");
    assert_eq!(doc.coset, "SO(3)×ℝ/SO(2)");
    assert_eq!(doc.families.len(), 1);
    let f = &doc.families[0];
    assert_eq!(f.tensor, "λ·dy⊗dV_{S²}");
    assert_eq!(f.free_params, ["lambda"]);
    assert_eq!(f.forced_zero, ["lambda_2", "lambda_3"]);
    let t = doc.origin_tensor.unwrap();
    assert_eq!(t.frame, ["∂x²", "∂x³", "∂y"]);
    assert_eq!(t.entries.len(), 2);
    let e = t.entries.iter().find(|e| (e.i, e.j, e.k) == (2, 0, 1)).unwrap();
    assert_eq!(e.value, 1.0);
}

#[test]
fn classify_h2xr_reports_two_families() {
    let (code, doc, _) = json_doc(&["classify", "h2xr"]);
    assert_eq!(code, EXIT_OK);
    let tensors: Vec<&str> = doc.families.iter().map(|f| f.tensor.as_str()).collect();
    assert_eq!(tensors, ["λ·dz⊗dV_{H²}", "θ¹⊗(θ¹∧θ²)"]);
    let cosets: Vec<&str> = doc.families.iter().map(|f| f.coset.as_str()).collect();
    assert_eq!(cosets, ["SL(2,ℝ)×ℝ/SO(2)", "H²×ℝ/{Id}"]);
    assert_eq!(doc.families[1].crosscheck_deviation, 0.0);
}

#[test]
fn json_round_trips_and_has_schema_keys() {
    let (_, doc, text) = json_doc(&["verify", "h2xr", "--lambda", "-1.5", "--samples", "10"]);
    let again = ReportDocument::from_json(&doc.to_json()).unwrap();
    assert_eq!(again, doc);
    assert_eq!(doc.to_json(), text);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["version", "space", "coset", "families", "origin_tensor", "as_residuals", "isomorphism"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["nabla_g", "nabla_R", "nabla_T", "pass"] {
        assert!(v["as_residuals"].get(key).is_some(), "missing as_residuals.{key}");
    }
    assert_eq!(doc.as_residuals.unwrap().canonical_lambda, Some(1.5));
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run_in_process(&["verify", "s2xr", "--lambda", "1", "--samples", "20", "--seed", "7"]).0, EXIT_OK);
    assert_eq!(run_in_process(&["verify", "h2xr", "--label", "solv", "--samples", "20"]).0, EXIT_OK);
    let (code, _, err) = run_in_process(&["verify", "s2xr", "--lambda", "1", "--samples", "10", "--tol", "1e-15"]);
    assert_eq!(code, EXIT_FAILURE, "{err}");
    assert_eq!(run_in_process(&["verify", "s2xr", "--label", "solv"]).0, EXIT_USAGE);
    assert_eq!(run_in_process(&["verify", "s2xr", "--samples", "0"]).0, EXIT_USAGE);
    assert_eq!(run_in_process(&["verify", "s2xr", "--fd-step", "0.5"]).0, EXIT_USAGE);
    assert_eq!(run_in_process(&["verify", "s2xr", "--tol", "abc"]).0, EXIT_USAGE);
}

#[test]
fn isom_verdicts() {
    let (code, doc, _) = json_doc(&["isom", "s2xr", "1", "-1"]);
    assert_eq!(code, EXIT_OK);
    let iso = doc.isomorphism.unwrap();
    assert_eq!(iso.verdict, "isomorphic");
    assert_eq!(iso.witness.as_deref(), Some("reflection"));
    let (_, doc, _) = json_doc(&["isom", "s2xr", "1", "1"]);
    assert_eq!(doc.isomorphism.unwrap().witness.as_deref(), Some("identity"));
    let (_, out, _) = run_in_process(&["isom", "s2xr", "1", "2"]);
    assert!(out.contains("not isomorphic: ‖T‖_g invariant differs (√2 vs 2√2)"), "{out}");
}

#[test]
fn usage_errors_from_the_binary() {
    let out = homstruct(&["classify", "s3"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));
    assert_eq!(homstruct(&[]).status.code(), Some(EXIT_USAGE));
    assert_eq!(homstruct(&["isom", "h2xr", "1"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(homstruct(&["--help"]).status.code(), Some(EXIT_OK));
    assert_eq!(homstruct(&["--version"]).status.code(), Some(EXIT_OK));
}

#[test]
fn text_output_uses_frame_names() {
    let out = homstruct(&["classify", "h2xr"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("T(∂z, ∂x, ∂y) = 1"), "{text}");
    assert!(text.contains("T(e1, e1, e2) = 1"), "{text}");
    assert!(text.contains("forced zero: λ₂, λ₃"), "{text}");
}

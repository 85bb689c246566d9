use std::path::Path;
use std::process::{Command, Output};

use hmf_theta::exponents::presets;
use hmf_theta::{Exponent, GfElement, GradedElement, ModelRef, QExpansion, Rational, WeightVector};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hmf-theta"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|_| {
        panic!(
            "bad report: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn shape_file(dir: &Path) -> String {
    write(dir, "s.json", r#"{"p": 2, "primes": [{"id": "P", "e": 1, "f": 2}]}"#)
}

fn single_term(name: &str, m: &[i64], c: &[i64]) -> QExpansion {
    let model = presets::load(name).unwrap();
    let z = WeightVector::zero(model.shape());
    let mut f = QExpansion::zero(&model, z.clone(), z, Rational::from_integer(60)).unwrap();
    f.add_term(Exponent(m.to_vec()), GfElement::from_coeffs(model.field(), c).unwrap())
        .unwrap();
    f
}

#[test]
fn lambda_index_of_inert_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["weights", "lambda-index", "--shape", &shape_file(dir.path())]);
    assert!(out.status.success());
    assert_eq!(report(&out)["checks"][0]["details"]["index"], "3");
}

#[test]
fn zero_weight_is_in_the_cone() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["weights", "cone-check", "[0, 0]", "--shape", &shape_file(dir.path())]);
    assert!(out.status.success());
    assert_eq!(report(&out)["checks"][0]["details"]["in_cone"], true);
}

#[test]
fn weight_subcommands_print_strings() {
    let dir = tempfile::tempdir().unwrap();
    let s = shape_file(dir.path());
    let out = run(&["weights", "shift-theta", "P:0", "[1, 1]", "[0, 0]", "--shape", &s]);
    let r = report(&out);
    // e = 1, f = 2, p = 2: +1 at theta_0 and +p at its predecessor
    assert_eq!(r["checks"][0]["details"]["k"], serde_json::json!(["2", "3"]));
    assert_eq!(r["checks"][0]["details"]["l"], serde_json::json!(["-1", "0"]));
    let out = run(&["weights", "hbasis", "[1, 2]", "--shape", &s]);
    assert!(out.status.success());
    let out = run(&["weights", "leq-hasse", "[0, 0]", "[-1, 2]", "--shape", &s]);
    assert_eq!(report(&out)["checks"][0]["details"]["leq"], true);
}

#[test]
fn ptwt0_is_empty_for_e2() {
    let out = run(&["weights", "ptwt0", "--p", "5", "--e", "2", "--f", "1"]);
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["checks"][0]["status"], "pass");
    assert_eq!(r["checks"][0]["details"]["feasible"], serde_json::json!([]));
}

#[test]
fn ptwt0_grid_passes() {
    let out = run(&["weights", "ptwt0", "--p", "5", "--e", "3", "--f", "3", "--grid"]);
    assert!(out.status.success());
    assert_eq!(report(&out)["checks"].as_array().unwrap().len(), 27);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let s = shape_file(dir.path());
    assert_eq!(run(&["weights", "rho", "[1, x]", "--shape", &s]).status.code(), Some(2));
    assert_eq!(run(&["weights", "rho", "[1, 2, 3]", "--shape", &s]).status.code(), Some(2));
    assert_eq!(run(&["weights", "lambda-index"]).status.code(), Some(2));
    assert_eq!(run(&["qexp", "verify", "--identity", "nope"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", r#"{"model": "d2-inert3", "k": [0]}"#);
    assert_eq!(
        run(&["qexp", "apply", "--op", "frob", &bad, "-o", "/dev/null"]).status.code(),
        Some(2)
    );
}

#[test]
fn theta_v_zero_random_suite_passes() {
    let out = run(&["qexp", "verify", "--identity", "theta-v-zero", "--random", "50", "--seed", "7"]);
    assert!(out.status.success());
    let r = report(&out);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 50);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
}

fn strip_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn reports_are_deterministic() {
    let args = ["qexp", "verify", "--identity", "exactness", "--random", "20", "--seed", "11", "--model", "d2-split7"];
    let a = strip_timing(report(&run(&args)));
    let b = strip_timing(report(&bin().args(args).env("HMF_THETA_THREADS", "1").output().unwrap()));
    assert_eq!(a, b);
    let c = strip_timing(report(&run(&args[..args.len() - 2])));
    assert_ne!(a, c);
}

#[test]
fn theta_scales_by_residue() {
    let dir = tempfile::tempdir().unwrap();
    let f = single_term("d2-inert3", &[2, 1], &[1, 0]);
    let input = write(dir.path(), "f.json", &f.to_json(ModelRef::Preset("d2-inert3".into())));
    let out_path = dir.path().join("g.json").display().to_string();
    let out = run(&["qexp", "apply", "--op", "theta", "--tau", "P:1", &input, "-o", &out_path]);
    assert!(out.status.success());
    let (g, _) = QExpansion::from_json(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let model = f.model();
    let tau = model.shape().parse_residue("P:1").unwrap();
    let want = model.tau_reduce(tau, &[2, 1]);
    assert_eq!(g.coeff(&Exponent(vec![2, 1])), want);
    assert_eq!(g.k(), &hmf_theta::weights::theta_weight_shift(tau, f.k(), f.l()).0);
}

#[test]
fn v_of_empty_expansion_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let model = presets::load("d2-ram2").unwrap();
    let z = WeightVector::zero(model.shape());
    let f = QExpansion::zero(&model, z.clone(), z, Rational::from_integer(20)).unwrap();
    let input = write(dir.path(), "f.json", &f.to_json(ModelRef::Preset("d2-ram2".into())));
    let out_path = dir.path().join("g.json").display().to_string();
    let out = run(&["qexp", "apply", "--op", "v", "--prime", "P", &input, "-o", &out_path]);
    assert!(out.status.success());
    let (g, _) = QExpansion::from_json(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(g.is_zero());
}

#[test]
fn v0_then_preimage_restores_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = single_term("d2-inert3", &[3, 1], &[2, 1]);
    f.add_term(Exponent(vec![5, -2]), GfElement::from_coeffs(f.model().field(), &[0, 1]).unwrap())
        .unwrap();
    let f = f.relabel(
        &WeightVector::from_vec(f.model().shape(), vec![3, -1]).unwrap(),
        &WeightVector::from_vec(f.model().shape(), vec![0, 2]).unwrap(),
    );
    let text = f.to_json(ModelRef::Preset("d2-inert3".into()));
    let input = write(dir.path(), "f.json", &text);
    let mid = dir.path().join("v.json").display().to_string();
    let back = dir.path().join("back.json").display().to_string();
    assert!(run(&["qexp", "apply", "--op", "v0", "--prime", "P", &input, "-o", &mid]).status.success());
    assert!(run(&["qexp", "apply", "--op", "v0-preimage", "--prime", "P", &mid, "-o", &back])
        .status
        .success());
    assert_eq!(std::fs::read_to_string(&back).unwrap(), text);
    // and the preimage of something off the lattice fails with exit 1
    let out = run(&["qexp", "apply", "--op", "v0-preimage", "--prime", "P", &input, "-o", &back]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["checks"][0]["status"], "fail");
}

#[test]
fn failing_identity_exits_1_with_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    // q^3 alone: both 3(3+2*sqrt2) and 3(3-2*sqrt2) are in the window
    let f = single_term("d2-ram2", &[3, 0], &[1]);
    let input = write(dir.path(), "f.json", &f.to_json(ModelRef::Preset("d2-ram2".into())));
    let out = run(&["qexp", "verify", "--identity", "unit-invariance", "--unit", "[3, 2]", &input]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["checks"][0]["status"], "fail");
    assert!(r["checks"][0]["details"]["input"].is_object());
}

#[test]
fn file_suites_run() {
    let dir = tempfile::tempdir().unwrap();
    let f = single_term("d2-inert3", &[2, 1], &[1, 1]);
    let g = single_term("d2-inert3", &[4, -1], &[0, 2]);
    let r = ModelRef::Preset("d2-inert3".into());
    let a = write(dir.path(), "f.json", &f.to_json(r.clone()));
    let b = write(dir.path(), "g.json", &g.to_json(r.clone()));
    for id in ["theta-commute", "theta-v-zero", "theta-p", "kernel-image"] {
        assert!(run(&["qexp", "verify", "--identity", id, &a]).status.success(), "{id}");
    }
    assert!(run(&["qexp", "verify", "--identity", "derivation", &a, &b]).status.success());
    let mut small = single_term("d2-inert3", &[3, 1], &[1, 0]);
    small.set_constant(GfElement::one(small.model().field())).unwrap();
    let p = write(dir.path(), "p.json", &small.to_json(r.clone()));
    assert!(run(&["qexp", "verify", "--identity", "ppower", &p]).status.success());

    let x = GradedElement::from_expansion(f.apply_v(0).unwrap());
    let xs = write(dir.path(), "x.json", &serde_json::to_string(&x.to_records(&r)).unwrap());
    let out = run(&["qexp", "verify", "--identity", "exactness", &xs]);
    assert!(out.status.success());
    assert_eq!(report(&out)["checks"][0]["details"]["P:0"]["verdict"], "exact");
}

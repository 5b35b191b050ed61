use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use xmeter_cli::external::ExternalModel;
use xmeter_core::bench::ParkFunction;
use xmeter_core::{gradient, Error, Model, OutputKind, Prediction};

fn fixture(mode: &str) -> String {
    format!("{} {mode}", env!("CARGO_BIN_EXE_xmeter-fixture-model"))
}

#[test]
fn handshake_reports_arity_and_output() {
    let m = ExternalModel::spawn(&format!("{} 5", fixture("echo"))).unwrap();
    assert_eq!(m.arity(), 5);
    assert_eq!(m.output_kind(), OutputKind::Scalar);
    assert_eq!(
        m.predict(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(),
        Prediction::Scalar(15.0)
    );
    assert!(m.predict(&[1.0]).is_err());
}

#[test]
fn park_fixture_matches_builtin() {
    let m = ExternalModel::spawn(&fixture("park")).unwrap();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let x: Vec<f64> = (0..6).map(|_| r.random_range(0.0..1.0)).collect();
        let Prediction::Scalar(y) = m.predict(&x).unwrap() else {
            panic!("scalar expected")
        };
        assert!((y - ParkFunction::eval(&x)).abs() < 1e-9);
        let g = gradient(&m, &x, 0).unwrap();
        for (a, b) in g.iter().zip(ParkFunction::grad(&x)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn jacobian_rows_are_selected_by_output() {
    let m = ExternalModel::spawn(&format!("{} 2", fixture("softmax"))).unwrap();
    assert_eq!(m.output_kind(), OutputKind::Probs);
    let x = [0.3, -0.1];
    let p = 1.0 / (1.0 + (-0.2f64).exp());
    let d = p * (1.0 - p);
    let g0 = gradient(&m, &x, 0).unwrap();
    let g1 = gradient(&m, &x, 1).unwrap();
    assert!(g0.iter().all(|v| (v + d).abs() < 1e-12));
    assert!(g1.iter().all(|v| (v - d).abs() < 1e-12));
    assert!(gradient(&m, &x, 2).is_err());
}

#[test]
fn garbage_output_is_a_protocol_error() {
    let err = ExternalModel::spawn(&fixture("garbage")).err().unwrap();
    assert!(matches!(err, Error::ModelProtocol(_)), "{err:?}");
}

#[test]
fn silent_model_times_out() {
    let start = Instant::now();
    let err = ExternalModel::spawn_with_timeout(&fixture("silent"), Duration::from_millis(300))
        .err()
        .unwrap();
    assert!(
        matches!(&err, Error::ModelProtocol(m) if m.contains("did not answer")),
        "{err:?}"
    );
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn crash_keeps_stderr() {
    let err = ExternalModel::spawn(&fixture("crash")).err().unwrap();
    match err {
        Error::ModelProtocol(m) => assert!(m.contains("fixture crashed on purpose"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_gradient_is_unsupported() {
    let m = ExternalModel::spawn(&fixture("nograd")).unwrap();
    let err = gradient(&m, &[0.0; 3], 0).err().unwrap();
    assert!(matches!(err, Error::Unsupported(_)), "{err:?}");
}

#[test]
fn missing_binary_is_a_protocol_error() {
    let err = ExternalModel::spawn("/nonexistent/model --flag")
        .err()
        .unwrap();
    assert!(matches!(err, Error::ModelProtocol(_)));
}

#[test]
fn cli_exit_codes_follow_error_kind() {
    let run = |cmd: String, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_xmeter"))
            .args(["attr-eval", "--model-cmd", &cmd, "--point", "0.1,0.2,0.3"])
            .args(extra)
            .output()
            .unwrap()
    };
    assert_eq!(run(fixture("garbage"), &[]).status.code(), Some(3));
    let out = run(fixture("silent"), &["--model-timeout", "0.3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cli_with_external_park_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let point = "0.24,0.48,0.56,0.99,0.68,0.86";
    let common = [
        "attr-eval",
        "--point",
        point,
        "--n-mc",
        "500",
        "--uniform-lo",
        "0",
        "--uniform-hi",
        "1",
    ];
    for (sub, model) in [
        ("ext", ["--model-cmd", &fixture("park")]),
        ("int", ["--model", "park"]),
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_xmeter"))
            .args(common)
            .args(model)
            .args(["--format", "csv", "--out-dir"])
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let rows = |sub: &str| {
        let text = std::fs::read_to_string(dir.path().join(sub).join("attr_eval.csv")).unwrap();
        xmeter_cli::output::parse_attr_csv(&text).unwrap()
    };
    let (ext, int) = (rows("ext"), rows("int"));
    assert_eq!(ext.len(), int.len());
    for (a, b) in ext.iter().zip(&int) {
        assert_eq!(
            (a.complexity, a.effective_complexity, a.non_sensitivity),
            (b.complexity, b.effective_complexity, b.non_sensitivity)
        );
        assert!((a.monotonicity - b.monotonicity).abs() < 1e-9);
    }
}

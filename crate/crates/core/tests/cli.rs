use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use purifykit::formats::{parse_ensemble, BipartiteFile};
use tempfile::TempDir;

const MIX01: &str = r#"{"dim": 2, "weights": [0.5, 0.5], "states": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}"#;
const MIXPM: &str = r#"{"dim": 2, "weights": [0.5, 0.5],
  "states": [[[0.7071067811865476, 0], [0.7071067811865476, 0]],
             [[0.7071067811865476, 0], [-0.7071067811865476, 0]]]}"#;
const BIASED: &str = r#"{"dim": 2, "weights": [0.3, 0.7], "states": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}"#;
const THREE: &str = r#"{"dim": 2, "weights": [0.5, 0.3, 0.2],
  "states": [[[1, 0], [0, 0]], [[0, 0], [1, 0]], [[0.7071067811865476, 0], [0.7071067811865476, 0]]]}"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn purifykit(args: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_purifykit"))
        .args(args)
        .env_remove("PURIFYKIT_TOL")
        .output()
        .unwrap()
}

fn run(args: &[&str]) -> Output {
    let args: Vec<&Path> = args.iter().map(Path::new).collect();
    purifykit(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Every line that reports a number compared against a bound names the bound.
fn assert_tolerance_labels(text: &str) {
    for line in text.lines().filter(|l| l.contains(" = ") && (l.ends_with("ok") || l.ends_with("FAIL"))) {
        assert!(line.contains("(tol "), "unlabelled line: {line}");
    }
}

#[test]
fn equiv_exit_codes() {
    let f = Fixture::new();
    let a = f.file("mix01.json", MIX01);
    let b = f.file("mixpm.json", MIXPM);
    let c = f.file("biased.json", BIASED);
    let out = run(&["equiv", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("(tol 1e-9) equivalent"));
    let out = run(&["equiv", a.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("not equivalent"));
}

#[test]
fn purify_writes_state() {
    let f = Fixture::new();
    let e = f.file("mix01.json", MIX01);
    let out_path = f.path("psi.json");
    let out = run(&[
        "purify",
        e.to_str().unwrap(),
        "--kdim",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_tolerance_labels(&text);
    let line = text.lines().find(|l| l.starts_with("partial_trace_residual")).unwrap();
    let value: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(value <= 1e-10);
    let file: BipartiteFile =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!((file.dim_s, file.dim_k, file.amplitudes.len()), (2, 2, 4));
}

#[test]
fn purify_rejects_small_reference() {
    let f = Fixture::new();
    let e = f.file("mix01.json", MIX01);
    assert_eq!(code(&run(&["purify", e.to_str().unwrap(), "--kdim", "1"])), 1);
}

#[test]
fn steer_valid_and_not_equivalent() {
    let f = Fixture::new();
    let spec = f.file("biased.json", BIASED);
    let plan = f.path("plan.json");
    let target = f.file("mix01.json", MIX01);
    let three = f.file("three.json", THREE);

    let eq_target = {
        let rho = f.file("three_rho.json", THREE);
        let out = run(&["random-equiv", rho.to_str().unwrap(), "--count", "4", "--seed", "5"]);
        assert_eq!(code(&out), 0);
        f.file("three_equiv.json", &stdout(&out))
    };
    let out = run(&[
        "steer",
        three.to_str().unwrap(),
        eq_target.to_str().unwrap(),
        "--out",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_tolerance_labels(&stdout(&out));
    let plan_text = std::fs::read_to_string(&plan).unwrap();
    assert!(plan_text.contains("\"isometry\"") && plan_text.contains("\"report\""));

    let out = run(&["steer", spec.to_str().unwrap(), target.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn dynamics_and_qubit_demo() {
    let f = Fixture::new();
    let e = f.file("three.json", THREE);
    let report = f.path("dyn.txt");
    let out = run(&[
        "dynamics",
        e.to_str().unwrap(),
        "--omega",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_tolerance_labels(&stdout(&out));
    assert_eq!(std::fs::read_to_string(&report).unwrap(), stdout(&out));

    let out = run(&["qubit-demo", "--q", "0.3", "--theta", "-0.4", "--phase", "1.1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_tolerance_labels(&stdout(&out));
}

#[test]
fn random_equiv_is_reproducible() {
    let f = Fixture::new();
    let rho = f.file("three.json", THREE);
    let args = ["random-equiv", rho.to_str().unwrap(), "--count", "5", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let e = parse_ensemble(&stdout(&a)).unwrap();
    assert_eq!(e.len(), 5);
    let other = run(&["random-equiv", rho.to_str().unwrap(), "--count", "5", "--seed", "43"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn invalid_inputs_exit_one() {
    let f = Fixture::new();
    let good = f.file("mix01.json", MIX01);
    let bad_json = f.file("bad.json", "{\"dim\": 2,");
    let bad_weights = f.file(
        "weights.json",
        r#"{"dim": 1, "weights": [0.5], "states": [[[1, 0]]]}"#,
    );
    let missing = f.path("missing.json");
    let g = good.to_str().unwrap();
    for args in [
        vec!["equiv", g, missing.to_str().unwrap()],
        vec!["equiv", g, bad_json.to_str().unwrap()],
        vec!["equiv", g, bad_weights.to_str().unwrap()],
        vec!["equiv", g, g, "--tol", "0"],
        vec!["equiv", g, g, "--tol", "-1e-3"],
        vec!["steer", g, bad_json.to_str().unwrap()],
        vec!["qubit-demo", "--q", "1.5"],
        vec!["no-such-command"],
    ] {
        assert_eq!(code(&run(&args)), 1, "{args:?}");
    }
}

#[test]
fn tolerance_from_environment() {
    let f = Fixture::new();
    let a = f.file("biased.json", BIASED);
    let b = f.file("mix01.json", MIX01);
    let with_env = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_purifykit"))
            .args(["equiv", a.to_str().unwrap(), b.to_str().unwrap()])
            .env("PURIFYKIT_TOL", value)
            .output()
            .unwrap()
    };
    // diagonal entries differ by 0.2
    let loose = with_env("0.5");
    assert_eq!(code(&loose), 0);
    assert!(stdout(&loose).contains("(tol 5e-1)"));
    assert_eq!(code(&with_env("0.1")), 3);
    assert_eq!(code(&with_env("nope")), 1);
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_purifykit"))
        .args(["equiv", a.to_str().unwrap(), b.to_str().unwrap(), "--tol", "0.1"])
        .env("PURIFYKIT_TOL", "0.5")
        .output()
        .unwrap();
    assert_eq!(code(&flag_wins), 3);
}

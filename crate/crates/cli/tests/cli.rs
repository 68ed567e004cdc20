use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn hilfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hilfer"))
        .args(args)
        .output()
        .unwrap()
}

fn run(verb: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        verb,
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    hilfer(&args)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

const CLASSICAL: &str = r#"
name = "classical"
psi = "identity"
alpha = 1
beta = 0
t0 = 0
T = 1
delay_a = 1
rhs = "0.25*y + 0.25*yd"
L1 = 0.25
L2 = 0.25
history = "1"
phi = "1"
epsilon = 0.1
experiments = 10
"#;

#[test]
fn certify_uh_reproduces_worked_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "certify-uh",
        &scenarios_dir().join("classical.toml"),
        tmp.path(),
        &["--experiments", "20"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert = json(&tmp.path().join("classical/certificate_uh.json"));
    assert!((cert["B"]["max"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert_eq!(cert["pass"], true);
    assert_eq!(cert["condition_ok"], true);
    assert_eq!(cert["outcomes"].as_array().unwrap().len(), 20);
    assert!(String::from_utf8_lossy(&out.stdout).contains("classical: pass"));
}

#[test]
fn bound_table_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "certify-uhr",
        &scenarios_dir().join("classical.toml"),
        tmp.path(),
        &["--experiments", "5"],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("classical/bound_uhr.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y0,B,max_dev"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 64 + 64 + 1);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 4);
        for c in cells {
            let mantissa = c.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{c}");
            c.parse::<f64>().unwrap();
        }
    }
    // History rows carry no deviation.
    assert!(rows[..64]
        .iter()
        .all(|r| r.ends_with(",0.0000000000000000e0")));
}

#[test]
fn zero_epsilon_gives_zero_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(
        tmp.path(),
        &CLASSICAL.replace("epsilon = 0.1", "epsilon = 0"),
    );
    let out = run("certify-uh", &path, tmp.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(tmp.path().join("classical/bound_uh.csv")).unwrap();
    for row in text.lines().skip(1) {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[2], 0.0);
        assert_eq!(cells[3], 0.0);
    }
}

#[test]
fn violated_contraction_fails_closed() {
    let tmp = tempfile::tempdir().unwrap();
    let body = CLASSICAL
        .replace("0.25*y + 0.25*yd", "0.6*y + 0.6*yd")
        .replace("0.25\n", "0.6\n");
    let path = write_scenario(tmp.path(), &body);
    for verb in ["certify-uh", "certify-uhr"] {
        let out = run(verb, &path, tmp.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{verb}");
        let kind = verb.trim_start_matches("certify-");
        let cert = json(
            &tmp.path()
                .join(format!("classical/certificate_{kind}.json")),
        );
        assert_eq!(cert["condition_ok"], false);
        assert_eq!(cert["pass"], false);
        assert!(cert["reason"].as_str().unwrap().contains("contraction"));
        assert!(!tmp
            .path()
            .join(format!("classical/bound_{kind}.csv"))
            .exists());
        assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    }
}

#[test]
fn degenerate_lipschitz_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let body = CLASSICAL
        .replace("0.25*y + 0.25*yd", "sin(t)")
        .replace("0.25\n", "0\n");
    let path = write_scenario(tmp.path(), &body);
    let out = run("certify-uh", &path, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let cert = json(&tmp.path().join("classical/certificate_uh.json"));
    assert!(cert["reason"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn input_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (body, needle) in [
        (
            CLASSICAL.replace("alpha = 1", "alpha = 1.5"),
            "alpha must lie in (0,1]",
        ),
        (
            CLASSICAL.replace("phi = \"1\"", "phi = \"-1\""),
            "phi must be positive",
        ),
        (format!("{CLASSICAL}\nbogus = 1\n"), "bogus"),
        (CLASSICAL.replace("0.25*y", "y/4"), "division"),
        ("not toml [".to_string(), ""),
    ] {
        let path = write_scenario(tmp.path(), &body);
        let out = run("solve", &path, tmp.path(), &[]);
        assert_eq!(out.status.code(), Some(2), "{needle}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains(needle),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = run("solve", &tmp.path().join("missing.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        "solve",
        &scenarios_dir().join("classical.toml"),
        tmp.path(),
        &["--mode", "sideways"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        "converge",
        &scenarios_dir().join("classical.toml"),
        tmp.path(),
        &["--refinements", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_solve_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let body = CLASSICAL
        .replace("0.25*y + 0.25*yd", "1000*y + 1000*yd")
        .replace("0.25\n", "1000\n");
    let path = write_scenario(tmp.path(), &body);
    let out = run("solve", &path, tmp.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn lipschitz_warning_goes_to_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(
        tmp.path(),
        &CLASSICAL.replace("0.25*y + 0.25*yd", "0.4*y + 0.25*yd"),
    );
    let out = run("solve", &path, tmp.path(), &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr)
        .contains("warning: declared Lipschitz constants violated"));
    let doc = json(&tmp.path().join("classical/solve.json"));
    assert_eq!(doc["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let scenario = scenarios_dir().join("caputo-sine.toml");
    for verb in ["solve", "certify-uhr", "certify-uh", "converge"] {
        for dir in [a.path(), b.path()] {
            assert!(run(
                verb,
                &scenario,
                dir,
                &["--experiments", "8", "--seed", "42"]
            )
            .status
            .success());
        }
    }
    let mut names: Vec<_> = fs::read_dir(a.path().join("caputo-sine"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let x = fs::read(a.path().join("caputo-sine").join(&name)).unwrap();
        let y = fs::read(b.path().join("caputo-sine").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
}

#[test]
fn seed_changes_experiments() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("classical.toml");
    let ratio = |seed: &str| {
        assert!(run(
            "certify-uh",
            &scenario,
            tmp.path(),
            &["--experiments", "4", "--seed", seed]
        )
        .status
        .success());
        json(&tmp.path().join("classical/certificate_uh.json"))["empirical_sup_ratio"]
            .as_f64()
            .unwrap()
    };
    assert_ne!(ratio("1"), ratio("2"));
}

#[test]
fn convergence_study_table() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), &CLASSICAL.replace("alpha = 1", "alpha = 0.5"));
    let out = run(
        "converge",
        &path,
        tmp.path(),
        &["--refinements", "3", "--delta", "1.5"],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("classical/convergence.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["n", "error", "ratio", "order"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1][0], "64");
    assert_eq!(rows[4][0], "512");
    assert_eq!(rows[1][2], "");
    let order: f64 = rows[4][3].parse().unwrap();
    assert!(order > 1.4, "{order}");
}

#[test]
fn unit_order_study_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "converge",
        &scenarios_dir().join("classical.toml"),
        tmp.path(),
        &["--refinements", "2"],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(tmp.path().join("classical/convergence.csv")).unwrap();
    for row in text.lines().skip(1) {
        let err: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(err < 1e-13, "{row}");
    }
}

#[test]
fn scenario_lists_write_one_directory_each() {
    let tmp = tempfile::tempdir().unwrap();
    let body = CLASSICAL.replace("name = \"classical\"", "");
    let doc = format!(
        "[[scenario]]\nname = \"first\"\n{body}\n[[scenario]]\nname = \"second\"\n{}",
        body.replace("alpha = 1", "alpha = 0.7")
    );
    let path = write_scenario(tmp.path(), &doc);
    let out = run(
        "solve",
        &path,
        tmp.path(),
        &["--mode", "weighted-hilfer", "--steps-per-delay", "16"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["first", "second"] {
        let doc = json(&tmp.path().join(name).join("solve.json"));
        assert_eq!(doc["scenario"]["initial_term_mode"], "weighted-hilfer");
        assert_eq!(doc["scenario"]["steps_per_delay"], 16);
    }
}

#[test]
fn tight_mode_override() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = scenarios_dir().join("hadamard-rl.toml");
    let b = |mode: &str| {
        let out = run(
            "certify-uh",
            &scenario,
            tmp.path(),
            &["--experiments", "2", "--uh-mode", mode],
        );
        assert!(out.status.success());
        json(&tmp.path().join("hadamard-rl/certificate_uh.json"))["B"]["max"]
            .as_f64()
            .unwrap()
    };
    // t0 = 1 on the log scale: both modes use ln T.
    assert_eq!(b("tight"), b("paper-literal"));
}

#[test]
fn whole_catalog_certifies() {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = run("certify-uhr", &path, tmp.path(), &["--experiments", "10"]);
        assert!(out.status.success(), "{}", path.display());
        assert!(
            String::from_utf8_lossy(&out.stdout).contains(": pass "),
            "{}",
            path.display()
        );
    }
}

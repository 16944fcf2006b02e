use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polygame"))
}

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn run_writes_outputs_and_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "short.json",
        r#"{"game": "wrps", "alpha": 0.05, "integrator": {"T": 5, "stride": 5}}"#,
    );
    let cfg = cfg.to_str().unwrap();
    let out1 = run_in(dir.path(), &["run", cfg]);
    assert_eq!(out1.status.code(), Some(0), "{}", String::from_utf8_lossy(&out1.stderr));
    let run_dir = dir.path().join("out/short");
    let traj1 = std::fs::read(run_dir.join("trajectory.csv")).unwrap();
    let obs1 = std::fs::read(run_dir.join("observables.csv")).unwrap();
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["variant"], "dftrl");
    assert_eq!(summary["alpha"], 0.05);
    assert_eq!(summary["recorded_points"], 101);

    assert_eq!(run_in(dir.path(), &["run", cfg]).status.code(), Some(0));
    assert_eq!(traj1, std::fs::read(run_dir.join("trajectory.csv")).unwrap());
    assert_eq!(obs1, std::fs::read(run_dir.join("observables.csv")).unwrap());

    let header = String::from_utf8(traj1).unwrap();
    assert!(header.starts_with("t,agent,coord,x,y\n0.0000000000000000e0,0,0,"));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", r#"{"game": "rps", "alpha": "#),
        ("unknown.json", r#"{"game": "rps", "alpah": 0.1}"#),
        ("preset.json", r#"{"game": "chess"}"#),
        ("negative.json", r#"{"game": "rps", "alpha": -1}"#),
        ("dims.json", r#"{"game": "rps", "x0": [[0.5, 0.5], [0.2, 0.3, 0.5]]}"#),
    ];
    for (name, body) in cases {
        let p = write_config(dir.path(), name, body);
        let out = run_in(dir.path(), &["run", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"), "{name}");
    }
    let out = run_in(dir.path(), &["run", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["verify", "speed"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("conservation"));
}

#[test]
fn field_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "bad.json", r#"{"game": "rps", "integrator": {"dt": "small"}}"#);
    let out = run_in(dir.path(), &["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrator.dt"));
}

#[test]
fn leaving_the_euclidean_domain_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "edge.json",
        r#"{"game": "rps", "regularizer": "euclidean", "variant": "ftrl",
            "x0": [[0.1, 0.1, 0.8], [0.1, 0.1, 0.8]], "integrator": {"T": 50}}"#,
    );
    let out = run_in(dir.path(), &["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("runtime error"));
}

#[test]
fn sweep_writes_one_directory_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "sw.json",
        r#"{"game": "wrps", "integrator": {"T": 50}, "alphas": [0.0, 0.05, 0.15, 0.05]}"#,
    );
    let out = run_in(dir.path(), &["--jobs", "3", "sweep", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate alpha 0.05"));
    let root = dir.path().join("out/sw");
    for a in ["0", "0.05", "0.15"] {
        assert!(root.join(format!("alpha_{a}/observables.csv")).exists(), "{a}");
    }
    let csv = std::fs::read_to_string(root.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // larger alpha ends closer to the equilibrium
    assert!(rows[0][1] > rows[1][1] && rows[1][1] > rows[2][1]);
}

#[test]
fn shipped_presets_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(presets()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        n += 1;
        let stem = path.file_stem().unwrap().to_str().unwrap().to_string();
        polygame::cli::config::RunConfig::load(&path)
            .and_then(|c| c.resolve(&stem))
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
    assert!(n >= 5);
}

#[test]
fn plots_render_and_reject_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, body) in [
        ("ftrl.json", r#"{"game": "rps", "variant": "ftrl", "integrator": {"T": 20}}"#),
        ("dftrl.json", r#"{"game": "rps", "integrator": {"T": 20}}"#),
        ("mp.json", r#"{"game": "mp3", "integrator": {"T": 20}}"#),
    ] {
        let p = write_config(d, name, body);
        assert_eq!(run_in(d, &["run", p.to_str().unwrap()]).status.code(), Some(0));
    }
    let out = run_in(
        d,
        &["plot", "out/ftrl/observables.csv", "out/dftrl/observables.csv", "--name", "fenchel", "--out", "fig/gf.svg"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(d.join("fig/gf.svg")).unwrap();
    assert!(svg.contains(r#"version="1.1""#));
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("ftrl/fenchel") && svg.contains("dftrl/fenchel"));

    let out = run_in(d, &["plot", "out/ftrl/trajectory.csv", "--kind", "simplex", "--out", "fig/s.svg"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_in(d, &["plot", "out/mp/trajectory.csv", "--kind", "cube", "--out", "fig/c.svg"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(d.join("fig/c.svg")).unwrap().contains("stroke-dasharray"));

    // wrong shape, empty and malformed inputs
    let out = run_in(d, &["plot", "out/ftrl/trajectory.csv", "--kind", "cube", "--out", "fig/x.svg"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(d.join("empty.csv"), "").unwrap();
    assert_eq!(run_in(d, &["plot", "empty.csv", "--out", "fig/x.svg"]).status.code(), Some(1));
    std::fs::write(d.join("header.csv"), "t,name,value\n").unwrap();
    assert_eq!(run_in(d, &["plot", "header.csv", "--out", "fig/x.svg"]).status.code(), Some(1));
    std::fs::write(d.join("junk.csv"), "t,name,value\n1.0,energy\n").unwrap();
    assert_eq!(run_in(d, &["plot", "junk.csv", "--out", "fig/x.svg"]).status.code(), Some(1));
}

#[test]
fn verify_regularizer_suite_passes() {
    let out = bin().args(["verify", "regularizers"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 6);
}

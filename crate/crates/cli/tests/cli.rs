//! Black-box tests of the command-line interface: flag handling, file
//! outputs, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_matprint")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("matprint-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Tiny database shared by the read-only tests (3 steps, coarse mesh, one
/// model family point).
fn shared_db() -> &'static Path {
    use std::sync::OnceLock;
    static DB: OnceLock<PathBuf> = OnceLock::new();
    DB.get_or_init(|| {
        let dir = tmp("shared-db");
        let out = run(&[
            "generate",
            "--out",
            dir.to_str().unwrap(),
            "--models",
            "neo-hookean",
            "--steps",
            "3",
            "--edge-length",
            "7.5",
            "--jobs",
            "2",
        ]);
        assert!(out.status.success(), "generate failed: {}", stderr(&out));
        dir.join("database.txt")
    })
}

#[test]
fn generate_writes_database_and_report() {
    let db = shared_db();
    assert!(db.exists());
    let report = db.parent().unwrap().join("report.csv");
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.starts_with("index,model,alpha,valid_steps,wall_ms\n"));
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("0,neo-hookean,,3,"));
}

#[test]
fn simulate_match_self_recognizes() {
    let sim = tmp("sim");
    let out = run(&[
        "simulate",
        "--out",
        sim.to_str().unwrap(),
        "--model",
        "neo-hookean",
        "--theta",
        "1.0",
        "--steps",
        "3",
        "--edge-length",
        "7.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let forces = std::fs::read_to_string(sim.join("forces.csv")).unwrap();
    assert!(forces.starts_with("step,lambda,Rx_N,Ry_N\n"));
    assert_eq!(forces.lines().count(), 4);
    // monotone reaction growth
    let rx: Vec<f64> = forces
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(rx.windows(2).all(|w| w[1] > w[0]));

    let matched = tmp("match-out");
    let out = run(&[
        "match",
        "--db",
        shared_db().to_str().unwrap(),
        "--fingerprint",
        sim.join("fingerprint.txt").to_str().unwrap(),
        "--out",
        matched.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("model = neo-hookean"), "{text}");
    assert!(text.contains("best_index = 0"));
    let ranking = std::fs::read_to_string(matched.join("ranking.csv")).unwrap();
    assert!(ranking.starts_with("rank,index,model,alpha,score\n"));
}

#[test]
fn match_rejects_protocol_mismatch_with_exit_2() {
    // a fingerprint simulated under a different step count carries a
    // different descriptor hash
    let sim = tmp("sim-other");
    let out = run(&[
        "simulate",
        "--out",
        sim.to_str().unwrap(),
        "--model",
        "neo-hookean",
        "--theta",
        "1.0",
        "--steps",
        "2",
        "--edge-length",
        "7.5",
    ]);
    assert!(out.status.success());
    let out = run(&[
        "match",
        "--db",
        shared_db().to_str().unwrap(),
        "--fingerprint",
        sim.join("fingerprint.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn ingest_schema_violation_exits_3_naming_column() {
    let data = tmp("bad-data");
    std::fs::write(
        data.join("forces_rep1.csv"),
        "u_clamp_mm,Rx_N\n0,0\n1,1\n",
    )
    .unwrap();
    std::fs::write(
        data.join("stage1_rep1.csv"),
        "x_mm,y_mm,ux_mm,uy_mm,valid\n0,0,0,0,1\n",
    )
    .unwrap();
    let out = run(&[
        "ingest",
        "--db",
        shared_db().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("Ry_N"), "{}", stderr(&out));
}

#[test]
fn zero_step_program_rejected() {
    let out = run(&[
        "simulate",
        "--out",
        tmp("zero").to_str().unwrap(),
        "--model",
        "neo-hookean",
        "--theta",
        "1.0",
        "--steps",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn unknown_model_token_rejected() {
    let out = run(&[
        "generate",
        "--out",
        tmp("bad-model").to_str().unwrap(),
        "--models",
        "hencky",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("hencky"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tmp("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "steps = 2\nedge-length = 7.5\nmodels = neo-hookean\n").unwrap();
    let out_a = dir.join("a");
    let out = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let db_text = std::fs::read_to_string(out_a.join("database.txt")).unwrap();
    assert!(db_text.contains("n_t = 2"));

    // flag overrides the file value
    let out_b = dir.join("b");
    let out = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "3",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let db_text = std::fs::read_to_string(out_b.join("database.txt")).unwrap();
    assert!(db_text.contains("n_t = 3"));
}

#[test]
fn rank_and_inspect_outputs() {
    let sim = tmp("rank-sim");
    let out = run(&[
        "simulate",
        "--out",
        sim.to_str().unwrap(),
        "--model",
        "mooney-rivlin",
        "--theta",
        "0.5,0.25",
        "--steps",
        "3",
        "--edge-length",
        "7.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let ranked = tmp("rank-out");
    let out = run(&[
        "rank",
        "--db",
        shared_db().to_str().unwrap(),
        "--fingerprint",
        sim.join("fingerprint.txt").to_str().unwrap(),
        "--out",
        ranked.to_str().unwrap(),
        "--top",
        "5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(ranked.join("ranking.csv")).unwrap();
    // a 1-entry database clamps top-5 to one row plus the header
    assert_eq!(csv.lines().count(), 2);

    let out = run(&["inspect", "--db", shared_db().to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("n_d = 1"), "{text}");
    assert!(text.contains("model neo-hookean : 1 entries"), "{text}");
    assert!(text.contains("descriptor_hash = "), "{text}");
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tmp("rerun");
    for sub in ["a", "b"] {
        let out = run(&[
            "generate",
            "--out",
            dir.join(sub).to_str().unwrap(),
            "--models",
            "neo-hookean",
            "--steps",
            "2",
            "--edge-length",
            "7.5",
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.join("a/database.txt")).unwrap();
    let b = std::fs::read(dir.join("b/database.txt")).unwrap();
    assert_eq!(a, b);
}

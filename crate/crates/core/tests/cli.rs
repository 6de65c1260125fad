use std::process::Command;

fn rmm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rmm"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = rmm().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn sample_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.csv");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let (code, _, err) = run(&[
            "sample", "--target", "quadratic", "--diag", "1,4", "--method", "rmm", "--h", "0.05",
            "--n-steps", "50", "--chains", "8", "--seed", "3", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        outputs.push(std::fs::read(&path).unwrap());
        std::fs::remove_file(&path).unwrap();
    }
    let (ta, tb) = (outputs[0].clone(), outputs[1].clone());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 2 + 8);
    let meta: serde_json::Value = serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(meta["run"]["grad_evals"], 8 * 2 * 50);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config"]["seed"], 3);
}

#[test]
fn zero_steps_return_the_start_point() {
    let (code, out, _) = run(&[
        "sample", "--target", "quadratic", "--diag", "1,2", "--center", "0.25,-3", "--h", "0.05", "--n-steps", "0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(2), Some("0,0.25,-3"));
}

#[test]
fn epsilon_schedule_is_recorded_in_metadata() {
    let (code, out, _) = run(&["sample", "--target", "quadratic", "--diag", "1,8", "--epsilon", "0.5", "--chains", "2"]);
    assert_eq!(code, 0);
    let meta: serde_json::Value = serde_json::from_str(out.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    let h = meta["run"]["h"].as_f64().unwrap();
    let n = meta["run"]["n_steps"].as_u64().unwrap();
    let kappa = 8.0f64;
    assert_eq!(n, ((2.0 * kappa / h) * (20.0f64 / 0.25).ln()).ceil() as u64);
}

#[test]
fn schedule_prints_json() {
    let (code, out, _) = run(&["schedule", "--epsilon", "0.1", "--kappa", "100", "--lipschitz", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["h"].as_f64().unwrap() <= 0.05 && v["N"].as_u64().unwrap() > 0);
    let (code, out, _) = run(&["schedule", "--epsilon", "0.1", "--kappa", "100", "--parallel"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["R"].as_u64().unwrap() >= 1 && v["K"].as_u64().unwrap() >= 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "target = \"quadratic\"\ndiag = [1.0]\nh = 0.05\nn_steps = 0\ncenter = [7.0]\n").unwrap();
    let (code, out, _) = run(&["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(2), Some("0,7"));
    let (code, out, _) = run(&["sample", "--config", cfg.to_str().unwrap(), "--center", "-1"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().nth(2), Some("0,-1"));
}

#[test]
fn errors_map_to_documented_exit_codes() {
    assert_eq!(run(&["sample", "--target", "quadratic", "--diag", "1", "--method", "nope"]).0, 2);
    assert_eq!(run(&["sample", "--target", "cubic"]).0, 2);
    assert_eq!(run(&["sample", "--target", "quadratic", "--diag", "1"]).0, 2);
    let (code, _, err) = run(&["fig1", "--target", "logistic", "--dataset", "/nonexistent/file.libsvm"]);
    assert_eq!(code, 3, "{err}");
    let (code, _, _) = run(&["convergence", "--target", "logistic", "--dataset", "synthetic:20x2"]);
    assert_eq!(code, 2);
}

#[test]
fn fig1_reports_table_and_slopes() {
    let (code, out, err) = run(&[
        "fig1", "--target", "quadratic", "--diag", "1,3", "--h-values", "0.1,0.2", "--t-total", "2",
        "--refinement", "32", "--chains", "3",
    ]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "h,method,mean_error,std_error");
    assert_eq!(lines.iter().filter(|l| l.starts_with("# slope,")).count(), 2);
    assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn convergence_reports_one_row_per_epsilon() {
    let (code, out, err) = run(&[
        "convergence", "--target", "quadratic", "--diag", "1,2", "--epsilons", "0.5", "--chains", "150",
    ]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "epsilon,h,N,w2,w2_normalized,ci_low,ci_high");
    assert_eq!(lines.len(), 3);
}

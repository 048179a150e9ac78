use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gfem-aux"))
}

#[test]
fn small_run_prints_csv() {
    let out = bin()
        .args(["--experiment", "2", "--h-list", "1/4,8", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,iter,kappa,h1_error,seconds"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0.25");
    assert!(first[1].parse::<usize>().unwrap() > 0);
    assert_eq!(lines.count(), 1);
}

#[test]
fn json_rows_and_verification() {
    let path = std::env::temp_dir().join(format!("gfem-aux-cli-{}.json", std::process::id()));
    let out = bin()
        .args(["--experiment", "4", "--h-list", "4", "--lambda", "1", "--verify", "--json"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ok"));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    let row = &rows[0];
    assert_eq!(row["n"], 4);
    assert_eq!(row["converged"], true);
    assert!(row["h1_error"].as_f64().unwrap() > 0.0);
    assert!(row["dense_kappa"].as_f64().is_some());
}

#[test]
fn exhausted_iterations_exit_with_code_two() {
    let out = bin()
        .args(["--experiment", "1", "--h-list", "8", "--maxit", "2", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_arguments_are_rejected() {
    for args in [
        vec!["--experiment", "6"],
        vec!["--experiment", "1", "--lambda", "5"],
        vec!["--experiment", "2", "--bq", "sgs:0"],
        vec!["--experiment", "2", "--h-list", "0"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
    }
}

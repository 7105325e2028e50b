use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thinsets"))
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn psi2_of_constant_one() {
    let out = bin()
        .args(["norms", "--psi2", "--constant", "1.0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.trim().starts_with("1.2011224"), "{text}");
}

#[test]
fn thm31_writes_manifest_and_report_renders_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "thm31", "--seed", "1", "--c", "1.0", "--n-lo", "4", "--n-hi", "12", "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1, "exit {code}");
    let manifest = dir.path().join("thm31_manifest.json");
    assert!(manifest.exists());
    for f in [
        "thm31_lambda.set",
        "thm31_e.set",
        "thm31_blocks.csv",
        "thm31_results.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    if code == 1 {
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("\"failed\""), "{stdout}");
    }

    let rep = bin().arg("report").arg(&manifest).output().unwrap();
    assert_eq!(rep.status.code(), Some(code));
    let csv = String::from_utf8(rep.stdout).unwrap();
    assert!(csv.lines().count() > 5);
    assert!(csv.contains("block_counts"));
}

#[test]
fn malformed_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 999, "experiment": "thm31", "seed": 0}"#,
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_then_extract_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("block.set");
    let out = bin()
        .args([
            "gen", "--c", "2.0", "--lo", "1024", "--hi", "2047", "--seed", "3", "--out",
        ])
        .arg(&set)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = bin().args(["extract", "--set"]).arg(&set).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

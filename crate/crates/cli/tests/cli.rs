use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn catmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catmap")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn classify_exit_codes() {
    let ok = catmap(&["classify", "-a", "2", "-b", "3", "-c", "1", "-d", "2", "--format", "json"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(report["is_quantizable"], true);
    assert_eq!(report["thm1_eligible"], true);

    let identity = catmap(&["classify", "-a", "1", "-b", "0", "-c", "0", "-d", "1"]);
    assert_eq!(identity.status.code(), Some(1));
    assert!(stdout(&identity).contains("is_quantizable,false"));

    let checker = catmap(&["classify", "-a", "2", "-b", "1", "-c", "1", "-d", "1"]);
    assert_eq!(checker.status.code(), Some(1));
    assert!(stdout(&checker).contains("c*d"), "{}", stdout(&checker));

    let negative = catmap(&["classify", "-a", "2", "-b", "-3", "-c", "-1", "-d", "2"]);
    assert_eq!(negative.status.code(), Some(0));
}

#[test]
fn sequence_output() {
    let one = catmap(&["sequence", "--count", "1"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(stdout(&one), "k,N_k,t_k\n1,5,3\n");

    let ineligible = catmap(&["sequence", "-a", "3", "-b", "4", "-c", "2", "-d", "3"]);
    assert_eq!(ineligible.status.code(), Some(1));
    assert!(stderr(&ineligible).contains("coprime"), "{}", stderr(&ineligible));
}

#[test]
fn period_rows() {
    let out = catmap(&["period", "--n", "2,5,989"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "N,T_N,n_N,parity_rule_used\n2,2,2,even_n_both_even\n5,3,3,odd_n\n989,11,11,odd_n\n");
}

#[test]
fn propagator_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("m.bin");
    let out = catmap(&["propagator", "--n", "7", "--binary", "-o", bin.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = fs::read(&bin).unwrap();
    assert_eq!(&bytes[..4], b"CATM");
    assert_eq!(bytes.len(), 16 + 49 * 16);

    let csv = catmap(&["propagator", "--n", "7"]);
    assert_eq!(stdout(&csv).lines().count(), 7);

    let even = catmap(&["propagator", "--n", "4"]);
    assert_eq!(even.status.code(), Some(1));
    let allowed = catmap(&["propagator", "--n", "4", "--allow-even-n"]);
    assert_eq!(allowed.status.code(), Some(0));
}

#[test]
fn spectrum_json_fields() {
    let out = catmap(&["spectrum", "--n", "19", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in ["N", "eigenvalues", "clusters", "global_phase", "residual_max"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["N"], 19);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 19);
    let dims: u64 = v["clusters"].as_array().unwrap().iter().map(|c| c["dim"].as_u64().unwrap()).sum();
    assert_eq!(dims, 19);
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn sequence_rows(args: &[&str]) -> usize {
    let out = catmap(args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    stdout(&out).lines().count() - 1
}

#[test]
fn precedence_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, r#"{"count": 3}"#);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(sequence_rows(&["sequence"]), 6);
    assert_eq!(sequence_rows(&["sequence", "--config", cfg]), 3);
    assert_eq!(sequence_rows(&["sequence", "--count", "2"]), 2);
    assert_eq!(sequence_rows(&["sequence", "--config", cfg, "--count", "2"]), 2);
}

#[test]
fn config_matrix_entries_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, r#"{"a": 2, "b": 1, "c": 3, "d": 2, "n_min": 15, "n_max": 21}"#);
    let cfg = cfg.to_str().unwrap();
    let from_file = catmap(&["scan", "--config", cfg]);
    let ns: Vec<String> = stdout(&from_file).lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(ns, ["15", "17", "19", "21"]);
    let overridden = catmap(&["scan", "--config", cfg, "--n-max", "17", "-b", "3", "-c", "1"]);
    assert_eq!(stdout(&overridden).lines().count(), 3);
    // The transpose has the same periods but a different propagator.
    let from_file = catmap(&["propagator", "--n", "5", "--config", cfg]);
    let from_flags = catmap(&["propagator", "--n", "5", "--config", cfg, "-b", "3", "-c", "1"]);
    let standard = catmap(&["propagator", "--n", "5"]);
    assert_ne!(stdout(&from_file), stdout(&from_flags));
    assert_eq!(stdout(&from_flags), stdout(&standard));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(catmap(&["scan", "--tol-cluster", "0"]).status.code(), Some(2));
    assert_eq!(catmap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(catmap(&["profile"]).status.code(), Some(2));
    assert_eq!(catmap(&["scan", "--n-min", "9", "--n-max", "3"]).status.code(), Some(2));
    assert_eq!(catmap(&["verify", "--epsilon", "1.5"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    write(&bad, r#"{"unknown_key": 1}"#);
    assert_eq!(catmap(&["classify", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let out = catmap(&["sequence", "-o", "/nonexistent-dir/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let out = catmap(&["classify", "--config", "/nonexistent-dir/cfg.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = catmap(&["verify", "--input", "/nonexistent-dir/scan.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scan_error_rows_keep_exit_zero() {
    let out = catmap(&["scan", "--n-min", "3", "--n-max", "6", "--all-n"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\n4,,,,,,,,\n"), "{text}");
    assert!(stderr(&out).contains("2 row(s) failed"));
}

#[test]
fn verify_reads_a_scan_file() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    let out = catmap(&["scan", "--n-max", "81", "-o", scan.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = catmap(&["verify", "--input", scan.to_str().unwrap(), "--epsilon", "0.1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["lower_testable"], true);
    assert!(v["lower"].as_array().unwrap().iter().all(|c| c["holds"] == true));
    assert_eq!(v["upper"].as_array().unwrap().len(), 40);
}

#[test]
fn plots_are_written_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, extra) in [("profile", vec!["--n", "71"]), ("dispersive", vec!["--n", "71", "--jmax", "12"])] {
        let mut bytes = Vec::new();
        for run in 0..2 {
            let svg = dir.path().join(format!("{cmd}{run}.svg"));
            let mut args = vec![cmd, "--svg", svg.to_str().unwrap(), "-o", "/dev/null"];
            args.extend(extra.iter().copied());
            assert_eq!(catmap(&args).status.code(), Some(0));
            bytes.push(fs::read(&svg).unwrap());
        }
        assert_eq!(bytes[0], bytes[1], "{cmd}");
        let text = String::from_utf8(bytes.pop().unwrap()).unwrap();
        assert!(text.contains(r#"viewBox="0 0 800 600""#));
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn dfrc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dfrc")).args(args).output().unwrap()
}

#[test]
fn radar_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = dfrc(&["radar", scenario("desk_small").to_str().unwrap(), "--out", out, "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["estimates.csv", "ber.csv", "spectrum_coarse.csv", "spectrum_refined.csv", "rates.csv", "run.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let est = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert!(est.starts_with("theta_deg,R_m,v_mps,angle_bin,l_q,p_q,refined\n"));
    assert!(est.lines().any(|l| l.ends_with(",3,1,true")), "{est}");
}

#[test]
fn flags_reach_the_run_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = dfrc(&["demo-virtual", scenario("desk_small").to_str().unwrap(), "--out", out, "--seed", "11", "--solver", "fista"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["scenario"]["seed"], 11);
    assert_eq!(json["scenario"]["radar"]["pipeline"]["refine"]["solver"], "fista");
    assert_eq!(json["command"], "demo-virtual");
}

#[test]
fn rates_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = dfrc(&["rates", scenario("desk_small").to_str().unwrap(), "--out", out, "--full-scale"]);
    assert!(o.status.success());
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(rates, "private_subcarriers,bit_rate_bps\nfalse,1639760000.0\ntrue,1633360000.0\n");
}

#[test]
fn failures_exit_nonzero_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[system]\nnum_active = 99\n").unwrap();
    let o = dfrc(&["rates", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("[config]"));

    let o = dfrc(&["radar", "/nonexistent/scenario.toml"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("[scenario]"));

    let o = dfrc(&["radar", scenario("desk_small").to_str().unwrap(), "--solver", "lasso"]);
    assert!(!o.status.success());
}

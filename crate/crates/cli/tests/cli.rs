mod common;

use common::{code, oscm, reports, scratch};

#[test]
fn critical_order_prints_the_table() {
    let dir = scratch("cli_critical_order");
    let out = oscm(&["critical-order", "--n", "1", "--s", "0.5,1.5,3", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("s = 0.5: m_s = -0.5"), "{stdout}");
    assert!(stdout.contains("s = 1.5: m_s = -0.75"), "{stdout}");
    assert!(stdout.contains("s = 3: m_s = -2"), "{stdout}");
    let csv = std::fs::read_to_string(dir.join("critical_order_critical_order.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,s,m_s"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn report_json_carries_the_run_configuration() {
    let dir = scratch("cli_run_config");
    let out = oscm(&["kernel-scan", "--s", "1.5", "--j", "4..8", "--threads", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("kernel_scan.json")).unwrap()).unwrap();
    assert_eq!(doc["run_config"]["command"], "kernel-scan");
    assert_eq!(doc["run_config"]["threads"], 2);
    assert_eq!(doc["run_config"]["config"]["j_max"], 8);
    assert_eq!(doc["report"]["series"][0]["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = scratch("cli_config_file");
    let cfg = scratch("cli_config_file_input").join("scan.json");
    std::fs::write(&cfg, r#"{"command": "kernel-scan", "s": 1.5, "j_min": 4, "j_max": 10}"#).unwrap();
    let out = oscm(&["kernel-scan", "--config", cfg.to_str().unwrap(), "--j", "5..9", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let (_, report) = reports(&dir).into_iter().next().unwrap();
    assert_eq!(report["parameters"]["s"], 1.5);
    assert_eq!(report["parameters"]["j_min"], 5);
    assert_eq!(report["parameters"]["j_max"], 9);
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = scratch("cli_env_out");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_oscm"))
        .args(["critical-order", "--s", "0.5", "--quiet"])
        .env("OSCM_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.join("critical_order.json").exists());
}

#[test]
fn atoms_of_a_zero_file() {
    let dir = scratch("cli_atoms_zero");
    let input = dir.join("zero.csv");
    let mut text = String::from("x,re,im\n");
    for m in 0..64 {
        text.push_str(&format!("{},0,0\n", -4.0 + m as f64 * 0.125));
    }
    std::fs::write(&input, text).unwrap();
    let out = oscm(&["atoms", "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = scratch("cli_usage");
    let d = dir.to_str().unwrap();
    assert_eq!(code(&oscm(&["kernel-scan", "--bogus"])), 1);
    assert_eq!(code(&oscm(&["kernel-scan", "--j", "9..3", "--out", d])), 1);
    assert_eq!(code(&oscm(&["kernel-scan", "--localizer", "square", "--out", d])), 1);
    assert_eq!(code(&oscm(&["critical-order", "--s", "1.0", "--out", d])), 1);
    let cfg = dir.join("wrong.json");
    std::fs::write(&cfg, r#"{"command": "atoms"}"#).unwrap();
    assert_eq!(code(&oscm(&["kernel-scan", "--config", cfg.to_str().unwrap(), "--out", d])), 1);
    std::fs::write(&cfg, r#"{"jmax": 4}"#).unwrap();
    assert_eq!(code(&oscm(&["kernel-scan", "--config", cfg.to_str().unwrap(), "--out", d])), 1);
    assert_eq!(code(&oscm(&["--help"])), 0);
    assert_eq!(code(&oscm(&["--version"])), 0);
}

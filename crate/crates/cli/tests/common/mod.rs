#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn oscm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscm"))
        .args(args)
        .env_remove("OSCM_OUT_DIR")
        .output()
        .expect("failed to launch oscm")
}

/// Fresh, empty directory under the target tmp dir.
pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Every `report` object written into `dir`, keyed by report id.
pub fn reports(dir: &Path) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let path = e.ok()?.path();
            (path.extension()? == "json").then_some(path)
        })
        .map(|path| {
            let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let report = doc["report"].clone();
            (report["id"].as_str().unwrap().to_string(), report)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

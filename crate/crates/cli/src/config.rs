use std::fmt;
use std::path::Path;

use oscm::partition::{make_localizer, Localizer, LocalizerKind};
use serde_json::{Map, Value};

/// Configuration or usage problem; always exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<oscm::Error> for UsageError {
    fn from(e: oscm::Error) -> Self {
        UsageError(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, UsageError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()))
}

/// Keys read by the runner itself rather than by an experiment.
const RUNNER_KEYS: [&str; 3] = ["command", "threads", "out_dir"];

/// Parsed `--config` document.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub entries: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        let Value::Object(entries) = value else {
            return usage(format!("{}: expected a JSON object", path.display()));
        };
        if let Some(c) = entries.get("command") {
            if c.as_str() != Some(command) {
                return usage(format!("{}: config is for command {c}, not {command}", path.display()));
            }
        }
        Ok(Self { entries })
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| UsageError(format!("config key {key}: expected a number"))),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.entries.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| UsageError(format!("config key {key}: expected an unsigned integer"))),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.entries.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => usage(format!("config key {key}: expected a string")),
        }
    }
}

/// Command-line values that replace entries of the resolved configuration.
#[derive(Debug, Default)]
pub struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    pub fn set(&mut self, key: &'static str, value: Option<impl Into<Value>>) -> &mut Self {
        if let Some(v) = value {
            self.0.push((key, v.into()));
        }
        self
    }
}

/// Defaults, then the file, then the command line.
pub fn resolve<T>(defaults: T, file: &FileConfig, overrides: &Overrides) -> Result<T>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    let Value::Object(mut obj) = serde_json::to_value(defaults).map_err(|e| UsageError(e.to_string()))? else {
        return usage("configuration is not an object");
    };
    for (k, v) in &file.entries {
        if RUNNER_KEYS.contains(&k.as_str()) || (k == "seed" && !obj.contains_key("seed")) {
            continue;
        }
        if !obj.contains_key(k) {
            let known: Vec<&str> = obj.keys().map(String::as_str).collect();
            return usage(format!("unknown config key {k:?}; expected one of {}", known.join(", ")));
        }
        obj.insert(k.clone(), v.clone());
    }
    for (k, v) in &overrides.0 {
        if *k == "seed" && !obj.contains_key("seed") {
            continue;
        }
        if !obj.contains_key(*k) {
            return usage(format!("--{} does not apply here", k.replace('_', "-")));
        }
        obj.insert((*k).to_string(), v.clone());
    }
    serde_json::from_value(Value::Object(obj)).map_err(|e| UsageError(format!("invalid configuration: {e}")))
}

/// `a..b`, `a..=b` (both inclusive) or a single level.
pub fn parse_levels(text: &str) -> Result<(i32, i32)> {
    let parse = |s: &str| s.trim().parse::<i32>().map_err(|_| UsageError(format!("bad level {s:?} in --j {text}")));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let j = parse(text)?;
            (j, j)
        }
    };
    if a > b {
        return usage(format!("--j {text}: empty range"));
    }
    Ok((a, b))
}

pub fn parse_localizer(name: &str) -> Result<Localizer> {
    let kind = match name {
        "theta_annular" | "theta-annular" => LocalizerKind::ThetaAnnular,
        "phi_ball" | "phi-ball" => LocalizerKind::PhiBall,
        "psi_narrow" | "psi-narrow" => LocalizerKind::PsiNarrow,
        "phi" => return Ok(Localizer::PHI),
        _ => return usage(format!("unknown localizer {name:?}; use theta_annular, phi_ball, psi_narrow or phi")),
    };
    Ok(make_localizer(kind)?)
}

pub fn localizer_value(name: Option<&String>) -> Result<Option<Value>> {
    name.map(|n| parse_localizer(n).and_then(|l| serde_json::to_value(l).map_err(|e| UsageError(e.to_string()))))
        .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use oscm::experiments::KernelScanConfig;

    #[test]
    fn level_syntax() {
        assert_eq!(parse_levels("4..10").unwrap(), (4, 10));
        assert_eq!(parse_levels("4..=10").unwrap(), (4, 10));
        assert_eq!(parse_levels("6").unwrap(), (6, 6));
        assert!(parse_levels("7..3").is_err());
        assert!(parse_levels("a..3").is_err());
    }

    #[test]
    fn precedence_is_cli_then_file_then_defaults() {
        let mut entries = Map::new();
        entries.insert("j_max".into(), Value::from(9));
        entries.insert("j_min".into(), Value::from(5));
        entries.insert("threads".into(), Value::from(2));
        let file = FileConfig { entries };
        let mut o = Overrides::default();
        o.set("j_min", Some(6));
        let cfg = resolve(KernelScanConfig::for_order(0.5), &file, &o).unwrap();
        assert_eq!((cfg.j_min, cfg.j_max), (6, 9));
        assert_eq!(cfg.min_half_width, 64.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut entries = Map::new();
        entries.insert("jmax".into(), Value::from(9));
        let err = resolve(KernelScanConfig::default(), &FileConfig { entries }, &Overrides::default()).unwrap_err();
        assert!(err.0.contains("jmax"));
    }
}

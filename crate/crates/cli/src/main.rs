mod args;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use oscm::experiments::{self as exp, ExperimentReport, Verdict};
use serde::{Deserialize, Serialize};
use serde_json::json;

use args::{Cli, Command, Levels};
use config::{localizer_value, parse_levels, resolve, FileConfig, Overrides, Result, UsageError};

const DEFAULT_OUT_DIR: &str = "oscm-out";

#[derive(Debug, Serialize, Deserialize)]
struct CriticalOrderArgs {
    n: usize,
    s: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let common = cli.command.common();
    let file = FileConfig::load(common.config.as_deref(), cli.command.name())?;
    let threads = match common.threads {
        Some(t) => t,
        None => file.u64("threads")?.unwrap_or(0) as usize,
    };
    let out_dir = match &common.out {
        Some(dir) => dir.clone(),
        None => file
            .string("out_dir")?
            .or_else(|| std::env::var("OSCM_OUT_DIR").ok().filter(|d| !d.is_empty()))
            .unwrap_or_else(|| DEFAULT_OUT_DIR.to_string())
            .into(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| UsageError(format!("thread pool: {e}")))?;
    let reports = pool.install(|| dispatch(&cli.command, &file))?;

    std::fs::create_dir_all(&out_dir).map_err(|e| UsageError(format!("{}: {e}", out_dir.display())))?;
    let run_config = |report: &ExperimentReport| {
        json!({
            "command": cli.command.name(),
            "seed": report.seed,
            "threads": pool.current_num_threads(),
            "config_file": common.config,
            "out_dir": out_dir,
            "config": report.parameters,
        })
    };
    for report in &reports {
        write_report(&out_dir, report, run_config(report))?;
        if !common.quiet {
            print_report(report);
        }
    }
    Ok(summarize(&reports, &out_dir))
}

fn dispatch(command: &Command, file: &FileConfig) -> Result<Vec<ExperimentReport>> {
    let order = |cli_s: Option<f64>| -> Result<f64> { Ok(cli_s.or(file.f64("s")?).unwrap_or(0.5)) };
    let seed = command.common().seed;
    let report = match command {
        Command::CriticalOrder { n, s, .. } => {
            let mut o = Overrides::default();
            o.set("n", Some(*n)).set("s", Some(s.clone()));
            let a: CriticalOrderArgs = resolve(CriticalOrderArgs { n: 1, s: Vec::new() }, file, &o)?;
            exp::critical_order_table(a.n, &a.s)?
        }
        Command::KernelScan { levels, localizer, .. } => {
            let s = order(levels.s)?;
            let mut o = level_overrides(levels)?;
            o.set("localizer", localizer_value(localizer.as_ref())?);
            o.set("half_width", levels.half_width).set("points", levels.points);
            exp::kernel_scan(&resolve(exp::KernelScanConfig::for_order(s), file, &o)?)?
        }
        Command::RegimeCheck { levels, localizer, .. } => {
            if levels.points.is_some() {
                return Err(UsageError("--points does not apply to regime-check; the band rule sizes each grid".into()));
            }
            let s = order(levels.s)?;
            let mut o = level_overrides(levels)?;
            o.set("localizer", localizer_value(localizer.as_ref())?).set("half_width", levels.half_width);
            exp::regime_check(&resolve(exp::RegimeConfig::for_order(s), file, &o)?)?
        }
        Command::EnvelopeCheck { levels, localizer, .. } => {
            let s = order(levels.s)?;
            let mut o = Overrides::default();
            o.set("s", levels.s).set("localizer", localizer_value(localizer.as_ref())?);
            let mut cfg = resolve(exp::EnvelopeConfig::for_order(s), file, &o)?;
            if let Some(j) = &levels.j {
                let (a, b) = parse_levels(j)?;
                let template = cfg.levels[0];
                cfg.levels = (a..=b).map(|j| exp::EnvelopeLevel { j, ..template }).collect();
            }
            for level in &mut cfg.levels {
                level.half_width = levels.half_width.unwrap_or(level.half_width);
                level.points = levels.points.unwrap_or(level.points);
            }
            exp::envelope_check(&cfg)?
        }
        Command::LocalEnergy { levels, localizer, radii, trials, .. } => {
            if levels.n.is_some_and(|n| n != 1) {
                return Err(UsageError("local-energy runs in one dimension".into()));
            }
            let mut o = Overrides::default();
            o.set("s", levels.s).set("half_width", levels.half_width).set("points", levels.points);
            if let Some(j) = &levels.j {
                let (a, b) = parse_levels(j)?;
                if a != b {
                    return Err(UsageError("local-energy takes a single level --j".into()));
                }
                o.set("j", Some(a));
            }
            o.set("localizer", localizer_value(localizer.as_ref())?);
            o.set("radii", radii.clone()).set("trials", *trials).set("seed", seed);
            exp::local_energy(&resolve(exp::LocalEnergyConfig::default(), file, &o)?)?
        }
        Command::SymbolExpand { m, j_max, n_decay, a_max, window, samples, .. } => {
            let mut o = Overrides::default();
            o.set("symbol", m.map(|m| json!({ "kind": "bessel", "m": m })));
            o.set("j_max", *j_max).set("n_decay", *n_decay).set("a_max", *a_max);
            o.set("window", *window).set("samples", *samples).set("seed", seed);
            exp::symbol_expand(&resolve(exp::SymbolExpandConfig::default(), file, &o)?)?
        }
        Command::Trilinear { m, triples, s, j, half_width, points, band, .. } => {
            let mut o = Overrides::default();
            o.set("symbol", m.map(|m| json!({ "kind": "bessel", "m": m })));
            o.set("triples", *triples).set("s", *s).set("j", *j);
            o.set("half_width", *half_width).set("points", *points).set("band", *band).set("seed", seed);
            exp::pairing(&resolve(exp::PairingConfig::default(), file, &o)?)?
        }
        Command::Atoms { input: Some(path), functions, half_width, points, .. } => {
            if functions.is_some() || half_width.is_some() || points.is_some() {
                return Err(UsageError("--input takes its grid from the file; drop --functions/--half-width/--points".into()));
            }
            exp::atoms_for_input(&oscm::io::load(path)?)?
        }
        Command::Atoms { input: None, functions, half_width, points, .. } => {
            let mut o = Overrides::default();
            o.set("functions", *functions).set("half_width", *half_width).set("points", *points).set("seed", seed);
            exp::atoms(&resolve(exp::AtomsConfig::default(), file, &o)?)?
        }
        Command::Sharpness { levels, .. } => {
            let s = order(levels.s)?;
            let mut o = level_overrides(levels)?;
            o.set("half_width", levels.half_width).set("points", levels.points);
            let cfg = resolve(exp::SharpnessConfig::for_order(s), file, &o)?;
            if cfg.s < 1.0 {
                exp::sharpness_s_lt_1(&cfg)?
            } else {
                exp::sharpness_s_gt_1(&cfg)?
            }
        }
        Command::RegionProbe { s, j, r, half_width, points, c, .. } => {
            let mut o = range_overrides(j.as_deref())?;
            o.set("s", *s).set("r", *r).set("half_width", *half_width).set("points", *points);
            o.set("c", *c).set("seed", seed);
            exp::region_probe(&resolve(exp::RegionProbeConfig::for_order(order(*s)?), file, &o)?)?
        }
        Command::Convergence { s, m, j, half_width, points, r, trials, .. } => {
            let mut o = range_overrides(j.as_deref())?;
            o.set("s", *s).set("m", *m).set("half_width", *half_width).set("points", *points);
            o.set("r", *r).set("trials", *trials).set("seed", seed);
            exp::convergence_probe(&resolve(exp::ConvergenceConfig::default(), file, &o)?)?
        }
        Command::All { .. } => {
            let seed = match seed {
                Some(s) => s,
                None => file.u64("seed")?.unwrap_or(exp::DEFAULT_SEED),
            };
            if let Some(k) = file.entries.keys().find(|k| !["command", "threads", "out_dir", "seed"].contains(&k.as_str())) {
                return Err(UsageError(format!("unknown config key {k:?} for all; expected seed, threads or out_dir")));
            }
            return Ok(exp::all(seed)?);
        }
    };
    Ok(vec![report])
}

fn level_overrides(levels: &Levels) -> Result<Overrides> {
    let mut o = range_overrides(levels.j.as_deref())?;
    o.set("n", levels.n).set("s", levels.s);
    Ok(o)
}

fn range_overrides(j: Option<&str>) -> Result<Overrides> {
    let mut o = Overrides::default();
    if let Some(j) = j {
        let (a, b) = parse_levels(j)?;
        o.set("j_min", Some(a)).set("j_max", Some(b));
    }
    Ok(o)
}

fn write_report(dir: &Path, report: &ExperimentReport, run_config: serde_json::Value) -> Result<()> {
    let write = |path: PathBuf, text: String| {
        std::fs::write(&path, text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
    };
    let doc = json!({ "run_config": run_config, "report": report });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| UsageError(e.to_string()))?;
    write(dir.join(format!("{}.json", report.id)), text)?;
    for series in &report.series {
        write(dir.join(format!("{}_{}.csv", report.id, series.name)), series.to_csv())?;
    }
    Ok(())
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

fn print_report(report: &ExperimentReport) {
    println!("{} [{}] {:.2}s", report.id, verdict_label(report.verdict()), report.wall_time_s);
    if report.id == "critical_order" {
        for row in report.series.iter().flat_map(|s| &s.rows) {
            println!("  n = {}, s = {}: m_s = {}", row[0], row[1], row[2]);
        }
    }
    for c in &report.checks {
        let tag = if c.criterion == 0 { "aux".to_string() } else { format!("criterion {}", c.criterion) };
        println!("  {:<13} {:<12} {}: {:.6} (target {})", tag, verdict_label(c.verdict), c.name, c.measured, c.target);
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
}

/// Prints the totals and returns the exit code.
fn summarize(reports: &[ExperimentReport], out_dir: &Path) -> u8 {
    let checks = reports.iter().flat_map(|r| &r.checks);
    let count = |v| checks.clone().filter(|c| c.verdict == v).count();
    let (pass, fail, inconclusive) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Inconclusive));
    println!(
        "{} report(s), {} check(s): {pass} pass, {fail} fail, {inconclusive} inconclusive; output in {}",
        reports.len(),
        pass + fail + inconclusive,
        out_dir.display()
    );
    if fail > 0 {
        2
    } else if inconclusive > 0 {
        3
    } else {
        0
    }
}

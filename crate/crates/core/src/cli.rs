//! Subcommand implementations behind the `ddlink-sim` binary.
//!
//! Every sweep command writes three files into the output directory: a CSV
//! with one row per sweep point, a JSON summary with the full statistics, and
//! a JSON manifest holding the resolved config. The manifest can be passed
//! back as `--config` to reproduce the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::simkit::{run_sweep, SweepSummary};
use crate::validate::{run_validation, CheckOutcome, ValidationPlan};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const HM_COLUMNS: [&str; 7] = [
    "rho_t_db",
    "p0",
    "se_hm_real_mean",
    "se_hm_real_stderr",
    "se_hm_ideal_mean",
    "se_hm_ideal_stderr",
    "gap",
];

pub const LM_COLUMNS: [&str; 12] = [
    "rho_t_db",
    "p0",
    "se_hm_at_lm_mean",
    "se_hm_at_lm_mean_stderr",
    "se_hm_at_lm_min",
    "se_hm_at_lm_min_stderr",
    "se_lm_mean",
    "se_lm_mean_stderr",
    "se_lm_min",
    "se_lm_min_stderr",
    "se_lm_worst",
    "se_lm_worst_stderr",
];

pub const OUTAGE_COLUMNS: [&str; 7] = ["rho_t_db", "p0", "r_th", "outage_real", "outage_ideal", "outage_gap", "trials"];

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) => exit::IO,
        Error::Parse(_) | Error::Validation { .. } | Error::InvalidArgument(_) => exit::CONFIG,
        _ => exit::VALIDATION_FAILED,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub timestamp: String,
    pub master_seed: u64,
    pub workers: usize,
    pub outputs: Vec<PathBuf>,
    pub config: SystemConfig,
}

/// Reads a config document, or the `config` member of a run manifest.
pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let is_manifest = value.get("tool_version").is_some() && value.get("config").is_some();
    let cfg = if is_manifest {
        let manifest: RunManifest = serde_json::from_value(value)?;
        manifest.config
    } else {
        SystemConfig::from_json_str(&text)?
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: SystemConfig) -> Result<SystemConfig> {
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

// `{}` on f64 prints the shortest decimal that round-trips.
fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn hm_rows(summary: &SweepSummary) -> Vec<Vec<String>> {
    summary
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.rho_t_db),
                num(p.p0),
                opt(p.se_hm_real.map(|s| s.mean)),
                opt(p.se_hm_real.map(|s| s.stderr)),
                opt(p.se_hm_ideal.map(|s| s.mean)),
                opt(p.se_hm_ideal.map(|s| s.stderr)),
                opt(p.gap.map(|s| s.mean)),
            ]
        })
        .collect()
}

pub fn lm_rows(summary: &SweepSummary) -> Vec<Vec<String>> {
    summary
        .points
        .iter()
        .map(|p| {
            let mut row = vec![num(p.rho_t_db), num(p.p0)];
            for s in [p.se_hm_at_lm_mean, p.se_hm_at_lm_min, p.se_lm_mean, p.se_lm_min, p.se_lm_worst] {
                row.push(num(s.mean));
                row.push(num(s.stderr));
            }
            row
        })
        .collect()
}

pub fn outage_rows(summary: &SweepSummary) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for p in &summary.points {
        for o in &p.outage {
            let gap = o.real.zip(o.ideal).map(|(r, i)| r - i);
            rows.push(vec![
                num(p.rho_t_db),
                num(p.p0),
                num(o.r_th),
                opt(o.real),
                opt(o.ideal),
                opt(gap),
                p.trials.to_string(),
            ]);
        }
    }
    rows
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_manifest(out: &Path, command: &str, cfg: &SystemConfig, workers: usize, outputs: Vec<PathBuf>) -> Result<PathBuf> {
    let path = out.join(format!("{command}.manifest.json"));
    let manifest = RunManifest {
        command: command.to_owned(),
        tool_version: TOOL_VERSION.to_owned(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        master_seed: cfg.master_seed,
        workers,
        outputs,
        config: cfg.clone(),
    };
    write_json(&path, &manifest)?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub summary: SweepSummary,
    pub csv: PathBuf,
    pub json: PathBuf,
    pub manifest: PathBuf,
}

fn sweep_command(
    command: &str,
    cfg: &SystemConfig,
    p0_values: &[f64],
    out: &Path,
    workers: usize,
    header: &[&str],
    rows: fn(&SweepSummary) -> Vec<Vec<String>>,
) -> Result<SweepOutput> {
    let summary = run_sweep(cfg, p0_values, workers)?;
    fs::create_dir_all(out)?;
    let csv = out.join(format!("{command}.csv"));
    let json = out.join(format!("{command}.summary.json"));
    write_csv(&csv, header, &rows(&summary))?;
    write_json(&json, &summary)?;
    let manifest = write_manifest(out, command, cfg, workers, vec![csv.clone(), json.clone()])?;
    Ok(SweepOutput {
        summary,
        csv,
        json,
        manifest,
    })
}

/// HM spectral efficiency, Real vs Ideal, over `p0_grid`.
pub fn cmd_hm_sweep(cfg: &SystemConfig, out: &Path, workers: usize) -> Result<SweepOutput> {
    sweep_command("hm-sweep", cfg, &cfg.p0_grid, out, workers, &HM_COLUMNS, hm_rows)
}

/// LM-side HM detection and LM detection spectral efficiency over `p0_grid`.
pub fn cmd_lm_sweep(cfg: &SystemConfig, out: &Path, workers: usize) -> Result<SweepOutput> {
    sweep_command("lm-sweep", cfg, &cfg.p0_grid, out, workers, &LM_COLUMNS, lm_rows)
}

/// HM outage at `p0` for `R_th` and every threshold in `r_th_grid`.
pub fn cmd_outage(cfg: &SystemConfig, out: &Path, workers: usize) -> Result<SweepOutput> {
    sweep_command("outage", cfg, &[cfg.p0], out, workers, &OUTAGE_COLUMNS, outage_rows)
}

#[derive(Debug, Clone, Serialize)]
struct CheckRecord<'a> {
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

/// Runs the oracle suite and writes `validate.report.json`. The caller
/// decides the exit code from the returned outcomes.
pub fn cmd_validate(cfg: &SystemConfig, out: &Path) -> Result<Vec<CheckOutcome>> {
    let outcomes = run_validation(cfg, &ValidationPlan::default())?;
    fs::create_dir_all(out)?;
    let report = out.join("validate.report.json");
    let records: Vec<CheckRecord> = outcomes
        .iter()
        .map(|c| CheckRecord {
            name: &c.name,
            passed: c.passed,
            detail: &c.detail,
        })
        .collect();
    write_json(&report, &records)?;
    write_manifest(out, "validate", cfg, 1, vec![report])?;
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.5e-17, 12.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(opt(None), "");
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::validation("p0", "out of range")), exit::CONFIG);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), exit::IO);
        assert_eq!(exit_code(&Error::DegenerateSpectrum), exit::VALIDATION_FAILED);
    }

    #[test]
    fn overrides_apply_and_revalidate() {
        let cfg = Overrides {
            seed: Some(9),
            trials: Some(3),
        }
        .apply(SystemConfig::default())
        .unwrap();
        assert_eq!((cfg.master_seed, cfg.trials), (9, 3));
        assert!(Overrides {
            seed: None,
            trials: Some(0)
        }
        .apply(SystemConfig::default())
        .is_err());
    }
}

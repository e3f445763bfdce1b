//! Strategy grids, their metrics and the 3 x 4 result tables.

use std::fmt::Write;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use cpu_time::ProcessTime;
use serde::{Deserialize, Serialize};

use crate::containers::ContainerKind;
use crate::error::{Error, Result};
use crate::pipeline::{prepare_inputs, run_prepared, JobConfig, JobOutcome};
use crate::store::ManagerKind;

/// Measured outcome of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub manager: ManagerKind,
    pub container: ContainerKind,
    pub compression: u8,
    pub split: u8,
    pub basket: u32,
    pub burst: u64,
    pub jump: u64,
    pub reduction: u32,
    pub crossings: u64,
    /// Pileup file bytes / (1024 x pileup events).
    pub kb_per_event: f64,
    /// Wall time spent reading (signal, pileup and connects) per crossing.
    pub read_s_per_crossing_mean: f64,
    pub read_s_per_crossing_std: f64,
    pub write_s_per_event: f64,
    /// Connect time summed over one crossing, in milliseconds.
    pub connect_ms_mean: f64,
    pub file_switches_mean: f64,
    /// Process CPU time of the crossing loop, per crossing.
    pub cpu_s_per_crossing: f64,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "manager",
    "container",
    "compression",
    "split",
    "basket",
    "burst",
    "jump",
    "reduction",
    "crossings",
    "kb_per_event",
    "read_s_per_crossing_mean",
    "read_s_per_crossing_std",
    "write_s_per_event",
    "connect_ms_mean",
    "file_switches_mean",
    "cpu_s_per_crossing",
];

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl RunMetrics {
    pub fn from_outcome(config: &JobConfig, outcome: &JobOutcome, cpu: Duration) -> Self {
        let bytes: u64 = outcome.inputs.pileup_stats.iter().map(|s| s.total_bytes).sum();
        let events: u64 = outcome.inputs.pileup_stats.iter().map(|s| s.entries).sum();
        let reads: Vec<f64> = outcome.crossings.iter().map(|c| c.read().as_secs_f64()).collect();
        let connects: Vec<f64> = outcome
            .crossings
            .iter()
            .map(|c| c.connect.as_secs_f64() * 1e3)
            .collect();
        let switches: Vec<f64> = outcome.crossings.iter().map(|c| c.file_switches as f64).collect();
        let (read_mean, read_std) = mean_std(&reads);
        let n = outcome.crossings.len().max(1) as f64;
        RunMetrics {
            manager: config.manager,
            container: config.container,
            compression: config.store.compression,
            split: if config.manager == ManagerKind::Tree { config.store.split } else { 0 },
            basket: config.store.basket_size,
            burst: config.burst,
            jump: config.jump,
            reduction: config.reduction,
            crossings: outcome.crossings.len() as u64,
            kb_per_event: if events == 0 {
                0.0
            } else {
                bytes as f64 / (1024.0 * events as f64)
            },
            read_s_per_crossing_mean: read_mean,
            read_s_per_crossing_std: read_std,
            write_s_per_event: outcome.inputs.write_s_per_event,
            connect_ms_mean: mean_std(&connects).0,
            file_switches_mean: mean_std(&switches).0,
            cpu_s_per_crossing: cpu.as_secs_f64() / n,
        }
    }
}

/// Runs one cell in `config.out_dir`; files are removed afterwards unless
/// `keep_files`.
pub fn run_cell(config: &JobConfig, keep_files: bool) -> Result<RunMetrics> {
    let result = (|| {
        let inputs = prepare_inputs(config)?;
        let cpu = ProcessTime::now();
        let outcome = run_prepared(config, &inputs)?;
        Ok(RunMetrics::from_outcome(config, &outcome, cpu.elapsed()))
    })();
    if !keep_files {
        let _ = fs::remove_dir_all(&config.out_dir);
    }
    result
}

/// Directory name of a cell under the grid root.
pub fn cell_dir_name(c: &JobConfig) -> String {
    format!(
        "{}-{}-z{}-s{}-b{}-x{}-y{}-r{}",
        c.manager, c.container, c.store.compression, c.store.split, c.store.basket_size, c.burst, c.jump, c.reduction
    )
}

/// Every (manager, container) pair for each base configuration.
pub fn strategy_grid(bases: &[JobConfig], managers: &[ManagerKind], containers: &[ContainerKind]) -> Vec<JobConfig> {
    let mut out = Vec::new();
    for base in bases {
        for &manager in managers {
            for &container in containers {
                let mut c = JobConfig {
                    manager,
                    container,
                    ..base.clone()
                };
                c.out_dir = base.out_dir.join(cell_dir_name(&c));
                out.push(c);
            }
        }
    }
    out
}

/// Runs every configuration in turn. A failing cell yields an error in its
/// position and the grid goes on.
pub fn run_grid(configs: &[JobConfig], keep_files: bool) -> Vec<Result<RunMetrics>> {
    configs.iter().map(|c| run_cell(c, keep_files)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// `x` rounded to three significant digits.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mut exp = x.abs().log10().floor() as i32;
    let mut scaled = (x / 10f64.powi(exp - 2)).round();
    if scaled.abs() >= 1000.0 {
        exp += 1;
        scaled = (x / 10f64.powi(exp - 2)).round();
    }
    let decimals = (2 - exp).max(0) as usize;
    format!("{:.*}", decimals, scaled * 10f64.powi(exp - 2))
}

type GroupKey = (u8, u8, u32, u64, u64, u32, u64);

fn group_key(m: &RunMetrics) -> GroupKey {
    (m.compression, m.split, m.basket, m.burst, m.jump, m.reduction, m.crossings)
}

fn table(metrics: &[RunMetrics]) -> String {
    let mut out = String::new();
    let mut groups: Vec<GroupKey> = Vec::new();
    for m in metrics {
        // Tree cells carry the split level, the others do not; group on the
        // remaining fields so one table holds all three managers.
        let mut k = group_key(m);
        k.1 = 0;
        if !groups.contains(&k) {
            groups.push(k);
        }
    }
    let header = |out: &mut String| {
        let _ = write!(out, "{:<8}", "");
        for c in ContainerKind::ALL {
            let _ = write!(out, "{:>18}", c.label());
        }
        out.push('\n');
    };
    if groups.is_empty() {
        out.push_str("kb/event / s/crossing\n");
        header(&mut out);
        return out;
    }
    for (i, g) in groups.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let in_group: Vec<&RunMetrics> = metrics
            .iter()
            .filter(|m| {
                let mut k = group_key(m);
                k.1 = 0;
                k == *g
            })
            .collect();
        let split = in_group
            .iter()
            .find(|m| m.manager == ManagerKind::Tree)
            .map(|m| m.split.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "kb/event / s/crossing  compression={} split={} basket={} burst={} jump={} reduction={} crossings={}",
            g.0, split, g.2, g.3, g.4, g.5, g.6
        );
        header(&mut out);
        for manager in ManagerKind::ALL {
            let _ = write!(out, "{:<8}", manager.label());
            for container in ContainerKind::ALL {
                let cell = in_group
                    .iter()
                    .find(|m| m.manager == manager && m.container == container)
                    .map(|m| format!("{} / {}", sig3(m.kb_per_event), sig3(m.read_s_per_crossing_mean)))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, "{cell:>18}");
            }
            out.push('\n');
        }
    }
    out
}

fn csv_text(metrics: &[RunMetrics]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for m in metrics {
        w.serialize(m).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Renders metrics as 3 x 4 "size / time" tables or as CSV.
pub fn emit(metrics: &[RunMetrics], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Table => Ok(table(metrics)),
        OutputFormat::Csv => csv_text(metrics),
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<RunMetrics>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidArgument(format!("csv: {e}"))))
        .collect()
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(manager: ManagerKind, container: ContainerKind) -> RunMetrics {
        RunMetrics {
            manager,
            container,
            compression: 1,
            split: 99,
            basket: 8000,
            burst: 3,
            jump: 10,
            reduction: 1,
            crossings: 500,
            kb_per_event: 152.34,
            read_s_per_crossing_mean: 3.1644,
            read_s_per_crossing_std: 0.1,
            write_s_per_event: 0.002,
            connect_ms_mean: 1.5,
            file_switches_mean: 2.0,
            cpu_s_per_crossing: 3.0,
        }
    }

    #[test]
    fn three_significant_digits() {
        assert_eq!(sig3(152.34), "152");
        assert_eq!(sig3(3.1644), "3.16");
        assert_eq!(sig3(0.012345), "0.0123");
        assert_eq!(sig3(1234.0), "1230");
        assert_eq!(sig3(9.996), "10.0");
        assert_eq!(sig3(0.0), "0");
    }

    #[test]
    fn full_table_shape() {
        let ms: Vec<_> = ManagerKind::ALL
            .iter()
            .flat_map(|&m| ContainerKind::ALL.iter().map(move |&c| metrics(m, c)))
            .collect();
        let t = emit(&ms, OutputFormat::Table).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        for (line, m) in lines[2..].iter().zip(["keys", "matrix", "tree"]) {
            assert!(line.starts_with(m));
            assert_eq!(line.matches("152 / 3.16").count(), 4, "{line}");
        }
    }

    #[test]
    fn empty_outputs_are_headers() {
        assert_eq!(emit(&[], OutputFormat::Csv).unwrap().lines().count(), 1);
        assert_eq!(emit(&[], OutputFormat::Table).unwrap().lines().count(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let ms = vec![metrics(ManagerKind::Keys, ContainerKind::ValueSeq), metrics(ManagerKind::Tree, ContainerKind::SlotArray)];
        let text = emit(&ms, OutputFormat::Csv).unwrap();
        assert!(text.starts_with("manager,container,compression,split,basket,burst,jump,reduction,crossings,kb_per_event,"));
        assert!(text.contains("keys,stl,"));
        assert_eq!(parse_csv(&text).unwrap(), ms);
    }

    #[test]
    fn grid_is_twelve_cells() {
        let base = JobConfig::default();
        let grid = strategy_grid(&[base], &ManagerKind::ALL, &ContainerKind::ALL);
        assert_eq!(grid.len(), 12);
        let dirs: std::collections::HashSet<_> = grid.iter().map(|c| c.out_dir.clone()).collect();
        assert_eq!(dirs.len(), 12);
    }

    #[test]
    fn failing_cell_does_not_stop_grid() {
        let dir = tempfile::tempdir().unwrap();
        let good = JobConfig {
            reduction: 500,
            crossings: 2,
            pileup_files: 2,
            events_per_file: 4,
            pileup: 3,
            out_dir: dir.path().join("good"),
            ..JobConfig::default()
        };
        let bad = JobConfig {
            reduction: 0,
            out_dir: dir.path().join("bad"),
            ..good.clone()
        };
        let results = run_grid(&[bad, good], false);
        assert!(results[0].is_err());
        let m = results[1].as_ref().unwrap();
        assert_eq!(m.crossings, 2);
        assert!(!dir.path().join("good").exists());
    }
}

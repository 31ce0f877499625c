//! CSV rows, the run manifest and atomic file writes.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use d2dsched::model::Tier;
use d2dsched::sim::{MetricSeries, ScenarioConfig};
use serde::{Deserialize, Serialize};

pub const PER_TTI_CSV: &str = "per_tti.csv";
pub const TTI_STATS_CSV: &str = "tti_stats.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const COMPARE_CSV: &str = "compare.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PerTtiRow {
    pub scenario_id: String,
    pub seed: u64,
    pub tti: u64,
    pub tier: String,
    pub user_id: usize,
    pub rate_bps: f64,
    pub avg_rate_bps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TtiStatsRow {
    pub scenario_id: String,
    pub seed: u64,
    pub tti: u64,
    pub utility: f64,
    pub wf_calls: u64,
    pub iterations_used: u32,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub seed: u64,
    pub tier: String,
    pub user_id: usize,
    pub mean_rate_bps: f64,
    pub logsum_tier: f64,
    pub utility_total: f64,
    pub wf_calls: u64,
    pub iterations_used: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompareRow {
    pub scenario_id: String,
    pub seed: u64,
    pub tti: u64,
    pub cell: usize,
    pub phpfs_utility: f64,
    pub opf_utility: f64,
    pub ratio: f64,
    pub dominated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub axis_value: f64,
    pub seed: u64,
    pub metric: String,
    pub tier: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Everything needed to reproduce a run's CSVs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub wall_clock_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("manifest {}", path.display()))
    }
}

pub fn tier_rows(series: &MetricSeries) -> (Vec<PerTtiRow>, Vec<TtiStatsRow>, Vec<SummaryRow>) {
    let id = &series.scenario;
    let mut per_tti = Vec::new();
    let mut stats = Vec::with_capacity(series.records.len());
    for r in &series.records {
        for tier in [Tier::Cue, Tier::D2d] {
            for (u, (&rate, &avg)) in r.rates(tier).iter().zip(r.avg(tier)).enumerate() {
                per_tti.push(PerTtiRow {
                    scenario_id: id.clone(),
                    seed: series.seed,
                    tti: r.tti,
                    tier: tier.as_str().into(),
                    user_id: u,
                    rate_bps: rate,
                    avg_rate_bps: avg,
                });
            }
        }
        stats.push(TtiStatsRow {
            scenario_id: id.clone(),
            seed: series.seed,
            tti: r.tti,
            utility: r.utility,
            wf_calls: r.wf_calls,
            iterations_used: r.iterations_used,
            violations: r.violations,
        });
    }
    let (utility, wf, iters) = (series.utility_total(), series.wf_calls(), series.iterations_used());
    let mut summary = Vec::new();
    for tier in [Tier::Cue, Tier::D2d] {
        let logsum = series.logsum(tier);
        for (u, m) in series.mean_rates(tier).into_iter().enumerate() {
            summary.push(SummaryRow {
                scenario_id: id.clone(),
                seed: series.seed,
                tier: tier.as_str().into(),
                user_id: u,
                mean_rate_bps: m,
                logsum_tier: logsum,
                utility_total: utility,
                wf_calls: wf,
                iterations_used: iters,
            });
        }
    }
    (per_tti, stats, summary)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    write_atomic(&dir.join(MANIFEST), toml::to_string(manifest)?.as_bytes())
}

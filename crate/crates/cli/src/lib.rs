//! Library side of the `d2dsched` command: config loading, the run / compare /
//! sweep / complexity commands and their CSV outputs.

pub mod config;
pub mod output;

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};
use d2dsched::model::Tier;
use d2dsched::scheduler::{complexity_estimate, optimal_pattern_count, optimal_pf, SchedulerKind};
use d2dsched::sim::{run_scenario, run_scenario_with, MetricSeries, ScenarioConfig};
use rayon::prelude::*;

use output::{
    tier_rows, write_csv, write_manifest, CompareRow, RunManifest, SweepRow, SweepSpec, COMPARE_CSV, PER_TTI_CSV,
    SUMMARY_CSV, SWEEP_CSV, TTI_STATS_CSV,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `count` consecutive seeds starting at `config.seed`.
pub fn seed_list(config: &ScenarioConfig, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| config.seed.wrapping_add(i)).collect()
}

fn with_seed(config: &ScenarioConfig, seed: u64) -> ScenarioConfig {
    ScenarioConfig { seed, ..config.clone() }
}

fn run_seeds(config: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<MetricSeries>> {
    seeds
        .par_iter()
        .map(|&s| run_scenario(&with_seed(config, s)).map_err(Into::into))
        .collect()
}

fn manifest(command: &str, config: &ScenarioConfig, seeds: &[u64], outputs: &[&str], start: Instant) -> RunManifest {
    RunManifest {
        command: command.into(),
        version: VERSION.into(),
        seeds: seeds.to_vec(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        wall_clock_ms: start.elapsed().as_millis() as u64,
        sweep: None,
        config: config.clone(),
    }
}

/// Simulate every seed and write per-TTI, per-TTI-stats and summary CSVs.
pub fn cmd_run(config: &ScenarioConfig, seeds: &[u64], out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    if seeds.is_empty() {
        bail!("no seeds to run");
    }
    let series = run_seeds(config, seeds)?;
    let (mut per_tti, mut stats, mut summary) = (Vec::new(), Vec::new(), Vec::new());
    for s in &series {
        let (p, t, m) = tier_rows(s);
        per_tti.extend(p);
        stats.extend(t);
        summary.extend(m);
    }
    write_csv(&out.join(PER_TTI_CSV), &per_tti)?;
    write_csv(&out.join(TTI_STATS_CSV), &stats)?;
    write_csv(&out.join(SUMMARY_CSV), &summary)?;
    let m = manifest("run", config, seeds, &[PER_TTI_CSV, TTI_STATS_CSV, SUMMARY_CSV], start);
    write_manifest(out, &m)?;
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub manifest: RunManifest,
}

impl CompareReport {
    pub fn median_ratio(&self) -> f64 {
        median(self.rows.iter().map(|r| r.ratio).collect())
    }

    pub fn dominance_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 1.0;
        }
        self.rows.iter().filter(|r| r.dominated).count() as f64 / self.rows.len() as f64
    }
}

/// Heuristic over exhaustive utility; 1 when both are equal (including both zero).
pub fn utility_ratio(heuristic: f64, optimal: f64) -> f64 {
    if heuristic == optimal {
        1.0
    } else {
        heuristic / optimal
    }
}

/// Drive the simulation with the configured scheduler and, on every cell-TTI,
/// also run the exhaustive search on the same state.
pub fn cmd_compare(config: &ScenarioConfig, seeds: &[u64], out: &Path) -> Result<CompareReport> {
    let start = Instant::now();
    let (nc, nd, k) = (config.num_cues, config.num_pairs, config.num_subchannels);
    let patterns = optimal_pattern_count(nc, nd, k);
    if patterns > config.scheduling.max_patterns {
        let est = complexity_estimate(SchedulerKind::Optimal, nc as u32, nd as u32, k as u32, 1);
        bail!(
            "instance too large for the exhaustive search: complexity estimate {est:.3e}, \
             {patterns:.3e} block patterns (limit {:.3e})",
            config.scheduling.max_patterns
        );
    }
    let per_seed: Vec<Vec<CompareRow>> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = with_seed(config, seed);
            let mut rows = Vec::new();
            run_scenario_with(&cfg, |ctx| {
                let opt = optimal_pf(ctx.state, &cfg.scheduling)?;
                let (h, o) = (ctx.outcome.utility, opt.utility);
                rows.push(CompareRow {
                    scenario_id: cfg.name.clone(),
                    seed,
                    tti: ctx.tti,
                    cell: ctx.cell,
                    phpfs_utility: h,
                    opf_utility: o,
                    ratio: utility_ratio(h, o),
                    dominated: h <= o + 1e-9,
                });
                Ok(())
            })?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<CompareRow> = per_seed.into_iter().flatten().collect();
    write_csv(&out.join(COMPARE_CSV), &rows)?;
    let m = manifest("compare", config, seeds, &[COMPARE_CSV], start);
    write_manifest(out, &m)?;
    Ok(CompareReport { rows, manifest: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "n_c")]
    NumCues,
    #[value(name = "n_d")]
    NumPairs,
    #[value(name = "k")]
    Subchannels,
    #[value(name = "m")]
    Iterations,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::NumCues => "n_c",
            Axis::NumPairs => "n_d",
            Axis::Subchannels => "k",
            Axis::Iterations => "m",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "n_c" => Axis::NumCues,
            "n_d" => Axis::NumPairs,
            "k" => Axis::Subchannels,
            "m" => Axis::Iterations,
            _ => bail!("unknown sweep axis `{name}`"),
        })
    }

    pub fn apply(self, config: &ScenarioConfig, value: usize) -> ScenarioConfig {
        let mut c = config.clone();
        match self {
            Axis::NumCues => c.num_cues = value,
            Axis::NumPairs => c.num_pairs = value,
            Axis::Subchannels => c.num_subchannels = value,
            Axis::Iterations => c.scheduling.max_iterations = value as u32,
        }
        c
    }
}

pub fn sweep_rows(axis: Axis, value: usize, s: &MetricSeries) -> Vec<SweepRow> {
    let row = |metric: &str, tier: &str, v: f64| SweepRow {
        axis: axis.name().into(),
        axis_value: value as f64,
        seed: s.seed,
        metric: metric.into(),
        tier: tier.into(),
        value: v,
    };
    let mut rows = Vec::new();
    for tier in [Tier::Cue, Tier::D2d] {
        rows.push(row("logsum", tier.as_str(), s.logsum(tier)));
        rows.push(row("total_rate_bps", tier.as_str(), s.total_rate(tier)));
    }
    rows.push(row("total_rate_bps", "all", s.total_rate(Tier::Cue) + s.total_rate(Tier::D2d)));
    rows.push(row("utility_total", "all", s.utility_total()));
    rows.push(row("wf_calls", "all", s.wf_calls() as f64));
    rows
}

/// One simulation per (value, seed); long-format rows for plotting.
pub fn cmd_sweep(config: &ScenarioConfig, axis: Axis, values: &[usize], seeds: &[u64], out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    if seeds.is_empty() {
        bail!("no seeds to run");
    }
    let jobs: Vec<(usize, u64)> = values.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let rows: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(v, s)| {
            let cfg = with_seed(&axis.apply(config, v), s);
            Ok(sweep_rows(axis, v, &run_scenario(&cfg)?))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = rows.into_iter().flatten().collect();
    write_csv(&out.join(SWEEP_CSV), &rows)?;
    let mut m = manifest("sweep", config, seeds, &[SWEEP_CSV], start);
    m.sweep = Some(SweepSpec { axis: axis.name().into(), values: values.iter().map(|&v| v as f64).collect() });
    write_manifest(out, &m)?;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityRow {
    pub n_c: u32,
    pub n_d: u32,
    pub k: u32,
    pub m: u32,
    pub optimal: f64,
    pub phpfs: f64,
}

impl ComplexityRow {
    pub fn ratio(&self) -> f64 {
        self.optimal / self.phpfs
    }
}

pub fn complexity_rows(n_c: u32, n_d: u32, ks: &[u32], m: u32) -> Result<Vec<ComplexityRow>> {
    if n_c == 0 || n_d == 0 || m == 0 || ks.contains(&0) {
        bail!("complexity arguments must all be >= 1");
    }
    Ok(ks
        .iter()
        .map(|&k| ComplexityRow {
            n_c,
            n_d,
            k,
            m,
            optimal: complexity_estimate(SchedulerKind::Optimal, n_c, n_d, k, m),
            phpfs: complexity_estimate(SchedulerKind::Phpfs, n_c, n_d, k, m),
        })
        .collect())
}

fn fmt_count(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v}")
    } else if v.abs() < 1e6 {
        format!("{v:.3}")
    } else {
        format!("{v:.4e}")
    }
}

/// Closed-form operation counts as a small CSV table.
pub fn cmd_complexity(n_c: u32, n_d: u32, ks: &[u32], m: u32) -> Result<String> {
    let mut out = String::from("n_c,n_d,k,m,optimal,phpfs,ratio\n");
    for r in complexity_rows(n_c, n_d, ks, m)? {
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            r.n_c,
            r.n_d,
            r.k,
            r.m,
            fmt_count(r.optimal),
            fmt_count(r.phpfs),
            fmt_count(r.ratio())
        );
    }
    Ok(out)
}

/// Re-run whatever command a manifest records, writing into `out`.
pub fn replay(manifest: &RunManifest, out: &Path) -> Result<RunManifest> {
    match manifest.command.as_str() {
        "run" => cmd_run(&manifest.config, &manifest.seeds, out),
        "compare" => cmd_compare(&manifest.config, &manifest.seeds, out).map(|r| r.manifest),
        "sweep" => {
            let spec = manifest.sweep.as_ref().ok_or_else(|| anyhow::anyhow!("sweep manifest without sweep spec"))?;
            let values: Vec<usize> = spec.values.iter().map(|&v| v as usize).collect();
            cmd_sweep(&manifest.config, Axis::parse(&spec.axis)?, &values, &manifest.seeds, out)
        }
        other => bail!("manifest records unknown command `{other}`"),
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

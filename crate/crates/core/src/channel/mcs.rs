use std::path::Path;

use super::ChannelError;

const DEFAULT_TABLE: &str = include_str!("../../data/cqi_table.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub threshold_db: f64,
    /// bits/s/Hz
    pub efficiency: f64,
}

/// SINR-threshold lookup of spectral efficiency. Below the first threshold the
/// efficiency is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, ChannelError> {
        if entries.is_empty() {
            return Err(ChannelError::Config("MCS table is empty".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if !e.threshold_db.is_finite() || !(e.efficiency >= 0.0 && e.efficiency.is_finite()) {
                return Err(ChannelError::Config(format!("MCS entry {i} is not finite / non-negative")));
            }
            if i > 0 {
                let prev = entries[i - 1];
                if e.threshold_db <= prev.threshold_db {
                    return Err(ChannelError::Config(format!("MCS thresholds must increase (entry {i})")));
                }
                if e.efficiency < prev.efficiency {
                    return Err(ChannelError::Config(format!("MCS efficiencies must not decrease (entry {i})")));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Parse `threshold_db efficiency` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ChannelError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || ChannelError::Parse { line: n + 1, msg: format!("expected `threshold_db efficiency`, got `{line}`") };
            if fields.len() != 2 {
                return Err(bad());
            }
            let threshold_db = fields[0].parse().map_err(|_| bad())?;
            let efficiency = fields[1].parse().map_err(|_| bad())?;
            entries.push(McsEntry { threshold_db, efficiency });
        }
        Self::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ChannelError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The shipped 15-entry CQI-style table.
    pub fn default_cqi() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled MCS table is valid")
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn efficiency(&self, sinr_db: f64) -> f64 {
        let idx = self.entries.partition_point(|e| e.threshold_db <= sinr_db);
        if idx == 0 {
            0.0
        } else {
            self.entries[idx - 1].efficiency
        }
    }
}

pub fn sinr_to_efficiency(sinr_db: f64, table: &McsTable) -> f64 {
    table.efficiency(sinr_db)
}

//! Scenario files: TOML with nested sections, plus `section.key=value`
//! overrides and a seed taken from the environment.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use d2dsched::sim::ScenarioConfig;
use serde::Deserialize;

/// Environment variable that overrides `seed`.
pub const SEED_ENV: &str = "D2DSCHED_SEED";

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    parse_config(&text, overrides, env_seed.as_deref())
        .with_context(|| format!("config {}", path.map_or("<defaults>".into(), |p| p.display().to_string())))
}

/// Parse `text`, then apply the environment seed, then each override in order.
pub fn parse_config(text: &str, overrides: &[String], env_seed: Option<&str>) -> Result<ScenarioConfig> {
    // parse the file on its own first so schema errors carry line numbers
    toml::from_str::<ScenarioConfig>(text).map_err(|e| anyhow!("{e}"))?;
    let mut table: toml::Table = text.parse().map_err(|e| anyhow!("{e}"))?;
    if let Some(seed) = env_seed {
        let seed: u64 = seed.trim().parse().with_context(|| format!("{SEED_ENV}={seed} is not a seed"))?;
        let seed = i64::try_from(seed).map_err(|_| anyhow!("{SEED_ENV} must fit in a signed 64-bit integer"))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config = ScenarioConfig::deserialize(toml::Value::Table(table)).map_err(|e| anyhow!("after overrides: {e}"))?;
    config.validate()?;
    Ok(config)
}

/// Apply `a.b.c=value`. The value is read as a TOML literal, falling back to a
/// bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| anyhow!("override `{spec}` is not key=value"))?;
    let path: Vec<&str> = key.trim().split('.').map(str::trim).collect();
    if path.iter().any(|p| p.is_empty()) {
        bail!("override `{spec}` has an empty key segment");
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| anyhow!("override `{spec}`: `{p}` is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn to_toml(config: &ScenarioConfig) -> Result<String> {
    Ok(toml::to_string(config)?)
}

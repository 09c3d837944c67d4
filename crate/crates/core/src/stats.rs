//! Grouped descriptive statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::order_stats::median;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n−1 denominator); 0 for singleton groups.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    pub groups: Vec<StatsRow>,
    pub pooled: StatsRow,
}

fn summarize(group: &str, values: &[f64]) -> StatsRow {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    StatsRow {
        group: group.to_string(),
        n,
        mean,
        median: median(values),
        sd,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Per-group and pooled mean/median/sd/min/max/count. Groups appear in
/// sorted label order.
pub fn descriptive_stats(values: &[f64], group_keys: &[String]) -> Result<StatsTable> {
    if values.is_empty() {
        return Err(Error::EmptyInput("descriptive_stats on empty input".into()));
    }
    if values.len() != group_keys.len() {
        return Err(Error::Invalid(format!(
            "values ({}) and group_keys ({}) differ in length",
            values.len(),
            group_keys.len()
        )));
    }
    let mut by_group: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for (v, g) in values.iter().zip(group_keys) {
        by_group.entry(g.as_str()).or_default().push(*v);
    }
    let groups = by_group
        .iter()
        .map(|(g, vs)| summarize(g, vs))
        .collect::<Vec<_>>();
    Ok(StatsTable {
        groups,
        pooled: summarize("all", values),
    })
}

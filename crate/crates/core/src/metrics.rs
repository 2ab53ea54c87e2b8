//! Run counters, the headline metrics (hit ratio, hop count), replication
//! statistics, and CSV output.

use std::cmp::Ordering;
use std::io::{self, Write};

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::policy::PolicyKind;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no completed requests in the measurement window")]
    NoCompletedRequests,
    #[error("confidence interval needs at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid confidence level {0}")]
    InvalidLevel(f64),
    #[error("no reports to write")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-router counters for requests issued inside the measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub interests_received: u64,
    pub cache_hits: u64,
    pub unique_names_requested: u64,
}

/// Counters of one simulation run. Only requests issued after warmup count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub nodes: Vec<NodeCounters>,
    pub requests_issued: u64,
    pub completions: u64,
    pub timeouts: u64,
    /// Requests still outstanding when the run stopped.
    pub in_flight: u64,
    pub producer_serves: u64,
    pub sum_hop_counts: u64,
    /// Data packets that found no PIT entry (whole run).
    pub unsolicited_data: u64,
}

impl RunCounters {
    pub fn total_cache_hits(&self) -> u64 {
        self.nodes.iter().map(|n| n.cache_hits).sum()
    }
}

/// Fraction of requests served from some Content Store (producer serves excluded).
pub fn aggregate_hit_ratio(c: &RunCounters) -> Result<f64, MetricsError> {
    if c.completions == 0 || c.requests_issued == 0 {
        return Err(MetricsError::NoCompletedRequests);
    }
    Ok(c.total_cache_hits() as f64 / c.requests_issued as f64)
}

/// Mean over routers of cache hits divided by the number of distinct names
/// requested at that router. Routers that saw no Interests are skipped.
pub fn per_router_normalized_hits(c: &RunCounters) -> Result<f64, MetricsError> {
    if c.completions == 0 {
        return Err(MetricsError::NoCompletedRequests);
    }
    let ratios: Vec<f64> = c
        .nodes
        .iter()
        .filter(|n| n.unique_names_requested > 0)
        .map(|n| n.cache_hits as f64 / n.unique_names_requested as f64)
        .collect();
    if ratios.is_empty() {
        return Ok(0.0);
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Mean hop distance between each consumer and the node that served it.
pub fn avg_hop_count(c: &RunCounters) -> Result<f64, MetricsError> {
    if c.completions == 0 {
        return Err(MetricsError::NoCompletedRequests);
    }
    Ok(c.sum_hop_counts as f64 / c.completions as f64)
}

/// Student-t interval: returns `(mean, half_width)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64), MetricsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(MetricsError::InvalidLevel(level));
    }
    let n = samples.len();
    if n < 2 {
        return Err(MetricsError::InsufficientSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let dof = (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - (1.0 - level) / 2.0);
    Ok((mean, t * var.sqrt() / (n as f64).sqrt()))
}

/// Identifies one sweep cell; replications of a cell differ only in seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub topology: String,
    pub policy: PolicyKind,
    pub cache_pct: f64,
    pub alpha: f64,
    pub q: f64,
    pub catalog_size: u32,
}

impl CellKey {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.topology
            .cmp(&other.topology)
            .then(self.policy.cmp(&other.policy))
            .then(self.cache_pct.total_cmp(&other.cache_pct))
            .then(self.q.total_cmp(&other.q))
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.catalog_size.cmp(&other.catalog_size))
    }
}

/// Result of one replication with its configuration echo.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub key: CellKey,
    pub seed: u64,
    pub hit_ratio: f64,
    pub per_router_hits: f64,
    pub avg_hops: f64,
    pub timeouts: u64,
    pub counters: RunCounters,
}

impl MetricsReport {
    pub fn from_counters(
        key: CellKey,
        seed: u64,
        counters: RunCounters,
    ) -> Result<Self, MetricsError> {
        Ok(MetricsReport {
            key,
            seed,
            hit_ratio: aggregate_hit_ratio(&counters)?,
            per_router_hits: per_router_normalized_hits(&counters)?,
            avg_hops: avg_hop_count(&counters)?,
            timeouts: counters.timeouts,
            counters,
        })
    }
}

/// Mean and, with two or more replications, the 95% CI half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci: Option<f64>,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        match confidence_interval(samples, 0.95) {
            Ok((mean, ci)) => Estimate { mean, ci: Some(ci) },
            Err(_) => Estimate {
                mean: samples.iter().sum::<f64>() / samples.len().max(1) as f64,
                ci: None,
            },
        }
    }

    /// CI half-width, or 0 when unavailable.
    pub fn half_width(&self) -> f64 {
        self.ci.unwrap_or(0.0)
    }
}

/// Replications of one cell collapsed into means and CIs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub key: CellKey,
    pub replications: usize,
    pub hit_ratio: Estimate,
    pub per_router_hits: Estimate,
    pub hops: Estimate,
    pub timeouts_mean: f64,
}

/// Groups reports by cell (ordered by cell key) and aggregates each group.
pub fn summarize(reports: &[MetricsReport]) -> Vec<CellSummary> {
    let mut sorted: Vec<&MetricsReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp_key(&b.key).then(a.seed.cmp(&b.seed)));

    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let key = &sorted[start].key;
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|r| r.key.cmp_key(key) == Ordering::Equal)
                .count();
        let group = &sorted[start..end];
        let collect = |f: fn(&MetricsReport) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
        out.push(CellSummary {
            key: key.clone(),
            replications: group.len(),
            hit_ratio: Estimate::from_samples(&collect(|r| r.hit_ratio)),
            per_router_hits: Estimate::from_samples(&collect(|r| r.per_router_hits)),
            hops: Estimate::from_samples(&collect(|r| r.avg_hops)),
            timeouts_mean: collect(|r| r.timeouts as f64).iter().sum::<f64>() / group.len() as f64,
        });
        start = end;
    }
    out
}

pub const CSV_HEADER: [&str; 14] = [
    "topology",
    "policy",
    "cache_pct",
    "alpha",
    "q",
    "catalog_size",
    "replications",
    "hit_ratio_mean",
    "hit_ratio_ci",
    "per_router_hit_mean",
    "per_router_hit_ci",
    "hop_mean",
    "hop_ci",
    "timeouts_mean",
];

/// Formats with 6 significant digits in plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    let text = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.999996 -> 10.00000).
    let reparsed: f64 = text.parse().unwrap_or(x);
    let carried = reparsed.abs().log10().floor() as i32;
    if carried > magnitude && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        text
    }
}

fn format_ci(ci: Option<f64>) -> String {
    ci.map(format_sig6).unwrap_or_default()
}

/// Writes one row per cell; replications of a cell are collapsed.
pub fn write_csv<W: Write>(reports: &[MetricsReport], out: W) -> Result<(), MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    write_summary_csv(&summarize(reports), out)
}

pub fn write_summary_csv<W: Write>(cells: &[CellSummary], mut out: W) -> Result<(), MetricsError> {
    if cells.is_empty() {
        return Err(MetricsError::Empty);
    }
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for c in cells {
        let fields = [
            csv_text(&c.key.topology),
            c.key.policy.to_string(),
            format_sig6(c.key.cache_pct),
            format_sig6(c.key.alpha),
            format_sig6(c.key.q),
            c.key.catalog_size.to_string(),
            c.replications.to_string(),
            format_sig6(c.hit_ratio.mean),
            format_ci(c.hit_ratio.ci),
            format_sig6(c.per_router_hits.mean),
            format_ci(c.per_router_hits.ci),
            format_sig6(c.hops.mean),
            format_ci(c.hops.ci),
            format_sig6(c.timeouts_mean),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Long ("tidy") format for plotting tools: one row per cell and metric.
pub fn write_long_csv<W: Write>(cells: &[CellSummary], mut out: W) -> Result<(), MetricsError> {
    if cells.is_empty() {
        return Err(MetricsError::Empty);
    }
    writeln!(
        out,
        "topology,policy,cache_pct,alpha,q,catalog_size,metric,mean,ci"
    )?;
    for c in cells {
        for (metric, est) in [
            ("hit_ratio", c.hit_ratio),
            ("per_router_hit", c.per_router_hits),
            ("hop_count", c.hops),
        ] {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_text(&c.key.topology),
                c.key.policy,
                format_sig6(c.key.cache_pct),
                format_sig6(c.key.alpha),
                format_sig6(c.key.q),
                c.key.catalog_size,
                metric,
                format_sig6(est.mean),
                format_ci(est.ci),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

//! Hyperparameter sweeps and ranking-stability checks.
//!
//! A sweep evaluates several methods (datasets) across a grid of tracker
//! settings and records, per metric and per setting, the method ordering
//! from best to worst. A metric is robust to the tracker hyperparameters
//! when those orderings agree across the whole grid; `rank_consistency`
//! reports that, plus the minimum pairwise Kendall tau as a graded measure.

use serde::{Deserialize, Serialize};

use rhythmeter_core::{MetricsConfig, PipelineConfig, TrackerConfig};

use crate::dataset::SampleDescriptor;
use crate::evaluate::{self, EvalOptions};
use crate::report::MetricsReport;

/// Errors from sweep orchestration and consistency checks.
#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    /// A sweep needs at least two methods and two grid settings.
    #[error("sweep needs >= 2 methods and >= 2 settings, got {methods} and {settings}")]
    Precondition {
        /// Methods supplied.
        methods: usize,
        /// Grid settings supplied.
        settings: usize,
    },
    /// Fewer than two settings produced complete rankings.
    #[error("only {0} settings have complete rankings, need >= 2")]
    InsufficientSettings(usize),
    /// Unknown metric name in a consistency query.
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// One grid cell's tracker settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSetting {
    /// Envelope frame rate in Hz.
    pub fps: f64,
    /// Transition lambda.
    pub tl: f64,
}

impl std::fmt::Display for GridSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "fps@{} tl@{}", self.fps, self.tl)
    }
}

/// The default sweep grid: fps 100/150/200 crossed with tl 50/100.
pub fn default_grid() -> Vec<GridSetting> {
    let mut grid = Vec::new();
    for fps in [100.0, 150.0, 200.0] {
        for tl in [50.0, 100.0] {
            grid.push(GridSetting { fps, tl });
        }
    }
    grid
}

/// Metrics a sweep ranks methods by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMetric {
    /// Mean per-track IRS; lower ranks first.
    Irs,
    /// CBS; higher ranks first.
    Cbs,
    /// CBD mean; lower ranks first.
    CbdMean,
}

impl RankMetric {
    /// All ranked metrics.
    pub const ALL: [RankMetric; 3] = [RankMetric::Irs, RankMetric::Cbs, RankMetric::CbdMean];

    /// Parse a CLI name.
    pub fn parse(name: &str) -> Result<Self, SweepError> {
        match name {
            "irs" => Ok(RankMetric::Irs),
            "cbs" => Ok(RankMetric::Cbs),
            "cbd" | "cbd_mean" => Ok(RankMetric::CbdMean),
            other => Err(SweepError::UnknownMetric(other.to_string())),
        }
    }
}

impl std::fmt::Display for RankMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankMetric::Irs => write!(f, "irs"),
            RankMetric::Cbs => write!(f, "cbs"),
            RankMetric::CbdMean => write!(f, "cbd_mean"),
        }
    }
}

/// The metric values one method produced under one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    /// Mean of the per-track IRS values that were defined.
    pub irs_mean: Option<f64>,
    /// CBS value.
    pub cbs: Option<f64>,
    /// CBD pooled mean.
    pub cbd_mean: Option<f64>,
    /// Samples evaluated.
    pub samples: usize,
}

impl MethodSummary {
    fn from_report(report: &MetricsReport) -> Self {
        let defined: Vec<f64> = report.irs.iter().filter_map(|t| t.value).collect();
        let irs_mean = if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        };
        Self {
            irs_mean,
            cbs: report.cbs.value,
            cbd_mean: report.cbd.stats.map(|s| s.mean),
            samples: report.samples_evaluated,
        }
    }

    fn value(&self, metric: RankMetric) -> Option<f64> {
        match metric {
            RankMetric::Irs => self.irs_mean,
            RankMetric::Cbs => self.cbs,
            RankMetric::CbdMean => self.cbd_mean,
        }
    }
}

/// One (setting, method) evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// Tracker settings of this cell.
    pub setting: GridSetting,
    /// Method name.
    pub method: String,
    /// Metric values, or the failure reason.
    pub outcome: Result<MethodSummary, String>,
}

/// Method ordering induced by one metric under one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    /// Metric the ordering is by.
    pub metric: RankMetric,
    /// Setting the ordering was measured under.
    pub setting: GridSetting,
    /// Methods from best to worst. Ties break by method name.
    pub order: Vec<String>,
    /// True when every method has a value in this table.
    pub complete: bool,
}

/// Everything a sweep produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// The grid, in evaluation order.
    pub grid: Vec<GridSetting>,
    /// Method names, in evaluation order.
    pub methods: Vec<String>,
    /// One cell per (setting, method).
    pub cells: Vec<SweepCell>,
    /// One ranking per metric per setting.
    pub rankings: Vec<RankingTable>,
}

/// Result of a ranking-stability check for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankConsistency {
    /// Metric checked.
    pub metric: RankMetric,
    /// True when the ordering is identical in every checked setting.
    pub consistent: bool,
    /// Minimum pairwise Kendall tau across checked settings, in [-1, 1].
    pub min_kendall_tau: f64,
    /// Settings whose rankings entered the check.
    pub settings_used: usize,
    /// Settings dropped because a method was missing, with reasons.
    pub warnings: Vec<String>,
}

/// Runs every method through every grid setting.
///
/// Each cell evaluates one method's dataset with the cell's `fps` and `tl`
/// substituted into the base tracker config. Failed cells are recorded with
/// their reason and excluded from rankings.
pub fn sweep(
    methods: &[(String, Vec<SampleDescriptor>)],
    grid: &[GridSetting],
    base: &PipelineConfig,
    metrics_cfg: &MetricsConfig,
    opts: &EvalOptions,
) -> Result<SweepReport, SweepError> {
    if methods.len() < 2 || grid.len() < 2 {
        return Err(SweepError::Precondition { methods: methods.len(), settings: grid.len() });
    }

    let mut cells = Vec::with_capacity(methods.len() * grid.len());
    for &setting in grid {
        let cfg = PipelineConfig {
            spectrogram: base.spectrogram.clone(),
            tracker: TrackerConfig {
                fps: setting.fps,
                transition_lambda: setting.tl,
                ..base.tracker.clone()
            },
        };
        for (name, descriptors) in methods {
            let outcome = evaluate::evaluate(descriptors, &cfg, metrics_cfg, opts)
                .map(|report| MethodSummary::from_report(&report))
                .map_err(|e| e.to_string());
            cells.push(SweepCell { setting, method: name.clone(), outcome });
        }
    }

    let method_names: Vec<String> = methods.iter().map(|(n, _)| n.clone()).collect();
    let rankings = build_rankings(grid, &method_names, &cells);
    Ok(SweepReport { grid: grid.to_vec(), methods: method_names, cells, rankings })
}

fn build_rankings(
    grid: &[GridSetting],
    methods: &[String],
    cells: &[SweepCell],
) -> Vec<RankingTable> {
    let mut rankings = Vec::new();
    for metric in RankMetric::ALL {
        for &setting in grid {
            let mut scored: Vec<(&String, f64)> = Vec::new();
            for method in methods {
                let value = cells
                    .iter()
                    .find(|c| c.setting == setting && &c.method == method)
                    .and_then(|c| c.outcome.as_ref().ok())
                    .and_then(|s| s.value(metric));
                if let Some(v) = value {
                    scored.push((method, v));
                }
            }
            // Best first: CBS descends, IRS and CBD ascend.
            scored.sort_by(|a, b| {
                let ord = a.1.partial_cmp(&b.1).unwrap();
                let ord = if metric == RankMetric::Cbs { ord.reverse() } else { ord };
                ord.then_with(|| a.0.cmp(b.0))
            });
            rankings.push(RankingTable {
                metric,
                setting,
                order: scored.into_iter().map(|(m, _)| m.clone()).collect(),
                complete: false,
            });
        }
    }
    for table in &mut rankings {
        table.complete = table.order.len() == methods.len();
    }
    rankings
}

/// Checks whether one metric ranks the methods identically across settings.
///
/// Settings with incomplete rankings (a failed cell or an undefined metric)
/// are dropped with a warning; at least two complete settings must remain.
pub fn rank_consistency(
    report: &SweepReport,
    metric: RankMetric,
) -> Result<RankConsistency, SweepError> {
    let mut orders = Vec::new();
    let mut warnings = Vec::new();
    for table in report.rankings.iter().filter(|t| t.metric == metric) {
        if table.complete {
            orders.push(&table.order);
        } else {
            warnings.push(format!(
                "setting {} excluded: only {}/{} methods ranked",
                table.setting,
                table.order.len(),
                report.methods.len()
            ));
        }
    }
    if orders.len() < 2 {
        return Err(SweepError::InsufficientSettings(orders.len()));
    }

    let consistent = orders.windows(2).all(|w| w[0] == w[1]);
    let mut min_tau = 1.0f64;
    for i in 0..orders.len() {
        for j in i + 1..orders.len() {
            min_tau = min_tau.min(kendall_tau(orders[i], orders[j]));
        }
    }
    Ok(RankConsistency {
        metric,
        consistent,
        min_kendall_tau: min_tau,
        settings_used: orders.len(),
        warnings,
    })
}

/// Kendall tau between two strict orderings of the same items:
/// `1 - 2 * discordant / C(n, 2)`.
pub fn kendall_tau(a: &[String], b: &[String]) -> f64 {
    assert_eq!(a.len(), b.len(), "orderings must rank the same items");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let rank_in_b =
        |name: &String| b.iter().position(|x| x == name).expect("same items in both orders");
    let mapped: Vec<usize> = a.iter().map(rank_in_b).collect();
    let mut discordant = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if mapped[i] > mapped[j] {
                discordant += 1;
            }
        }
    }
    1.0 - 2.0 * discordant as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tau_of_identical_orderings_is_one() {
        let a = names(&["x", "y", "z"]);
        assert_eq!(kendall_tau(&a, &a), 1.0);
    }

    #[test]
    fn tau_of_single_adjacent_swap() {
        // One discordant pair out of C(4,2) = 6.
        let a = names(&["a", "b", "c", "d"]);
        let b = names(&["a", "c", "b", "d"]);
        let tau = kendall_tau(&a, &b);
        assert!((tau - (1.0 - 2.0 / 6.0)).abs() < 1e-12, "tau {tau}");
    }

    #[test]
    fn tau_of_full_reversal_is_minus_one() {
        let a = names(&["a", "b"]);
        let b = names(&["b", "a"]);
        assert_eq!(kendall_tau(&a, &b), -1.0);
    }

    #[test]
    fn default_grid_is_six_settings() {
        let grid = default_grid();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0].to_string(), "fps@100 tl@50");
        assert_eq!(grid[5].to_string(), "fps@200 tl@100");
    }

    #[test]
    fn consistency_over_synthetic_rankings() {
        let grid = [GridSetting { fps: 100.0, tl: 50.0 }, GridSetting { fps: 150.0, tl: 50.0 }];
        let make_table = |setting, order: &[&str], complete| RankingTable {
            metric: RankMetric::Irs,
            setting,
            order: names(order),
            complete,
        };
        let report = SweepReport {
            grid: grid.to_vec(),
            methods: names(&["a", "b"]),
            cells: Vec::new(),
            rankings: vec![
                make_table(grid[0], &["a", "b"], true),
                make_table(grid[1], &["b", "a"], true),
            ],
        };
        let out = rank_consistency(&report, RankMetric::Irs).unwrap();
        assert!(!out.consistent);
        assert_eq!(out.min_kendall_tau, -1.0);

        let report = SweepReport {
            rankings: vec![
                make_table(grid[0], &["a", "b"], true),
                make_table(grid[1], &["a"], false),
            ],
            ..report
        };
        assert!(matches!(
            rank_consistency(&report, RankMetric::Irs),
            Err(SweepError::InsufficientSettings(1))
        ));
    }

    #[test]
    fn sweep_precondition_enforced() {
        let err = sweep(
            &[("only".to_string(), Vec::new())],
            &default_grid(),
            &PipelineConfig::default(),
            &MetricsConfig::default(),
            &EvalOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SweepError::Precondition { methods: 1, .. }));
    }
}

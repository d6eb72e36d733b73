//! Evaluation protocol: seeded test-date sampling, per-date evaluation cells,
//! parameter sweeps averaged over paired dates, and sweeps over the future
//! window length.
//!
//! Dates are sampled once per (dataset, window length) and shared by every
//! grid point, so parameter comparisons are paired. Cells run in parallel
//! and are reduced in (grid point, date) order, so results never depend on
//! scheduling.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ids::Day;
use crate::metrics::{self, MetricReport, TrueFutureRanking};
use crate::predictors::{rank, PredictorSpec, RankedList};
use crate::tempgraph::{Snapshot, TemporalGraph};

/// `steps + 1` evenly spaced values from 0 to 1 inclusive.
pub fn unit_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    /// Future window length `T_F`; the PBP history window uses the same length.
    pub horizon: Day,
    pub num_test_dates: usize,
    pub min_history: Day,
    pub seed: u64,
    pub gamma_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_values: vec![50, 100, 200],
            horizon: 30,
            num_test_dates: 10,
            min_history: 365,
            seed: 0,
            gamma_grid: unit_grid(100),
            lambda_grid: unit_grid(100),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::param(
                "n values must be a nonempty list of positive integers",
            ));
        }
        if self.horizon < 1 {
            return Err(Error::param("future window must be at least 1 day"));
        }
        if self.min_history < 1 {
            return Err(Error::param("minimum history must be at least 1 day"));
        }
        if self.num_test_dates == 0 {
            return Err(Error::param("need at least one test date"));
        }
        check_grid(&self.gamma_grid, "gamma", f64::INFINITY)?;
        check_grid(&self.lambda_grid, "lambda", 1.0)?;
        Ok(())
    }

    pub fn sample_dates(&self, graph: &TemporalGraph) -> Result<Vec<Day>> {
        sample_test_dates(
            graph,
            self.num_test_dates,
            self.min_history,
            self.horizon,
            self.seed,
        )
    }
}

fn check_grid(grid: &[f64], name: &str, max: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(format!("{name} grid is empty")));
    }
    if let Some(bad) = grid
        .iter()
        .find(|&&v| !(v >= 0.0 && v <= max && v.is_finite()))
    {
        return Err(Error::param(format!(
            "{name} grid value {bad} out of range"
        )));
    }
    Ok(())
}

/// `count` distinct days drawn uniformly from
/// `[day_min + min_history, day_max - horizon]`, returned ascending.
pub fn sample_test_dates(
    graph: &TemporalGraph,
    count: usize,
    min_history: Day,
    horizon: Day,
    seed: u64,
) -> Result<Vec<Day>> {
    let lo = graph.day_min() + min_history;
    let hi = graph.day_max() - horizon;
    let eligible = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    if eligible < count {
        return Err(Error::param(format!(
            "only {eligible} eligible test days in [{lo}, {hi}], need {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut days: Vec<Day> = index::sample(&mut rng, eligible, count)
        .into_iter()
        .map(|i| lo + i as Day)
        .collect();
    days.sort_unstable();
    Ok(days)
}

/// Everything about one test date that does not depend on the predictor.
#[derive(Debug, Clone)]
pub struct DateContext<'g> {
    pub snapshot: Snapshot<'g>,
    pub truth: TrueFutureRanking,
    pub past: RankedList,
}

impl<'g> DateContext<'g> {
    pub fn new(graph: &'g TemporalGraph, t: Day, horizon: Day) -> Result<Self> {
        let snapshot = graph.snapshot(t)?;
        let truth = TrueFutureRanking::build(graph, t, horizon)?;
        let past = metrics::past_ranking(&snapshot)?;
        Ok(DateContext {
            snapshot,
            truth,
            past,
        })
    }

    pub fn t(&self) -> Day {
        self.snapshot.t()
    }

    /// Scores with `spec` (seeing only the snapshot) and reports every `n`.
    pub fn evaluate(&self, spec: PredictorSpec, n_values: &[usize]) -> Result<Vec<MetricReport>> {
        spec.validate()?;
        let scores = spec.score(&self.snapshot)?;
        let predicted = rank(&scores);
        n_values
            .iter()
            .map(|&n| metrics::evaluate(&scores, &predicted, &self.truth, &self.past, n))
            .collect()
    }
}

pub fn evaluate_cell(
    graph: &TemporalGraph,
    spec: PredictorSpec,
    t: Day,
    horizon: Day,
    n: usize,
) -> Result<MetricReport> {
    let ctx = DateContext::new(graph, t, horizon)?;
    Ok(ctx.evaluate(spec, &[n])?.remove(0))
}

/// Parameterised predictor family swept over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Grid over the decay rate γ.
    Tbp,
    /// Grid over λ with a fixed history window.
    Pbp { window: Day },
}

impl Family {
    pub fn spec(&self, param: f64) -> PredictorSpec {
        match *self {
            Family::Tbp => PredictorSpec::Tbp { gamma: param },
            Family::Pbp { window } => PredictorSpec::Pbp {
                lambda: param,
                window,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Tbp => "tbp",
            Family::Pbp { .. } => "pbp",
        }
    }

    pub fn param_name(&self) -> &'static str {
        match self {
            Family::Tbp => "gamma",
            Family::Pbp { .. } => "lambda",
        }
    }
}

/// Metrics for one benchmark size averaged over test dates. Novelty is
/// averaged only over dates that had new entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateReport {
    pub n: usize,
    pub auc: f64,
    pub precision: f64,
    pub novelty: Option<f64>,
    pub dates: usize,
    pub novelty_dates: usize,
}

impl AggregateReport {
    pub fn novelty_excluded(&self) -> usize {
        self.dates - self.novelty_dates
    }

    /// Averages `reports`, which must all share the same `n`.
    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Option<Self> {
        let mut count = 0usize;
        let (mut auc, mut precision, mut novelty, mut novelty_dates) = (0.0, 0.0, 0.0, 0usize);
        let mut n = 0;
        for r in reports {
            n = r.n;
            count += 1;
            auc += r.auc;
            precision += r.precision;
            if let Some(q) = r.novelty {
                novelty += q;
                novelty_dates += 1;
            }
        }
        (count > 0).then(|| AggregateReport {
            n,
            auc: auc / count as f64,
            precision: precision / count as f64,
            novelty: (novelty_dates > 0).then(|| novelty / novelty_dates as f64),
            dates: count,
            novelty_dates,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    /// One aggregate per entry of `n_values`.
    pub reports: Vec<AggregateReport>,
    /// `per_date[d][k]`: date `d`, `n_values[k]`.
    pub per_date: Vec<Vec<MetricReport>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestParam {
    pub n: usize,
    pub param: f64,
    pub report: AggregateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub family: Family,
    pub horizon: Day,
    pub dates: Vec<Day>,
    pub n_values: Vec<usize>,
    pub points: Vec<SweepPoint>,
    /// Highest mean precision per `n`; ties go to the smaller parameter.
    pub best: Vec<BestParam>,
}

impl SweepResult {
    pub fn best_for(&self, n: usize) -> Option<&BestParam> {
        self.best.iter().find(|b| b.n == n)
    }
}

pub fn sweep(
    graph: &TemporalGraph,
    family: Family,
    grid: &[f64],
    dates: &[Day],
    horizon: Day,
    n_values: &[usize],
) -> Result<SweepResult> {
    if grid.is_empty() || dates.is_empty() || n_values.is_empty() {
        return Err(Error::param(
            "sweep needs a nonempty grid, date list and n list",
        ));
    }
    let contexts = dates
        .par_iter()
        .map(|&t| DateContext::new(graph, t, horizon))
        .collect::<Result<Vec<_>>>()?;

    let nd = dates.len();
    let cells = (0..grid.len() * nd)
        .into_par_iter()
        .map(|k| contexts[k % nd].evaluate(family.spec(grid[k / nd]), n_values))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = cells.into_iter();
    let points: Vec<SweepPoint> = grid
        .iter()
        .map(|&param| {
            let per_date: Vec<Vec<MetricReport>> = cells.by_ref().take(nd).collect();
            let reports = (0..n_values.len())
                .map(|k| {
                    AggregateReport::from_reports(per_date.iter().map(|row| &row[k]))
                        .expect("at least one date")
                })
                .collect();
            SweepPoint {
                param,
                reports,
                per_date,
            }
        })
        .collect();

    let best = (0..n_values.len())
        .map(|k| {
            let mut best: Option<(f64, AggregateReport)> = None;
            for p in &points {
                let r = p.reports[k];
                best = match best {
                    Some((bp, br))
                        if br.precision > r.precision
                            || (br.precision == r.precision && bp <= p.param) =>
                    {
                        Some((bp, br))
                    }
                    _ => Some((p.param, r)),
                };
            }
            let (param, report) = best.expect("nonempty grid");
            BestParam {
                n: n_values[k],
                param,
                report,
            }
        })
        .collect();

    Ok(SweepResult {
        family,
        horizon,
        dates: dates.to_vec(),
        n_values: n_values.to_vec(),
        points,
        best,
    })
}

/// Test dates for one future-window length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    pub horizon: Day,
    pub dates: Vec<Day>,
}

/// Samples dates separately for every window length, all from `config.seed`.
pub fn plan_windows(
    graph: &TemporalGraph,
    horizons: &[Day],
    config: &ExperimentConfig,
) -> Result<Vec<WindowPlan>> {
    horizons
        .iter()
        .map(|&h| {
            Ok(WindowPlan {
                horizon: h,
                dates: sample_test_dates(
                    graph,
                    config.num_test_dates,
                    config.min_history,
                    h,
                    config.seed,
                )?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRow {
    pub horizon: Day,
    pub family: Family,
    pub best_param: f64,
    pub report: AggregateReport,
}

/// Best-parameter TBP and PBP (history window = future window) results for
/// each window length, in plan order, TBP row first.
pub fn sweep_tf(
    graph: &TemporalGraph,
    plans: &[WindowPlan],
    gamma_grid: &[f64],
    lambda_grid: &[f64],
    n: usize,
) -> Result<Vec<WindowRow>> {
    let mut rows = Vec::with_capacity(plans.len() * 2);
    for plan in plans {
        for (family, grid) in [
            (Family::Tbp, gamma_grid),
            (
                Family::Pbp {
                    window: plan.horizon,
                },
                lambda_grid,
            ),
        ] {
            let result = sweep(graph, family, grid, &plan.dates, plan.horizon, &[n])?;
            let best = result.best[0];
            rows.push(WindowRow {
                horizon: plan.horizon,
                family,
                best_param: best.param,
                report: best.report,
            });
        }
    }
    Ok(rows)
}

/// `(T_F, γ*)` pairs from [`sweep_tf`] output.
pub fn gamma_star_series(rows: &[WindowRow]) -> Vec<(Day, f64)> {
    rows.iter()
        .filter(|r| r.family == Family::Tbp)
        .map(|r| (r.horizon, r.best_param))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::TemporalEdge;

    fn line_graph(days: Day) -> TemporalGraph {
        TemporalGraph::from_edges(
            (0..=days).map(|d| TemporalEdge::new(d as u32, (d % 3) as u32, d)),
        )
        .unwrap()
    }

    #[test]
    fn exact_eligible_range() {
        // days 0..=49, min_history 30, horizon 10 -> eligible 30..=39
        let g = line_graph(49);
        let dates = sample_test_dates(&g, 10, 30, 10, 5).unwrap();
        assert_eq!(dates, (30..40).collect::<Vec<_>>());
        assert!(sample_test_dates(&g, 11, 30, 10, 5).is_err());
    }

    #[test]
    fn same_seed_same_dates() {
        let g = line_graph(400);
        let a = sample_test_dates(&g, 10, 100, 30, 42).unwrap();
        assert_eq!(a, sample_test_dates(&g, 10, 100, 30, 42).unwrap());
        assert_ne!(a, sample_test_dates(&g, 10, 100, 30, 43).unwrap());
        assert!(a.iter().all(|&t| (100..=370).contains(&t)));
    }

    #[test]
    fn unit_grid_matches_literals() {
        let g = unit_grid(100);
        assert_eq!(g.len(), 101);
        assert_eq!(g[6], 0.06);
        assert_eq!(g[98], 0.98);
        assert_eq!(g[100], 1.0);
    }

    #[test]
    fn aggregate_skips_undefined_novelty() {
        let mk = |q: Option<f64>| MetricReport {
            n: 2,
            auc: 0.5,
            precision: 0.5,
            novelty: q,
            hits: 1,
            new_entries: q.map_or(0, |_| 1),
            caught: 0,
        };
        let reports = [mk(Some(1.0)), mk(None), mk(Some(0.0))];
        let agg = AggregateReport::from_reports(&reports).unwrap();
        assert_eq!(agg.novelty, Some(0.5));
        assert_eq!(agg.novelty_dates, 2);
        assert_eq!(agg.novelty_excluded(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let c = ExperimentConfig {
            lambda_grid: vec![1.5],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.n_values.clear();
        assert!(c.validate().is_err());
    }
}

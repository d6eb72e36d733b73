//! Synthetic growth networks with preferential attachment, object fitness and
//! exponential relevance decay, plus brute-force reference implementations
//! of the scores and AUC for cross-checking the indexed versions.
//!
//! On day `d` an alive object `α` attracts each of the day's links with
//! probability proportional to `(k_α(d) + 1) · fitness_α · exp(-θ·(d - birth_α))`,
//! where `k_α(d)` is its degree at the start of the day. Birth days are spread
//! evenly over the period so that new objects keep arriving.
//!
//! Optional [`Bursts`] multiply that weight by a transient spike. Pure aging
//! ranks future gains the same way for every window length, so the best
//! decay rate only shrinks with longer windows once short-lived spikes sit on
//! top of the slow trend.

use std::collections::{BTreeMap, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;

use crate::error::{Error, Result};
use crate::ids::{Day, ObjectId, TemporalEdge};
use crate::metrics::TrueFutureRanking;
use crate::predictors::{PredictorSpec, ScoreTable};

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthModel {
    pub num_users: usize,
    pub num_objects: usize,
    pub links_per_day: usize,
    pub total_days: usize,
    /// Relevance decay rate per day.
    pub theta: f64,
    pub fitness: Vec<f64>,
    pub bursts: Option<Bursts>,
    pub seed: u64,
}

/// Short-lived attention spikes: each alive object starts a burst on a given
/// day with probability `rate`; a burst multiplies relevance by
/// `1 + amplitude · exp(-decay · days_since_burst_start)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bursts {
    pub rate: f64,
    pub amplitude: f64,
    pub decay: f64,
}

impl GrowthModel {
    /// Model with unit fitness for every object.
    pub fn new(
        num_users: usize,
        num_objects: usize,
        links_per_day: usize,
        total_days: usize,
        theta: f64,
        seed: u64,
    ) -> Self {
        GrowthModel {
            num_users,
            num_objects,
            links_per_day,
            total_days,
            theta,
            fitness: vec![1.0; num_objects],
            bursts: None,
            seed,
        }
    }

    /// Replaces fitness with log-normal draws (`μ = 0`, scale `sigma`),
    /// seeded from the model seed.
    pub fn with_lognormal_fitness(mut self, sigma: f64) -> Result<Self> {
        let dist = LogNormal::new(0.0, sigma)
            .map_err(|e| Error::param(format!("fitness sigma {sigma}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        self.fitness = (0..self.num_objects)
            .map(|_| dist.sample(&mut rng))
            .collect();
        Ok(self)
    }

    pub fn with_bursts(mut self, bursts: Bursts) -> Self {
        self.bursts = Some(bursts);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bursts {
            let ok = (0.0..=1.0).contains(&b.rate)
                && b.amplitude >= 0.0
                && b.amplitude.is_finite()
                && b.decay >= 0.0
                && b.decay.is_finite();
            if !ok {
                return Err(Error::param(format!("invalid burst parameters {b:?}")));
            }
        }
        if self.num_users == 0
            || self.num_objects == 0
            || self.links_per_day == 0
            || self.total_days == 0
        {
            return Err(Error::param("growth model counts must all be positive"));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::param(format!(
                "theta {} must be finite and >= 0",
                self.theta
            )));
        }
        if self.fitness.len() != self.num_objects {
            return Err(Error::param("fitness must have one entry per object"));
        }
        if self.fitness.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::param("fitness values must be positive"));
        }
        if self.total_days > Day::MAX as usize {
            return Err(Error::param("total_days too large"));
        }
        Ok(())
    }

    pub fn birth_day(&self, object: ObjectId) -> Day {
        (object.index() * self.total_days / self.num_objects) as Day
    }

    fn log_burst(&self, start: Option<Day>, day: Day) -> f64 {
        match (self.bursts, start) {
            (Some(b), Some(s)) => (1.0 + b.amplitude * (-b.decay * (day - s) as f64).exp()).ln(),
            _ => 0.0,
        }
    }

    /// Generates the edge list in non-decreasing day order.
    pub fn generate(&self) -> Result<Vec<TemporalEdge>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let births: Vec<Day> = (0..self.num_objects as u32)
            .map(|o| self.birth_day(ObjectId(o)))
            .collect();
        let log_fitness: Vec<f64> = self.fitness.iter().map(|f| f.ln()).collect();
        let mut degree = vec![0usize; self.num_objects];
        let mut linked: Vec<HashSet<u32>> = vec![HashSet::new(); self.num_objects];
        let mut edges = Vec::with_capacity(self.links_per_day * self.total_days);
        let mut burst_start: Vec<Option<Day>> = vec![None; self.num_objects];

        for day in 0..self.total_days as Day {
            let alive = births.partition_point(|&b| b <= day);
            if let Some(b) = self.bursts {
                for start in burst_start.iter_mut().take(alive) {
                    if rng.gen::<f64>() < b.rate {
                        *start = Some(day);
                    }
                }
            }
            let log_w: Vec<f64> = (0..alive)
                .map(|o| {
                    if degree[o] >= self.num_users {
                        f64::NEG_INFINITY
                    } else {
                        ((degree[o] + 1) as f64).ln() + log_fitness[o]
                            - self.theta * (day - births[o]) as f64
                            + self.log_burst(burst_start[o], day)
                    }
                })
                .collect();
            let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return Err(Error::param(format!(
                    "every alive object is saturated on day {day}"
                )));
            }
            let mut weights: Vec<f64> = log_w.iter().map(|&w| (w - top).exp()).collect();
            let mut picker = WeightedIndex::new(&weights).expect("max weight is 1");

            let mut gained = vec![0usize; alive];
            for _ in 0..self.links_per_day {
                let object = loop {
                    let o = picker.sample(&mut rng);
                    if linked[o].len() < self.num_users {
                        break o;
                    }
                    weights[o] = 0.0;
                    picker = WeightedIndex::new(&weights).map_err(|_| {
                        Error::param(format!("every alive object is saturated on day {day}"))
                    })?;
                };
                let user = loop {
                    let u = rng.gen_range(0..self.num_users as u32);
                    if linked[object].insert(u) {
                        break u;
                    }
                };
                gained[object] += 1;
                edges.push(TemporalEdge::new(user, object as u32, day));
            }
            for (o, g) in gained.into_iter().enumerate() {
                degree[o] += g;
            }
        }
        Ok(edges)
    }
}

/// Literal double loop over benchmark × non-benchmark pairs.
pub fn brute_force_auc(scores: &ScoreTable, truth: &TrueFutureRanking, n: usize) -> Result<f64> {
    if scores.objects() != truth.objects() {
        return Err(Error::DomainMismatch);
    }
    if n == 0 || n >= truth.len() {
        return Err(Error::param(format!(
            "n = {n} invalid for {} candidates",
            truth.len()
        )));
    }
    let top: HashSet<ObjectId> = truth.ranking().top(n).iter().copied().collect();
    let mut benchmark = Vec::new();
    let mut rest = Vec::new();
    for (o, s) in scores.iter() {
        if top.contains(&o) {
            benchmark.push(s);
        } else {
            rest.push(s);
        }
    }
    let mut total = 0.0;
    for &a in &benchmark {
        for &b in &rest {
            total += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(total / (benchmark.len() * rest.len()) as f64)
}

/// Scores computed by scanning the raw edge list once, with no graph index.
pub fn brute_force_scores(
    edges: &[TemporalEdge],
    t: Day,
    spec: PredictorSpec,
) -> Result<ScoreTable> {
    spec.validate()?;
    let day_min = edges
        .iter()
        .map(|e| e.day)
        .min()
        .ok_or(Error::EmptyDataset)?;
    let cut = match spec {
        PredictorSpec::Recent { window } | PredictorSpec::Pbp { window, .. } => {
            if t - window < day_min {
                return Err(Error::param("history window starts before the first day"));
            }
            t - window
        }
        _ => t,
    };

    // per object: (k(t), k(cut), aged sum)
    let mut acc: BTreeMap<ObjectId, (u64, u64, f64)> = BTreeMap::new();
    for e in edges.iter().filter(|e| e.day <= t) {
        let entry = acc.entry(e.object).or_insert((0, 0, 0.0));
        entry.0 += 1;
        if e.day <= cut {
            entry.1 += 1;
        }
        if let PredictorSpec::Tbp { gamma } = spec {
            entry.2 += (gamma * (e.day - t) as f64).exp();
        }
    }

    let (objects, scores): (Vec<ObjectId>, Vec<f64>) = acc
        .into_iter()
        .map(|(o, (now, before, aged))| {
            let s = match spec {
                PredictorSpec::Cumulative => now as f64,
                PredictorSpec::Recent { .. } => (now - before) as f64,
                PredictorSpec::Pbp { lambda, .. } => now as f64 - lambda * before as f64,
                PredictorSpec::Tbp { .. } => aged,
            };
            (o, s)
        })
        .unzip();
    ScoreTable::new(t, spec, objects, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_day_single_link() {
        let edges = GrowthModel::new(3, 2, 1, 1, 0.0, 1).generate().unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].day, 0);
    }

    #[test]
    fn deterministic_and_sorted() {
        let m = GrowthModel::new(200, 50, 5, 60, 0.05, 9);
        let a = m.generate().unwrap();
        assert_eq!(a, m.generate().unwrap());
        assert!(a.windows(2).all(|w| w[0].day <= w[1].day));
        let pairs: HashSet<_> = a.iter().map(|e| (e.user, e.object)).collect();
        assert_eq!(pairs.len(), a.len());
        assert!(a.iter().all(|e| m.birth_day(e.object) <= e.day));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(GrowthModel::new(0, 5, 1, 1, 0.0, 0).generate().is_err());
        assert!(GrowthModel::new(5, 5, 1, 1, -1.0, 0).generate().is_err());
        // 1 user can give each of the 2 objects only one link
        assert!(GrowthModel::new(1, 2, 3, 1, 0.0, 0).generate().is_err());
    }

    #[test]
    fn pure_attachment_favours_early_objects() {
        // theta = 0, unit fitness: the final top-degree object should usually
        // be one of the first 10% born
        let runs = 100;
        let mut early = 0;
        for seed in 0..runs {
            let m = GrowthModel::new(500, 100, 10, 100, 0.0, seed);
            let edges = m.generate().unwrap();
            let mut deg = vec![0u32; 100];
            for e in &edges {
                deg[e.object.index()] += 1;
            }
            let best = (0..100)
                .max_by_key(|&o| (deg[o], std::cmp::Reverse(o)))
                .unwrap();
            if best < 10 {
                early += 1;
            }
        }
        assert!(
            early as f64 / runs as f64 > 0.5,
            "early top objects: {early}/{runs}"
        );
    }

    #[test]
    fn fast_decay_targets_newborns() {
        let m = GrowthModel::new(2000, 400, 20, 200, 50.0, 3);
        let edges = m.generate().unwrap();
        let mean_age = edges
            .iter()
            .map(|e| (e.day - m.birth_day(e.object)) as f64)
            .sum::<f64>()
            / edges.len() as f64;
        assert!(mean_age < 2.0, "mean age {mean_age}");
    }

    #[test]
    fn bursts_concentrate_links() {
        let base = GrowthModel::new(5000, 200, 50, 100, 0.1, 8);
        let bursty = base.clone().with_bursts(Bursts {
            rate: 0.01,
            amplitude: 200.0,
            decay: 0.5,
        });
        // share of each day's links taken by that day's busiest object
        let peak_share = |edges: &[TemporalEdge]| {
            let mut total = 0.0;
            for day in 0..100 {
                let mut counts = BTreeMap::new();
                for e in edges.iter().filter(|e| e.day == day) {
                    *counts.entry(e.object).or_insert(0usize) += 1;
                }
                total += *counts.values().max().unwrap() as f64 / 50.0;
            }
            total / 100.0
        };
        let plain = peak_share(&base.generate().unwrap());
        let spiky = peak_share(&bursty.generate().unwrap());
        assert!(spiky > plain + 0.1, "plain {plain}, bursty {spiky}");
        assert!(base
            .clone()
            .with_bursts(Bursts {
                rate: 2.0,
                amplitude: 1.0,
                decay: 1.0
            })
            .generate()
            .is_err());
    }

    #[test]
    fn lognormal_fitness_is_seeded() {
        let a = GrowthModel::new(10, 20, 1, 5, 0.1, 4)
            .with_lognormal_fitness(1.0)
            .unwrap();
        let b = GrowthModel::new(10, 20, 1, 5, 0.1, 4)
            .with_lognormal_fitness(1.0)
            .unwrap();
        assert_eq!(a.fitness, b.fitness);
        assert!(a.fitness.iter().all(|&f| f > 0.0));
    }

    #[test]
    fn brute_scores_zero_gamma_integral() {
        let edges = GrowthModel::new(50, 10, 3, 30, 0.1, 2).generate().unwrap();
        let s = brute_force_scores(&edges, 20, PredictorSpec::Tbp { gamma: 0.0 }).unwrap();
        let c = brute_force_scores(&edges, 20, PredictorSpec::Cumulative).unwrap();
        assert_eq!(s.scores(), c.scores());
        assert!(s.scores().iter().all(|x| x.fract() == 0.0));
    }
}

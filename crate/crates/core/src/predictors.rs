//! Prediction scores for every candidate object at a test day.
//!
//! * cumulative: `s = k(t)`
//! * recent: `s = k(t) - k(t - T_P)`
//! * pbp: `s = k(t) - λ·k(t - T_P)`, a blend of the two above
//! * tbp: `s = Σ_links exp(γ·(day - t))`, every link aged exponentially
//!
//! All scorers work on a [`Snapshot`], so nothing after `t` is visible.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::ids::{Day, ObjectId};
use crate::tempgraph::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictorSpec {
    Cumulative,
    Recent { window: Day },
    Pbp { lambda: f64, window: Day },
    Tbp { gamma: f64 },
}

impl PredictorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PredictorSpec::Cumulative => Ok(()),
            PredictorSpec::Recent { window } => check_window(window),
            PredictorSpec::Pbp { lambda, window } => {
                check_window(window)?;
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(Error::param(format!("lambda {lambda} not in [0, 1]")));
                }
                Ok(())
            }
            PredictorSpec::Tbp { gamma } => {
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(Error::param(format!(
                        "gamma {gamma} must be finite and >= 0"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PredictorSpec::Cumulative => "cumulative",
            PredictorSpec::Recent { .. } => "recent",
            PredictorSpec::Pbp { .. } => "pbp",
            PredictorSpec::Tbp { .. } => "tbp",
        }
    }

    /// `key=value` pairs joined by `;`, empty for the cumulative predictor.
    pub fn params(&self) -> String {
        match *self {
            PredictorSpec::Cumulative => String::new(),
            PredictorSpec::Recent { window } => format!("tp={window}"),
            PredictorSpec::Pbp { lambda, window } => format!("lambda={lambda};tp={window}"),
            PredictorSpec::Tbp { gamma } => format!("gamma={gamma}"),
        }
    }

    pub fn score(&self, snap: &Snapshot<'_>) -> Result<ScoreTable> {
        match *self {
            PredictorSpec::Cumulative => score_cumulative(snap),
            PredictorSpec::Recent { window } => score_recent(snap, window),
            PredictorSpec::Pbp { lambda, window } => score_pbp(snap, window, lambda),
            PredictorSpec::Tbp { gamma } => score_tbp_grouped(snap, gamma),
        }
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params();
        if params.is_empty() {
            f.write_str(self.kind())
        } else {
            write!(f, "{}({})", self.kind(), params)
        }
    }
}

fn check_window(window: Day) -> Result<()> {
    if window < 1 {
        return Err(Error::param(format!(
            "history window {window} must be >= 1 day"
        )));
    }
    Ok(())
}

/// Scores over the candidate set of one snapshot, ascending by object id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub t: Day,
    pub spec: PredictorSpec,
    objects: Vec<ObjectId>,
    scores: Vec<f64>,
}

impl ScoreTable {
    /// `objects` must be strictly ascending and aligned with `scores`.
    pub fn new(
        t: Day,
        spec: PredictorSpec,
        objects: Vec<ObjectId>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        if objects.len() != scores.len() {
            return Err(Error::param("objects and scores differ in length"));
        }
        if objects.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "score table objects must be strictly ascending",
            ));
        }
        if let Some(bad) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::param(format!(
                "score {bad} is not finite and non-negative"
            )));
        }
        Ok(ScoreTable {
            t,
            spec,
            objects,
            scores,
        })
    }

    pub fn objects(&self) -> &[ObjectId] {
        &self.objects
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, object: ObjectId) -> Option<f64> {
        self.objects
            .binary_search(&object)
            .ok()
            .map(|i| self.scores[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, f64)> + '_ {
        self.objects
            .iter()
            .copied()
            .zip(self.scores.iter().copied())
    }
}

fn table_from(
    snap: &Snapshot<'_>,
    spec: PredictorSpec,
    mut f: impl FnMut(ObjectId) -> Result<f64>,
) -> Result<ScoreTable> {
    let objects = snap.candidates();
    let scores = objects.iter().map(|&o| f(o)).collect::<Result<Vec<_>>>()?;
    Ok(ScoreTable {
        t: snap.t(),
        spec,
        objects,
        scores,
    })
}

fn history_cut(snap: &Snapshot<'_>, window: Day) -> Result<Day> {
    check_window(window)?;
    let cut = snap.t() - window;
    if cut < snap.day_min() {
        return Err(Error::param(format!(
            "history window ({cut}, {}] starts before the first day {}",
            snap.t(),
            snap.day_min()
        )));
    }
    Ok(cut)
}

pub fn score_cumulative(snap: &Snapshot<'_>) -> Result<ScoreTable> {
    table_from(snap, PredictorSpec::Cumulative, |o| {
        Ok(snap.degree(o)? as f64)
    })
}

/// Links gained in the trailing window `(t - window, t]`.
pub fn score_recent(snap: &Snapshot<'_>, window: Day) -> Result<ScoreTable> {
    let cut = history_cut(snap, window)?;
    table_from(snap, PredictorSpec::Recent { window }, |o| {
        Ok((snap.degree(o)? - snap.degree_at(o, cut)?) as f64)
    })
}

pub fn score_pbp(snap: &Snapshot<'_>, window: Day, lambda: f64) -> Result<ScoreTable> {
    let spec = PredictorSpec::Pbp { lambda, window };
    spec.validate()?;
    let cut = history_cut(snap, window)?;
    table_from(snap, spec, |o| {
        let now = snap.degree(o)? as f64;
        let before = snap.degree_at(o, cut)? as f64;
        Ok(now - lambda * before)
    })
}

/// Direct summation, one exponential per link, oldest link first.
pub fn score_tbp(snap: &Snapshot<'_>, gamma: f64) -> Result<ScoreTable> {
    let spec = PredictorSpec::Tbp { gamma };
    spec.validate()?;
    let t = snap.t();
    table_from(snap, spec, |o| {
        Ok(snap
            .link_days(o)?
            .iter()
            .map(|&d| (gamma * (d - t) as f64).exp())
            .sum())
    })
}

/// Same score as [`score_tbp`], grouping links by day and reading each
/// day's weight from a table computed once per call.
pub fn score_tbp_grouped(snap: &Snapshot<'_>, gamma: f64) -> Result<ScoreTable> {
    let spec = PredictorSpec::Tbp { gamma };
    spec.validate()?;
    let t = snap.t();
    let span = (t - snap.day_min()) as usize;
    let decay: Vec<f64> = (0..=span)
        .map(|age| (gamma * -(age as f64)).exp())
        .collect();
    table_from(snap, spec, |o| {
        let days = snap.link_days(o)?;
        let mut sum = 0.0;
        let mut i = 0;
        while i < days.len() {
            let d = days[i];
            let run = days[i..].partition_point(|&x| x == d);
            sum += run as f64 * decay[(t - d) as usize];
            i += run;
        }
        Ok(sum)
    })
}

/// Objects ordered by score descending, ties by ascending object id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    order: Vec<ObjectId>,
    // position by object index; u32::MAX for objects not in the list
    position: Vec<u32>,
}

impl RankedList {
    /// Ranks `objects` by `scores` (aligned slices).
    pub fn from_scores(objects: &[ObjectId], scores: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..objects.len()).collect();
        idx.sort_unstable_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(Ordering::Equal)
                .then(objects[a].cmp(&objects[b]))
        });
        Self::from_order(idx.into_iter().map(|i| objects[i]).collect())
    }

    /// Wraps an explicit order; objects must be distinct.
    pub fn from_order(order: Vec<ObjectId>) -> Self {
        let size = order.iter().map(|o| o.index() + 1).max().unwrap_or(0);
        let mut position = vec![u32::MAX; size];
        for (i, o) in order.iter().enumerate() {
            debug_assert_eq!(position[o.index()], u32::MAX, "duplicate object in ranking");
            position[o.index()] = i as u32;
        }
        RankedList { order, position }
    }

    pub fn order(&self) -> &[ObjectId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn top(&self, n: usize) -> &[ObjectId] {
        &self.order[..n.min(self.order.len())]
    }

    /// 1-based rank.
    pub fn rank_of(&self, object: ObjectId) -> Option<usize> {
        match self.position.get(object.index()) {
            Some(&p) if p != u32::MAX => Some(p as usize + 1),
            _ => None,
        }
    }

    pub fn contains_in_top(&self, object: ObjectId, n: usize) -> bool {
        self.rank_of(object).is_some_and(|r| r <= n)
    }
}

pub fn rank(table: &ScoreTable) -> RankedList {
    RankedList::from_scores(&table.objects, &table.scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::TemporalEdge;
    use crate::tempgraph::TemporalGraph;

    fn graph(edges: &[(u32, u32, Day)]) -> TemporalGraph {
        TemporalGraph::from_edges(edges.iter().map(|&(u, o, d)| TemporalEdge::new(u, o, d)))
            .unwrap()
    }

    // object 0: days {3, 7, 20}; object 1: {0, 1, 2, 3, 4}; object 2: {19, 17}
    fn fixture() -> TemporalGraph {
        graph(&[
            (0, 0, 3),
            (1, 0, 7),
            (2, 0, 20),
            (0, 1, 0),
            (1, 1, 1),
            (2, 1, 2),
            (3, 1, 3),
            (4, 1, 4),
            (5, 2, 19),
            (6, 2, 17),
        ])
    }

    #[test]
    fn cumulative_is_degree() {
        let g = fixture();
        let s = score_cumulative(&g.snapshot(20).unwrap()).unwrap();
        assert_eq!(s.scores(), &[3.0, 5.0, 2.0]);
        let s = score_cumulative(&g.snapshot(4).unwrap()).unwrap();
        assert_eq!(s.objects(), &[ObjectId(0), ObjectId(1)]);
        assert_eq!(s.scores(), &[1.0, 5.0]);
    }

    #[test]
    fn recent_window() {
        let g = fixture();
        let snap = g.snapshot(20).unwrap();
        let s = score_recent(&snap, 13).unwrap();
        assert_eq!(s.get(ObjectId(0)), Some(1.0));
        assert_eq!(s.get(ObjectId(1)), Some(0.0));
        assert_eq!(s.get(ObjectId(2)), Some(2.0));
        // objects 0 and 2 have nothing on day 0, so a window back to day 0
        // spans their whole history
        let full = score_recent(&snap, 20).unwrap();
        let cumulative = score_cumulative(&snap).unwrap();
        for o in [ObjectId(0), ObjectId(2)] {
            assert_eq!(full.get(o), cumulative.get(o));
        }
        assert!(score_recent(&snap, 21).is_err());
    }

    #[test]
    fn pbp_blend() {
        // k(20) = 3 for object 0, k(7) = 2 -> with λ = 0.5 over T_P = 13: 3 - 1 = 2
        let g = fixture();
        let snap = g.snapshot(20).unwrap();
        let s = score_pbp(&snap, 13, 0.5).unwrap();
        assert_eq!(s.get(ObjectId(0)), Some(2.0));
        assert!(score_pbp(&snap, 13, 1.5).is_err());
        assert!(score_pbp(&snap, 13, -0.1).is_err());
    }

    #[test]
    fn pbp_ten_and_six() {
        // object 0 has 10 links by t = 28 and 6 by t - T_P = 20
        let mut edges = Vec::new();
        for u in 0..6 {
            edges.push((u, 0, 10 + u as Day));
        }
        for u in 6..10 {
            edges.push((u, 0, 25 + u as Day - 6));
        }
        edges.push((99, 1, 0));
        let g = graph(&edges);
        let s = score_pbp(&g.snapshot(28).unwrap(), 8, 0.5).unwrap();
        assert_eq!(s.get(ObjectId(0)), Some(7.0));
    }

    #[test]
    fn tbp_values() {
        let g = graph(&[(0, 0, 9), (1, 0, 7), (2, 1, 10), (3, 2, 0)]);
        let snap = g.snapshot(10).unwrap();
        let s = score_tbp(&snap, 0.5).unwrap();
        let expected = (-0.5f64).exp() + (-1.5f64).exp();
        assert!((s.get(ObjectId(0)).unwrap() - 0.829_660_82).abs() < 1e-8);
        assert!((s.get(ObjectId(0)).unwrap() - expected).abs() < 1e-15);
        assert_eq!(s.get(ObjectId(1)), Some(1.0));
        assert!(score_tbp(&snap, -0.1).is_err());
    }

    #[test]
    fn tbp_zero_gamma_is_degree() {
        let g = fixture();
        for t in [3, 7, 19, 20] {
            let snap = g.snapshot(t).unwrap();
            let c = score_cumulative(&snap).unwrap();
            assert_eq!(score_tbp(&snap, 0.0).unwrap().scores(), c.scores());
            assert_eq!(score_tbp_grouped(&snap, 0.0).unwrap().scores(), c.scores());
        }
    }

    #[test]
    fn grouped_matches_direct() {
        let mut edges = Vec::new();
        for u in 0..50u32 {
            edges.push((u, u % 4, (u * 7 % 23) as Day));
        }
        let g = graph(&edges);
        let snap = g.snapshot(20).unwrap();
        for gamma in [0.01, 0.3, 2.0] {
            let a = score_tbp(&snap, gamma).unwrap();
            let b = score_tbp_grouped(&snap, gamma).unwrap();
            for (x, y) in a.scores().iter().zip(b.scores()) {
                assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn rank_ties_by_id() {
        let objects = [ObjectId(0), ObjectId(1), ObjectId(2)];
        let r = RankedList::from_scores(&objects, &[3.0, 1.0, 3.0]);
        assert_eq!(r.order(), &[ObjectId(0), ObjectId(2), ObjectId(1)]);
        assert_eq!(r.rank_of(ObjectId(2)), Some(2));
        assert_eq!(r.rank_of(ObjectId(7)), None);
        let flat = RankedList::from_scores(&objects, &[1.0, 1.0, 1.0]);
        assert_eq!(flat.order(), &objects);
    }

    #[test]
    fn spec_validation() {
        assert!(PredictorSpec::Recent { window: 0 }.validate().is_err());
        assert!(PredictorSpec::Tbp { gamma: f64::NAN }.validate().is_err());
        assert!(PredictorSpec::Pbp {
            lambda: 0.98,
            window: 30
        }
        .validate()
        .is_ok());
        assert_eq!(
            PredictorSpec::Tbp { gamma: 0.06 }.to_string(),
            "tbp(gamma=0.06)"
        );
    }
}

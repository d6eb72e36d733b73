//! Ranking evaluation against the realised future: AUC over the top-n
//! benchmark set, precision `P_n = D_n / n`, novelty `Q_n = C_n / E_n` and
//! the per-object rank shift `dr = r_f - r_p`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::ids::{Day, ObjectId};
use crate::predictors::{RankedList, ScoreTable};
use crate::tempgraph::{Snapshot, TemporalGraph};

/// Candidates at `t` ranked by their realised increase over `(t, t + horizon]`.
#[derive(Debug, Clone)]
pub struct TrueFutureRanking {
    pub t: Day,
    pub horizon: Day,
    objects: Vec<ObjectId>,
    increases: Vec<u32>,
    ranking: RankedList,
}

impl TrueFutureRanking {
    pub fn build(graph: &TemporalGraph, t: Day, horizon: Day) -> Result<Self> {
        let objects = graph.candidates(t)?;
        graph.window_end(t, horizon)?;
        let increases = objects
            .iter()
            .map(|&o| graph.popularity_increase(o, t, horizon))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_increases(t, horizon, objects, increases))
    }

    /// `objects` ascending, aligned with `increases`.
    pub fn from_increases(
        t: Day,
        horizon: Day,
        objects: Vec<ObjectId>,
        increases: Vec<u32>,
    ) -> Self {
        let as_f64: Vec<f64> = increases.iter().map(|&k| k as f64).collect();
        let ranking = RankedList::from_scores(&objects, &as_f64);
        TrueFutureRanking {
            t,
            horizon,
            objects,
            increases,
            ranking,
        }
    }

    pub fn objects(&self) -> &[ObjectId] {
        &self.objects
    }

    pub fn increases(&self) -> &[u32] {
        &self.increases
    }

    pub fn ranking(&self) -> &RankedList {
        &self.ranking
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

/// Candidates ranked by cumulative degree at the snapshot day; the "past"
/// ranking that new entries are measured against.
pub fn past_ranking(snap: &Snapshot<'_>) -> Result<RankedList> {
    let objects = snap.candidates();
    let degrees = objects
        .iter()
        .map(|&o| snap.degree(o).map(|k| k as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedList::from_scores(&objects, &degrees))
}

fn check_n(n: usize, len: usize, strict: bool) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if (strict && n >= len) || n > len {
        return Err(Error::param(format!(
            "n = {n} too large for {len} candidates"
        )));
    }
    Ok(())
}

/// Twice the Mann–Whitney U statistic of the benchmark scores, using
/// midranks for ties. Stays integral so the result is exact.
fn doubled_u(scores: &[f64], in_benchmark: &[bool]) -> u64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j; doubled midrank = i + 1 + j
        let midrank2 = (i + 1 + j) as u64;
        let members = idx[i..j].iter().filter(|&&k| in_benchmark[k]).count() as u64;
        rank_sum2 += members * midrank2;
        i = j;
    }
    let b = in_benchmark.iter().filter(|&&x| x).count() as u64;
    rank_sum2 - b * (b + 1)
}

/// AUC of `scores` at separating the top `n` of `truth` from the rest.
pub fn auc(scores: &ScoreTable, truth: &TrueFutureRanking, n: usize) -> Result<f64> {
    if scores.objects() != truth.objects() {
        return Err(Error::DomainMismatch);
    }
    let len = truth.len();
    check_n(n, len, true)?;
    let in_benchmark: Vec<bool> = truth
        .objects()
        .iter()
        .map(|&o| truth.ranking().contains_in_top(o, n))
        .collect();
    let u2 = doubled_u(scores.scores(), &in_benchmark);
    Ok(u2 as f64 / (2 * n as u64 * (len - n) as u64) as f64)
}

fn overlap(a: &[ObjectId], b: &[ObjectId]) -> usize {
    let set: HashSet<ObjectId> = a.iter().copied().collect();
    b.iter().filter(|o| set.contains(o)).count()
}

/// `D_n`: objects shared by the two top-n lists.
pub fn hits(predicted: &RankedList, truth: &TrueFutureRanking, n: usize) -> Result<usize> {
    check_n(n, truth.len(), false)?;
    if predicted.len() != truth.len() {
        return Err(Error::DomainMismatch);
    }
    Ok(overlap(predicted.top(n), truth.ranking().top(n)))
}

pub fn precision(predicted: &RankedList, truth: &TrueFutureRanking, n: usize) -> Result<f64> {
    Ok(hits(predicted, truth, n)? as f64 / n as f64)
}

/// New entries `E_n` (future top-n objects absent from the past top-n) and
/// how many of them the predictor's top-n caught (`C_n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Novelty {
    pub new_entries: usize,
    pub caught: usize,
}

impl Novelty {
    /// `None` when there were no new entries.
    pub fn value(&self) -> Option<f64> {
        (self.new_entries > 0).then(|| self.caught as f64 / self.new_entries as f64)
    }
}

pub fn novelty(
    predicted: &RankedList,
    truth: &TrueFutureRanking,
    past: &RankedList,
    n: usize,
) -> Result<Novelty> {
    check_n(n, truth.len(), false)?;
    if predicted.len() != truth.len() || past.len() != truth.len() {
        return Err(Error::DomainMismatch);
    }
    let fresh: Vec<ObjectId> = truth
        .ranking()
        .top(n)
        .iter()
        .copied()
        .filter(|&o| !past.contains_in_top(o, n))
        .collect();
    let caught = fresh
        .iter()
        .filter(|&&o| predicted.contains_in_top(o, n))
        .count();
    Ok(Novelty {
        new_entries: fresh.len(),
        caught,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankShift {
    pub object: ObjectId,
    /// Rank by cumulative degree at `t`.
    pub degree_rank: usize,
    /// True future rank minus predicted rank; negative means underestimated.
    pub dr: i64,
}

/// Rank shifts for the top `top` objects of the true future ranking.
pub fn rank_shift(
    predicted: &RankedList,
    truth: &TrueFutureRanking,
    past: &RankedList,
    top: usize,
) -> Result<Vec<RankShift>> {
    if top > truth.len() {
        return Err(Error::param(format!(
            "top = {top} exceeds {} candidates",
            truth.len()
        )));
    }
    truth
        .ranking()
        .top(top)
        .iter()
        .enumerate()
        .map(|(i, &object)| {
            let r_p = predicted.rank_of(object).ok_or(Error::DomainMismatch)?;
            let r_k = past.rank_of(object).ok_or(Error::DomainMismatch)?;
            Ok(RankShift {
                object,
                degree_rank: r_k,
                dr: (i + 1) as i64 - r_p as i64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub n: usize,
    pub auc: f64,
    pub precision: f64,
    pub novelty: Option<f64>,
    /// `D_n`
    pub hits: usize,
    /// `E_n`
    pub new_entries: usize,
    /// `C_n`
    pub caught: usize,
}

/// Every metric for one score table at one benchmark size.
pub fn evaluate(
    scores: &ScoreTable,
    predicted: &RankedList,
    truth: &TrueFutureRanking,
    past: &RankedList,
    n: usize,
) -> Result<MetricReport> {
    let auc = auc(scores, truth, n)?;
    let hits = hits(predicted, truth, n)?;
    let nov = novelty(predicted, truth, past, n)?;
    Ok(MetricReport {
        n,
        auc,
        precision: hits as f64 / n as f64,
        novelty: nov.value(),
        hits,
        new_entries: nov.new_entries,
        caught: nov.caught,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::PredictorSpec;

    fn ids(v: &[u32]) -> Vec<ObjectId> {
        v.iter().map(|&i| ObjectId(i)).collect()
    }

    fn table(scores: &[f64]) -> ScoreTable {
        let objects = ids(&(0..scores.len() as u32).collect::<Vec<_>>());
        ScoreTable::new(0, PredictorSpec::Cumulative, objects, scores.to_vec()).unwrap()
    }

    fn truth(increases: &[u32]) -> TrueFutureRanking {
        let objects = ids(&(0..increases.len() as u32).collect::<Vec<_>>());
        TrueFutureRanking::from_increases(0, 1, objects, increases.to_vec())
    }

    #[test]
    fn auc_pairwise_example() {
        // B = {0}, B' = {1, 2}; s = (3, 1, 3) -> (1 + 0.5) / 2
        let tr = truth(&[9, 1, 0]);
        assert_eq!(auc(&table(&[3.0, 1.0, 3.0]), &tr, 1).unwrap(), 0.75);
    }

    #[test]
    fn auc_all_equal_and_perfect() {
        let tr = truth(&[5, 4, 3, 2, 1]);
        assert_eq!(auc(&table(&[1.0; 5]), &tr, 2).unwrap(), 0.5);
        assert_eq!(
            auc(&table(&[5.0, 4.0, 3.0, 2.0, 1.0]), &tr, 2).unwrap(),
            1.0
        );
        assert_eq!(
            auc(&table(&[1.0, 2.0, 3.0, 4.0, 5.0]), &tr, 2).unwrap(),
            0.0
        );
        assert!(auc(&table(&[1.0; 5]), &tr, 5).is_err());
        assert!(auc(&table(&[1.0; 5]), &tr, 0).is_err());
    }

    #[test]
    fn auc_domain_mismatch() {
        let tr = truth(&[1, 2, 3]);
        assert!(matches!(
            auc(&table(&[1.0, 2.0]), &tr, 1),
            Err(Error::DomainMismatch)
        ));
    }

    #[test]
    fn precision_examples() {
        // truth top-2 {1, 2}; predicted top-2 {0, 1}
        let tr = truth(&[0, 5, 4, 1]);
        let pred = RankedList::from_order(ids(&[0, 1, 3, 2]));
        assert_eq!(precision(&pred, &tr, 2).unwrap(), 0.5);
        assert_eq!(precision(tr.ranking(), &tr, 2).unwrap(), 1.0);
        let disjoint = RankedList::from_order(ids(&[0, 3, 1, 2]));
        assert_eq!(precision(&disjoint, &tr, 2).unwrap(), 0.0);
        assert!(precision(&pred, &tr, 5).is_err());
    }

    #[test]
    fn novelty_examples() {
        // a=0 b=1 c=2 d=3; past top-2 {a,b}, true top-2 {b,c}, predicted top-2 {c,d}
        let tr = truth(&[0, 5, 4, 1]);
        let past = RankedList::from_order(ids(&[0, 1, 2, 3]));
        let pred = RankedList::from_order(ids(&[2, 3, 0, 1]));
        let nov = novelty(&pred, &tr, &past, 2).unwrap();
        assert_eq!(
            nov,
            Novelty {
                new_entries: 1,
                caught: 1
            }
        );
        assert_eq!(nov.value(), Some(1.0));

        let same = RankedList::from_order(ids(&[1, 2, 0, 3]));
        let none = novelty(&pred, &tr, &same, 2).unwrap();
        assert_eq!(none.new_entries, 0);
        assert_eq!(none.value(), None);

        assert_eq!(novelty(&past, &tr, &past, 2).unwrap().value(), Some(0.0));
    }

    #[test]
    fn rank_shift_signs() {
        // five objects; truth order 4,3,2,1,0; predicted 0..4; past 2,0,1,3,4
        let tr = truth(&[1, 2, 3, 4, 5]);
        let pred = RankedList::from_order(ids(&[0, 1, 2, 3, 4]));
        let past = RankedList::from_order(ids(&[2, 0, 1, 3, 4]));
        let shifts = rank_shift(&pred, &tr, &past, 5).unwrap();
        let got: Vec<(u32, usize, i64)> = shifts
            .iter()
            .map(|s| (s.object.0, s.degree_rank, s.dr))
            .collect();
        assert_eq!(
            got,
            vec![(4, 5, -4), (3, 4, -2), (2, 1, 0), (1, 3, 2), (0, 2, 4)]
        );
        assert_eq!(shifts.iter().map(|s| s.dr).sum::<i64>(), 0);
        let exact = rank_shift(tr.ranking(), &tr, &past, 3).unwrap();
        assert!(exact.iter().all(|s| s.dr == 0));
        assert!(rank_shift(&pred, &tr, &past, 6).is_err());
    }

    #[test]
    fn truth_ties_broken_by_id() {
        let tr = truth(&[2, 3, 3, 0]);
        assert_eq!(tr.ranking().order(), &ids(&[1, 2, 0, 3])[..]);
    }
}

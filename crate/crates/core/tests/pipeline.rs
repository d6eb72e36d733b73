//! End-to-end checks on small hand-computed graphs.

use trendcast_core::experiment::{
    evaluate_cell, sample_test_dates, sweep, sweep_tf, unit_grid, DateContext, Family, WindowPlan,
};
use trendcast_core::metrics::{self, past_ranking, TrueFutureRanking};
use trendcast_core::predictors::{rank, PredictorSpec};
use trendcast_core::synth::GrowthModel;
use trendcast_core::{ObjectId, TemporalEdge, TemporalGraph};

/// Six objects A..F (ids 0..5), every link by a fresh user.
///
/// | obj | links up to day 10 | links in (10, 15] |
/// |-----|--------------------|-------------------|
/// | A   | 1 2 3 4            | 12                |
/// | B   | 8 9 10             | 11 12 13          |
/// | C   | 2                  | 11 14 15          |
/// | D   | 5 6                | -                 |
/// | E   | 9                  | 11                |
/// | F   | 0 1 2 3 4 5        | 15                |
fn six_objects() -> TemporalGraph {
    let links: [&[i32]; 6] = [
        &[1, 2, 3, 4, 12],
        &[8, 9, 10, 11, 12, 13],
        &[2, 11, 14, 15],
        &[5, 6],
        &[9, 11],
        &[0, 1, 2, 3, 4, 5, 15],
    ];
    let mut user = 0;
    let mut edges = Vec::new();
    for (o, days) in links.iter().enumerate() {
        for &d in *days {
            edges.push(TemporalEdge::new(user, o as u32, d));
            user += 1;
        }
    }
    TemporalGraph::from_edges(edges).unwrap()
}

fn ids(v: &[u32]) -> Vec<ObjectId> {
    v.iter().copied().map(ObjectId).collect()
}

#[test]
fn hand_computed_pbp_cell() {
    let g = six_objects();
    let spec = PredictorSpec::Pbp {
        lambda: 0.5,
        window: 5,
    };
    let snap = g.snapshot(10).unwrap();

    // k(10) - 0.5 k(5): A 4-2, B 3-0, C 1-0.5, D 2-0.5, E 1-0, F 6-3
    let scores = spec.score(&snap).unwrap();
    assert_eq!(scores.scores(), &[2.0, 3.0, 0.5, 1.5, 1.0, 3.0]);
    assert_eq!(rank(&scores).order(), &ids(&[1, 5, 0, 3, 4, 2])[..]);

    let truth = TrueFutureRanking::build(&g, 10, 5).unwrap();
    assert_eq!(truth.increases(), &[1, 3, 3, 0, 1, 1]);
    assert_eq!(truth.ranking().order(), &ids(&[1, 2, 0, 4, 5, 3])[..]);
    assert_eq!(
        past_ranking(&snap).unwrap().order(),
        &ids(&[5, 0, 1, 3, 2, 4])[..]
    );

    let r = evaluate_cell(&g, spec, 10, 5, 2).unwrap();
    // top-2 truth {B, C}; B beats A, D, E and ties F; C beats nobody
    assert_eq!(r.auc, 3.5 / 8.0);
    assert_eq!(r.hits, 1);
    assert_eq!(r.precision, 0.5);
    assert_eq!((r.new_entries, r.caught), (2, 1));
    assert_eq!(r.novelty, Some(0.5));

    let ctx = DateContext::new(&g, 10, 5).unwrap();
    let predicted = rank(&scores);
    let shifts = metrics::rank_shift(&predicted, &ctx.truth, &ctx.past, 3).unwrap();
    let got: Vec<(u32, usize, i64)> = shifts
        .iter()
        .map(|s| (s.object.0, s.degree_rank, s.dr))
        .collect();
    assert_eq!(got, vec![(1, 3, 0), (2, 5, -4), (0, 2, 0)]);
}

#[test]
fn future_links_do_not_enter_scores() {
    let g = six_objects();
    let snap = g.snapshot(10).unwrap();
    for spec in [
        PredictorSpec::Cumulative,
        PredictorSpec::Tbp { gamma: 0.3 },
        PredictorSpec::Recent { window: 4 },
    ] {
        let s = spec.score(&snap).unwrap();
        assert_eq!(s.objects(), &ids(&[0, 1, 2, 3, 4, 5])[..]);
    }
    assert_eq!(snap.degree(ObjectId(5)).unwrap(), 6);
    assert!(snap.degree_at(ObjectId(5), 11).is_err());
}

fn synthetic(seed: u64) -> TemporalGraph {
    let model = GrowthModel::new(600, 120, 12, 300, 0.03, seed);
    TemporalGraph::from_edges(model.generate().unwrap()).unwrap()
}

#[test]
fn date_sampling_trace_is_frozen() {
    let g = synthetic(3);
    assert_eq!((g.day_min(), g.day_max()), (0, 299));
    let dates = sample_test_dates(&g, 8, 100, 30, 2024).unwrap();
    assert_eq!(dates, vec![127, 167, 214, 217, 222, 253, 259, 263]);
    assert_eq!(sample_test_dates(&g, 8, 100, 30, 2024).unwrap(), dates);
    assert_ne!(sample_test_dates(&g, 8, 100, 30, 2025).unwrap(), dates);
    assert!(sample_test_dates(&g, 171, 100, 30, 1).is_err());
    let all = sample_test_dates(&g, 170, 100, 30, 1).unwrap();
    assert_eq!(all, (100..=269).collect::<Vec<_>>());
}

#[test]
fn zero_decay_sweep_is_cumulative() {
    let g = synthetic(5);
    let dates = [150, 180, 210, 240];
    let n_values = [5, 20];
    let result = sweep(&g, Family::Tbp, &[0.0], &dates, 30, &n_values).unwrap();
    for (i, &t) in dates.iter().enumerate() {
        let expected = DateContext::new(&g, t, 30)
            .unwrap()
            .evaluate(PredictorSpec::Cumulative, &n_values)
            .unwrap();
        assert_eq!(result.points[0].per_date[i], expected);
    }
    let pbp = sweep(
        &g,
        Family::Pbp { window: 30 },
        &[0.0],
        &dates,
        30,
        &n_values,
    )
    .unwrap();
    assert_eq!(pbp.points[0].per_date, result.points[0].per_date);
}

#[test]
fn window_sweep_composes_from_single_sweeps() {
    let g = synthetic(9);
    let gamma = [0.0, 0.05, 0.2];
    let lambda = [0.0, 0.5, 1.0];
    let plans = vec![
        WindowPlan {
            horizon: 10,
            dates: vec![150, 200, 250],
        },
        WindowPlan {
            horizon: 40,
            dates: vec![120, 180, 230],
        },
    ];
    let rows = sweep_tf(&g, &plans, &gamma, &lambda, 10).unwrap();
    assert_eq!(rows.len(), 4);
    for (k, plan) in plans.iter().enumerate() {
        let tbp = sweep(&g, Family::Tbp, &gamma, &plan.dates, plan.horizon, &[10]).unwrap();
        let pbp = sweep(
            &g,
            Family::Pbp {
                window: plan.horizon,
            },
            &lambda,
            &plan.dates,
            plan.horizon,
            &[10],
        )
        .unwrap();
        for (row, single) in [(&rows[2 * k], &tbp), (&rows[2 * k + 1], &pbp)] {
            assert_eq!(row.horizon, plan.horizon);
            assert_eq!(row.family, single.family);
            assert_eq!(row.best_param, single.best[0].param);
            assert_eq!(row.report, single.best[0].report);
        }
    }
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let g = synthetic(11);
    let grid = unit_grid(20);
    let dates = [140, 170, 200, 230, 260];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep(&g, Family::Tbp, &grid, &dates, 30, &[10, 30]).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn pure_attachment_prefers_no_decay() {
    // Without aging the best decay should be zero, or the curve flat near it.
    let grid = unit_grid(100);
    for seed in 0..3 {
        let model = GrowthModel::new(4000, 400, 40, 300, 0.0, seed);
        let g = TemporalGraph::from_edges(model.generate().unwrap()).unwrap();
        let dates = sample_test_dates(&g, 10, 150, 30, seed).unwrap();
        let r = sweep(&g, Family::Tbp, &grid[..21], &dates, 30, &[30]).unwrap();
        let best = r.best[0];
        let at_zero = r.points[0].reports[0].precision;
        assert!(
            best.param <= 0.01 || best.report.precision - at_zero <= 0.02,
            "seed {seed}: gamma*={} P={} vs P(0)={}",
            best.param,
            best.report.precision,
            at_zero
        );
    }
}

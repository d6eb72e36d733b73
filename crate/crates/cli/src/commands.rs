use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use trendcast_core::experiment::{
    plan_windows, sample_test_dates, sweep, sweep_tf, unit_grid, DateContext, ExperimentConfig,
    Family,
};
use trendcast_core::ingest::{self, DedupPolicy, IdMaps, IngestConfig, Subsample};
use trendcast_core::metrics;
use trendcast_core::predictors::rank;
use trendcast_core::report::{self, Header};
use trendcast_core::synth::{Bursts, GrowthModel};
use trendcast_core::tempgraph::MAGIC;
use trendcast_core::{Day, TemporalGraph};

use crate::args::*;
use crate::{CliError, CliResult};

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => ingest_cmd(a),
        Command::Stats(a) => stats(a),
        Command::Score(a) => score(a),
        Command::Evaluate(a) => evaluate(a),
        Command::SweepGamma(a) => sweep_cmd(a, false),
        Command::SweepLambda(a) => sweep_cmd(a, true),
        Command::SweepTf(a) => sweep_tf_cmd(a),
        Command::Rankshift(a) => rankshift(a),
        Command::Synth(a) => synth(a),
    }
}

// ---------------------------------------------------------------------------
// input and output
// ---------------------------------------------------------------------------

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CliError::MissingFile(format!("{} not found", path.display())),
        _ => CliError::Invalid(format!("cannot read {}: {e}", path.display())),
    })
}

fn ingest_config(source: &Source, dedup: DedupPolicy) -> IngestConfig {
    let mut config = IngestConfig::new(source.format);
    config.rating_threshold = source.threshold;
    config.dedup = dedup;
    if let Some(policy) = source.self_loops {
        config.remove_self_loops = policy == SelfLoops::Drop;
    }
    config
}

fn load(source: &Source, dedup: DedupPolicy) -> CliResult<(TemporalGraph, IdMaps)> {
    let bytes = read_input(&source.data)?;
    if bytes.starts_with(MAGIC) {
        return Ok((TemporalGraph::read_binary(&bytes[..])?, IdMaps::default()));
    }
    let config = ingest_config(source, dedup);
    config.validate()?;
    let ds = ingest::parse(&bytes[..], &config)?;
    Ok((TemporalGraph::from_edges(ds.edges)?, ds.ids))
}

/// Writes the whole buffer at once so partial files are never left behind
/// on a formatting error.
fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}")))
        }
    }
}

fn header(command: &str, common: &Common) -> Header {
    let mut h = Header::new().with("command", command);
    if let Some(c) = &common.config {
        h.push("config", c.display());
    }
    h
}

fn push_source(h: &mut Header, source: &Source, dedup: Option<DedupPolicy>) {
    let config = ingest_config(source, dedup.unwrap_or(DedupPolicy::Earliest));
    h.push("data", source.data.display());
    h.push("format", source.format.name());
    h.push("threshold", source.threshold);
    h.push(
        "self_loops",
        if config.remove_self_loops {
            "drop"
        } else {
            "keep"
        },
    );
    if let Some(d) = dedup {
        h.push("dedup", dedup_name(d));
    }
}

fn dedup_name(d: DedupPolicy) -> &'static str {
    match d {
        DedupPolicy::Earliest => "earliest",
        DedupPolicy::KeepAll => "keep-all",
    }
}

fn seed_value(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Invalid(format!("--seed is required to sample {what}")))
}

fn resolve_dates(graph: &TemporalGraph, dates: &Dates, horizon: Day) -> CliResult<Vec<Day>> {
    match &dates.t {
        Some(t) if t.is_empty() => Err(CliError::Invalid("--t needs at least one day".into())),
        Some(t) => Ok(t.clone()),
        None => {
            let seed = require_seed(dates.seed, "test dates")?;
            Ok(sample_test_dates(
                graph,
                dates.dates,
                dates.min_history,
                horizon,
                seed,
            )?)
        }
    }
}

fn grid_or_default(grid: &Option<Vec<f64>>, steps: usize) -> CliResult<Vec<f64>> {
    match grid {
        Some(g) => Ok(g.clone()),
        None if steps == 0 => Err(CliError::Invalid("--grid-steps must be at least 1".into())),
        None => Ok(unit_grid(steps)),
    }
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn ingest_cmd(a: IngestArgs) -> CliResult<()> {
    let out = a
        .common
        .out
        .clone()
        .ok_or_else(|| CliError::Invalid("ingest requires --out".into()))?;
    let mut config = ingest_config(&a.source, a.dedup.dedup);
    if let Some(target_users) = a.subsample_users {
        config.subsample = Some(Subsample {
            min_ratings: a.subsample_min_ratings,
            target_users,
            seed: require_seed(a.seed, "users")?,
        });
    }
    config.validate()?;
    let bytes = read_input(&a.source.data)?;
    let ds = ingest::parse(&bytes[..], &config)?;

    let mut h = header("ingest", &a.common);
    push_source(&mut h, &a.source, Some(a.dedup.dedup));
    if let Some(s) = config.subsample {
        h.push("subsample_users", s.target_users);
        h.push("subsample_min_ratings", s.min_ratings);
    }
    h.push("seed", seed_value(a.seed));
    let stats = ingest::dataset_stats(&ds.edges)?;
    h.push("users", stats.users);
    h.push("objects", stats.objects);
    h.push("links", stats.links);

    let mut edges = Vec::new();
    match a.out_format {
        OutFormat::Tsv => {
            h.write(&mut edges)?;
            ingest::write_edges_tsv(&mut edges, &ds.edges)?;
        }
        OutFormat::Binary => {
            TemporalGraph::from_edges(ds.edges.iter().copied())?.write_binary(&mut edges)?
        }
    }
    emit(&Some(out.clone()), &edges)?;
    for (suffix, names) in [("users", &ds.ids.users), ("objects", &ds.ids.objects)] {
        let mut buf = Vec::new();
        h.clone().with("map", suffix).write(&mut buf)?;
        ingest::write_id_map(&mut buf, names)?;
        emit(&Some(sidecar(&out, suffix)), &buf)?;
    }
    Ok(())
}

/// `edges.tsv` → `edges.tsv.users.tsv`.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(format!(".{suffix}.tsv"));
    PathBuf::from(name)
}

fn stats(a: StatsArgs) -> CliResult<()> {
    let bytes = read_input(&a.source.data)?;
    let mut h = header("stats", &a.common);
    push_source(&mut h, &a.source, None);
    let mut buf = Vec::new();
    h.write(&mut buf)?;
    writeln!(buf, "dedup,users,objects,links,first_day,last_day").map_err(io_internal)?;
    let rows: Vec<(&str, ingest::StatsSummary)> = if bytes.starts_with(MAGIC) {
        let g = TemporalGraph::read_binary(&bytes[..])?;
        vec![("as-stored", ingest::dataset_stats(g.edges())?)]
    } else {
        [DedupPolicy::Earliest, DedupPolicy::KeepAll]
            .into_iter()
            .map(|d| {
                let config = ingest_config(&a.source, d);
                config.validate()?;
                let ds = ingest::parse(&bytes[..], &config)?;
                Ok((dedup_name(d), ingest::dataset_stats(&ds.edges)?))
            })
            .collect::<CliResult<_>>()?
    };
    for (name, s) in rows {
        writeln!(
            buf,
            "{name},{},{},{},{},{}",
            s.users, s.objects, s.links, s.first_day, s.last_day
        )
        .map_err(io_internal)?;
    }
    emit(&a.common.out, &buf)
}

fn io_internal(e: io::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn score(a: ScoreArgs) -> CliResult<()> {
    let spec = a.predictor.spec()?;
    let (graph, ids) = load(&a.source, a.dedup.dedup)?;
    let table = spec.score(&graph.snapshot(a.t)?)?;
    let ranked = rank(&table);
    let mut h = header("score", &a.common);
    push_source(&mut h, &a.source, Some(a.dedup.dedup));
    h.push("predictor", spec);
    h.push("t", a.t);
    let mut buf = Vec::new();
    report::write_scores(&mut buf, &h, &table, &ranked, &ids)?;
    emit(&a.common.out, &buf)
}

fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let spec = a.predictor.spec()?;
    let (graph, _) = load(&a.source, a.dedup.dedup)?;
    let dates = resolve_dates(&graph, &a.dates, a.tf)?;
    let mut h = header("evaluate", &a.common);
    push_source(&mut h, &a.source, Some(a.dedup.dedup));
    h.push("predictor", spec);
    h.push("T_F", a.tf);
    h.push("n", join(&a.n));
    h.push("t", join(&dates));
    h.push("seed", seed_value(a.dates.seed));
    let mut buf = Vec::new();
    h.write(&mut buf)?;
    writeln!(buf, "{}", report::METRIC_COLUMNS).map_err(io_internal)?;
    for &t in &dates {
        let reports = DateContext::new(&graph, t, a.tf)?.evaluate(spec, &a.n)?;
        for r in &reports {
            report::write_metric_row(&mut buf, &spec, t, a.tf, r)?;
        }
    }
    emit(&a.common.out, &buf)
}

fn sweep_cmd(a: SweepArgs, lambda: bool) -> CliResult<()> {
    let family = if lambda {
        Family::Pbp {
            window: a.tp.unwrap_or(a.tf),
        }
    } else {
        if a.tp.is_some() {
            return Err(CliError::Invalid(
                "--tp applies to sweep-lambda only".into(),
            ));
        }
        Family::Tbp
    };
    let grid = grid_or_default(&a.grid, a.grid_steps)?;
    let (graph, _) = load(&a.source, a.dedup.dedup)?;
    let dates = resolve_dates(&graph, &a.dates, a.tf)?;
    let result = sweep(&graph, family, &grid, &dates, a.tf, &a.n)?;

    let name = if lambda {
        "sweep-lambda"
    } else {
        "sweep-gamma"
    };
    let mut h = header(name, &a.common);
    push_source(&mut h, &a.source, Some(a.dedup.dedup));
    h.push("T_F", a.tf);
    if let Family::Pbp { window } = family {
        h.push("T_P", window);
    }
    h.push("n", join(&a.n));
    h.push(
        format!("{}_grid", family.param_name()),
        grid_label(&a.grid, a.grid_steps),
    );
    h.push("t", join(&dates));
    h.push("seed", seed_value(a.dates.seed));
    for b in &result.best {
        h.push(format!("best_{}@{}", family.param_name(), b.n), b.param);
    }
    let mut buf = Vec::new();
    report::write_sweep(&mut buf, &h, &result)?;
    emit(&a.common.out, &buf)
}

fn grid_label(grid: &Option<Vec<f64>>, steps: usize) -> String {
    match grid {
        Some(g) => join(g),
        None => format!("0:1/{steps}"),
    }
}

fn sweep_tf_cmd(a: SweepTfArgs) -> CliResult<()> {
    let seed = require_seed(a.seed, "test dates")?;
    let gamma_grid = grid_or_default(&a.gamma_grid, a.grid_steps)?;
    let lambda_grid = grid_or_default(&a.lambda_grid, a.grid_steps)?;
    let config = ExperimentConfig {
        n_values: vec![a.n],
        num_test_dates: a.dates,
        min_history: a.min_history,
        seed,
        gamma_grid: gamma_grid.clone(),
        lambda_grid: lambda_grid.clone(),
        ..ExperimentConfig::default()
    };
    config.validate()?;
    let (graph, _) = load(&a.source, a.dedup.dedup)?;
    let plans = plan_windows(&graph, &a.tf, &config)?;
    let rows = sweep_tf(&graph, &plans, &gamma_grid, &lambda_grid, a.n)?;

    let mut h = header("sweep-tf", &a.common);
    push_source(&mut h, &a.source, Some(a.dedup.dedup));
    h.push("T_F", join(&a.tf));
    h.push("n", a.n);
    h.push("dates", a.dates);
    h.push("min_history", a.min_history);
    h.push("gamma_grid", grid_label(&a.gamma_grid, a.grid_steps));
    h.push("lambda_grid", grid_label(&a.lambda_grid, a.grid_steps));
    h.push("seed", seed);
    let mut buf = Vec::new();
    report::write_window_rows(&mut buf, &h, &rows)?;
    emit(&a.common.out, &buf)
}

fn rankshift(a: RankshiftArgs) -> CliResult<()> {
    let spec = a.predictor.spec()?;
    let (graph, ids) = load(&a.source, a.dedup.dedup)?;
    let ctx = DateContext::new(&graph, a.t, a.tf)?;
    let table = spec.score(&ctx.snapshot)?;
    let shifts = metrics::rank_shift(&rank(&table), &ctx.truth, &ctx.past, a.top)?;
    let mut h = header("rankshift", &a.common);
    push_source(&mut h, &a.source, Some(a.dedup.dedup));
    h.push("predictor", spec);
    h.push("t", a.t);
    h.push("T_F", a.tf);
    h.push("top", a.top);
    let mut buf = Vec::new();
    report::write_rank_shift(&mut buf, &h, &shifts, &ids)?;
    emit(&a.common.out, &buf)
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let seed = require_seed(a.seed, "a network")?;
    let mut model = GrowthModel::new(a.users, a.objects, a.links_per_day, a.days, a.theta, seed);
    if let Some(sigma) = a.sigma {
        model = model.with_lognormal_fitness(sigma)?;
    }
    let bursts = match (a.burst_rate, a.burst_amplitude, a.burst_decay) {
        (None, None, None) => None,
        (Some(rate), Some(amplitude), Some(decay)) => Some(Bursts {
            rate,
            amplitude,
            decay,
        }),
        _ => {
            return Err(CliError::Invalid(
                "--burst-rate, --burst-amplitude and --burst-decay go together".into(),
            ))
        }
    };
    if let Some(b) = bursts {
        model = model.with_bursts(b);
    }
    let edges = model.generate()?;

    let mut h = header("synth", &a.common);
    h.push("users", a.users);
    h.push("objects", a.objects);
    h.push("links_per_day", a.links_per_day);
    h.push("days", a.days);
    h.push("theta", a.theta);
    h.push(
        "sigma",
        a.sigma
            .map(|s| s.to_string())
            .unwrap_or_else(|| "none".into()),
    );
    if let Some(b) = bursts {
        h.push("burst_rate", b.rate);
        h.push("burst_amplitude", b.amplitude);
        h.push("burst_decay", b.decay);
    }
    h.push("seed", seed);
    let mut buf = Vec::new();
    h.write(&mut buf)?;
    ingest::write_edges_tsv(&mut buf, &edges)?;
    emit(&a.common.out, &buf)
}

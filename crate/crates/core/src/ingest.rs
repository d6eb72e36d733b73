//! Raw dataset parsing into a canonical, day-indexed edge list.
//!
//! Supported inputs:
//!
//! * `movielens`: `user::movie::rating::epoch_seconds` (MovieLens 1M/10M), or
//!   the comma-separated `userId,movieId,rating,timestamp` layout with an
//!   optional header line.
//! * `netflix`: Netflix Prize layout, a `movie_id:` line followed by
//!   `customer,rating,YYYY-MM-DD` rows.
//! * `facebook-wall`: KONECT whitespace edge list `poster wall_owner weight
//!   epoch_seconds`, `%` comment lines. Each post becomes an edge from the
//!   poster (user side) to the owner's wall (object side).
//! * `generic-tsv`: `user<TAB>object<TAB>day[<TAB>rating]`, `#` comment lines.
//!   Days are taken verbatim and must be non-negative.
//!
//! Epoch-second timestamps (and Netflix dates, taken at UTC midnight) are
//! converted to `floor((ts - first_ts) / 86400)` where `first_ts` is the
//! earliest surviving record.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ids::{Day, ObjectId, TemporalEdge, UserId};

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    MovieLens,
    Netflix,
    FacebookWall,
    GenericTsv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::MovieLens => "movielens",
            Format::Netflix => "netflix",
            Format::FacebookWall => "facebook-wall",
            Format::GenericTsv => "generic-tsv",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens" => Ok(Format::MovieLens),
            "netflix" => Ok(Format::Netflix),
            "facebook-wall" => Ok(Format::FacebookWall),
            "generic-tsv" => Ok(Format::GenericTsv),
            other => Err(Error::param(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DedupPolicy {
    /// Keep one edge per (user, object) pair, stamped with its earliest day.
    Earliest,
    KeepAll,
}

impl FromStr for DedupPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "earliest" => Ok(DedupPolicy::Earliest),
            "keep-all" => Ok(DedupPolicy::KeepAll),
            other => Err(Error::param(format!("unknown dedup policy '{other}'"))),
        }
    }
}

/// Random user subsample applied before rating filtering, for the large
/// rating datasets. Users with fewer than `min_ratings` raw ratings are never
/// chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample {
    pub min_ratings: usize,
    pub target_users: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub format: Format,
    /// Ratings strictly above this value become links.
    pub rating_threshold: u8,
    pub dedup: DedupPolicy,
    pub remove_self_loops: bool,
    pub subsample: Option<Subsample>,
}

impl IngestConfig {
    pub fn new(format: Format) -> Self {
        IngestConfig {
            format,
            rating_threshold: 2,
            dedup: DedupPolicy::Earliest,
            remove_self_loops: format == Format::FacebookWall,
            subsample: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rating_threshold > 5 {
            return Err(Error::param(format!(
                "rating threshold {} not in [0, 5]",
                self.rating_threshold
            )));
        }
        if let Some(s) = &self.subsample {
            if s.target_users == 0 {
                return Err(Error::param("subsample target must be at least 1 user"));
            }
        }
        Ok(())
    }
}

/// Dense id → original string id, for users and objects separately.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMaps {
    pub users: Vec<String>,
    pub objects: Vec<String>,
}

impl IdMaps {
    pub fn user_name(&self, id: UserId) -> Option<&str> {
        self.users.get(id.index()).map(String::as_str)
    }

    pub fn object_name(&self, id: ObjectId) -> Option<&str> {
        self.objects.get(id.index()).map(String::as_str)
    }

    /// Object id as printed in reports; falls back to the dense id.
    pub fn object_label(&self, id: ObjectId) -> String {
        self.object_name(id)
            .map(str::to_owned)
            .unwrap_or_else(|| id.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    /// Sorted by day, stable within a day by input order.
    pub edges: Vec<TemporalEdge>,
    pub ids: IdMaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatsSummary {
    pub users: usize,
    pub objects: usize,
    pub links: usize,
    pub first_day: Day,
    pub last_day: Day,
}

#[derive(Debug, Clone, Copy)]
struct RawRecord {
    user: u32,
    object: u32,
    /// Epoch seconds for timestamped formats, day index for generic-tsv.
    stamp: i64,
    rating: Option<f64>,
    self_loop: bool,
}

#[derive(Default)]
struct Interner {
    index: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.index.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.index.insert(s.to_owned(), id);
        id
    }
}

struct RawTable {
    records: Vec<RawRecord>,
    users: Interner,
    objects: Interner,
}

/// Parses `source` according to `config`, returning day-sorted edges and the
/// dense id maps.
pub fn parse<R: BufRead>(source: R, config: &IngestConfig) -> Result<Dataset> {
    config.validate()?;
    let mut table = read_raw(source, config.format)?;

    if let Some(sub) = config.subsample {
        subsample_users(&mut table, sub)?;
    }

    let threshold = config.rating_threshold as f64;
    table.records.retain(|r| {
        let rating_ok = r.rating.is_none_or(|v| v > threshold);
        let loop_ok = !(config.remove_self_loops && r.self_loop);
        rating_ok && loop_ok
    });

    let stamped: Vec<(Day, u32, u32)> = match config.format {
        Format::GenericTsv => table
            .records
            .iter()
            .map(|r| (r.stamp as Day, r.user, r.object))
            .collect(),
        _ => {
            let first = match table.records.iter().map(|r| r.stamp).min() {
                Some(f) => f,
                None => return Err(Error::EmptyDataset),
            };
            table
                .records
                .iter()
                .map(|r| {
                    let day = (r.stamp - first).div_euclid(SECONDS_PER_DAY);
                    (day as Day, r.user, r.object)
                })
                .collect()
        }
    };

    finish(stamped, config.dedup, &table.users, &table.objects)
}

fn finish(
    mut stamped: Vec<(Day, u32, u32)>,
    dedup: DedupPolicy,
    users: &Interner,
    objects: &Interner,
) -> Result<Dataset> {
    stamped.sort_by_key(|&(day, _, _)| day);
    if dedup == DedupPolicy::Earliest {
        let mut seen = HashSet::with_capacity(stamped.len());
        stamped.retain(|&(_, u, o)| seen.insert((u, o)));
    }
    if stamped.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Dense ids by first appearance in the final day-sorted order, so writing
    // the canonical TSV and reading it back reproduces the same ids.
    let mut user_dense: HashMap<u32, u32> = HashMap::new();
    let mut object_dense: HashMap<u32, u32> = HashMap::new();
    let mut ids = IdMaps::default();
    let mut edges = Vec::with_capacity(stamped.len());
    for (day, u, o) in stamped {
        let du = *user_dense.entry(u).or_insert_with(|| {
            ids.users.push(users.names[u as usize].clone());
            (ids.users.len() - 1) as u32
        });
        let dobj = *object_dense.entry(o).or_insert_with(|| {
            ids.objects.push(objects.names[o as usize].clone());
            (ids.objects.len() - 1) as u32
        });
        edges.push(TemporalEdge::new(du, dobj, day));
    }
    Ok(Dataset { edges, ids })
}

fn subsample_users(table: &mut RawTable, sub: Subsample) -> Result<()> {
    let mut counts = vec![0usize; table.users.names.len()];
    for r in &table.records {
        counts[r.user as usize] += 1;
    }
    let eligible: Vec<u32> = (0..counts.len() as u32)
        .filter(|&u| counts[u as usize] >= sub.min_ratings)
        .collect();
    if eligible.len() < sub.target_users {
        return Err(Error::param(format!(
            "only {} users have at least {} ratings, cannot sample {}",
            eligible.len(),
            sub.min_ratings,
            sub.target_users
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sub.seed);
    let mut keep = vec![false; counts.len()];
    for i in index::sample(&mut rng, eligible.len(), sub.target_users) {
        keep[eligible[i] as usize] = true;
    }
    table.records.retain(|r| keep[r.user as usize]);
    Ok(())
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        msg: msg.into(),
    }
}

fn parse_rating(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("bad rating '{field}'")))?;
    if !(v > 0.0 && v <= 5.0) {
        return Err(malformed(line, format!("rating {v} outside (0, 5]")));
    }
    Ok(v)
}

fn parse_int(field: &str, what: &str, line: usize) -> Result<i64> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("bad {what} '{field}'")))
}

fn date_to_epoch(field: &str, line: usize) -> Result<i64> {
    let date = NaiveDate::parse_from_str(field.trim(), "%Y-%m-%d")
        .map_err(|_| malformed(line, format!("bad date '{field}'")))?;
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    Ok((date - epoch).num_days() * SECONDS_PER_DAY)
}

fn read_raw<R: BufRead>(source: R, format: Format) -> Result<RawTable> {
    let mut table = RawTable {
        records: Vec::new(),
        users: Interner::default(),
        objects: Interner::default(),
    };
    let mut netflix_movie: Option<u32> = None;

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => malformed(lineno, "invalid UTF-8"),
            _ => Error::Io(e),
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }

        let record = match format {
            Format::GenericTsv => {
                if trimmed.starts_with('#') {
                    continue;
                }
                let fields: Vec<&str> = trimmed.split('\t').collect();
                if fields.len() != 3 && fields.len() != 4 {
                    return Err(malformed(
                        lineno,
                        format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
                    ));
                }
                let day = parse_int(fields[2], "day", lineno)?;
                if day < 0 || day > Day::MAX as i64 {
                    return Err(malformed(lineno, format!("day {day} out of range")));
                }
                let rating = match fields.get(3) {
                    Some(f) => Some(parse_rating(f, lineno)?),
                    None => None,
                };
                raw_record(&mut table, fields[0], fields[1], day, rating, lineno)?
            }
            Format::MovieLens => {
                let fields: Vec<&str> = if trimmed.contains("::") {
                    trimmed.split("::").collect()
                } else {
                    trimmed.split(',').collect()
                };
                if lineno == 1 && fields.first().map(|f| f.trim()) == Some("userId") {
                    continue;
                }
                if fields.len() != 4 {
                    return Err(malformed(
                        lineno,
                        format!(
                            "expected user::movie::rating::timestamp, got {} fields",
                            fields.len()
                        ),
                    ));
                }
                let rating = parse_rating(fields[2], lineno)?;
                let ts = parse_int(fields[3], "timestamp", lineno)?;
                raw_record(&mut table, fields[0], fields[1], ts, Some(rating), lineno)?
            }
            Format::Netflix => {
                let t = trimmed.trim();
                if let Some(movie) = t.strip_suffix(':') {
                    if movie.is_empty() || movie.contains(',') {
                        return Err(malformed(lineno, format!("bad movie header '{t}'")));
                    }
                    netflix_movie = Some(table.objects.intern(movie));
                    continue;
                }
                let movie = netflix_movie
                    .ok_or_else(|| malformed(lineno, "rating row before any 'movie:' header"))?;
                let fields: Vec<&str> = t.split(',').collect();
                if fields.len() != 3 {
                    return Err(malformed(
                        lineno,
                        format!("expected customer,rating,date, got {} fields", fields.len()),
                    ));
                }
                let rating = parse_rating(fields[1], lineno)?;
                let ts = date_to_epoch(fields[2], lineno)?;
                let user = fields[0].trim();
                if user.is_empty() {
                    return Err(malformed(lineno, "empty customer id"));
                }
                RawRecord {
                    user: table.users.intern(user),
                    object: movie,
                    stamp: ts,
                    rating: Some(rating),
                    self_loop: false,
                }
            }
            Format::FacebookWall => {
                if trimmed.starts_with('%') || trimmed.starts_with('#') {
                    continue;
                }
                let fields: Vec<&str> = trimmed.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(malformed(
                        lineno,
                        format!(
                            "expected 'poster wall weight timestamp', got {} fields",
                            fields.len()
                        ),
                    ));
                }
                let ts = parse_int(fields[3], "timestamp", lineno)?;
                raw_record(&mut table, fields[0], fields[1], ts, None, lineno)?
            }
        };
        table.records.push(record);
    }

    Ok(table)
}

fn raw_record(
    table: &mut RawTable,
    user: &str,
    object: &str,
    stamp: i64,
    rating: Option<f64>,
    line: usize,
) -> Result<RawRecord> {
    let user = user.trim();
    let object = object.trim();
    if user.is_empty() || object.is_empty() {
        return Err(malformed(line, "empty id field"));
    }
    Ok(RawRecord {
        user: table.users.intern(user),
        object: table.objects.intern(object),
        stamp,
        rating,
        self_loop: user == object,
    })
}

/// Counts for a non-empty edge list.
pub fn dataset_stats(edges: &[TemporalEdge]) -> Result<StatsSummary> {
    let first_day = edges
        .iter()
        .map(|e| e.day)
        .min()
        .ok_or(Error::EmptyDataset)?;
    let last_day = edges
        .iter()
        .map(|e| e.day)
        .max()
        .ok_or(Error::EmptyDataset)?;
    let users: HashSet<UserId> = edges.iter().map(|e| e.user).collect();
    let objects: HashSet<ObjectId> = edges.iter().map(|e| e.object).collect();
    Ok(StatsSummary {
        users: users.len(),
        objects: objects.len(),
        links: edges.len(),
        first_day,
        last_day,
    })
}

/// Writes `user_id<TAB>object_id<TAB>day` rows (dense ids), no header.
pub fn write_edges_tsv<W: Write>(mut out: W, edges: &[TemporalEdge]) -> Result<()> {
    for e in edges {
        writeln!(out, "{}\t{}\t{}", e.user, e.object, e.day)?;
    }
    Ok(())
}

/// Writes a sidecar id map: `dense_id<TAB>original_id` rows.
pub fn write_id_map<W: Write>(mut out: W, names: &[String]) -> Result<()> {
    for (i, name) in names.iter().enumerate() {
        writeln!(out, "{i}\t{name}")?;
    }
    Ok(())
}

//! Immutable temporal bipartite graph with per-object and per-user sorted
//! link-day arrays (CSR layout).
//!
//! Snapshot convention: the snapshot at day `t` holds every link with
//! `day <= t`, and a future window of length `T` covers days in `(t, t + T]`.
//! The two partition the timeline with no gap and no double count.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::ids::{Day, ObjectId, TemporalEdge, UserId};

/// First bytes of every canonical binary graph file.
pub const MAGIC: &[u8; 8] = b"TRNDGRPH";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    num_users: usize,
    num_objects: usize,
    object_offsets: Vec<usize>,
    object_days: Vec<Day>,
    user_offsets: Vec<usize>,
    user_days: Vec<Day>,
    day_min: Day,
    day_max: Day,
    /// Canonical (day, object, user) order.
    edges: Vec<TemporalEdge>,
}

fn csr(n: usize, keyed: impl Iterator<Item = (usize, Day)> + Clone) -> (Vec<usize>, Vec<Day>) {
    let mut offsets = vec![0usize; n + 1];
    for (k, _) in keyed.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut days = vec![0; offsets[n]];
    for (k, d) in keyed {
        days[cursor[k]] = d;
        cursor[k] += 1;
    }
    for i in 0..n {
        days[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    (offsets, days)
}

impl TemporalGraph {
    /// Builds the graph; id spaces are sized by the largest id seen.
    pub fn from_edges(edges: impl IntoIterator<Item = TemporalEdge>) -> Result<Self> {
        let mut edges: Vec<TemporalEdge> = edges.into_iter().collect();
        if edges.is_empty() {
            return Err(Error::EmptyDataset);
        }
        edges.sort_unstable_by_key(|e| (e.day, e.object, e.user));
        let num_users = edges.iter().map(|e| e.user.index()).max().unwrap_or(0) + 1;
        let num_objects = edges.iter().map(|e| e.object.index()).max().unwrap_or(0) + 1;
        Ok(Self::build(num_users, num_objects, edges))
    }

    fn build(num_users: usize, num_objects: usize, edges: Vec<TemporalEdge>) -> Self {
        let (object_offsets, object_days) =
            csr(num_objects, edges.iter().map(|e| (e.object.index(), e.day)));
        let (user_offsets, user_days) =
            csr(num_users, edges.iter().map(|e| (e.user.index(), e.day)));
        let day_min = edges.first().map_or(0, |e| e.day);
        let day_max = edges.last().map_or(0, |e| e.day);
        TemporalGraph {
            num_users,
            num_objects,
            object_offsets,
            object_days,
            user_offsets,
            user_days,
            day_min,
            day_max,
            edges,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_links(&self) -> usize {
        self.edges.len()
    }

    pub fn day_min(&self) -> Day {
        self.day_min
    }

    pub fn day_max(&self) -> Day {
        self.day_max
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjectId> {
        (0..self.num_objects as u32).map(ObjectId)
    }

    /// Every link day of `object`, ascending.
    pub fn all_link_days(&self, object: ObjectId) -> Result<&[Day]> {
        let i = object.index();
        if i >= self.num_objects {
            return Err(Error::UnknownObject(object));
        }
        Ok(&self.object_days[self.object_offsets[i]..self.object_offsets[i + 1]])
    }

    /// Link days of `object` with `day <= t`.
    pub fn link_days(&self, object: ObjectId, t: Day) -> Result<&[Day]> {
        let days = self.all_link_days(object)?;
        Ok(&days[..days.partition_point(|&d| d <= t)])
    }

    /// `k_α(t)`: number of links of `object` with `day <= t`.
    pub fn degree_object(&self, object: ObjectId, t: Day) -> Result<u32> {
        Ok(self.link_days(object, t)?.len() as u32)
    }

    /// `k_i(t)`: number of links of `user` with `day <= t`.
    pub fn degree_user(&self, user: UserId, t: Day) -> Result<u32> {
        let i = user.index();
        if i >= self.num_users {
            return Err(Error::param(format!("unknown user id {user}")));
        }
        let days = &self.user_days[self.user_offsets[i]..self.user_offsets[i + 1]];
        Ok(days.partition_point(|&d| d <= t) as u32)
    }

    /// `Δk_α(t, horizon)`: links gained by `object` in `(t, t + horizon]`.
    pub fn popularity_increase(&self, object: ObjectId, t: Day, horizon: Day) -> Result<u32> {
        let end = self.window_end(t, horizon)?;
        let days = self.all_link_days(object)?;
        let upto_end = days.partition_point(|&d| d <= end);
        let upto_t = days.partition_point(|&d| d <= t);
        Ok((upto_end - upto_t) as u32)
    }

    pub(crate) fn window_end(&self, t: Day, horizon: Day) -> Result<Day> {
        if horizon < 0 {
            return Err(Error::param(format!("negative window length {horizon}")));
        }
        let end = t
            .checked_add(horizon)
            .ok_or_else(|| Error::param("window end overflows"))?;
        if end > self.day_max {
            return Err(Error::WindowOutOfRange {
                start: t,
                end,
                max: self.day_max,
            });
        }
        Ok(end)
    }

    fn check_day(&self, t: Day) -> Result<()> {
        if t < self.day_min || t > self.day_max {
            return Err(Error::DayOutOfRange {
                day: t,
                min: self.day_min,
                max: self.day_max,
            });
        }
        Ok(())
    }

    /// Objects with at least one link on or before `t`, ascending by id.
    pub fn candidates(&self, t: Day) -> Result<Vec<ObjectId>> {
        self.check_day(t)?;
        Ok(self
            .objects()
            .filter(|&o| {
                let i = o.index();
                let (lo, hi) = (self.object_offsets[i], self.object_offsets[i + 1]);
                lo < hi && self.object_days[lo] <= t
            })
            .collect())
    }

    pub fn snapshot(&self, t: Day) -> Result<Snapshot<'_>> {
        self.check_day(t)?;
        Ok(Snapshot { graph: self, t })
    }

    /// Little-endian binary dump: 8-byte magic `TRNDGRPH`, u32 version,
    /// u32 users, u32 objects, u64 links, then one `(u32 user, u32 object,
    /// i32 day)` record per link in canonical order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.num_users as u32).to_le_bytes())?;
        out.write_all(&(self.num_objects as u32).to_le_bytes())?;
        out.write_all(&(self.edges.len() as u64).to_le_bytes())?;
        for e in &self.edges {
            out.write_all(&e.user.0.to_le_bytes())?;
            out.write_all(&e.object.0.to_le_bytes())?;
            out.write_all(&e.day.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::BadBinary("wrong magic".into()));
        }
        let version = read_u32(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(Error::BadBinary(format!("unsupported version {version}")));
        }
        let num_users = read_u32(&mut input)? as usize;
        let num_objects = read_u32(&mut input)? as usize;
        let mut links = [0u8; 8];
        input.read_exact(&mut links).map_err(truncated)?;
        let links = u64::from_le_bytes(links) as usize;
        if links == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut edges = Vec::with_capacity(links);
        let mut prev: Option<TemporalEdge> = None;
        for _ in 0..links {
            let user = read_u32(&mut input)?;
            let object = read_u32(&mut input)?;
            let day = read_u32(&mut input)? as i32;
            let e = TemporalEdge::new(user, object, day);
            if e.user.index() >= num_users || e.object.index() >= num_objects {
                return Err(Error::BadBinary("id outside declared range".into()));
            }
            if let Some(p) = prev {
                if (p.day, p.object, p.user) > (e.day, e.object, e.user) {
                    return Err(Error::BadBinary("records not in canonical order".into()));
                }
            }
            prev = Some(e);
            edges.push(e);
        }
        Ok(Self::build(num_users, num_objects, edges))
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::BadBinary("file ends early".into())
    } else {
        Error::Io(e)
    }
}

/// View of a graph cut at day `t`. Only links with `day <= t` are reachable
/// through it, which is what predictors get to see.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'g> {
    graph: &'g TemporalGraph,
    t: Day,
}

impl<'g> Snapshot<'g> {
    pub fn t(&self) -> Day {
        self.t
    }

    pub fn day_min(&self) -> Day {
        self.graph.day_min
    }

    pub fn num_objects(&self) -> usize {
        self.graph.num_objects
    }

    pub fn candidates(&self) -> Vec<ObjectId> {
        self.graph
            .candidates(self.t)
            .expect("snapshot day validated at construction")
    }

    pub fn link_days(&self, object: ObjectId) -> Result<&'g [Day]> {
        self.graph.link_days(object, self.t)
    }

    pub fn degree(&self, object: ObjectId) -> Result<u32> {
        self.graph.degree_object(object, self.t)
    }

    /// Degree at an earlier cut `day <= t`.
    pub fn degree_at(&self, object: ObjectId, day: Day) -> Result<u32> {
        if day > self.t {
            return Err(Error::Lookahead {
                requested: day,
                cut: self.t,
            });
        }
        self.graph.degree_object(object, day)
    }

    pub fn user_degree(&self, user: UserId) -> Result<u32> {
        self.graph.degree_user(user, self.t)
    }

    pub fn num_links(&self) -> usize {
        self.graph.edges.partition_point(|e| e.day <= self.t)
    }
}

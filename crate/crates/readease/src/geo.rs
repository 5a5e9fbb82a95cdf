//! ZCTA centroid loading and nearest-centroid assignment.
//!
//! Distances are plain Euclidean in degree space: no spherical correction
//! and no longitude wraparound. That is only defensible because assignments
//! are cut off at a small threshold (default 10 degrees) and the reference
//! centroid set lies well inside one hemisphere; it keeps the geometry
//! bit-exactly reproducible. Nearest-neighbour lookups go through a k-d tree
//! that returns exactly what a linear scan would, including the
//! smallest-id tie break.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::stats::{RunningStats, ZctaAggregate};

/// Default assignment cutoff in degrees.
pub const DEFAULT_THRESHOLD_DEGREES: f64 = 10.0;

/// Default minimum group size kept by [`group_by_zcta`].
pub const DEFAULT_MIN_COUNT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Squared Euclidean distance in degree space.
    pub fn dist2(&self, other: &GeoPoint) -> f64 {
        let dlat = self.lat - other.lat;
        let dlon = self.lon - other.lon;
        dlat * dlat + dlon * dlon
    }

    fn in_range(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZctaCentroid {
    pub zcta_id: String,
    pub point: GeoPoint,
}

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("failed to read centroid table: {0}")]
    Io(#[from] std::io::Error),
    #[error("centroid table row {row}: {source}")]
    Csv { row: u64, source: csv::Error },
    #[error("centroid table is missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("centroid table row {row}: cannot parse {column} value {value:?}")]
    BadNumber {
        row: u64,
        column: &'static str,
        value: String,
    },
    #[error("centroid table row {row}: duplicate GEOID {zcta_id:?}")]
    DuplicateId { row: u64, zcta_id: String },
    #[error("centroid table row {row}: coordinates ({lat}, {lon}) out of range")]
    CoordinatesOutOfRange { row: u64, lat: f64, lon: f64 },
    #[error("centroid table has no rows")]
    EmptyTable,
}

/// Reads a centroid table from a comma-separated gazetteer extract.
///
/// The header row is required; columns are matched by (whitespace-trimmed)
/// name: `GEOID`, `INTPTLAT`, `INTPTLONG`. Extra columns are ignored.
/// Duplicate ids and out-of-range coordinates are fatal, reported with the
/// 1-based file line number.
pub fn load_centroids(path: &Path) -> Result<Vec<ZctaCentroid>, GeoError> {
    read_centroids(std::fs::File::open(path)?)
}

pub fn read_centroids(reader: impl Read) -> Result<Vec<ZctaCentroid>, GeoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|source| GeoError::Csv { row: 1, source })?;
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(GeoError::MissingColumn(name))
    };
    let id_col = col("GEOID")?;
    let lat_col = col("INTPTLAT")?;
    let lon_col = col("INTPTLONG")?;

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i as u64 + 2; // 1-based line number; header is line 1
        let record = record.map_err(|source| GeoError::Csv { row, source })?;
        let field = |c: usize, column: &'static str| {
            record.get(c).map(str::trim).ok_or(GeoError::BadNumber {
                row,
                column,
                value: String::new(),
            })
        };
        let parse = |c: usize, column: &'static str| -> Result<f64, GeoError> {
            let v = field(c, column)?;
            v.parse().map_err(|_| GeoError::BadNumber {
                row,
                column,
                value: v.to_owned(),
            })
        };
        let zcta_id = field(id_col, "GEOID")?.to_owned();
        let point = GeoPoint {
            lat: parse(lat_col, "INTPTLAT")?,
            lon: parse(lon_col, "INTPTLONG")?,
        };
        if !point.in_range() {
            return Err(GeoError::CoordinatesOutOfRange {
                row,
                lat: point.lat,
                lon: point.lon,
            });
        }
        if !seen.insert(zcta_id.clone()) {
            return Err(GeoError::DuplicateId { row, zcta_id });
        }
        out.push(ZctaCentroid { zcta_id, point });
    }
    Ok(out)
}

const NIL: u32 = u32::MAX;

struct KdNode {
    /// Index into the sorted centroid vector.
    centroid: u32,
    left: u32,
    right: u32,
}

/// Nearest-centroid index over a non-empty centroid table.
///
/// Centroids are held sorted by id, so comparing `(distance^2, index)`
/// implements the smallest-id tie break.
pub struct ZctaIndex {
    centroids: Vec<ZctaCentroid>,
    nodes: Vec<KdNode>,
    root: u32,
}

impl ZctaIndex {
    pub fn new(mut centroids: Vec<ZctaCentroid>) -> Result<Self, GeoError> {
        if centroids.is_empty() {
            return Err(GeoError::EmptyTable);
        }
        centroids.sort_by(|a, b| a.zcta_id.cmp(&b.zcta_id));
        let mut order: Vec<u32> = (0..centroids.len() as u32).collect();
        let mut nodes = Vec::with_capacity(centroids.len());
        let root = build(&centroids, &mut order, 0, &mut nodes);
        Ok(Self { centroids, nodes, root })
    }

    pub fn centroids(&self) -> &[ZctaCentroid] {
        &self.centroids
    }

    pub fn centroid(&self, zcta_id: &str) -> Option<&ZctaCentroid> {
        self.centroids
            .binary_search_by(|c| c.zcta_id.as_str().cmp(zcta_id))
            .ok()
            .map(|i| &self.centroids[i])
    }

    /// Assigns `point` to the nearest centroid within `threshold` degrees.
    ///
    /// Returns `None` when the nearest centroid is strictly farther than the
    /// threshold. Exact distance ties go to the lexicographically smallest
    /// id.
    pub fn assign(&self, point: GeoPoint, threshold: f64) -> Option<&ZctaCentroid> {
        self.assign_idx(point, threshold)
            .map(|i| &self.centroids[i as usize])
    }

    pub(crate) fn assign_idx(&self, point: GeoPoint, threshold: f64) -> Option<u32> {
        let limit = threshold * threshold;
        // Seeding the search with the cutoff lets the tree prune anything
        // beyond it; NIL ranks after every real index so a centroid at
        // exactly the cutoff still wins.
        let mut best = (limit, NIL);
        self.search(self.root, point, 0, &mut best);
        (best.1 != NIL).then_some(best.1)
    }

    fn search(&self, node: u32, q: GeoPoint, axis: usize, best: &mut (f64, u32)) {
        if node == NIL {
            return;
        }
        let n = &self.nodes[node as usize];
        let c = &self.centroids[n.centroid as usize];
        let d2 = q.dist2(&c.point);
        if d2 < best.0 || (d2 == best.0 && n.centroid < best.1) {
            *best = (d2, n.centroid);
        }
        let delta = match axis {
            0 => q.lat - c.point.lat,
            _ => q.lon - c.point.lon,
        };
        let (near, far) = if delta < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.search(near, q, axis ^ 1, best);
        // the far side can still hold an equal-distance, smaller-id centroid
        if delta * delta <= best.0 {
            self.search(far, q, axis ^ 1, best);
        }
    }
}

fn build(centroids: &[ZctaCentroid], order: &mut [u32], axis: usize, nodes: &mut Vec<KdNode>) -> u32 {
    if order.is_empty() {
        return NIL;
    }
    let mid = order.len() / 2;
    let key = |i: u32| {
        let p = &centroids[i as usize].point;
        if axis == 0 { p.lat } else { p.lon }
    };
    order.select_nth_unstable_by(mid, |&a, &b| key(a).total_cmp(&key(b)));
    let centroid = order[mid];
    let (lo, hi) = order.split_at_mut(mid);
    let left = build(centroids, lo, axis ^ 1, nodes);
    let right = build(centroids, &mut hi[1..], axis ^ 1, nodes);
    nodes.push(KdNode { centroid, left, right });
    (nodes.len() - 1) as u32
}

/// Grouping outcome counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupCounts {
    /// Messages assigned to some centroid.
    pub assigned: u64,
    /// Geo-tagged messages farther than the threshold from every centroid.
    pub unassigned: u64,
    /// Messages discarded because their group was below `min_count`.
    pub below_min_count: u64,
}

/// Groups scored geo messages by assigned ZCTA.
///
/// Unassigned messages are discarded (and counted); groups smaller than
/// `min_count` are dropped (their message count is reported). Groups come
/// back sorted by id, each message folded into the group's running stats.
pub fn group_by_zcta(
    scored: impl IntoIterator<Item = (GeoPoint, f64)>,
    index: &ZctaIndex,
    threshold: f64,
    min_count: u64,
) -> (Vec<ZctaAggregate>, GroupCounts) {
    let mut counts = GroupCounts::default();
    // dense over the sorted centroid vector: group output is sorted by id
    let mut stats: Vec<RunningStats> = vec![RunningStats::new(); index.centroids().len()];
    for (point, re) in scored {
        match index.assign_idx(point, threshold) {
            Some(i) => {
                counts.assigned += 1;
                stats[i as usize].update(re);
            }
            None => counts.unassigned += 1,
        }
    }
    let groups = filter_groups(
        index
            .centroids()
            .iter()
            .zip(stats)
            .filter(|(_, s)| s.n() > 0)
            .map(|(c, s)| ZctaAggregate {
                zcta_id: c.zcta_id.clone(),
                stats: s,
                centroid: c.point,
            }),
        min_count,
        &mut counts.below_min_count,
    );
    (groups, counts)
}

/// Keeps groups with at least `min_count` members, adding the message count
/// of dropped groups to `below`.
pub(crate) fn filter_groups(
    groups: impl IntoIterator<Item = ZctaAggregate>,
    min_count: u64,
    below: &mut u64,
) -> Vec<ZctaAggregate> {
    groups
        .into_iter()
        .filter(|g| {
            if g.stats.n() >= min_count {
                true
            } else {
                *below += g.stats.n();
                false
            }
        })
        .collect()
}

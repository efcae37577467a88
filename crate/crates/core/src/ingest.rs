//! GeoLife parsing, label alignment, trip construction and dataset files.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, GpsPoint, OutlierThresholds};

pub const N_MIN: usize = 20;
pub const N_MAX: usize = 400;
/// Trip split threshold (s).
pub const TRIP_GAP_S: f64 = 1200.0;
pub const DATASET_MAGIC: &str = "trajseg-dataset-v1";

/// The five land transportation modes, in fixed class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Walk,
    Bike,
    Bus,
    Car,
    Train,
}

impl Mode {
    pub const COUNT: usize = 5;
    pub const ALL: [Mode; 5] = [Mode::Walk, Mode::Bike, Mode::Bus, Mode::Car, Mode::Train];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Mode::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Walk => "walk",
            Mode::Bike => "bike",
            Mode::Bus => "bus",
            Mode::Car => "car",
            Mode::Train => "train",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        map_mode(s).ok_or_else(|| Error::Format(format!("unknown mode `{s}`")))
    }
}

/// Map a raw GeoLife annotation to one of the five classes. Taxi folds into
/// car and subway into train; non-land modes yield `None`.
pub fn map_mode(raw: &str) -> Option<Mode> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "walk" => Some(Mode::Walk),
        "bike" => Some(Mode::Bike),
        "bus" => Some(Mode::Bus),
        "car" | "taxi" => Some(Mode::Car),
        "train" | "subway" => Some(Mode::Train),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelInterval {
    pub start_t: f64,
    pub end_t: f64,
    pub mode: Mode,
}

fn epoch_seconds(dt: NaiveDateTime) -> f64 {
    dt.and_utc().timestamp() as f64
}

/// Parse a GeoLife `.plt` file: six header lines, then
/// `lat,lng,0,altitude,days,date,time` rows. Timestamps are UTC seconds.
pub fn parse_plt(text: &str) -> Result<Vec<GpsPoint>> {
    let mut lines = text.lines();
    for i in 0..6 {
        if lines.next().is_none() {
            return Err(Error::Format(format!(
                "plt header truncated: expected 6 lines, found {i}"
            )));
        }
    }
    let mut points = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 7;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 7 {
            return Err(Error::parse(lineno, format!("expected 7 fields, found {}", fields.len())));
        }
        let lat: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad latitude `{}`", fields[0])))?;
        let lng: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad longitude `{}`", fields[1])))?;
        let date = NaiveDate::parse_from_str(fields[5], "%Y-%m-%d")
            .map_err(|e| Error::parse(lineno, format!("bad date `{}`: {e}", fields[5])))?;
        let time = NaiveTime::parse_from_str(fields[6], "%H:%M:%S")
            .map_err(|e| Error::parse(lineno, format!("bad time `{}`: {e}", fields[6])))?;
        let t = epoch_seconds(date.and_time(time));
        let p = GpsPoint::new(t, lat, lng).map_err(|e| Error::parse(lineno, e.to_string()))?;
        points.push(p);
    }
    Ok(points)
}

/// Parse a GeoLife `labels.txt`. Rows whose mode does not map to one of the
/// five classes are skipped.
pub fn parse_labels(text: &str) -> Result<Vec<LabelInterval>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let lineno = k + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::parse(lineno, "expected start<TAB>end<TAB>mode"));
        }
        let parse_t = |s: &str| {
            NaiveDateTime::parse_from_str(s, "%Y/%m/%d %H:%M:%S")
                .map(epoch_seconds)
                .map_err(|e| Error::parse(lineno, format!("bad timestamp `{s}`: {e}")))
        };
        let start_t = parse_t(fields[0])?;
        let end_t = parse_t(fields[1])?;
        if end_t <= start_t {
            return Err(Error::parse(lineno, "interval ends before it starts"));
        }
        if let Some(mode) = map_mode(fields[2]) {
            out.push(LabelInterval { start_t, end_t, mode });
        }
    }
    Ok(out)
}

/// Assign each point the mode of the half-open interval `[start, end)`
/// containing it. When intervals touch, a boundary point belongs to the
/// later one. Unlabeled points are dropped.
pub fn label_points(track: &[GpsPoint], intervals: &[LabelInterval]) -> Vec<(GpsPoint, Mode)> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.start_t.total_cmp(&b.start_t));
    let mut prefix_end = Vec::with_capacity(sorted.len());
    let mut running = f64::NEG_INFINITY;
    for iv in &sorted {
        running = running.max(iv.end_t);
        prefix_end.push(running);
    }
    let mut out = Vec::new();
    for p in track {
        let upto = sorted.partition_point(|iv| iv.start_t <= p.t);
        let mut j = upto;
        while j > 0 && prefix_end[j - 1] > p.t {
            j -= 1;
            if p.t < sorted[j].end_t {
                out.push((*p, sorted[j].mode));
                break;
            }
        }
    }
    out
}

/// Start a new trip wherever consecutive points are more than `gap_s` apart.
pub fn split_into_trips<T: Clone>(
    items: &[T],
    time_of: impl Fn(&T) -> f64,
    gap_s: f64,
) -> Vec<Vec<T>> {
    let mut trips: Vec<Vec<T>> = Vec::new();
    for item in items {
        match trips.last_mut() {
            Some(cur) if time_of(item) - time_of(cur.last().unwrap()) <= gap_s => {
                cur.push(item.clone())
            }
            _ => trips.push(vec![item.clone()]),
        }
    }
    trips
}

/// Cut a trip into consecutive non-overlapping chunks of at most `n_max`
/// points and drop any chunk shorter than `n_min`.
pub fn enforce_length<T: Clone>(items: &[T], n_min: usize, n_max: usize) -> Vec<Vec<T>> {
    items
        .chunks(n_max.max(1))
        .filter(|c| c.len() >= n_min)
        .map(|c| c.to_vec())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub mode: Mode,
    pub len: usize,
}

/// Regression targets of a labeled trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub cp_indices: Vec<usize>,
    /// `cp_index / N`, each in `(0, 1)`.
    pub cp_coords: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl Targets {
    /// Rebuild per-point labels from the segment run-lengths.
    pub fn expand(&self) -> Vec<Mode> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.mode, s.len))
            .collect()
    }
}

/// Change points are the first index of every new mode run.
pub fn derive_targets(labels: &[Mode]) -> Targets {
    let n = labels.len();
    let mut cp_indices = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    for (i, &m) in labels.iter().enumerate() {
        match segments.last_mut() {
            Some(s) if s.mode == m => s.len += 1,
            _ => {
                if i > 0 {
                    cp_indices.push(i);
                }
                segments.push(Segment { mode: m, len: 1 });
            }
        }
    }
    let cp_coords = cp_indices.iter().map(|&i| i as f64 / n as f64).collect();
    Targets {
        cp_indices,
        cp_coords,
        segments,
    }
}

/// Preprocessing parameters shared by ingest and the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub thresholds: OutlierThresholds,
    pub gap_s: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            thresholds: OutlierThresholds::default(),
            gap_s: TRIP_GAP_S,
            n_min: N_MIN,
            n_max: N_MAX,
        }
    }
}

/// A preprocessed, labeled trip ready for training or evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub points: Vec<GpsPoint>,
    /// Smoothed `[speed, accel, jerk]` per point.
    pub features: Vec<[f64; 3]>,
    pub labels: Vec<Mode>,
    pub cp_indices: Vec<usize>,
    pub cp_coords: Vec<f64>,
}

impl Trip {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn targets(&self) -> Targets {
        derive_targets(&self.labels)
    }

    /// Check every structural invariant of a trip.
    pub fn validate(&self, n_min: usize, n_max: usize) -> Result<()> {
        let n = self.len();
        let bad = |m: String| Err(Error::Precondition(m));
        if n < n_min || n > n_max {
            return bad(format!("trip length {n} outside [{n_min}, {n_max}]"));
        }
        if self.points.len() != n || self.features.len() != n {
            return bad("points/features/labels length mismatch".into());
        }
        if self.cp_indices.len() != self.cp_coords.len() {
            return bad("cp index/coordinate count mismatch".into());
        }
        let mut prev = 0;
        for (&i, &c) in self.cp_indices.iter().zip(&self.cp_coords) {
            if i <= prev || i >= n {
                return bad(format!("change point {i} out of order or range"));
            }
            if c != i as f64 / n as f64 {
                return bad(format!("coordinate {c} != {i}/{n}"));
            }
            if self.labels[i - 1] == self.labels[i] {
                return bad(format!("no mode change at change point {i}"));
            }
            prev = i;
        }
        let t = derive_targets(&self.labels);
        if t.cp_indices != self.cp_indices {
            return bad("labels change mode away from recorded change points".into());
        }
        if self.features.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite feature".into());
        }
        for w in self.points.windows(2) {
            if w[1].t <= w[0].t {
                return bad("timestamps not strictly increasing".into());
            }
        }
        Ok(())
    }
}

/// Outlier removal (labels kept aligned), kinematics, smoothing and targets.
/// Fails if the cleaned trip falls outside `[n_min, n_max]`.
pub fn build_trip(points: &[GpsPoint], labels: &[Mode], cfg: &PreprocessConfig) -> Result<Trip> {
    if points.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    let keep = geo::outlier_mask(points, cfg.thresholds);
    let points: Vec<GpsPoint> = keep.iter().map(|&i| points[i]).collect();
    let labels: Vec<Mode> = keep.iter().map(|&i| labels[i]).collect();
    let n = points.len();
    if n < cfg.n_min || n > cfg.n_max {
        return Err(Error::Precondition(format!(
            "trip length {n} outside [{}, {}] after cleaning",
            cfg.n_min, cfg.n_max
        )));
    }
    let features = trip_features(&points)?;
    let t = derive_targets(&labels);
    Ok(Trip {
        points,
        features,
        labels,
        cp_indices: t.cp_indices,
        cp_coords: t.cp_coords,
    })
}

/// Smoothed kinematic feature rows for an already cleaned point list.
pub fn trip_features(points: &[GpsPoint]) -> Result<Vec<[f64; 3]>> {
    let k = geo::compute_kinematics(points)?;
    Ok(geo::smooth_series(&k).rows())
}

/// Unlabeled pipeline used at inference time: clean, split on gaps, chunk,
/// and compute features. Returns `(points, features)` per chunk.
pub fn prepare_unlabeled(
    track: &[GpsPoint],
    cfg: &PreprocessConfig,
) -> Result<Vec<(Vec<GpsPoint>, Vec<[f64; 3]>)>> {
    let mut out = Vec::new();
    for trip in split_into_trips(track, |p| p.t, cfg.gap_s) {
        let cleaned = geo::remove_outliers_with(&trip, cfg.thresholds);
        for chunk in enforce_length(&cleaned, cfg.n_min, cfg.n_max) {
            let chunk = geo::remove_outliers_with(&chunk, cfg.thresholds);
            if chunk.len() < cfg.n_min {
                continue;
            }
            let features = trip_features(&chunk)?;
            out.push((chunk, features));
        }
    }
    Ok(out)
}

/// Full labeled pipeline over one user's points.
pub fn trips_from_labeled(labeled: &[(GpsPoint, Mode)], cfg: &PreprocessConfig) -> Vec<Trip> {
    let mut trips = Vec::new();
    for raw in split_into_trips(labeled, |x| x.0.t, cfg.gap_s) {
        let pts: Vec<GpsPoint> = raw.iter().map(|x| x.0).collect();
        let keep = geo::outlier_mask(&pts, cfg.thresholds);
        let cleaned: Vec<(GpsPoint, Mode)> = keep.iter().map(|&i| raw[i]).collect();
        for chunk in enforce_length(&cleaned, cfg.n_min, cfg.n_max) {
            let (p, l): (Vec<GpsPoint>, Vec<Mode>) = chunk.into_iter().unzip();
            if let Ok(trip) = build_trip(&p, &l, cfg) {
                trips.push(trip);
            }
        }
    }
    trips
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub users: usize,
    pub plt_files: usize,
    pub raw_points: usize,
    pub labeled_points: usize,
    pub trips: usize,
}

/// Ingest one GeoLife user directory (`Trajectory/*.plt` + `labels.txt`).
/// Users without a labels file contribute no trips.
pub fn ingest_user(dir: &Path, cfg: &PreprocessConfig) -> Result<(Vec<Trip>, IngestSummary)> {
    let mut summary = IngestSummary {
        users: 1,
        ..Default::default()
    };
    let labels_path = dir.join("labels.txt");
    if !labels_path.exists() {
        return Ok((Vec::new(), summary));
    }
    let intervals = parse_labels(&fs::read_to_string(&labels_path)?)?;
    let mut files: Vec<PathBuf> = match fs::read_dir(dir.join("Trajectory")) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("plt")))
            .collect(),
        Err(_) => Vec::new(),
    };
    files.sort();
    let mut track = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f)?;
        let pts = parse_plt(&text).map_err(|e| Error::Format(format!("{}: {e}", f.display())))?;
        track.extend(pts);
    }
    summary.plt_files = files.len();
    summary.raw_points = track.len();
    let labeled = label_points(&track, &intervals);
    summary.labeled_points = labeled.len();
    let trips = trips_from_labeled(&labeled, cfg);
    summary.trips = trips.len();
    Ok((trips, summary))
}

/// Ingest every user under `root` (either the GeoLife `Data` directory or
/// its parent). Users are processed in sorted order.
pub fn ingest_geolife(root: &Path, cfg: &PreprocessConfig) -> Result<(Vec<Trip>, IngestSummary)> {
    let data = if root.join("Data").is_dir() {
        root.join("Data")
    } else {
        root.to_path_buf()
    };
    let mut users: Vec<PathBuf> = fs::read_dir(&data)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    users.sort();
    // a single user directory passed directly
    if users.is_empty() || data.join("Trajectory").is_dir() {
        return ingest_user(&data, cfg);
    }
    let per_user: Vec<Result<(Vec<Trip>, IngestSummary)>> =
        users.par_iter().map(|u| ingest_user(u, cfg)).collect();
    let mut trips = Vec::new();
    let mut total = IngestSummary::default();
    for r in per_user {
        let (t, s) = r?;
        trips.extend(t);
        total.users += s.users;
        total.plt_files += s.plt_files;
        total.raw_points += s.raw_points;
        total.labeled_points += s.labeled_points;
        total.trips += s.trips;
    }
    Ok((trips, total))
}

/// Train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Trip>,
    pub val: Vec<Trip>,
    pub test: Vec<Trip>,
    pub seed: u64,
}

/// Seeded shuffle followed by a 7:1:2 partition by trip count.
pub fn split_dataset(trips: Vec<Trip>, seed: u64) -> DatasetSplit {
    let n = trips.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (0.7 * n as f64).round() as usize;
    let n_val = ((0.1 * n as f64).round() as usize).min(n - n_train);
    let mut slots: Vec<Option<Trip>> = trips.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> Vec<Trip> {
        idx.iter().map(|&i| slots[i].take().unwrap()).collect()
    };
    let train = take(&order[..n_train]);
    let val = take(&order[n_train..n_train + n_val]);
    let test = take(&order[n_train + n_val..]);
    DatasetSplit {
        train,
        val,
        test,
        seed,
    }
}

/// Zero-padded batch. Feature layout is `B x n_max x 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    pub n_max: usize,
    pub features: Vec<f64>,
    pub mask: Vec<bool>,
    pub lengths: Vec<usize>,
    pub labels: Vec<Vec<Mode>>,
    pub cp_indices: Vec<Vec<usize>>,
    /// Change-point coordinates divided by `n_max`.
    pub cp_coords: Vec<Vec<f64>>,
}

impl PaddedBatch {
    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Row `b` rearranged channel-major (`3 x n_max`).
    pub fn channel_major(&self, b: usize) -> Vec<f64> {
        let n = self.n_max;
        let row = &self.features[b * n * 3..(b + 1) * n * 3];
        let mut out = vec![0.0; 3 * n];
        for i in 0..n {
            for c in 0..3 {
                out[c * n + i] = row[i * 3 + c];
            }
        }
        out
    }

    pub fn real_points(&self) -> usize {
        self.lengths.iter().sum()
    }
}

pub fn pad_batch(trips: &[&Trip], n_max: usize) -> Result<PaddedBatch> {
    let b = trips.len();
    let mut features = vec![0.0; b * n_max * 3];
    let mut mask = vec![false; b * n_max];
    for (k, t) in trips.iter().enumerate() {
        if t.len() > n_max {
            return Err(Error::Shape(format!("trip of {} points exceeds n_max {n_max}", t.len())));
        }
        for (i, f) in t.features.iter().enumerate() {
            features[(k * n_max + i) * 3..(k * n_max + i) * 3 + 3].copy_from_slice(f);
            mask[k * n_max + i] = true;
        }
    }
    Ok(PaddedBatch {
        n_max,
        features,
        mask,
        lengths: trips.iter().map(|t| t.len()).collect(),
        labels: trips.iter().map(|t| t.labels.clone()).collect(),
        cp_indices: trips.iter().map(|t| t.cp_indices.clone()).collect(),
        cp_coords: trips
            .iter()
            .map(|t| t.cp_indices.iter().map(|&i| i as f64 / n_max as f64).collect())
            .collect(),
    })
}

/// Write trips as `trajseg-dataset-v1`: a magic line then one JSON object
/// per trip.
pub fn write_dataset<W: Write>(trips: &[Trip], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{DATASET_MAGIC}")?;
    for t in trips {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Vec<Trip>> {
    let r = BufReader::new(input);
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == DATASET_MAGIC => {}
        Some(Ok(h)) => return Err(Error::Format(format!("unexpected dataset header `{h}`"))),
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::Format("empty dataset file".into())),
    }
    let mut trips = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trip = serde_json::from_str(&line).map_err(|e| Error::parse(k + 2, e.to_string()))?;
        trips.push(t);
    }
    Ok(trips)
}

pub fn save_dataset(trips: &[Trip], path: &Path) -> Result<()> {
    write_dataset(trips, fs::File::create(path)?)
}

pub fn load_dataset(path: &Path) -> Result<Vec<Trip>> {
    read_dataset(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";

    #[test]
    fn plt_row() {
        let text = format!("{HEADER}39.9,116.3,0,492,39925.5,2009-04-22,12:00:00\n");
        let pts = parse_plt(&text).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].lat, 39.9);
        assert_eq!(pts[0].lng, 116.3);
        assert_eq!(pts[0].t, 1_240_401_600.0);
    }

    #[test]
    fn plt_header_only_and_errors() {
        assert!(parse_plt(HEADER).unwrap().is_empty());
        assert!(matches!(parse_plt("a\nb\n"), Err(Error::Format(_))));
        let bad = format!("{HEADER}39.9,116.3,0,492,39925.5,2009-04-22,12:00:00\nabc,116.3,0,492,39925.5,2009-04-22,12:00:02\n");
        match parse_plt(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_file() {
        let text = "Start Time\tEnd Time\tTransportation Mode\n2008/04/02 11:24:21\t2008/04/02 11:50:45\tbus\n2008/04/03 01:00:00\t2008/04/03 02:00:00\tairplane\n";
        let iv = parse_labels(text).unwrap();
        assert_eq!(iv.len(), 1);
        assert_eq!(iv[0].mode, Mode::Bus);
        assert_eq!(iv[0].start_t, 1_207_135_461.0);
        assert_eq!(iv[0].end_t, 1_207_137_045.0);
        assert!(parse_labels("Start Time\tEnd Time\tTransportation Mode\n").unwrap().is_empty());
        let rev = "h\n2008/04/02 11:50:45\t2008/04/02 11:24:21\twalk\n";
        assert!(matches!(parse_labels(rev), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn mode_mapping() {
        assert_eq!(map_mode("taxi"), Some(Mode::Car));
        assert_eq!(map_mode("subway"), Some(Mode::Train));
        assert_eq!(map_mode("Walk"), Some(Mode::Walk));
        assert_eq!(map_mode("airplane"), None);
        assert_eq!(map_mode("boat"), None);
        for m in Mode::ALL {
            assert_eq!(Mode::from_index(m.index()), Some(m));
        }
    }

    #[test]
    fn labeling_half_open() {
        let iv = [
            LabelInterval { start_t: 0.0, end_t: 10.0, mode: Mode::Walk },
            LabelInterval { start_t: 10.0, end_t: 20.0, mode: Mode::Bus },
        ];
        let pts: Vec<GpsPoint> = [-1.0, 0.0, 9.0, 10.0, 19.0, 20.0]
            .iter()
            .map(|&t| GpsPoint { t, lat: 0.0, lng: 0.0 })
            .collect();
        let l = label_points(&pts, &iv);
        let modes: Vec<(f64, Mode)> = l.iter().map(|(p, m)| (p.t, *m)).collect();
        assert_eq!(
            modes,
            vec![(0.0, Mode::Walk), (9.0, Mode::Walk), (10.0, Mode::Bus), (19.0, Mode::Bus)]
        );
    }

    #[test]
    fn labeling_with_long_earlier_interval() {
        let iv = [
            LabelInterval { start_t: 0.0, end_t: 100.0, mode: Mode::Car },
            LabelInterval { start_t: 10.0, end_t: 12.0, mode: Mode::Bus },
        ];
        let pts: Vec<GpsPoint> = [11.0, 50.0].iter().map(|&t| GpsPoint { t, lat: 0.0, lng: 0.0 }).collect();
        let l = label_points(&pts, &iv);
        assert_eq!(l[0].1, Mode::Bus);
        assert_eq!(l[1].1, Mode::Car);
    }

    #[test]
    fn trip_gap_rule() {
        let ts = [0.0, 10.0, 1270.0, 1280.0];
        assert_eq!(split_into_trips(&ts, |t| *t, TRIP_GAP_S).len(), 2);
        let ts = [0.0, 10.0, 1150.0];
        assert_eq!(split_into_trips(&ts, |t| *t, TRIP_GAP_S).len(), 1);
        let empty: [f64; 0] = [];
        assert!(split_into_trips(&empty, |t| *t, TRIP_GAP_S).is_empty());
    }

    #[test]
    fn length_rules() {
        let v: Vec<usize> = (0..900).collect();
        let lens: Vec<usize> = enforce_length(&v, N_MIN, N_MAX).iter().map(|c| c.len()).collect();
        assert_eq!(lens, vec![400, 400, 100]);
        let v: Vec<usize> = (0..19).collect();
        assert!(enforce_length(&v, N_MIN, N_MAX).is_empty());
        let v: Vec<usize> = (0..400).collect();
        assert_eq!(enforce_length(&v, N_MIN, N_MAX), vec![v.clone()]);
        let v: Vec<usize> = (0..815).collect();
        let lens: Vec<usize> = enforce_length(&v, N_MIN, N_MAX).iter().map(|c| c.len()).collect();
        assert_eq!(lens, vec![400, 400]);
    }

    fn runs(spec: &[(Mode, usize)]) -> Vec<Mode> {
        spec.iter().flat_map(|&(m, n)| std::iter::repeat_n(m, n)).collect()
    }

    #[test]
    fn nine_nine_six_targets() {
        let labels = runs(&[(Mode::Walk, 9), (Mode::Bus, 9), (Mode::Walk, 6)]);
        let t = derive_targets(&labels);
        assert_eq!(t.cp_indices, vec![9, 18]);
        assert_eq!(t.cp_coords, vec![0.375, 0.75]);
        assert_eq!(t.segments.len(), 3);
        assert_eq!(t.expand(), labels);
    }

    #[test]
    fn single_and_two_segment_targets() {
        let t = derive_targets(&runs(&[(Mode::Car, 30)]));
        assert!(t.cp_indices.is_empty() && t.cp_coords.is_empty());
        assert_eq!(t.segments, vec![Segment { mode: Mode::Car, len: 30 }]);
        let t = derive_targets(&runs(&[(Mode::Walk, 10), (Mode::Car, 10)]));
        assert_eq!(t.cp_coords, vec![0.5]);
        assert_eq!(
            t.segments,
            vec![Segment { mode: Mode::Walk, len: 10 }, Segment { mode: Mode::Car, len: 10 }]
        );
    }

    fn dummy_trip(n: usize, tag: f64) -> Trip {
        let points: Vec<GpsPoint> = (0..n)
            .map(|i| GpsPoint { t: i as f64, lat: tag, lng: 0.0 })
            .collect();
        Trip {
            points,
            features: vec![[tag, 0.0, 0.0]; n],
            labels: vec![Mode::Walk; n],
            cp_indices: vec![],
            cp_coords: vec![],
        }
    }

    #[test]
    fn split_is_seeded_partition() {
        let trips: Vec<Trip> = (0..57).map(|i| dummy_trip(20, i as f64)).collect();
        let s = split_dataset(trips.clone(), 3);
        assert_eq!(s.train.len(), 40);
        assert_eq!(s.val.len(), 6);
        assert_eq!(s.test.len(), 11);
        let mut tags: Vec<f64> = s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .map(|t| t.points[0].lat)
            .collect();
        tags.sort_by(f64::total_cmp);
        assert_eq!(tags, (0..57).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(s, split_dataset(trips.clone(), 3));
        assert_ne!(s.train, split_dataset(trips, 4).train);
    }

    #[test]
    fn padding_and_mask() {
        let a = dummy_trip(20, 1.0);
        let mut b = dummy_trip(33, 2.0);
        b.labels[10..].iter_mut().for_each(|m| *m = Mode::Bus);
        b.cp_indices = vec![10];
        b.cp_coords = vec![10.0 / 33.0];
        let batch = pad_batch(&[&a, &b], N_MAX).unwrap();
        assert_eq!(batch.features.len(), 2 * N_MAX * 3);
        assert_eq!(batch.mask[..N_MAX].iter().filter(|&&m| m).count(), 20);
        assert_eq!(batch.mask[N_MAX..].iter().filter(|&&m| m).count(), 33);
        assert_eq!(batch.features[(N_MAX + 32) * 3], 2.0);
        assert_eq!(batch.features[(N_MAX + 33) * 3], 0.0);
        assert_eq!(batch.cp_coords[1], vec![10.0 / 400.0]);
        let cm = batch.channel_major(1);
        assert_eq!(cm[0], 2.0);
        assert_eq!(cm[N_MAX], 0.0);
        let long = dummy_trip(401, 0.0);
        assert!(pad_batch(&[&long], N_MAX).is_err());
    }

    #[test]
    fn dataset_file_round_trip() {
        let trips = vec![dummy_trip(20, 1.5), dummy_trip(25, -3.25)];
        let mut buf = Vec::new();
        write_dataset(&trips, &mut buf).unwrap();
        assert!(buf.starts_with(b"trajseg-dataset-v1\n"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), trips);
        assert!(read_dataset(&b"bogus\n"[..]).is_err());
    }
}

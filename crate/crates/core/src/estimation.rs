//! Capability estimation from metered hourly load.
//!
//! Each complete day of load is decomposed into a non-negative combination
//! of reference end-use shapes. A fixed fraction of the curtailable end use
//! is taken as the hourly curtailment capability `q`, and the estimates are
//! pooled into calendar buckets keyed by month, hour of day and weekend flag.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distribution::{
    fit_normal, AlignedSamples, EmpiricalDistribution, NormalDistribution, CLIPPED_MASS_WARNING,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CURTAILABLE_FRACTION: f64 = 0.6;
pub const DEFAULT_MIN_BUCKET_SIZE: usize = 4;
pub const HOURS: usize = 24;

/// Absolute gradient tolerance, scaled by `max(1, |A^T b|_inf)`.
pub const NNLS_TOLERANCE: f64 = 1e-10;

const KEY_FORMAT: &str = "%Y-%m-%dT%H:%M";
const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq)]
pub struct LoadRecord {
    pub timestamp: NaiveDateTime,
    pub building_id: String,
    pub load_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    pub fn of(date: NaiveDate) -> Self {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }
}

/// One reference end-use shape, per day type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndUse {
    pub name: String,
    pub weekday: [f64; HOURS],
    pub weekend: [f64; HOURS],
}

impl EndUse {
    pub fn new(name: impl Into<String>, weekday: [f64; HOURS], weekend: [f64; HOURS]) -> Self {
        Self {
            name: name.into(),
            weekday,
            weekend,
        }
    }

    /// Same shape on every day.
    pub fn uniform(name: impl Into<String>, shape: [f64; HOURS]) -> Self {
        Self::new(name, shape, shape)
    }

    pub fn shape(&self, day: DayType) -> &[f64; HOURS] {
        match day {
            DayType::Weekday => &self.weekday,
            DayType::Weekend => &self.weekend,
        }
    }
}

/// Reference shapes; exactly one end use is curtailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndUseShapes {
    end_uses: Vec<EndUse>,
    curtailable: usize,
}

impl EndUseShapes {
    pub fn new(end_uses: Vec<EndUse>, curtailable: &str) -> Result<Self> {
        if end_uses.is_empty() {
            return Err(Error::InvalidArgument("no end-use shapes".into()));
        }
        let mut names = HashSet::new();
        for u in &end_uses {
            if !names.insert(u.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate end use {:?}", u.name)));
            }
            for day in [DayType::Weekday, DayType::Weekend] {
                let s = u.shape(day);
                if s.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "end use {:?} has a negative or non-finite weight",
                        u.name
                    )));
                }
                if s.iter().all(|w| *w == 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "end use {:?} has an all-zero {day:?} shape",
                        u.name
                    )));
                }
            }
        }
        let curtailable = end_uses
            .iter()
            .position(|u| u.name == curtailable)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("curtailable end use {curtailable:?} not among shapes"))
            })?;
        Ok(Self {
            end_uses,
            curtailable,
        })
    }

    pub fn end_uses(&self) -> &[EndUse] {
        &self.end_uses
    }

    pub fn curtailable_index(&self) -> usize {
        self.curtailable
    }

    pub fn curtailable(&self) -> &EndUse {
        &self.end_uses[self.curtailable]
    }

    /// Hours-by-end-uses design matrix for one day type.
    pub fn design(&self, day: DayType) -> DMatrix<f64> {
        DMatrix::from_fn(HOURS, self.end_uses.len(), |h, u| self.end_uses[u].shape(day)[h])
    }
}

/// Non-negative least squares by the Lawson-Hanson active-set method.
///
/// The entering column is the one with the largest positive gradient, lowest
/// index on ties, so the solution path is deterministic.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows, target has {}",
            a.nrows(),
            b.len()
        )));
    }
    if let Some(j) = (0..n).find(|&j| a.column(j).iter().all(|v| *v == 0.0)) {
        return Err(Error::InvalidArgument(format!("column {j} is all zero")));
    }
    let tol = NNLS_TOLERANCE * a.tr_mul(b).amax().max(1.0);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..(3 * n).max(30) {
        let w = a.tr_mul(&(b - a * &x));
        let mut entering: Option<usize> = None;
        for j in (0..n).filter(|&j| !passive[j] && w[j] > tol) {
            if entering.is_none_or(|k| w[j] > w[k]) {
                entering = Some(j);
            }
        }
        let Some(t) = entering else { break };
        passive[t] = true;
        for _ in 0..=n {
            let s = solve_passive(a, b, &passive);
            let mut blocking: Option<(f64, usize)> = None;
            for j in (0..n).filter(|&j| passive[j] && s[j] <= 0.0) {
                let gap = x[j] - s[j];
                let step = if gap > 0.0 { x[j] / gap } else { 0.0 };
                if blocking.is_none_or(|(best, _)| step < best) {
                    blocking = Some((step, j));
                }
            }
            let Some((step, j0)) = blocking else {
                x = s;
                break;
            };
            x += (s - &x) * step;
            x[j0] = 0.0;
            passive[j0] = false;
            for j in 0..n {
                if passive[j] && x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(x)
}

/// Least squares on the passive columns; zero elsewhere.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, c| a[(i, idx[c])]);
    let svd = sub.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let mut sol = svd.solve(b, eps).expect("u and v were computed");
    // One refinement step removes the last-ulp error of the SVD solve.
    let r = b - &sub * &sol;
    sol += svd.solve(&r, eps).expect("u and v were computed");
    let mut out = DVector::zeros(passive.len());
    for (c, &j) in idx.iter().enumerate() {
        out[j] = sol[c];
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub residual_norm: f64,
}

/// Non-negative end-use weights best reproducing one day's load.
pub fn decompose_load(
    profile: &[f64; HOURS],
    shapes: &EndUseShapes,
    day: DayType,
) -> Result<Decomposition> {
    if profile.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("load profile must be finite and >= 0".into()));
    }
    let a = shapes.design(day);
    let b = DVector::from_column_slice(profile);
    let x = nnls(&a, &b)?;
    let residual_norm = (&b - &a * &x).norm();
    Ok(Decomposition {
        weights: x.iter().copied().collect(),
        residual_norm,
    })
}

/// Hourly curtailment estimates for one building.
#[derive(Debug, Clone, PartialEq)]
pub struct CurtailableSeries {
    /// In time order.
    pub points: Vec<(NaiveDateTime, f64)>,
    pub days_decomposed: usize,
    pub days_skipped: usize,
    pub residual_norms: Vec<f64>,
}

/// Decompose every complete day of one building's records.
pub fn curtailable_series(
    records: &[LoadRecord],
    shapes: &EndUseShapes,
    fraction: f64,
) -> Result<CurtailableSeries> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "curtailable fraction must lie in [0, 1], got {fraction}"
        )));
    }
    if let Some(r) = records.iter().find(|r| r.building_id != records[0].building_id) {
        return Err(Error::InvalidArgument(format!(
            "records mix buildings {:?} and {:?}",
            records[0].building_id, r.building_id
        )));
    }
    let mut days: BTreeMap<NaiveDate, [Option<f64>; HOURS]> = BTreeMap::new();
    for r in records {
        if !r.load_kwh.is_finite() || r.load_kwh < 0.0 {
            return Err(Error::Estimation(format!(
                "{} at {}: load must be finite and >= 0",
                r.building_id, r.timestamp
            )));
        }
        if r.timestamp.minute() != 0 || r.timestamp.second() != 0 || r.timestamp.nanosecond() != 0
        {
            return Err(Error::Estimation(format!(
                "{} at {}: timestamp is not on the hour",
                r.building_id, r.timestamp
            )));
        }
        let slot = &mut days.entry(r.timestamp.date()).or_insert([None; HOURS])
            [r.timestamp.hour() as usize];
        if slot.replace(r.load_kwh).is_some() {
            return Err(Error::Estimation(format!(
                "{} at {}: duplicate timestamp",
                r.building_id, r.timestamp
            )));
        }
    }
    let cur = shapes.curtailable_index();
    let mut out = CurtailableSeries {
        points: Vec::new(),
        days_decomposed: 0,
        days_skipped: 0,
        residual_norms: Vec::new(),
    };
    for (date, hours) in days {
        let Some(profile) = complete(&hours) else {
            out.days_skipped += 1;
            continue;
        };
        let day = DayType::of(date);
        let dec = decompose_load(&profile, shapes, day)?;
        let shape = shapes.curtailable().shape(day);
        for (h, s) in shape.iter().enumerate() {
            let ts = date.and_hms_opt(h as u32, 0, 0).expect("hour < 24");
            out.points.push((ts, fraction * dec.weights[cur] * s));
        }
        out.days_decomposed += 1;
        out.residual_norms.push(dec.residual_norm);
    }
    Ok(out)
}

fn complete(hours: &[Option<f64>; HOURS]) -> Option<[f64; HOURS]> {
    let mut out = [0.0; HOURS];
    for (o, h) in out.iter_mut().zip(hours) {
        *o = (*h)?;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BucketKey {
    pub month: u32,
    pub hour: u32,
    pub is_weekend: bool,
}

impl BucketKey {
    pub fn new(month: u32, hour: u32, is_weekend: bool) -> Result<Self> {
        if !(1..=12).contains(&month) || hour > 23 {
            return Err(Error::InvalidArgument(format!(
                "bucket key out of range: month {month}, hour {hour}"
            )));
        }
        Ok(Self {
            month,
            hour,
            is_weekend,
        })
    }

    pub fn of(ts: NaiveDateTime) -> Self {
        Self {
            month: ts.month(),
            hour: ts.hour(),
            is_weekend: DayType::of(ts.date()) == DayType::Weekend,
        }
    }

    pub fn day_type(&self) -> DayType {
        if self.is_weekend {
            DayType::Weekend
        } else {
            DayType::Weekday
        }
    }
}

impl std::fmt::Display for BucketKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let day = if self.is_weekend { "weekend" } else { "weekday" };
        write!(f, "month {} hour {} {day}", self.month, self.hour)
    }
}

pub fn alignment_key(ts: NaiveDateTime) -> String {
    ts.format(KEY_FORMAT).to_string()
}

/// Pool estimates by calendar bucket, keyed by timestamp for alignment.
pub fn bucket(points: &[(NaiveDateTime, f64)]) -> Result<BTreeMap<BucketKey, AlignedSamples>> {
    let mut sorted: Vec<&(NaiveDateTime, f64)> = points.iter().collect();
    sorted.sort_by_key(|(ts, _)| *ts);
    let mut raw: BTreeMap<BucketKey, (Vec<String>, Vec<f64>)> = BTreeMap::new();
    for (ts, q) in sorted {
        let (keys, values) = raw.entry(BucketKey::of(*ts)).or_default();
        keys.push(alignment_key(*ts));
        values.push(*q);
    }
    raw.into_iter()
        .map(|(k, (keys, values))| Ok((k, AlignedSamples::new(keys, values)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    pub curtailable_fraction: f64,
    #[serde(default = "default_end_use")]
    pub curtailable_end_use: String,
    #[serde(default = "default_min_bucket")]
    pub min_bucket_size: usize,
}

fn default_end_use() -> String {
    "hvac".into()
}

fn default_min_bucket() -> usize {
    DEFAULT_MIN_BUCKET_SIZE
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            curtailable_fraction: DEFAULT_CURTAILABLE_FRACTION,
            curtailable_end_use: default_end_use(),
            min_bucket_size: DEFAULT_MIN_BUCKET_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BucketModel {
    pub month: u32,
    pub hour: u32,
    pub is_weekend: bool,
    pub keys: Vec<String>,
    pub samples: Vec<f64>,
    pub normal: NormalDistribution,
    pub fit_distance: f64,
}

impl BucketModel {
    pub fn key(&self) -> BucketKey {
        BucketKey {
            month: self.month,
            hour: self.hour,
            is_weekend: self.is_weekend,
        }
    }

    pub fn aligned(&self) -> Result<AlignedSamples> {
        AlignedSamples::new(self.keys.clone(), self.samples.clone())
    }

    pub fn empirical(&self) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::new(self.samples.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingModel {
    pub records: usize,
    pub days_decomposed: usize,
    pub days_skipped: usize,
    pub mean_residual_norm: f64,
    pub buckets: Vec<BucketModel>,
}

impl BuildingModel {
    pub fn bucket(&self, key: BucketKey) -> Option<&BucketModel> {
        self.buckets.iter().find(|b| b.key() == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroppedBucket {
    pub building_id: String,
    pub month: u32,
    pub hour: u32,
    pub is_weekend: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    pub curtailable_end_use: String,
    pub curtailable_fraction: f64,
    pub min_bucket_size: usize,
    pub source_sha256: Option<String>,
    pub shapes_sha256: Option<String>,
    pub records_read: usize,
    pub hours_estimated: usize,
    pub hours_retained: usize,
    pub days_skipped: usize,
    pub dropped_buckets: Vec<DroppedBucket>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapabilityModel {
    pub schema_version: u32,
    pub metadata: ModelMetadata,
    pub buildings: BTreeMap<String, BuildingModel>,
}

impl CapabilityModel {
    pub fn building(&self, id: &str) -> Result<&BuildingModel> {
        self.buildings
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("building {id:?} not in model")))
    }

    pub fn bucket(&self, building: &str, key: BucketKey) -> Result<&BucketModel> {
        self.building(building)?
            .bucket(key)
            .ok_or_else(|| Error::InvalidArgument(format!("{building}: no bucket for {key}")))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parse and check internal consistency.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (id, b) in &self.buildings {
            let mut seen = HashSet::new();
            for bm in &b.buckets {
                BucketKey::new(bm.month, bm.hour, bm.is_weekend)
                    .map_err(|e| Error::Model(format!("{id}: {e}")))?;
                if !seen.insert(bm.key()) {
                    return Err(Error::Model(format!("{id}: bucket {} repeated", bm.key())));
                }
                if bm.samples.is_empty() || bm.keys.len() != bm.samples.len() {
                    return Err(Error::Model(format!(
                        "{id}: bucket {} has {} keys for {} samples",
                        bm.key(),
                        bm.keys.len(),
                        bm.samples.len()
                    )));
                }
                bm.aligned()
                    .map_err(|e| Error::Model(format!("{id}: bucket {}: {e}", bm.key())))?;
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct BuildingOutcome {
    model: Option<BuildingModel>,
    hours: usize,
    dropped: Vec<DroppedBucket>,
    warnings: Vec<String>,
}

fn estimate_building(
    id: &str,
    records: &[LoadRecord],
    shapes: &EndUseShapes,
    config: &EstimationConfig,
) -> Result<BuildingOutcome> {
    let series = curtailable_series(records, shapes, config.curtailable_fraction)?;
    let mut buckets = Vec::new();
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();
    for (key, aligned) in bucket(&series.points)? {
        if aligned.len() < config.min_bucket_size {
            dropped.push(DroppedBucket {
                building_id: id.to_string(),
                month: key.month,
                hour: key.hour,
                is_weekend: key.is_weekend,
                samples: aligned.len(),
            });
            continue;
        }
        let fit = fit_normal(&aligned.distribution())?;
        if fit.normal.sigma() == 0.0 {
            warnings.push(format!("{id} {key}: zero spread, point-mass capability"));
        } else if fit.normal.clipped_mass() > CLIPPED_MASS_WARNING {
            warnings.push(format!(
                "{id} {key}: fitted normal puts {:.3e} of its mass below zero",
                fit.normal.clipped_mass()
            ));
        }
        buckets.push(BucketModel {
            month: key.month,
            hour: key.hour,
            is_weekend: key.is_weekend,
            keys: aligned.keys().to_vec(),
            samples: aligned.values().to_vec(),
            normal: fit.normal,
            fit_distance: fit.fit_distance,
        });
    }
    let n = series.residual_norms.len();
    let model = (!buckets.is_empty()).then(|| BuildingModel {
        records: records.len(),
        days_decomposed: series.days_decomposed,
        days_skipped: series.days_skipped,
        mean_residual_norm: if n == 0 {
            0.0
        } else {
            series.residual_norms.iter().sum::<f64>() / n as f64
        },
        buckets,
    });
    Ok(BuildingOutcome {
        model,
        hours: series.points.len(),
        dropped,
        warnings,
    })
}

/// Full pipeline: decompose, bucket, fit. Buildings with no retained
/// bucket are omitted; the result must retain at least one bucket.
pub fn build_capability_model(
    records: &[LoadRecord],
    shapes: &EndUseShapes,
    config: &EstimationConfig,
) -> Result<CapabilityModel> {
    if config.min_bucket_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "minimum bucket size must be >= 2, got {}",
            config.min_bucket_size
        )));
    }
    if shapes.curtailable().name != config.curtailable_end_use {
        return Err(Error::InvalidArgument(format!(
            "shapes mark {:?} curtailable but the configuration names {:?}",
            shapes.curtailable().name,
            config.curtailable_end_use
        )));
    }
    let mut by_building: BTreeMap<&str, Vec<LoadRecord>> = BTreeMap::new();
    for r in records {
        by_building.entry(&r.building_id).or_default().push(r.clone());
    }
    let outcomes: Vec<(&str, BuildingOutcome)> = by_building
        .par_iter()
        .map(|(id, recs)| Ok((*id, estimate_building(id, recs, shapes, config)?)))
        .collect::<Result<_>>()?;

    let mut metadata = ModelMetadata {
        curtailable_end_use: config.curtailable_end_use.clone(),
        curtailable_fraction: config.curtailable_fraction,
        min_bucket_size: config.min_bucket_size,
        source_sha256: None,
        shapes_sha256: None,
        records_read: records.len(),
        hours_estimated: 0,
        hours_retained: 0,
        days_skipped: 0,
        dropped_buckets: Vec::new(),
        warnings: Vec::new(),
    };
    let mut buildings = BTreeMap::new();
    for (id, out) in outcomes {
        metadata.hours_estimated += out.hours;
        metadata.dropped_buckets.extend(out.dropped);
        metadata.warnings.extend(out.warnings);
        match out.model {
            Some(m) => {
                metadata.days_skipped += m.days_skipped;
                metadata.hours_retained += m.buckets.iter().map(|b| b.samples.len()).sum::<usize>();
                buildings.insert(id.to_string(), m);
            }
            None => metadata
                .warnings
                .push(format!("{id}: no bucket reached the minimum size")),
        }
    }
    if buildings.is_empty() {
        return Err(Error::Estimation(
            "no bucket reached the minimum sample count".into(),
        ));
    }
    Ok(CapabilityModel {
        schema_version: SCHEMA_VERSION,
        metadata,
        buildings,
    })
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if headers.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!("expected header {:?}", expected.join(",")),
        ));
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Parse `timestamp,building_id,load_kwh`; `path` labels error messages.
pub fn parse_load_csv<R: Read>(reader: R, path: &Path) -> Result<Vec<LoadRecord>> {
    let mut rdr = csv_reader(reader);
    check_header(path, &rdr.headers()?.clone(), &["timestamp", "building_id", "load_kwh"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(parse_error(path, line, format!("expected 3 fields, got {}", row.len())));
        }
        let timestamp = parse_timestamp(&row[0])
            .ok_or_else(|| parse_error(path, line, format!("bad timestamp {:?}", &row[0])))?;
        if timestamp.minute() != 0 || timestamp.second() != 0 {
            return Err(parse_error(path, line, "timestamp is not on the hour"));
        }
        let building_id = row[1].to_string();
        if building_id.is_empty() {
            return Err(parse_error(path, line, "empty building_id"));
        }
        let load_kwh: f64 = row[2]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad load {:?}", &row[2])))?;
        if !load_kwh.is_finite() || load_kwh < 0.0 {
            return Err(parse_error(path, line, "load must be finite and >= 0"));
        }
        if !seen.insert((building_id.clone(), timestamp)) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate timestamp {timestamp} for {building_id}"),
            ));
        }
        out.push(LoadRecord {
            timestamp,
            building_id,
            load_kwh,
        });
    }
    Ok(out)
}

/// Parse `end_use,day_type,hour,weight`, keeping end uses in first-seen order.
pub fn parse_shapes_csv<R: Read>(reader: R, path: &Path, curtailable: &str) -> Result<EndUseShapes> {
    let mut rdr = csv_reader(reader);
    check_header(path, &rdr.headers()?.clone(), &["end_use", "day_type", "hour", "weight"])?;
    type Slots = [[Option<f64>; HOURS]; 2];
    let mut order: Vec<String> = Vec::new();
    let mut slots: BTreeMap<String, Slots> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(parse_error(path, line, format!("expected 4 fields, got {}", row.len())));
        }
        let name = row[0].to_string();
        let days: &[usize] = match &row[1] {
            "weekday" => &[0],
            "weekend" => &[1],
            "all" => &[0, 1],
            other => {
                return Err(parse_error(path, line, format!("unknown day_type {other:?}")));
            }
        };
        let hour: usize = row[2]
            .parse()
            .ok()
            .filter(|h| *h < HOURS)
            .ok_or_else(|| parse_error(path, line, format!("bad hour {:?}", &row[2])))?;
        let weight: f64 = row[3]
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite() && *w >= 0.0)
            .ok_or_else(|| parse_error(path, line, format!("bad weight {:?}", &row[3])))?;
        if !slots.contains_key(&name) {
            order.push(name.clone());
        }
        let entry = slots.entry(name.clone()).or_insert([[None; HOURS]; 2]);
        for &d in days {
            if entry[d][hour].replace(weight).is_some() {
                return Err(parse_error(
                    path,
                    line,
                    format!("{name} hour {hour} given twice"),
                ));
            }
        }
    }
    let mut end_uses = Vec::new();
    for name in order {
        let s = &slots[&name];
        let fill = |d: usize| -> Result<[f64; HOURS]> {
            let mut out = [0.0; HOURS];
            for (h, v) in s[d].iter().enumerate() {
                out[h] = v.ok_or_else(|| {
                    parse_error(path, 0, format!("{name} is missing hour {h}"))
                })?;
            }
            Ok(out)
        };
        end_uses.push(EndUse::new(name.clone(), fill(0)?, fill(1)?));
    }
    EndUseShapes::new(end_uses, curtailable)
}

pub fn read_load_csv(path: &Path) -> Result<(Vec<LoadRecord>, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok((parse_load_csv(bytes.as_slice(), path)?, sha256_hex(&bytes)))
}

pub fn read_shapes_csv(path: &Path, curtailable: &str) -> Result<(EndUseShapes, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok((parse_shapes_csv(bytes.as_slice(), path, curtailable)?, sha256_hex(&bytes)))
}

pub fn write_load_csv<W: Write>(records: &[LoadRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "building_id", "load_kwh"])?;
    for r in records {
        w.write_record([
            r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            r.building_id.clone(),
            format!("{:.4}", r.load_kwh),
        ])?;
    }
    w.flush().map_err(|e| Error::io("writing load csv", e))
}

/// Writes `all` rows when the weekday and weekend shapes coincide.
pub fn write_shapes_csv<W: Write>(shapes: &EndUseShapes, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["end_use", "day_type", "hour", "weight"])?;
    for u in shapes.end_uses() {
        let rows: &[(&str, &[f64; HOURS])] = if u.weekday == u.weekend {
            &[("all", &u.weekday)]
        } else {
            &[("weekday", &u.weekday), ("weekend", &u.weekend)]
        };
        for (day, shape) in rows {
            for (h, v) in shape.iter().enumerate() {
                w.write_record([u.name.clone(), day.to_string(), h.to_string(), v.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("writing shapes csv", e))
}

/// Path-free label for in-memory parses.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}

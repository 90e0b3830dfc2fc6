//! Negative-class synthesis.
//!
//! The event log only records scrubs that found an upset. The scrubs that
//! found nothing are synthesized here: latitude/longitude spread over the
//! events' bounding box, either by Poisson disk sampling (Bridson dart
//! throwing) or i.i.d. uniform draws, and altitude from a Gaussian fitted to
//! the events. Distances are Euclidean in raw degree space.

use std::f64::consts::{SQRT_2, TAU};
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventLog;
use crate::rng::{derive_seed, derived_rng, rng_from_seed, stream};
use crate::types::{GeoSample, LabeledDataset};

/// Empirical yield of Bridson sampling with 30 attempts per point:
/// `count ≈ FILL · area / r²` for boxes much larger than `r`.
pub const POISSON_FILL: f64 = 0.62;

/// Upper bound on acceleration-grid cells (4 bytes each).
const MAX_GRID_CELLS: usize = 1 << 26;

/// Regeneration rounds before giving up on an exact count.
const MAX_REGENERATIONS: u64 = 16;

/// A `(latitude, longitude)` pair in degrees.
pub type LatLon = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds2D {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Bounds2D {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let finite = [lat_min, lat_max, lon_min, lon_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("bounds must be finite"));
        }
        if lat_min >= lat_max {
            return Err(Error::DegenerateBounds { axis: "latitude" });
        }
        if lon_min >= lon_max {
            return Err(Error::DegenerateBounds { axis: "longitude" });
        }
        if lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max > 180.0 {
            return Err(Error::domain(format!(
                "bounds exceed the globe: lat [{lat_min}, {lat_max}], lon [{lon_min}, {lon_max}]"
            )));
        }
        Ok(Self {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        })
    }

    pub fn lat_span(&self) -> f64 {
        self.lat_max - self.lat_min
    }

    pub fn lon_span(&self) -> f64 {
        self.lon_max - self.lon_min
    }

    pub fn area(&self) -> f64 {
        self.lat_span() * self.lon_span()
    }

    pub fn diagonal(&self) -> f64 {
        self.lat_span().hypot(self.lon_span())
    }

    pub fn contains(&self, (lat, lon): LatLon) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

/// Gaussian altitude in km, truncated to positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltitudeModel {
    pub mean: f64,
    pub std_dev: f64,
}

impl AltitudeModel {
    pub fn new(mean: f64, std_dev: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::domain(format!(
                "altitude mean must be > 0, got {mean}"
            )));
        }
        if !(std_dev.is_finite() && std_dev >= 0.0) {
            return Err(Error::domain(format!(
                "altitude std_dev must be finite and >= 0, got {std_dev}"
            )));
        }
        Ok(Self { mean, std_dev })
    }

    /// Draws until the value is positive.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mean, self.std_dev).expect("validated parameters");
        loop {
            let alt = normal.sample(rng);
            if alt > 0.0 {
                return alt;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    #[default]
    PoissonDisk,
    Uniform,
}

impl FromStr for SamplingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" | "poisson_disk" => Ok(Self::PoissonDisk),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::domain(format!(
                "unknown sampling method `{other}` (want poisson or uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPlan {
    pub bounds: Bounds2D,
    pub altitude: AltitudeModel,
    pub target_count: usize,
    pub method: SamplingMethod,
    /// Fixed disk radius in degrees; derived from `target_count` when unset.
    pub disk_radius: Option<f64>,
    pub max_attempts_per_point: usize,
}

impl SynthesisPlan {
    /// Bounds and altitude fitted to `log`, radius left to `radius_for_count`.
    pub fn fitted(log: &EventLog, target_count: usize, method: SamplingMethod) -> Result<Self> {
        Ok(Self {
            bounds: fit_bounds(log)?,
            altitude: fit_altitude(log),
            target_count,
            method,
            disk_radius: None,
            max_attempts_per_point: 30,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.target_count == 0 {
            return Err(Error::domain("target_count must be >= 1"));
        }
        if self.max_attempts_per_point == 0 {
            return Err(Error::domain("max_attempts_per_point must be >= 1"));
        }
        if let Some(r) = self.disk_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::domain(format!("disk radius must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

/// Tight latitude/longitude box around the events.
pub fn fit_bounds(log: &EventLog) -> Result<Bounds2D> {
    let fold = |f: fn(&GeoSample) -> f64| {
        log.events()
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (lat_min, lat_max) = fold(GeoSample::latitude);
    let (lon_min, lon_max) = fold(GeoSample::longitude);
    Bounds2D::new(lat_min, lat_max, lon_min, lon_max)
}

/// Sample mean and population standard deviation of event altitudes.
pub fn fit_altitude(log: &EventLog) -> AltitudeModel {
    let n = log.len() as f64;
    let mean = log.events().iter().map(GeoSample::altitude).sum::<f64>() / n;
    let var = log
        .events()
        .iter()
        .map(|e| (e.altitude() - mean).powi(2))
        .sum::<f64>()
        / n;
    AltitudeModel {
        mean,
        std_dev: var.sqrt(),
    }
}

/// Background grid with cell side `r/√2`, so each cell holds at most one point.
struct DiskGrid {
    bounds: Bounds2D,
    cell: f64,
    cols: usize,
    rows: usize,
    cells: Vec<u32>,
    r2_guard: f64,
}

impl DiskGrid {
    fn new(bounds: Bounds2D, radius: f64) -> Result<Self> {
        let cell = radius / SQRT_2;
        let cols = (bounds.lat_span() / cell).ceil().max(1.0);
        let rows = (bounds.lon_span() / cell).ceil().max(1.0);
        if cols * rows > MAX_GRID_CELLS as f64 {
            return Err(Error::Infeasible(format!(
                "disk radius {radius} is too small for the sampling domain"
            )));
        }
        let (cols, rows) = (cols as usize, rows as usize);
        Ok(Self {
            bounds,
            cell,
            cols,
            rows,
            cells: vec![u32::MAX; cols * rows],
            // Slightly inflated so that accepted pairs satisfy hypot >= r
            // after rounding.
            r2_guard: radius * radius * (1.0 + 4.0 * f64::EPSILON),
        })
    }

    fn cell_of(&self, (lat, lon): LatLon) -> (usize, usize) {
        let c = ((lat - self.bounds.lat_min) / self.cell) as usize;
        let r = ((lon - self.bounds.lon_min) / self.cell) as usize;
        (c.min(self.cols - 1), r.min(self.rows - 1))
    }

    fn is_free(&self, p: LatLon, points: &[LatLon]) -> bool {
        let (c, r) = self.cell_of(p);
        let c_range = c.saturating_sub(2)..=(c + 2).min(self.cols - 1);
        for cc in c_range {
            for rr in r.saturating_sub(2)..=(r + 2).min(self.rows - 1) {
                let idx = self.cells[cc * self.rows + rr];
                if idx != u32::MAX {
                    let q = points[idx as usize];
                    let (dx, dy) = (p.0 - q.0, p.1 - q.1);
                    if dx * dx + dy * dy < self.r2_guard {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn insert(&mut self, p: LatLon, index: usize) {
        let (c, r) = self.cell_of(p);
        self.cells[c * self.rows + r] = index as u32;
    }
}

fn uniform_point<R: Rng>(bounds: &Bounds2D, rng: &mut R) -> LatLon {
    (
        rng.random_range(bounds.lat_min..bounds.lat_max),
        rng.random_range(bounds.lon_min..bounds.lon_max),
    )
}

fn validate_radius(radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::domain(format!(
            "disk radius must be > 0, got {radius}"
        )));
    }
    Ok(())
}

fn bridson(
    bounds: &Bounds2D,
    radius: f64,
    attempts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<LatLon>, DiskGrid)> {
    let mut grid = DiskGrid::new(*bounds, radius)?;
    let mut points = Vec::new();
    let mut active = Vec::new();

    let first = uniform_point(bounds, rng);
    grid.insert(first, 0);
    points.push(first);
    active.push(0usize);

    let r2 = radius * radius;
    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let center = points[active[slot]];
        let mut placed = false;
        for _ in 0..attempts {
            // Uniform by area over the annulus [r, 2r].
            let dist = (rng.random::<f64>() * 3.0 * r2 + r2).sqrt();
            let angle = rng.random::<f64>() * TAU;
            let cand = (center.0 + dist * angle.cos(), center.1 + dist * angle.sin());
            if bounds.contains(cand) && grid.is_free(cand, &points) {
                grid.insert(cand, points.len());
                active.push(points.len());
                points.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }
    Ok((points, grid))
}

/// Poisson disk sample over `bounds`: every pair of points is at least
/// `radius` apart, and the set is maximal up to `attempts` darts per
/// active point.
pub fn poisson_disk_sample(
    bounds: &Bounds2D,
    radius: f64,
    attempts: usize,
    seed: u64,
) -> Result<Vec<LatLon>> {
    validate_radius(radius)?;
    if attempts == 0 {
        return Err(Error::domain("attempts per point must be >= 1"));
    }
    let mut rng = derived_rng(seed, stream::POISSON, 0);
    Ok(bridson(bounds, radius, attempts, &mut rng)?.0)
}

/// Disk radius whose expected Poisson yield over `bounds` is about `n`.
pub fn radius_for_count(bounds: &Bounds2D, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("target count must be >= 1"));
    }
    let diag = bounds.diagonal();
    if n == 1 {
        return Ok(diag);
    }
    let r = (POISSON_FILL * bounds.area() / n as f64).sqrt().min(diag);
    let cell = r / SQRT_2;
    let cells = (bounds.lat_span() / cell).ceil() * (bounds.lon_span() / cell).ceil();
    if !(r > 0.0) || cells > MAX_GRID_CELLS as f64 {
        return Err(Error::Infeasible(format!(
            "{n} points cannot be placed over a {:.3e} square-degree box",
            bounds.area()
        )));
    }
    Ok(r)
}

/// Exactly `n` Poisson-disk points.
///
/// A Bridson pass at the chosen radius usually overshoots; the surplus is
/// removed at random (removal never violates the spacing). A shortfall is
/// topped up by rejection sampling at the same radius, and failing that the
/// radius shrinks and the pass repeats. A fixed `radius` is never shrunk.
pub fn poisson_disk_exact(
    bounds: &Bounds2D,
    n: usize,
    radius: Option<f64>,
    attempts: usize,
    seed: u64,
) -> Result<(Vec<LatLon>, f64)> {
    if n == 0 {
        return Err(Error::domain("target count must be >= 1"));
    }
    if attempts == 0 {
        return Err(Error::domain("attempts per point must be >= 1"));
    }
    let mut r = match radius {
        Some(r) => {
            validate_radius(r)?;
            r
        }
        None => radius_for_count(bounds, n)?,
    };
    for round in 0..MAX_REGENERATIONS {
        let mut rng = derived_rng(seed, stream::POISSON, round);
        let (mut points, mut grid) = bridson(bounds, r, attempts, &mut rng)?;

        if points.len() < n {
            let budget = attempts * n;
            for _ in 0..budget {
                if points.len() == n {
                    break;
                }
                let cand = uniform_point(bounds, &mut rng);
                if grid.is_free(cand, &points) {
                    grid.insert(cand, points.len());
                    points.push(cand);
                }
            }
        }

        if points.len() >= n {
            let mut trim_rng = derived_rng(seed, stream::TRIM, round);
            let mut keep = rand::seq::index::sample(&mut trim_rng, points.len(), n).into_vec();
            keep.sort_unstable();
            return Ok((keep.into_iter().map(|i| points[i]).collect(), r));
        }
        if radius.is_some() {
            break;
        }
        r *= (points.len() as f64 / n as f64).sqrt() * 0.97;
        if !(r > 0.0) {
            break;
        }
    }
    Err(Error::Infeasible(format!(
        "could not place {n} points at the required spacing"
    )))
}

/// `n` i.i.d. uniform points in `bounds`.
pub fn uniform_sample(bounds: &Bounds2D, n: usize, seed: u64) -> Result<Vec<LatLon>> {
    if n == 0 {
        return Err(Error::domain("sample count must be >= 1"));
    }
    let mut rng = derived_rng(seed, stream::UNIFORM, 0);
    Ok((0..n).map(|_| uniform_point(bounds, &mut rng)).collect())
}

/// `n` timestamps evenly spaced over `[first, last]`, rounded down to the second.
fn spread_timestamps(first: DateTime<Utc>, last: DateTime<Utc>, n: usize) -> Vec<DateTime<Utc>> {
    let span = (last - first).num_seconds().max(0) as i128;
    (0..n)
        .map(|i| {
            let offset = if n > 1 {
                span * i as i128 / (n as i128 - 1)
            } else {
                0
            };
            first + Duration::seconds(offset as i64)
        })
        .collect()
}

/// Synthesizes `plan.target_count` negatives (label 0) for `log`.
pub fn synthesize_negatives(
    log: &EventLog,
    plan: &SynthesisPlan,
    seed: u64,
) -> Result<LabeledDataset> {
    plan.validate()?;
    let points = match plan.method {
        SamplingMethod::PoissonDisk => {
            poisson_disk_exact(
                &plan.bounds,
                plan.target_count,
                plan.disk_radius,
                plan.max_attempts_per_point,
                seed,
            )?
            .0
        }
        SamplingMethod::Uniform => uniform_sample(&plan.bounds, plan.target_count, seed)?,
    };
    let mut alt_rng = derived_rng(seed, stream::ALTITUDE, 0);
    let times = spread_timestamps(log.first_event(), log.last_event(), points.len());
    let samples = points
        .iter()
        .zip(times)
        .map(|(&(lat, lon), t)| GeoSample::new(t, lat, lon, plan.altitude.sample(&mut alt_rng)))
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::single_class(samples, 0)
}

/// Clustered stand-in for a real event log: positions from a bivariate
/// Gaussian around `center` truncated at three `spread`s per axis (and to
/// valid coordinates), timestamps uniform over `time_range`.
pub fn generate_test_positives(
    n: usize,
    center: LatLon,
    spread: f64,
    altitude: AltitudeModel,
    time_range: (DateTime<Utc>, DateTime<Utc>),
    seed: u64,
) -> Result<EventLog> {
    if n < 2 {
        return Err(Error::domain("at least two events required"));
    }
    if !(spread.is_finite() && spread > 0.0) {
        return Err(Error::domain(format!("spread must be > 0, got {spread}")));
    }
    let (start, end) = time_range;
    if end < start {
        return Err(Error::domain("time range end precedes start"));
    }
    GeoSample::new(start, center.0, center.1, altitude.mean)?;

    let mut rng: ChaCha8Rng = rng_from_seed(derive_seed(seed, stream::POSITIVES, 0));
    let normal = Normal::new(0.0, spread).expect("spread validated");
    let span = (end - start).num_seconds();
    let limit = 3.0 * spread;
    let mut events = Vec::with_capacity(n);
    let mut draws = 0usize;
    while events.len() < n {
        draws += 1;
        if draws > 1000 * n {
            return Err(Error::Infeasible(
                "hotspot lies too far outside the valid coordinate range".into(),
            ));
        }
        let (dlat, dlon): (f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng));
        if dlat.abs() > limit || dlon.abs() > limit {
            continue;
        }
        let (lat, lon) = (center.0 + dlat, center.1 + dlon);
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..180.0).contains(&lon) {
            continue;
        }
        let t = start + Duration::seconds(rng.random_range(0..=span));
        let alt = altitude.sample(&mut rng);
        events.push(GeoSample::new(t, lat, lon, alt)?);
    }
    EventLog::new(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;

    fn at(lat: f64, lon: f64, alt: f64) -> GeoSample {
        GeoSample::new(
            parse_timestamp("2017-08-15T01:24:30Z").unwrap(),
            lat,
            lon,
            alt,
        )
        .unwrap()
    }

    fn square(side: f64) -> Bounds2D {
        Bounds2D::new(0.0, side, 0.0, side).unwrap()
    }

    fn min_pair_distance(points: &[LatLon]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1);
                best = best.min(d);
            }
        }
        best
    }

    fn nn_distances(points: &[LatLon]) -> Vec<f64> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| (p.0 - q.0).hypot(p.1 - q.1))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn variance(xs: &[f64]) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn bounds_fit_the_events() {
        let log = EventLog::new(vec![at(0.0, 0.0, 600.0), at(10.0, 20.0, 600.0)]).unwrap();
        let b = fit_bounds(&log).unwrap();
        assert_eq!(
            (b.lat_min, b.lat_max, b.lon_min, b.lon_max),
            (0.0, 10.0, 0.0, 20.0)
        );

        let single = EventLog::new(vec![at(1.0, 1.0, 600.0)]).unwrap();
        assert!(matches!(
            fit_bounds(&single),
            Err(Error::DegenerateBounds { .. })
        ));

        let same_lon = EventLog::new(vec![at(1.0, 5.0, 600.0), at(2.0, 5.0, 600.0)]).unwrap();
        assert!(matches!(
            fit_bounds(&same_lon),
            Err(Error::DegenerateBounds { axis: "longitude" })
        ));
    }

    #[test]
    fn altitude_fit_uses_population_sigma() {
        let log =
            |alts: &[f64]| EventLog::new(alts.iter().map(|&a| at(0.0, 0.0, a)).collect()).unwrap();
        assert_eq!(
            fit_altitude(&log(&[600.0, 600.0, 600.0])),
            AltitudeModel {
                mean: 600.0,
                std_dev: 0.0
            }
        );
        assert_eq!(
            fit_altitude(&log(&[590.0, 610.0])),
            AltitudeModel {
                mean: 600.0,
                std_dev: 10.0
            }
        );

        // Direct computation: deviations 0, 1, -1, 0 -> variance 2/4.
        let m = fit_altitude(&log(&[600.0, 601.0, 599.0, 600.0]));
        assert_eq!(m.mean, 600.0);
        assert!((m.std_dev - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn huge_radius_yields_one_point() {
        let b = square(10.0);
        let pts = poisson_disk_sample(&b, 15.0, 30, 1).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(b.contains(pts[0]));
        assert!(poisson_disk_sample(&b, 0.0, 30, 1).is_err());
        assert!(poisson_disk_sample(&b, -1.0, 30, 1).is_err());
    }

    #[test]
    fn unit_radius_on_ten_square() {
        // Yield over 50 seeds measured at 63..=75; hexagonal packing caps it near 115.
        for seed in 0..20 {
            let pts = poisson_disk_sample(&square(10.0), 1.0, 30, seed).unwrap();
            assert!(min_pair_distance(&pts) >= 1.0);
            assert!(
                (55..=100).contains(&pts.len()),
                "seed {seed}: {}",
                pts.len()
            );
            assert!(pts.iter().all(|&p| square(10.0).contains(p)));
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let b = square(10.0);
        assert_eq!(
            poisson_disk_sample(&b, 0.5, 30, 9).unwrap(),
            poisson_disk_sample(&b, 0.5, 30, 9).unwrap()
        );
        assert_ne!(
            poisson_disk_sample(&b, 0.5, 30, 9).unwrap(),
            poisson_disk_sample(&b, 0.5, 30, 10).unwrap()
        );
        assert_eq!(
            uniform_sample(&b, 100, 3).unwrap(),
            uniform_sample(&b, 100, 3).unwrap()
        );
        assert_eq!(
            poisson_disk_exact(&b, 80, None, 30, 4).unwrap(),
            poisson_disk_exact(&b, 80, None, 30, 4).unwrap()
        );
    }

    /// Oracle: bisect the radius whose Bridson yield is within 5% of `n`.
    fn calibrated_radius(b: &Bounds2D, n: usize) -> f64 {
        let (mut lo, mut hi) = (1e-3, b.diagonal());
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let mean = (0..8)
                .map(|s| poisson_disk_sample(b, mid, 30, s).unwrap().len() as f64)
                .sum::<f64>()
                / 8.0;
            if (mean - n as f64).abs() <= 0.05 * n as f64 {
                return mid;
            }
            if mean > n as f64 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        panic!("bisection did not converge");
    }

    #[test]
    fn radius_for_count_matches_calibration() {
        let b = square(10.0);
        assert_eq!(radius_for_count(&b, 1).unwrap(), b.diagonal());
        assert!(radius_for_count(&b, 0).is_err());

        // Edge effects inflate small-box yields, so the oracle radius sits a
        // little above the asymptotic one.
        let r = radius_for_count(&b, 80).unwrap();
        let oracle = calibrated_radius(&b, 80);
        assert!((r / oracle - 1.0).abs() < 0.15, "r={r} oracle={oracle}");

        let big = Bounds2D::new(-80.0, 20.0, -90.0, 10.0).unwrap();
        let r = radius_for_count(&big, 5000).unwrap();
        let oracle = calibrated_radius(&big, 5000);
        assert!((r / oracle - 1.0).abs() < 0.05, "r={r} oracle={oracle}");
    }

    #[test]
    fn exact_count_respects_spacing() {
        let b = square(10.0);
        for n in [1usize, 2, 17, 80, 400] {
            let (pts, r) = poisson_disk_exact(&b, n, None, 30, n as u64).unwrap();
            assert_eq!(pts.len(), n);
            if n > 1 {
                assert!(min_pair_distance(&pts) >= r);
            }
        }
        assert!(matches!(
            poisson_disk_exact(&b, 500, Some(2.0), 30, 0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn uniform_mean_is_central() {
        assert!(uniform_sample(&square(1.0), 0, 0).is_err());
        let one = uniform_sample(&square(1.0), 1, 0).unwrap();
        assert!(square(1.0).contains(one[0]));

        // sigma of a U(0,1) mean over 1e4 draws is 0.0029; 0.02 is ~7 sigma.
        let pts = uniform_sample(&square(1.0), 10_000, 11).unwrap();
        let lat = pts.iter().map(|p| p.0).sum::<f64>() / 1e4;
        let lon = pts.iter().map(|p| p.1).sum::<f64>() / 1e4;
        assert!((lat - 0.5).abs() < 0.02 && (lon - 0.5).abs() < 0.02);
    }

    #[test]
    fn uniform_passes_chi_squared() {
        let pts = uniform_sample(&square(1.0), 10_000, 2024).unwrap();
        let mut counts = [0u32; 100];
        for (x, y) in pts {
            let (i, j) = ((x * 10.0) as usize, (y * 10.0) as usize);
            counts[i.min(9) * 10 + j.min(9)] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - 100.0).powi(2) / 100.0)
            .sum();
        // 0.999 quantile of chi-squared with 99 degrees of freedom.
        assert!(chi2 < 148.230, "chi2={chi2}");
    }

    #[test]
    fn poisson_is_more_regular_than_uniform() {
        let b = square(1.0);
        for seed in 0..5 {
            let (poisson, _) = poisson_disk_exact(&b, 500, None, 30, seed).unwrap();
            let uniform = uniform_sample(&b, 500, seed).unwrap();
            let (vp, vu) = (
                variance(&nn_distances(&poisson)),
                variance(&nn_distances(&uniform)),
            );
            assert!(vp < vu, "seed {seed}: poisson {vp} vs uniform {vu}");
        }
    }

    #[test]
    fn negatives_have_exact_count_and_label() {
        let log = EventLog::new(vec![
            at(0.0, 0.0, 600.0),
            at(10.0, 20.0, 600.0),
            GeoSample::new(
                parse_timestamp("2017-08-16T01:24:30Z").unwrap(),
                5.0,
                5.0,
                600.0,
            )
            .unwrap(),
        ])
        .unwrap();
        let mut plan = SynthesisPlan::fitted(&log, 5, SamplingMethod::Uniform).unwrap();
        plan.altitude = AltitudeModel::new(600.0, 0.0).unwrap();
        let neg = synthesize_negatives(&log, &plan, 1).unwrap();
        assert_eq!(neg.len(), 5);
        assert!(neg.labels().iter().all(|&l| l == 0));
        assert!(neg
            .samples()
            .iter()
            .all(|s| plan.bounds.contains((s.latitude(), s.longitude()))));
        assert!(neg.samples().iter().all(|s| s.altitude() == 600.0));
        assert_eq!(neg.samples()[0].timestamp(), log.first_event());
        assert_eq!(neg.samples()[4].timestamp(), log.last_event());

        plan.method = SamplingMethod::PoissonDisk;
        plan.target_count = 300;
        let neg = synthesize_negatives(&log, &plan, 1).unwrap();
        assert_eq!(neg.len(), 300);
        assert_eq!(neg.negatives(), 300);
    }

    #[test]
    fn altitude_draws_stay_positive() {
        let m = AltitudeModel::new(1.0, 5.0).unwrap();
        let mut rng = rng_from_seed(5);
        assert!((0..2000).all(|_| m.sample(&mut rng) > 0.0));
    }

    #[test]
    fn hotspot_positives_cluster_at_center() {
        let start = parse_timestamp("2017-08-15T01:24:30Z").unwrap();
        let end = parse_timestamp("2018-05-28T05:46:25Z").unwrap();
        let alt = AltitudeModel::new(600.0, 5.0).unwrap();
        let log =
            generate_test_positives(2130, (-30.0, -40.0), 15.0, alt, (start, end), 3).unwrap();
        assert_eq!(log.len(), 2130);
        let n = log.len() as f64;
        let lat = log.events().iter().map(|e| e.latitude()).sum::<f64>() / n;
        let lon = log.events().iter().map(|e| e.longitude()).sum::<f64>() / n;
        // Three standard errors of the mean.
        let tol = 3.0 * 15.0 / n.sqrt();
        assert!(
            (lat + 30.0).abs() < tol && (lon + 40.0).abs() < tol,
            "{lat} {lon}"
        );
        assert!(log.first_event() >= start && log.last_event() <= end);

        assert!(generate_test_positives(1, (0.0, 0.0), 1.0, alt, (start, end), 0).is_err());
        let tight = generate_test_positives(10, (10.0, 20.0), 1e-12, alt, (start, end), 0).unwrap();
        assert!(tight
            .events()
            .iter()
            .all(|e| (e.latitude() - 10.0).abs() < 1e-9 && (e.longitude() - 20.0).abs() < 1e-9));
    }
}

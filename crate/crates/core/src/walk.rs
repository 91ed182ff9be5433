//! Rescaled geodesic random walks: the discrete chain `ζ^N`, its Poisson
//! subordination `ξ^N` and the piecewise-geodesic interpolation `ξ̂^N`.
//!
//! Randomness is split per path into independent ChaCha streams derived from
//! the master seed, so results do not depend on thread count or scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{ChartAtlas, Point};
use crate::error::{Error, Result};
use crate::geodesic::{exp_map, DistanceRoutine, OdeConfig};
use crate::linalg::Vector;
use crate::measure::MeasureFamily;
use crate::metric::FinslerMetric;

/// Stream used for the increments of path `i`.
pub const STREAM_INCREMENTS: u64 = 0;
/// Stream used for the Poisson clock of path `i`.
pub const STREAM_CLOCK: u64 = 1;

/// Generator for one purpose of one path.
pub fn path_rng(seed: u64, path: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(2).wrapping_add(purpose));
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Discrete,
    Subordinated,
    Interpolated,
}

impl PathKind {
    pub fn label(self) -> &'static str {
        match self {
            PathKind::Discrete => "discrete",
            PathKind::Subordinated => "subordinated",
            PathKind::Interpolated => "interpolated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub t: f64,
    pub point: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    pub kind: PathKind,
    pub n_scale: f64,
    pub records: Vec<PathRecord>,
    /// `increments[k]` is the tangent vector at `records[k]` (in its chart)
    /// whose geodesic leads to `records[k + 1]`. Discrete paths only.
    pub increments: Vec<Vector>,
}

impl WalkPath {
    pub fn start(&self) -> &Point {
        &self.records[0].point
    }

    pub fn end(&self) -> &Point {
        &self.records.last().expect("paths are never empty").point
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    /// Time span covered by the path records.
    pub fn horizon(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    /// Value of a piecewise-constant (right-continuous) path at time `t`.
    pub fn value_at(&self, t: f64) -> &Point {
        let idx = self.records.partition_point(|r| r.t <= t);
        &self.records[idx.max(1) - 1].point
    }
}

/// Run parameters shared by the simulation front ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(rename = "N")]
    pub n_scale: f64,
    /// Number of discrete steps; when absent, `⌈N·horizon⌉`.
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub start: Vec<f64>,
    #[serde(default)]
    pub start_chart: usize,
    #[serde(default = "default_h_ode")]
    pub h_ode: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_kind")]
    pub kind: PathKind,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_h_ode() -> f64 {
    0.25
}
fn default_paths() -> usize {
    1
}
fn default_kind() -> PathKind {
    PathKind::Discrete
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_scale >= 1.0) {
            return Err(Error::InvalidParameter(format!("N must be at least 1, got {}", self.n_scale)));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be nonnegative, got {}", self.horizon)));
        }
        if !(self.h_ode > 0.0) {
            return Err(Error::InvalidParameter(format!("h_ode must be positive, got {}", self.h_ode)));
        }
        Ok(())
    }

    pub fn start_point(&self) -> Point {
        Point::new(self.start_chart, Vector::from_slice(&self.start))
    }

    pub fn steps(&self) -> usize {
        self.n_steps.unwrap_or_else(|| (self.n_scale * self.horizon - 1e-9).ceil().max(0.0) as usize)
    }

    pub fn ode(&self) -> OdeConfig {
        OdeConfig::with_step(self.h_ode)
    }
}

/// Metric, atlas and step distribution bundled for walk simulation.
#[derive(Clone, Copy)]
pub struct Walker<'a> {
    pub metric: &'a dyn FinslerMetric,
    pub atlas: &'a ChartAtlas,
    pub family: &'a MeasureFamily,
    pub ode: OdeConfig,
}

impl<'a> Walker<'a> {
    pub fn new(
        metric: &'a dyn FinslerMetric,
        atlas: &'a ChartAtlas,
        family: &'a MeasureFamily,
        ode: OdeConfig,
    ) -> Self {
        Walker { metric, atlas, family, ode }
    }

    /// One step `p ↦ exp_p(Y^N)`, returning the new point and the increment.
    pub fn walk_step<R: Rng + ?Sized>(&self, p: &Point, n_scale: f64, rng: &mut R) -> Result<(Point, Vector)> {
        let p = self.atlas.transition(p)?;
        let y = self.family.rescaled_sample(self.metric, &p, n_scale, rng)?;
        let q = exp_map(self.metric, self.atlas, &p, &y, &self.ode)?;
        Ok((q, y))
    }

    /// `ζ_0 = start, ζ_{k+1} = exp_{ζ_k}(Y^N_{k+1})`, recorded at times `k/N`.
    pub fn run_discrete<R: Rng + ?Sized>(
        &self,
        start: &Point,
        n_scale: f64,
        n_steps: usize,
        rng: &mut R,
    ) -> Result<WalkPath> {
        let mut p = self.atlas.transition(start)?;
        let mut records = Vec::with_capacity(n_steps + 1);
        let mut increments = Vec::with_capacity(n_steps);
        records.push(PathRecord { t: 0.0, point: p });
        for k in 1..=n_steps {
            let (q, y) = self.walk_step(&p, n_scale, rng)?;
            increments.push(y);
            p = q;
            records.push(PathRecord { t: k as f64 / n_scale, point: p });
        }
        Ok(WalkPath { kind: PathKind::Discrete, n_scale, records, increments })
    }

    /// Discrete path number `path` of a run with master seed `seed`.
    pub fn discrete_path(&self, start: &Point, n_scale: f64, n_steps: usize, seed: u64, path: u64) -> Result<WalkPath> {
        let mut rng = path_rng(seed, path, STREAM_INCREMENTS);
        self.run_discrete(start, n_scale, n_steps, &mut rng)
    }

    /// `ξ^N` on `[0, horizon]` for path number `path`. The Poisson clock is
    /// drawn first from its own stream, then exactly as many discrete steps
    /// as it needs are generated from the increment stream.
    pub fn subordinated_path(
        &self,
        start: &Point,
        n_scale: f64,
        horizon: f64,
        seed: u64,
        path: u64,
    ) -> Result<WalkPath> {
        let jumps = poisson_jump_times(n_scale, horizon, &mut path_rng(seed, path, STREAM_CLOCK));
        let discrete = self.discrete_path(start, n_scale, jumps.len(), seed, path)?;
        Ok(subordinate_with_clock(&discrete, &jumps))
    }

    /// `ξ̂^N_t = exp_{ζ_k}(N(t − k/N) Y_{k+1})` for `t ∈ [k/N, (k+1)/N]`.
    pub fn interpolate(&self, discrete: &WalkPath, times: &[f64]) -> Result<WalkPath> {
        let n = discrete.n_scale;
        let horizon = discrete.steps() as f64 / n;
        let mut records = Vec::with_capacity(times.len());
        for &t in times {
            if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) {
                return Err(Error::OutOfHorizon { t, horizon });
            }
            let scaled = t * n;
            let k = (scaled.floor() as usize).min(discrete.steps());
            let frac = scaled - k as f64;
            let point = if frac <= 0.0 || k == discrete.steps() {
                discrete.records[k].point
            } else {
                let base = &discrete.records[k].point;
                exp_map(self.metric, self.atlas, base, &(discrete.increments[k] * frac), &self.ode)?
            };
            records.push(PathRecord { t, point });
        }
        Ok(WalkPath { kind: PathKind::Interpolated, n_scale: n, records, increments: Vec::new() })
    }
}

/// Jump times of a rate-`N` Poisson process on `[0, horizon]`.
pub fn poisson_jump_times<R: Rng + ?Sized>(n_scale: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap / n_scale;
        if t > horizon {
            return times;
        }
        times.push(t);
    }
}

/// `ξ_t = ζ_{Q_{Nt}}` on `[0, horizon]` with a fresh clock drawn from `rng`.
pub fn subordinate<R: Rng + ?Sized>(discrete: &WalkPath, horizon: f64, rng: &mut R) -> Result<WalkPath> {
    let jumps = poisson_jump_times(discrete.n_scale, horizon, rng);
    if jumps.len() > discrete.steps() {
        return Err(Error::InsufficientSteps { available: discrete.steps(), needed: jumps.len() });
    }
    Ok(subordinate_with_clock(discrete, &jumps))
}

fn subordinate_with_clock(discrete: &WalkPath, jumps: &[f64]) -> WalkPath {
    let mut records = Vec::with_capacity(jumps.len() + 1);
    records.push(PathRecord { t: 0.0, point: discrete.records[0].point });
    for (k, &t) in jumps.iter().enumerate() {
        records.push(PathRecord { t, point: discrete.records[k + 1].point });
    }
    WalkPath { kind: PathKind::Subordinated, n_scale: discrete.n_scale, records, increments: Vec::new() }
}

/// First record time at which `d(center, path_t) > delta`, or `+∞`.
pub fn exit_time(path: &WalkPath, center: &Point, delta: f64, routine: &dyn DistanceRoutine) -> Result<f64> {
    for r in &path.records {
        if routine.exceeds(center, &r.point, delta)? {
            return Ok(r.t);
        }
    }
    Ok(f64::INFINITY)
}

/// Runs `f(path_index)` for every path in parallel and returns the results in
/// path order. Output is independent of the number of worker threads.
pub fn simulate_paths_map<T, F>(n_paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n_paths as u64).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::euclidean;

    #[test]
    fn zero_steps_is_single_record() {
        let metric = euclidean(2);
        let atlas = ChartAtlas::flat(2);
        let family = MeasureFamily::lebesgue_disc();
        let w = Walker::new(&metric, &atlas, &family, OdeConfig::default());
        let path = w.discrete_path(&Point::new(0, Vector::zeros(2)), 10.0, 0, 1, 0).unwrap();
        assert_eq!(path.records.len(), 1);
    }

    #[test]
    fn point_mass_step_is_translation() {
        let metric = euclidean(2);
        let atlas = ChartAtlas::flat(2);
        let v = Vector::from_slice(&[0.3, -0.1]);
        let family = MeasureFamily::point_mass(v);
        let w = Walker::new(&metric, &atlas, &family, OdeConfig::default());
        let p = Point::new(0, Vector::from_slice(&[1.0, 1.0]));
        let (q, _) = w.walk_step(&p, 1.0, &mut path_rng(0, 0, 0)).unwrap();
        assert_eq!(q.coords, p.coords + v);
    }

    #[test]
    fn subordinate_needs_enough_steps() {
        let metric = euclidean(1);
        let atlas = ChartAtlas::flat(1);
        let family = MeasureFamily::lebesgue_disc();
        let w = Walker::new(&metric, &atlas, &family, OdeConfig::default());
        let path = w.discrete_path(&Point::new(0, Vector::zeros(1)), 100.0, 3, 9, 0).unwrap();
        let err = subordinate(&path, 1.0, &mut path_rng(9, 0, STREAM_CLOCK)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSteps { available: 3, .. }));
        let zero = subordinate(&path, 0.0, &mut path_rng(9, 0, STREAM_CLOCK)).unwrap();
        assert_eq!(zero.records.len(), 1);
    }

    #[test]
    fn interpolation_hits_slab_endpoints() {
        let metric = euclidean(2);
        let atlas = ChartAtlas::flat(2);
        let family = MeasureFamily::lebesgue_disc();
        let w = Walker::new(&metric, &atlas, &family, OdeConfig::default());
        let path = w.discrete_path(&Point::new(0, Vector::zeros(2)), 4.0, 4, 5, 0).unwrap();
        let interp = w.interpolate(&path, &[0.0, 0.25, 0.375, 1.0]).unwrap();
        assert_eq!(interp.records[1].point, path.records[1].point);
        assert_eq!(interp.records[3].point, path.records[4].point);
        let mid = (path.records[1].point.coords + path.records[2].point.coords) * 0.5;
        assert!((interp.records[2].point.coords - mid).max_abs() < 1e-15);
        assert!(matches!(w.interpolate(&path, &[1.5]), Err(Error::OutOfHorizon { .. })));
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = path_rng(1, 0, 0).random();
        let b: u64 = path_rng(1, 0, 1).random();
        let c: u64 = path_rng(1, 1, 0).random();
        assert!(a != b && a != c && b != c);
    }
}

//! Geodesic ODE `ẋ = y, ẏ = −Γ(x, y) y y` by fixed-step RK4, the exponential
//! map and short-range distances by shooting.

use serde::{Deserialize, Serialize};

use crate::atlas::{ChartAtlas, Point};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::metric::{spray, DiffSteps, FinslerMetric};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub h_ode: f64,
    /// Allowed drift of `F(x, ẋ)` along a trajectory.
    pub tol_energy: f64,
    #[serde(skip)]
    pub diff: DiffSteps,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { h_ode: 1e-3, tol_energy: 1e-6, diff: DiffSteps::default() }
    }
}

impl OdeConfig {
    pub fn with_step(h_ode: f64) -> Self {
        OdeConfig { h_ode, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub point: Point,
    pub velocity: Vector,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    pub step: f64,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory has at least one state")
    }
}

struct Integrator<'a> {
    metric: &'a dyn FinslerMetric,
    atlas: &'a ChartAtlas,
    diff: DiffSteps,
}

impl Integrator<'_> {
    fn rhs(&self, chart: usize, x: &Vector, y: &Vector) -> Result<(Vector, Vector)> {
        Ok((*y, -spray(self.metric, chart, x, y, self.diff)?))
    }

    fn rk4(&self, p: &Point, y: &Vector, h: f64) -> Result<(Point, Vector)> {
        let c = p.chart;
        let x = p.coords;
        let (k1x, k1y) = self.rhs(c, &x, y)?;
        let (k2x, k2y) = self.rhs(c, &(x + k1x * (0.5 * h)), &(*y + k1y * (0.5 * h)))?;
        let (k3x, k3y) = self.rhs(c, &(x + k2x * (0.5 * h)), &(*y + k2y * (0.5 * h)))?;
        let (k4x, k4y) = self.rhs(c, &(x + k3x * h), &(*y + k3y * h))?;
        let nx = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        let ny = *y + (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (h / 6.0);
        if !self.atlas.contains(c, &nx) || !ny.is_finite() {
            return Err(Error::LeftAtlas { chart: c });
        }
        self.atlas.transition_with_tangent(&Point::new(c, nx), &ny).map_err(|_| Error::LeftAtlas { chart: c })
    }

    fn check_energy(&self, p: &Point, y: &Vector, f0: f64, tol: f64) -> Result<()> {
        let drift = (self.metric.eval(p.chart, &p.coords, y) - f0).abs();
        if !(drift <= tol) {
            return Err(Error::EnergyDriftExceeded { drift, tolerance: tol });
        }
        Ok(())
    }
}

fn step_count(duration: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!("need h_ode > 0 and T ≥ 0, got h_ode = {h}, T = {duration}")));
    }
    Ok(((duration / h) - 1e-9).ceil().max(0.0) as usize)
}

/// Integrates the geodesic with initial velocity `y0` on `[0, duration]`.
///
/// The uniform step is `duration / n` with `n = ⌈duration / h_ode⌉`, so the
/// grid ends exactly at `duration`. Chart switches happen between steps.
pub fn geodesic_flow(
    metric: &dyn FinslerMetric,
    atlas: &ChartAtlas,
    p: &Point,
    y0: &Vector,
    duration: f64,
    cfg: &OdeConfig,
) -> Result<Trajectory> {
    let n = step_count(duration, cfg.h_ode)?;
    let (start, y0) = atlas.transition_with_tangent(p, y0)?;
    let mut states = vec![GeodesicState { point: start, velocity: y0, t: 0.0 }];
    if n == 0 || y0.max_abs() == 0.0 {
        let step = if n == 0 { 0.0 } else { duration / n as f64 };
        for i in 1..=n {
            states.push(GeodesicState { point: start, velocity: y0, t: i as f64 * step });
        }
        return Ok(Trajectory { states, step });
    }
    let h = duration / n as f64;
    let f0 = metric.eval(start.chart, &start.coords, &y0);
    let integ = Integrator { metric, atlas, diff: cfg.diff };
    let (mut point, mut y) = (start, y0);
    for i in 1..=n {
        (point, y) = if metric.is_flat() {
            (Point::new(point.chart, point.coords + y * h), y)
        } else {
            integ.rk4(&point, &y, h)?
        };
        integ.check_energy(&point, &y, f0, cfg.tol_energy)?;
        states.push(GeodesicState { point, velocity: y, t: i as f64 * h });
    }
    Ok(Trajectory { states, step: h })
}

/// `exp_p(Y) = γ_Y(1)`, without storing the trajectory. The speed is checked
/// at the endpoint only.
pub fn exp_map(
    metric: &dyn FinslerMetric,
    atlas: &ChartAtlas,
    p: &Point,
    y: &Vector,
    cfg: &OdeConfig,
) -> Result<Point> {
    if y.max_abs() == 0.0 {
        return atlas.transition(p);
    }
    if metric.is_flat() {
        return atlas.transition(&Point::new(p.chart, p.coords + *y));
    }
    let n = step_count(1.0, cfg.h_ode)?.max(1);
    let h = 1.0 / n as f64;
    let integ = Integrator { metric, atlas, diff: cfg.diff };
    let (mut point, mut v) = atlas.transition_with_tangent(p, y)?;
    let f0 = metric.eval(point.chart, &point.coords, &v);
    for _ in 0..n {
        (point, v) = integ.rk4(&point, &v, h)?;
    }
    integ.check_energy(&point, &v, f0, cfg.tol_energy.max(1e-12 * f0))?;
    Ok(point)
}

/// Settings for the shooting distance routine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingConfig {
    pub ode: OdeConfig,
    pub max_iter: usize,
    pub tolerance: f64,
    /// Largest coordinate separation accepted, in chart units.
    pub radius_cap: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig { ode: OdeConfig::with_step(0.05), max_iter: 40, tolerance: 1e-10, radius_cap: 0.5 }
    }
}

/// One-way distance `d(p, q) = F(p, Y)` where `exp_p(Y) = q`, found by Newton
/// iteration on `Y` with a finite-difference Jacobian. Start vectors are
/// `q − p` and its rotations by multiples of 45° (in dimension 2).
pub fn one_way_distance(
    metric: &dyn FinslerMetric,
    atlas: &ChartAtlas,
    p: &Point,
    q: &Point,
    cfg: &ShootingConfig,
) -> Result<f64> {
    let q = atlas.to_chart(q, p.chart, Some(&p.coords))?;
    let delta = q.coords - p.coords;
    if delta.max_abs() == 0.0 {
        return Ok(0.0);
    }
    if delta.norm() > cfg.radius_cap {
        return Err(Error::ShootingDiverged { residual: delta.norm() });
    }
    if metric.is_flat() {
        return Ok(metric.eval(p.chart, &p.coords, &delta));
    }
    let mut best = f64::INFINITY;
    for start in start_vectors(&delta) {
        match newton_shoot(metric, atlas, p, &q, start, cfg) {
            Ok(y) => return Ok(metric.eval(p.chart, &p.coords, &y)),
            Err(Error::ShootingDiverged { residual }) => best = best.min(residual),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ShootingDiverged { residual: best })
}

/// `max(d(p, q), d(q, p))`.
pub fn symmetrized_distance(
    metric: &dyn FinslerMetric,
    atlas: &ChartAtlas,
    p: &Point,
    q: &Point,
    cfg: &ShootingConfig,
) -> Result<f64> {
    Ok(one_way_distance(metric, atlas, p, q, cfg)?.max(one_way_distance(metric, atlas, q, p, cfg)?))
}

fn start_vectors(delta: &Vector) -> Vec<Vector> {
    let mut out = vec![*delta];
    if delta.dim() == 2 {
        for k in 1..8 {
            let (s, c) = (k as f64 * std::f64::consts::FRAC_PI_4).sin_cos();
            out.push(Vector::from_slice(&[c * delta[0] - s * delta[1], s * delta[0] + c * delta[1]]));
        }
    }
    out
}

fn newton_shoot(
    metric: &dyn FinslerMetric,
    atlas: &ChartAtlas,
    p: &Point,
    q: &Point,
    mut y: Vector,
    cfg: &ShootingConfig,
) -> Result<Vector> {
    let m = y.dim();
    let endpoint = |y: &Vector| -> Result<Vector> {
        let e = exp_map(metric, atlas, p, y, &cfg.ode)?;
        Ok(atlas.to_chart(&e, p.chart, Some(&q.coords))?.coords)
    };
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let r = match endpoint(&y) {
            Ok(e) => e - q.coords,
            Err(Error::EnergyDriftExceeded { .. }) | Err(Error::LeftAtlas { .. }) | Err(Error::NoCoveringChart) => {
                return Err(Error::ShootingDiverged { residual })
            }
            Err(e) => return Err(e),
        };
        residual = r.norm();
        if residual <= cfg.tolerance {
            return Ok(y);
        }
        let h = 1e-6 * y.norm().max(1e-3);
        let mut cols = Vec::with_capacity(m);
        for j in 0..m {
            let e = Vector::basis(m, j) * h;
            let plus = endpoint(&(y + e)).map_err(|_| Error::ShootingDiverged { residual })?;
            let minus = endpoint(&(y - e)).map_err(|_| Error::ShootingDiverged { residual })?;
            cols.push((plus - minus) * (0.5 / h));
        }
        let jac = Matrix::from_fn(m, |i, j| cols[j][i]);
        let step = solve(&jac, &r).ok_or(Error::ShootingDiverged { residual })?;
        let scale = (0.5 * y.norm().max(1e-3) / step.norm()).min(1.0);
        y -= step * scale;
        if !y.is_finite() || y.norm() > 4.0 * cfg.radius_cap {
            break;
        }
    }
    Err(Error::ShootingDiverged { residual })
}

/// Gaussian elimination with partial pivoting for the small Newton systems.
fn solve(a: &Matrix, b: &Vector) -> Option<Vector> {
    let m = a.dim();
    let mut rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| a[(i, j)]).chain([b[i]]).collect()).collect();
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))?;
        if rows[pivot][col].abs() < 1e-300 {
            return None;
        }
        rows.swap(col, pivot);
        for r in col + 1..m {
            let factor = rows[r][col] / rows[col][col];
            for c in col..=m {
                rows[r][c] -= factor * rows[col][c];
            }
        }
    }
    let mut x = Vector::zeros(m);
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| rows[i][j] * x[j]).sum();
        x[i] = (rows[i][m] - s) / rows[i][i];
    }
    Some(x)
}

/// Distance used for exit-time detection.
pub trait DistanceRoutine: Send + Sync {
    fn distance(&self, p: &Point, q: &Point) -> Result<f64>;

    /// Whether `d(p, q) > delta`.
    fn exceeds(&self, p: &Point, q: &Point, delta: f64) -> Result<bool> {
        Ok(self.distance(p, q)? > delta)
    }
}

/// Symmetrized shooting distance of a metric.
pub struct ShootingDistance<'a> {
    pub metric: &'a dyn FinslerMetric,
    pub atlas: &'a ChartAtlas,
    pub cfg: ShootingConfig,
}

impl DistanceRoutine for ShootingDistance<'_> {
    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        symmetrized_distance(self.metric, self.atlas, p, q, &self.cfg)
    }
}

/// Great-circle angle on the unit sphere of the atlas embedding.
pub struct GreatCircleDistance<'a> {
    pub atlas: &'a ChartAtlas,
}

impl DistanceRoutine for GreatCircleDistance<'_> {
    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        let c = self.atlas.chord(p, q);
        if !c.is_finite() {
            return Err(Error::NoCoveringChart);
        }
        Ok(2.0 * (0.5 * c).min(1.0).asin())
    }
}

/// Decides `d > δ` with a cheap proxy `d̃` satisfying `lower·d̃ ≤ d ≤ upper·d̃`,
/// falling back to the exact routine only inside the ambiguous band.
pub struct ScreenedDistance<P, E> {
    pub proxy: P,
    pub exact: E,
    pub lower: f64,
    pub upper: f64,
}

impl<P: DistanceRoutine, E: DistanceRoutine> DistanceRoutine for ScreenedDistance<P, E> {
    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.exact.distance(p, q)
    }

    fn exceeds(&self, p: &Point, q: &Point, delta: f64) -> Result<bool> {
        let d = self.proxy.distance(p, q)?;
        if self.upper * d <= delta {
            return Ok(false);
        }
        if self.lower * d > delta {
            return Ok(true);
        }
        self.exact.exceeds(p, q, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{euclidean, round_sphere};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn euclidean_flow_is_straight() {
        let atlas = ChartAtlas::flat(2);
        let traj = geodesic_flow(
            &euclidean(2),
            &atlas,
            &Point::new(0, Vector::zeros(2)),
            &Vector::from_slice(&[1.0, 0.0]),
            1.0,
            &OdeConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.states.len(), 1001);
        assert!((traj.last().point.coords - Vector::from_slice(&[1.0, 0.0])).max_abs() < 1e-12);
    }

    #[test]
    fn zero_vector_and_zero_time() {
        let atlas = ChartAtlas::sphere();
        let p = Point::new(0, Vector::from_slice(&[0.2, 0.3]));
        let s = round_sphere();
        assert_eq!(exp_map(&s, &atlas, &p, &Vector::zeros(2), &OdeConfig::default()).unwrap(), p);
        let t = geodesic_flow(&s, &atlas, &p, &Vector::from_slice(&[1.0, 0.0]), 0.0, &OdeConfig::default()).unwrap();
        assert_eq!(t.states.len(), 1);
    }

    #[test]
    fn quarter_meridian_reaches_pole() {
        let atlas = ChartAtlas::sphere();
        let p = Point::new(0, Vector::zeros(2));
        let end = exp_map(&round_sphere(), &atlas, &p, &Vector::from_slice(&[0.0, FRAC_PI_2]), &OdeConfig::default())
            .unwrap();
        let e = atlas.embed(&end).unwrap();
        assert!((e[2] - 1.0).abs() < 1e-10 && e[0].abs() < 1e-10 && e[1].abs() < 1e-10);
    }

    #[test]
    fn euclidean_distance_is_norm() {
        let atlas = ChartAtlas::flat(2);
        let p = Point::new(0, Vector::zeros(2));
        let q = Point::new(0, Vector::from_slice(&[0.3, 0.4]));
        let d = symmetrized_distance(&euclidean(2), &atlas, &p, &q, &ShootingConfig::default()).unwrap();
        assert!((d - 0.5).abs() < 1e-14);
        assert_eq!(symmetrized_distance(&euclidean(2), &atlas, &p, &p, &ShootingConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn sphere_shooting_matches_great_circle() {
        let atlas = ChartAtlas::sphere();
        let p = Point::new(0, Vector::from_slice(&[0.1, 0.4]));
        let q = Point::new(0, Vector::from_slice(&[0.35, 0.25]));
        let d = symmetrized_distance(&round_sphere(), &atlas, &p, &q, &ShootingConfig::default()).unwrap();
        let gc = GreatCircleDistance { atlas: &atlas }.distance(&p, &q).unwrap();
        assert!((d - gc).abs() < 1e-8, "{d} vs {gc}");
    }

    #[test]
    fn far_points_are_rejected() {
        let atlas = ChartAtlas::sphere();
        let p = Point::new(0, Vector::zeros(2));
        let q = Point::new(0, Vector::from_slice(&[0.9, 0.0]));
        let err = one_way_distance(&round_sphere(), &atlas, &p, &q, &ShootingConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ShootingDiverged { .. }));
    }
}

//! Finsler metrics on charts: fundamental tensor, formal Christoffel symbols
//! and the ellipticity diagnostic.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::atlas::ChartId;
use crate::error::{Error, Result};
use crate::linalg::{Christoffel, Matrix, Vector};

/// Directions shorter than this are rejected by `fundamental_tensor` and `christoffel`.
pub const MIN_DIRECTION_NORM: f64 = 1e-8;

/// Largest accepted condition number of the fundamental tensor.
pub const MAX_CONDITION: f64 = 1e10;

/// Finite-difference steps: `h_y` is relative to `|y|`, `h_x` is in chart units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffSteps {
    pub h_y: f64,
    pub h_x: f64,
}

impl Default for DiffSteps {
    fn default() -> Self {
        DiffSteps { h_y: 1e-4, h_x: 1e-4 }
    }
}

/// A Finsler function `F(x, y)` given chart by chart.
///
/// Implementors supply `eval`; the fundamental tensor and Christoffel symbols
/// fall back to finite differences unless an analytic form is provided.
pub trait FinslerMetric: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    /// `F(x, -y) == F(x, y)` for all arguments.
    fn is_reversible(&self) -> bool;

    fn eval(&self, chart: ChartId, x: &Vector, y: &Vector) -> f64;

    fn analytic_fundamental_tensor(&self, _chart: ChartId, _x: &Vector, _y: &Vector) -> Option<Matrix> {
        None
    }

    fn analytic_christoffel(&self, _chart: ChartId, _x: &Vector, _y: &Vector) -> Option<Christoffel> {
        None
    }

    /// Centroid of the unit ball `D_xM` in chart coordinates, when known in closed form.
    fn disc_centroid(&self, _chart: ChartId, _x: &Vector) -> Option<Vector> {
        None
    }

    /// True when every geodesic is a straight coordinate line (`Γ ≡ 0` in the
    /// single chart), so that `exp_p(Y) = p + Y`.
    fn is_flat(&self) -> bool {
        false
    }
}

fn check_direction(y: &Vector) -> Result<f64> {
    let norm = y.norm();
    if !(norm >= MIN_DIRECTION_NORM) {
        return Err(Error::SingularDirection { norm });
    }
    Ok(norm)
}

/// `g_ij = (½F²)_{y^i y^j}` at `(x, y)`.
///
/// Uses the metric's analytic tensor when present, otherwise central second
/// differences of `½F²` around the unit-rescaled `y` with step `steps.h_y`.
pub fn fundamental_tensor(
    metric: &dyn FinslerMetric,
    chart: ChartId,
    x: &Vector,
    y: &Vector,
    steps: DiffSteps,
) -> Result<Matrix> {
    let norm = check_direction(y)?;
    let g = match metric.analytic_fundamental_tensor(chart, x, y) {
        Some(g) => g,
        None => fd_fundamental_tensor(metric, chart, x, &(*y * (1.0 / norm)), steps.h_y),
    };
    g.cholesky()?;
    Ok(g)
}

fn fd_fundamental_tensor(metric: &dyn FinslerMetric, chart: ChartId, x: &Vector, y: &Vector, h: f64) -> Matrix {
    let m = y.dim();
    let energy = |v: Vector| {
        let f = metric.eval(chart, x, &v);
        0.5 * f * f
    };
    let e0 = energy(*y);
    let mut g = Matrix::zeros(m);
    for i in 0..m {
        let ei = Vector::basis(m, i) * h;
        g[(i, i)] = (energy(*y + ei) - 2.0 * e0 + energy(*y - ei)) / (h * h);
        for j in 0..i {
            let ej = Vector::basis(m, j) * h;
            let v = (energy(*y + ei + ej) - energy(*y + ei - ej) - energy(*y - ei + ej) + energy(*y - ei - ej))
                / (4.0 * h * h);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Formal Christoffel symbols of the second kind at `(x, y)`, `y ≠ 0`.
///
/// `x`-derivatives of the fundamental tensor are central differences with step
/// `steps.h_x` unless the metric supplies the symbols analytically. The
/// direction is rescaled to unit length first (the symbols are 0-homogeneous).
pub fn christoffel(
    metric: &dyn FinslerMetric,
    chart: ChartId,
    x: &Vector,
    y: &Vector,
    steps: DiffSteps,
) -> Result<Christoffel> {
    let norm = check_direction(y)?;
    let y = *y * (1.0 / norm);
    if let Some(gamma) = metric.analytic_christoffel(chart, x, &y) {
        return Ok(gamma);
    }
    let m = x.dim();
    let g = fundamental_tensor(metric, chart, x, &y, steps)?;
    let chol = g.cholesky()?;
    let condition = g.condition_number();
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let mut dg = [Matrix::zeros(m); crate::linalg::MAX_DIM];
    for (s, slot) in dg.iter_mut().enumerate().take(m) {
        let e = Vector::basis(m, s) * steps.h_x;
        let plus = fundamental_tensor(metric, chart, &(*x + e), &y, steps)?;
        let minus = fundamental_tensor(metric, chart, &(*x - e), &y, steps)?;
        *slot = (plus - minus).scale(0.5 / steps.h_x);
    }
    Ok(Christoffel::from_metric_derivatives(&chol.inverse(), &dg[..m]))
}

/// Geodesic spray term `Γ^k_ij(x, y) y^i y^j`; zero at `y = 0`.
pub fn spray(metric: &dyn FinslerMetric, chart: ChartId, x: &Vector, y: &Vector, steps: DiffSteps) -> Result<Vector> {
    let norm = y.norm();
    if norm == 0.0 {
        return Ok(Vector::zeros(y.dim()));
    }
    // Γ is 0-homogeneous in y, so short vectors reuse the unit direction.
    let direction = if norm < MIN_DIRECTION_NORM { *y * (1.0 / norm) } else { *y };
    let gamma = christoffel(metric, chart, x, &direction, steps)?;
    Ok(gamma.contract(y, y))
}

fn random_direction<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(m, |_| rng.sample(StandardNormal));
        if v.norm() > 1e-6 {
            return v;
        }
    }
}

/// Largest sampled `sqrt(g_u(v,v) / g_v(v,v))` over `n_samples` random
/// direction pairs: an estimate of the uniform ellipticity constant at `x`.
/// The running maximum makes the estimate nondecreasing in `n_samples` for a
/// fixed random stream.
pub fn ellipticity_ratio<R: Rng + ?Sized>(
    metric: &dyn FinslerMetric,
    chart: ChartId,
    x: &Vector,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!("ellipticity needs at least 2 samples, got {n_samples}")));
    }
    let m = metric.dim();
    let steps = DiffSteps::default();
    let mut best = 1.0_f64;
    for _ in 0..n_samples {
        let u = random_direction(m, rng);
        let v = random_direction(m, rng);
        best = best.max(ellipticity_pair(metric, chart, x, &u, &v, steps)?);
    }
    Ok(best)
}

/// `sqrt(g_u(v,v) / g_v(v,v))` for one pair of directions.
pub fn ellipticity_pair(
    metric: &dyn FinslerMetric,
    chart: ChartId,
    x: &Vector,
    u: &Vector,
    v: &Vector,
    steps: DiffSteps,
) -> Result<f64> {
    let gu = fundamental_tensor(metric, chart, x, u, steps)?;
    let gv = fundamental_tensor(metric, chart, x, v, steps)?;
    Ok((gu.bilinear(v, v) / gv.bilinear(v, v)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::katok;

    #[test]
    fn spray_of_tiny_vector_scales_quadratically() {
        let m = katok(0.5).unwrap();
        let x = Vector::from_slice(&[0.1, 0.4]);
        let unit = Vector::from_slice(&[0.6, 0.8]);
        let s1 = spray(&m, 0, &x, &unit, DiffSteps::default()).unwrap();
        let tiny = unit * 3e-16;
        let s2 = spray(&m, 0, &x, &tiny, DiffSteps::default()).unwrap();
        assert!((s2 * (1.0 / 9e-32) - s1).max_abs() < 1e-9 * s1.max_abs().max(1.0));
        assert_eq!(spray(&m, 0, &x, &Vector::zeros(2), DiffSteps::default()).unwrap(), Vector::zeros(2));
    }
}

//! Per-point step distributions `ν_p` on tangent spaces: samplers, quadrature
//! rules, means and the `√N` rescaling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::{ChartId, Point};
use crate::error::{Error, Result};
use crate::linalg::{gauss_legendre_unit, pairwise_sum, Matrix, Vector};
use crate::metric::{fundamental_tensor, DiffSteps, FinslerMetric};

/// Proposals allowed per disc sample before giving up.
pub const REJECTION_BUDGET: usize = 100_000;

const CACHE_LIMIT: usize = 4096;

/// Nodes in tangent coordinates with probability weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Vector>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(&Vector) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(y, w)| w * f(y)).collect();
        pairwise_sum(&terms)
    }

    pub fn try_integrate(&self, mut f: impl FnMut(&Vector) -> Result<f64>) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.len());
        for (y, w) in self.nodes.iter().zip(&self.weights) {
            terms.push(w * f(y)?);
        }
        Ok(pairwise_sum(&terms))
    }

    pub fn integrate_vector(&self, dim: usize, mut f: impl FnMut(&Vector) -> Vector) -> Vector {
        let values: Vec<Vector> = self.nodes.iter().map(&mut f).collect();
        Vector::from_fn(dim, |k| {
            pairwise_sum(&values.iter().zip(&self.weights).map(|(v, w)| w * v[k]).collect::<Vec<_>>())
        })
    }

    pub fn integrate_matrix(&self, dim: usize, mut f: impl FnMut(&Vector) -> Matrix) -> Matrix {
        let values: Vec<Matrix> = self.nodes.iter().map(&mut f).collect();
        Matrix::from_fn(dim, |i, j| {
            pairwise_sum(&values.iter().zip(&self.weights).map(|(v, w)| w * v[(i, j)]).collect::<Vec<_>>())
        })
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// Resolution of the built-in quadrature rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Trapezoid nodes in the azimuthal angle.
    pub angles: usize,
    /// Gauss–Legendre nodes along each ray.
    pub radial: usize,
    /// Gauss–Legendre nodes in the polar cosine (dimension 3 only).
    pub polar: usize,
    /// Table size for the indicatrix measure.
    pub indicatrix_nodes: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { angles: 256, radial: 64, polar: 32, indicatrix_nodes: 1024 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "samples")]
pub enum MeanPolicy {
    Analytic,
    #[default]
    Quadrature,
    MonteCarlo(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    LebesgueDisc,
    Indicatrix,
    Discrete,
    Custom,
}

/// User-defined step distribution.
pub trait CustomMeasure: Send + Sync {
    fn sample(&self, metric: &dyn FinslerMetric, p: &Point, rng: &mut dyn RngCore) -> Result<Vector>;

    fn quadrature(&self, metric: &dyn FinslerMetric, p: &Point) -> Result<QuadratureRule>;

    fn analytic_mean(&self, _metric: &dyn FinslerMetric, _p: &Point) -> Option<Vector> {
        None
    }
}

#[derive(Clone)]
enum Shape {
    Disc,
    Indicatrix,
    Discrete { atoms: Vec<Vector>, weights: Vec<f64>, index: WeightedIndex<f64>, mean: Vector },
    Custom(Arc<dyn CustomMeasure>),
}

/// A family `p ↦ ν_p` of probability measures on tangent spaces.
pub struct MeasureFamily {
    shape: Shape,
    policy: MeanPolicy,
    quad: QuadConfig,
    alpha: f64,
    cache: Mutex<HashMap<CacheKey, Vector>>,
}

impl Clone for MeasureFamily {
    fn clone(&self) -> Self {
        MeasureFamily {
            shape: self.shape.clone(),
            policy: self.policy,
            quad: self.quad,
            alpha: self.alpha,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl std::fmt::Debug for MeasureFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasureFamily").field("kind", &self.kind()).field("policy", &self.policy).finish()
    }
}

/// Unit directions with weights summing to the area of `S^{m−1}`.
fn directions(m: usize, quad: &QuadConfig) -> Vec<(Vector, f64)> {
    match m {
        1 => vec![(Vector::from_slice(&[1.0]), 1.0), (Vector::from_slice(&[-1.0]), 1.0)],
        2 => (0..quad.angles)
            .map(|j| {
                let (s, c) = (2.0 * PI * j as f64 / quad.angles as f64).sin_cos();
                (Vector::from_slice(&[c, s]), 2.0 * PI / quad.angles as f64)
            })
            .collect(),
        _ => {
            let (z_nodes, z_weights) = gauss_legendre_unit(quad.polar);
            let mut out = Vec::with_capacity(quad.polar * quad.angles);
            for (t, wz) in z_nodes.iter().zip(&z_weights) {
                let z = 2.0 * t - 1.0;
                let rho = (1.0 - z * z).sqrt();
                for j in 0..quad.angles {
                    let (s, c) = (2.0 * PI * j as f64 / quad.angles as f64).sin_cos();
                    out.push((Vector::from_slice(&[rho * c, rho * s, z]), 2.0 * wz * 2.0 * PI / quad.angles as f64));
                }
            }
            out
        }
    }
}

/// Distance from `c` to the boundary of the unit ball along `u`: the root of
/// `F(c + s u) = 1`, which is unique because `F(c) < 1` and `F` is convex.
fn boundary_distance(metric: &dyn FinslerMetric, p: &Point, c: &Vector, u: &Vector) -> f64 {
    let g = |s: f64| metric.eval(p.chart, &p.coords, &(*c + *u * s)) - 1.0;
    if c.max_abs() == 0.0 {
        return 1.0 / metric.eval(p.chart, &p.coords, u);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Boundary radii about the origin along the built-in directions, with the
/// centroid and a coordinate box containing the ball.
struct DiscSketch {
    centroid: Vector,
    lo: Vector,
    hi: Vector,
}

impl DiscSketch {
    fn new(metric: &dyn FinslerMetric, p: &Point, quad: &QuadConfig) -> Self {
        let m = metric.dim();
        let mf = m as f64;
        let dirs = directions(m, quad);
        let mut volume = Vec::with_capacity(dirs.len());
        let mut moment: Vec<Vector> = Vec::with_capacity(dirs.len());
        let (mut lo, mut hi) = (Vector::zeros(m), Vector::zeros(m));
        for (u, w) in &dirs {
            let r = 1.0 / metric.eval(p.chart, &p.coords, u);
            volume.push(w * r.powi(m as i32) / mf);
            moment.push(*u * (w * r.powi(m as i32 + 1) / (mf + 1.0)));
            for i in 0..m {
                lo[i] = lo[i].min(r * u[i]);
                hi[i] = hi[i].max(r * u[i]);
            }
        }
        let v = pairwise_sum(&volume);
        let centroid = Vector::from_fn(m, |k| pairwise_sum(&moment.iter().map(|x| x[k]).collect::<Vec<_>>()) / v);
        DiscSketch { centroid, lo: lo * 1.1, hi: hi * 1.1 }
    }
}

impl MeasureFamily {
    fn from_shape(shape: Shape) -> Self {
        MeasureFamily {
            shape,
            policy: MeanPolicy::Quadrature,
            quad: QuadConfig::default(),
            alpha: 1.0,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Normalized Lebesgue measure on the unit ball `D_pM = {F ≤ 1}`.
    pub fn lebesgue_disc() -> Self {
        Self::from_shape(Shape::Disc)
    }

    /// Normalized volume of the fundamental tensor on the indicatrix (dimension 2).
    pub fn indicatrix() -> Self {
        Self::from_shape(Shape::Indicatrix)
    }

    /// The same weighted atoms at every point, in chart coordinates.
    pub fn discrete(atoms: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "discrete measure needs matching non-empty atoms and weights ({} vs {})",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].dim();
        if let Some(a) = atoms.iter().find(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: a.dim() });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidParameter("discrete weights must be nonnegative with positive sum".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let index = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mean = discrete_mean(&atoms, &weights);
        let mut family = Self::from_shape(Shape::Discrete { atoms, weights, index, mean });
        family.policy = MeanPolicy::Analytic;
        Ok(family)
    }

    /// Dirac mass at `v`.
    pub fn point_mass(v: Vector) -> Self {
        Self::discrete(vec![v], vec![1.0]).expect("single atom with unit weight")
    }

    pub fn custom(measure: Arc<dyn CustomMeasure>) -> Self {
        Self::from_shape(Shape::Custom(measure))
    }

    pub fn with_mean_policy(mut self, policy: MeanPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    /// Coefficient of the mean shift in [`rescaled_sample`](Self::rescaled_sample).
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn quad_config(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn mean_policy(&self) -> MeanPolicy {
        self.policy
    }

    pub fn kind(&self) -> MeasureKind {
        match self.shape {
            Shape::Disc => MeasureKind::LebesgueDisc,
            Shape::Indicatrix => MeasureKind::Indicatrix,
            Shape::Discrete { .. } => MeasureKind::Discrete,
            Shape::Custom(_) => MeasureKind::Custom,
        }
    }

    /// One draw from `ν_p`.
    pub fn sample<R: Rng + ?Sized>(&self, metric: &dyn FinslerMetric, p: &Point, rng: &mut R) -> Result<Vector> {
        match &self.shape {
            Shape::Disc => {
                let sketch = DiscSketch::new(metric, p, &self.quad);
                self.sample_disc(metric, p, &sketch, rng)
            }
            _ => self.sample_other(metric, p, rng),
        }
    }

    fn sample_other<R: Rng + ?Sized>(&self, metric: &dyn FinslerMetric, p: &Point, rng: &mut R) -> Result<Vector> {
        match &self.shape {
            Shape::Disc => unreachable!("disc samples go through the sketch"),
            Shape::Indicatrix => {
                let table = IndicatrixTable::new(metric, p, self.quad.indicatrix_nodes)?;
                Ok(table.sample(metric, p, rng.random::<f64>()))
            }
            Shape::Discrete { atoms, index, .. } => Ok(atoms[index.sample(rng)]),
            Shape::Custom(c) => {
                let mut adapter = RngAdapter(rng);
                c.sample(metric, p, &mut adapter)
            }
        }
    }

    fn sample_disc<R: Rng + ?Sized>(
        &self,
        metric: &dyn FinslerMetric,
        p: &Point,
        sketch: &DiscSketch,
        rng: &mut R,
    ) -> Result<Vector> {
        let m = metric.dim();
        for _ in 0..REJECTION_BUDGET {
            let y = Vector::from_fn(m, |i| sketch.lo[i] + (sketch.hi[i] - sketch.lo[i]) * rng.random::<f64>());
            if metric.eval(p.chart, &p.coords, &y) <= 1.0 {
                return Ok(y);
            }
        }
        Err(Error::RejectionBudgetExceeded { budget: REJECTION_BUDGET })
    }

    /// `Y ~ ν_p` together with `μ_p`, sharing work between the two where possible.
    pub fn sample_with_mean<R: Rng + ?Sized>(
        &self,
        metric: &dyn FinslerMetric,
        p: &Point,
        rng: &mut R,
    ) -> Result<(Vector, Vector)> {
        if let (Shape::Disc, MeanPolicy::Quadrature) = (&self.shape, self.policy) {
            let sketch = DiscSketch::new(metric, p, &self.quad);
            let y = self.sample_disc(metric, p, &sketch, rng)?;
            return Ok((y, sketch.centroid));
        }
        let mu = self.mean(metric, p)?;
        Ok((self.sample(metric, p, rng)?, mu))
    }

    /// `(Y − μ_p)/√N + α μ_p/N` with `Y ~ ν_p`.
    pub fn rescaled_sample<R: Rng + ?Sized>(
        &self,
        metric: &dyn FinslerMetric,
        p: &Point,
        n_scale: f64,
        rng: &mut R,
    ) -> Result<Vector> {
        let (y, mu) = self.sample_with_mean(metric, p, rng)?;
        Ok(rescale(&y, &mu, n_scale, self.alpha))
    }

    /// `μ_p = ∫ Y dν_p` according to the mean policy, cached per point.
    pub fn mean(&self, metric: &dyn FinslerMetric, p: &Point) -> Result<Vector> {
        if let (Shape::Discrete { mean, .. }, MeanPolicy::Analytic | MeanPolicy::Quadrature) =
            (&self.shape, self.policy)
        {
            return Ok(*mean);
        }
        let key = cache_key(metric, p);
        if let Some(mu) = self.cache.lock().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(mu);
        }
        let mu = self.compute_mean(metric, p)?;
        if let Ok(mut cache) = self.cache.lock() {
            if cache.len() >= CACHE_LIMIT {
                cache.clear();
            }
            cache.insert(key, mu);
        }
        Ok(mu)
    }

    fn compute_mean(&self, metric: &dyn FinslerMetric, p: &Point) -> Result<Vector> {
        let m = metric.dim();
        match self.policy {
            MeanPolicy::Analytic => match &self.shape {
                Shape::Disc => metric.disc_centroid(p.chart, &p.coords).ok_or(Error::MeanUnavailable),
                Shape::Discrete { mean, .. } => Ok(*mean),
                Shape::Custom(c) => c.analytic_mean(metric, p).ok_or(Error::MeanUnavailable),
                Shape::Indicatrix => Err(Error::MeanUnavailable),
            },
            MeanPolicy::Quadrature => match &self.shape {
                Shape::Disc => Ok(DiscSketch::new(metric, p, &self.quad).centroid),
                Shape::Discrete { mean, .. } => Ok(*mean),
                _ => Ok(self.quadrature(metric, p)?.integrate_vector(m, |y| *y)),
            },
            MeanPolicy::MonteCarlo(n) => {
                if n == 0 {
                    return Err(Error::InvalidParameter("monte-carlo mean needs at least one sample".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(point_seed(p));
                let mut acc = Vec::with_capacity(n);
                for _ in 0..n {
                    acc.push(self.sample(metric, p, &mut rng)?);
                }
                Ok(Vector::from_fn(m, |k| pairwise_sum(&acc.iter().map(|y| y[k]).collect::<Vec<_>>()) / n as f64))
            }
        }
    }

    /// Quadrature rule for `ν_p` (disc rules are polar about the origin).
    pub fn quadrature(&self, metric: &dyn FinslerMetric, p: &Point) -> Result<QuadratureRule> {
        self.quadrature_about(metric, p, &Vector::zeros(metric.dim()))
    }

    /// Like [`quadrature`](Self::quadrature), with disc rules polar about
    /// `center`, which must lie inside the unit ball. Integrands that are
    /// smooth along rays from `center` are integrated to near machine precision.
    pub fn quadrature_about(&self, metric: &dyn FinslerMetric, p: &Point, center: &Vector) -> Result<QuadratureRule> {
        match &self.shape {
            Shape::Disc => disc_rule(metric, p, center, &self.quad),
            Shape::Indicatrix => Ok(IndicatrixTable::new(metric, p, self.quad.indicatrix_nodes)?.rule()),
            Shape::Discrete { atoms, weights, .. } => {
                Ok(QuadratureRule { nodes: atoms.clone(), weights: weights.clone() })
            }
            Shape::Custom(c) => c.quadrature(metric, p),
        }
    }

    /// `∫ f dν_p`.
    pub fn integrate(&self, metric: &dyn FinslerMetric, p: &Point, f: impl FnMut(&Vector) -> f64) -> Result<f64> {
        Ok(self.quadrature(metric, p)?.integrate(f))
    }
}

/// `(y − μ)/√N + α μ/N`.
pub fn rescale(y: &Vector, mu: &Vector, n_scale: f64, alpha: f64) -> Vector {
    (*y - *mu) * (1.0 / n_scale.sqrt()) + *mu * (alpha / n_scale)
}

fn discrete_mean(atoms: &[Vector], weights: &[f64]) -> Vector {
    let m = atoms[0].dim();
    Vector::from_fn(m, |k| pairwise_sum(&atoms.iter().zip(weights).map(|(a, w)| w * a[k]).collect::<Vec<_>>()))
}

/// Point quantized at 1e-12 plus the metric's name and `F` along a few fixed
/// directions, so one family can serve several metrics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    chart: ChartId,
    coords: [i64; 3],
    metric: String,
    fingerprint: [u64; 3],
}

fn cache_key(metric: &dyn FinslerMetric, p: &Point) -> CacheKey {
    let mut coords = [0i64; 3];
    for (i, x) in p.coords.as_slice().iter().enumerate() {
        coords[i] = (x * 1e12).round() as i64;
    }
    let m = metric.dim();
    let probes = [Vector::basis(m, 0), -Vector::basis(m, 0), Vector::from_fn(m, |i| 0.6 - 0.3 * i as f64)];
    let fingerprint = probes.map(|y| metric.eval(p.chart, &p.coords, &y).to_bits());
    CacheKey { chart: p.chart, coords, metric: metric.name().to_owned(), fingerprint }
}

fn point_seed(p: &Point) -> u64 {
    p.coords.as_slice().iter().fold(p.chart as u64 ^ 0x9e37_79b9_7f4a_7c15, |h, x| {
        (h ^ x.to_bits()).wrapping_mul(0x1000_0000_01b3).rotate_left(23)
    })
}

fn disc_rule(metric: &dyn FinslerMetric, p: &Point, center: &Vector, quad: &QuadConfig) -> Result<QuadratureRule> {
    let m = metric.dim();
    if center.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: center.dim() });
    }
    if !(metric.eval(p.chart, &p.coords, center) < 1.0) {
        return Err(Error::InvalidParameter("quadrature center must lie inside the unit ball".into()));
    }
    let (t_nodes, t_weights) = gauss_legendre_unit(quad.radial);
    let dirs = directions(m, quad);
    let mut nodes = Vec::with_capacity(dirs.len() * t_nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (u, wu) in &dirs {
        let r = boundary_distance(metric, p, center, u);
        let rm = r.powi(m as i32);
        for (t, wt) in t_nodes.iter().zip(&t_weights) {
            nodes.push(*center + *u * (r * t));
            weights.push(wu * wt * rm * t.powi(m as i32 - 1));
        }
    }
    let total = pairwise_sum(&weights);
    for w in &mut weights {
        *w /= total;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Trapezoid table of the indicatrix `φ ↦ u(φ)/F(u(φ))` with arclength
/// weights `sqrt(g_c(c', c'))`.
struct IndicatrixTable {
    angles: Vec<f64>,
    points: Vec<Vector>,
    weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl IndicatrixTable {
    fn new(metric: &dyn FinslerMetric, p: &Point, n: usize) -> Result<Self> {
        if metric.dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "indicatrix measure is implemented in dimension 2, not {}",
                metric.dim()
            )));
        }
        let steps = DiffSteps::default();
        let mut angles = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let (s, c) = phi.sin_cos();
            let u = Vector::from_slice(&[c, s]);
            let du = Vector::from_slice(&[-s, c]);
            let f = metric.eval(p.chart, &p.coords, &u);
            let g = fundamental_tensor(metric, p.chart, &p.coords, &u, steps)?;
            let fy_du = g.bilinear(&u, &du) / f;
            let dc = du * (1.0 / f) - u * (fy_du / (f * f));
            angles.push(phi);
            points.push(u * (1.0 / f));
            weights.push(g.bilinear(&dc, &dc).sqrt());
        }
        let total = pairwise_sum(&weights);
        for w in &mut weights {
            *w /= total;
        }
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for j in 0..n {
            acc += 0.5 * (weights[j] + weights[(j + 1) % n]);
            cdf.push(acc);
        }
        Ok(IndicatrixTable { angles, points, weights, cdf })
    }

    fn point(metric: &dyn FinslerMetric, p: &Point, phi: f64) -> Vector {
        let (s, c) = phi.sin_cos();
        let u = Vector::from_slice(&[c, s]);
        u * (1.0 / metric.eval(p.chart, &p.coords, &u))
    }

    fn rule(&self) -> QuadratureRule {
        QuadratureRule { nodes: self.points.clone(), weights: self.weights.clone() }
    }

    fn sample(&self, metric: &dyn FinslerMetric, p: &Point, uniform: f64) -> Vector {
        let n = self.angles.len();
        let target = uniform * self.cdf[n];
        let j = self.cdf.partition_point(|&c| c <= target).clamp(1, n) - 1;
        let span = self.cdf[j + 1] - self.cdf[j];
        let frac = if span > 0.0 { (target - self.cdf[j]) / span } else { 0.0 };
        Self::point(metric, p, (j as f64 + frac) * 2.0 * PI / n as f64)
    }
}

struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{euclidean, katok};

    #[test]
    fn disc_rule_is_normalized_and_exact_on_moments() {
        let metric = euclidean(2);
        let p = Point::new(0, Vector::zeros(2));
        let rule = MeasureFamily::lebesgue_disc().quadrature(&metric, &p).unwrap();
        assert!((rule.total_weight() - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|y| y[0] * y[0]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rescaled_discrete_support() {
        let fam =
            MeasureFamily::discrete(vec![Vector::from_slice(&[1.0]), Vector::from_slice(&[-1.0])], vec![0.75, 0.25])
                .unwrap();
        let mu = Vector::from_slice(&[0.5]);
        assert_eq!(rescale(&Vector::from_slice(&[1.0]), &mu, 4.0, 1.0)[0], 0.375);
        assert_eq!(rescale(&Vector::from_slice(&[-1.0]), &mu, 4.0, 1.0)[0], -0.625);
        assert_eq!(fam.mean(&euclidean(1), &Point::new(0, Vector::zeros(1))).unwrap()[0], 0.5);
    }

    #[test]
    fn indicatrix_samples_have_unit_length() {
        let k = katok(0.5).unwrap();
        let p = Point::new(0, Vector::from_slice(&[0.0, 0.4]));
        let fam = MeasureFamily::indicatrix();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y = fam.sample(&k, &p, &mut rng).unwrap();
            assert!((k.eval(0, &p.coords, &y) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn katok_disc_mean_is_wind() {
        let k = katok(0.5).unwrap();
        let p = Point::new(0, Vector::from_slice(&[0.0, 0.6]));
        let mu = MeasureFamily::lebesgue_disc().mean(&k, &p).unwrap();
        assert!((mu - Vector::from_slice(&[0.5, 0.0])).max_abs() < 1e-10, "{mu:?}");
    }

    #[test]
    fn analytic_policy_without_closed_form_fails() {
        let fam = MeasureFamily::indicatrix().with_mean_policy(MeanPolicy::Analytic);
        let err = fam.mean(&euclidean(2), &Point::new(0, Vector::zeros(2))).unwrap_err();
        assert_eq!(err, Error::MeanUnavailable);
    }
}

//! Ready-made metrics: Euclidean norms, Riemannian metrics, Zermelo/Randers
//! navigation metrics and the Katok family on the round sphere.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atlas::{ambient_to_tangent, sphere_chart, ChartAtlas, ChartId, Point};
use crate::error::{Error, Result};
use crate::linalg::{Christoffel, Matrix, Vector, MAX_DIM};
use crate::metric::{DiffSteps, FinslerMetric};

/// A Riemannian metric tensor field `h_ij(x)` given chart by chart.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn tensor(&self, chart: ChartId, x: &Vector) -> Matrix;

    /// `∂_s h` for `s < dim`, when known in closed form.
    fn derivatives(&self, _chart: ChartId, _x: &Vector) -> Option<[Matrix; MAX_DIM]> {
        None
    }

    fn is_constant(&self) -> bool {
        false
    }
}

/// `h = cos²θ dψ² + dθ²`, identical in both sphere charts.
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundSphereField;

impl MetricField for RoundSphereField {
    fn dim(&self) -> usize {
        2
    }

    fn tensor(&self, _chart: ChartId, x: &Vector) -> Matrix {
        let c = x[1].cos();
        Matrix::diagonal(&[c * c, 1.0])
    }

    fn derivatives(&self, _chart: ChartId, x: &Vector) -> Option<[Matrix; MAX_DIM]> {
        let (s, c) = x[1].sin_cos();
        Some([Matrix::zeros(2), Matrix::diagonal(&[-2.0 * s * c, 0.0]), Matrix::zeros(2)])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub Matrix);

impl MetricField for ConstantField {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn tensor(&self, _chart: ChartId, _x: &Vector) -> Matrix {
        self.0
    }

    fn derivatives(&self, _chart: ChartId, _x: &Vector) -> Option<[Matrix; MAX_DIM]> {
        Some([Matrix::zeros(self.0.dim()); MAX_DIM])
    }

    fn is_constant(&self) -> bool {
        true
    }
}

type FieldFn = dyn Fn(ChartId, &Vector) -> Matrix + Send + Sync;

/// User-supplied tensor field without derivatives.
pub struct FnField {
    dim: usize,
    f: Box<FieldFn>,
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(ChartId, &Vector) -> Matrix + Send + Sync + 'static) -> Self {
        FnField { dim, f: Box::new(f) }
    }
}

impl MetricField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tensor(&self, chart: ChartId, x: &Vector) -> Matrix {
        (self.f)(chart, x)
    }
}

/// A vector field given chart by chart.
pub trait WindField: Send + Sync {
    fn wind(&self, chart: ChartId, x: &Vector) -> Vector;

    fn is_constant(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantWind(pub Vector);

impl WindField for ConstantWind {
    fn wind(&self, _chart: ChartId, _x: &Vector) -> Vector {
        self.0
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// `r ∂_ψ` of sphere chart 0: the rotation about the polar axis.
#[derive(Clone, Copy, Debug)]
pub struct RotationWind {
    pub r: f64,
}

impl WindField for RotationWind {
    fn wind(&self, chart: ChartId, x: &Vector) -> Vector {
        if chart == 0 {
            return Vector::from_slice(&[self.r, 0.0]);
        }
        let e = sphere_chart(chart, x);
        ambient_to_tangent(chart, x, [-self.r * e[1], self.r * e[0], 0.0])
    }
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Euclidean {
    dim: usize,
    scale: f64,
    name: String,
}

/// `F = |y|` on `R^m`.
pub fn euclidean(dim: usize) -> Euclidean {
    Euclidean::scaled(dim, 1.0)
}

impl Euclidean {
    /// `F = scale·|y|`.
    pub fn scaled(dim: usize, scale: f64) -> Self {
        assert!(scale > 0.0);
        Euclidean { dim, scale, name: format!("euclidean({dim})") }
    }
}

impl FinslerMetric for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn is_reversible(&self) -> bool {
        true
    }
    fn eval(&self, _chart: ChartId, _x: &Vector, y: &Vector) -> f64 {
        self.scale * y.norm()
    }
    fn analytic_fundamental_tensor(&self, _chart: ChartId, _x: &Vector, _y: &Vector) -> Option<Matrix> {
        Some(Matrix::identity(self.dim).scale(self.scale * self.scale))
    }
    fn analytic_christoffel(&self, _chart: ChartId, _x: &Vector, _y: &Vector) -> Option<Christoffel> {
        Some(Christoffel::zeros(self.dim))
    }
    fn disc_centroid(&self, _chart: ChartId, _x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(self.dim))
    }
    fn is_flat(&self) -> bool {
        true
    }
}

/// `F = sqrt(h(y, y))`.
pub struct Riemannian<H> {
    field: H,
    name: String,
    steps: DiffSteps,
}

impl<H: MetricField> Riemannian<H> {
    /// Wraps a tensor field, checking positive definiteness at the atlas probe points.
    pub fn new(field: H, name: impl Into<String>, atlas: &ChartAtlas) -> Result<Self> {
        if field.dim() != atlas.dim() {
            return Err(Error::DimensionMismatch { expected: atlas.dim(), got: field.dim() });
        }
        for p in probe_points(atlas, 9) {
            field.tensor(p.chart, &p.coords).cholesky()?;
        }
        Ok(Riemannian { field, name: name.into(), steps: DiffSteps::default() })
    }

    pub fn field(&self) -> &H {
        &self.field
    }
}

/// The unit round sphere on the two-chart sphere atlas.
pub fn round_sphere() -> Riemannian<RoundSphereField> {
    Riemannian { field: RoundSphereField, name: "sphere".into(), steps: DiffSteps::default() }
}

impl<H: MetricField> FinslerMetric for Riemannian<H> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn is_reversible(&self) -> bool {
        true
    }
    fn eval(&self, chart: ChartId, x: &Vector, y: &Vector) -> f64 {
        self.field.tensor(chart, x).bilinear(y, y).max(0.0).sqrt()
    }
    fn analytic_fundamental_tensor(&self, chart: ChartId, x: &Vector, _y: &Vector) -> Option<Matrix> {
        Some(self.field.tensor(chart, x))
    }
    fn analytic_christoffel(&self, chart: ChartId, x: &Vector, _y: &Vector) -> Option<Christoffel> {
        let m = self.field.dim();
        let g = self.field.tensor(chart, x);
        let inverse = g.cholesky().ok()?.inverse();
        let dg = match self.field.derivatives(chart, x) {
            Some(d) => d,
            None => {
                let h = self.steps.h_x;
                let mut d = [Matrix::zeros(m); MAX_DIM];
                for (s, slot) in d.iter_mut().enumerate().take(m) {
                    let e = Vector::basis(m, s) * h;
                    *slot = (self.field.tensor(chart, &(*x + e)) - self.field.tensor(chart, &(*x - e))).scale(0.5 / h);
                }
                d
            }
        };
        Some(Christoffel::from_metric_derivatives(&inverse, &dg[..m]))
    }
    fn disc_centroid(&self, _chart: ChartId, _x: &Vector) -> Option<Vector> {
        Some(Vector::zeros(self.field.dim()))
    }
    fn is_flat(&self) -> bool {
        self.field.is_constant()
    }
}

/// Zermelo navigation metric: the indicatrix at `x` is the `h`-unit sphere
/// translated by the wind `W(x)`. Equivalently the Randers metric
/// `F = sqrt(a(y,y)) + b(y)` with `a = (λh + W♭⊗W♭)/λ²`, `b = −W♭/λ`,
/// `λ = 1 − h(W,W)`.
pub struct Zermelo<H, W> {
    background: H,
    wind: W,
    name: String,
}

/// Headroom below unit wind speed required by [`Zermelo::new`].
pub const NAVIGATION_MARGIN: f64 = 1e-9;

impl<H: MetricField, W: WindField> Zermelo<H, W> {
    /// Checks `h(W,W) < 1 − 1e-9` at the atlas probe points.
    pub fn new(background: H, wind: W, name: impl Into<String>, atlas: &ChartAtlas) -> Result<Self> {
        if background.dim() != atlas.dim() {
            return Err(Error::DimensionMismatch { expected: atlas.dim(), got: background.dim() });
        }
        for p in probe_points(atlas, 9) {
            let h = background.tensor(p.chart, &p.coords);
            h.cholesky()?;
            let w = wind.wind(p.chart, &p.coords);
            let speed_sq = h.bilinear(&w, &w);
            if !(speed_sq < 1.0 - NAVIGATION_MARGIN) {
                return Err(Error::NavigationTooFast { speed_sq });
            }
        }
        Ok(Zermelo { background, wind, name: name.into() })
    }

    pub fn background(&self) -> &H {
        &self.background
    }

    pub fn wind_at(&self, chart: ChartId, x: &Vector) -> Vector {
        self.wind.wind(chart, x)
    }

    /// Randers data `(a, b)` at `x`.
    pub fn randers_data(&self, chart: ChartId, x: &Vector) -> (Matrix, Vector) {
        let h = self.background.tensor(chart, x);
        let w = self.wind.wind(chart, x);
        let w_flat = h.mul_vec(&w);
        let lambda = 1.0 - w.dot(&w_flat);
        let a = Matrix::from_fn(h.dim(), |i, j| (lambda * h[(i, j)] + w_flat[i] * w_flat[j]) / (lambda * lambda));
        (a, w_flat * (-1.0 / lambda))
    }
}

impl<H: MetricField, W: WindField> FinslerMetric for Zermelo<H, W> {
    fn dim(&self) -> usize {
        self.background.dim()
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn is_reversible(&self) -> bool {
        false
    }
    fn eval(&self, chart: ChartId, x: &Vector, y: &Vector) -> f64 {
        let h = self.background.tensor(chart, x);
        let w = self.wind.wind(chart, x);
        let hyy = h.bilinear(y, y);
        let hwy = h.bilinear(&w, y);
        let lambda = 1.0 - h.bilinear(&w, &w);
        ((lambda * hyy + hwy * hwy).max(0.0).sqrt() - hwy) / lambda
    }
    fn analytic_fundamental_tensor(&self, chart: ChartId, x: &Vector, y: &Vector) -> Option<Matrix> {
        let (a, b) = self.randers_data(chart, x);
        let ay = a.mul_vec(y);
        let alpha = y.dot(&ay).sqrt();
        let yhat = ay * (1.0 / alpha);
        let f = alpha + b.dot(y);
        let ratio = f / alpha;
        Some(Matrix::from_fn(y.dim(), |i, j| {
            ratio * (a[(i, j)] - yhat[i] * yhat[j]) + (yhat[i] + b[i]) * (yhat[j] + b[j])
        }))
    }
    fn analytic_christoffel(&self, _chart: ChartId, _x: &Vector, _y: &Vector) -> Option<Christoffel> {
        self.is_flat().then(|| Christoffel::zeros(self.background.dim()))
    }
    fn disc_centroid(&self, chart: ChartId, x: &Vector) -> Option<Vector> {
        Some(self.wind.wind(chart, x))
    }
    fn is_flat(&self) -> bool {
        self.background.is_constant() && self.wind.is_constant()
    }
}

/// The Katok metric with rotation speed `r`: Zermelo navigation on the round
/// sphere with wind `r ∂_ψ`.
pub type Katok = Zermelo<RoundSphereField, RotationWind>;

pub fn katok(r: f64) -> Result<Katok> {
    if !(r.abs() < 1.0) {
        return Err(Error::NavigationTooFast { speed_sq: r * r });
    }
    Zermelo::new(RoundSphereField, RotationWind { r }, format!("katok({r})"), &ChartAtlas::sphere())
}

/// Finsler function from a bare closure; every derivative is taken numerically.
pub struct FnMetric {
    dim: usize,
    name: String,
    reversible: bool,
    f: Box<dyn Fn(ChartId, &Vector, &Vector) -> f64 + Send + Sync>,
}

impl FnMetric {
    pub fn new(
        dim: usize,
        name: impl Into<String>,
        reversible: bool,
        f: impl Fn(ChartId, &Vector, &Vector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnMetric { dim, name: name.into(), reversible, f: Box::new(f) }
    }
}

impl FinslerMetric for FnMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn is_reversible(&self) -> bool {
        self.reversible
    }
    fn eval(&self, chart: ChartId, x: &Vector, y: &Vector) -> f64 {
        (self.f)(chart, x, y)
    }
}

/// Solves `h(y/s − W, y/s − W) = 1` for `s > 0` by bisection on `1/s`.
/// Independent of the closed form used by [`Zermelo`].
pub fn navigation_root_solve(h: &Matrix, w: &Vector, y: &Vector) -> f64 {
    let residual = |u: f64| {
        let d = *y * u - *w;
        h.bilinear(&d, &d) - 1.0
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while residual(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-17 * hi {
            break;
        }
    }
    1.0 / (0.5 * (lo + hi))
}

/// Deterministic probe grid covering every chart (flat: `[−1,1]^m`).
pub fn probe_points(atlas: &ChartAtlas, per_axis: usize) -> Vec<Point> {
    let m = atlas.dim();
    let ticks = |lo: f64, hi: f64| -> Vec<f64> {
        (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64).collect()
    };
    let mut out = Vec::new();
    if atlas.is_sphere() {
        for chart in 0..2 {
            for &psi in &ticks(-std::f64::consts::PI, std::f64::consts::PI) {
                for &theta in &ticks(-1.0, 1.0) {
                    out.push(Point::new(chart, Vector::from_slice(&[psi, theta])));
                }
            }
        }
        return out;
    }
    let t = ticks(-1.0, 1.0);
    let total = per_axis.pow(m as u32);
    for idx in 0..total {
        let mut rem = idx;
        let x = Vector::from_fn(m, |_| {
            let v = t[rem % per_axis];
            rem /= per_axis;
            v
        });
        out.push(Point::new(0, x));
    }
    out
}

/// Metric selected by name with a numeric parameter map, as found in run configs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl MetricSpec {
    pub fn new(name: impl Into<String>) -> Self {
        MetricSpec { name: name.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    fn param(&self, key: &str, default: Option<f64>) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .or(default)
            .ok_or_else(|| Error::InvalidParameter(format!("metric `{}` needs parameter `{key}`", self.name)))
    }

    fn dim_param(&self, default: usize) -> Result<usize> {
        let d = self.param("dim", Some(default as f64))?;
        if d.fract() != 0.0 || d < 1.0 || d > MAX_DIM as f64 {
            return Err(Error::InvalidParameter(format!("dim must be an integer in 1..={MAX_DIM}, got {d}")));
        }
        Ok(d as usize)
    }
}

#[derive(Clone)]
pub struct BuiltMetric {
    pub metric: Arc<dyn FinslerMetric>,
    pub atlas: ChartAtlas,
}

/// Builds a zoo entry: `euclidean(dim, scale)`, `sphere`, `katok(r)`,
/// or `zermelo(w1, w2, …)` (constant wind over flat space).
pub fn build_metric(spec: &MetricSpec) -> Result<BuiltMetric> {
    match spec.name.as_str() {
        "euclidean" => {
            let dim = spec.dim_param(2)?;
            let scale = spec.param("scale", Some(1.0))?;
            if !(scale > 0.0) {
                return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
            }
            Ok(BuiltMetric { metric: Arc::new(Euclidean::scaled(dim, scale)), atlas: ChartAtlas::flat(dim) })
        }
        "sphere" | "round-sphere" => Ok(BuiltMetric { metric: Arc::new(round_sphere()), atlas: ChartAtlas::sphere() }),
        "katok" => {
            let r = spec.param("r", None)?;
            Ok(BuiltMetric { metric: Arc::new(katok(r)?), atlas: ChartAtlas::sphere() })
        }
        "zermelo" => {
            let comps: Vec<f64> = (1..=MAX_DIM).map_while(|i| spec.params.get(&format!("w{i}")).copied()).collect();
            if comps.is_empty() {
                return Err(Error::InvalidParameter("zermelo needs wind components w1, w2, …".into()));
            }
            let atlas = ChartAtlas::flat(comps.len());
            let field = ConstantField(Matrix::identity(comps.len()));
            let metric = Zermelo::new(field, ConstantWind(Vector::from_slice(&comps)), "zermelo", &atlas)?;
            Ok(BuiltMetric { metric: Arc::new(metric), atlas })
        }
        other => Err(Error::Unknown { what: "metric", name: other.into() }),
    }
}

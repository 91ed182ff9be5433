//! The limit generator `A` of rescaled geodesic walks, its symbol, the
//! associated Riemannian metric `g_A` and the drift `A − Δ^{g_A}`, by
//! quadrature, and Monte Carlo counterparts from simulated paths.
//!
//! In coordinates `A f = b^k ∂_k f + a^{ij} ∂_ij f` with
//! `a = ½∫ v⊗v dν_p` and `b^k = μ^k − ½∫ Γ^k_ij(p, v) v^i v^j dν_p`, `v = Y − μ_p`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::{ChartAtlas, Point};
use crate::error::{Error, Result};
use crate::geodesic::{exp_map, OdeConfig};
use crate::linalg::{pairwise_sum, Christoffel, Matrix, Vector, MAX_DIM};
use crate::measure::{rescale, MeasureFamily};
use crate::metric::{christoffel, DiffSteps, FinslerMetric};
use crate::testfn::TestFunction;

/// Directions `v` shorter than this are left out of the Christoffel integral.
pub const GAMMA_EXCLUSION_RADIUS: f64 = 1e-10;

/// Step for the finite differences of the symbol field.
pub const SYMBOL_STENCIL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum Provenance {
    Quadrature,
    MonteCarlo { samples: usize, standard_error: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorEstimate {
    pub point: Point,
    pub second_order: Matrix,
    pub first_order: Vector,
    pub symbol: Matrix,
    pub drift: Option<Vector>,
    pub provenance: Provenance,
}

/// How `A_N f` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnMode {
    /// Every node of the step quadrature is pushed through the exponential map.
    Quadrature,
    /// `n` simulated steps from the given seed.
    MonteCarlo { samples: usize, seed: u64 },
}

/// A scalar with a Monte Carlo standard error (zero for quadrature).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
}

#[derive(Clone, Copy)]
pub struct GeneratorLab<'a> {
    pub metric: &'a dyn FinslerMetric,
    pub atlas: &'a ChartAtlas,
    pub family: &'a MeasureFamily,
    pub diff: DiffSteps,
    pub ode: OdeConfig,
}

impl<'a> GeneratorLab<'a> {
    pub fn new(metric: &'a dyn FinslerMetric, atlas: &'a ChartAtlas, family: &'a MeasureFamily) -> Self {
        GeneratorLab { metric, atlas, family, diff: DiffSteps::default(), ode: OdeConfig::with_step(0.25) }
    }

    pub fn with_ode(mut self, ode: OdeConfig) -> Self {
        self.ode = ode;
        self
    }

    /// Second-order matrix `a` and first-order vector `b` of `A` at `p`.
    pub fn coefficients(&self, p: &Point) -> Result<(Matrix, Vector)> {
        let m = self.metric.dim();
        let mu = self.family.mean(self.metric, p)?;
        let rule = self.family.quadrature_about(self.metric, p, &mu)?;
        let a = rule.integrate_matrix(m, |y| {
            let v = *y - mu;
            v.outer(&v).scale(0.5)
        });
        let riemannian_gamma = self.constant_christoffel(p)?;
        let mut terms: Vec<Vector> = Vec::with_capacity(rule.len());
        for y in &rule.nodes {
            let v = *y - mu;
            if v.norm() < GAMMA_EXCLUSION_RADIUS {
                terms.push(Vector::zeros(m));
                continue;
            }
            let gamma = match &riemannian_gamma {
                Some(g) => g.clone(),
                None => christoffel(self.metric, p.chart, &p.coords, &v, self.diff)?,
            };
            terms.push(gamma.contract(&v, &v));
        }
        let b = Vector::from_fn(m, |k| {
            let weighted: Vec<f64> = terms.iter().zip(&rule.weights).map(|(t, w)| w * t[k]).collect();
            mu[k] - 0.5 * pairwise_sum(&weighted)
        });
        Ok((a, b))
    }

    /// Christoffel symbols when they do not depend on the direction.
    fn constant_christoffel(&self, p: &Point) -> Result<Option<Christoffel>> {
        if !self.metric.is_reversible() {
            return Ok(None);
        }
        let probe = Vector::basis(self.metric.dim(), 0);
        let g0 = match self.metric.analytic_fundamental_tensor(p.chart, &p.coords, &probe) {
            Some(g) => g,
            None => return Ok(None),
        };
        let other = Vector::from_fn(self.metric.dim(), |i| 0.3 + 0.7 * i as f64);
        let g1 = self.metric.analytic_fundamental_tensor(p.chart, &p.coords, &other);
        if g1.map_or(true, |g1| (g1 - g0).max_abs() != 0.0) {
            return Ok(None);
        }
        Ok(Some(christoffel(self.metric, p.chart, &p.coords, &probe, self.diff)?))
    }

    /// `σ(A)(p) = ½∫ (Y − μ)⊗(Y − μ) dν_p`, required to be positive definite.
    pub fn symbol(&self, p: &Point) -> Result<Matrix> {
        let m = self.metric.dim();
        let mu = self.family.mean(self.metric, p)?;
        let rule = self.family.quadrature_about(self.metric, p, &mu)?;
        let s = rule.integrate_matrix(m, |y| {
            let v = *y - mu;
            v.outer(&v).scale(0.5)
        });
        s.cholesky()?;
        Ok(s)
    }

    /// `A f(p)`.
    pub fn apply_a(&self, f: &dyn TestFunction, p: &Point) -> Result<f64> {
        let (a, b) = self.coefficients(p)?;
        Ok(apply_coefficients(&a, &b, f, self.atlas, p))
    }

    /// `A_N f(p) = N (P^N f(p) − f(p))`.
    pub fn apply_an(&self, f: &dyn TestFunction, p: &Point, n_scale: f64, mode: AnMode) -> Result<Estimate> {
        let fp = f.value(self.atlas, p);
        let alpha = self.family.alpha();
        match mode {
            AnMode::Quadrature => {
                let mu = self.family.mean(self.metric, p)?;
                // Rays from the preimage of the zero step keep the integrand smooth.
                let center = mu - mu * (alpha / n_scale.sqrt());
                let rule = self.family.quadrature_about(self.metric, p, &center)?;
                let mean_diff = rule.try_integrate(|y| {
                    let z = rescale(y, &mu, n_scale, alpha);
                    let q = exp_map(self.metric, self.atlas, p, &z, &self.ode)?;
                    Ok(f.value(self.atlas, &q) - fp)
                })?;
                Ok(Estimate { value: n_scale * mean_diff, standard_error: 0.0, samples: rule.len() })
            }
            AnMode::MonteCarlo { samples, seed } => {
                if samples < 2 {
                    return Err(Error::InvalidParameter("monte-carlo A_N needs at least 2 samples".into()));
                }
                let mut rng = crate::walk::path_rng(seed, 0, crate::walk::STREAM_INCREMENTS);
                let walker = crate::walk::Walker::new(self.metric, self.atlas, self.family, self.ode);
                let mut diffs = Vec::with_capacity(samples);
                for _ in 0..samples {
                    let (q, _) = walker.walk_step(p, n_scale, &mut rng)?;
                    diffs.push(n_scale * (f.value(self.atlas, &q) - fp));
                }
                Ok(sample_mean(&diffs))
            }
        }
    }

    /// Co-metric `(g_A)^{ij} = σ(A)^{ij}` and first-order coefficients
    /// `b_Δ^k = −(g_A)^{ij} Γ(g_A)^k_ij` of the Laplace–Beltrami operator of `g_A`.
    pub fn associated_laplacian_coefficients(&self, p: &Point) -> Result<(Matrix, Vector)> {
        let m = self.metric.dim();
        let sigma = self.symbol(p)?;
        let h = SYMBOL_STENCIL;
        let mut dg = [Matrix::zeros(m); MAX_DIM];
        for (s, slot) in dg.iter_mut().enumerate().take(m) {
            let e = Vector::basis(m, s) * h;
            let side = |x: Vector| -> Result<Matrix> {
                if !self.atlas.contains(p.chart, &x) {
                    return Err(Error::StencilLeftChart { chart: p.chart });
                }
                Ok(self.symbol(&Point::new(p.chart, x))?.cholesky()?.inverse())
            };
            let plus = side(p.coords + e)?;
            let minus = side(p.coords - e)?;
            *slot = (plus - minus).scale(0.5 / h);
        }
        let gamma = Christoffel::from_metric_derivatives(&sigma, &dg[..m]);
        let b = Vector::from_fn(m, |k| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s -= sigma[(i, j)] * gamma.get(k, i, j);
                }
            }
            s
        });
        Ok((sigma, b))
    }

    /// `Δ^{g_A} f(p)`.
    pub fn associated_laplacian(&self, f: &dyn TestFunction, p: &Point) -> Result<f64> {
        let (a, b) = self.associated_laplacian_coefficients(p)?;
        Ok(apply_coefficients(&a, &b, f, self.atlas, p))
    }

    /// Coefficients of the first-order operator `A − Δ^{g_A}`.
    pub fn drift(&self, p: &Point) -> Result<Vector> {
        let (_, b) = self.coefficients(p)?;
        let (_, b_delta) = self.associated_laplacian_coefficients(p)?;
        Ok(b - b_delta)
    }

    /// Quadrature estimate at `p`, with the drift when `with_drift` is set.
    pub fn estimate(&self, p: &Point, with_drift: bool) -> Result<GeneratorEstimate> {
        let (a, b) = self.coefficients(p)?;
        a.cholesky()?;
        let drift = if with_drift { Some(b - self.associated_laplacian_coefficients(p)?.1) } else { None };
        Ok(GeneratorEstimate {
            point: *p,
            second_order: a,
            first_order: b,
            symbol: a,
            drift,
            provenance: Provenance::Quadrature,
        })
    }
}

/// `b·∇f + a:∇²f` at `p`.
pub fn apply_coefficients(a: &Matrix, b: &Vector, f: &dyn TestFunction, atlas: &ChartAtlas, p: &Point) -> f64 {
    b.dot(&f.gradient(atlas, p)) + a.contract(&f.hessian(atlas, p))
}

/// Co-metric of the associated metric at each grid point: the symbol itself,
/// after checking positive definiteness.
pub fn associated_metric(symbols: &[Matrix]) -> Result<Vec<Matrix>> {
    symbols
        .iter()
        .map(|s| {
            s.cholesky()?;
            Ok(*s)
        })
        .collect()
}

/// Drift of the Katok walk with the disc measure in the standard sphere chart:
/// `r ∂_ψ + ¼ r² cosθ sinθ (r² cos²θ − 2)/(1 − r² cos²θ)² ∂_θ`.
pub fn katok_drift_closed_form(r: f64, theta: f64) -> Vector {
    let (s, c) = theta.sin_cos();
    let q = r * r * c * c;
    Vector::from_slice(&[r, 0.25 * r * r * c * s * (q - 2.0) / ((1.0 - q) * (1.0 - q))])
}

/// Sample mean and its standard error.
pub fn sample_mean(values: &[f64]) -> Estimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
    Estimate { value: mean, standard_error: (var / n as f64).sqrt(), samples: n }
}

/// `(mean f(ξ_t) − f(p)) / t` from per-path values `f(ξ_t)`.
pub fn mc_generator_estimate(values: &[f64], f_p: f64, t: f64) -> Estimate {
    let diffs: Vec<f64> = values.iter().map(|v| (v - f_p) / t).collect();
    sample_mean(&diffs)
}

/// Draws `samples` values of `f(exp_p(Y^N))`, for ad hoc Monte Carlo checks.
pub fn sample_step_values<R: Rng + ?Sized>(
    lab: &GeneratorLab<'_>,
    f: &dyn TestFunction,
    p: &Point,
    n_scale: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let walker = crate::walk::Walker::new(lab.metric, lab.atlas, lab.family, lab.ode);
    (0..samples).map(|_| Ok(f.value(lab.atlas, &walker.walk_step(p, n_scale, rng)?.0))).collect()
}

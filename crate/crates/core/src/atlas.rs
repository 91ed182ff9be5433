//! Coordinate charts and transition maps.
//!
//! Two manifolds are modelled: flat `R^m` with one global chart, and the unit
//! sphere `S^2` with two spherical charts
//!
//! ```text
//! chart 0: (ψ, θ) ↦ (cos ψ cos θ, sin ψ cos θ, sin θ)
//! chart 1: (ψ, θ) ↦ R·(cos ψ cos θ, sin ψ cos θ, sin θ),  R(x, y, z) = (x, −z, y)
//! ```
//!
//! where `R` is the rotation by π/2 about the x-axis. A point is moved to the
//! other chart once `|θ|` exceeds the switch threshold, which keeps every
//! evaluation away from the coordinate poles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub type ChartId = usize;

/// A point of the manifold expressed in a particular chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: ChartId,
    pub coords: Vector,
}

impl Point {
    pub fn new(chart: ChartId, coords: Vector) -> Self {
        Point { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartInfo {
    pub id: ChartId,
    pub dim: usize,
    /// Closed coordinate box `(lo, hi)` per axis; infinite bounds are allowed.
    pub domain: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Topology {
    Flat { dim: usize },
    Sphere { switch_theta: f64, domain_theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartAtlas {
    topology: Topology,
}

pub const SPHERE_SWITCH_THETA: f64 = 1.0;
pub const SPHERE_DOMAIN_THETA: f64 = 1.5;

impl ChartAtlas {
    pub fn flat(dim: usize) -> Self {
        ChartAtlas { topology: Topology::Flat { dim } }
    }

    pub fn sphere() -> Self {
        ChartAtlas::sphere_with(SPHERE_SWITCH_THETA, SPHERE_DOMAIN_THETA)
    }

    pub fn sphere_with(switch_theta: f64, domain_theta: f64) -> Self {
        assert!(switch_theta < domain_theta && domain_theta < std::f64::consts::FRAC_PI_2);
        ChartAtlas { topology: Topology::Sphere { switch_theta, domain_theta } }
    }

    pub fn dim(&self) -> usize {
        match self.topology {
            Topology::Flat { dim } => dim,
            Topology::Sphere { .. } => 2,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.topology, Topology::Sphere { .. })
    }

    pub fn charts(&self) -> Vec<ChartInfo> {
        match self.topology {
            Topology::Flat { dim } => {
                vec![ChartInfo { id: 0, dim, domain: vec![(f64::NEG_INFINITY, f64::INFINITY); dim] }]
            }
            Topology::Sphere { domain_theta, .. } => (0..2)
                .map(|id| ChartInfo {
                    id,
                    dim: 2,
                    domain: vec![(f64::NEG_INFINITY, f64::INFINITY), (-domain_theta, domain_theta)],
                })
                .collect(),
        }
    }

    /// Whether `x` lies in the domain of `chart`.
    pub fn contains(&self, chart: ChartId, x: &Vector) -> bool {
        if x.dim() != self.dim() || !x.is_finite() {
            return false;
        }
        match self.topology {
            Topology::Flat { .. } => chart == 0,
            Topology::Sphere { domain_theta, .. } => chart < 2 && x[1].abs() <= domain_theta,
        }
    }

    /// Switch policy: true when the point should be re-expressed in another chart.
    pub fn needs_switch(&self, chart: ChartId, x: &Vector) -> bool {
        match self.topology {
            Topology::Flat { .. } => false,
            Topology::Sphere { switch_theta, .. } => chart < 2 && x[1].abs() > switch_theta,
        }
    }

    fn check(&self, p: &Point) -> Result<()> {
        if p.coords.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.coords.dim() });
        }
        if !self.contains(p.chart, &p.coords) {
            return Err(Error::NoCoveringChart);
        }
        Ok(())
    }

    /// Applies the switch policy: identity when the point may stay, otherwise
    /// the same point in the other chart.
    pub fn transition(&self, p: &Point) -> Result<Point> {
        self.check(p)?;
        if !self.needs_switch(p.chart, &p.coords) {
            return Ok(*p);
        }
        self.to_chart(p, 1 - p.chart, None)
    }

    /// Like [`transition`](Self::transition) but also carries a tangent vector along.
    pub fn transition_with_tangent(&self, p: &Point, y: &Vector) -> Result<(Point, Vector)> {
        self.check(p)?;
        if !self.needs_switch(p.chart, &p.coords) {
            return Ok((*p, *y));
        }
        let q = self.to_chart(p, 1 - p.chart, None)?;
        Ok((q, self.push_tangent(p, y, &q)))
    }

    /// Expresses `p` in chart `target`. On the sphere the longitude branch is
    /// chosen closest to `reference` (or in `(−π, π]` without one).
    pub fn to_chart(&self, p: &Point, target: ChartId, reference: Option<&Vector>) -> Result<Point> {
        if p.coords.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.coords.dim() });
        }
        match self.topology {
            Topology::Flat { .. } => {
                if target != 0 {
                    return Err(Error::NoCoveringChart);
                }
                Ok(*p)
            }
            Topology::Sphere { domain_theta, .. } => {
                if target > 1 {
                    return Err(Error::NoCoveringChart);
                }
                let e = self.embed(p).ok_or(Error::NoCoveringChart)?;
                let mut x = sphere_chart_inverse(target, e);
                if let Some(r) = reference {
                    let two_pi = 2.0 * std::f64::consts::PI;
                    x[0] += two_pi * ((r[0] - x[0]) / two_pi).round();
                }
                if x[1].abs() > domain_theta {
                    return Err(Error::NoCoveringChart);
                }
                Ok(Point::new(target, x))
            }
        }
    }

    /// Pushes a tangent vector at `from` into the chart of `to`, which must be
    /// the same manifold point.
    pub fn push_tangent(&self, from: &Point, y: &Vector, to: &Point) -> Vector {
        match self.topology {
            Topology::Flat { .. } => *y,
            Topology::Sphere { .. } => {
                if from.chart == to.chart {
                    return *y;
                }
                let j = sphere_jacobian(from.chart, &from.coords);
                let v =
                    [j[0][0] * y[0] + j[0][1] * y[1], j[1][0] * y[0] + j[1][1] * y[1], j[2][0] * y[0] + j[2][1] * y[1]];
                ambient_to_tangent(to.chart, &to.coords, v)
            }
        }
    }

    /// Embedding into `R^3` (sphere) or `R^m` padded with zeros (flat, `m ≤ 3`).
    pub fn embed(&self, p: &Point) -> Option<[f64; 3]> {
        match self.topology {
            Topology::Flat { dim } => {
                let mut e = [0.0; 3];
                e[..dim].copy_from_slice(p.coords.as_slice());
                Some(e)
            }
            Topology::Sphere { .. } => {
                if p.chart > 1 {
                    return None;
                }
                Some(sphere_chart(p.chart, &p.coords))
            }
        }
    }

    /// Point of the sphere given by a unit vector, in the preferred chart.
    pub fn from_embedding(&self, e: [f64; 3]) -> Result<Point> {
        match self.topology {
            Topology::Flat { dim } => Ok(Point::new(0, Vector::from_slice(&e[..dim]))),
            Topology::Sphere { .. } => {
                let p = Point::new(0, sphere_chart_inverse(0, e));
                self.transition(&p).or_else(|_| Ok(Point::new(1, sphere_chart_inverse(1, e))))
            }
        }
    }

    /// Chart-independent distance in the embedding (chord length).
    pub fn chord(&self, p: &Point, q: &Point) -> f64 {
        let (a, b) = (self.embed(p).unwrap_or([f64::NAN; 3]), self.embed(q).unwrap_or([f64::NAN; 3]));
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// First and second derivatives of the embedding at a chart point:
    /// `(J, H)` with `J[a][i] = ∂_i E^a` and `H[a]` the Hessian of `E^a`.
    pub fn embedding_derivatives(&self, p: &Point) -> ([[f64; 3]; 3], [Matrix; 3]) {
        let m = self.dim();
        match self.topology {
            Topology::Flat { .. } => {
                let mut j = [[0.0; 3]; 3];
                for a in 0..m {
                    j[a][a] = 1.0;
                }
                (j, [Matrix::zeros(m); 3])
            }
            Topology::Sphere { .. } => {
                let j2 = sphere_jacobian(p.chart, &p.coords);
                let mut j = [[0.0; 3]; 3];
                for a in 0..3 {
                    j[a][0] = j2[a][0];
                    j[a][1] = j2[a][1];
                }
                (j, sphere_hessians(p.chart, &p.coords))
            }
        }
    }
}

#[inline]
fn rotate(chart: ChartId, v: [f64; 3]) -> [f64; 3] {
    if chart == 0 {
        v
    } else {
        [v[0], -v[2], v[1]]
    }
}

#[inline]
fn unrotate(chart: ChartId, v: [f64; 3]) -> [f64; 3] {
    if chart == 0 {
        v
    } else {
        [v[0], v[2], -v[1]]
    }
}

pub(crate) fn sphere_chart(chart: ChartId, x: &Vector) -> [f64; 3] {
    let (sp, cp) = x[0].sin_cos();
    let (st, ct) = x[1].sin_cos();
    rotate(chart, [cp * ct, sp * ct, st])
}

pub(crate) fn sphere_chart_inverse(chart: ChartId, e: [f64; 3]) -> Vector {
    let q = unrotate(chart, e);
    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    let z = (q[2] / norm).clamp(-1.0, 1.0);
    Vector::from_slice(&[q[1].atan2(q[0]), z.asin()])
}

/// `J[a][i] = ∂_i E^a` for the sphere chart maps.
pub(crate) fn sphere_jacobian(chart: ChartId, x: &Vector) -> [[f64; 2]; 3] {
    let (sp, cp) = x[0].sin_cos();
    let (st, ct) = x[1].sin_cos();
    let dpsi = rotate(chart, [-sp * ct, cp * ct, 0.0]);
    let dtheta = rotate(chart, [-cp * st, -sp * st, ct]);
    [[dpsi[0], dtheta[0]], [dpsi[1], dtheta[1]], [dpsi[2], dtheta[2]]]
}

fn sphere_hessians(chart: ChartId, x: &Vector) -> [Matrix; 3] {
    let (sp, cp) = x[0].sin_cos();
    let (st, ct) = x[1].sin_cos();
    let pp = rotate(chart, [-cp * ct, -sp * ct, 0.0]);
    let pt = rotate(chart, [sp * st, -cp * st, 0.0]);
    let tt = rotate(chart, [-cp * ct, -sp * ct, -st]);
    let mk = |a: usize| Matrix::from_rows(&[&[pp[a], pt[a]], &[pt[a], tt[a]]]);
    [mk(0), mk(1), mk(2)]
}

/// Components in chart coordinates of an ambient vector tangent to the sphere.
pub(crate) fn ambient_to_tangent(chart: ChartId, x: &Vector, v: [f64; 3]) -> Vector {
    let j = sphere_jacobian(chart, x);
    let cos_t = x[1].cos();
    let dot_psi = j[0][0] * v[0] + j[1][0] * v[1] + j[2][0] * v[2];
    let dot_theta = j[0][1] * v[0] + j[1][1] * v[1] + j[2][1] * v[2];
    Vector::from_slice(&[dot_psi / (cos_t * cos_t), dot_theta])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    #[test]
    fn flat_transition_is_identity() {
        let atlas = ChartAtlas::flat(2);
        let p = Point::new(0, Vector::from_slice(&[3.5, -1e6]));
        assert_eq!(atlas.transition(&p).unwrap(), p);
    }

    #[test]
    fn sphere_switch_lands_inside_threshold() {
        let atlas = ChartAtlas::sphere();
        for &(psi, theta) in &[(0.3, 1.2), (-2.0, -1.3), (3.0, 1.01), (1.5, 1.45)] {
            let p = Point::new(0, Vector::from_slice(&[psi, theta]));
            let q = atlas.transition(&p).unwrap();
            assert_eq!(q.chart, 1);
            assert!(q.coords[1].abs() < SPHERE_SWITCH_THETA);
            assert!(dist3(atlas.embed(&p).unwrap(), atlas.embed(&q).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn transition_round_trip() {
        let atlas = ChartAtlas::sphere();
        for &(psi, theta) in &[(0.3, 0.4), (-2.0, -0.7), (3.0, 0.1)] {
            let p = Point::new(0, Vector::from_slice(&[psi, theta]));
            let q = atlas.to_chart(&p, 1, None).unwrap();
            let back = atlas.to_chart(&q, 0, Some(&p.coords)).unwrap();
            assert!((back.coords - p.coords).max_abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_push_preserves_ambient_vector() {
        let atlas = ChartAtlas::sphere();
        let p = Point::new(0, Vector::from_slice(&[0.7, 1.2]));
        let y = Vector::from_slice(&[0.4, -0.9]);
        let (q, yq) = atlas.transition_with_tangent(&p, &y).unwrap();
        let amb = |pt: &Point, v: &Vector| {
            let j = sphere_jacobian(pt.chart, &pt.coords);
            [0, 1, 2].map(|a| j[a][0] * v[0] + j[a][1] * v[1])
        };
        assert!(dist3(amb(&p, &y), amb(&q, &yq)) < 1e-14);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let atlas = ChartAtlas::sphere();
        let p = Point::new(0, Vector::from_slice(&[0.0, 1.56]));
        assert_eq!(atlas.transition(&p), Err(Error::NoCoveringChart));
    }
}

//! Smooth test functions with analytic chart gradients and Hessians.
//!
//! Functions are defined on the ambient space `R^3` and pulled back through the
//! atlas embedding, so they are chart-independent on the sphere and reduce to
//! ordinary functions of the coordinates on flat spaces.

use serde::{Deserialize, Serialize};

use crate::atlas::{ChartAtlas, Point};
use crate::linalg::{Matrix, Vector};

/// A scalar function with derivatives in the chart coordinates of the query point.
pub trait TestFunction: Send + Sync {
    fn value(&self, atlas: &ChartAtlas, p: &Point) -> f64;
    fn gradient(&self, atlas: &ChartAtlas, p: &Point) -> Vector;
    fn hessian(&self, atlas: &ChartAtlas, p: &Point) -> Matrix;
}

type Grad3 = [f64; 3];
type Hess3 = [[f64; 3]; 3];

/// Function on `R^3` with closed-form value, gradient and Hessian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Ambient {
    Constant {
        c: f64,
    },
    /// `c · E`
    Linear {
        c: Grad3,
    },
    /// `½ Eᵀ Q E` with `Q` symmetric.
    Quadratic {
        q: Hess3,
    },
    /// `exp(−|E − center|² / (2 width²))`
    Gaussian {
        center: Grad3,
        width: f64,
    },
    /// `asin(E_3) − offset`: latitude on the unit sphere.
    Latitude {
        offset: f64,
    },
    Sum {
        terms: Vec<Ambient>,
    },
    Product {
        a: Box<Ambient>,
        b: Box<Ambient>,
    },
    Scaled {
        factor: f64,
        f: Box<Ambient>,
    },
}

impl Ambient {
    /// `(asin z − θ0) · exp(−|E − E0|²/(2w²))`: a bump that is locally the
    /// latitude coordinate shifted to vanish at `E0`.
    pub fn latitude_bump(center: Grad3, width: f64) -> Self {
        let theta0 = center[2].clamp(-1.0, 1.0).asin();
        Ambient::Product {
            a: Box::new(Ambient::Latitude { offset: theta0 }),
            b: Box::new(Ambient::Gaussian { center, width }),
        }
    }

    pub fn eval3(&self, e: &Grad3) -> (f64, Grad3, Hess3) {
        match self {
            Ambient::Constant { c } => (*c, [0.0; 3], [[0.0; 3]; 3]),
            Ambient::Linear { c } => (dot(c, e), *c, [[0.0; 3]; 3]),
            Ambient::Quadratic { q } => {
                let qe = [dot(&q[0], e), dot(&q[1], e), dot(&q[2], e)];
                (0.5 * dot(e, &qe), qe, *q)
            }
            Ambient::Gaussian { center, width } => {
                let d = [e[0] - center[0], e[1] - center[1], e[2] - center[2]];
                let s2 = width * width;
                let v = (-dot(&d, &d) / (2.0 * s2)).exp();
                let grad = d.map(|di| -v * di / s2);
                let mut h = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        h[i][j] = v * (d[i] * d[j] / (s2 * s2) - if i == j { 1.0 / s2 } else { 0.0 });
                    }
                }
                (v, grad, h)
            }
            Ambient::Latitude { offset } => {
                let z = e[2];
                let s = 1.0 - z * z;
                let mut h = [[0.0; 3]; 3];
                h[2][2] = z / (s * s.sqrt());
                (z.asin() - offset, [0.0, 0.0, 1.0 / s.sqrt()], h)
            }
            Ambient::Sum { terms } => {
                let mut acc = (0.0, [0.0; 3], [[0.0; 3]; 3]);
                for t in terms {
                    let (v, g, h) = t.eval3(e);
                    acc.0 += v;
                    for i in 0..3 {
                        acc.1[i] += g[i];
                        for j in 0..3 {
                            acc.2[i][j] += h[i][j];
                        }
                    }
                }
                acc
            }
            Ambient::Product { a, b } => {
                let (va, ga, ha) = a.eval3(e);
                let (vb, gb, hb) = b.eval3(e);
                let mut h = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        h[i][j] = ha[i][j] * vb + va * hb[i][j] + ga[i] * gb[j] + ga[j] * gb[i];
                    }
                }
                (va * vb, [0, 1, 2].map(|i| ga[i] * vb + va * gb[i]), h)
            }
            Ambient::Scaled { factor, f } => {
                let (v, g, h) = f.eval3(e);
                (factor * v, g.map(|x| factor * x), h.map(|row| row.map(|x| factor * x)))
            }
        }
    }
}

fn dot(a: &Grad3, b: &Grad3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl TestFunction for Ambient {
    fn value(&self, atlas: &ChartAtlas, p: &Point) -> f64 {
        let e = atlas.embed(p).expect("point lies in a chart of the atlas");
        self.eval3(&e).0
    }

    fn gradient(&self, atlas: &ChartAtlas, p: &Point) -> Vector {
        let e = atlas.embed(p).expect("point lies in a chart of the atlas");
        let (_, g, _) = self.eval3(&e);
        let (jac, _) = atlas.embedding_derivatives(p);
        Vector::from_fn(atlas.dim(), |i| (0..3).map(|a| g[a] * jac[a][i]).sum())
    }

    fn hessian(&self, atlas: &ChartAtlas, p: &Point) -> Matrix {
        let e = atlas.embed(p).expect("point lies in a chart of the atlas");
        let (_, g, h) = self.eval3(&e);
        let (jac, hess) = atlas.embedding_derivatives(p);
        Matrix::from_fn(atlas.dim(), |i, j| {
            let mut s = 0.0;
            for a in 0..3 {
                s += g[a] * hess[a][(i, j)];
                for b in 0..3 {
                    s += h[a][b] * jac[a][i] * jac[b][j];
                }
            }
            s
        })
    }
}

/// Largest deviation of the analytic gradient and Hessian from central
/// differences with step `h` in the chart of `p`.
pub fn derivative_mismatch(f: &dyn TestFunction, atlas: &ChartAtlas, p: &Point, h: f64) -> f64 {
    let m = atlas.dim();
    let at = |x: Vector| Point::new(p.chart, x);
    let grad = f.gradient(atlas, p);
    let hess = f.hessian(atlas, p);
    let mut worst = 0.0_f64;
    for i in 0..m {
        let ei = Vector::basis(m, i) * h;
        let fd = (f.value(atlas, &at(p.coords + ei)) - f.value(atlas, &at(p.coords - ei))) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs());
        let gp = f.gradient(atlas, &at(p.coords + ei));
        let gm = f.gradient(atlas, &at(p.coords - ei));
        for j in 0..m {
            worst = worst.max(((gp[j] - gm[j]) / (2.0 * h) - hess[(i, j)]).abs());
        }
    }
    worst
}

//! Experiment tables: generator convergence in `N` and exit-time probabilities.

use serde::{Deserialize, Serialize};

use crate::atlas::Point;
use crate::error::{Error, Result};
use crate::generator::{AnMode, GeneratorLab};
use crate::geodesic::DistanceRoutine;
use crate::testfn::TestFunction;
use crate::walk::{exit_time, simulate_paths_map, Walker};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n_scale: f64,
    /// `sup |A_N f − A f|` over the probe points and test functions.
    pub sup_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log sup_error` against `log N`.
    pub slope: f64,
}

impl ConvergenceTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn check_geometric(ns: &[f64]) -> Result<Vec<f64>> {
    if ns.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "convergence study needs at least 3 values of N, got {}",
            ns.len()
        )));
    }
    let mut sorted = ns.to_vec();
    sorted.sort_by(f64::total_cmp);
    if !(sorted[0] >= 1.0) {
        return Err(Error::InvalidParameter("values of N must be at least 1".into()));
    }
    let ratio = sorted[1] / sorted[0];
    let geometric = ratio > 1.0 && sorted.windows(2).all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::InvalidParameter(format!("values of N must form a geometric progression, got {ns:?}")));
    }
    Ok(sorted)
}

/// `sup |A_N f − A f|` over `probes × functions` for each `N`, by quadrature.
pub fn convergence_study(
    lab: &GeneratorLab<'_>,
    functions: &[&dyn TestFunction],
    probes: &[Point],
    ns: &[f64],
) -> Result<ConvergenceTable> {
    let ns = check_geometric(ns)?;
    let mut limits = Vec::with_capacity(probes.len() * functions.len());
    for p in probes {
        for f in functions {
            limits.push(lab.apply_a(*f, p)?);
        }
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let mut sup = 0.0_f64;
        let mut idx = 0;
        for p in probes {
            for f in functions {
                let an = lab.apply_an(*f, p, n, AnMode::Quadrature)?.value;
                sup = sup.max((an - limits[idx]).abs());
                idx += 1;
            }
        }
        rows.push(ConvergenceRow { n_scale: n, sup_error: sup });
    }
    let slope = log_log_slope(&ns, &rows.iter().map(|r| r.sup_error).collect::<Vec<_>>());
    Ok(ConvergenceTable { rows, slope })
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Normal quantile for two-sided 95% intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRow {
    pub delta: f64,
    pub t: f64,
    pub exits: usize,
    pub paths: usize,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitTable {
    pub rows: Vec<ExitRow>,
    /// Per `δ`: slope `C` of the least-squares fit `P ≈ C t` through the origin.
    pub linear_fit: Vec<(f64, f64)>,
}

impl ExitTable {
    pub fn rows_for(&self, delta: f64) -> impl Iterator<Item = &ExitRow> {
        self.rows.iter().filter(move |r| r.delta == delta)
    }
}

/// Exit-time settings; paths are subordinated walks started at `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExitStudy {
    pub start: Point,
    pub n_scale: f64,
    pub deltas: Vec<f64>,
    pub times: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
}

/// Empirical `P(τ^{N,δ} ≤ t)` with Wilson 95% intervals.
pub fn exit_time_study(walker: &Walker<'_>, study: &ExitStudy, routine: &dyn DistanceRoutine) -> Result<ExitTable> {
    if study.times.iter().any(|t| !(*t >= 0.0)) || study.deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidParameter("exit study needs t ≥ 0 and δ > 0".into()));
    }
    let horizon = study.times.iter().copied().fold(0.0, f64::max);
    let exits: Vec<Vec<f64>> = simulate_paths_map(study.paths, |i| {
        let path = walker.subordinated_path(&study.start, study.n_scale, horizon, study.seed, i)?;
        study.deltas.iter().map(|&d| exit_time(&path, &study.start, d, routine)).collect()
    })?;
    let mut rows = Vec::new();
    let mut linear_fit = Vec::new();
    for (di, &delta) in study.deltas.iter().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for &t in &study.times {
            let k = exits.iter().filter(|e| e[di] <= t).count();
            let p = k as f64 / study.paths.max(1) as f64;
            let (lo, hi) = wilson_interval(k, study.paths, Z_95);
            rows.push(ExitRow { delta, t, exits: k, paths: study.paths, probability: p, ci_low: lo, ci_high: hi });
            num += t * p;
            den += t * t;
        }
        linear_fit.push((delta, if den > 0.0 { num / den } else { 0.0 }));
    }
    Ok(ExitTable { rows, linear_fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, Z_95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 100, Z_95).0, 0.0);
        let (lo, hi) = wilson_interval(0, 0, Z_95);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn non_geometric_grid_is_rejected() {
        assert!(check_geometric(&[100.0, 400.0]).is_err());
        assert!(check_geometric(&[100.0, 400.0, 1000.0]).is_err());
        assert_eq!(check_geometric(&[400.0, 100.0, 1600.0]).unwrap(), vec![100.0, 400.0, 1600.0]);
    }
}

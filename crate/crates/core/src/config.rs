//! Run configuration: `[metric]`, `[measure]`, `[walk]` and `[study]` sections.
//!
//! The structs deserialize from any self-describing format; the command line
//! front end reads TOML.

use serde::{Deserialize, Serialize};

use crate::atlas::{ChartAtlas, Point};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::measure::{MeanPolicy, MeasureFamily};
use crate::testfn::Ambient;
use crate::walk::WalkConfig;
use crate::zoo::{build_metric, probe_points, BuiltMetric, MetricSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricSpec,
    #[serde(default)]
    pub measure: MeasureSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkConfig>,
    #[serde(default)]
    pub study: StudyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    /// `lebesgue-disc`, `indicatrix` or `discrete`.
    #[serde(default = "default_measure")]
    pub name: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// `analytic`, `quadrature` or `monte-carlo`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<String>,
    /// Sample count for `mean = "monte-carlo"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_samples: Option<usize>,
    /// Atoms of a discrete family, one coordinate list per atom.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
}

fn default_measure() -> String {
    "lebesgue-disc".into()
}
fn default_alpha() -> f64 {
    1.0
}

impl Default for MeasureSpec {
    fn default() -> Self {
        MeasureSpec {
            name: default_measure(),
            alpha: default_alpha(),
            mean: None,
            mean_samples: None,
            atoms: Vec::new(),
            weights: Vec::new(),
        }
    }
}

impl MeasureSpec {
    pub fn build(&self) -> Result<MeasureFamily> {
        let family = match self.name.as_str() {
            "lebesgue-disc" | "disc" => MeasureFamily::lebesgue_disc(),
            "indicatrix" => MeasureFamily::indicatrix(),
            "discrete" => {
                if self.atoms.is_empty() {
                    return Err(Error::InvalidParameter("discrete measure needs `atoms`".into()));
                }
                let atoms = self.atoms.iter().map(|a| Vector::from_slice(a)).collect();
                MeasureFamily::discrete(atoms, self.weights.clone())?
            }
            other => return Err(Error::Unknown { what: "measure", name: other.into() }),
        };
        let family = match self.mean.as_deref() {
            None => family,
            Some("analytic") => family.with_mean_policy(MeanPolicy::Analytic),
            Some("quadrature") => family.with_mean_policy(MeanPolicy::Quadrature),
            Some("monte-carlo") => {
                family.with_mean_policy(MeanPolicy::MonteCarlo(self.mean_samples.unwrap_or(100_000)))
            }
            Some(other) => return Err(Error::Unknown { what: "mean policy", name: other.into() }),
        };
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite, got {}", self.alpha)));
        }
        Ok(family.with_alpha(self.alpha))
    }
}

/// Grids for generator, convergence and exit-time studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Values of `N` for the convergence table (geometric progression).
    #[serde(rename = "Ns", skip_serializing_if = "Vec::is_empty")]
    pub ns: Vec<f64>,
    /// Probe coordinates in `probe_chart`; the metric's default grid when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<Vec<f64>>>,
    pub probe_chart: usize,
    /// Test functions; a default pair when empty.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<Ambient>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Estimate the drift alongside the coefficients.
    pub drift: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            ns: Vec::new(),
            probes: None,
            probe_chart: 0,
            functions: Vec::new(),
            deltas: Vec::new(),
            times: Vec::new(),
            drift: true,
        }
    }
}

impl StudyConfig {
    pub fn probe_points(&self, atlas: &ChartAtlas) -> Result<Vec<Point>> {
        let Some(probes) = &self.probes else {
            return Ok(probe_points(atlas, 3));
        };
        probes
            .iter()
            .map(|c| {
                if c.len() != atlas.dim() {
                    return Err(Error::DimensionMismatch { expected: atlas.dim(), got: c.len() });
                }
                let x = Vector::from_slice(c);
                if !atlas.contains(self.probe_chart, &x) {
                    return Err(Error::NoCoveringChart);
                }
                Ok(Point::new(self.probe_chart, x))
            })
            .collect()
    }

    pub fn test_functions(&self, atlas: &ChartAtlas) -> Vec<Ambient> {
        if !self.functions.is_empty() {
            return self.functions.clone();
        }
        if atlas.is_sphere() {
            vec![
                Ambient::latitude_bump([0.8, 0.3, 0.52], 0.5),
                Ambient::Gaussian { center: [-0.6, 0.6, -0.5], width: 0.7 },
            ]
        } else {
            vec![
                Ambient::Gaussian { center: [0.3, -0.2, 0.0], width: 0.8 },
                Ambient::Product {
                    a: Box::new(Ambient::Linear { c: [1.0, 0.5, 0.25] }),
                    b: Box::new(Ambient::Gaussian { center: [0.0; 3], width: 1.0 }),
                },
            ]
        }
    }
}

/// A configuration with every component constructed.
pub struct Resolved {
    pub built: BuiltMetric,
    pub family: MeasureFamily,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(walk) = &self.walk {
            walk.validate()?;
        }
        if self.study.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidParameter("study.deltas must be positive".into()));
        }
        if self.study.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidParameter("study.times must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let built = build_metric(&self.metric)?;
        let family = self.measure.build()?;
        if let Some(walk) = &self.walk {
            let start = walk.start_point();
            if start.dim() != built.atlas.dim() {
                return Err(Error::DimensionMismatch { expected: built.atlas.dim(), got: start.dim() });
            }
            if !built.atlas.contains(start.chart, &start.coords) {
                return Err(Error::NoCoveringChart);
            }
        }
        Ok(Resolved { built, family })
    }

    /// The `[walk]` section, required by path-based commands.
    pub fn walk(&self) -> Result<&WalkConfig> {
        self.walk.as_ref().ok_or_else(|| Error::InvalidParameter("missing [walk] section".into()))
    }
}

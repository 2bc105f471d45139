//! Run configuration files.
//!
//! A configuration is one JSON document. Unknown keys anywhere are errors,
//! and every block is validated before any command runs.

use std::path::{Path, PathBuf};

use bjpa_core::circuit::BlochniumDesign;
use bjpa_core::constants::ghz_to_rad;
use bjpa_core::metrics::{CompressionOptions, DEFAULT_DELTA};
use bjpa_core::optimize::SearchDim;
use bjpa_core::steady_state::{bifurcation_threshold, BranchPolicy, PumpDrive};
use bjpa_core::sweep::{Metric, Param};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub design: BlochniumDesign,
    /// When set, `e_js` of `design` (and of `compare.b`) is rescaled so the
    /// unbiased mode sits here.
    #[serde(default)]
    pub design_frequency_ghz: Option<f64>,
    pub scale: ScaleConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub photon_number: Option<PhotonNumberConfig>,
    #[serde(default)]
    pub gain: Option<GainConfig>,
    #[serde(default)]
    pub p1db: Option<P1dbConfig>,
    #[serde(default)]
    pub tune: Option<TuneConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    /// Pump angular frequency (rad/s).
    pub omega_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Format>, CliError> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let f = match part {
                "csv" => Format::Csv,
                "json" => Format::Json,
                "svg" => Format::Svg,
                other => return Err(CliError::Config(format!("--formats: unknown format `{other}`"))),
            };
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("--formats: no formats given".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// Either an explicit list or `count` evenly spaced values from `start` to
/// `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
}

impl Grid {
    pub fn list(values: Vec<f64>) -> Self {
        Self {
            values: Some(values),
            ..Self::default()
        }
    }

    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let bad = |msg: &str| CliError::Config(format!("{field}: {msg}"));
        let out = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => return Err(bad("count must be at least 1")),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            },
            _ => return Err(bad("give either `values` or all of `start`, `stop`, `count`")),
        };
        if out.is_empty() {
            return Err(bad("grid is empty"));
        }
        if let Some(v) = out.iter().find(|v| !v.is_finite()) {
            return Err(bad(&format!("non-finite value {v}")));
        }
        Ok(out)
    }
}

/// How ζ values in a grid are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaUnits {
    /// Plain ζ.
    #[default]
    Absolute,
    /// Multiples of the signed bifurcation threshold `−1/√27`.
    Threshold,
}

impl ZetaUnits {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            ZetaUnits::Absolute => v,
            // Adding zero folds −0 into +0.
            ZetaUnits::Threshold => -v * bifurcation_threshold() + 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonNumberConfig {
    pub delta: Grid,
    pub zeta: Grid,
    #[serde(default)]
    pub zeta_units: ZetaUnits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainConfig {
    pub delta: Grid,
    pub zeta: Grid,
    #[serde(default)]
    pub zeta_units: ZetaUnits,
    pub big_delta: Grid,
    #[serde(default)]
    pub pump_phase: f64,
    #[serde(default)]
    pub policy: BranchPolicy,
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P1dbConfig {
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Pump powers to evaluate (dBm).
    #[serde(default)]
    pub pump_power_dbm: Option<Grid>,
    /// Set the pump for this small-signal gain instead.
    #[serde(default)]
    pub gain_target_db: Option<f64>,
    #[serde(default)]
    pub compression: CompressionOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub band_ghz: (f64, f64),
    #[serde(default = "default_tune_points")]
    pub n_points: usize,
    #[serde(default = "default_tune_drive")]
    pub drive: PumpDrive,
}

fn default_tune_points() -> usize {
    10
}

fn default_tune_drive() -> PumpDrive {
    PumpDrive::new(DEFAULT_DELTA, -0.9 * bifurcation_threshold())
}

fn default_gain_target() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// The design compared against the top-level `design`.
    pub b: BlochniumDesign,
    #[serde(default = "default_gain_target")]
    pub gain_target_db: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub compression: CompressionOptions,
}

fn default_budget() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    #[serde(default = "default_gain_target")]
    pub min_gain_db: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub bounds: Vec<SearchDim>,
    #[serde(default)]
    pub compression: CompressionOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxisConfig {
    pub param: Param,
    #[serde(flatten)]
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxisConfig>,
    pub outputs: Vec<Metric>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub zeta: f64,
    #[serde(default)]
    pub pump_phase: f64,
    #[serde(default)]
    pub pump_power_dbm: Option<f64>,
    #[serde(default)]
    pub big_delta: f64,
    #[serde(default)]
    pub policy: BranchPolicy,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    #[serde(default)]
    pub compression: CompressionOptions,
}

fn default_max_points() -> usize {
    bjpa_core::sweep::DEFAULT_MAX_POINTS
}

impl RunConfig {
    /// Parse with field paths in error messages.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("{path}: {inner}"))
            }
        })
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Config(format!("config {} is not UTF-8", path.display())))?;
        Ok((Self::from_json(text)?, bytes))
    }

    /// Validate every block, then apply frequency calibration.
    pub fn prepare(mut self) -> Result<Self, CliError> {
        let core = |prefix: &str, e: bjpa_core::Error| CliError::Config(format!("{prefix}: {e}"));
        self.design.validate().map_err(|e| core("design", e))?;
        if !(self.scale.omega_p.is_finite() && self.scale.omega_p > 0.0) {
            return Err(CliError::Config("scale.omega_p: must be finite and > 0".into()));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats: no formats given".into()));
        }
        if let Some(f) = self.design_frequency_ghz {
            if !(f.is_finite() && f > 0.0) {
                return Err(CliError::Config("design_frequency_ghz: must be finite and > 0".into()));
            }
            self.design = self
                .design
                .scaled_to_frequency(ghz_to_rad(f))
                .map_err(|e| core("design_frequency_ghz", e))?;
            if let Some(c) = &mut self.compare {
                c.b.validate().map_err(|e| core("compare.b", e))?;
                c.b = c
                    .b
                    .scaled_to_frequency(ghz_to_rad(f))
                    .map_err(|e| core("compare.b", e))?;
            }
        }
        if let Some(c) = &self.photon_number {
            c.delta.values("photon_number.delta")?;
            c.zeta.values("photon_number.zeta")?;
        }
        if let Some(c) = &self.gain {
            c.delta.values("gain.delta")?;
            c.zeta.values("gain.zeta")?;
            c.big_delta.values("gain.big_delta")?;
            finite("gain.pump_phase", c.pump_phase)?;
        }
        if let Some(c) = &self.p1db {
            finite("p1db.delta", c.delta)?;
            c.compression.validate().map_err(|e| core("p1db.compression", e))?;
            match (&c.pump_power_dbm, c.gain_target_db) {
                (Some(g), None) => {
                    g.values("p1db.pump_power_dbm")?;
                }
                (None, Some(t)) => finite("p1db.gain_target_db", t)?,
                _ => {
                    return Err(CliError::Config(
                        "p1db: give exactly one of `pump_power_dbm` and `gain_target_db`".into(),
                    ))
                }
            }
        }
        if let Some(c) = &self.tune {
            let (lo, hi) = c.band_ghz;
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(CliError::Config("tune.band_ghz: need 0 < low < high".into()));
            }
            if c.n_points == 0 {
                return Err(CliError::Config("tune.n_points: must be at least 1".into()));
            }
            finite("tune.drive.delta", c.drive.delta)?;
            finite("tune.drive.zeta", c.drive.zeta)?;
            finite("tune.drive.pump_phase", c.drive.pump_phase)?;
        }
        if let Some(c) = &self.compare {
            c.b.validate().map_err(|e| core("compare.b", e))?;
            finite("compare.gain_target_db", c.gain_target_db)?;
            finite("compare.delta", c.delta)?;
            c.compression.validate().map_err(|e| core("compare.compression", e))?;
        }
        if let Some(c) = &self.optimize {
            finite("optimize.delta", c.delta)?;
            self.optimize_spec(c, None)
                .validate()
                .map_err(|e| core("optimize", e))?;
        }
        if let Some(c) = &self.sweep {
            finite("sweep.delta", c.delta)?;
            finite("sweep.zeta", c.zeta)?;
            self.sweep_spec(c)?.validate().map_err(|e| core("sweep", e))?;
        }
        Ok(self)
    }

    pub fn optimize_spec(&self, c: &OptimizeConfig, seed: Option<u64>) -> bjpa_core::optimize::OptimizeSpec {
        let mut baseline = bjpa_core::sweep::Baseline::new(
            self.design,
            PumpDrive::new(c.delta, 0.0),
            self.scale.omega_p,
        );
        baseline.big_delta = 0.0;
        bjpa_core::optimize::OptimizeSpec {
            baseline,
            dims: c.bounds.clone(),
            min_gain_db: c.min_gain_db,
            budget: c.budget,
            seed: seed.unwrap_or(c.seed),
            compression: c.compression,
        }
    }

    pub fn sweep_spec(&self, c: &SweepConfig) -> Result<bjpa_core::sweep::SweepSpec, CliError> {
        let mut baseline = bjpa_core::sweep::Baseline::new(
            self.design,
            PumpDrive::new(c.delta, c.zeta).with_phase(c.pump_phase),
            self.scale.omega_p,
        );
        baseline.pump_power_dbm = c.pump_power_dbm;
        baseline.big_delta = c.big_delta;
        let mut axes = Vec::with_capacity(c.axes.len());
        for (i, a) in c.axes.iter().enumerate() {
            axes.push(bjpa_core::sweep::SweepAxis {
                param: a.param,
                values: a.grid.values(&format!("sweep.axes[{i}]"))?,
            });
        }
        let mut spec = bjpa_core::sweep::SweepSpec::new(baseline, axes, c.outputs.clone());
        spec.policy = c.policy;
        spec.compression = c.compression;
        spec.max_points = c.max_points;
        Ok(spec)
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field}: must be finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "design": {
            "n_quartons": 70, "m_slaves": 16, "alpha_c": 0.1,
            "e_js": 1.3e-22, "c_g": 5e-16, "c_js": 5e-14, "c_jm": 5e-15,
            "z0": 50.0, "kappa": 6.283185307179586e7
        },
        "scale": { "omega_p": 3.769911184307752e10 }
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap().prepare().unwrap();
        assert_eq!(c.design.flux_bias, 0.0);
        assert_eq!(c.output.formats, vec![Format::Csv, Format::Json]);
        assert!(c.gain.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let text = MINIMAL.replace("\"z0\"", "\"zz\": 1, \"z0\"");
        let e = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(e.contains("design") && e.contains("zz"), "{e}");
    }

    #[test]
    fn missing_field_is_named() {
        let text = MINIMAL.replace(", \"kappa\": 6.283185307179586e7", "");
        let e = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(e.contains("kappa"), "{e}");
    }

    #[test]
    fn grids() {
        let g = Grid {
            start: Some(-1.0),
            stop: Some(1.0),
            count: Some(5),
            ..Grid::default()
        };
        assert_eq!(g.values("g").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let both = Grid {
            values: Some(vec![1.0]),
            count: Some(3),
            ..Grid::default()
        };
        assert!(both.values("g").is_err());
        assert!(Grid::list(vec![]).values("g").is_err());
    }

    #[test]
    fn threshold_units_are_signed() {
        let z = ZetaUnits::Threshold.apply(0.5);
        assert!((z + 0.5 / 27f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn format_list() {
        assert_eq!(Format::parse_list("csv,svg,csv").unwrap(), vec![Format::Csv, Format::Svg]);
        assert!(Format::parse_list("pdf").is_err());
    }
}

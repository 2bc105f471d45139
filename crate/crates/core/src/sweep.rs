//! Cartesian parameter sweeps.
//!
//! A sweep starts from a base design, drive and pump frequency, overrides the
//! swept parameters at each grid point and evaluates only the requested
//! metrics. Points run in parallel; records come back in row-major order with
//! the last axis varying fastest.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, BlochniumDesign};
use crate::constants::rad_to_ghz;
use crate::gain::{gain_at, SignalProbe};
use crate::metrics::{self, CompressionOptions, PhysicalScale};
use crate::steady_state::{photon_number_roots, select_branch, BranchPolicy, PumpDrive};
use crate::{Error, Result};

/// Default cap on the number of grid points.
pub const DEFAULT_MAX_POINTS: usize = 1_000_000;

/// A sweepable input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    NQuartons,
    MSlaves,
    AlphaC,
    EJs,
    CG,
    CJs,
    CJm,
    Z0,
    Kappa,
    FluxBias,
    EC,
    Delta,
    Zeta,
    PumpPhase,
    PumpPowerDbm,
    BigDelta,
    OmegaP,
}

impl Param {
    pub const ALL: [Param; 17] = [
        Param::NQuartons,
        Param::MSlaves,
        Param::AlphaC,
        Param::EJs,
        Param::CG,
        Param::CJs,
        Param::CJm,
        Param::Z0,
        Param::Kappa,
        Param::FluxBias,
        Param::EC,
        Param::Delta,
        Param::Zeta,
        Param::PumpPhase,
        Param::PumpPowerDbm,
        Param::BigDelta,
        Param::OmegaP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::NQuartons => "n_quartons",
            Param::MSlaves => "m_slaves",
            Param::AlphaC => "alpha_c",
            Param::EJs => "e_js",
            Param::CG => "c_g",
            Param::CJs => "c_js",
            Param::CJm => "c_jm",
            Param::Z0 => "z0",
            Param::Kappa => "kappa",
            Param::FluxBias => "flux_bias",
            Param::EC => "e_c",
            Param::Delta => "delta",
            Param::Zeta => "zeta",
            Param::PumpPhase => "pump_phase",
            Param::PumpPowerDbm => "pump_power_dbm",
            Param::BigDelta => "big_delta",
            Param::OmegaP => "omega_p",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Param::NQuartons | Param::MSlaves)
    }

    /// Check that `v` is an admissible value for this parameter.
    pub fn check_value(self, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::InvalidSweep(format!("{self}: value {v} is not finite")));
        }
        if self.is_integer() && (v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64) {
            return Err(Error::InvalidSweep(format!("{self}: value {v} is not a positive integer")));
        }
        Ok(())
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidSweep(format!("unknown parameter `{s}`")))
    }
}

/// A derived quantity a sweep can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    OmegaEffGhz,
    KerrHz,
    KerrOverKappa,
    Zeta,
    N,
    Stable,
    Bistable,
    GainDb,
    IdlerDb,
    Saturated,
    P1dbDbm,
    BandwidthMhz,
}

impl Metric {
    pub const ALL: [Metric; 12] = [
        Metric::OmegaEffGhz,
        Metric::KerrHz,
        Metric::KerrOverKappa,
        Metric::Zeta,
        Metric::N,
        Metric::Stable,
        Metric::Bistable,
        Metric::GainDb,
        Metric::IdlerDb,
        Metric::Saturated,
        Metric::P1dbDbm,
        Metric::BandwidthMhz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::OmegaEffGhz => "omega_eff_ghz",
            Metric::KerrHz => "kerr_hz",
            Metric::KerrOverKappa => "kerr_over_kappa",
            Metric::Zeta => "zeta",
            Metric::N => "n",
            Metric::Stable => "stable",
            Metric::Bistable => "bistable",
            Metric::GainDb => "gain_db",
            Metric::IdlerDb => "idler_db",
            Metric::Saturated => "saturated",
            Metric::P1dbDbm => "p1db_dbm",
            Metric::BandwidthMhz => "bandwidth_mhz",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidSweep(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: Param,
    pub values: Vec<f64>,
}

/// Fixed values every grid point starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub design: BlochniumDesign,
    pub drive: PumpDrive,
    /// Pump angular frequency (rad/s).
    pub omega_p: f64,
    /// When set, ζ follows from this power instead of `drive.zeta`.
    pub pump_power_dbm: Option<f64>,
    pub big_delta: f64,
}

impl Baseline {
    pub fn new(design: BlochniumDesign, drive: PumpDrive, omega_p: f64) -> Self {
        Self {
            design,
            drive,
            omega_p,
            pump_power_dbm: None,
            big_delta: 0.0,
        }
    }

    /// Override one parameter.
    pub fn set(&mut self, p: Param, v: f64) {
        let d = &mut self.design;
        match p {
            Param::NQuartons => d.n_quartons = v as u32,
            Param::MSlaves => d.m_slaves = v as u32,
            Param::AlphaC => d.alpha_c = v,
            Param::EJs => d.e_js = v,
            Param::CG => d.c_g = v,
            Param::CJs => d.c_js = v,
            Param::CJm => d.c_jm = v,
            Param::Z0 => d.z0 = v,
            Param::Kappa => d.kappa = v,
            Param::FluxBias => d.flux_bias = v,
            Param::EC => d.e_c = Some(v),
            Param::Delta => self.drive.delta = v,
            Param::Zeta => {
                self.drive.zeta = v;
                self.pump_power_dbm = None;
            }
            Param::PumpPhase => self.drive.pump_phase = v,
            Param::PumpPowerDbm => self.pump_power_dbm = Some(v),
            Param::BigDelta => self.big_delta = v,
            Param::OmegaP => self.omega_p = v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub baseline: Baseline,
    pub axes: Vec<SweepAxis>,
    pub outputs: Vec<Metric>,
    pub policy: BranchPolicy,
    pub compression: CompressionOptions,
    pub max_points: usize,
}

impl SweepSpec {
    pub fn new(baseline: Baseline, axes: Vec<SweepAxis>, outputs: Vec<Metric>) -> Self {
        Self {
            baseline,
            axes,
            outputs,
            policy: BranchPolicy::LowStable,
            compression: CompressionOptions::default(),
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    pub fn validate(&self) -> Result<usize> {
        if self.outputs.is_empty() {
            return Err(Error::InvalidSweep("no outputs requested".into()));
        }
        let mut total: usize = 1;
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(Error::InvalidSweep(format!("axis `{}` has no values", axis.param)));
            }
            if self.axes[..i].iter().any(|a| a.param == axis.param) {
                return Err(Error::InvalidSweep(format!("axis `{}` appears twice", axis.param)));
            }
            for &v in &axis.values {
                axis.param.check_value(v)?;
            }
            total = total
                .checked_mul(axis.values.len())
                .filter(|&t| t <= self.max_points)
                .ok_or_else(|| {
                    Error::InvalidSweep(format!("grid exceeds the cap of {} points", self.max_points))
                })?;
        }
        self.compression.validate()?;
        Ok(total)
    }

    /// Axis values at row-major grid position `index`.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let len = axis.values.len();
            out[k] = axis.values[index % len];
            index /= len;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Number(f64),
    Flag(bool),
    /// Evaluation failed for this field.
    Error(String),
}

impl MetricValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            MetricValue::Flag(b) => Some(*b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub inputs: Vec<(Param, f64)>,
    pub outputs: Vec<(Metric, MetricValue)>,
}

impl SweepRecord {
    pub fn get(&self, m: Metric) -> Option<&MetricValue> {
        self.outputs.iter().find(|(k, _)| *k == m).map(|(_, v)| v)
    }

    pub fn input(&self, p: Param) -> Option<f64> {
        self.inputs.iter().find(|(k, _)| *k == p).map(|(_, v)| *v)
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    let total = spec.validate()?;
    let records = (0..total)
        .into_par_iter()
        .map(|i| {
            let values = spec.point(i);
            let mut base = spec.baseline;
            for (axis, &v) in spec.axes.iter().zip(&values) {
                base.set(axis.param, v);
            }
            SweepRecord {
                index: i,
                inputs: spec.axes.iter().map(|a| a.param).zip(values).collect(),
                outputs: evaluate(&base, &spec.outputs, spec.policy, &spec.compression),
            }
        })
        .collect();
    Ok(records)
}

/// Evaluate `outputs` at one parameter point, computing each stage on demand.
pub fn evaluate(
    base: &Baseline,
    outputs: &[Metric],
    policy: BranchPolicy,
    compression: &CompressionOptions,
) -> Vec<(Metric, MetricValue)> {
    let mut ctx = Point::new(base, policy, compression);
    outputs.iter().map(|&m| (m, ctx.metric(m))).collect()
}

type Cached<T> = Option<std::result::Result<T, String>>;

struct Point<'a> {
    base: &'a Baseline,
    policy: BranchPolicy,
    compression: &'a CompressionOptions,
    kerr: Cached<(f64, PhysicalScale)>,
    drive: Cached<PumpDrive>,
    op: Cached<(crate::OperatingPoint, bool)>,
}

fn text(e: Error) -> String {
    e.to_string()
}

impl<'a> Point<'a> {
    fn new(base: &'a Baseline, policy: BranchPolicy, compression: &'a CompressionOptions) -> Self {
        Self {
            base,
            policy,
            compression,
            kerr: None,
            drive: None,
            op: None,
        }
    }

    fn kerr(&mut self) -> std::result::Result<(f64, PhysicalScale), String> {
        if self.kerr.is_none() {
            let d = &self.base.design;
            let r = d
                .validate()
                .and_then(|_| d.charging_energy())
                .and_then(|e_c| Ok((circuit::kerr_coefficient(d, e_c), PhysicalScale::new(self.base.omega_p, d.kappa)?)))
                .map_err(text);
            self.kerr = Some(r);
        }
        self.kerr.clone().unwrap()
    }

    fn drive(&mut self) -> std::result::Result<PumpDrive, String> {
        if self.drive.is_none() {
            let r = match self.base.pump_power_dbm {
                None => Ok(self.base.drive),
                Some(p) => self.kerr().map(|(k, scale)| {
                    let mut d = self.base.drive;
                    d.zeta = metrics::zeta_from_watts(crate::constants::dbm_to_watts(p), &scale, k);
                    d
                }),
            };
            self.drive = Some(r);
        }
        self.drive.clone().unwrap()
    }

    fn op(&mut self) -> std::result::Result<(crate::OperatingPoint, bool), String> {
        if self.op.is_none() {
            let r = self.drive().map(|d| {
                let roots = photon_number_roots(&d);
                (select_branch(&roots, self.policy), roots.bistable)
            });
            self.op = Some(r);
        }
        self.op.clone().unwrap()
    }

    fn metric(&mut self, m: Metric) -> MetricValue {
        let r: std::result::Result<MetricValue, String> = match m {
            Metric::OmegaEffGhz => self.base.design.validate().map_err(text).and_then(|_| {
                circuit::build_matrices(&self.base.design)
                    .and_then(|mats| circuit::effective_mode(&mats))
                    .map(|w| MetricValue::Number(rad_to_ghz(w)))
                    .map_err(text)
            }),
            Metric::KerrHz => self
                .kerr()
                .map(|(k, _)| MetricValue::Number(k / (2.0 * std::f64::consts::PI))),
            Metric::KerrOverKappa => self.kerr().map(|(k, s)| MetricValue::Number(k / s.kappa)),
            Metric::Zeta => self.drive().map(|d| MetricValue::Number(d.zeta)),
            Metric::N => self.op().map(|(op, _)| MetricValue::Number(op.n)),
            Metric::Stable => self.op().map(|(op, _)| MetricValue::Flag(op.stable)),
            Metric::Bistable => self.op().map(|(_, b)| MetricValue::Flag(b)),
            Metric::GainDb | Metric::IdlerDb | Metric::Saturated => {
                let probe = SignalProbe::new(self.base.big_delta);
                self.op().and_then(|(op, _)| match gain_at(&op, &probe) {
                    Ok(g) => Ok(match m {
                        Metric::GainDb => MetricValue::Number(g.g_signal_db),
                        Metric::IdlerDb => MetricValue::Number(g.g_idler_db),
                        _ => MetricValue::Flag(g.saturated()),
                    }),
                    // At the oscillation threshold the point is saturated.
                    Err(_) if m == Metric::Saturated => Ok(MetricValue::Flag(true)),
                    Err(e) => Err(text(e)),
                })
            }
            Metric::P1dbDbm => self.p1db(),
            Metric::BandwidthMhz => self.kerr().and_then(|(_, scale)| {
                self.op().and_then(|(op, _)| {
                    metrics::bandwidth_3db(&op)
                        .map(|b| MetricValue::Number(b.width_ghz(&scale) * 1e3))
                        .map_err(text)
                })
            }),
        };
        r.unwrap_or_else(MetricValue::Error)
    }

    fn p1db(&mut self) -> std::result::Result<MetricValue, String> {
        let (k, scale) = self.kerr()?;
        let drive = self.drive()?;
        let pump = match self.base.pump_power_dbm {
            Some(p) => p,
            None => metrics::power_for_zeta(drive.zeta, &scale, k).map_err(text)?,
        };
        let r = metrics::compression_point_with(k, &scale, pump, drive.delta, self.compression).map_err(text)?;
        Ok(match r.p1db_dbm {
            Some(p) => MetricValue::Number(p),
            None => MetricValue::Error(format!("no compression below {} dBm", r.ceiling_dbm)),
        })
    }
}

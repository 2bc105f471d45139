//! Amplifier figures of merit in physical units.
//!
//! Powers enter the normalized model through the photon flux of the input
//! line: `P → F = P/(ħω_p) → |â_in|² = F/κ → ζ = (K/κ)|â_in|²`. Compression
//! uses the combined-drive picture, where signal power adds to the pump power
//! in the steady-state drive term and so shifts the operating point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, BlochniumDesign, EffectiveModel};
use crate::constants::{dbm_to_watts, rad_to_ghz, watts_to_dbm, HBAR};
use crate::gain::{gain_at, SignalProbe};
use crate::steady_state::{operating_point, BranchPolicy, OperatingPoint, PumpDrive};
use crate::{Error, Result};

/// Pump detuning used for compression and matched-gain searches unless a
/// configuration overrides it. Just inside the monostable range, where the
/// reachable gain is large and the gain curve has no hysteresis.
pub const DEFAULT_DELTA: f64 = -0.85;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalScale {
    /// Pump angular frequency (rad/s).
    pub omega_p: f64,
    /// Coupling rate (rad/s).
    pub kappa: f64,
}

impl PhysicalScale {
    pub fn new(omega_p: f64, kappa: f64) -> Result<Self> {
        let s = Self { omega_p, kappa };
        s.validate()?;
        Ok(s)
    }

    pub fn for_model(omega_p: f64, model: &EffectiveModel) -> Result<Self> {
        Self::new(omega_p, model.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("omega_p", self.omega_p), ("kappa", self.kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Photon flux (1/s) carried by `watts` at the pump frequency.
    pub fn photon_flux(&self, watts: f64) -> f64 {
        watts / (HBAR * self.omega_p)
    }

    /// Normalized input intensity `|â_in|² = F/κ`.
    pub fn input_intensity(&self, watts: f64) -> f64 {
        self.photon_flux(watts) / self.kappa
    }

    /// A width in units of κ expressed in GHz.
    pub fn kappa_units_to_ghz(&self, width: f64) -> f64 {
        rad_to_ghz(width * self.kappa)
    }
}

/// ζ produced by a drive of `watts` for a mode with Kerr coefficient `kerr_k`.
pub fn zeta_from_watts(watts: f64, scale: &PhysicalScale, kerr_k: f64) -> f64 {
    kerr_k / scale.kappa * scale.input_intensity(watts)
}

pub fn drive_from_power(p_in_dbm: f64, delta: f64, scale: &PhysicalScale, model: &EffectiveModel) -> PumpDrive {
    PumpDrive::new(delta, zeta_from_watts(dbm_to_watts(p_in_dbm), scale, model.kerr_k))
}

/// Input power (dBm) that produces `zeta`.
pub fn power_for_zeta(zeta: f64, scale: &PhysicalScale, kerr_k: f64) -> Result<f64> {
    let per_watt = zeta_from_watts(1.0, scale, kerr_k);
    let watts = zeta / per_watt;
    if !(watts.is_finite() && watts > 0.0) {
        return Err(Error::invalid(
            "zeta",
            format!("ζ = {zeta} is not reachable with K/κ = {}", kerr_k / scale.kappa),
        ));
    }
    Ok(watts_to_dbm(watts))
}

/// Controls for the power scans behind compression and matched-gain searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressionOptions {
    /// Highest total input power considered (dBm).
    pub ceiling_dbm: f64,
    /// Coarse scan step (dB).
    pub scan_step_db: f64,
    /// Signal scan starts this far below the pump power (dB).
    pub scan_span_db: f64,
}

impl Default for CompressionOptions {
    fn default() -> Self {
        Self {
            ceiling_dbm: 0.0,
            scan_step_db: 0.1,
            scan_span_db: 100.0,
        }
    }
}

impl CompressionOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.ceiling_dbm.is_finite() {
            return Err(Error::invalid("ceiling_dbm", "must be finite"));
        }
        for (field, v) in [
            ("scan_step_db", self.scan_step_db),
            ("scan_span_db", self.scan_span_db),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1dBResult {
    pub small_signal_gain_db: f64,
    /// Signal power at 1 dB compression; `None` when gain stays above the
    /// compression level up to the ceiling.
    pub p1db_dbm: Option<f64>,
    pub pump_power_dbm: f64,
    pub ceiling_dbm: f64,
    pub gain_at_p1db_db: Option<f64>,
    pub delta: f64,
}

impl P1dBResult {
    pub fn is_open_ended(&self) -> bool {
        self.p1db_dbm.is_none()
    }
}

/// Stable operating point and Δ = 0 gain for a total drive of `watts`.
fn resonant_gain_db(watts: f64, delta: f64, scale: &PhysicalScale, kerr_k: f64) -> Result<(f64, OperatingPoint)> {
    let drive = PumpDrive::new(delta, zeta_from_watts(watts, scale, kerr_k));
    let op = operating_point(&drive, BranchPolicy::LowStable);
    if !op.stable {
        return Err(Error::UnstableOperatingPoint { n: op.n });
    }
    let g = gain_at(&op, &SignalProbe::new(0.0))?;
    Ok((g.g_signal_db, op))
}

/// Bisect `f` between `lo` (where `below` is false) and `hi` (where it is
/// true) until the bracket is tighter than `width`.
fn bisect(mut lo: f64, mut hi: f64, width: f64, below: impl Fn(f64) -> bool) -> (f64, f64) {
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Bracket width in dB used when locating crossings in power. Far below the
/// 0.01 dB gain accuracy required at a crossing.
const POWER_BRACKET_DB: f64 = 1e-7;

pub fn compression_point(
    model: &EffectiveModel,
    scale: &PhysicalScale,
    pump_power_dbm: f64,
    delta: f64,
) -> Result<P1dBResult> {
    compression_point_with(model.kerr_k, scale, pump_power_dbm, delta, &CompressionOptions::default())
}

/// 1 dB compression point of the signal for a pump of `pump_power_dbm`.
pub fn compression_point_with(
    kerr_k: f64,
    scale: &PhysicalScale,
    pump_power_dbm: f64,
    delta: f64,
    opts: &CompressionOptions,
) -> Result<P1dBResult> {
    scale.validate()?;
    opts.validate()?;
    if !pump_power_dbm.is_finite() {
        return Err(Error::invalid("pump_power_dbm", "must be finite"));
    }
    let pump_w = dbm_to_watts(pump_power_dbm);
    let (g0, _) = resonant_gain_db(pump_w, delta, scale, kerr_k)?;
    let target = g0 - 1.0;
    let open = P1dBResult {
        small_signal_gain_db: g0,
        p1db_dbm: None,
        pump_power_dbm,
        ceiling_dbm: opts.ceiling_dbm,
        gain_at_p1db_db: None,
        delta,
    };
    if kerr_k == 0.0 {
        return Ok(open);
    }

    // Points at the oscillation threshold are not compressed; skip them.
    let compressed = |ps_dbm: f64| match resonant_gain_db(pump_w + dbm_to_watts(ps_dbm), delta, scale, kerr_k) {
        Ok((g, _)) => g <= target,
        Err(_) => false,
    };

    let start = pump_power_dbm - opts.scan_span_db;
    let steps = ((opts.ceiling_dbm - start) / opts.scan_step_db).floor().max(0.0) as usize;
    let mut prev = start;
    if compressed(start) {
        // Already compressed at the bottom of the scan: the crossing is
        // below it, so search downward until the signal is negligible.
        let mut lo = start;
        while compressed(lo) {
            lo -= opts.scan_span_db;
            if lo < pump_power_dbm - 400.0 {
                return Err(Error::NoConvergence(0));
            }
        }
        return Ok(finish_crossing(lo, start, &compressed, open, pump_w, delta, scale, kerr_k));
    }
    for i in 1..=steps {
        let ps = start + opts.scan_step_db * i as f64;
        if compressed(ps) {
            return Ok(finish_crossing(prev, ps, &compressed, open, pump_w, delta, scale, kerr_k));
        }
        prev = ps;
    }
    Ok(open)
}

#[allow(clippy::too_many_arguments)]
fn finish_crossing(
    lo: f64,
    hi: f64,
    compressed: &impl Fn(f64) -> bool,
    mut out: P1dBResult,
    pump_w: f64,
    delta: f64,
    scale: &PhysicalScale,
    kerr_k: f64,
) -> P1dBResult {
    let (_, hi) = bisect(lo, hi, POWER_BRACKET_DB, compressed);
    let g = resonant_gain_db(pump_w + dbm_to_watts(hi), delta, scale, kerr_k)
        .map(|(g, _)| g)
        .ok();
    out.p1db_dbm = Some(hi);
    out.gain_at_p1db_db = g;
    out
}

/// Lowest pump power (dBm) whose resonant gain reaches `target_db`.
///
/// The gain rises with pump power up to a peak below the bifurcation; the
/// returned power sits on the rising side.
pub fn find_pump_for_gain(
    kerr_k: f64,
    scale: &PhysicalScale,
    delta: f64,
    target_db: f64,
    opts: &CompressionOptions,
) -> Result<f64> {
    scale.validate()?;
    opts.validate()?;
    let unreachable = |best_db: f64| Error::UnreachableGain {
        target_db,
        best_db,
        ceiling_dbm: opts.ceiling_dbm,
    };
    if kerr_k == 0.0 {
        return Err(unreachable(0.0));
    }
    let sign = kerr_k.signum();
    let lo = power_for_zeta(sign * 1e-4, scale, kerr_k)?;
    let hi = power_for_zeta(sign * 10.0, scale, kerr_k)?.min(opts.ceiling_dbm);
    let gain = |p: f64| resonant_gain_db(dbm_to_watts(p), delta, scale, kerr_k).map(|(g, _)| g);

    let steps = ((hi - lo) / opts.scan_step_db).ceil().max(0.0) as usize;
    let mut prev = lo;
    let (mut best_p, mut best_g) = (lo, f64::NEG_INFINITY);
    for i in 0..=steps {
        let p = (lo + opts.scan_step_db * i as f64).min(hi);
        let g = match gain(p) {
            Ok(g) => g,
            Err(_) => f64::INFINITY,
        };
        if g >= target_db {
            if i == 0 {
                return Ok(p);
            }
            let reached = |q: f64| gain(q).map_or(true, |g| g >= target_db);
            let (_, p_hi) = bisect(prev, p, POWER_BRACKET_DB, reached);
            return Ok(p_hi);
        }
        if g > best_g {
            best_g = g;
            best_p = p;
        }
        prev = p;
    }
    let (_, refined) = golden_max(
        |p| gain(p).unwrap_or(f64::NEG_INFINITY),
        best_p - opts.scan_step_db,
        best_p + opts.scan_step_db,
        1e-6,
    );
    Err(unreachable(refined.max(best_g)))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Compression point with the pump set for `target_db` of small-signal gain.
pub fn p1db_at_gain(
    model: &EffectiveModel,
    scale: &PhysicalScale,
    delta: f64,
    target_db: f64,
    opts: &CompressionOptions,
) -> Result<P1dBResult> {
    let pump = find_pump_for_gain(model.kerr_k, scale, delta, target_db, opts)?;
    compression_point_with(model.kerr_k, scale, pump, delta, opts)
}

/// Full width of the −3 dB gain window around Δ = 0, in units of κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub peak_db: f64,
    /// Lower crossing in Δ (negative).
    pub low: f64,
    /// Upper crossing in Δ (positive).
    pub high: f64,
}

impl Bandwidth {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn width_ghz(&self, scale: &PhysicalScale) -> f64 {
        scale.kappa_units_to_ghz(self.width())
    }
}

pub fn bandwidth_3db(op: &OperatingPoint) -> Result<Bandwidth> {
    let gain_db = |dd: f64| gain_at(op, &SignalProbe::new(dd)).map_or(f64::INFINITY, |g| g.g_signal_db);
    let peak_db = gain_db(0.0);
    if !(peak_db > 3.0) || !peak_db.is_finite() {
        return Err(Error::UndefinedBandwidth { peak_db });
    }
    let level = peak_db - 3.0;
    let edge = |sign: f64| -> Result<f64> {
        let mut inner = 0.0;
        let mut outer = 1e-3;
        while gain_db(sign * outer) >= level {
            inner = outer;
            outer *= 2.0;
            if outer > 1e9 {
                return Err(Error::NoConvergence(0));
            }
        }
        let (lo, hi) = bisect(inner, outer, 0.0, |d| gain_db(sign * d) < level);
        Ok(0.5 * (lo + hi))
    };
    let high = edge(1.0)?;
    let low = -edge(-1.0)?;
    Ok(Bandwidth { peak_db, low, high })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningPoint {
    pub flux_bias: f64,
    pub omega_eff_ghz: f64,
    /// Prediction of the `√cos φ` law from the zero-flux frequency.
    pub sqrt_law_ghz: f64,
    pub gain_db: f64,
    /// `None` when the peak gain is below 3 dB.
    pub bandwidth_ghz: Option<f64>,
    /// The −3 dB window intersects the next point's window.
    pub overlaps_next: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    pub band_ghz: (f64, f64),
    pub points: Vec<TuningPoint>,
    pub covers_band: bool,
}

impl TuningCurve {
    pub fn any_overlap(&self) -> bool {
        self.points.iter().any(|p| p.overlaps_next)
    }
}

/// Relative slack when comparing the zero-flux frequency with the band edge.
const EDGE_SLACK: f64 = 1e-9;

/// Flux-bias sweep placing ω_eff at evenly spaced frequencies across the band.
///
/// The pump drive is held fixed in normalized units, so every center sees the
/// same gain profile relative to its own κ.
pub fn band_coverage(
    design: &BlochniumDesign,
    scale: &PhysicalScale,
    band_ghz: (f64, f64),
    n_points: usize,
    drive: PumpDrive,
) -> Result<TuningCurve> {
    scale.validate()?;
    let (low, high) = band_ghz;
    if !(low.is_finite() && high.is_finite() && low > 0.0 && low < high) {
        return Err(Error::invalid("band_ghz", format!("need 0 < low < high, got ({low}, {high})")));
    }
    if n_points == 0 {
        return Err(Error::invalid("n_points", "must be at least 1"));
    }
    let mut base = *design;
    base.flux_bias = 0.0;
    let f0 = rad_to_ghz(circuit::effective_mode(&circuit::build_matrices(&base)?)?);
    if f0 < high * (1.0 - EDGE_SLACK) {
        return Err(Error::CoverageGap {
            reachable_low_ghz: 0.0,
            reachable_high_ghz: f0,
        });
    }

    let fluxes: Vec<f64> = if n_points == 1 {
        vec![0.0]
    } else {
        (0..n_points)
            .map(|i| {
                let f = high - (high - low) * i as f64 / (n_points - 1) as f64;
                ((f / f0).powi(2)).min(1.0).acos()
            })
            .collect()
    };

    let op = operating_point(&drive, BranchPolicy::LowStable);
    let gain_db = gain_at(&op, &SignalProbe::new(0.0))?.g_signal_db;
    let bandwidth_ghz = bandwidth_3db(&op).ok().map(|b| b.width_ghz(scale));

    let freqs: Vec<f64> = fluxes
        .par_iter()
        .map(|&phi| {
            let mut d = base;
            d.flux_bias = phi;
            circuit::effective_mode(&circuit::build_matrices(&d)?).map(rad_to_ghz)
        })
        .collect::<Result<_>>()?;

    let mut points: Vec<TuningPoint> = fluxes
        .iter()
        .zip(&freqs)
        .map(|(&phi, &f)| TuningPoint {
            flux_bias: phi,
            omega_eff_ghz: f,
            sqrt_law_ghz: f0 * phi.cos().sqrt(),
            gain_db,
            bandwidth_ghz,
            overlaps_next: false,
        })
        .collect();
    for i in 0..points.len().saturating_sub(1) {
        let (a, b) = (&points[i], &points[i + 1]);
        let spacing = (a.omega_eff_ghz - b.omega_eff_ghz).abs();
        points[i].overlaps_next = match (a.bandwidth_ghz, b.bandwidth_ghz) {
            (Some(wa), Some(wb)) => spacing <= 0.5 * (wa + wb),
            _ => false,
        };
    }

    let f_max = points.iter().map(|p| p.omega_eff_ghz).fold(f64::NEG_INFINITY, f64::max);
    let f_min = points.iter().map(|p| p.omega_eff_ghz).fold(f64::INFINITY, f64::min);
    let tol = EDGE_SLACK.max(1e-6) * high;
    let covers_band = f_max >= high - tol && f_min <= low + tol;
    Ok(TuningCurve {
        band_ghz,
        points,
        covers_band,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub model: EffectiveModel,
    pub result: Option<P1dBResult>,
    /// Why `result` is missing.
    pub error: Option<String>,
}

impl DesignOutcome {
    pub fn p1db_dbm(&self) -> Option<f64> {
        self.result.and_then(|r| r.p1db_dbm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub gain_target_db: f64,
    pub delta: f64,
    pub a: DesignOutcome,
    pub b: DesignOutcome,
    /// `P1dB(a) − P1dB(b)` in dB when both are finite.
    pub difference_db: Option<f64>,
}

/// Matched-gain compression of two designs. Each uses its own κ and Kerr
/// coefficient with a common pump frequency.
pub fn compare_designs(
    a: &BlochniumDesign,
    b: &BlochniumDesign,
    omega_p: f64,
    gain_target_db: f64,
    delta: f64,
    opts: &CompressionOptions,
) -> Result<Comparison> {
    let one = |d: &BlochniumDesign| -> Result<DesignOutcome> {
        let model = circuit::tuned_model(d)?;
        let scale = PhysicalScale::for_model(omega_p, &model)?;
        Ok(match p1db_at_gain(&model, &scale, delta, gain_target_db, opts) {
            Ok(r) => DesignOutcome {
                model,
                result: Some(r),
                error: None,
            },
            Err(e) => DesignOutcome {
                model,
                result: None,
                error: Some(e.to_string()),
            },
        })
    };
    let (ra, rb) = rayon::join(|| one(a), || one(b));
    let (a, b) = (ra?, rb?);
    let difference_db = match (a.p1db_dbm(), b.p1db_dbm()) {
        (Some(x), Some(y)) => Some(x - y),
        _ => None,
    };
    Ok(Comparison {
        gain_target_db,
        delta,
        a,
        b,
        difference_db,
    })
}

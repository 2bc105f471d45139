//! Linearized signal and idler gain.
//!
//! Fluctuations around the pump state obey the 2×2 system
//!
//! ```text
//! [ i(−δ−Δ+2ζn) + ½      iζn e^{2iφ}      ] [ δa  ]   [ δâ_in  ]
//! [ −iζn e^{−2iφ}        i(δ−Δ−2ζn) + ½   ] [ δa† ] = [ δâ_in† ]
//! ```
//!
//! With `W` its inverse, the input-output relation gives the signal
//! reflection `W₀₀ − 1` and the idler conversion `W₀₁`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::steady_state::{self, BranchPolicy, OperatingPoint, PumpDrive};
use crate::{Error, Result};

/// Determinants below this modulus are treated as the oscillation threshold.
pub const SINGULAR_DET: f64 = 1e-14;
/// Signal gains above this are flagged as saturated in maps.
pub const SATURATION_DB: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalProbe {
    /// Normalized signal detuning `(ω_s − ω_p) / κ`.
    pub big_delta: f64,
}

impl SignalProbe {
    pub fn new(big_delta: f64) -> Self {
        Self { big_delta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterMatrix {
    pub entries: [[Complex64; 2]; 2],
}

impl ScatterMatrix {
    pub fn det(&self) -> Complex64 {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainResult {
    #[serde(serialize_with = "ser_complex")]
    pub g_signal: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub g_idler: Complex64,
    pub g_signal_db: f64,
    pub g_idler_db: f64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl GainResult {
    pub fn power_gain(&self) -> f64 {
        self.g_signal.norm_sqr()
    }

    pub fn saturated(&self) -> bool {
        self.g_signal_db.abs() > SATURATION_DB
    }
}

fn amplitude_db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

pub fn scattering_matrix(op: &OperatingPoint, probe: &SignalProbe) -> ScatterMatrix {
    let d = op.drive.delta;
    let dd = probe.big_delta;
    let x = op.zeta_n();
    let i = Complex64::i();
    let phase = Complex64::from_polar(1.0, 2.0 * op.drive.pump_phase);
    ScatterMatrix {
        entries: [
            [i * (-d - dd + 2.0 * x) + 0.5, i * x * phase],
            [-i * x * phase.conj(), i * (d - dd - 2.0 * x) + 0.5],
        ],
    }
}

pub fn signal_idler_gain(m: &ScatterMatrix) -> Result<GainResult> {
    let det = m.det();
    if !(det.norm() > SINGULAR_DET) {
        return Err(Error::NearSingular { det: det.norm() });
    }
    let e = &m.entries;
    let w00 = e[1][1] / det;
    let w01 = -e[0][1] / det;
    let g_signal = w00 - 1.0;
    Ok(GainResult {
        g_signal,
        g_idler: w01,
        g_signal_db: amplitude_db(g_signal),
        g_idler_db: amplitude_db(w01),
    })
}

/// Gain at one operating point and probe.
pub fn gain_at(op: &OperatingPoint, probe: &SignalProbe) -> Result<GainResult> {
    signal_idler_gain(&scattering_matrix(op, probe))
}

/// One cell of a gain map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainMapPoint {
    pub drive: PumpDrive,
    pub big_delta: f64,
    pub n: f64,
    pub stable: bool,
    pub bistable: bool,
    /// `None` at the oscillation threshold.
    pub gain: Option<GainResult>,
    pub saturated: bool,
}

/// Gain over the Cartesian product of drives and probes, drive-major.
pub fn gain_map(drives: &[PumpDrive], probes: &[SignalProbe], policy: BranchPolicy) -> Vec<GainMapPoint> {
    drives
        .par_iter()
        .flat_map_iter(|drive| {
            let roots = steady_state::photon_number_roots(drive);
            let op = steady_state::select_branch(&roots, policy);
            probes.iter().map(move |probe| {
                let gain = gain_at(&op, probe).ok();
                let saturated = gain.map_or(true, |g| g.saturated());
                GainMapPoint {
                    drive: *drive,
                    big_delta: probe.big_delta,
                    n: op.n,
                    stable: op.stable,
                    bistable: roots.bistable,
                    gain,
                    saturated,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady_state::operating_point;
    use std::f64::consts::PI;

    fn op_with_zeta_n(delta: f64, x: f64, phase: f64) -> OperatingPoint {
        // Any (ζ, n) with ζn = x works for the matrix; pick n = 1.
        OperatingPoint {
            drive: PumpDrive::new(delta, x).with_phase(phase),
            n: 1.0,
            branch: steady_state::Branch::Low,
            stable: true,
        }
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn matrix_without_coupling_is_half_identity() {
        let m = scattering_matrix(&op_with_zeta_n(0.0, 0.0, 0.0), &SignalProbe::new(0.0));
        let z = Complex64::new(0.0, 0.0);
        let h = Complex64::new(0.5, 0.0);
        assert!(close(m.entries[0][0], h) && close(m.entries[1][1], h));
        assert!(close(m.entries[0][1], z) && close(m.entries[1][0], z));
        let g = signal_idler_gain(&m).unwrap();
        assert!(close(g.g_signal, Complex64::new(1.0, 0.0)));
        assert_eq!(g.g_idler, z);
        assert!(g.g_signal_db.abs() < 1e-14);
    }

    #[test]
    fn matrix_direct_substitution() {
        let m = scattering_matrix(&op_with_zeta_n(0.0, 0.1, 0.0), &SignalProbe::new(0.0));
        assert!(close(m.entries[0][0], Complex64::new(0.5, 0.2)));
        assert!(close(m.entries[0][1], Complex64::new(0.0, 0.1)));
        assert!(close(m.entries[1][0], Complex64::new(0.0, -0.1)));
        assert!(close(m.entries[1][1], Complex64::new(0.5, -0.2)));
    }

    #[test]
    fn pump_phase_has_period_pi() {
        let p = SignalProbe::new(0.3);
        let a = scattering_matrix(&op_with_zeta_n(0.4, 0.12, 0.7), &p);
        let b = scattering_matrix(&op_with_zeta_n(0.4, 0.12, 0.7 + PI), &p);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.entries[i][j] - b.entries[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hand_inverted_reference_point() {
        // det = 0.28; W₀₀ = (0.5 − 0.2i)/0.28; W₀₁ = −0.1i/0.28.
        let g = gain_at(&op_with_zeta_n(0.0, 0.1, 0.0), &SignalProbe::new(0.0)).unwrap();
        let want_s = Complex64::new(0.22, -0.2) / 0.28;
        let want_i = Complex64::new(0.0, -0.1) / 0.28;
        assert!((g.g_signal - want_s).norm() < 1e-14);
        assert!((g.g_idler - want_i).norm() < 1e-14);
        assert!((g.g_signal.norm_sqr() - 0.0884 / 0.0784).abs() < 1e-12);
        assert!((g.g_idler.norm_sqr() - 0.01 / 0.0784).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        // det = (½ − iΔ)² + (2x − δ)² − x² vanishes at Δ = 0, δ = 2x, x = ½.
        let m = scattering_matrix(&op_with_zeta_n(1.0, 0.5, 0.0), &SignalProbe::new(0.0));
        assert!(m.det().norm() < 1e-15);
        assert!(matches!(signal_idler_gain(&m), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn gain_blows_up_near_threshold() {
        let mut last = 0.0;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let g = gain_at(&op_with_zeta_n(1.0, 0.5 - eps, 0.0), &SignalProbe::new(0.0)).unwrap();
            assert!(g.power_gain() > last);
            last = g.power_gain();
        }
        assert!(last > 1e6);
    }

    #[test]
    fn flat_map_without_nonlinearity() {
        let drives: Vec<_> = (-5..=5).map(|i| PumpDrive::new(i as f64 * 0.5, 0.0)).collect();
        let probes: Vec<_> = (-5..=5).map(|i| SignalProbe::new(i as f64 * 0.4)).collect();
        let map = gain_map(&drives, &probes, BranchPolicy::LowStable);
        assert_eq!(map.len(), 121);
        for p in &map {
            let g = p.gain.unwrap();
            assert!(g.g_signal_db.abs() < 1e-12);
            assert_eq!(g.g_idler.norm(), 0.0);
        }
        // drive-major ordering
        assert_eq!(map[12].drive, drives[1]);
        assert_eq!(map[12].big_delta, probes[1].big_delta);
    }

    #[test]
    fn stable_points_satisfy_symplectic_identity() {
        for (d, z, dd) in [(-0.8, -0.17, 0.0), (0.3, 0.1, 0.7), (-2.0, -0.3, -1.1)] {
            let op = operating_point(&PumpDrive::new(d, z), BranchPolicy::LowStable);
            let g = gain_at(&op, &SignalProbe::new(dd)).unwrap();
            let s = g.g_signal.norm_sqr() - g.g_idler.norm_sqr();
            assert!((s - 1.0).abs() < 1e-9 * g.g_signal.norm_sqr().max(1.0));
        }
    }
}

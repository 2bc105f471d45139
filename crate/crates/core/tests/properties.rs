use std::f64::consts::PI;

use bjpa_core::circuit::{self, BlochniumDesign};
use bjpa_core::constants::{ghz_to_rad, PLANCK};
use bjpa_core::gain::{gain_at, SignalProbe};
use bjpa_core::metrics::{self, PhysicalScale};
use bjpa_core::steady_state::{
    bifurcation_threshold, has_bistable_region, operating_point, photon_number_roots, residual, BranchPolicy,
    PumpDrive, RESIDUAL_TOL,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn design(n: u32, m: u32, alpha: f64) -> BlochniumDesign {
    BlochniumDesign {
        n_quartons: n,
        m_slaves: m,
        alpha_c: alpha,
        e_js: PLANCK * 200e9,
        c_g: 0.5e-15,
        c_js: 50e-15,
        c_jm: 5e-15,
        z0: 50.0,
        kappa: ghz_to_rad(0.01),
        flux_bias: 0.0,
        e_c: None,
    }
}

proptest! {
    #[test]
    fn roots_are_positive_and_solve_the_cubic(d in -4.0..4.0f64, z in -2.0..2.0f64) {
        let drive = PumpDrive::new(d, z);
        let r = photon_number_roots(&drive);
        prop_assert!(!r.roots.is_empty() && r.roots.len() <= 3);
        for root in &r.roots {
            prop_assert!(root.n > 0.0);
            prop_assert!(residual(&drive, root.n).abs() <= RESIDUAL_TOL);
        }
        if r.bistable {
            let s: Vec<bool> = r.roots.iter().map(|x| x.stable).collect();
            prop_assert_eq!(s, vec![true, false, true]);
        }
    }

    #[test]
    fn below_threshold_is_monostable(d in -4.0..4.0f64, f in -0.999..0.999f64) {
        let r = photon_number_roots(&PumpDrive::new(d, f * bifurcation_threshold()));
        prop_assert!(!r.bistable);
        prop_assert_eq!(r.roots.len(), 1);
    }

    #[test]
    fn mirrored_drive_has_the_same_photon_number(d in -3.0..3.0f64, z in -1.0..1.0f64) {
        let a = photon_number_roots(&PumpDrive::new(d, z));
        let b = photon_number_roots(&PumpDrive::new(-d, -z));
        prop_assert_eq!(a.roots.len(), b.roots.len());
        for (x, y) in a.roots.iter().zip(&b.roots) {
            prop_assert!((x.n - y.n).abs() <= 1e-9 * x.n.max(1.0));
        }
    }

    #[test]
    fn symplectic_identity(d in -3.0..3.0f64, z in -1.0..1.0f64, dd in -3.0..3.0f64, phi in 0.0..PI) {
        let op = operating_point(&PumpDrive::new(d, z).with_phase(phi), BranchPolicy::LowStable);
        prop_assume!(op.stable);
        if let Ok(g) = gain_at(&op, &SignalProbe::new(dd)) {
            let s = g.g_signal.norm_sqr() - g.g_idler.norm_sqr();
            prop_assert!((s - 1.0).abs() <= 1e-9 * g.g_signal.norm_sqr().max(1.0));
        }
    }

    #[test]
    fn pump_phase_rotates_only_the_idler(d in -2.0..2.0f64, z in -0.5..0.5f64, dd in -2.0..2.0f64, phi in -PI..PI) {
        let base = operating_point(&PumpDrive::new(d, z), BranchPolicy::LowStable);
        let mut shifted = base;
        shifted.drive.pump_phase = phi;
        let (a, b) = match (gain_at(&base, &SignalProbe::new(dd)), gain_at(&shifted, &SignalProbe::new(dd))) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(()),
        };
        prop_assert!((a.g_signal - b.g_signal).norm() <= 1e-12 * a.g_signal.norm().max(1.0));
        let rotated = a.g_idler * Complex64::from_polar(1.0, 2.0 * phi);
        prop_assert!((rotated - b.g_idler).norm() <= 1e-12 * a.g_idler.norm().max(1.0));
    }

    #[test]
    fn conjugate_drive_keeps_gain_modulus(d in -2.0..2.0f64, z in -0.5..0.5f64, dd in -2.0..2.0f64) {
        let a = operating_point(&PumpDrive::new(d, z), BranchPolicy::LowStable);
        let b = operating_point(&PumpDrive::new(-d, -z), BranchPolicy::LowStable);
        if let (Ok(ga), Ok(gb)) = (gain_at(&a, &SignalProbe::new(dd)), gain_at(&b, &SignalProbe::new(-dd))) {
            prop_assert!((ga.g_signal.norm() - gb.g_signal.norm()).abs() <= 1e-9 * ga.g_signal.norm());
            prop_assert!((ga.g_signal - gb.g_signal.conj()).norm() <= 1e-9 * ga.g_signal.norm());
        }
    }

    #[test]
    fn no_nonlinearity_no_gain(d in -5.0..5.0f64, dd in -5.0..5.0f64) {
        let op = operating_point(&PumpDrive::new(d, 0.0), BranchPolicy::LowStable);
        let g = gain_at(&op, &SignalProbe::new(dd)).unwrap();
        prop_assert!((g.g_signal.norm() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(g.g_idler.norm(), 0.0);
    }

    #[test]
    fn kerr_magnitude_falls_with_size_and_coupling(
        n in 1u32..200, m in 1u32..40, a in 0.0..0.95f64, da in 0.0..0.04f64,
    ) {
        let e_c = 1e-24;
        let k = |n, m, a| circuit::kerr_coefficient(&design(n, m, a), e_c).abs();
        prop_assert!(k(n, m + 1, a) <= k(n, m, a));
        prop_assert!(k(n + 1, m, a) <= k(n, m, a));
        prop_assert!(k(n, m, a + da) <= k(n, m, a));
        prop_assert!(circuit::kerr_coefficient(&design(n, m, a), e_c) <= 0.0);
    }

    #[test]
    fn more_power_more_nonlinearity(p in -160.0..-60.0f64, step in 0.01..20.0f64) {
        let s = PhysicalScale::new(ghz_to_rad(6.0), ghz_to_rad(0.01)).unwrap();
        let model = circuit::tuned_model(&design(5, 4, 0.1)).unwrap();
        let a = metrics::drive_from_power(p, 0.0, &s, &model).zeta.abs();
        let b = metrics::drive_from_power(p + step, 0.0, &s, &model).zeta.abs();
        prop_assert!(b > a);
    }
}

#[test]
fn photon_number_is_continuous_below_threshold() {
    // Fine ζ grid from 0 up to 0.95 of threshold; the selected branch moves
    // by less than 1e-3 per 1e-4 step away from the bistable lobe.
    let z0 = bifurcation_threshold();
    for d in [-1.0, -0.5] {
        let mut prev: Option<f64> = None;
        let steps = (0.95 * z0 / 1e-4) as usize;
        for i in 0..=steps {
            let z = i as f64 * 1e-4;
            let n = operating_point(&PumpDrive::new(d, z), BranchPolicy::LowStable).n;
            if let Some(p) = prev {
                assert!((n - p).abs() < 1e-3, "δ = {d}, ζ = {z}: jump {}", (n - p).abs());
            }
            prev = Some(n);
        }
    }
}

#[test]
fn bistability_just_above_threshold() {
    let z0 = bifurcation_threshold();
    assert!(has_bistable_region(-1.05 * z0));
    assert!(has_bistable_region(1.05 * z0));
    assert!(!has_bistable_region(-0.95 * z0));
}

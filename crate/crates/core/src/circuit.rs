//! Circuit reduction: Blochnium chain to a single Kerr mode.
//!
//! The chain has node fluxes `φ_0 … φ_{M·N}`. Every node sees a ground
//! capacitance `C_g`; consecutive nodes are joined by a slave junction
//! (`C_Js`, `L_Js`); nodes `M·k` and `M·(k+1)` are additionally joined by the
//! master junction of Quarton `k` (`C_Jm`, `L_Jm = L_Js / α_c`). Node 0 is
//! tied to the resonator ground.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::constants::{ELEMENTARY_CHARGE, HBAR, REDUCED_FLUX_QUANTUM};
use crate::eigen::{self, SymBand};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochniumDesign {
    /// Number of Quartons (master SQUIDs), `N`.
    pub n_quartons: u32,
    /// Slave SQUIDs per Quarton, `M`.
    pub m_slaves: u32,
    /// Master/slave Josephson energy ratio, `E_Jm = α_c · E_Js`.
    pub alpha_c: f64,
    /// Slave Josephson energy (J).
    pub e_js: f64,
    /// Ground capacitance per node (F).
    pub c_g: f64,
    /// Slave junction capacitance (F).
    pub c_js: f64,
    /// Master junction capacitance (F).
    pub c_jm: f64,
    /// Resonator characteristic impedance (Ω). Only used by [`estimate_kappa`].
    pub z0: f64,
    /// Input coupling rate κ (rad/s).
    pub kappa: f64,
    /// Junction phase bias φ in `L_J = L_J0 / cos φ` (rad).
    #[serde(default)]
    pub flux_bias: f64,
    /// Charging energy override (J). Defaults to `e² / 2 C_Js`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_c: Option<f64>,
}

impl BlochniumDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n_quartons < 1 {
            return Err(Error::invalid("n_quartons", "must be >= 1"));
        }
        if self.m_slaves < 1 {
            return Err(Error::invalid("m_slaves", "must be >= 1"));
        }
        if !(self.alpha_c.is_finite() && self.alpha_c >= 0.0) {
            return Err(Error::invalid("alpha_c", "must be finite and >= 0"));
        }
        for (name, value) in [
            ("e_js", self.e_js),
            ("c_g", self.c_g),
            ("c_js", self.c_js),
            ("c_jm", self.c_jm),
            ("kappa", self.kappa),
        ] {
            positive(name, value)?;
        }
        if !(self.z0.is_finite() && self.z0 >= 0.0) {
            return Err(Error::invalid("z0", "must be finite and >= 0"));
        }
        if let Some(e_c) = self.e_c {
            positive("e_c", e_c)?;
        }
        if !self.flux_bias.is_finite() || self.flux_bias.abs() >= FRAC_PI_2 {
            return Err(Error::SingularInductance {
                flux_bias: self.flux_bias,
            });
        }
        Ok(())
    }

    /// `M·N + 1` node fluxes, including the grounded node 0.
    pub fn node_count(&self) -> usize {
        self.m_slaves as usize * self.n_quartons as usize + 1
    }

    /// Slave plus master junctions.
    pub fn junction_count(&self) -> u64 {
        let masters = if self.alpha_c > 0.0 { 1 } else { 0 };
        self.n_quartons as u64 * (self.m_slaves as u64 + masters)
    }

    /// Unbiased slave inductance `(Φ0/2π)² / E_Js`.
    pub fn slave_inductance0(&self) -> f64 {
        REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / self.e_js
    }

    /// Charging energy used in the Kerr term.
    pub fn charging_energy(&self) -> Result<f64> {
        match self.e_c {
            Some(e_c) => Ok(e_c),
            None => charging_energy(self.c_js),
        }
    }

    /// The same design with `E_Js` rescaled so that the unbiased linear mode
    /// sits at `omega_target`. Every inductance scales as `1/E_Js`, so
    /// `ω² ∝ E_Js` holds exactly.
    pub fn scaled_to_frequency(&self, omega_target: f64) -> Result<Self> {
        positive("omega_target", omega_target)?;
        let mut unbiased = *self;
        unbiased.flux_bias = 0.0;
        let omega = effective_mode(&build_matrices(&unbiased)?)?;
        let mut out = *self;
        out.e_js *= (omega_target / omega).powi(2);
        Ok(out)
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0 (got {value})")))
    }
}

/// Capacitance and inverse-inductance matrices of the full chain, before
/// grounding. Both are banded with half-bandwidth `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitMatrices {
    pub node_count: usize,
    pub cap: SymBand,
    pub inv_ind: SymBand,
    pub slave_links: Vec<(usize, usize)>,
    pub master_links: Vec<(usize, usize)>,
}

impl CircuitMatrices {
    /// Dense capacitance matrix (F).
    pub fn cap_matrix(&self) -> DMatrix<f64> {
        self.cap.to_dense()
    }

    /// Dense inverse-inductance matrix (1/H).
    pub fn inv_ind_matrix(&self) -> DMatrix<f64> {
        self.inv_ind.to_dense()
    }

    /// Both matrices with node 0 removed.
    pub fn grounded(&self) -> (SymBand, SymBand) {
        (self.cap.grounded(), self.inv_ind.grounded())
    }
}

/// `L_J0 / cos φ`.
pub fn junction_inductance(l_j0: f64, flux_bias: f64) -> Result<f64> {
    if !flux_bias.is_finite() || flux_bias.abs() >= FRAC_PI_2 {
        return Err(Error::SingularInductance { flux_bias });
    }
    Ok(l_j0 / flux_bias.cos())
}

pub fn build_matrices(design: &BlochniumDesign) -> Result<CircuitMatrices> {
    design.validate()?;
    let nodes = design.node_count();
    if nodes - 1 > eigen::NODE_LIMIT {
        return Err(Error::ChainTooLarge {
            nodes,
            limit: eigen::NODE_LIMIT,
        });
    }
    let m = design.m_slaves as usize;
    let n = design.n_quartons as usize;

    let l_js = junction_inductance(design.slave_inductance0(), design.flux_bias)?;
    let inv_ls = l_js.recip();
    // 1/L_Jm = α_c / L_Js; α_c = 0 leaves the master branch open.
    let inv_lm = design.alpha_c * inv_ls;

    let mut cap = SymBand::zeros(nodes, m);
    let mut inv_ind = SymBand::zeros(nodes, m);
    for k in 0..nodes {
        cap.add_diagonal(k, design.c_g);
    }
    let slave_links: Vec<_> = (0..m * n).map(|k| (k, k + 1)).collect();
    for &(i, j) in &slave_links {
        cap.add_link(i, j, design.c_js);
        inv_ind.add_link(i, j, inv_ls);
    }
    let master_links: Vec<_> = if design.alpha_c > 0.0 {
        (0..n).map(|k| (m * k, m * (k + 1))).collect()
    } else {
        Vec::new()
    };
    for &(i, j) in &master_links {
        cap.add_link(i, j, design.c_jm);
        inv_ind.add_link(i, j, inv_lm);
    }

    Ok(CircuitMatrices {
        node_count: nodes,
        cap,
        inv_ind,
        slave_links,
        master_links,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeSolver {
    /// Dense up to [`eigen::DENSE_LIMIT`] grounded nodes, banded above.
    #[default]
    Auto,
    Dense,
    Banded,
}

/// Lowest linear-mode angular frequency ω_eff (rad/s) of the grounded chain.
pub fn effective_mode(matrices: &CircuitMatrices) -> Result<f64> {
    effective_mode_with(matrices, ModeSolver::Auto)
}

pub fn effective_mode_with(matrices: &CircuitMatrices, solver: ModeSolver) -> Result<f64> {
    let (cap, inv_ind) = matrices.grounded();
    if cap.dim() > eigen::NODE_LIMIT {
        return Err(Error::ChainTooLarge {
            nodes: matrices.node_count,
            limit: eigen::NODE_LIMIT,
        });
    }
    let dense = match solver {
        ModeSolver::Auto => cap.dim() <= eigen::DENSE_LIMIT,
        ModeSolver::Dense => true,
        ModeSolver::Banded => false,
    };
    if dense {
        eigen::lowest_mode_dense(&cap.to_dense(), &inv_ind.to_dense())
    } else {
        eigen::lowest_mode_banded(&cap, &inv_ind)
    }
}

/// Charging energy `e² / 2C` (J).
pub fn charging_energy(c_sigma: f64) -> Result<f64> {
    positive("c_sigma", c_sigma)?;
    Ok(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c_sigma))
}

/// Kerr coefficient `K = −E_c (1 − α_c) / (6 ħ N M)` (rad/s).
///
/// This is `−E_c/(6ħN) · (1/M − α_c*)` with `α_c* = α_c / M`, so `K` vanishes
/// at `α_c = 1` and changes sign above it.
pub fn kerr_coefficient(design: &BlochniumDesign, e_c: f64) -> f64 {
    let nm = design.n_quartons as f64 * design.m_slaves as f64;
    let k = -e_c * (1.0 - design.alpha_c) / (6.0 * HBAR * nm);
    if k == 0.0 {
        0.0
    } else {
        k
    }
}

/// Reduced Kerr-oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    /// Linear mode frequency (rad/s).
    pub omega_eff: f64,
    /// Coupling rate (rad/s).
    pub kappa: f64,
    /// Kerr coefficient (rad/s).
    pub kerr_k: f64,
    /// Charging energy (J).
    pub e_c: f64,
}

impl EffectiveModel {
    pub fn kerr_over_kappa(&self) -> f64 {
        self.kerr_k / self.kappa
    }
}

/// Flux-biased design to effective model: matrices, eigensolve, Kerr term.
pub fn tuned_model(design: &BlochniumDesign) -> Result<EffectiveModel> {
    let matrices = build_matrices(design)?;
    let omega_eff = effective_mode(&matrices)?;
    let e_c = design.charging_energy()?;
    Ok(EffectiveModel {
        omega_eff,
        kappa: design.kappa,
        kerr_k: kerr_coefficient(design, e_c),
        e_c,
    })
}

/// Rough coupling-rate estimate `ω² C_g² Z_0 / C_total` (rad/s) with
/// `C_total` the total ground capacitance, the usual result for a resonator
/// loaded through a small series capacitor. Diagnostic only; κ is otherwise a
/// user input.
pub fn estimate_kappa(design: &BlochniumDesign, omega_eff: f64) -> f64 {
    let c_total = design.c_g * design.node_count() as f64;
    omega_eff.powi(2) * design.c_g * design.c_g * design.z0 / c_total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) fn design(n: u32, m: u32, alpha: f64) -> BlochniumDesign {
        BlochniumDesign {
            n_quartons: n,
            m_slaves: m,
            alpha_c: alpha,
            e_js: 1e-21,
            c_g: 1e-15,
            c_js: 50e-15,
            c_jm: 5e-15,
            z0: 50.0,
            kappa: 2.0 * PI * 10e6,
            flux_bias: 0.0,
            e_c: None,
        }
    }

    #[test]
    fn smallest_chain_has_parallel_slave_and_master() {
        let m = build_matrices(&design(1, 1, 0.5)).unwrap();
        assert_eq!(m.node_count, 2);
        assert_eq!(m.slave_links, vec![(0, 1)]);
        assert_eq!(m.master_links, vec![(0, 1)]);
        let c = m.cap_matrix();
        let d = design(1, 1, 0.5);
        assert!((c[(0, 1)] + d.c_js + d.c_jm).abs() < 1e-12 * d.c_js);
        assert!((c[(1, 1)] - (d.c_g + d.c_js + d.c_jm)).abs() < 1e-12 * d.c_js);
        let k = m.inv_ind_matrix();
        let inv_ls = 1.0 / d.slave_inductance0();
        assert!((k[(0, 1)] + 1.5 * inv_ls).abs() <= 1e-12 * inv_ls);
    }

    #[test]
    fn two_by_two_topology() {
        let m = build_matrices(&design(2, 2, 0.1)).unwrap();
        assert_eq!(m.node_count, 5);
        assert_eq!(m.master_links, vec![(0, 2), (2, 4)]);
        assert_eq!(m.slave_links, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let k = m.inv_ind_matrix();
        assert_eq!(k[(0, 3)], 0.0);
        assert!(k[(0, 2)] < 0.0);
        assert!(k[(1, 3)] == 0.0);
    }

    #[test]
    fn reference_chain_counts() {
        let m = build_matrices(&design(70, 16, 0.1)).unwrap();
        assert_eq!(m.node_count, 1121);
        assert_eq!(m.slave_links.len(), 1120);
        assert_eq!(m.master_links.len(), 70);
    }

    #[test]
    fn matrices_are_symmetric_with_one_free_mode() {
        let m = build_matrices(&design(3, 2, 0.3)).unwrap();
        let (c, k) = (m.cap_matrix(), m.inv_ind_matrix());
        assert_eq!(c, c.transpose());
        assert_eq!(k, k.transpose());
        // Uniform flux translation costs no inductive energy.
        for i in 0..m.node_count {
            let row: f64 = k.row(i).iter().sum();
            assert!(row.abs() <= 1e-9 * k[(i, i)].abs());
        }
        let eig = k.symmetric_eigenvalues();
        let top = eig.max();
        assert_eq!(eig.iter().filter(|&&l| l.abs() < 1e-10 * top).count(), 1);
        assert!(c.cholesky().is_some());
    }

    #[test]
    fn plain_array_omits_master_link() {
        let m = build_matrices(&design(4, 1, 0.0)).unwrap();
        assert!(m.master_links.is_empty());
        assert_eq!(m.slave_links.len(), 4);
    }

    #[test]
    fn junction_inductance_cases() {
        assert_eq!(junction_inductance(1e-9, 0.0).unwrap(), 1e-9);
        let l = junction_inductance(1e-9, PI / 3.0).unwrap();
        assert!((l - 2e-9).abs() < 1e-23);
        assert!(matches!(
            junction_inductance(1e-9, PI / 2.0),
            Err(Error::SingularInductance { .. })
        ));
        assert!(junction_inductance(1e-9, -2.0).is_err());
    }

    #[test]
    fn flux_bias_out_of_range_is_rejected() {
        let mut d = design(2, 2, 0.1);
        d.flux_bias = FRAC_PI_2;
        assert!(matches!(build_matrices(&d), Err(Error::SingularInductance { .. })));
    }

    #[test]
    fn invalid_fields_name_themselves() {
        let mut d = design(2, 2, 0.1);
        d.kappa = 0.0;
        match d.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "kappa"),
            other => panic!("{other:?}"),
        }
        let mut d = design(2, 2, 0.1);
        d.m_slaves = 0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn chain_cap_is_enforced() {
        let d = design(1000, 11, 0.1);
        assert!(matches!(build_matrices(&d), Err(Error::ChainTooLarge { .. })));
    }

    #[test]
    fn single_lc_loop() {
        // One grounded node: C_g to ground, L_Js back to node 0.
        let mut d = design(1, 1, 0.0);
        d.c_g = 200e-15;
        let m = build_matrices(&d).unwrap();
        let w = effective_mode(&m).unwrap();
        let l = d.slave_inductance0();
        let c = d.c_g + d.c_js;
        let exact = 1.0 / (l * c).sqrt();
        assert!(((w - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn inductance_scaling_law() {
        let d = design(3, 4, 0.2);
        let w = effective_mode(&build_matrices(&d).unwrap()).unwrap();
        let mut d2 = d.clone();
        d2.e_js /= 2.0; // doubles every inductance
        let w2 = effective_mode(&build_matrices(&d2).unwrap()).unwrap();
        assert!((w2 / w - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn banded_path_matches_dense() {
        let d = design(20, 8, 0.1);
        let m = build_matrices(&d).unwrap();
        let wd = effective_mode_with(&m, ModeSolver::Dense).unwrap();
        let wb = effective_mode_with(&m, ModeSolver::Banded).unwrap();
        assert!(((wd - wb) / wd).abs() < 1e-11, "{wd} vs {wb}");
    }

    #[test]
    fn large_chain_uses_banded_solver() {
        // 2400 grounded nodes, beyond the dense limit.
        let d = design(150, 16, 0.1);
        let w = effective_mode(&build_matrices(&d).unwrap()).unwrap();
        let mut d2 = d.clone();
        d2.flux_bias = 1.0;
        let w2 = effective_mode(&build_matrices(&d2).unwrap()).unwrap();
        assert!((w2 / w - 1f64.cos().sqrt()).abs() < 1e-10);
    }

    #[test]
    fn charging_energy_values() {
        let e_c = charging_energy(1e-15).unwrap();
        let exact = 1.602176634e-19f64.powi(2) / 2e-15;
        assert!((e_c - exact).abs() < 1e-12 * exact);
        // ≈ h · 19.4 GHz
        assert!((e_c / crate::constants::PLANCK / 1e9 - 19.37).abs() < 0.01);
        assert!((charging_energy(2e-15).unwrap() - e_c / 2.0).abs() < 1e-12 * e_c);
        assert!(charging_energy(1e300).unwrap() < 1e-60);
        assert!(charging_energy(0.0).is_err());
        assert!(charging_energy(-1e-15).is_err());
    }

    #[test]
    fn kerr_vanishes_at_quarton_cancellation() {
        let d = design(7, 3, 1.0);
        let k = kerr_coefficient(&d, 1e-24);
        assert_eq!(k, 0.0);
        assert!(k.is_sign_positive());
        assert!(kerr_coefficient(&design(7, 3, 1.5), 1e-24) > 0.0);
        assert!(kerr_coefficient(&design(7, 3, 0.5), 1e-24) < 0.0);
    }

    #[test]
    fn kerr_reference_value() {
        let e_c = 1e-24;
        let k = kerr_coefficient(&design(70, 16, 0.1), e_c);
        let expected = -(0.9 / 6720.0) * e_c / HBAR;
        assert!(((k - expected) / expected).abs() < 1e-15);
    }

    #[test]
    fn tuned_model_follows_sqrt_cos_law() {
        let d = design(4, 6, 0.1);
        let w0 = tuned_model(&d).unwrap().omega_eff;
        let mut d2 = d.clone();
        d2.flux_bias = 0.25f64.acos();
        let w = tuned_model(&d2).unwrap().omega_eff;
        assert!((w / w0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frequency_calibration_hits_target() {
        let d = design(5, 4, 0.1);
        let target = 2.0 * PI * 8e9;
        let scaled = d.scaled_to_frequency(target).unwrap();
        let w = tuned_model(&scaled).unwrap().omega_eff;
        assert!(((w - target) / target).abs() < 1e-12);
    }

    #[test]
    fn e_c_override() {
        let mut d = design(2, 2, 0.1);
        d.e_c = Some(3e-24);
        assert_eq!(d.charging_energy().unwrap(), 3e-24);
        assert_eq!(tuned_model(&d).unwrap().e_c, 3e-24);
    }

    #[test]
    fn kappa_estimate_is_a_rate_quadratic_in_frequency() {
        let d = design(2, 2, 0.1);
        let k1 = estimate_kappa(&d, 1e10);
        let k2 = estimate_kappa(&d, 2e10);
        assert!(k1 > 0.0);
        assert!((k2 / k1 - 4.0).abs() < 1e-12);
        // Ω·F is seconds, so ω² C Z0 is a rate.
        let c_total = d.c_g * d.node_count() as f64;
        assert!((k1 - 1e20 * d.c_g * d.c_g * d.z0 / c_total).abs() < 1e-12 * k1);
    }
}

//! Pump steady state of the driven Kerr mode.
//!
//! The normalized photon number `n` solves
//!
//! ```text
//! ζ² n³ − 2 δ ζ n² + (1/4 + δ²) n − 1 = 0
//! ```
//!
//! Substituting `x = ζ n` gives the well-scaled monic cubic
//! `x³ − 2δ x² + (1/4 + δ²) x − ζ = 0`, which is what gets solved. Since
//! `x² − 2δx + 1/4 + δ² = (x − δ)² + 1/4 > 0`, every real root has the sign of
//! `ζ` and maps to a positive `n`.

use serde::{Deserialize, Serialize};

use crate::cubic::MonicCubic;

/// Residual bound every reported root satisfies.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpDrive {
    /// Normalized pump detuning `(ω_p − ω_eff) / κ`.
    pub delta: f64,
    /// Relative nonlinearity strength `(K/κ) |â_in|²`.
    pub zeta: f64,
    /// Pump phase φ in `e^{2iφ}` (rad).
    #[serde(default)]
    pub pump_phase: f64,
}

impl PumpDrive {
    pub fn new(delta: f64, zeta: f64) -> Self {
        Self {
            delta,
            zeta,
            pump_phase: 0.0,
        }
    }

    pub fn with_phase(mut self, pump_phase: f64) -> Self {
        self.pump_phase = pump_phase;
        self
    }

    fn is_finite(&self) -> bool {
        self.delta.is_finite() && self.zeta.is_finite() && self.pump_phase.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub n: f64,
    pub stable: bool,
    /// Two roots closer than the merge tolerance were folded into this one.
    pub double: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub drive: PumpDrive,
    /// Ascending in `n`.
    pub roots: Vec<Root>,
    /// Three distinct positive roots.
    pub bistable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    #[default]
    LowStable,
    HighStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub drive: PumpDrive,
    pub n: f64,
    pub branch: Branch,
    pub stable: bool,
}

impl OperatingPoint {
    /// `ζ n`, the quantity the linearized response depends on.
    pub fn zeta_n(&self) -> f64 {
        self.drive.zeta * self.n
    }
}

/// `[1/4 + δ²] n − 2δζ n² + ζ² n³ − 1`.
pub fn residual(drive: &PumpDrive, n: f64) -> f64 {
    let (d, z) = (drive.delta, drive.zeta);
    ((z * z * n - 2.0 * d * z) * n + 0.25 + d * d) * n - 1.0
}

/// Slope `3ζ²n² − 4δζ n + 1/4 + δ²` of the left-hand side in `n`.
pub fn residual_slope(drive: &PumpDrive, n: f64) -> f64 {
    let (d, z) = (drive.delta, drive.zeta);
    let x = z * n;
    3.0 * x * x - 4.0 * d * x + 0.25 + d * d
}

/// A branch is stable when the drive residual increases through the root.
pub fn root_stability(drive: &PumpDrive, n: f64) -> bool {
    residual_slope(drive, n) > 0.0
}

fn normalized_cubic(drive: &PumpDrive) -> MonicCubic {
    let d = drive.delta;
    MonicCubic::new(-2.0 * d, 0.25 + d * d, -drive.zeta)
}

pub fn photon_number_roots(drive: &PumpDrive) -> RootSet {
    assert!(drive.is_finite(), "non-finite pump drive {drive:?}");
    let d = drive.delta;
    if drive.zeta == 0.0 {
        let n = 1.0 / (0.25 + d * d);
        return RootSet {
            drive: *drive,
            roots: vec![Root {
                n,
                stable: true,
                double: false,
            }],
            bistable: false,
        };
    }

    let mut roots: Vec<Root> = normalized_cubic(drive)
        .real_roots()
        .into_iter()
        .map(|r| {
            let n = r.value / drive.zeta;
            Root {
                n,
                stable: r.multiplicity == 1 && root_stability(drive, n),
                double: r.multiplicity > 1,
            }
        })
        .filter(|r| r.n >= 0.0 && residual(drive, r.n).abs() <= RESIDUAL_TOL)
        .collect();
    roots.sort_by(|a, b| a.n.total_cmp(&b.n));

    // A real cubic always has a real root; keep the best candidate if the
    // residual filter was too strict for an ill-conditioned input.
    if roots.is_empty() {
        let best = normalized_cubic(drive)
            .real_roots()
            .into_iter()
            .map(|r| r.value / drive.zeta)
            .min_by(|a, b| residual(drive, *a).abs().total_cmp(&residual(drive, *b).abs()))
            .expect("a real cubic has a real root");
        roots.push(Root {
            n: best,
            stable: root_stability(drive, best),
            double: false,
        });
    }

    let bistable = roots.len() == 3 && roots.iter().all(|r| !r.double);
    RootSet {
        drive: *drive,
        roots,
        bistable,
    }
}

/// Analytic bifurcation magnitude `|ζ₀| = 1/√27`.
pub fn bifurcation_threshold() -> f64 {
    1.0 / 27f64.sqrt()
}

/// How far ζ sits inside the three-root window at detuning δ; positive iff
/// the cubic has three distinct real roots.
///
/// The window is bounded by the critical values of `x (x − δ)² + x/4`, which
/// stay accurate to rounding near the cusp where the discriminant itself
/// cancels to noise.
pub fn bistability_margin(delta: f64, zeta: f64) -> f64 {
    // Rounding can push δ² − 3/4 just below zero at the cusp itself.
    let s = delta * delta - 0.75;
    if s < -4.0 * f64::EPSILON {
        return f64::NEG_INFINITY;
    }
    let s = s.max(0.0);
    let f = |x: f64| x * (x - delta).powi(2) + 0.25 * x;
    let r = s.sqrt();
    let (lo, hi) = ((2.0 * delta - r) / 3.0, (2.0 * delta + r) / 3.0);
    (f(lo) - zeta).min(zeta - f(hi))
}

/// Detuning with the widest three-root window for a fixed ζ, and its margin.
///
/// Bistability needs δ of the same sign as ζ with `|δ| ≥ √3/2`. The search is
/// a dense scan followed by golden-section refinement.
pub fn best_bistable_delta(zeta: f64) -> (f64, f64) {
    let sign = if zeta < 0.0 { -1.0 } else { 1.0 };
    let margin = |a: f64| bistability_margin(sign * a, zeta);
    let (lo, hi, steps) = (0.75f64.sqrt(), 4.0, 4000);
    let h = (hi - lo) / steps as f64;
    let (mut best_a, mut best) = (lo, f64::NEG_INFINITY);
    for i in 0..=steps {
        let a = lo + h * i as f64;
        let v = margin(a);
        if v > best {
            best = v;
            best_a = a;
        }
    }
    let (a, v) = golden_max(margin, (best_a - h).max(lo), (best_a + h).min(hi), 1e-14);
    if v > best {
        (sign * a, v)
    } else {
        (sign * best_a, best)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
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

/// Whether some δ gives three distinct positive roots at this ζ, counting
/// roots with the companion-matrix solver at the most favorable δ.
pub fn has_bistable_region(zeta: f64) -> bool {
    if zeta == 0.0 {
        return false;
    }
    let (d, margin) = best_bistable_delta(zeta);
    margin > 0.0 && photon_number_roots(&PumpDrive::new(d, zeta)).bistable
}

/// Numerical bifurcation threshold: the smallest `|ζ|` admitting bistability,
/// by bisection on [`has_bistable_region`].
pub fn numerical_bifurcation_threshold(tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    debug_assert!(has_bistable_region(-hi));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if has_bistable_region(-mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn select_branch(roots: &RootSet, policy: BranchPolicy) -> OperatingPoint {
    assert!(!roots.roots.is_empty(), "root set is empty");
    let stable = || roots.roots.iter().filter(|r| r.stable);
    let pick = match policy {
        BranchPolicy::LowStable => stable().next(),
        BranchPolicy::HighStable => stable().last(),
    };
    let (root, stable) = match pick {
        Some(r) => (*r, true),
        None => {
            let r = match policy {
                BranchPolicy::LowStable => roots.roots[0],
                BranchPolicy::HighStable => *roots.roots.last().unwrap(),
            };
            (r, false)
        }
    };
    let branch = if roots.roots.len() > 1 && Some(root.n) == roots.roots.last().map(|r| r.n) {
        Branch::High
    } else {
        Branch::Low
    };
    OperatingPoint {
        drive: roots.drive,
        n: root.n,
        branch,
        stable,
    }
}

/// Roots plus branch selection in one call.
pub fn operating_point(drive: &PumpDrive, policy: BranchPolicy) -> OperatingPoint {
    select_branch(&photon_number_roots(drive), policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_cavity_anchors() {
        let r = photon_number_roots(&PumpDrive::new(0.0, 0.0));
        assert_eq!(r.roots.len(), 1);
        assert_eq!(r.roots[0].n, 4.0);
        let r = photon_number_roots(&PumpDrive::new(0.5, 0.0));
        assert_eq!(r.roots[0].n, 2.0);
        assert!(r.roots[0].stable && !r.bistable);
    }

    #[test]
    fn lorentzian_shape_without_nonlinearity() {
        for i in -30..=30 {
            let d = i as f64 * 0.1;
            let r = photon_number_roots(&PumpDrive::new(d, 0.0));
            assert!((r.roots[0].n - 1.0 / (0.25 + d * d)).abs() < 1e-15);
            assert!(r.roots[0].n <= 4.0);
        }
    }

    #[test]
    fn bistable_triple_alternates_stability() {
        let z = -1.5 * bifurcation_threshold();
        let (d, margin) = best_bistable_delta(z);
        assert!(margin > 0.0);
        let r = photon_number_roots(&PumpDrive::new(d, z));
        assert!(r.bistable);
        let pattern: Vec<bool> = r.roots.iter().map(|r| r.stable).collect();
        assert_eq!(pattern, vec![true, false, true]);
        assert!(r.roots.windows(2).all(|w| w[0].n < w[1].n));
    }

    #[test]
    fn branch_policies() {
        let mono = photon_number_roots(&PumpDrive::new(0.0, 0.0));
        assert_eq!(select_branch(&mono, BranchPolicy::LowStable).n, 4.0);
        assert_eq!(select_branch(&mono, BranchPolicy::HighStable).n, 4.0);

        let z = -0.3;
        let (d, _) = best_bistable_delta(z);
        let tri = photon_number_roots(&PumpDrive::new(d, z));
        assert!(tri.bistable);
        let low = select_branch(&tri, BranchPolicy::LowStable);
        let high = select_branch(&tri, BranchPolicy::HighStable);
        assert_eq!(low.n, tri.roots[0].n);
        assert_eq!(high.n, tri.roots[2].n);
        assert_eq!(low.branch, Branch::Low);
        assert_eq!(high.branch, Branch::High);
        assert!(low.stable && high.stable);
    }

    #[test]
    fn mirror_symmetry_of_roots() {
        // (δ, ζ) → (−δ, −ζ) leaves n unchanged.
        let a = photon_number_roots(&PumpDrive::new(-0.7, -0.15));
        let b = photon_number_roots(&PumpDrive::new(0.7, 0.15));
        assert_eq!(a.roots.len(), b.roots.len());
        for (x, y) in a.roots.iter().zip(&b.roots) {
            assert!((x.n - y.n).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_analytic_value() {
        assert!((bifurcation_threshold() - 0.192_450_089_7).abs() < 1e-10);
    }

    #[test]
    fn cusp_point_is_a_triple_root() {
        // At ζ = 1/√27, δ = √3/2 the cubic is (x − 1/√3)³.
        let z = bifurcation_threshold();
        let d = 3f64.sqrt() / 2.0;
        let p = normalized_cubic(&PumpDrive::new(d, z));
        let x = 1.0 / 3f64.sqrt();
        assert!(p.eval(x).abs() < 1e-15);
        assert!(p.derivative(x).abs() < 1e-15);
        assert!(p.discriminant().abs() < 1e-15);
    }

    #[test]
    fn margin_agrees_with_discriminant_away_from_the_cusp() {
        for (d, z) in [(-1.2, -0.3), (-1.0, -0.19), (-2.0, -0.5), (1.5, 0.4), (-1.5, -2.0), (-0.9, -0.1)] {
            let disc = normalized_cubic(&PumpDrive::new(d, z)).discriminant();
            assert_eq!(bistability_margin(d, z) > 0.0, disc > 0.0, "δ = {d}, ζ = {z}");
        }
        let z0 = bifurcation_threshold();
        let m = bistability_margin(-(0.75f64.sqrt()), -z0);
        assert!(m.abs() < 1e-12, "{m}");
    }

    #[test]
    fn window_opens_just_past_threshold() {
        let z0 = bifurcation_threshold();
        assert!(best_bistable_delta(-z0 * (1.0 + 1e-7)).1 > 0.0);
        assert!(best_bistable_delta(-z0 * (1.0 - 1e-7)).1 < 0.0);
    }

    #[test]
    fn unstable_root_is_never_selected_when_stable_exists() {
        let z = -0.4;
        let (d, _) = best_bistable_delta(z);
        let tri = photon_number_roots(&PumpDrive::new(d, z));
        for policy in [BranchPolicy::LowStable, BranchPolicy::HighStable] {
            assert!(select_branch(&tri, policy).stable);
        }
    }
}

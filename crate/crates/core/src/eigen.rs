//! Lowest mode of the generalized symmetric problem `K v = ω² C v`.
//!
//! `K` is the inverse-inductance matrix and `C` the capacitance matrix of a
//! grounded chain. The lowest mode is computed through the *largest*
//! eigenvalue `μ = 1/ω²` of `L⁻¹ C L⁻ᵀ` with `K = L Lᵀ`, so its relative
//! accuracy does not degrade with the spread between the fundamental and
//! the junction plasma modes.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Chains up to this many grounded nodes use a dense solve.
pub const DENSE_LIMIT: usize = 2000;
/// Hard cap on chain size.
pub const NODE_LIMIT: usize = 10_000;

const POWER_MAX_ITER: usize = 20_000;
/// Relative change of the Rayleigh quotient accepted as converged. Rounding
/// noise in the banded solves sits near 1e-13 for chains of a few thousand
/// nodes, so a tighter bound can stall.
const POWER_TOL: f64 = 1e-12;

/// Symmetric band matrix with half-bandwidth `bw`, lower band stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    // data[i * (bw + 1) + k] = a(i, i - k)
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        &mut self.data[i * (self.bw + 1) + (i - j)]
    }

    pub fn add_diagonal(&mut self, i: usize, value: f64) {
        *self.slot(i, i) += value;
    }

    /// Stamp a two-terminal element of admittance-like weight `value`
    /// between nodes `i` and `j`.
    pub fn add_link(&mut self, i: usize, j: usize, value: f64) {
        *self.slot(i, i) += value;
        *self.slot(j, j) += value;
        *self.slot(i, j) -= value;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Drop row and column 0 (node 0 tied to ground).
    pub fn grounded(&self) -> SymBand {
        let n = self.n.saturating_sub(1);
        let mut out = SymBand::zeros(n, self.bw);
        for i in 0..n {
            for k in 0..=self.bw.min(i) {
                out.data[i * (self.bw + 1) + k] = self.get(i + 1, i + 1 - k);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
        y
    }

    /// Banded Cholesky `A = L Lᵀ`; `None` if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = vec![0.0; n * (bw + 1)];
        let at = |i: usize, k: usize| i * (bw + 1) + k;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = self.get(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[at(i, i - k)] * l[at(j, j - k)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l[at(i, 0)] = sum.sqrt();
                } else {
                    l[at(i, i - j)] = sum / l[at(j, 0)];
                }
            }
        }
        Some(BandCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Solve `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let at = |i: usize, k: usize| i * (bw + 1) + k;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 1..=bw.min(i) {
                s -= self.l[at(i, k)] * y[i - k];
            }
            y[i] = s / self.l[at(i, 0)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..=bw.min(n - 1 - i) {
                s -= self.l[at(i + k, k)] * y[i + k];
            }
            y[i] = s / self.l[at(i, 0)];
        }
        y
    }
}

/// Smallest strictly positive ω with `K v = ω² C v`, dense solve.
pub fn lowest_mode_dense(cap: &DMatrix<f64>, inv_ind: &DMatrix<f64>) -> Result<f64> {
    let n = cap.nrows();
    if n == 0 || cap.ncols() != n || inv_ind.shape() != (n, n) {
        return Err(Error::invalid(
            "matrices",
            format!("shapes {:?} and {:?} do not describe a square problem", cap.shape(), inv_ind.shape()),
        ));
    }
    let cap_chol = cap.clone().cholesky().ok_or(Error::NotPositiveDefinite {
        which: "capacitance",
    })?;

    if let Some(k_chol) = inv_ind.clone().cholesky() {
        let l = k_chol.l();
        // B = L⁻¹ C L⁻ᵀ
        let x = l
            .solve_lower_triangular(cap)
            .ok_or(Error::NotPositiveDefinite {
                which: "inverse inductance",
            })?;
        let mut b = l
            .solve_lower_triangular(&x.transpose())
            .ok_or(Error::NotPositiveDefinite {
                which: "inverse inductance",
            })?;
        symmetrize(&mut b);
        let mu_max = b.symmetric_eigenvalues().max();
        return Ok(mu_max.recip().sqrt());
    }

    // Semidefinite K: reduce through C instead and skip the zero modes.
    let l = cap_chol.l();
    let x = l
        .solve_lower_triangular(inv_ind)
        .expect("triangular factor of a positive definite matrix is invertible");
    let mut a = l
        .solve_lower_triangular(&x.transpose())
        .expect("triangular factor of a positive definite matrix is invertible");
    symmetrize(&mut a);
    let eig = a.symmetric_eigenvalues();
    let top = eig.max();
    eig.iter()
        .copied()
        .filter(|&lam| lam > 1e-12 * top)
        .min_by(f64::total_cmp)
        .map(f64::sqrt)
        .ok_or(Error::NotPositiveDefinite {
            which: "inverse inductance",
        })
}

/// Same problem for band matrices: power iteration on `K⁻¹ C` with a banded
/// Cholesky solve. Converges at the rate `(ω₁/ω₂)²`.
pub fn lowest_mode_banded(cap: &SymBand, inv_ind: &SymBand) -> Result<f64> {
    let n = cap.dim();
    if cap.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite {
            which: "capacitance",
        });
    }
    let k_chol = inv_ind.cholesky().ok_or(Error::NotPositiveDefinite {
        which: "inverse inductance",
    })?;

    // A linear ramp is close to the fundamental of a chain grounded at one end.
    let mut v: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let mut mu_prev = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let cv = cap.mul_vec(&v);
        let w = k_chol.solve(&cv);
        let kw = inv_ind.mul_vec(&w);
        let num = dot(&w, &cap.mul_vec(&w));
        let den = dot(&w, &kw);
        let mu = num / den;
        let norm = dot(&w, &w).sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
        if (mu - mu_prev).abs() <= POWER_TOL * mu {
            return Ok(mu.recip().sqrt());
        }
        mu_prev = mu;
    }
    Err(Error::NoConvergence(POWER_MAX_ITER))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

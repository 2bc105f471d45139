//! Real roots of monic cubics via the companion matrix.
//!
//! Closed-form cubic formulas lose precision near double roots, which is
//! exactly where bistability appears. Eigenvalues of the 3×3 companion
//! matrix followed by a short Newton polish stay accurate there.

use nalgebra::Matrix3;

/// Imaginary parts below this (relative to `1 + |re|`) are treated as real.
const IMAG_TOL: f64 = 1e-7;
/// Roots closer than this are merged into one multiple root.
pub const MERGE_TOL: f64 = 1e-10;
const MAX_POLISH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    /// 1 for a simple root, 2 or 3 when nearby roots were merged.
    pub multiplicity: u8,
}

/// Monic cubic `x³ + b x² + c x + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonicCubic {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MonicCubic {
    pub fn new(b: f64, c: f64, d: f64) -> Self {
        Self { b, c, d }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((x + self.b) * x + self.c) * x + self.d
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * x + 2.0 * self.b) * x + self.c
    }

    /// Positive for three distinct real roots, negative for one real root
    /// and a complex pair, zero at a multiple root.
    pub fn discriminant(&self) -> f64 {
        let (b, c, d) = (self.b, self.c, self.d);
        18.0 * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * c.powi(3) - 27.0 * d * d
    }

    pub fn companion(&self) -> Matrix3<f64> {
        Matrix3::new(
            -self.b, -self.c, -self.d, //
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0,
        )
    }

    /// All real roots, ascending, with close roots merged.
    pub fn real_roots(&self) -> Vec<RealRoot> {
        let eig = self.companion().complex_eigenvalues();
        let mut xs: Vec<f64> = eig
            .iter()
            .filter(|z| z.im.abs() <= IMAG_TOL * (1.0 + z.re.abs()))
            .map(|z| self.polish(z.re))
            .collect();
        xs.sort_by(f64::total_cmp);

        let mut roots: Vec<RealRoot> = Vec::with_capacity(3);
        for x in xs {
            match roots.last_mut() {
                Some(last) if self.indistinguishable(last.value, x) => {
                    last.multiplicity += 1;
                    if last.multiplicity == 2 {
                        last.value = self.critical_point_between(last.value, x);
                    }
                }
                _ => roots.push(RealRoot {
                    value: x,
                    multiplicity: 1,
                }),
            }
        }
        roots
    }

    /// Two polished roots are one multiple root when they lie within
    /// [`MERGE_TOL`], or when the turning point between them is a root to
    /// within rounding. The second case catches double roots, which Newton
    /// polishing only resolves to about the square root of machine epsilon.
    fn indistinguishable(&self, a: f64, b: f64) -> bool {
        let scale = a.abs().max(b.abs()).max(1.0);
        let gap = (b - a).abs();
        if gap <= MERGE_TOL * scale {
            return true;
        }
        if gap > 1e-6 * scale {
            return false;
        }
        let c = self.critical_point_between(a, b);
        let size = c.abs().powi(3) + (self.b * c * c).abs() + (self.c * c).abs() + self.d.abs();
        self.eval(c).abs() <= 64.0 * f64::EPSILON * size
    }

    /// Zero of the derivative closest to the midpoint of `a` and `b`.
    fn critical_point_between(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let disc = self.b * self.b - 3.0 * self.c;
        if disc < 0.0 {
            return mid;
        }
        let s = disc.sqrt();
        let c1 = (-self.b - s) / 3.0;
        let c2 = (-self.b + s) / 3.0;
        if (c1 - mid).abs() <= (c2 - mid).abs() {
            c1
        } else {
            c2
        }
    }

    /// Newton iterations that only accept steps reducing the residual.
    fn polish(&self, mut x: f64) -> f64 {
        let mut fx = self.eval(x);
        for _ in 0..MAX_POLISH {
            if fx == 0.0 {
                break;
            }
            let dfx = self.derivative(x);
            if dfx == 0.0 || !dfx.is_finite() {
                break;
            }
            let next = x - fx / dfx;
            let fnext = self.eval(next);
            if fnext.abs() >= fx.abs() {
                break;
            }
            x = next;
            fx = fnext;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_distinct_roots() {
        // (x - 1)(x - 2)(x - 3)
        let p = MonicCubic::new(-6.0, 11.0, -6.0);
        let r: Vec<f64> = p.real_roots().iter().map(|r| r.value).collect();
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        assert!(p.discriminant() > 0.0);
    }

    #[test]
    fn single_real_root_with_complex_pair() {
        // (x - 2)(x² + 1)
        let p = MonicCubic::new(-2.0, 1.0, -2.0);
        let r = p.real_roots();
        assert_eq!(r.len(), 1);
        assert!((r[0].value - 2.0).abs() < 1e-14);
        assert!(p.discriminant() < 0.0);
    }

    #[test]
    fn double_root_is_merged() {
        // (x - 1)²(x + 2)
        let p = MonicCubic::new(0.0, -3.0, 2.0);
        let r = p.real_roots();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].multiplicity, 2);
        assert!((r[1].value - 1.0).abs() < 1e-7);
        assert!((r[0].value + 2.0).abs() < 1e-13);
    }

    #[test]
    fn tiny_root_keeps_relative_accuracy() {
        // x³ + x/4 - 1e-12 has its real root near 4e-12.
        let p = MonicCubic::new(0.0, 0.25, -1e-12);
        let r = p.real_roots();
        assert_eq!(r.len(), 1);
        let x = r[0].value;
        assert!(((x - 4e-12) / 4e-12).abs() < 1e-9, "{x:e}");
    }
}

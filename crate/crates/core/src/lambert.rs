//! Principal real branch of the Lambert W function.
//!
//! `W(z)` is the nonnegative solution of `w e^w = z` for `z >= 0`. The
//! level curves of the modified Hamiltonian need `W(k e^{2k(c - f)})`, whose
//! argument overflows long before the value does, so [`w_log`] solves the
//! equivalent `w + ln w = y` for `y = ln z` without forming `e^y`.

use crate::error::{Error, Result};

const MAX_ITER: usize = 50;
const STEP_TOL: f64 = 1e-15;

/// Below this log-argument `W(e^y)` is replaced by `e^y`.
pub const LOG_SERIES_CUTOFF: f64 = -30.0;
/// Above this log-argument the iteration runs in log form only.
pub const LOG_ITERATION_CUTOFF: f64 = 30.0;

/// A checked evaluation `w = W(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WEval {
    pub z: f64,
    pub w: f64,
}

impl WEval {
    pub fn new(z: f64) -> Result<Self> {
        Ok(Self { z, w: w_principal(z)? })
    }

    /// `w e^w - z`.
    pub fn residual(&self) -> f64 {
        self.w * self.w.exp() - self.z
    }
}

/// `W(z)` on the principal branch for finite `z >= 0`.
pub fn w_principal(z: f64) -> Result<f64> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::domain(format!("W(z) needs finite z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut w = seed_direct(z);
    for _ in 0..MAX_ITER {
        // Halley on w e^w - z = 0
        let ew = w.exp();
        let g = w * ew - z;
        if g == 0.0 {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        let step = g / (ew * wp1 - (w + 2.0) * g / (2.0 * wp1));
        let next = w - step;
        let next = if next <= 0.0 { 0.5 * w } else { next };
        if (next - w).abs() <= STEP_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        w = next;
    }
    Err(Error::accuracy("lambert W iteration", w, f64::NAN))
}

fn seed_direct(z: f64) -> f64 {
    if z < 0.25 {
        // series about zero
        z * (1.0 - z * (1.0 - 1.5 * z))
    } else if z < 3.0 {
        z.ln_1p() * 0.8
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// `W(e^y)`, i.e. the positive solution of `w + ln w = y`.
///
/// Valid for any finite `y`; `e^y` is never formed for `y >= 30`.
pub fn w_log(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::domain(format!("w_log needs finite y, got {y}")));
    }
    if y <= LOG_SERIES_CUTOFF {
        return Ok(y.exp());
    }
    if y < LOG_ITERATION_CUTOFF {
        let w = w_principal(y.exp())?;
        return Ok(polish_log(w, y));
    }
    let ly = y.ln();
    let mut w = y - ly + ly / y;
    for _ in 0..MAX_ITER {
        // Halley on g(w) = w + ln w - y
        let g = w + w.ln() - y;
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let step = g / (g1 - 0.5 * g * g2 / g1);
        let next = w - step;
        if (next - w).abs() <= STEP_TOL * next {
            return Ok(next);
        }
        w = next;
    }
    Err(Error::accuracy("lambert W log-form iteration", w, f64::NAN))
}

fn polish_log(w: f64, y: f64) -> f64 {
    if w <= 0.0 {
        return w;
    }
    let g = w + w.ln() - y;
    let next = w - g / (1.0 + 1.0 / w);
    if next > 0.0 {
        next
    } else {
        w
    }
}

/// `W'(z) = 1 / ((1 + W(z)) e^{W(z)})` for `z > 0`.
pub fn w_prime(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("W'(z) needs finite z > 0, got {z}")));
    }
    let w = w_principal(z)?;
    if z < 1.0 {
        Ok(1.0 / ((1.0 + w) * w.exp()))
    } else {
        // e^W = z / W avoids a second exponential for large z
        Ok(w / (z * (1.0 + w)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_w(z: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, z.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn exact_points() {
        assert_eq!(w_principal(0.0).unwrap(), 0.0);
        assert!((w_principal(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        let omega = bisect_w(1.0);
        assert!((omega - 0.567_143_290_409_783_8).abs() < 1e-14);
        assert!((w_principal(1.0).unwrap() - omega).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(w_principal(-1.0), Err(Error::Domain(_))));
        assert!(w_principal(f64::NAN).is_err());
        assert!(w_principal(f64::INFINITY).is_err());
        assert!(w_log(f64::NAN).is_err());
        assert!(w_prime(0.0).is_err());
        assert!(w_prime(-2.0).is_err());
    }

    #[test]
    fn residual_on_log_grid() {
        for i in 0..=200 {
            let z = 10f64.powf(-8.0 + 16.0 * i as f64 / 200.0);
            let e = WEval::new(z).unwrap();
            assert!(e.residual().abs() <= 1e-12 * z.max(1.0), "z={z}");
        }
    }

    #[test]
    fn log_form_examples() {
        assert!((w_log(1.0).unwrap() - 1.0).abs() < 1e-15);
        let y = 1e6;
        let w = w_log(y).unwrap();
        // Newton oracle on g(w) = w + ln w - y
        let mut o = y;
        for _ in 0..60 {
            o -= (o + o.ln() - y) / (1.0 + 1.0 / o);
        }
        assert!((w - o).abs() <= 1e-9 * o);
        assert!((w + w.ln() - y).abs() <= 1e-9 * y);
        let small = w_log(-40.0).unwrap();
        assert!((small - (-40f64).exp()).abs() <= 1e-12 * (-40f64).exp());
    }

    #[test]
    fn log_form_consistent_with_direct() {
        let mut y = -30.0;
        while y <= 700.0 {
            let a = w_log(y).unwrap();
            let b = w_principal(y.exp()).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.max(1.0), "y={y}: {a} vs {b}");
            y += 0.37;
        }
    }

    #[test]
    fn derivative() {
        let e = std::f64::consts::E;
        assert!((w_prime(e).unwrap() - 1.0 / (2.0 * e)).abs() < 1e-15);
        let om = w_principal(1.0).unwrap();
        assert!((w_prime(1.0).unwrap() - 1.0 / ((1.0 + om) * om.exp())).abs() < 1e-15);
        let h = 1e-5;
        for &z in &[0.1, 0.5, 1.0, 3.0, 10.0, 100.0] {
            let fd = (w_principal(z + h).unwrap() - w_principal(z - h).unwrap()) / (2.0 * h);
            let d = w_prime(z).unwrap();
            assert!((fd - d).abs() <= 1e-6 * d, "z={z}");
        }
    }

    #[test]
    fn asymptotic_ratio() {
        let ratio = |z: f64| w_principal(z).unwrap() / (z.ln() - z.ln().ln());
        let r8 = ratio(1e8);
        assert!((0.9..=1.1).contains(&r8));
        let tail: Vec<f64> = [1e8, 1e16, 1e32, 1e64, 1e128, 1e256]
            .iter()
            .map(|&z| (ratio(z) - 1.0).abs())
            .collect();
        assert!(tail.windows(2).all(|p| p[1] < p[0]), "{tail:?}");
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone(a in 0.0f64..1e6, b in 0.0f64..1e6) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(w_principal(lo).unwrap() <= w_principal(hi).unwrap());
            }

            #[test]
            fn log_residual(y in -29.0f64..1e6) {
                let w = w_log(y).unwrap();
                prop_assert!(w > 0.0);
                prop_assert!((w + w.ln() - y).abs() <= 1e-9 * y.abs().max(1.0));
            }
        }
    }
}

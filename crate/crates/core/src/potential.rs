//! Periodic potentials `f(φ)` on the circle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SCAN_POINTS: usize = 4096;
const REFINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Pendulum,
    #[serde(rename = "trig")]
    TrigPolynomial,
    Zero,
}

/// Serialized form: `{"kind": "pendulum" | "zero" | "trig", "cos": [...], "sin": [...]}`
/// with `f(φ) = Σ a_m cos(mφ) + Σ b_m sin(mφ)`, `m` starting at 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PotentialSpec {
    kind: PotentialKind,
    #[serde(default, rename = "cos")]
    cos_coeffs: Vec<f64>,
    #[serde(default, rename = "sin")]
    sin_coeffs: Vec<f64>,
}

/// A 2π-periodic trigonometric polynomial with cached extrema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct Potential {
    kind: PotentialKind,
    cos_coeffs: Vec<f64>,
    sin_coeffs: Vec<f64>,
    f_min: f64,
    f_max: f64,
    argmin: f64,
    argmax: f64,
    maxima: Vec<f64>,
}

impl TryFrom<PotentialSpec> for Potential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        match spec.kind {
            PotentialKind::Pendulum => Ok(Potential::pendulum()),
            PotentialKind::Zero => Ok(Potential::zero()),
            PotentialKind::TrigPolynomial => Potential::trig(spec.cos_coeffs, spec.sin_coeffs),
        }
    }
}

impl From<Potential> for PotentialSpec {
    fn from(p: Potential) -> Self {
        match p.kind {
            PotentialKind::TrigPolynomial => PotentialSpec {
                kind: p.kind,
                cos_coeffs: p.cos_coeffs,
                sin_coeffs: p.sin_coeffs,
            },
            kind => PotentialSpec {
                kind,
                cos_coeffs: Vec::new(),
                sin_coeffs: Vec::new(),
            },
        }
    }
}

impl Potential {
    /// `f(φ) = -cos φ`.
    pub fn pendulum() -> Self {
        Self::build(PotentialKind::Pendulum, vec![-1.0], Vec::new())
    }

    pub fn zero() -> Self {
        Self::build(PotentialKind::Zero, Vec::new(), Vec::new())
    }

    /// `f(φ) = Σ cos_coeffs[m-1] cos(mφ) + Σ sin_coeffs[m-1] sin(mφ)`.
    pub fn trig(cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Result<Self> {
        if cos_coeffs.iter().chain(&sin_coeffs).any(|c| !c.is_finite()) {
            return Err(Error::domain("trig potential coefficients must be finite"));
        }
        Ok(Self::build(PotentialKind::TrigPolynomial, cos_coeffs, sin_coeffs))
    }

    fn build(kind: PotentialKind, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Self {
        let mut p = Self {
            kind,
            cos_coeffs,
            sin_coeffs,
            f_min: 0.0,
            f_max: 0.0,
            argmin: 0.0,
            argmax: 0.0,
            maxima: Vec::new(),
        };
        p.locate_extrema();
        p
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos_coeffs
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin_coeffs
    }

    /// True when `f` is identically constant.
    pub fn is_constant(&self) -> bool {
        self.cos_coeffs.iter().chain(&self.sin_coeffs).all(|&c| c == 0.0)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        match self.kind {
            PotentialKind::Pendulum => -reduce(phi).cos(),
            PotentialKind::Zero => 0.0,
            PotentialKind::TrigPolynomial => self.series(phi, 0),
        }
    }

    pub fn eval_deriv(&self, phi: f64) -> f64 {
        match self.kind {
            PotentialKind::Pendulum => reduce(phi).sin(),
            PotentialKind::Zero => 0.0,
            PotentialKind::TrigPolynomial => self.series(phi, 1),
        }
    }

    pub fn eval_second_deriv(&self, phi: f64) -> f64 {
        match self.kind {
            PotentialKind::Pendulum => reduce(phi).cos(),
            PotentialKind::Zero => 0.0,
            PotentialKind::TrigPolynomial => self.series(phi, 2),
        }
    }

    // order-th derivative of the trig series
    fn series(&self, phi: f64, order: u32) -> f64 {
        let x = reduce(phi);
        let mut acc = 0.0;
        let n = self.cos_coeffs.len().max(self.sin_coeffs.len());
        for m in 1..=n {
            let a = self.cos_coeffs.get(m - 1).copied().unwrap_or(0.0);
            let b = self.sin_coeffs.get(m - 1).copied().unwrap_or(0.0);
            let mf = m as f64;
            let (s, c) = (mf * x).sin_cos();
            let scale = mf.powi(order as i32);
            acc += scale
                * match order % 4 {
                    0 => a * c + b * s,
                    1 => -a * s + b * c,
                    2 => -a * c - b * s,
                    _ => a * s - b * c,
                };
        }
        acc
    }

    /// `(min f, max f)` over the circle.
    pub fn extrema(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }

    pub fn min(&self) -> f64 {
        self.f_min
    }

    pub fn max(&self) -> f64 {
        self.f_max
    }

    /// An angle in `[0, 2π)` where `f` attains its minimum.
    pub fn argmin(&self) -> f64 {
        self.argmin
    }

    /// An angle in `[0, 2π)` where `f` attains its maximum.
    pub fn argmax(&self) -> f64 {
        self.argmax
    }

    /// All angles in `[0, 2π)` where the global maximum is attained
    /// (empty for a constant potential).
    pub fn global_maxima(&self) -> &[f64] {
        &self.maxima
    }

    fn locate_extrema(&mut self) {
        if self.is_constant() {
            self.f_min = 0.0;
            self.f_max = 0.0;
            return;
        }
        let h = TAU / SCAN_POINTS as f64;
        let vals: Vec<f64> = (0..SCAN_POINTS).map(|i| self.eval(i as f64 * h)).collect();
        let at = |i: isize| vals[i.rem_euclid(SCAN_POINTS as isize) as usize];

        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for i in 0..SCAN_POINTS as isize {
            let (l, m, r) = (at(i - 1), at(i), at(i + 1));
            if m >= l && m > r {
                maxima.push(self.golden(i as f64 * h, h, 1.0));
            }
            if m <= l && m < r {
                minima.push(self.golden(i as f64 * h, h, -1.0));
            }
        }
        let best = |pts: &[(f64, f64)], sign: f64| {
            pts.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |acc, (x, v)| {
                if sign * v > acc.1 {
                    (x, sign * v)
                } else {
                    acc
                }
            })
        };
        let (xmax, vmax) = best(&maxima, 1.0);
        let (xmin, vmin) = best(&minima, -1.0);
        self.f_max = vmax;
        self.argmax = xmax;
        self.f_min = -vmin;
        self.argmin = xmin;
        let mut global: Vec<f64> = maxima
            .iter()
            .filter(|(_, v)| (self.f_max - v).abs() <= 1e-9)
            .map(|(x, _)| *x)
            .collect();
        global.sort_by(|a, b| a.total_cmp(b));
        global.dedup_by(|a, b| circle_distance(*a, *b) < 1e-6);
        if global.len() > 1 && circle_distance(global[0], *global.last().unwrap()) < 1e-6 {
            global.pop();
        }
        self.maxima = global;
    }

    // golden-section search of sign*f on [x - h, x + h]; returns (x*, f(x*))
    fn golden(&self, x: f64, h: f64, sign: f64) -> (f64, f64) {
        let g = |t: f64| sign * self.eval(t);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (x - h, x + h);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        while b - a > REFINE_TOL {
            if gc > gd {
                b = d;
                d = c;
                gd = gc;
                c = b - ratio * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + ratio * (b - a);
                gd = g(d);
            }
        }
        // Newton on f' recovers the digits golden section cannot resolve
        let mut xm = 0.5 * (a + b);
        for _ in 0..4 {
            let d2 = self.eval_second_deriv(xm);
            if d2 == 0.0 {
                break;
            }
            let step = self.eval_deriv(xm) / d2;
            if !step.is_finite() || step.abs() > h {
                break;
            }
            xm -= step;
        }
        let xm = reduce(xm);
        (xm, self.eval(xm))
    }

    /// Angles in `[0, 2π)` where `f(φ) = c`, located by bisection to `1e-12`.
    pub fn level_crossings(&self, c: f64) -> Vec<f64> {
        if self.is_constant() || c <= self.f_min || c >= self.f_max {
            return Vec::new();
        }
        let h = TAU / SCAN_POINTS as f64;
        let g = |x: f64| self.eval(x) - c;
        let mut out = Vec::new();
        let mut prev = g(0.0);
        for i in 1..=SCAN_POINTS {
            let x = i as f64 * h;
            let cur = g(x);
            if prev == 0.0 {
                out.push(reduce(x - h));
            } else if prev * cur < 0.0 {
                let (mut a, mut b, mut ga) = (x - h, x, prev);
                while b - a > 1e-13 {
                    let m = 0.5 * (a + b);
                    let gm = g(m);
                    if gm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if ga * gm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        ga = gm;
                    }
                }
                out.push(reduce(0.5 * (a + b)));
            }
            prev = cur;
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn reduce(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Centred angle `φ - π` used for reflections about the hyperbolic point.
pub fn from_pi(phi: f64) -> f64 {
    reduce(phi) - PI
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_oracle(p: &Potential, sign: f64) -> f64 {
        // dense scan then golden section, independent of the cached path
        let n = 100_000;
        let (mut best_x, mut best_v) = (0.0, f64::NEG_INFINITY);
        for i in 0..n {
            let x = TAU * i as f64 / n as f64;
            let v = sign * p.eval(x);
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }
        let (mut a, mut b) = (best_x - TAU / n as f64, best_x + TAU / n as f64);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if sign * p.eval(m1) < sign * p.eval(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        p.eval(0.5 * (a + b))
    }

    #[test]
    fn pendulum_values() {
        let p = Potential::pendulum();
        assert_eq!(p.eval(0.0), -1.0);
        assert_eq!(p.eval(PI), 1.0);
        assert!((p.eval_deriv(PI / 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.eval_deriv(0.0), 0.0);
        let (lo, hi) = p.extrema();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert!((p.argmax() - PI).abs() < 1e-9);
        assert_eq!(p.global_maxima().len(), 1);
    }

    #[test]
    fn zero_potential() {
        let p = Potential::zero();
        for x in [0.0, 1.0, 5.0] {
            assert_eq!(p.eval(x), 0.0);
            assert_eq!(p.eval_deriv(x), 0.0);
        }
        assert_eq!(p.extrema(), (0.0, 0.0));
        assert!(p.global_maxima().is_empty());
    }

    #[test]
    fn mixed_trig_extrema() {
        let p = Potential::trig(vec![-1.0], vec![0.0, 0.3]).unwrap();
        let (lo, hi) = p.extrema();
        assert!((lo - golden_oracle(&p, -1.0)).abs() < 1e-10);
        assert!((hi - golden_oracle(&p, 1.0)).abs() < 1e-10);
    }

    #[test]
    fn trig_matches_pendulum_form() {
        let t = Potential::trig(vec![-1.0], vec![]).unwrap();
        let p = Potential::pendulum();
        for i in 0..50 {
            let x = 0.13 * i as f64;
            assert!((t.eval(x) - p.eval(x)).abs() < 1e-15);
            assert!((t.eval_second_deriv(x) - p.eval_second_deriv(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn two_global_maxima_detected() {
        let p = Potential::trig(vec![0.0, 1.0], vec![]).unwrap();
        assert_eq!(p.global_maxima().len(), 2);
    }

    #[test]
    fn crossings() {
        let p = Potential::pendulum();
        let xs = p.level_crossings(0.0);
        assert_eq!(xs.len(), 2);
        assert!((xs[0] - PI / 2.0).abs() < 1e-11);
        assert!((xs[1] - 1.5 * PI).abs() < 1e-11);
        assert!(p.level_crossings(2.0).is_empty());
    }

    #[test]
    fn json_schema() {
        let p: Potential = serde_json::from_str(r#"{"kind":"trig","cos":[-1.0],"sin":[0.0,0.3]}"#).unwrap();
        assert_eq!(p.kind(), PotentialKind::TrigPolynomial);
        let back = serde_json::to_string(&p).unwrap();
        assert_eq!(back, r#"{"kind":"trig","cos":[-1.0],"sin":[0.0,0.3]}"#);
        let pend: Potential = serde_json::from_str(r#"{"kind":"pendulum"}"#).unwrap();
        assert_eq!(pend.eval(0.0), -1.0);
        assert!(serde_json::from_str::<Potential>(r#"{"kind":"cubic"}"#).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn arb_potential() -> impl Strategy<Value = Potential> {
            (
                proptest::collection::vec(-2.0f64..2.0, 1..4),
                proptest::collection::vec(-2.0f64..2.0, 0..4),
            )
                .prop_map(|(a, b)| Potential::trig(a, b).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn periodic_and_bracketed(p in arb_potential(), x in 0.0f64..TAU) {
                prop_assert!((p.eval(0.0) - p.eval(TAU)).abs() <= 1e-14);
                prop_assert!((p.eval(x) - p.eval(x + TAU)).abs() <= 1e-12);
                prop_assert!((p.eval_deriv(x) - p.eval_deriv(x - TAU)).abs() <= 1e-12);
                let (lo, hi) = p.extrema();
                prop_assert!(p.eval(x) >= lo - 1e-12 && p.eval(x) <= hi + 1e-12);
            }

            #[test]
            fn derivative_matches_differences(p in arb_potential(), x in 0.0f64..TAU) {
                let h = 1e-5;
                let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
                prop_assert!((fd - p.eval_deriv(x)).abs() <= 1e-8);
                let fd2 = (p.eval_deriv(x + h) - p.eval_deriv(x - h)) / (2.0 * h);
                prop_assert!((fd2 - p.eval_second_deriv(x)).abs() <= 1e-7);
            }
        }
    }
}

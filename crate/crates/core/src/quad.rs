//! Adaptive Gauss–Kronrod quadrature and bracketed inversion of monotone maps.
//!
//! Every integral in the crate goes through [`integrate_pieces`]: the domain
//! is split at caller-supplied breakpoints, pieces with a detected
//! square-root endpoint singularity are mapped through `x = a + t²`, and the
//! piece with the largest error estimate is bisected until the global
//! tolerance is met.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let cfg = Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::domain(
                "quadrature tolerances must be positive and max_subdivisions >= 1",
            ));
        }
        Ok(())
    }

    /// Same budget, tighter tolerances.
    pub fn tightened(&self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol: rel_tol.min(self.rel_tol),
            abs_tol: abs_tol.min(self.abs_tol),
            max_subdivisions: self.max_subdivisions.max(4000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::domain("root tolerance must be positive"));
        }
        Ok(())
    }
}

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

// 21-point Kronrod extension of the 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.9956571630258081,
    0.9739065285171717,
    0.9301574913557082,
    0.8650633666889845,
    0.7808177265864169,
    0.6794095682990244,
    0.5627571346686047,
    0.4333953941292472,
    0.2943928627014602,
    0.14887433898163122,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874,
    0.032558162307964725,
    0.054755896574351995,
    0.07503967481091996,
    0.0931254545836976,
    0.10938715880229764,
    0.12349197626206584,
    0.13470921731147334,
    0.14277593857706009,
    0.14773910490133849,
    0.1494455540029169,
];
// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.06667134430868814,
    0.1494513491505806,
    0.21908636251598204,
    0.26926671930999635,
    0.29552422471475287,
];

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

/// One 21-point Gauss–Kronrod panel on `[a, b]`: `(value, error)`.
fn gk21<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(centre);
    let mut resk = fc * WGK[10];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let mut resg = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = g(centre - dx);
        let f2 = g(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = resk * half;
    let err = rescale_error((resk - resg) * half, resabs * half.abs(), resasc * half.abs());
    (value, err)
}

/// How a piece of the domain is parametrised before Gauss–Kronrod is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Chart {
    Identity,
    /// `x = a + t²`, `t ∈ [0, √(b - a)]`
    SqrtLeft {
        a: f64,
    },
    /// `x = b - t²`, `t ∈ [0, √(b - a)]`
    SqrtRight {
        b: f64,
    },
}

impl Chart {
    fn eval<F: Fn(f64) -> f64>(&self, g: &F, t: f64) -> f64 {
        match *self {
            Chart::Identity => g(t),
            Chart::SqrtLeft { a } => 2.0 * t * g(a + t * t),
            Chart::SqrtRight { b } => 2.0 * t * g(b - t * t),
        }
    }
}

#[derive(Debug)]
struct Panel {
    chart: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn looks_singular<F: Fn(f64) -> f64>(g: &F, end: f64, inward: f64) -> bool {
    let near = g(end + inward * 1e-8).abs();
    let far = g(end + inward * 1e-4).abs();
    !near.is_finite() || near > 10.0 * far.max(f64::MIN_POSITIVE)
}

/// Integrates `g` over the consecutive intervals of the sorted point list
/// `points` (at least two entries). Endpoints where `g` blows up like an
/// inverse square root are detected and treated by the `t²` substitution.
pub fn integrate_pieces<F: Fn(f64) -> f64>(g: F, points: &[f64], cfg: &QuadConfig) -> Result<Integral> {
    cfg.validate()?;
    if points.len() < 2 {
        return Err(Error::domain("need at least two integration points"));
    }
    let mut charts = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut push = |chart: Chart, a: f64, b: f64, charts: &mut Vec<Chart>| {
        charts.push(chart);
        let id = charts.len() - 1;
        let (value, error) = gk21(&|t| chart.eval(&g, t), a, b);
        heap.push(Panel {
            chart: id,
            a,
            b,
            value,
            error,
        });
    };
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let len = b - a;
        let left = looks_singular(&g, a, len);
        let right = looks_singular(&g, b, -len);
        match (left, right) {
            (false, false) => push(Chart::Identity, a, b, &mut charts),
            (true, false) => push(Chart::SqrtLeft { a }, 0.0, len.sqrt(), &mut charts),
            (false, true) => push(Chart::SqrtRight { b }, 0.0, len.sqrt(), &mut charts),
            (true, true) => {
                let m = 0.5 * (a + b);
                let half = (m - a).sqrt();
                push(Chart::SqrtLeft { a }, 0.0, half, &mut charts);
                push(Chart::SqrtRight { b }, 0.0, half, &mut charts);
            }
        }
    }

    let mut settled_value = 0.0;
    let mut settled_error = 0.0;
    let mut subdivisions = 0;
    loop {
        let (value, error) = heap
            .iter()
            .fold((settled_value, settled_error), |(v, e), p| (v + p.value, e + p.error));
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if !value.is_finite() {
            return Err(Error::accuracy("non-finite integrand", value, error));
        }
        if error <= target || heap.is_empty() {
            if error <= target * 10.0 {
                return Ok(Integral {
                    value,
                    error,
                    subdivisions,
                });
            }
            return Err(Error::accuracy("roundoff limit", value, error));
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::accuracy("subdivision budget exhausted", value, error));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 * worst.b.abs().max(1e-300) {
            settled_value += worst.value;
            settled_error += worst.error;
            continue;
        }
        let chart = charts[worst.chart];
        let f = |t: f64| chart.eval(&g, t);
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        heap.push(Panel {
            chart: worst.chart,
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            chart: worst.chart,
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
}

/// [`integrate_pieces`] for integrands that can fail. The first failure is
/// returned in place of the quadrature result.
pub fn try_integrate_pieces<F: Fn(f64) -> Result<f64>>(g: F, points: &[f64], cfg: &QuadConfig) -> Result<Integral> {
    let failure = RefCell::new(None);
    let out = integrate_pieces(
        |x| match g(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        points,
        cfg,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

/// `∫_a^b g(x) dx`.
pub fn integrate<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(g, b, a, cfg).map(|v| -v);
    }
    integrate_pieces(g, &[a, b], cfg).map(|i| i.value)
}

/// `∫_0^{2π} g(φ) dφ`.
pub fn integrate_circle<F: Fn(f64) -> f64>(g: F, cfg: &QuadConfig) -> Result<f64> {
    integrate_circle_with_breaks(g, &[], cfg)
}

/// `∫_0^{2π} g(φ) dφ`, splitting additionally at `breaks` (angles are
/// reduced into `[0, 2π)`).
pub fn integrate_circle_with_breaks<F: Fn(f64) -> f64>(g: F, breaks: &[f64], cfg: &QuadConfig) -> Result<f64> {
    let points = circle_points(breaks);
    integrate_pieces(g, &points, cfg).map(|i| i.value)
}

/// Sorted breakpoints on `[0, 2π]` including both ends.
pub fn circle_points(breaks: &[f64]) -> Vec<f64> {
    let mut points = vec![0.0, TAU];
    points.extend(
        breaks
            .iter()
            .map(|&b| crate::potential::reduce(b))
            .filter(|&b| b > 1e-13 && b < TAU - 1e-13),
    );
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    points
}

/// Solves `F(x) = target` for strictly increasing `F` on `[lo, hi]` with a
/// Brent iteration (inverse quadratic / secant steps safeguarded by bisection).
pub fn invert_monotone<F: FnMut(f64) -> f64>(
    mut f: F,
    target: f64,
    bracket: (f64, f64),
    cfg: &RootConfig,
) -> Result<f64> {
    try_invert_monotone(|x| Ok(f(x)), target, bracket, cfg)
}

/// [`invert_monotone`] for maps that can themselves fail.
pub fn try_invert_monotone<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    target: f64,
    bracket: (f64, f64),
    cfg: &RootConfig,
) -> Result<f64> {
    cfg.validate()?;
    let (lo, hi) = bracket;
    let tol_f = cfg.tol * target.abs().max(1.0);
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a)? - target;
    let mut fb = f(b)? - target;
    if fa.abs() <= tol_f {
        return Ok(a);
    }
    if fb.abs() <= tol_f {
        return Ok(b);
    }
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::Bracket { lo, hi, target });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol_x = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol_f {
            return Ok(b);
        }
        if xm.abs() <= tol_x {
            // bracket collapsed to neighbouring floats
            return Ok(b);
        }
        if e.abs() >= tol_x && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol_x * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol_x { d } else { tol_x.copysign(xm) };
        fb = f(b)? - target;
    }
    Err(Error::accuracy("monotone inversion iteration budget", b, fb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn midpoint(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| g(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn gauss_kronrod_exactness() {
        // Kronrod part integrates x^30 exactly, Gauss part x^18
        let (v, _) = gk21(&|x: f64| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-15);
        let (v, _) = gk21(&|x: f64| x.powi(18) + x.powi(3), 0.0, 1.0);
        assert!((v - (1.0 / 19.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn circle_examples() {
        let cfg = QuadConfig::default();
        assert!((integrate_circle(|_| 1.0, &cfg).unwrap() - TAU).abs() < 1e-13);
        assert!((integrate_circle(|x| x.cos().powi(2), &cfg).unwrap() - PI).abs() < 1e-12);
        let g = |x: f64| 1.0 / (2.0 * (1.5 + x.cos())).sqrt();
        let oracle = midpoint(g, 0.0, TAU, 1_000_000);
        assert!((integrate_circle(g, &cfg).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let cfg = QuadConfig::default();
        // ∫_0^1 x^{-1/2} = 2, ∫_0^1 (1-x)^{-1/2} = 2
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = integrate(|x| 1.0 / (1.0 - x).sqrt(), 0.0, 1.0, &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        // ∫_{-1}^{1} dx / sqrt(1 - x^2) = π
        let v = integrate(|x: f64| 1.0 / (1.0 - x * x).sqrt(), -1.0, 1.0, &cfg).unwrap();
        assert!((v - PI).abs() < 1e-10);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let cfg = QuadConfig::default();
        assert_eq!(integrate(|x| x, 1.0, 1.0, &cfg).unwrap(), 0.0);
        let v = integrate(|x| x, 1.0, 0.0, &cfg).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = QuadConfig::new(1e-14, 1e-300, 2).unwrap();
        let r = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &cfg);
        match r {
            Err(Error::Accuracy { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        assert!(QuadConfig::new(0.0, 1e-12, 10).is_err());
        assert!(QuadConfig::new(1e-10, 1e-12, 0).is_err());
    }

    #[test]
    fn inversion_examples() {
        let cfg = RootConfig::default();
        let x = invert_monotone(|x| x, 0.5, (0.0, 1.0), &cfg).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
        let x = invert_monotone(|x| x * x * x, 8.0, (0.0, 3.0), &cfg).unwrap();
        assert!((x - 2.0).abs() < 1e-12);
        assert!(matches!(
            invert_monotone(|x| x, 5.0, (0.0, 1.0), &cfg),
            Err(Error::Bracket { .. })
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inversion_residual_and_bracket(a in 0.1f64..3.0, b in -2.0f64..2.0, t in 0.0f64..1.0) {
                let f = |x: f64| a * x + b + 0.3 * x.powi(3);
                let (lo, hi) = (-2.0, 2.0);
                let target = f(lo) + t * (f(hi) - f(lo));
                let cfg = RootConfig::default();
                let x = invert_monotone(f, target, (lo, hi), &cfg).unwrap();
                prop_assert!(x >= lo && x <= hi);
                prop_assert!((f(x) - target).abs() <= cfg.tol * target.abs().max(1.0));
            }

            #[test]
            fn smooth_periodic_matches_midpoint(a in 1.2f64..4.0, m in 1u32..4) {
                let g = |x: f64| 1.0 / (a + (m as f64 * x).cos());
                let cfg = QuadConfig::default();
                let exact = TAU / (a * a - 1.0).sqrt();
                let v = integrate_circle(g, &cfg).unwrap();
                prop_assert!((v - exact).abs() <= 1e-9 * exact);
            }
        }
    }
}

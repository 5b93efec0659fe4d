//! Cached antiderivatives `G(x) = ∫_0^x g` on `[0, 2π]`.
//!
//! `G` is stored at adaptively chosen nodes together with the exact
//! derivative `g`, and evaluated by cubic Hermite interpolation. Panels are
//! split until both the panel quadrature and the Hermite midpoint value agree
//! with a two-panel refinement to within the tolerance.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

const INITIAL_PANELS: usize = 128;
const MAX_DEPTH: u32 = 48;

// 10-point Gauss–Legendre on [-1, 1], nodes and weights for the positive half
const GL_X: [f64; 5] = [
    0.14887433898163122,
    0.4333953941292472,
    0.6794095682990244,
    0.8650633666889845,
    0.9739065285171717,
];
const GL_W: [f64; 5] = [
    0.29552422471475287,
    0.26926671930999635,
    0.21908636251598204,
    0.1494513491505806,
    0.06667134430868814,
];

fn gauss10<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += GL_W[i] * (g(c - h * GL_X[i]) + g(c + h * GL_X[i]));
    }
    s * h
}

fn hermite(h: f64, g0: f64, g1: f64, d0: f64, d1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * g0 + h10 * h * d0 + h01 * g1 + h11 * h * d1
}

#[derive(Debug, Clone)]
pub struct Antiderivative {
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    mean: f64,
}

impl Antiderivative {
    /// Builds `G` for the integrand `g` with absolute tolerance `tol`,
    /// forcing nodes at `breaks`.
    pub fn build<F: Fn(f64) -> f64>(g: F, breaks: &[f64], tol: f64) -> Result<Self> {
        let mut seeds: Vec<f64> = (0..=INITIAL_PANELS)
            .map(|i| TAU * i as f64 / INITIAL_PANELS as f64)
            .collect();
        seeds.extend(crate::quad::circle_points(breaks));
        seeds.sort_by(|a, b| a.total_cmp(b));
        seeds.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let mut nodes = vec![seeds[0]];
        let mut values = vec![0.0];
        let mut derivs = vec![g(seeds[0])];
        let panel_tol = tol / seeds.len() as f64;
        for w in seeds.windows(2) {
            let (a, b) = (w[0], w[1]);
            let ga = *derivs.last().unwrap();
            let gb = g(b);
            refine(&g, a, b, ga, gb, panel_tol, 0, &mut nodes, &mut values, &mut derivs)?;
        }
        let mut mean = 0.0;
        for i in 0..nodes.len() - 1 {
            let h = nodes[i + 1] - nodes[i];
            mean += h * (values[i] + values[i + 1]) / 2.0 + h * h * (derivs[i] - derivs[i + 1]) / 12.0;
        }
        Ok(Self {
            nodes,
            values,
            derivs,
            mean: mean / TAU,
        })
    }

    /// `G(x)` for `x ∈ [0, 2π]`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, TAU);
        let i = match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(i) => return self.values[i],
            Err(i) => i.clamp(1, self.nodes.len() - 1) - 1,
        };
        let h = self.nodes[i + 1] - self.nodes[i];
        let s = (x - self.nodes[i]) / h;
        hermite(
            h,
            self.values[i],
            self.values[i + 1],
            self.derivs[i],
            self.derivs[i + 1],
            s,
        )
    }

    /// `G(2π)`.
    pub fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `(1/2π) ∫_0^{2π} G`, exact for the interpolant.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    b: f64,
    ga: f64,
    gb: f64,
    tol: f64,
    depth: u32,
    nodes: &mut Vec<f64>,
    values: &mut Vec<f64>,
    derivs: &mut Vec<f64>,
) -> Result<()> {
    let m = 0.5 * (a + b);
    let whole = gauss10(g, a, b);
    let left = gauss10(g, a, m);
    let right = gauss10(g, m, b);
    let gm = g(m);
    let h = b - a;
    let g0 = *values.last().unwrap();
    let interp_mid = hermite(h, g0, g0 + whole, ga, gb, 0.5);
    let quad_err = (whole - left - right).abs();
    let interp_err = (interp_mid - (g0 + left)).abs();
    if !(whole.is_finite() && left.is_finite() && right.is_finite()) {
        return Err(Error::accuracy("antiderivative panel", whole, f64::NAN));
    }
    let tol = tol.max(16.0 * f64::EPSILON * (g0.abs() + whole.abs()));
    if (quad_err <= tol && interp_err <= tol) || depth >= MAX_DEPTH {
        if depth >= MAX_DEPTH && (quad_err > 1e3 * tol || interp_err > 1e3 * tol) {
            return Err(Error::accuracy(
                "antiderivative refinement depth",
                whole,
                quad_err.max(interp_err),
            ));
        }
        nodes.push(m);
        values.push(g0 + left);
        derivs.push(gm);
        nodes.push(b);
        values.push(g0 + left + right);
        derivs.push(gb);
        return Ok(());
    }
    refine(g, a, m, ga, gm, tol * 0.5, depth + 1, nodes, values, derivs)?;
    refine(g, m, b, gm, gb, tol * 0.5, depth + 1, nodes, values, derivs)
}

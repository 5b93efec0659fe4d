//! Torus flow, its lifts, the Hamiltonian and effective flows, and the gap
//! between the lifted and the true dynamics.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::weakkam::{ActionContext, Order};

/// Local RK4 error allowed per unit time.
pub const TORUS_TOL: f64 = 1e-8;
/// Largest internal Verlet step.
pub const VERLET_MAX_STEP: f64 = 1e-4;
const MAX_HALVINGS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub phi_torus: f64,
    #[serde(rename = "I_lift")]
    pub i_lift: f64,
    pub phi_tilde: f64,
    #[serde(rename = "I_ham")]
    pub i_ham: f64,
    pub phi_ham: f64,
    pub phi_eff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub d_k: Vec<f64>,
    /// Right side of the Gronwall estimate at each sample.
    pub bound: Vec<f64>,
    pub lambda_h: f64,
}

/// Samples `(t_i, φ(t_i))` of a scalar angle flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Samples of the Hamiltonian flow.
#[derive(Debug, Clone, PartialEq)]
pub struct HamOrbit {
    pub times: Vec<f64>,
    pub action: Vec<f64>,
    pub phi: Vec<f64>,
}

fn sample_times(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    let n = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).min(t_end)).collect();
    if n > 0 && times[n] == times[n - 1] {
        times.pop();
    }
    Ok(times)
}

fn rk4_step<F: Fn(f64) -> f64>(v: &F, x: f64, h: f64) -> f64 {
    let k1 = v(x);
    let k2 = v(x + 0.5 * h * k1);
    let k3 = v(x + 0.5 * h * k2);
    let k4 = v(x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

// advances x over [0, h] with step halving until a full step and two half
// steps agree to TORUS_TOL per unit time
fn rk4_adaptive<F: Fn(f64) -> f64>(v: &F, x: f64, h: f64, depth: u32) -> Result<f64> {
    let full = rk4_step(v, x, h);
    let half = rk4_step(v, rk4_step(v, x, 0.5 * h), 0.5 * h);
    let err = (full - half).abs();
    if err <= TORUS_TOL * h {
        return Ok(half);
    }
    if depth >= MAX_HALVINGS {
        return Err(Error::accuracy("torus flow step", half, err));
    }
    let mid = rk4_adaptive(v, x, 0.5 * h, depth + 1)?;
    rk4_adaptive(v, mid, 0.5 * h, depth + 1)
}

/// Integrates a scalar autonomous flow `ẋ = v(x)` with checked RK4 steps.
pub fn integrate_angle<F: Fn(f64) -> f64>(v: F, x0: f64, t_end: f64, dt: f64) -> Result<Orbit> {
    let times = sample_times(t_end, dt)?;
    let mut phi = Vec::with_capacity(times.len());
    phi.push(x0);
    let mut x = x0;
    for w in times.windows(2) {
        x = rk4_adaptive(&v, x, w[1] - w[0], 0)?;
        phi.push(x);
    }
    Ok(Orbit { times, phi })
}

/// `φ̇ = ∂H/∂I(Ĩ + u_φ, φ)`, the flow on the torus carried by the graph of
/// `Ĩ + u_φ`. Angles are unwrapped.
pub fn torus_flow(ctx: &ActionContext, phi0: f64, t_end: f64, dt: f64) -> Result<Orbit> {
    if ctx.order() == Order::Limit {
        return Err(Error::domain("torus flow needs finite k"));
    }
    integrate_angle(|x| ctx.momentum(x), phi0, t_end, dt)
}

/// `I^t = Ĩ + u_φ(Ĩ, φ^t)`.
pub fn lift_actions(ctx: &ActionContext, orbit: &Orbit) -> Vec<f64> {
    orbit.phi.iter().map(|&x| ctx.momentum(x)).collect()
}

/// `φ̃^t = φ^t + ∂u/∂I(Ĩ, φ^t)`.
pub fn lift_angles(ctx: &ActionContext, orbit: &Orbit) -> Result<Vec<f64>> {
    orbit.phi.iter().map(|&x| ctx.angle_transform(x)).collect()
}

/// Störmer–Verlet integration of `İ = -f'(φ)`, `φ̇ = I`.
pub fn hamiltonian_flow(potential: &Potential, i0: f64, phi0: f64, t_end: f64, dt: f64) -> Result<HamOrbit> {
    let times = sample_times(t_end, dt)?;
    let mut action = Vec::with_capacity(times.len());
    let mut phi = Vec::with_capacity(times.len());
    let (mut p, mut q) = (i0, phi0);
    action.push(p);
    phi.push(q);
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = (span / VERLET_MAX_STEP).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            p -= 0.5 * h * potential.eval_deriv(q);
            q += h * p;
            p -= 0.5 * h * potential.eval_deriv(q);
        }
        action.push(p);
        phi.push(q);
    }
    Ok(HamOrbit { times, action, phi })
}

/// Straight-line flow of `H̄_k` in the lifted angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveFlow {
    pub slope: f64,
}

impl EffectiveFlow {
    /// `dH̄_k/dĨ` by a central difference with step `1e-6·max(1, Ĩ)`.
    pub fn new(ctx: &ActionContext) -> Result<Self> {
        let a = ctx.signed_action().value();
        let h = 1e-6 * a.abs().max(1.0);
        let at = |x: f64| {
            ActionContext::with_root(ctx.order(), x, ctx.potential(), *ctx.quad_cfg(), *ctx.root_cfg())?.h_bar_k()
        };
        Ok(Self {
            slope: (at(a + h)? - at(a - h)?) / (2.0 * h),
        })
    }

    pub fn at(&self, phi_tilde0: f64, t: f64) -> f64 {
        phi_tilde0 + t * self.slope
    }
}

/// `φ̃0 + t·dH̄_k/dĨ`.
pub fn effective_flow(ctx: &ActionContext, phi_tilde0: f64, t: f64) -> Result<f64> {
    Ok(EffectiveFlow::new(ctx)?.at(phi_tilde0, t))
}

/// All flows of one initial angle sampled on a common grid.
pub fn flow_bundle(ctx: &ActionContext, phi0: f64, t_end: f64, dt: f64) -> Result<Vec<FlowSample>> {
    let torus = torus_flow(ctx, phi0, t_end, dt)?;
    let lifts = lift_actions(ctx, &torus);
    let tilde = lift_angles(ctx, &torus)?;
    let ham = hamiltonian_flow(ctx.potential(), lifts[0], phi0, t_end, dt)?;
    let eff = EffectiveFlow::new(ctx)?;
    Ok(torus
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| FlowSample {
            t,
            phi_torus: torus.phi[i],
            i_lift: lifts[i],
            phi_tilde: tilde[i],
            i_ham: ham.action[i],
            phi_ham: ham.phi[i],
            phi_eff: eff.at(tilde[0], t),
        })
        .collect())
}

/// `max(1, sup|f''|)` over the angular bounding box of the given angles,
/// with 10% headroom.
pub fn lipschitz_bound(potential: &Potential, angles: impl IntoIterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in angles {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !(lo <= hi) {
        return 1.1;
    }
    if hi - lo > TAU {
        hi = lo + TAU;
    }
    let n = 2048;
    let sup = (0..=n)
        .map(|i| potential.eval_second_deriv(lo + (hi - lo) * i as f64 / n as f64).abs())
        .fold(0.0, f64::max);
    // a trig polynomial of degree m has |f'''| ≤ m·sup|f''| on the circle, so
    // the sampled supremum misses at most the grid spacing times that slope
    let degree = potential.cos_coeffs().len().max(potential.sin_coeffs().len()).max(1) as f64;
    let slack = degree * (hi - lo) / n as f64 * sup;
    1.1 * (sup + slack).max(1.0)
}

/// `|dI/dt + f'(φ)| = |f'| / (1 + kγ²)` along the lift.
fn defect(ctx: &ActionContext, phi: f64) -> f64 {
    let p = ctx.level().point(phi);
    (ctx.potential().eval_deriv(phi) / (1.0 + p.omega)).abs()
}

/// Gap between the lifted orbit and the Hamiltonian orbit sharing its
/// initial condition, with the Gronwall estimate at every sample.
pub fn gap_from_bundle(ctx: &ActionContext, samples: &[FlowSample]) -> GapSeries {
    let lambda_h = lipschitz_bound(ctx.potential(), samples.iter().flat_map(|s| [s.phi_torus, s.phi_ham]));
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let d_k = samples
        .iter()
        .map(|s| (s.i_lift - s.i_ham).hypot(s.phi_torus - s.phi_ham))
        .collect();
    // ∫_0^t |defect| e^{-λs} ds by Simpson on each sample interval, with the
    // midpoint angle from the cubic Hermite interpolant of the orbit
    let mut bound = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    bound.push(0.0);
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let h = b.t - a.t;
        let mid = 0.5 * (a.phi_torus + b.phi_torus) + h / 8.0 * (a.i_lift - b.i_lift);
        let g = |s: f64, x: f64| defect(ctx, x) * (-lambda_h * s).exp();
        acc += h / 6.0 * (g(a.t, a.phi_torus) + 4.0 * g(0.5 * (a.t + b.t), mid) + g(b.t, b.phi_torus));
        bound.push((lambda_h * b.t).exp() * acc);
    }
    GapSeries {
        times,
        d_k,
        bound,
        lambda_h,
    }
}

pub fn gap_series(ctx: &ActionContext, phi0: f64, t_end: f64, dt: f64) -> Result<GapSeries> {
    Ok(gap_from_bundle(ctx, &flow_bundle(ctx, phi0, t_end, dt)?))
}

/// Time step used for each orbit of [`sigma_avg_gap`].
pub const AVG_GAP_DT: f64 = 1e-2;

/// `∫ d_k(t, Ĩ, φ) σ_k(Ĩ, φ) dφ` from `n_init` equally spaced initial angles
/// (periodic trapezoid rule). Orbits run in parallel.
pub fn sigma_avg_gap(ctx: &ActionContext, t: f64, n_init: usize) -> Result<f64> {
    if n_init == 0 {
        return Err(Error::domain("n_init must be positive"));
    }
    let dt = AVG_GAP_DT.min(t.max(f64::MIN_POSITIVE));
    let terms: Vec<f64> = (0..n_init)
        .into_par_iter()
        .map(|j| {
            let phi0 = TAU * j as f64 / n_init as f64;
            let torus = torus_flow(ctx, phi0, t, dt)?;
            let i0 = ctx.momentum(phi0);
            let ham = hamiltonian_flow(ctx.potential(), i0, phi0, t, dt)?;
            let last = torus.phi.len() - 1;
            let d = (ctx.momentum(torus.phi[last]) - ham.action[last]).hypot(torus.phi[last] - ham.phi[last]);
            Ok(d * ctx.sigma(phi0)?)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<f64>() * TAU / n_init as f64)
}

/// Right side of the σ-averaged estimate, `(e^{λt} - 1)(1 + Ĉ)/(λ√k)`.
pub fn sigma_avg_bound(lambda_h: f64, t: f64, c_hat: f64, k: u64) -> f64 {
    (lambda_h * t).exp_m1() * (1.0 + c_hat) / (lambda_h * (k as f64).sqrt())
}

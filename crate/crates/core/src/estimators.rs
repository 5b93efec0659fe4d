//! Mean-square defects `E₁(k)`, `E₂(k)`, the moment families behind them and
//! their `k → ∞` constants.
//!
//! Writing `v = 1/(1 + kγ_k²)`, the two defects reduce to
//!
//! * `E₂(k) = ∫ |f'|² v² σ_k dφ`,
//! * `E₁(k) = 4π ∫ Var_σ(v) / A_{½,1}(k, c) dc`,
//!
//! the second after changing variables from `Ĩ` to `c = c_k(Ĩ)`. Both are
//! also available in their direct forms, with finite differences in place of
//! the analytic derivatives, for cross-checking.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad::{integrate_circle_with_breaks, try_integrate_pieces, QuadConfig, RootConfig};
use crate::weakkam::{action_of_energy, energy_of_action, ActionContext, LevelCurve, Order};

// Integrals whose value may legitimately be many orders of magnitude below
// the configured absolute tolerance are solved to relative accuracy only.
fn relative_only(cfg: &QuadConfig) -> QuadConfig {
    QuadConfig {
        abs_tol: f64::MIN_POSITIVE,
        ..*cfg
    }
}

// Outer integrals over energy or action: their integrands are themselves
// quadratures, accurate to the inner relative tolerance at best.
fn outer_cfg(cfg: &QuadConfig) -> QuadConfig {
    QuadConfig {
        rel_tol: (10.0 * cfg.rel_tol).max(1e-9),
        abs_tol: f64::MIN_POSITIVE,
        max_subdivisions: cfg.max_subdivisions.max(4000),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub alpha: f64,
    pub beta: f64,
    pub k: u64,
    pub c: f64,
}

/// `A_{α,β}(k, c) = ∫ γ_k^{2α} (1/k + γ_k²)^{-β} dφ`.
pub fn moment_finite(spec: MomentSpec, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if !(spec.beta >= 0.0) {
        return Err(Error::domain(format!("beta must be nonnegative, got {}", spec.beta)));
    }
    let order = Order::finite(spec.k)?;
    Ok(LevelCurve::new(order, spec.c, potential)?
        .ln_moment(spec.alpha, spec.beta, cfg)?
        .exp())
}

/// `a_δ(c) = ∫ [2(c - f)]^{-δ} dφ` for `c > max f`.
pub fn moment_limit(delta: f64, c: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if !(c > potential.max()) {
        return Err(Error::domain(format!(
            "a_delta needs c > max f = {}, got {c}",
            potential.max()
        )));
    }
    integrate_circle_with_breaks(
        |x| (2.0 * (c - potential.eval(x))).powf(-delta),
        &[potential.argmin(), potential.argmax()],
        cfg,
    )
}

/// `E₂(k) = (1/k²)(1/A_{-½,0}) ∫ |f'|² / (γ_k (1/k + γ_k²)²) dφ`.
pub fn e2(ctx: &ActionContext) -> Result<f64> {
    let ln_a0 = ctx.ln_inverse_gamma_integral()?;
    let level = ctx.level();
    let pot = ctx.potential();
    level.integrate(
        |x| {
            let p = level.point(x);
            let v = 1.0 / (1.0 + p.omega);
            let fp = pot.eval_deriv(x);
            fp * fp * v * v * (-p.ln_gamma - ln_a0).exp()
        },
        &relative_only(ctx.quad_cfg()),
    )
}

/// Step of the five-point stencil in [`e2_direct`].
pub const E2_STENCIL_STEP: f64 = 1e-3;

/// `E₂(k) = ∫ |∂_φ(γ_k²/2 + f)|² σ_k dφ` with the angular derivative taken
/// by a five-point central difference.
pub fn e2_direct(ctx: &ActionContext) -> Result<f64> {
    let level = ctx.level();
    let pot = ctx.potential();
    let g = |x: f64| {
        let gamma = level.gamma(x);
        0.5 * gamma * gamma + pot.eval(x)
    };
    let h = E2_STENCIL_STEP;
    ctx.sigma_pairing(|x| {
        let d = (g(x - 2.0 * h) - 8.0 * g(x - h) + 8.0 * g(x + h) - g(x + 2.0 * h)) / (12.0 * h);
        d * d
    })
}

/// `Var_σ(v) / A_{½,1}(k, c)` with `v = 1/(1 + kγ_k²)`: the `c`-domain
/// density of `E₁`, up to the factor `4π`.
pub fn e1_density(k: u64, c: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    let level = LevelCurve::new(Order::finite(k)?, c, potential)?;
    let ln_a0 = level.ln_inverse_gamma_integral(cfg)?;
    let weight = |x: f64| {
        let p = level.point(x);
        (1.0 / (1.0 + p.omega), (-p.ln_gamma - ln_a0).exp())
    };
    let mean = level.integrate(
        |x| {
            let (v, s) = weight(x);
            v * s
        },
        cfg,
    )?;
    let var = level.integrate(
        |x| {
            let (v, s) = weight(x);
            (v - mean) * (v - mean) * s
        },
        &relative_only(cfg),
    )?;
    let ln_a_half = level.ln_moment(0.5, 1.0, cfg)?;
    Ok(var * (-ln_a_half).exp())
}

/// `E₁` over `|Ĩ| ≤ R` and its split at `Ĩ(max f + r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct E1Parts {
    /// The full defect over `[0, R]`.
    pub full: f64,
    /// The lower-bound segment `[Ĩ(max f + r), R]`.
    pub restricted: f64,
    /// `[0, Ĩ(max f + r)]`.
    pub complementary: f64,
}

/// Energies `c_k(R)` and `c_k(Ĩ(max f + r))` bounding the restricted segment.
fn restricted_energies(k: u64, big_r: f64, r: f64, potential: &Potential, cfg: &QuadConfig) -> Result<(f64, f64, f64)> {
    if !(big_r > 0.0) || !(r > 0.0) {
        return Err(Error::domain("R and r must be positive"));
    }
    let root = RootConfig::default();
    let c_big = energy_of_action(Order::Limit, big_r, potential, cfg, &root)?;
    let threshold = potential.max() + r;
    if !(c_big > threshold) {
        return Err(Error::domain(format!(
            "need c(R) > max f + r, got c(R) = {c_big} and max f + r = {threshold}"
        )));
    }
    let i_low = action_of_energy(Order::Limit, threshold, potential, cfg)?;
    let order = Order::finite(k)?;
    let c_hi = energy_of_action(order, big_r, potential, cfg, &root)?;
    let c_mid = energy_of_action(order, i_low, potential, cfg, &root)?;
    Ok((c_mid, c_hi, i_low))
}

/// Lower end of the `c`-domain integration: below it `Ĩ_k(c)` and the
/// integrand are smaller than `e^{-3·DEPTH}` relative to their scale.
const E1_DEPTH: f64 = 15.0;

/// Offsets `s` of the breakpoints `max f + s/k` resolving the boundary layer
/// of the `E₁` density around the separatrix energy. The density peaks a few
/// units of `1/k` below `max f`.
const LAYER_OFFSETS: [f64; 23] = [
    -60.0, -40.0, -30.0, -20.0, -15.0, -10.0, -8.0, -6.0, -5.0, -4.0, -3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0,
    5.0, 10.0, 20.0, 50.0,
];

fn layer_energies(k: u64, potential: &Potential) -> Vec<f64> {
    LAYER_OFFSETS.iter().map(|s| potential.max() + s / k as f64).collect()
}

/// `E₁(k)` in the `c`-domain, split at `c_k(Ĩ(max f + r))`.
pub fn e1(k: u64, big_r: f64, r: f64, potential: &Potential, cfg: &QuadConfig) -> Result<E1Parts> {
    let (c_mid, c_hi, _) = restricted_energies(k, big_r, r, potential, cfg)?;
    if potential.is_constant() {
        return Ok(E1Parts {
            full: 0.0,
            restricted: 0.0,
            complementary: 0.0,
        });
    }
    let kf = k as f64;
    let c_lo = potential.min() - E1_DEPTH / kf;
    let density = |c: f64| e1_density(k, c, potential, cfg);
    let outer = outer_cfg(cfg);
    let mut lower = layer_energies(k, potential);
    lower.extend([c_lo, potential.min(), c_mid]);
    lower.retain(|&c| c >= c_lo && c <= c_mid);
    lower.sort_by(|a, b| a.total_cmp(b));
    lower.dedup();
    let complementary = 4.0 * PI * try_integrate_pieces(density, &lower, &outer)?.value;
    let mut upper = layer_energies(k, potential);
    upper.extend([c_mid, c_hi]);
    upper.retain(|&c| c >= c_mid && c <= c_hi);
    upper.sort_by(|a, b| a.total_cmp(b));
    upper.dedup();
    let restricted = 4.0 * PI * try_integrate_pieces(density, &upper, &outer)?.value;
    Ok(E1Parts {
        full: complementary + restricted,
        restricted,
        complementary,
    })
}

/// Relative step of the central differences in `Ĩ`.
pub const ACTION_FD_STEP: f64 = 1e-5;
/// Relative accuracy requested from both quadratures of [`e1_direct`].
pub const DIRECT_REL_TOL: f64 = 1e-6;

/// `E₁(k) = 2 ∫_0^R ∫ |∂_Ĩ[γ_k²/2 - H̄_k(Ĩ)]|² σ_k dφ dĨ`, with `∂_Ĩ` taken
/// by central differences of the solved level curves.
pub fn e1_direct(k: u64, big_r: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if !(big_r > 0.0) {
        return Err(Error::domain("R must be positive"));
    }
    if potential.is_constant() {
        return Ok(0.0);
    }
    let order = Order::finite(k)?;
    let inner_cfg = cfg.tightened(1e-13, 1e-15);
    let root = RootConfig {
        tol: 1e-15,
        max_iter: 400,
    };
    let ctx_at = |a: f64| ActionContext::with_root(order, a, potential, inner_cfg, root);
    let integrand = |a: f64| -> Result<f64> {
        let h = (ACTION_FD_STEP * a.max(1.0)).min(0.25 * a);
        let centre = ctx_at(a)?;
        let up = ctx_at(a + h)?;
        let dn = ctx_at(a - h)?;
        let dh = up.h_bar_k()? - dn.h_bar_k()?;
        let ln_a0 = centre.ln_inverse_gamma_integral()?;
        let level = centre.level();
        // differencing leaves relative noise up to about 1e-7 in the integrand
        // and an absolute floor near 1e-22
        let angular = QuadConfig {
            rel_tol: cfg.rel_tol.max(DIRECT_REL_TOL),
            abs_tol: 1e-18,
            ..*cfg
        };
        level.integrate(
            |x| {
                let (gu, gd) = (up.gamma(x), dn.gamma(x));
                let d = (0.5 * (gu - gd) * (gu + gd) - dh) / (2.0 * h);
                d * d * (-level.ln_gamma(x) - ln_a0).exp()
            },
            &angular,
        )
    };
    // same lower cut-off as the c-domain path
    let a_lo = action_of_energy(order, potential.min() - E1_DEPTH / k as f64, potential, cfg)?;
    let mut points = vec![a_lo, big_r];
    for c in layer_energies(k, potential) {
        let a = action_of_energy(order, c, potential, cfg)?;
        if a > a_lo && a < big_r {
            points.push(a);
        }
    }
    points.sort_by(|a, b| a.total_cmp(b));
    let outer = QuadConfig {
        rel_tol: cfg.rel_tol.max(DIRECT_REL_TOL),
        ..outer_cfg(cfg)
    };
    let value = try_integrate_pieces(integrand, &points, &outer)?.value;
    Ok(2.0 * value)
}

/// `c_R = 4π ∫_{max f + r}^{c(R)} (a_{5/2} a_{1/2} - a_{3/2}²) / a_{1/2}³ dc`,
/// evaluated as `4π ∫ Var_ρ(q) / a_{1/2} dc` with `q = 1/(2(c - f))` and
/// `ρ ∝ q^{1/2}`.
pub fn constant_c_r(r: f64, big_r: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if potential.is_constant() {
        return Err(Error::Degenerate("c_R vanishes for a constant potential".into()));
    }
    if !(big_r > 0.0) || !(r > 0.0) {
        return Err(Error::domain("R and r must be positive"));
    }
    let c_big = energy_of_action(Order::Limit, big_r, potential, cfg, &RootConfig::default())?;
    let lo = potential.max() + r;
    if !(c_big > lo) {
        return Err(Error::domain(format!("need c(R) > max f + r, got c(R) = {c_big}")));
    }
    let breaks = [potential.argmin(), potential.argmax()];
    let density = |c: f64| -> Result<f64> {
        let a_half = moment_limit(0.5, c, potential, cfg)?;
        let q = |x: f64| 1.0 / (2.0 * (c - potential.eval(x)));
        let rho = |x: f64| q(x).sqrt() / a_half;
        let mean = integrate_circle_with_breaks(|x| q(x) * rho(x), &breaks, cfg)?;
        let var =
            integrate_circle_with_breaks(|x| (q(x) - mean) * (q(x) - mean) * rho(x), &breaks, &relative_only(cfg))?;
        Ok(var / a_half)
    };
    let outer = relative_only(&cfg.tightened(1e-10, cfg.abs_tol));
    let value = try_integrate_pieces(density, &[lo, c_big], &outer)?.value;
    Ok(4.0 * PI * value)
}

/// `c_Ĩ = (1/a_{1/2}(c(Ĩ))) ∫ |f'|² / [2(c(Ĩ) - f)]^{5/2} dφ`.
pub fn constant_c_i(action: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    let c = energy_of_action(Order::Limit, action.abs(), potential, cfg, &RootConfig::default())?;
    if !(c > potential.max()) {
        return Err(Error::domain(format!(
            "c_I needs a supercritical action, c(I) = {c} <= max f = {}",
            potential.max()
        )));
    }
    if potential.is_constant() {
        return Ok(0.0);
    }
    let a_half = moment_limit(0.5, c, potential, cfg)?;
    let num = integrate_circle_with_breaks(
        |x| {
            let fp = potential.eval_deriv(x);
            fp * fp * (2.0 * (c - potential.eval(x))).powf(-2.5)
        },
        &[potential.argmin(), potential.argmax()],
        &relative_only(cfg),
    )?;
    Ok(num / a_half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub k_values: Vec<u64>,
    /// Action at which `E₂`, `H̄_k` and `c_k` are reported.
    pub action: f64,
    /// Action bound `R` of the `E₁` integral.
    pub big_r: f64,
    /// Offset `r` above `max f` of the restricted `E₁` segment.
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    #[serde(rename = "k2E1")]
    pub k2e1: f64,
    #[serde(rename = "k2E2")]
    pub k2e2: f64,
    #[serde(rename = "kE1")]
    pub ke1: f64,
    #[serde(rename = "kE2")]
    pub ke2: f64,
    #[serde(rename = "cR_over_k2_ok")]
    pub cr_over_k2_ok: bool,
    #[serde(rename = "cI_over_k2_ok")]
    pub ci_over_k2_ok: bool,
    #[serde(rename = "Hbar_k")]
    pub h_bar_k: f64,
    pub c_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub k_values: Vec<u64>,
    #[serde(rename = "E1")]
    pub e1: Vec<f64>,
    /// Restricted segment of `E₁` (the quantity the lower bound controls).
    #[serde(rename = "E1_restricted")]
    pub e1_restricted: Vec<f64>,
    #[serde(rename = "E2")]
    pub e2: Vec<f64>,
    #[serde(rename = "c_R")]
    pub c_r: f64,
    /// `None` when the reporting action is not above the separatrix.
    #[serde(rename = "c_tilde_I")]
    pub c_tilde_i: Option<f64>,
    /// `max_k k·E₁` over the sweep.
    #[serde(rename = "fitted_C_upper")]
    pub fitted_c_upper: f64,
    /// `max_k k·E₂` over the sweep.
    #[serde(rename = "fitted_C_upper_E2")]
    pub fitted_c_upper_e2: f64,
    pub rows: Vec<SweepRow>,
    /// Ratios of consecutive `k²E₂` entries.
    pub k2e2_ratios: Vec<f64>,
    /// Least-squares slope of `log E₁` against `log k`.
    pub e1_exponent: Option<f64>,
    pub e2_exponent: Option<f64>,
}

impl SweepReport {
    /// Every row satisfies `c_R/k² ≤ E₁ ≤ C/k` and `c_Ĩ/k² ≤ E₂ ≤ C'/k`.
    pub fn sandwich_holds(&self) -> bool {
        self.rows.iter().all(|r| {
            r.cr_over_k2_ok && r.ci_over_k2_ok && r.ke1 <= self.fitted_c_upper && r.ke2 <= self.fitted_c_upper_e2
        })
    }
}

fn loglog_slope(ks: &[u64], vals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(vals)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&k, &v)| ((k as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

struct RowData {
    e1: E1Parts,
    e2: f64,
    h_bar_k: f64,
    c_k: f64,
}

/// `E₁`, `E₂`, `H̄_k` and `c_k` along `k_values`, in parallel over `k`.
pub fn sweep(params: &SweepParams, potential: &Potential, cfg: &QuadConfig) -> Result<SweepReport> {
    if params.k_values.is_empty() {
        return Err(Error::domain("k_values must not be empty"));
    }
    let c_r = match constant_c_r(params.r, params.big_r, potential, cfg).map_err(|e| e.context("c_R")) {
        Ok(v) => v,
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let c_tilde_i = match constant_c_i(params.action, potential, cfg).map_err(|e| e.context("c_I")) {
        Ok(v) => Some(v),
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let data: Vec<RowData> = params
        .k_values
        .par_iter()
        .map(|&k| {
            let ctx = ActionContext::new(Order::finite(k)?, params.action, potential, *cfg)?;
            Ok(RowData {
                e1: e1(k, params.big_r, params.r, potential, cfg).map_err(|e| e.context(&format!("E1 at k = {k}")))?,
                e2: e2(&ctx).map_err(|e| e.context(&format!("E2 at k = {k}")))?,
                h_bar_k: ctx.h_bar_k().map_err(|e| e.context(&format!("Hbar_k at k = {k}")))?,
                c_k: ctx.energy(),
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = params
        .k_values
        .iter()
        .zip(&data)
        .map(|(&k, d)| {
            let kf = k as f64;
            SweepRow {
                k,
                e1: d.e1.full,
                e2: d.e2,
                k2e1: kf * kf * d.e1.full,
                k2e2: kf * kf * d.e2,
                ke1: kf * d.e1.full,
                ke2: kf * d.e2,
                cr_over_k2_ok: c_r / (kf * kf) <= d.e1.full,
                ci_over_k2_ok: c_tilde_i.is_none_or(|ci| ci / (kf * kf) <= d.e2),
                h_bar_k: d.h_bar_k,
                c_k: d.c_k,
            }
        })
        .collect();
    let e1v: Vec<f64> = data.iter().map(|d| d.e1.full).collect();
    let e2v: Vec<f64> = data.iter().map(|d| d.e2).collect();
    let fitted_c_upper = rows.iter().map(|r| r.ke1).fold(0.0, f64::max);
    let fitted_c_upper_e2 = rows.iter().map(|r| r.ke2).fold(0.0, f64::max);
    let k2e2_ratios = rows.windows(2).map(|w| w[1].k2e2 / w[0].k2e2).collect();
    Ok(SweepReport {
        k_values: params.k_values.clone(),
        e1_exponent: loglog_slope(&params.k_values, &e1v),
        e2_exponent: loglog_slope(&params.k_values, &e2v),
        e1: e1v,
        e1_restricted: data.iter().map(|d| d.e1.restricted).collect(),
        e2: e2v,
        c_r,
        c_tilde_i,
        fitted_c_upper,
        fitted_c_upper_e2,
        rows,
        k2e2_ratios,
    })
}

/// The separable extension `H = I₁²/2 + f(φ₁) + Σ_{j≥2} I_j²/2` built from a
/// one-dimensional context in the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdimReport {
    pub n: usize,
    pub k: u64,
    pub actions: Vec<f64>,
    pub h_bar_k_1d: f64,
    pub h_bar_k: f64,
    #[serde(rename = "E1_1d")]
    pub e1_1d: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2_1d")]
    pub e2_1d: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    pub sigma_mass: f64,
    pub e1_matches: bool,
    pub e2_matches: bool,
}

/// `u^{(n)}(Ĩ, φ) = u_k(Ĩ₁, φ₁)`.
pub fn ndim_u(ctx: &ActionContext, phi: &[f64]) -> Result<f64> {
    ctx.u(*phi.first().ok_or_else(|| Error::domain("empty angle vector"))?)
}

/// `σ^{(n)}(Ĩ, φ) = σ_k(Ĩ₁, φ₁) (2π)^{1-n}`.
pub fn ndim_sigma(ctx: &ActionContext, phi: &[f64]) -> Result<f64> {
    let first = *phi.first().ok_or_else(|| Error::domain("empty angle vector"))?;
    Ok(ctx.sigma(first)? * TAU.powi(1 - phi.len() as i32))
}

/// Assembles the `n`-dimensional report. Each free coordinate contributes
/// its own (identically vanishing) defect integrals, which are evaluated and
/// added to the one-dimensional values.
pub fn ndim_product(
    ctx: &ActionContext,
    e1_1d: f64,
    e2_1d: f64,
    n: usize,
    extra_actions: &[f64],
) -> Result<NdimReport> {
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    if extra_actions.len() != n - 1 {
        return Err(Error::domain(format!(
            "expected {} extra actions, got {}",
            n - 1,
            extra_actions.len()
        )));
    }
    let k = match ctx.order() {
        Order::Finite(k) => k,
        Order::Limit => return Err(Error::domain("n-D product needs finite k")),
    };
    let cfg = ctx.quad_cfg();
    let uniform = |_: f64| 1.0 / TAU;
    let mut e1 = e1_1d;
    let mut e2 = e2_1d;
    let mut mass = ctx.sigma_pairing(|_| 1.0)?;
    for &a in extra_actions {
        // a free coordinate has ∂_φ(I²/2) = 0, and its lifted frequency
        // ∂_I(I²/2) = Ĩ_j coincides with the effective one
        let (freq, eff_freq) = (a, a);
        e2 += integrate_circle_with_breaks(|x| 0.0 * uniform(x), &[], cfg)?;
        e1 += integrate_circle_with_breaks(|x| (freq - eff_freq).powi(2) * uniform(x), &[], cfg)?;
        mass *= integrate_circle_with_breaks(uniform, &[], cfg)?;
    }
    let h_bar_k_1d = ctx.h_bar_k()?;
    let h_bar_k = h_bar_k_1d + extra_actions.iter().map(|a| 0.5 * a * a).sum::<f64>();
    let mut actions = vec![ctx.signed_action().value()];
    actions.extend_from_slice(extra_actions);
    Ok(NdimReport {
        n,
        k,
        actions,
        h_bar_k_1d,
        h_bar_k,
        e1_1d,
        e1,
        e2_1d,
        e2,
        sigma_mass: mass,
        e1_matches: e1.to_bits() == e1_1d.to_bits(),
        e2_matches: e2.to_bits() == e2_1d.to_bits(),
    })
}

//! Level curves, action maps, minimisers, invariant densities and effective
//! Hamiltonians for `H(I, φ) = I²/2 + f(φ)`.
//!
//! For finite `k` the positive momentum branch of
//! `γ²/2 + f(φ) + (1/k) ln γ = c` is
//! `γ_k(c, φ) = sqrt(W(k e^{2k(c - f(φ))}) / k)`, evaluated through the
//! log-form Lambert solver so that neither `e^{2kc}` nor `1/γ_k` is formed
//! when they would overflow. The limit curve is
//! `γ_0(c, φ) = sqrt(2(c - f(φ)))` where positive and zero elsewhere.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::antiderivative::Antiderivative;
use crate::error::{Error, Result};
use crate::lambert::w_log;
use crate::potential::{reduce, Potential};
use crate::quad::{integrate_circle_with_breaks, try_invert_monotone, QuadConfig, RootConfig};

const ANTIDERIVATIVE_TOL: f64 = 1e-10;
const LIMIT_ENERGY_OFFSET: f64 = 1e-9;

/// The penalty index `k`: a positive integer, or the limit `k = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    Finite(u64),
    Limit,
}

impl Order {
    pub fn finite(k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("k must be a positive integer"));
        }
        Ok(Order::Finite(k))
    }

    pub fn k(&self) -> Option<f64> {
        match *self {
            Order::Finite(k) => Some(k as f64),
            Order::Limit => None,
        }
    }

    fn require_finite(&self, what: &str) -> Result<f64> {
        self.k()
            .ok_or_else(|| Error::domain(format!("{what} is only defined for finite k")))
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::Limit => write!(f, "inf"),
        }
    }
}

/// Pointwise data on a level curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPoint {
    /// `k γ²` (finite k); `γ²` for the limit curve.
    pub omega: f64,
    pub gamma: f64,
    /// `ln γ`, exact even where `γ` underflows (finite k).
    pub ln_gamma: f64,
}

/// The curve `φ ↦ γ(c, φ)` at a fixed energy.
#[derive(Debug, Clone, Copy)]
pub struct LevelCurve<'a> {
    order: Order,
    c: f64,
    potential: &'a Potential,
}

impl<'a> LevelCurve<'a> {
    pub fn new(order: Order, c: f64, potential: &'a Potential) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::domain(format!("energy must be finite, got {c}")));
        }
        if order == Order::Finite(0) {
            return Err(Error::domain("k must be a positive integer"));
        }
        Ok(Self { order, c, potential })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn energy(&self) -> f64 {
        self.c
    }

    pub fn potential(&self) -> &'a Potential {
        self.potential
    }

    pub fn point(&self, phi: f64) -> LevelPoint {
        let f = self.potential.eval(phi);
        match self.order {
            Order::Finite(k) => {
                let k = k as f64;
                let ln_k = k.ln();
                let y = 2.0 * (self.c - f) * k + ln_k;
                let omega = w_log(y).expect("finite log-argument");
                let ln_omega = if omega > 1e-300 { omega.ln() } else { y - omega };
                LevelPoint {
                    omega,
                    gamma: (omega / k).sqrt(),
                    ln_gamma: 0.5 * (ln_omega - ln_k),
                }
            }
            Order::Limit => {
                let g2 = 2.0 * (self.c - f);
                if g2 > 0.0 {
                    LevelPoint {
                        omega: g2,
                        gamma: g2.sqrt(),
                        ln_gamma: 0.5 * g2.ln(),
                    }
                } else {
                    LevelPoint {
                        omega: 0.0,
                        gamma: 0.0,
                        ln_gamma: f64::NEG_INFINITY,
                    }
                }
            }
        }
    }

    pub fn gamma(&self, phi: f64) -> f64 {
        self.point(phi).gamma
    }

    pub fn ln_gamma(&self, phi: f64) -> f64 {
        self.point(phi).ln_gamma
    }

    /// `∂γ/∂φ`, from implicit differentiation of the level relation.
    pub fn gamma_phi(&self, phi: f64) -> f64 {
        let p = self.point(phi);
        let fp = self.potential.eval_deriv(phi);
        match self.order {
            // (γ + 1/(kγ)) γ_φ = -f'  ⇒  γ_φ = -f' kγ / (kγ² + 1)
            Order::Finite(k) => -fp * k as f64 * p.gamma / (p.omega + 1.0),
            Order::Limit => {
                if p.gamma > 0.0 {
                    -fp / p.gamma
                } else {
                    0.0
                }
            }
        }
    }

    /// `∂γ/∂c`.
    pub fn gamma_c(&self, phi: f64) -> f64 {
        let p = self.point(phi);
        match self.order {
            Order::Finite(k) => k as f64 * p.gamma / (p.omega + 1.0),
            Order::Limit => {
                if p.gamma > 0.0 {
                    1.0 / p.gamma
                } else {
                    0.0
                }
            }
        }
    }

    /// Quadrature breakpoints: extrema of `f` and the crossings `f = c`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.potential.argmin(), self.potential.argmax()];
        b.extend(self.potential.level_crossings(self.c));
        if self.potential.is_constant() {
            b.clear();
        }
        b
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F, cfg: &QuadConfig) -> Result<f64> {
        integrate_circle_with_breaks(g, &self.breakpoints(), cfg)
    }

    /// `(1/2π) ∫ γ dφ`.
    pub fn action(&self, cfg: &QuadConfig) -> Result<f64> {
        Ok(self.integrate(|x| self.gamma(x), cfg)? / TAU)
    }

    /// `ln ∫ γ^{2α} (1/k + γ²)^{-β} dφ` (finite k), scaled so that neither the
    /// integrand nor the result overflows.
    pub fn ln_moment(&self, alpha: f64, beta: f64, cfg: &QuadConfig) -> Result<f64> {
        let k = self.order.require_finite("A moments")?;
        let ln_k = k.ln();
        let log_integrand = |x: f64| {
            let p = self.point(x);
            2.0 * alpha * p.ln_gamma - beta * (p.omega.ln_1p() - ln_k)
        };
        let shift = log_integrand(self.potential.argmax()).max(log_integrand(self.potential.argmin()));
        let v = self.integrate(|x| (log_integrand(x) - shift).exp(), cfg)?;
        Ok(shift + v.ln())
    }

    /// `ln ∫ 1/γ_k dφ`.
    pub fn ln_inverse_gamma_integral(&self, cfg: &QuadConfig) -> Result<f64> {
        self.ln_moment(-0.5, 0.0, cfg)
    }
}

/// `γ_k(c, φ)` or `γ_0(c, φ)`.
pub fn gamma(level: &LevelCurve<'_>, phi: f64) -> f64 {
    level.gamma(phi)
}

/// `Ĩ(c) = (1/2π) ∫ γ(c, φ) dφ`.
pub fn action_of_energy(order: Order, c: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if order == Order::Limit && !(c > potential.min()) {
        return Err(Error::domain(format!(
            "limit action needs c > min f = {}, got {c}",
            potential.min()
        )));
    }
    LevelCurve::new(order, c, potential)?
        .action(cfg)
        .map_err(|e| e.context("action integral"))
}

/// Inverse of [`action_of_energy`]: the energy `c_k(Ĩ)` (or `c(Ĩ)`).
pub fn energy_of_action(
    order: Order,
    action: f64,
    potential: &Potential,
    cfg: &QuadConfig,
    root: &RootConfig,
) -> Result<f64> {
    if !(action > 0.0) || !action.is_finite() {
        return Err(Error::domain(format!("action must be positive, got {action}")));
    }
    let (fmin, fmax) = potential.extrema();
    let map = |c: f64| action_of_energy(order, c, potential, cfg);
    let mut hi = 0.5 * action * action + fmax + 1.0;
    let mut lo = match order {
        Order::Limit => fmin + LIMIT_ENERGY_OFFSET,
        Order::Finite(_) => fmin - 1.0,
    };
    let mut step = 1.0;
    for _ in 0..64 {
        let a_lo = map(lo)?;
        if a_lo <= action {
            break;
        }
        if order == Order::Limit {
            return Err(Error::domain(format!(
                "action {action} is below the smallest resolvable limit action {a_lo}"
            )));
        }
        step *= 2.0;
        lo = fmin - step;
    }
    step = 1.0;
    for _ in 0..64 {
        if map(hi)? >= action {
            break;
        }
        step *= 2.0;
        hi += step;
    }
    try_invert_monotone(map, action, (lo, hi), root).map_err(|e| match e {
        Error::Bracket { .. } => Error::domain(format!("action {action} could not be bracketed")),
        other => other.context("energy_of_action"),
    })
}

/// `H̄(Ĩ)`: `c(Ĩ)` above the separatrix, `max f` below it.
pub fn h_bar_limit(action: f64, potential: &Potential, cfg: &QuadConfig, root: &RootConfig) -> Result<f64> {
    let c = energy_of_action(Order::Limit, action.abs(), potential, cfg, root)?;
    Ok(if c > potential.max() { c } else { potential.max() })
}

/// An action with an explicit sign. Negative actions reuse the positive
/// construction through the reflection `u(-Ĩ) = -u(|Ĩ|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedAction {
    magnitude: f64,
    sign: f64,
}

impl SignedAction {
    pub fn new(value: f64) -> Result<Self> {
        if value == 0.0 || !value.is_finite() {
            return Err(Error::domain(format!("action must be nonzero and finite, got {value}")));
        }
        Ok(Self {
            magnitude: value.abs(),
            sign: value.signum(),
        })
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn value(&self) -> f64 {
        self.sign * self.magnitude
    }
}

/// `(k, Ĩ)` together with the resolved energy and cached integrals.
///
/// Construction performs the energy inversion; the antiderivatives needed by
/// `u` and `∂u/∂I` are built on first use.
#[derive(Debug)]
pub struct ActionContext {
    order: Order,
    action: SignedAction,
    energy: f64,
    potential: Potential,
    quad_cfg: QuadConfig,
    root_cfg: RootConfig,
    ln_a0: Option<f64>,
    gamma_antiderivative: OnceLock<Antiderivative>,
    action_deriv_antiderivative: OnceLock<(Antiderivative, f64)>,
}

impl ActionContext {
    pub fn new(order: Order, action: f64, potential: &Potential, quad_cfg: QuadConfig) -> Result<Self> {
        Self::with_root(order, action, potential, quad_cfg, RootConfig::default())
    }

    pub fn with_root(
        order: Order,
        action: f64,
        potential: &Potential,
        quad_cfg: QuadConfig,
        root_cfg: RootConfig,
    ) -> Result<Self> {
        quad_cfg.validate()?;
        let signed = SignedAction::new(action)?;
        let energy = energy_of_action(order, signed.magnitude(), potential, &quad_cfg, &root_cfg)?;
        Self::from_parts(order, signed, energy, potential, quad_cfg, root_cfg)
    }

    /// Context at a prescribed energy; the action is computed from it.
    pub fn at_energy(order: Order, energy: f64, potential: &Potential, quad_cfg: QuadConfig) -> Result<Self> {
        let action = action_of_energy(order, energy, potential, &quad_cfg)?;
        let signed = SignedAction::new(action)?;
        Self::from_parts(order, signed, energy, potential, quad_cfg, RootConfig::default())
    }

    fn from_parts(
        order: Order,
        action: SignedAction,
        energy: f64,
        potential: &Potential,
        quad_cfg: QuadConfig,
        root_cfg: RootConfig,
    ) -> Result<Self> {
        let ln_a0 = match order {
            Order::Finite(_) => Some(
                LevelCurve::new(order, energy, potential)?
                    .ln_inverse_gamma_integral(&quad_cfg)
                    .map_err(|e| e.context("normaliser of sigma"))?,
            ),
            Order::Limit => None,
        };
        Ok(Self {
            order,
            action,
            energy,
            potential: potential.clone(),
            quad_cfg,
            root_cfg,
            ln_a0,
            gamma_antiderivative: OnceLock::new(),
            action_deriv_antiderivative: OnceLock::new(),
        })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    /// `|Ĩ|`.
    pub fn action(&self) -> f64 {
        self.action.magnitude()
    }

    pub fn signed_action(&self) -> SignedAction {
        self.action
    }

    /// `c_k(Ĩ)` or `c(Ĩ)`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn quad_cfg(&self) -> &QuadConfig {
        &self.quad_cfg
    }

    pub fn root_cfg(&self) -> &RootConfig {
        &self.root_cfg
    }

    pub fn level(&self) -> LevelCurve<'_> {
        LevelCurve {
            order: self.order,
            c: self.energy,
            potential: &self.potential,
        }
    }

    pub fn gamma(&self, phi: f64) -> f64 {
        self.level().gamma(phi)
    }

    fn k(&self, what: &str) -> Result<f64> {
        self.order.require_finite(what)
    }

    fn gamma_antiderivative(&self) -> Result<&Antiderivative> {
        if let Some(ad) = self.gamma_antiderivative.get() {
            return Ok(ad);
        }
        let level = self.level();
        let ad = Antiderivative::build(|x| level.gamma(x), &level.breakpoints(), ANTIDERIVATIVE_TOL)?;
        Ok(self.gamma_antiderivative.get_or_init(|| ad))
    }

    /// `u(Ĩ, φ) = Ĩ(π - φ) - (1/2π)∫_0^{2π}∫_0^y γ dx dy + ∫_0^φ γ dx`.
    pub fn u(&self, phi: f64) -> Result<f64> {
        let ad = self.gamma_antiderivative()?;
        let x = reduce(phi);
        let base = self.action() * (PI - x) - ad.mean() + ad.eval(x);
        Ok(self.action.sign() * base)
    }

    /// `∂u/∂φ = γ - Ĩ` (reflected for negative actions).
    pub fn u_phi_deriv(&self, phi: f64) -> f64 {
        self.action.sign() * (self.gamma(phi) - self.action())
    }

    /// `∂²u/∂φ²`.
    pub fn u_phi_second_deriv(&self, phi: f64) -> f64 {
        self.action.sign() * self.level().gamma_phi(phi)
    }

    /// `Ĩ + ∂u/∂φ`, the momentum on the graph of the generating function.
    pub fn momentum(&self, phi: f64) -> f64 {
        self.action.sign() * self.gamma(phi)
    }

    /// `ln ∫ 1/γ_k dφ`.
    pub fn ln_inverse_gamma_integral(&self) -> Result<f64> {
        self.ln_a0
            .ok_or_else(|| Error::domain("sigma is only defined for finite k"))
    }

    /// `σ_k(Ĩ, φ) = (1/γ_k) / ∫ (1/γ_k)`.
    pub fn sigma(&self, phi: f64) -> Result<f64> {
        let ln_a0 = self.ln_inverse_gamma_integral()?;
        Ok((-self.level().ln_gamma(phi) - ln_a0).exp())
    }

    /// `T_k = ∫ 1/γ_k dφ`, the period of the torus flow.
    pub fn period(&self) -> Result<f64> {
        Ok(self.ln_inverse_gamma_integral()?.exp())
    }

    /// `H̄_k(Ĩ) = c_k(Ĩ) + (1/k) ln ∫ 1/γ_k`.
    pub fn h_bar_k(&self) -> Result<f64> {
        let k = self.k("H̄_k")?;
        Ok(self.energy + self.ln_inverse_gamma_integral()? / k)
    }

    /// Residual of `½(Ĩ + u_φ)² + f + (1/k) ln(Ĩ + u_φ) - c_k`.
    pub fn hj_residual(&self, phi: f64) -> Result<f64> {
        let k = self.k("the modified HJ residual")?;
        // Ĩ + u_φ is γ_k exactly; forming it as Ĩ + (γ_k - Ĩ) cancels
        // catastrophically where γ_k ≪ Ĩ
        let p = self.level().point(phi);
        Ok(0.5 * p.gamma * p.gamma + self.potential.eval(phi) + p.ln_gamma / k - self.energy)
    }

    /// `∫ H(Ĩ + u_φ, φ) σ_k dφ`.
    pub fn sigma_weighted_energy(&self) -> Result<f64> {
        let ln_a0 = self.ln_inverse_gamma_integral()?;
        let level = self.level();
        level.integrate(
            |x| {
                let p = level.point(x);
                (0.5 * p.gamma * p.gamma + self.potential.eval(x)) * (-p.ln_gamma - ln_a0).exp()
            },
            &self.quad_cfg,
        )
    }

    /// `∫ g σ_k dφ`.
    pub fn sigma_pairing<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64> {
        let ln_a0 = self.ln_inverse_gamma_integral()?;
        let level = self.level();
        level.integrate(|x| g(x) * (-level.ln_gamma(x) - ln_a0).exp(), &self.quad_cfg)
    }

    /// `A_{α,β}(k, c_k(Ĩ))`.
    pub fn moment(&self, alpha: f64, beta: f64) -> Result<f64> {
        Ok(self.level().ln_moment(alpha, beta, &self.quad_cfg)?.exp())
    }

    /// `c'_k(Ĩ) = 2π / A_{½,1}(k, c_k(Ĩ))`.
    pub fn energy_slope(&self) -> Result<f64> {
        Ok(TAU / self.moment(0.5, 1.0)?)
    }

    fn action_deriv_antiderivative(&self) -> Result<&(Antiderivative, f64)> {
        if let Some(v) = self.action_deriv_antiderivative.get() {
            return Ok(v);
        }
        let k = self.k("∂u/∂I")?;
        let level = self.level();
        let weight = move |x: f64| {
            let p = level.point(x);
            // γ / (1/k + γ²) = k γ / (1 + kγ²)
            k * p.gamma / (1.0 + p.omega)
        };
        let ad = Antiderivative::build(weight, &level.breakpoints(), ANTIDERIVATIVE_TOL)?;
        let slope = TAU / ad.total();
        Ok(self.action_deriv_antiderivative.get_or_init(|| (ad, slope)))
    }

    /// `∂u_k/∂I`, assembled from `γ'_k = γ_k c'_k / (1/k + γ_k²)` and
    /// `c'_k = 2π / A_{½,1}`.
    pub fn u_action_deriv(&self, phi: f64) -> Result<f64> {
        let (ad, slope) = self.action_deriv_antiderivative()?;
        let x = reduce(phi);
        Ok((PI - x) + slope * (ad.eval(x) - ad.mean()))
    }

    /// `∂²u_k/∂φ∂I = c'_k γ_k / (1/k + γ_k²) - 1`.
    pub fn u_mixed_deriv(&self, phi: f64) -> Result<f64> {
        let k = self.k("∂²u/∂φ∂I")?;
        let (_, slope) = self.action_deriv_antiderivative()?;
        let p = self.level().point(phi);
        Ok(slope * k * p.gamma / (1.0 + p.omega) - 1.0)
    }

    /// Angle transformation `U_φ(Ĩ, φ) = φ + ∂u_k/∂I`.
    pub fn angle_transform(&self, phi: f64) -> Result<f64> {
        Ok(phi + self.u_action_deriv(phi)?)
    }

    /// Profile rows at `grid` equally spaced angles. `limit` supplies the
    /// `k = ∞` columns and must share the action.
    pub fn profile(&self, limit: &ActionContext, grid: usize) -> Result<Vec<ProfileRow>> {
        self.k("profile")?;
        if limit.order != Order::Limit {
            return Err(Error::domain("profile needs a k = inf companion context"));
        }
        (0..grid)
            .map(|i| {
                let phi = TAU * i as f64 / grid as f64;
                Ok(ProfileRow {
                    phi,
                    gamma_k: self.gamma(phi),
                    gamma_0: limit.gamma(phi),
                    u_k: self.u(phi)?,
                    u_0: limit.u(phi)?,
                    sigma_k: self.sigma(phi)?,
                })
            })
            .collect()
    }
}

/// One row of the profile export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub phi: f64,
    pub gamma_k: f64,
    pub gamma_0: f64,
    pub u_k: f64,
    pub u_0: f64,
    pub sigma_k: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    fn midpoint(g: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = TAU / n as f64;
        (0..n).map(|i| g((i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    // root of γ²/2 + (ln γ)/k = c by bisection
    fn constant_root(k: f64, c: f64) -> f64 {
        let (mut lo, mut hi) = (1e-300_f64, 10.0 + c.abs());
        for _ in 0..400 {
            let m = 0.5 * (lo + hi);
            if 0.5 * m * m + m.ln() / k < c {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn gamma_examples() {
        let pend = Potential::pendulum();
        let zero = Potential::zero();
        assert_eq!(LevelCurve::new(Order::Limit, 1.0, &pend).unwrap().gamma(PI), 0.0);
        assert!((LevelCurve::new(Order::Limit, 2.0, &zero).unwrap().gamma(0.3) - 2.0).abs() < 1e-15);
        let g = LevelCurve::new(Order::Finite(10), 2.0, &zero).unwrap().gamma(1.0);
        assert!((g - constant_root(10.0, 2.0)).abs() < 1e-13);
    }

    #[test]
    fn gamma_positive_and_satisfies_level_relation() {
        let pend = Potential::pendulum();
        for &k in &[1u64, 10, 1000, 100_000] {
            for &c in &[-3.0, 0.0, 1.0, 4.0] {
                let level = LevelCurve::new(Order::Finite(k), c, &pend).unwrap();
                for i in 0..64 {
                    let x = TAU * i as f64 / 64.0;
                    let p = level.point(x);
                    assert!(p.ln_gamma.is_finite());
                    if p.gamma > 0.0 {
                        let r = 0.5 * p.gamma * p.gamma + pend.eval(x) + p.gamma.ln() / k as f64 - c;
                        assert!(r.abs() <= 1e-9, "k={k} c={c} x={x} r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_derivatives_match_differences() {
        let pend = Potential::pendulum();
        let level = LevelCurve::new(Order::Finite(50), 0.7, &pend).unwrap();
        let h = 1e-6;
        for &x in &[0.3, 1.4, 2.9, 4.0] {
            let fd = (level.gamma(x + h) - level.gamma(x - h)) / (2.0 * h);
            assert!((fd - level.gamma_phi(x)).abs() < 1e-6);
            let up = LevelCurve::new(Order::Finite(50), 0.7 + h, &pend).unwrap().gamma(x);
            let dn = LevelCurve::new(Order::Finite(50), 0.7 - h, &pend).unwrap().gamma(x);
            assert!(((up - dn) / (2.0 * h) - level.gamma_c(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn limit_action_examples() {
        let pend = Potential::pendulum();
        let zero = Potential::zero();
        assert!((action_of_energy(Order::Limit, 2.0, &zero, &cfg()).unwrap() - 2.0).abs() < 1e-14);
        let sep = action_of_energy(Order::Limit, 1.0, &pend, &cfg()).unwrap();
        assert!((sep - 4.0 / PI).abs() < 1e-9);
        let oracle = midpoint(|x| (2.0 * x.cos()).max(0.0).sqrt(), 2_000_000) / TAU;
        let a0 = action_of_energy(Order::Limit, 0.0, &pend, &cfg()).unwrap();
        assert!((a0 - oracle).abs() < 1e-8);
        assert!(action_of_energy(Order::Limit, -1.0, &pend, &cfg()).is_err());
    }

    #[test]
    fn energy_inversion_examples() {
        let pend = Potential::pendulum();
        let zero = Potential::zero();
        let r = RootConfig::default();
        assert!((energy_of_action(Order::Limit, 2.0, &zero, &cfg(), &r).unwrap() - 2.0).abs() < 1e-10);
        let c = energy_of_action(Order::Limit, 4.0 / PI, &pend, &cfg(), &r).unwrap();
        assert!((c - 1.0).abs() < 1e-8);
        for &k in &[1u64, 100, 10_000] {
            for &a in &[0.05, 0.5, 4.0 / PI, 2.0, 7.0] {
                let c = energy_of_action(Order::Finite(k), a, &pend, &cfg(), &r).unwrap();
                let back = action_of_energy(Order::Finite(k), c, &pend, &cfg()).unwrap();
                assert!((back - a).abs() <= 1e-9, "k={k} a={a}");
            }
        }
        assert!(energy_of_action(Order::Limit, -1.0, &pend, &cfg(), &r).is_err());
        assert!(energy_of_action(Order::Finite(3), 0.0, &pend, &cfg(), &r).is_err());
    }

    #[test]
    fn zero_potential_context() {
        let zero = Potential::zero();
        let k = 100.0;
        let ctx = ActionContext::new(Order::Finite(100), 2.0, &zero, cfg()).unwrap();
        for &x in &[0.0, 1.0, 4.0] {
            assert!(ctx.u(x).unwrap().abs() < 1e-10);
            assert!(ctx.u_phi_deriv(x).abs() < 1e-10);
            assert!((ctx.sigma(x).unwrap() - 1.0 / TAU).abs() < 1e-12);
            assert!(ctx.hj_residual(x).unwrap().abs() < 1e-12);
        }
        // constant γ = Ĩ, and the energy is the scalar root of γ²/2 + ln γ / k = c
        let c = 0.5 * 4.0 + 2f64.ln() / k;
        assert!((ctx.energy() - c).abs() < 1e-10);
        let hbar = c + (TAU / 2.0).ln() / k;
        assert!((ctx.h_bar_k().unwrap() - hbar).abs() < 1e-10);
        assert!((ctx.sigma_weighted_energy().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn h_bar_limit_examples() {
        let r = RootConfig::default();
        assert!((h_bar_limit(2.0, &Potential::zero(), &cfg(), &r).unwrap() - 2.0).abs() < 1e-10);
        let pend = Potential::pendulum();
        assert!((h_bar_limit(4.0 / PI, &pend, &cfg(), &r).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(h_bar_limit(0.1, &pend, &cfg(), &r).unwrap(), 1.0);
    }

    #[test]
    fn structural_identities() {
        let pend = Potential::pendulum();
        for &k in &[100u64, 10_000] {
            for &a in &[0.5, 2.0] {
                let ctx = ActionContext::new(Order::Finite(k), a, &pend, cfg()).unwrap();
                let mass = ctx.sigma_pairing(|_| 1.0).unwrap();
                assert!((mass - 1.0).abs() < 1e-9);
                let avg = ctx.level().integrate(|x| ctx.u(x).unwrap(), &cfg()).unwrap();
                assert!(avg.abs() < 1e-8, "k={k} a={a} avg={avg}");
                let h = 1e-5;
                for &x in &[0.4, 2.0, 3.3] {
                    let fd = (ctx.u(x + h).unwrap() - ctx.u(x - h).unwrap()) / (2.0 * h);
                    assert!((fd - ctx.u_phi_deriv(x)).abs() < 1e-6);
                    let s = ctx.sigma(x).unwrap();
                    if s > 1e-250 {
                        let ln_sg = s.ln() + ctx.level().ln_gamma(x);
                        assert!((ln_sg + ctx.ln_inverse_gamma_integral().unwrap()).abs() < 1e-9);
                    }
                }
                // substitution of the level relation
                let lhs = ctx.sigma_weighted_energy().unwrap();
                let lng = ctx.sigma_pairing(|x| ctx.level().ln_gamma(x)).unwrap();
                assert!((lhs - (ctx.energy() - lng / k as f64)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hj_residual_periodic_and_small() {
        let pend = Potential::pendulum();
        let ctx = ActionContext::new(Order::Finite(100), 2.0, &pend, cfg()).unwrap();
        for i in 0..64 {
            let x = TAU * i as f64 / 64.0;
            let r = ctx.hj_residual(x).unwrap();
            assert!(r.abs() <= 1e-9);
            assert!((r - ctx.hj_residual(x + TAU).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn u_limit_matches_nested_oracle() {
        let pend = Potential::pendulum();
        let ctx = ActionContext::at_energy(Order::Limit, 2.0, &pend, cfg()).unwrap();
        let a = ctx.action();
        let g = |x: f64| (2.0 * (2.0 + x.cos())).sqrt();
        // G(y) by midpoint on [0, y], then the outer mean
        let inner = |y: f64| {
            let n = 4000;
            let h = y / n as f64;
            (0..n).map(|i| g((i as f64 + 0.5) * h)).sum::<f64>() * h
        };
        let mean = midpoint(inner, 4000) / TAU;
        let phi = PI / 2.0;
        let oracle = a * (PI - phi) - mean + inner(phi);
        assert!((ctx.u(phi).unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn negative_actions_reflect() {
        let pend = Potential::pendulum();
        let pos = ActionContext::new(Order::Finite(100), 1.5, &pend, cfg()).unwrap();
        let neg = ActionContext::new(Order::Finite(100), -1.5, &pend, cfg()).unwrap();
        assert_eq!(pos.h_bar_k().unwrap(), neg.h_bar_k().unwrap());
        for &x in &[0.2, 2.5, 5.0] {
            assert!((pos.u(x).unwrap() + neg.u(x).unwrap()).abs() < 1e-14);
            assert_eq!(pos.sigma(x).unwrap(), neg.sigma(x).unwrap());
            assert!((neg.momentum(x) + pos.gamma(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_needs_finite_k() {
        let pend = Potential::pendulum();
        let ctx = ActionContext::new(Order::Limit, 2.0, &pend, cfg()).unwrap();
        assert!(ctx.sigma(0.0).is_err());
        assert!(ctx.h_bar_k().is_err());
        assert!(ctx.hj_residual(0.0).is_err());
    }

    #[test]
    fn sigma_concentrates_at_separatrix() {
        let pend = Potential::pendulum();
        let ratio = |k: u64| {
            let ctx = ActionContext::new(Order::Finite(k), 4.0 / PI, &pend, cfg()).unwrap();
            ctx.sigma(PI).unwrap() / ctx.sigma(0.0).unwrap()
        };
        let (r2, r4) = (ratio(100), ratio(10_000));
        assert!(r2 > 1.0 && r4 > r2);
    }

    #[test]
    fn action_derivative_matches_differences() {
        let pend = Potential::pendulum();
        let a = 1.8;
        let h = 1e-5;
        let ctx = ActionContext::new(Order::Finite(100), a, &pend, cfg()).unwrap();
        let up = ActionContext::new(Order::Finite(100), a + h, &pend, cfg()).unwrap();
        let dn = ActionContext::new(Order::Finite(100), a - h, &pend, cfg()).unwrap();
        for &x in &[0.0, 1.0, 2.5, 4.4] {
            let fd = (up.u(x).unwrap() - dn.u(x).unwrap()) / (2.0 * h);
            assert!((fd - ctx.u_action_deriv(x).unwrap()).abs() < 1e-5, "x={x}");
        }
        let fd_c = (up.energy() - dn.energy()) / (2.0 * h);
        let slope = ctx.energy_slope().unwrap();
        assert!((fd_c - slope).abs() <= 1e-5 * slope);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn action_increasing_in_energy(k in 1u64..5000, c in -2.0f64..4.0, dc in 1e-3f64..1.0) {
                let pend = Potential::pendulum();
                let cfg = QuadConfig::default();
                let a1 = action_of_energy(Order::Finite(k), c, &pend, &cfg).unwrap();
                let a2 = action_of_energy(Order::Finite(k), c + dc, &pend, &cfg).unwrap();
                // deep below min f both actions underflow to zero
                prop_assert!(a2 > a1 || (a1 == 0.0 && a2 < 1e-300));
            }

            #[test]
            fn limit_round_trip(a in 0.05f64..5.0) {
                let pend = Potential::pendulum();
                let cfg = QuadConfig::default();
                let c = energy_of_action(Order::Limit, a, &pend, &cfg, &RootConfig::default()).unwrap();
                let back = action_of_energy(Order::Limit, c, &pend, &cfg).unwrap();
                prop_assert!((back - a).abs() <= 1e-9);
            }
        }
    }
}

//! The singular limit at the separatrix action: concentration of `σ_k` on the
//! hyperbolic point, divergence of the torus period and convergence of the
//! torus trajectories to the homoclinic limit motion.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::integrate_angle;
use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind};
use crate::quad::QuadConfig;
use crate::weakkam::{action_of_energy, ActionContext, LevelCurve, Order};

/// A trigonometric polynomial `a₀ + Σ aₘ cos mφ + bₘ sin mφ` used to probe
/// the invariant measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub id: String,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TestFunction {
    pub fn one() -> Self {
        Self {
            id: "one".into(),
            constant: 1.0,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    /// `cos(mφ)`.
    pub fn cos(m: usize) -> Self {
        let mut cos = vec![0.0; m];
        cos[m - 1] = 1.0;
        Self {
            id: if m == 1 { "cos".into() } else { format!("cos{m}") },
            constant: 0.0,
            cos,
            sin: Vec::new(),
        }
    }

    /// `sin(mφ)`.
    pub fn sin(m: usize) -> Self {
        let mut sin = vec![0.0; m];
        sin[m - 1] = 1.0;
        Self {
            id: if m == 1 { "sin".into() } else { format!("sin{m}") },
            constant: 0.0,
            cos: Vec::new(),
            sin,
        }
    }

    /// `cos φ`, `sin φ`, `cos 2φ`.
    pub fn standard() -> Vec<Self> {
        vec![Self::cos(1), Self::sin(1), Self::cos(2)]
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let mut acc = self.constant;
        for (m, a) in self.cos.iter().enumerate() {
            acc += a * ((m + 1) as f64 * phi).cos();
        }
        for (m, b) in self.sin.iter().enumerate() {
            acc += b * ((m + 1) as f64 * phi).sin();
        }
        acc
    }
}

/// The action whose limit energy equals `max f`.
pub fn separatrix_action(potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if potential.is_constant() {
        return Err(Error::domain("a constant potential has no separatrix"));
    }
    let maxima = potential.global_maxima();
    if maxima.len() != 1 {
        return Err(Error::domain(format!(
            "separatrix needs a unique global maximum, found {}",
            maxima.len()
        )));
    }
    action_of_energy(Order::Limit, potential.max(), potential, cfg)
}

/// `T_k = ∫ 1/γ_k dφ`, the period of the torus flow.
pub fn period(ctx: &ActionContext) -> Result<f64> {
    ctx.period()
}

/// `∫ u σ_k dφ`.
pub fn measure_pairing(ctx: &ActionContext, test: &TestFunction) -> Result<f64> {
    ctx.sigma_pairing(|x| test.eval(x))
}

/// `(1/T_k) ∫_0^{T_k} u(x_k(t)) dt` along the torus orbit from `x_k(0) = 0`,
/// by the trapezoid rule on `n` equal steps (spectrally accurate for the
/// periodic integrand).
pub fn time_average(ctx: &ActionContext, test: &TestFunction, n: usize) -> Result<f64> {
    let t_k = ctx.period()?;
    let dt = t_k / n as f64;
    let orbit = integrate_angle(|x| ctx.momentum(x), 0.0, t_k, dt)?;
    let vals: Vec<f64> = orbit.phi.iter().map(|&x| test.eval(x)).collect();
    let interior: f64 = vals[1..vals.len() - 1].iter().sum();
    let ends = 0.5 * (vals[0] + vals[vals.len() - 1]);
    let span = orbit.times[orbit.times.len() - 1];
    Ok((interior + ends) * (span / (vals.len() - 1) as f64) / t_k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPair {
    pub times: Vec<f64>,
    pub x_k: Vec<f64>,
    pub x: Vec<f64>,
}

/// Orbits of `ẋ_k = γ_k(c_k(Ĩ), x_k)` and `ẋ = γ_0(max f, x)` from `0`.
pub fn trajectory_pair(ctx: &ActionContext, t_end: f64, dt: f64) -> Result<TrajectoryPair> {
    if ctx.order() == Order::Limit {
        return Err(Error::domain("trajectory pair needs finite k"));
    }
    let pot = ctx.potential();
    if pot.global_maxima().len() != 1 {
        return Err(Error::domain("trajectory pair needs a unique global maximum"));
    }
    let finite = integrate_angle(|x| ctx.momentum(x), 0.0, t_end, dt)?;
    // the limit curve at exactly max f: c(Ĩ) recomputed by quadrature could
    // land a rounding error above it and let the orbit leak past the saddle
    let limit_curve = LevelCurve::new(Order::Limit, pot.max(), pot)?;
    let limit = integrate_angle(|x| limit_curve.gamma(x), 0.0, t_end, dt)?;
    Ok(TrajectoryPair {
        times: finite.times,
        x_k: finite.phi,
        x: limit.phi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixRun {
    pub k: u64,
    pub action: f64,
    #[serde(rename = "T_k")]
    pub t_k: f64,
    pub pairing_values: BTreeMap<String, f64>,
    /// Set for potentials other than the pendulum, where the limit of the
    /// pairings is not established.
    pub exploratory: bool,
}

/// Period and pairings at the separatrix action for each `k`, in parallel.
pub fn separatrix_runs(
    k_values: &[u64],
    tests: &[TestFunction],
    potential: &Potential,
    cfg: &QuadConfig,
) -> Result<Vec<SeparatrixRun>> {
    let action = separatrix_action(potential, cfg)?;
    let exploratory = potential.kind() != PotentialKind::Pendulum;
    k_values
        .par_iter()
        .map(|&k| {
            let ctx = ActionContext::new(Order::finite(k)?, action, potential, *cfg)?;
            let pairing_values = tests
                .iter()
                .map(|t| Ok((t.id.clone(), measure_pairing(&ctx, t)?)))
                .collect::<Result<_>>()?;
            Ok(SeparatrixRun {
                k,
                action,
                t_k: ctx.period()?,
                pairing_values,
                exploratory,
            })
        })
        .collect()
}

/// `∮ dφ/γ_0` for a supercritical limit energy.
pub fn limit_period(c: f64, potential: &Potential, cfg: &QuadConfig) -> Result<f64> {
    if !(c > potential.max()) {
        return Err(Error::domain("limit period needs c > max f"));
    }
    let level = LevelCurve::new(Order::Limit, c, potential)?;
    level.integrate(|x| 1.0 / level.gamma(x), cfg)
}

/// Angle `x` reached by the limit orbit at time `t`, for the pendulum:
/// `ẋ = 2 cos(x/2)` gives `x(t) = 2 arcsin(tanh t)`.
pub fn pendulum_limit_orbit(t: f64) -> f64 {
    2.0 * t.tanh().asin()
}

/// Number of trapezoid steps per period used by default for time averages.
pub const TIME_AVERAGE_STEPS: usize = 20_000;

/// `1`, `cos φ`, `sin φ`, `cos 2φ`.
pub fn default_tests() -> Vec<TestFunction> {
    let mut t = vec![TestFunction::one()];
    t.extend(TestFunction::standard());
    t
}

use std::f64::consts::TAU;

use serde::Serialize;
use weakkam_core::dynamics::{flow_bundle, gap_from_bundle};
use weakkam_core::estimators::{e1, e2, ndim_product, sweep, SweepParams, SweepReport};
use weakkam_core::export;
use weakkam_core::quad::{circle_points, try_integrate_pieces};
use weakkam_core::separatrix::{separatrix_action, separatrix_runs, trajectory_pair, TestFunction};
use weakkam_core::weakkam::{action_of_energy, h_bar_limit};
use weakkam_core::{ActionContext, Error, Order, Potential, QuadConfig, RootConfig};

use crate::config::{ActionSpec, Command, Job};

/// Files produced by a command, in write order.
pub type Outputs = Vec<(&'static str, Vec<u8>)>;

#[derive(Debug)]
pub enum RunError {
    Numeric(Error),
    Io(std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numeric(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn to_action(spec: ActionSpec, potential: &Potential, quad: &QuadConfig) -> Result<f64> {
    Ok(match spec {
        ActionSpec::Action(a) => a,
        ActionSpec::Energy(c) => action_of_energy(Order::Limit, c, potential, quad)?,
    })
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    f(&mut out)?;
    Ok(out)
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    csv_bytes(|o| export::write_json(o, value))
}

pub fn run(job: &Job) -> Result<Outputs> {
    match job.command {
        Command::Profile => profile(job),
        Command::Sweep => run_sweep(job),
        Command::Flows => flows(job),
        Command::Separatrix => separatrix(job),
        Command::Ndim => ndim(job),
    }
}

#[derive(Serialize)]
struct ProfileSummary {
    k: u64,
    action: f64,
    c_k: f64,
    #[serde(rename = "Hbar_k")]
    h_bar_k: f64,
    #[serde(rename = "Hbar")]
    h_bar: f64,
    /// `∫ u_k dφ`, zero up to quadrature error.
    zero_average_residual: f64,
    max_hj_residual: f64,
    max_abs_u_k: f64,
    u_identically_zero: bool,
    grid: usize,
}

const U_ZERO_TOL: f64 = 1e-12;

fn profile(job: &Job) -> Result<Outputs> {
    let pot = &job.potential;
    let k = job.k_list[0];
    let action = to_action(job.action.unwrap(), pot, &job.quad)?;
    let ctx = ActionContext::new(Order::finite(k)?, action, pot, job.quad)?;
    let limit = ActionContext::new(Order::Limit, action, pot, job.quad)?;
    let rows = ctx.profile(&limit, job.grid)?;

    let zero_average_residual =
        try_integrate_pieces(|x| ctx.u(x), &circle_points(&ctx.level().breakpoints()), &job.quad)
            .map_err(|e| e.context("integral of u_k"))?
            .value;
    let mut max_hj_residual = 0.0_f64;
    for i in 0..job.grid {
        let phi = TAU * i as f64 / job.grid as f64;
        max_hj_residual = max_hj_residual.max(ctx.hj_residual(phi)?.abs());
    }
    let max_abs_u_k = rows.iter().map(|r| r.u_k.abs()).fold(0.0, f64::max);
    let summary = ProfileSummary {
        k,
        action,
        c_k: ctx.energy(),
        h_bar_k: ctx.h_bar_k()?,
        h_bar: h_bar_limit(action, pot, &job.quad, &RootConfig::default())?,
        zero_average_residual,
        max_hj_residual,
        max_abs_u_k,
        u_identically_zero: max_abs_u_k <= U_ZERO_TOL,
        grid: job.grid,
    };
    Ok(vec![
        ("profile.csv", csv_bytes(|o| export::write_profile(o, &rows))?),
        ("summary.json", json_bytes(&summary)?),
    ])
}

#[derive(Serialize)]
struct SweepJson<'a> {
    action: f64,
    #[serde(rename = "R")]
    big_r: f64,
    r: f64,
    #[serde(flatten)]
    report: &'a SweepReport,
    sandwich_holds: bool,
}

fn run_sweep(job: &Job) -> Result<Outputs> {
    let pot = &job.potential;
    let params = SweepParams {
        k_values: job.k_list.clone(),
        action: to_action(job.action.unwrap(), pot, &job.quad)?,
        big_r: to_action(job.big_r.unwrap(), pot, &job.quad)?,
        r: job.r,
    };
    let report = sweep(&params, pot, &job.quad)?;
    let mirror = SweepJson {
        action: params.action,
        big_r: params.big_r,
        r: params.r,
        report: &report,
        sandwich_holds: report.sandwich_holds(),
    };
    Ok(vec![
        ("sweep.csv", csv_bytes(|o| export::write_sweep(o, &report))?),
        ("sweep.json", json_bytes(&mirror)?),
    ])
}

fn flows(job: &Job) -> Result<Outputs> {
    let pot = &job.potential;
    let action = to_action(job.action.unwrap(), pot, &job.quad)?;
    let ctx = ActionContext::new(Order::finite(job.k_list[0])?, action, pot, job.quad)?;
    let samples = flow_bundle(&ctx, job.phi0, job.t_end.unwrap(), job.dt)?;
    let gaps = gap_from_bundle(&ctx, &samples);
    Ok(vec![
        ("flows.csv", csv_bytes(|o| export::write_flows(o, &samples))?),
        ("gaps.csv", csv_bytes(|o| export::write_gaps(o, &gaps))?),
    ])
}

pub const DEFAULT_TRAJECTORY_T_END: f64 = 5.0;
/// Trajectories stop at this multiple of the period at `k = 100`.
pub const TRAJECTORY_T_END_PERIODS: f64 = 10.0;

fn separatrix(job: &Job) -> Result<Outputs> {
    let pot = &job.potential;
    let tests = TestFunction::standard();
    let runs = separatrix_runs(&job.k_list, &tests, pot, &job.quad)?;
    let mut out = vec![("separatrix.csv", csv_bytes(|o| export::write_separatrix(o, &runs))?)];

    if pot.global_maxima().len() == 1 {
        let action = separatrix_action(pot, &job.quad)?;
        let t_end = job.t_end.unwrap_or(DEFAULT_TRAJECTORY_T_END);
        let t_cap =
            TRAJECTORY_T_END_PERIODS * ActionContext::new(Order::finite(100)?, action, pot, job.quad)?.period()?;
        if t_end > t_cap {
            return Err(Error::Domain(format!(
                "t_end {t_end} exceeds {TRAJECTORY_T_END_PERIODS} periods at k = 100 ({t_cap})"
            ))
            .into());
        }
        let k = job.trajectory_k.unwrap_or_else(|| *job.k_list.iter().max().unwrap());
        let ctx = ActionContext::new(Order::finite(k)?, action, pot, job.quad)?;
        let pair = trajectory_pair(&ctx, t_end, job.dt)?;
        out.push(("trajectory.csv", csv_bytes(|o| export::write_trajectory(o, &pair))?));
    }
    Ok(out)
}

fn ndim(job: &Job) -> Result<Outputs> {
    let pot = &job.potential;
    let k = job.k_list[0];
    let action = to_action(job.action.unwrap(), pot, &job.quad)?;
    let big_r = to_action(job.big_r.unwrap(), pot, &job.quad)?;
    let ctx = ActionContext::new(Order::finite(k)?, action, pot, job.quad)?;
    let e1_1d = e1(k, big_r, job.r, pot, &job.quad).map_err(|e| e.context("E1"))?.full;
    let e2_1d = e2(&ctx).map_err(|e| e.context("E2"))?;
    let extra = job.extra_actions.clone().unwrap_or_else(|| vec![1.0; job.n - 1]);
    let report = ndim_product(&ctx, e1_1d, e2_1d, job.n, &extra)?;
    Ok(vec![("ndim.json", json_bytes(&report)?)])
}

//! Iterative schemes, their configuration, the solve driver and the
//! restricted primal-dual gap.

mod gap;
mod log;
mod schedule;
mod steps;

pub use gap::{gap_constant, restricted_gap, BoxSet, DualBlockGap, DualSet, GapSpec, PrimalPiece};
pub use log::{ConvergenceLog, LogColumn, LogRecord};
pub use schedule::gamma_schedule_alg2;
pub use steps::{step_alg1, step_alg2, step_alg3, step_pd};

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::vector::{dist_sq, DualVector, PrimalVector};

/// Which scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Forward-backward-forward scheme with a nondecreasing step sequence.
    Alg1,
    /// Accelerated variant for strongly monotone primal parts.
    Alg2,
    /// Fixed-step variant for fully strongly monotone problems.
    Alg3,
    /// Primal-dual baseline with unit extrapolation.
    Pd1,
    /// Accelerated primal-dual baseline.
    Pd2,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alg1" => Ok(Variant::Alg1),
            "alg2" => Ok(Variant::Alg2),
            "alg3" => Ok(Variant::Alg3),
            "pd1" => Ok(Variant::Pd1),
            "pd2" => Ok(Variant::Pd2),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Alg1 => "alg1",
            Variant::Alg2 => "alg2",
            Variant::Alg3 => "alg3",
            Variant::Pd1 => "pd1",
            Variant::Pd2 => "pd2",
        }
    }
}

/// Step-size schedule for `Alg1`, indexed by iteration.
pub type GammaSchedule = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Solver configuration. Defaults follow the step-size rules of each
/// variant; `gamma0` overrides the initial (or constant) step.
#[derive(Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    pub max_iters: usize,
    /// Margin of the admissible step interval for `Alg1`.
    pub epsilon: f64,
    pub gamma0: Option<f64>,
    /// Step schedule for `Alg1`; must be nondecreasing and stay within the
    /// admissible interval. Absent means the constant default.
    pub gamma_schedule: Option<GammaSchedule>,
    /// Strong monotonicity modulus used by `Alg2`, `Alg3` and `Pd2`.
    /// Zero means "take it from the problem spec".
    pub rho: f64,
    /// Dual moduli used by `Alg3`; absent means "take them from the spec".
    pub tau: Option<Vec<f64>>,
    pub seed: u64,
    /// Track ergodic averages in the gap callback instead of last iterates.
    pub ergodic: bool,
    /// Stop once the RMSE to the reference iterate drops below this.
    pub rmse_tol: Option<f64>,
    /// Dual blocks run on separate threads when > 1; 1 is the sequential
    /// reference mode.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Alg1,
            max_iters: 100,
            epsilon: 1e-4,
            gamma0: None,
            gamma_schedule: None,
            rho: 0.0,
            tau: None,
            seed: 0,
            ergodic: false,
            rmse_tol: None,
            threads: 1,
        }
    }
}

impl std::fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverConfig")
            .field("variant", &self.variant)
            .field("max_iters", &self.max_iters)
            .field("epsilon", &self.epsilon)
            .field("gamma0", &self.gamma0)
            .field("has_schedule", &self.gamma_schedule.is_some())
            .field("rho", &self.rho)
            .field("tau", &self.tau)
            .field("seed", &self.seed)
            .field("ergodic", &self.ergodic)
            .field("rmse_tol", &self.rmse_tol)
            .field("threads", &self.threads)
            .finish()
    }
}

/// Full iterate state shared by all variants.
#[derive(Clone, Debug)]
pub struct IterateState {
    pub x: PrimalVector,
    pub v: DualVector,
    /// Last primal prox point.
    pub p1: PrimalVector,
    /// Last dual prox points.
    pub p2: DualVector,
    pub gamma: f64,
    pub sigma: f64,
    pub theta: f64,
    /// Extrapolated primal point (`Pd1`/`Pd2` only).
    pub xbar: Option<Vec<f64>>,
    /// Running sums of the prox points, for ergodic averages.
    pub sum_p1: Vec<f64>,
    pub sum_p2: Vec<Vec<f64>>,
    pub iter: usize,
    pub residual_primal_sq: f64,
    pub residual_dual_sq: f64,
}

impl IterateState {
    /// Validates the configuration against the spec and assembles the
    /// initial state, including per-variant step sizes.
    pub fn init(
        spec: &ProblemSpec,
        config: &SolverConfig,
        x0: PrimalVector,
        v0: DualVector,
    ) -> Result<Self> {
        spec.validate()?;
        if x0.len() != spec.dim {
            return Err(Error::dim("initial primal iterate", spec.dim, x0.len()));
        }
        if v0.blocks.len() != spec.blocks.len() {
            return Err(Error::dim(
                "initial dual block count",
                spec.blocks.len(),
                v0.blocks.len(),
            ));
        }
        for (k, (vb, b)) in v0.blocks.iter().zip(&spec.blocks).enumerate() {
            if vb.len() != b.dim() {
                return Err(Error::dim("initial dual block", b.dim(), vb.len()));
            }
            let _ = k;
        }

        let (gamma, sigma) = init_steps(spec, config)?;
        let block_dims = spec.block_dims();
        let xbar = match config.variant {
            Variant::Pd1 | Variant::Pd2 => Some(x0.data.clone()),
            _ => None,
        };
        Ok(Self {
            p1: x0.clone(),
            p2: v0.clone(),
            sum_p1: vec![0.0; spec.dim],
            sum_p2: block_dims.iter().map(|&d| vec![0.0; d]).collect(),
            x: x0,
            v: v0,
            gamma,
            sigma,
            theta: 1.0,
            xbar,
            iter: 0,
            residual_primal_sq: f64::NAN,
            residual_dual_sq: f64::NAN,
        })
    }
}

/// Resolved strong monotonicity modulus for the accelerated variants.
fn resolve_rho(spec: &ProblemSpec, config: &SolverConfig) -> f64 {
    if config.rho > 0.0 {
        config.rho
    } else {
        spec.strong_convexity_primal
    }
}

fn resolve_tau(spec: &ProblemSpec, config: &SolverConfig) -> Vec<f64> {
    match &config.tau {
        Some(t) => t.clone(),
        None => {
            if spec.strong_convexity_dual.is_empty() {
                vec![0.0; spec.blocks.len()]
            } else {
                spec.strong_convexity_dual.clone()
            }
        }
    }
}

fn init_steps(spec: &ProblemSpec, config: &SolverConfig) -> Result<(f64, f64)> {
    match config.variant {
        Variant::Alg1 => {
            let beta = crate::problem::beta(spec);
            let eps = config.epsilon;
            if !(eps > 0.0 && eps < 1.0 / (beta + 1.0)) {
                return Err(Error::Config(format!(
                    "epsilon must lie in (0, 1/(beta+1)) = (0, {}), got {eps}",
                    1.0 / (beta + 1.0)
                )));
            }
            let default = if beta > 0.0 { (1.0 - eps) / beta } else { 1.0 };
            let gamma = match &config.gamma_schedule {
                Some(s) => s(0),
                None => config.gamma0.unwrap_or(default),
            };
            validate_alg1_gamma(gamma, None, eps, beta)?;
            Ok((gamma, gamma))
        }
        Variant::Alg2 => {
            let rho = resolve_rho(spec, config);
            if rho <= 0.0 {
                return Err(Error::Config(
                    "accelerated variant needs a strong monotonicity modulus rho > 0".into(),
                ));
            }
            let sum_l2 = spec.sum_norm_bound_sq();
            if sum_l2 <= 0.0 {
                return Err(Error::Config(
                    "accelerated variant needs at least one nonzero block operator".into(),
                ));
            }
            // With mu = 0 the upper bound from the smooth part is vacuous
            // and any gamma0 in (0, 1) is admissible.
            let mu_bound = if spec.mu > 0.0 {
                (1.0 + 4.0 * rho).sqrt() / (2.0 * (1.0 + 2.0 * rho) * spec.mu)
            } else {
                f64::INFINITY
            };
            let gamma0 = config.gamma0.unwrap_or_else(|| {
                if mu_bound.is_finite() {
                    mu_bound.min(0.99)
                } else {
                    0.5
                }
            });
            if !(gamma0 > 0.0 && gamma0 < 1.0) || gamma0 > mu_bound + 1e-12 {
                return Err(Error::Config(format!(
                    "gamma0 must lie in (0, min(1, {mu_bound})), got {gamma0}"
                )));
            }
            let sigma0 = 1.0 / (2.0 * gamma0 * (1.0 + 2.0 * rho) * sum_l2);
            Ok((gamma0, sigma0))
        }
        Variant::Alg3 => {
            let rho = resolve_rho(spec, config);
            let tau = resolve_tau(spec, config);
            if tau.len() != spec.blocks.len() {
                return Err(Error::dim("tau list", spec.blocks.len(), tau.len()));
            }
            if rho <= 0.0 || tau.iter().any(|&t| t <= 0.0) {
                return Err(Error::Config(
                    "fixed-step variant needs rho > 0 and all tau_i > 0".into(),
                ));
            }
            let rho_min = tau.iter().fold(rho, |acc, &t| acc.min(t));
            let denom = (1.0 + 2.0 * rho_min).sqrt()
                * (spec.sum_norm_bound_sq().sqrt() + spec.max_lipschitz());
            let bound = if denom > 0.0 { 1.0 / denom } else { f64::INFINITY };
            let gamma = config.gamma0.unwrap_or_else(|| bound.min(0.9));
            if !(gamma > 0.0 && gamma < 1.0) || gamma > bound + 1e-12 {
                return Err(Error::Config(format!(
                    "gamma must lie in (0, 1) with gamma <= {bound}, got {gamma}"
                )));
            }
            Ok((gamma, gamma))
        }
        Variant::Pd1 | Variant::Pd2 => {
            if spec.blocks.len() != 1 {
                return Err(Error::Unsupported(format!(
                    "primal-dual baseline supports exactly one dual block, got {}",
                    spec.blocks.len()
                )));
            }
            if spec.prox_primal_full.is_none() {
                return Err(Error::Unsupported(
                    "primal-dual baseline needs prox_primal_full on the problem spec".into(),
                ));
            }
            if config.variant == Variant::Pd2 && resolve_rho(spec, config) <= 0.0 {
                return Err(Error::Config(
                    "accelerated baseline needs a strong monotonicity modulus rho > 0".into(),
                ));
            }
            let normb = spec.blocks[0].linop.norm_bound();
            if normb <= 0.0 {
                return Err(Error::Config(
                    "primal-dual baseline needs a nonzero block operator".into(),
                ));
            }
            let tau = config.gamma0.unwrap_or(1.0 / normb);
            if tau <= 0.0 {
                return Err(Error::Config(format!("tau must be > 0, got {tau}")));
            }
            // tau * sigma * ||L||^2 = 1
            let sigma = 1.0 / (tau * normb * normb);
            Ok((tau, sigma))
        }
    }
}

fn validate_alg1_gamma(gamma: f64, prev: Option<f64>, eps: f64, beta: f64) -> Result<()> {
    let upper = if beta > 0.0 { (1.0 - eps) / beta } else { f64::INFINITY };
    if gamma < eps - 1e-15 || gamma > upper * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "step {gamma} leaves the admissible interval [{eps}, {upper}]"
        )));
    }
    if let Some(p) = prev {
        if gamma < p - 1e-15 {
            return Err(Error::Config(format!(
                "step sequence must be nondecreasing, got {gamma} after {p}"
            )));
        }
    }
    Ok(())
}

pub type ObjectiveFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;
pub type GapFn<'a> = Box<dyn Fn(&[f64], &DualVector) -> f64 + 'a>;

/// Read-only evaluation hooks invoked once per log record.
#[derive(Default)]
pub struct Callbacks<'a> {
    /// Primal objective at the current iterate.
    pub objective: Option<ObjectiveFn<'a>>,
    /// Gap evaluated at the last iterates, or at the ergodic averages when
    /// the config asks for them.
    pub gap: Option<GapFn<'a>>,
    /// Reference primal solution for distances and RMSE stopping.
    pub reference: Option<&'a [f64]>,
    /// Reference dual solution for the bound checker.
    pub reference_dual: Option<&'a DualVector>,
}

#[derive(Debug)]
pub struct SolveResult {
    pub state: IterateState,
    pub log: ConvergenceLog,
    /// True when the RMSE stop rule fired before `max_iters`.
    pub converged: bool,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.state.iter
    }
}

/// Ergodic averages `(1/N) sum p_1`, `(1/N) sum p_2` after exactly `n`
/// iterations. Only the running sums are kept, so `n` must equal the number
/// of iterations accumulated in the state; take snapshots during the run
/// for intermediate averages.
pub fn ergodic_average(state: &IterateState, n: usize) -> Result<(PrimalVector, DualVector)> {
    if n == 0 {
        return Err(Error::Config("ergodic average needs n >= 1".into()));
    }
    if n != state.iter {
        return Err(Error::Config(format!(
            "running sums cover {} iterations, cannot average over {n}",
            state.iter
        )));
    }
    let scale = 1.0 / n as f64;
    let x = state.sum_p1.iter().map(|s| s * scale).collect();
    let v = state
        .sum_p2
        .iter()
        .map(|b| b.iter().map(|s| s * scale).collect())
        .collect();
    Ok((PrimalVector::new(x), DualVector::new(v)))
}

fn make_record(
    state: &IterateState,
    config: &SolverConfig,
    callbacks: &Callbacks,
    start: &Instant,
) -> LogRecord {
    let objective = callbacks
        .objective
        .as_ref()
        .map_or(f64::NAN, |f| f(&state.x.data));
    let gap = match &callbacks.gap {
        None => f64::NAN,
        Some(g) => {
            if config.ergodic {
                match ergodic_average(state, state.iter) {
                    Ok((xe, ve)) => g(&xe.data, &ve),
                    Err(_) => f64::NAN, // no prox points yet
                }
            } else {
                g(&state.x.data, &state.v)
            }
        }
    };
    let dist_to_ref = callbacks
        .reference
        .map_or(f64::NAN, |r| dist_sq(&state.x.data, r).unwrap_or(f64::NAN));
    let dist_dual_to_ref = callbacks
        .reference_dual
        .map_or(f64::NAN, |r| state.v.dist_sq(r).unwrap_or(f64::NAN));
    LogRecord {
        iter: state.iter,
        gamma: state.gamma,
        sigma: state.sigma,
        objective,
        gap,
        dist_to_ref,
        residual_primal: state.residual_primal_sq,
        residual_dual: state.residual_dual_sq,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        dist_dual_to_ref,
    }
}

/// Runs the configured variant from `(x0, v0)` (dual defaults to zero).
/// Deterministic for fixed inputs in sequential mode; the log carries one
/// record per iteration boundary, starting with the initial state.
pub fn solve(
    spec: &ProblemSpec,
    config: &SolverConfig,
    x0: PrimalVector,
    v0: Option<DualVector>,
    callbacks: &Callbacks,
) -> Result<SolveResult> {
    let v0 = v0.unwrap_or_else(|| DualVector::zeros(&spec.block_dims()));
    let mut state = IterateState::init(spec, config, x0, v0)?;
    let mut log = ConvergenceLog::default();
    if config.max_iters == 0 {
        return Ok(SolveResult {
            state,
            log,
            converged: false,
        });
    }

    let rho = resolve_rho(spec, config);
    let start = Instant::now();
    log.records.push(make_record(&state, config, callbacks, &start));

    let mut converged = false;
    for n in 0..config.max_iters {
        if config.variant == Variant::Alg1 {
            if let Some(schedule) = &config.gamma_schedule {
                let beta = crate::problem::beta(spec);
                let g = schedule(n);
                validate_alg1_gamma(g, Some(state.gamma), config.epsilon, beta)?;
                state.gamma = g;
            }
        }
        match config.variant {
            Variant::Alg1 => step_alg1(spec, &mut state, config.threads)?,
            Variant::Alg2 => step_alg2(spec, &mut state, rho, config.threads)?,
            Variant::Alg3 => step_alg3(spec, &mut state, config.threads)?,
            Variant::Pd1 => step_pd(spec, &mut state, 0.0)?,
            Variant::Pd2 => step_pd(spec, &mut state, rho)?,
        }
        log.records.push(make_record(&state, config, callbacks, &start));

        if let (Some(reference), Some(tol)) = (callbacks.reference, config.rmse_tol) {
            let rmse = (dist_sq(&state.x.data, reference)? / spec.dim as f64).sqrt();
            if rmse <= tol {
                converged = true;
                break;
            }
        }
    }

    Ok(SolveResult {
        state,
        log,
        converged,
    })
}

#[cfg(test)]
mod tests;

//! Single-iteration updates for the solver variants. All variants share
//! the same state layout; the driver in `mod.rs` owns step-size policy
//! validation and looping.

use crate::error::{Error, Result};
use crate::problem::{DualBlockSpec, ProblemSpec};

use super::IterateState;

/// Output of one dual block update.
struct BlockOut {
    p2: Vec<f64>,
    v_next: Vec<f64>,
    /// `L_i^T (v_i - p2_i)`, consumed by the primal correction.
    adj_diff: Vec<f64>,
    res_sq: f64,
}

/// Runs `f` over the blocks, optionally on one thread per block. Results
/// are collected in block order, so reductions are deterministic either way.
fn map_blocks<T, F>(blocks: &[DualBlockSpec], threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &DualBlockSpec) -> T + Sync,
{
    if threads <= 1 || blocks.len() <= 1 {
        return blocks.iter().enumerate().map(|(i, b)| f(i, b)).collect();
    }
    let fref = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = blocks
            .iter()
            .enumerate()
            .map(|(i, b)| s.spawn(move || fref(i, b)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("block worker")).collect()
    })
}

fn check_finite(state: &IterateState, what: &'static str) -> Result<()> {
    if !state.x.is_finite() || !state.v.is_finite() {
        return Err(Error::Diverged {
            iteration: state.iter,
            what,
        });
    }
    Ok(())
}

/// Shared forward-backward-forward stencil. `gamma_primal` scales the
/// primal prox and correction, `gamma_dual` the dual prox and correction;
/// the plain and fixed-step variants use equal values, the accelerated one
/// a split pair. `use_forward` switches the Lipschitz forward terms of the
/// dual blocks on or off.
pub(super) fn fbf_step(
    spec: &ProblemSpec,
    state: &mut IterateState,
    gamma_primal: f64,
    gamma_dual: f64,
    use_forward: bool,
    threads: usize,
) -> Result<()> {
    let n = spec.dim;
    let x = &state.x.data;

    let grad_x = spec.grad_h.as_ref().map(|g| g.eval(x));

    // w = grad_h(x_n) + sum_i L_i^T v_{i,n} - z
    let adjoints = map_blocks(&spec.blocks, threads, |i, b| b.linop.adjoint(&state.v.blocks[i]));
    let mut w = grad_x.clone().unwrap_or_else(|| vec![0.0; n]);
    for a in &adjoints {
        for (wk, ak) in w.iter_mut().zip(a) {
            *wk += ak;
        }
    }
    for (wk, zk) in w.iter_mut().zip(&spec.z.data) {
        *wk -= zk;
    }

    let arg: Vec<f64> = x.iter().zip(&w).map(|(xk, wk)| xk - gamma_primal * wk).collect();
    let p1 = spec.prox_f.eval(&arg, gamma_primal);
    if p1.len() != n {
        return Err(Error::dim("primal prox output", n, p1.len()));
    }

    let diff_p1x: Vec<f64> = p1.iter().zip(x).map(|(p, xk)| p - xk).collect();

    let outs: Vec<Result<BlockOut>> = map_blocks(&spec.blocks, threads, |i, block| {
        let v_i = &state.v.blocks[i];
        let fwd_v = match (&block.forward, use_forward) {
            (Some(fm), true) => Some(fm.eval(v_i)),
            _ => None,
        };
        let lx = block.linop.apply(x);
        let mut arg2 = Vec::with_capacity(v_i.len());
        for k in 0..v_i.len() {
            let fwd = fwd_v.as_ref().map_or(0.0, |f| f[k]);
            arg2.push(v_i[k] + gamma_dual * (lx[k] - fwd - block.shift[k]));
        }
        let p2 = block.prox_g_conj.eval(&arg2, gamma_dual);
        if p2.len() != v_i.len() {
            return Err(Error::dim("dual prox output", v_i.len(), p2.len()));
        }
        let fwd_p2 = match (&block.forward, use_forward) {
            (Some(fm), true) => Some(fm.eval(&p2)),
            _ => None,
        };
        let l_diff = block.linop.apply(&diff_p1x);
        let mut v_next = Vec::with_capacity(v_i.len());
        for k in 0..v_i.len() {
            let fwd_term = match (&fwd_v, &fwd_p2) {
                (Some(a), Some(b)) => a[k] - b[k],
                _ => 0.0,
            };
            v_next.push(gamma_dual * l_diff[k] + gamma_dual * fwd_term + p2[k]);
        }
        let vmind: Vec<f64> = v_i.iter().zip(&p2).map(|(a, b)| a - b).collect();
        let adj_diff = block.linop.adjoint(&vmind);
        let res_sq = vmind.iter().map(|d| d * d).sum();
        Ok(BlockOut {
            p2,
            v_next,
            adj_diff,
            res_sq,
        })
    });

    let mut block_outs = Vec::with_capacity(outs.len());
    for o in outs {
        block_outs.push(o?);
    }

    // x_{n+1} = gamma * sum_i L_i^T (v_i - p2_i) + gamma * (grad_h(x) - grad_h(p1)) + p1
    let grad_p1 = spec.grad_h.as_ref().map(|g| g.eval(&p1));
    let mut x_next = p1.clone();
    for out in &block_outs {
        for (xk, ak) in x_next.iter_mut().zip(&out.adj_diff) {
            *xk += gamma_primal * ak;
        }
    }
    if let (Some(gx), Some(gp)) = (&grad_x, &grad_p1) {
        for k in 0..n {
            x_next[k] += gamma_primal * (gx[k] - gp[k]);
        }
    }

    state.residual_primal_sq = diff_p1x.iter().map(|d| d * d).sum();
    state.residual_dual_sq = block_outs.iter().map(|o| o.res_sq).sum();

    for (sum, p) in state.sum_p1.iter_mut().zip(&p1) {
        *sum += p;
    }
    for (i, out) in block_outs.iter().enumerate() {
        for (sum, p) in state.sum_p2[i].iter_mut().zip(&out.p2) {
            *sum += p;
        }
    }

    state.x.data = x_next;
    for (i, out) in block_outs.into_iter().enumerate() {
        state.v.blocks[i] = out.v_next;
        state.p2.blocks[i] = out.p2;
    }
    state.p1.data = p1;
    state.iter += 1;
    check_finite(state, "iterate")
}

/// Plain scheme: equal step sizes, forward terms active. The step size for
/// iteration `n` must already be in `state.gamma`.
pub fn step_alg1(spec: &ProblemSpec, state: &mut IterateState, threads: usize) -> Result<()> {
    let gamma = state.gamma;
    state.sigma = gamma;
    fbf_step(spec, state, gamma, gamma, true, threads)
}

/// Accelerated scheme for strongly monotone primal parts: split step pair
/// `(gamma_n, sigma_n)`, no forward terms, then the step-size recursion
/// `theta_n = 1 / sqrt(1 + 2 rho gamma_n (1 - gamma_n))`,
/// `gamma_{n+1} = theta_n gamma_n`, `sigma_{n+1} = sigma_n / theta_n`.
pub fn step_alg2(spec: &ProblemSpec, state: &mut IterateState, rho: f64, threads: usize) -> Result<()> {
    if spec.blocks.iter().any(|b| b.forward.is_some()) {
        return Err(Error::Unsupported(
            "accelerated variant requires all dual forward parts to be zero".into(),
        ));
    }
    let gamma = state.gamma;
    let sigma = state.sigma;
    fbf_step(spec, state, gamma, sigma, false, threads)?;
    let theta = 1.0 / (1.0 + 2.0 * rho * gamma * (1.0 - gamma)).sqrt();
    state.theta = theta;
    state.gamma = theta * gamma;
    state.sigma = sigma / theta;
    Ok(())
}

/// Fixed-step scheme for problems whose primal and dual parts are all
/// strongly monotone; contracts geometrically. Uses `state.gamma` as the
/// constant step and keeps the forward terms.
pub fn step_alg3(spec: &ProblemSpec, state: &mut IterateState, threads: usize) -> Result<()> {
    let gamma = state.gamma;
    state.sigma = gamma;
    fbf_step(spec, state, gamma, gamma, true, threads)
}

/// Primal-dual baseline step with extrapolation; `accel_rho > 0` switches
/// on the accelerated step-size update. Requires a single dual block and a
/// prox for the full primal function.
pub fn step_pd(spec: &ProblemSpec, state: &mut IterateState, accel_rho: f64) -> Result<()> {
    if spec.blocks.len() != 1 {
        return Err(Error::Unsupported(format!(
            "primal-dual baseline supports exactly one dual block, got {}",
            spec.blocks.len()
        )));
    }
    let prox_primal = spec.prox_primal_full.as_ref().ok_or_else(|| {
        Error::Unsupported("primal-dual baseline needs prox_primal_full on the problem spec".into())
    })?;
    let block = &spec.blocks[0];
    let tau = state.gamma;
    let sigma = state.sigma;
    let theta = if accel_rho > 0.0 {
        1.0 / (1.0 + 2.0 * accel_rho * tau).sqrt()
    } else {
        1.0
    };

    let xbar = state.xbar.as_ref().expect("pd state carries xbar").clone();
    let lxbar = block.linop.apply(&xbar);
    let v = &state.v.blocks[0];
    let arg: Vec<f64> = (0..v.len())
        .map(|k| v[k] + sigma * (lxbar[k] - block.shift[k]))
        .collect();
    let v_next = block.prox_g_conj.eval(&arg, sigma);
    if v_next.len() != v.len() {
        return Err(Error::dim("dual prox output", v.len(), v_next.len()));
    }

    let adj = block.linop.adjoint(&v_next);
    let arg: Vec<f64> = state
        .x
        .data
        .iter()
        .zip(&adj)
        .map(|(xk, ak)| xk - tau * ak)
        .collect();
    let x_next = prox_primal.eval(&arg, tau);
    if x_next.len() != spec.dim {
        return Err(Error::dim("primal prox output", spec.dim, x_next.len()));
    }

    let xbar_next: Vec<f64> = x_next
        .iter()
        .zip(&state.x.data)
        .map(|(xn, xo)| xn + theta * (xn - xo))
        .collect();

    state.residual_primal_sq = x_next
        .iter()
        .zip(&state.x.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    state.residual_dual_sq = v_next
        .iter()
        .zip(&state.v.blocks[0])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    for (sum, p) in state.sum_p1.iter_mut().zip(&x_next) {
        *sum += p;
    }
    for (sum, p) in state.sum_p2[0].iter_mut().zip(&v_next) {
        *sum += p;
    }

    state.p1.data = x_next.clone();
    state.p2.blocks[0] = v_next.clone();
    state.x.data = x_next;
    state.v.blocks[0] = v_next;
    state.xbar = Some(xbar_next);
    state.theta = theta;
    if accel_rho > 0.0 {
        state.gamma = theta * tau;
        state.sigma = sigma / theta;
    }
    state.iter += 1;
    check_finite(state, "iterate")
}

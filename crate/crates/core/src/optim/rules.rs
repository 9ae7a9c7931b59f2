//! Schedule-based and per-parameter subgradient update rules.
//!
//! These are the building blocks the [`Optimizer`](super::Optimizer) driver
//! composes per layer: plain SGD, the `b/sqrt(k)` decaying schedule,
//! Adagrad, RMSprop, momentum, and the Adam/Adadelta baselines.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Decaying schedule `alpha_k = b / sqrt(k)`.
#[derive(Debug, Clone, Copy)]
pub struct DecaySchedule {
    b: f64,
}

impl DecaySchedule {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidArg(format!("decay bound b must be > 0, got {b}")));
        }
        Ok(DecaySchedule { b })
    }

    pub fn bound(&self) -> f64 {
        self.b
    }
}

/// Learning rate of the decaying schedule at iterate `k` (1-based).
pub fn decay_lr(sched: &DecaySchedule, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArg("decay_lr iterate k must be >= 1".into()));
    }
    Ok(sched.b / (k as f64).sqrt())
}

/// Plain subgradient step `theta - alpha * g`.
pub fn sgd_step(theta: &Tensor, g: &Tensor, alpha: f64) -> Result<Tensor> {
    g.axpy(-alpha, theta)
}

/// Per-parameter state for Adagrad: running sum of squared subgradients.
#[derive(Debug, Clone)]
pub struct AdagradState {
    c: Tensor,
    pub epsilon: f64,
    pub b: f64,
}

impl AdagradState {
    pub const DEFAULT_EPSILON: f64 = 1e-10;

    pub fn new(shape: &[usize], epsilon: f64, b: f64) -> Self {
        AdagradState {
            c: Tensor::zeros(shape),
            epsilon,
            b,
        }
    }

    /// The accumulator C (sum of squared subgradients so far).
    pub fn accumulator(&self) -> &Tensor {
        &self.c
    }

    #[cfg(test)]
    pub(crate) fn with_accumulator(c: Tensor, epsilon: f64, b: f64) -> Self {
        AdagradState { c, epsilon, b }
    }
}

fn check_congruent(state_shape: &[usize], theta: &Tensor, g: &Tensor) -> Result<()> {
    if theta.shape() != g.shape() {
        return Err(Error::ShapeMismatch {
            left: theta.shape().to_vec(),
            right: g.shape().to_vec(),
        });
    }
    if state_shape != theta.shape() {
        return Err(Error::ShapeMismatch {
            left: state_shape.to_vec(),
            right: theta.shape().to_vec(),
        });
    }
    Ok(())
}

/// One Adagrad update with an outer rate `gamma`:
/// `C += g*g`, `a_j = b / sqrt(C_j + eps)`, `theta' = theta - gamma * (a . g)`.
///
/// `gamma = 1` gives plain Adagrad; the Barzilai-Borwein step passes its
/// computed step length instead.
pub fn adagrad_step(
    state: &mut AdagradState,
    theta: &Tensor,
    g: &Tensor,
    gamma: f64,
) -> Result<Tensor> {
    check_congruent(state.c.shape(), theta, g)?;
    if !g.all_finite() {
        return Err(Error::non_finite("adagrad subgradient"));
    }
    if !gamma.is_finite() {
        return Err(Error::non_finite("adagrad rate gamma"));
    }
    let b = state.b;
    let eps = state.epsilon;
    let mut out = theta.clone();
    for ((t, c), &gj) in out
        .data_mut()
        .iter_mut()
        .zip(state.c.data_mut())
        .zip(g.data())
    {
        *c += gj * gj;
        // Zero subgradient entries leave the parameter untouched even when
        // C and eps are both zero.
        if gj != 0.0 {
            *t -= gamma * (b / (*c + eps).sqrt()) * gj;
        }
    }
    Ok(out)
}

/// RMSprop state: exponentially averaged squared subgradients.
#[derive(Debug, Clone)]
pub struct RmspropState {
    c: Tensor,
    pub rho: f64,
    pub epsilon: f64,
    pub b: f64,
}

impl RmspropState {
    pub const DEFAULT_EPSILON: f64 = 1e-8;
    pub const DEFAULT_RHO: f64 = 0.99;

    pub fn new(shape: &[usize], rho: f64, epsilon: f64, b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArg(format!("rmsprop rho must be in [0,1], got {rho}")));
        }
        Ok(RmspropState {
            c: Tensor::zeros(shape),
            rho,
            epsilon,
            b,
        })
    }

    pub fn accumulator(&self) -> &Tensor {
        &self.c
    }
}

/// As [`adagrad_step`] but with the exponential accumulator
/// `C' = rho * C + (1 - rho) * g*g`.
pub fn rmsprop_step(
    state: &mut RmspropState,
    theta: &Tensor,
    g: &Tensor,
    gamma: f64,
) -> Result<Tensor> {
    check_congruent(state.c.shape(), theta, g)?;
    if !g.all_finite() {
        return Err(Error::non_finite("rmsprop subgradient"));
    }
    if !gamma.is_finite() {
        return Err(Error::non_finite("rmsprop rate gamma"));
    }
    let (b, eps, rho) = (state.b, state.epsilon, state.rho);
    let mut out = theta.clone();
    for ((t, c), &gj) in out
        .data_mut()
        .iter_mut()
        .zip(state.c.data_mut())
        .zip(g.data())
    {
        *c = rho * *c + (1.0 - rho) * gj * gj;
        if gj != 0.0 {
            *t -= gamma * (b / (*c + eps).sqrt()) * gj;
        }
    }
    Ok(out)
}

/// Momentum state: running subgradient average `V`.
#[derive(Debug, Clone)]
pub struct MomentumState {
    v: Tensor,
    pub beta: f64,
}

impl MomentumState {
    pub const DEFAULT_BETA: f64 = 0.9;

    pub fn new(shape: &[usize], beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidArg(format!("momentum beta must be in [0,1], got {beta}")));
        }
        Ok(MomentumState {
            v: Tensor::zeros(shape),
            beta,
        })
    }

    pub fn velocity(&self) -> &Tensor {
        &self.v
    }
}

/// Updates the running average: `V' = beta * V + (1 - beta) * g`.
pub fn momentum_update(state: &mut MomentumState, g: &Tensor) -> Result<()> {
    if state.v.shape() != g.shape() {
        return Err(Error::ShapeMismatch {
            left: state.v.shape().to_vec(),
            right: g.shape().to_vec(),
        });
    }
    let beta = state.beta;
    for (v, &gj) in state.v.data_mut().iter_mut().zip(g.data()) {
        *v = beta * *v + (1.0 - beta) * gj;
    }
    Ok(())
}

/// Momentum-accelerated Adagrad step: the running average `V'` replaces the
/// raw subgradient both in the step direction and in the accumulator feed.
pub fn momentum_step(
    mstate: &mut MomentumState,
    astate: &mut AdagradState,
    theta: &Tensor,
    g: &Tensor,
) -> Result<Tensor> {
    momentum_update(mstate, g)?;
    let v = mstate.v.clone();
    adagrad_step(astate, theta, &v, 1.0)
}

/// Adam state: first/second moment estimates and the bias-correction timestep.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Tensor,
    v: Tensor,
    t: u64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub const DEFAULT_ALPHA: f64 = 0.001;
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(shape: &[usize], alpha: f64) -> Self {
        AdamState {
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            t: 0,
            alpha,
            beta1: Self::DEFAULT_BETA1,
            beta2: Self::DEFAULT_BETA2,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }
}

/// Standard bias-corrected Adam update.
pub fn adam_step(state: &mut AdamState, theta: &Tensor, g: &Tensor) -> Result<Tensor> {
    check_congruent(state.m.shape(), theta, g)?;
    if !g.all_finite() {
        return Err(Error::non_finite("adam subgradient"));
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let bc1 = 1.0 - b1.powi(state.t as i32);
    let bc2 = 1.0 - b2.powi(state.t as i32);
    let (alpha, eps) = (state.alpha, state.epsilon);
    let mut out = theta.clone();
    for (((t, m), v), &gj) in out
        .data_mut()
        .iter_mut()
        .zip(state.m.data_mut())
        .zip(state.v.data_mut())
        .zip(g.data())
    {
        *m = b1 * *m + (1.0 - b1) * gj;
        *v = b2 * *v + (1.0 - b2) * gj * gj;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *t -= alpha * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(out)
}

/// Adadelta state: squared-gradient and squared-update running averages.
#[derive(Debug, Clone)]
pub struct AdadeltaState {
    eg2: Tensor,
    edx2: Tensor,
    pub rho: f64,
    pub epsilon: f64,
}

impl AdadeltaState {
    pub const DEFAULT_RHO: f64 = 0.95;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(shape: &[usize]) -> Self {
        AdadeltaState {
            eg2: Tensor::zeros(shape),
            edx2: Tensor::zeros(shape),
            rho: Self::DEFAULT_RHO,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

/// Standard Adadelta update (unit-free adaptive step).
pub fn adadelta_step(state: &mut AdadeltaState, theta: &Tensor, g: &Tensor) -> Result<Tensor> {
    check_congruent(state.eg2.shape(), theta, g)?;
    if !g.all_finite() {
        return Err(Error::non_finite("adadelta subgradient"));
    }
    let (rho, eps) = (state.rho, state.epsilon);
    let mut out = theta.clone();
    for (((t, eg2), edx2), &gj) in out
        .data_mut()
        .iter_mut()
        .zip(state.eg2.data_mut())
        .zip(state.edx2.data_mut())
        .zip(g.data())
    {
        *eg2 = rho * *eg2 + (1.0 - rho) * gj * gj;
        let dx = -((*edx2 + eps).sqrt() / (*eg2 + eps).sqrt()) * gj;
        *edx2 = rho * *edx2 + (1.0 - rho) * dx * dx;
        *t += dx;
    }
    Ok(out)
}

//! Barzilai-Borwein step length and the per-layer BB update.
//!
//! The step length is the least-squares solution of the secant relation
//! between successive parameter and subgradient differences:
//!
//! ```text
//! gamma = (dtheta . dg) / (dg . dg + eps)
//! ```
//!
//! It approximates the inverse magnitude of the local Hessian without ever
//! forming one, and multiplies the inner Adagrad/RMSprop direction at every
//! iterate. The very first iterate has no previous subgradient, so it is
//! bootstrapped with a single Adam step.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::rules::{adagrad_step, adam_step, rmsprop_step, AdagradState, AdamState, RmspropState};

pub const DEFAULT_BB_EPSILON: f64 = 1e-8;
pub const DEFAULT_GAMMA_CAP: f64 = 1e4;

/// Two-point step length: `(dtheta . dg) / (dg . dg + epsilon_bb)`.
///
/// Both tensors are flattened; only element counts must agree. With
/// `epsilon_bb = 0` this is the exact least-squares minimizer of
/// `||dtheta - gamma * dg||`.
pub fn bb_gamma(delta_theta: &Tensor, delta_g: &Tensor, epsilon_bb: f64) -> Result<f64> {
    let num = delta_theta.dot(delta_g)?;
    let den = delta_g.dot(delta_g)? + epsilon_bb;
    Ok(num / den)
}

/// Per-parameter rate accumulator used inside the BB update (Adagrad or
/// RMSprop; the two share the same call signature).
#[derive(Debug, Clone)]
pub enum InnerRate {
    Adagrad(AdagradState),
    Rmsprop(RmspropState),
}

impl InnerRate {
    fn step(&mut self, theta: &Tensor, g: &Tensor, gamma: f64) -> Result<Tensor> {
        match self {
            InnerRate::Adagrad(s) => adagrad_step(s, theta, g, gamma),
            InnerRate::Rmsprop(s) => rmsprop_step(s, theta, g, gamma),
        }
    }

    fn shape(&self) -> &[usize] {
        match self {
            InnerRate::Adagrad(s) => s.accumulator().shape(),
            InnerRate::Rmsprop(s) => s.accumulator().shape(),
        }
    }
}

/// Optional robustness mode: substitute `gamma = 1` when the two-point
/// estimate is non-positive or exceeds `cap`. Off by default; the faithful
/// mode passes negative and zero estimates through unmodified.
#[derive(Debug, Clone, Copy)]
pub struct Safeguard {
    pub cap: f64,
}

impl Default for Safeguard {
    fn default() -> Self {
        Safeguard {
            cap: DEFAULT_GAMMA_CAP,
        }
    }
}

/// Persistent BB memory for one layer: previous parameters, the last applied
/// update, the previous subgradient, and the inner rate accumulator.
///
/// Parameter and bias tensors of the layer are handled flattened into a
/// single vector; the step length is one scalar per layer.
#[derive(Debug, Clone)]
pub struct BBState {
    theta_old: Tensor,
    delta_theta: Tensor,
    g_old: Tensor,
    inner: InnerRate,
    epsilon_bb: f64,
    bootstrapped: bool,
    safeguard: Option<Safeguard>,
    last_gamma: Option<f64>,
}

impl BBState {
    pub fn new(inner: InnerRate, epsilon_bb: f64, safeguard: Option<Safeguard>) -> Result<Self> {
        if !(epsilon_bb > 0.0) {
            return Err(Error::InvalidArg(format!(
                "epsilon_bb must be > 0, got {epsilon_bb}"
            )));
        }
        let shape = inner.shape().to_vec();
        Ok(BBState {
            theta_old: Tensor::zeros(&shape),
            delta_theta: Tensor::zeros(&shape),
            g_old: Tensor::zeros(&shape),
            inner,
            epsilon_bb,
            bootstrapped: false,
            safeguard,
            last_gamma: None,
        })
    }

    pub fn bootstrapped(&self) -> bool {
        self.bootstrapped
    }

    /// Step length used by the most recent [`bb_step`], if any.
    pub fn last_gamma(&self) -> Option<f64> {
        self.last_gamma
    }

    pub fn delta_theta(&self) -> &Tensor {
        &self.delta_theta
    }

    #[cfg(test)]
    pub(crate) fn for_test(
        theta_old: Tensor,
        delta_theta: Tensor,
        g_old: Tensor,
        inner: InnerRate,
        epsilon_bb: f64,
    ) -> Self {
        BBState {
            theta_old,
            delta_theta,
            g_old,
            inner,
            epsilon_bb,
            bootstrapped: true,
            safeguard: None,
            last_gamma: None,
        }
    }
}

/// First iterate: a single standard Adam step (rate 0.001, decays 0.9/0.999,
/// eps 1e-8) that populates the BB memory. The inner accumulator is left
/// untouched.
pub fn bootstrap_step(state: &mut BBState, theta: &Tensor, g: &Tensor) -> Result<Tensor> {
    if state.bootstrapped {
        return Err(Error::InvalidArg(
            "bootstrap_step called on an already-bootstrapped state".into(),
        ));
    }
    let mut adam = AdamState::new(theta.shape(), AdamState::DEFAULT_ALPHA);
    let theta_new = adam_step(&mut adam, theta, g)?;
    state.delta_theta = theta_new.sub(theta)?;
    state.theta_old = theta_new.clone();
    state.g_old = g.clone();
    state.bootstrapped = true;
    Ok(theta_new)
}

/// One Barzilai-Borwein iterate for a layer:
///
/// 1. `dg = g_new - g_old`
/// 2. `gamma = (dtheta . dg) / (dg . dg + eps)`
/// 3. inner Adagrad/RMSprop step on `theta` with rate `gamma`
/// 4. `dtheta = theta_new - theta_old`
///
/// `theta` must be the current parameters (equal to the snapshot recorded by
/// the previous step). Returns the updated parameters.
pub fn bb_step(state: &mut BBState, g_new: &Tensor, theta: &Tensor) -> Result<Tensor> {
    if !state.bootstrapped {
        return Err(Error::InvalidArg(
            "bb_step called before bootstrap_step".into(),
        ));
    }
    let delta_g = g_new.sub(&state.g_old)?;
    let mut gamma = bb_gamma(&state.delta_theta, &delta_g, state.epsilon_bb)?;
    if !gamma.is_finite() {
        return Err(Error::non_finite("barzilai-borwein gamma"));
    }
    if let Some(sg) = state.safeguard {
        if gamma <= 0.0 || gamma > sg.cap {
            gamma = 1.0;
        }
    }
    let theta_new = state.inner.step(theta, g_new, gamma)?;
    state.delta_theta = theta_new.sub(theta)?;
    state.theta_old = theta_new.clone();
    state.g_old = g_new.clone();
    state.last_gamma = Some(gamma);
    Ok(theta_new)
}

/// Result of [`bb_descent`].
#[derive(Debug, Clone)]
pub struct DescentResult {
    pub theta: Tensor,
    pub iterations: usize,
    pub converged: bool,
}

/// Pure Barzilai-Borwein gradient descent on full gradients:
/// `theta' = theta - gamma * g` with the two-point step length and no inner
/// per-parameter rates. The first step uses the fixed rate `alpha0`.
///
/// Used for deterministic convergence studies on smooth problems.
pub fn bb_descent<F>(
    grad: F,
    theta0: Tensor,
    alpha0: f64,
    grad_tol: f64,
    max_iters: usize,
) -> DescentResult
where
    F: Fn(&Tensor) -> Tensor,
{
    let mut theta = theta0;
    let mut prev: Option<(Tensor, Tensor)> = None; // (delta_theta, g_old)
    for k in 0..=max_iters {
        let g = grad(&theta);
        if g.norm() < grad_tol {
            return DescentResult {
                theta,
                iterations: k,
                converged: true,
            };
        }
        if k == max_iters {
            break;
        }
        let gamma = match &prev {
            None => alpha0,
            Some((dt, g_old)) => {
                let dg = g.sub(g_old).expect("congruent shapes");
                let den = dg.dot(&dg).expect("congruent shapes");
                if den == 0.0 {
                    break;
                }
                dt.dot(&dg).expect("congruent shapes") / den
            }
        };
        if !gamma.is_finite() {
            break;
        }
        let theta_new = g.axpy(-gamma, &theta).expect("congruent shapes");
        prev = Some((theta_new.sub(&theta).expect("congruent shapes"), g));
        theta = theta_new;
    }
    DescentResult {
        theta,
        iterations: max_iters,
        converged: false,
    }
}

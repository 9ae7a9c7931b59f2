//! Optimizer suite: decaying schedules, per-parameter adaptive rates, the
//! Barzilai-Borwein step, and baseline methods, plus the per-layer driver
//! used by the training loop.

mod bb;
mod rules;

pub use bb::{
    bb_descent, bb_gamma, bb_step, bootstrap_step, BBState, DescentResult, InnerRate, Safeguard,
    DEFAULT_BB_EPSILON, DEFAULT_GAMMA_CAP,
};
pub use rules::{
    adadelta_step, adagrad_step, adam_step, decay_lr, momentum_step, momentum_update, rmsprop_step,
    sgd_step, AdadeltaState, AdagradState, AdamState, DecaySchedule, MomentumState, RmspropState,
};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Decay,
    Adagrad,
    Rmsprop,
    Momentum,
    Adam,
    Adadelta,
    BbAdagrad,
    BbRmsprop,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 9] = [
        OptimizerKind::Sgd,
        OptimizerKind::Decay,
        OptimizerKind::Adagrad,
        OptimizerKind::Rmsprop,
        OptimizerKind::Momentum,
        OptimizerKind::Adam,
        OptimizerKind::Adadelta,
        OptimizerKind::BbAdagrad,
        OptimizerKind::BbRmsprop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Decay => "decay",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::Rmsprop => "rmsprop",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adadelta => "adadelta",
            OptimizerKind::BbAdagrad => "bb-adagrad",
            OptimizerKind::BbRmsprop => "bb-rmsprop",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        OptimizerKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown optimizer '{name}'")))
    }
}

/// Plain key-value optimizer configuration.
///
/// `epsilon` and `rho` apply to the inner accumulator of the selected method
/// (Adagrad or RMSprop); `bb_epsilon` guards the denominator of the
/// Barzilai-Borwein ratio.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// Base rate b.
    pub b: f64,
    /// Accumulator epsilon (kind-dependent default).
    pub epsilon: f64,
    /// RMSprop decay.
    pub rho: f64,
    /// Momentum averaging weight.
    pub beta: f64,
    /// Denominator guard of the BB ratio.
    pub bb_epsilon: f64,
    /// Substitute gamma = 1 outside (0, gamma_cap] (off by default).
    pub safeguard: bool,
    pub gamma_cap: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        let epsilon = match kind {
            OptimizerKind::Rmsprop | OptimizerKind::BbRmsprop => RmspropState::DEFAULT_EPSILON,
            _ => AdagradState::DEFAULT_EPSILON,
        };
        OptimizerConfig {
            kind,
            b: 0.001,
            epsilon,
            rho: RmspropState::DEFAULT_RHO,
            beta: MomentumState::DEFAULT_BETA,
            bb_epsilon: DEFAULT_BB_EPSILON,
            safeguard: false,
            gamma_cap: DEFAULT_GAMMA_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::Config(format!("base rate b must be > 0, got {}", self.b)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config("rho must be in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config("beta must be in [0,1]".into()));
        }
        if !(self.bb_epsilon > 0.0) {
            return Err(Error::Config("bb epsilon must be > 0".into()));
        }
        Ok(())
    }

    fn safeguard(&self) -> Option<Safeguard> {
        self.safeguard.then_some(Safeguard {
            cap: self.gamma_cap,
        })
    }
}

enum LayerState {
    Stateless,
    Adagrad(AdagradState),
    Rmsprop(RmspropState),
    Momentum {
        v: MomentumState,
        a: AdagradState,
    },
    Adam(AdamState),
    Adadelta(AdadeltaState),
    Bb(BBState),
}

/// Drives one update rule over the layers of a model. Parameters and
/// gradients arrive flattened per layer (weights and biases concatenated);
/// every layer carries its own independent state, and for the BB methods its
/// own scalar step length.
pub struct Optimizer {
    config: OptimizerConfig,
    states: Vec<Option<LayerState>>,
    iterate: u64,
}

impl Optimizer {
    /// `layer_param_lens[i]` is the flattened parameter count of layer i
    /// (zero for parameterless layers).
    pub fn new(config: OptimizerConfig, layer_param_lens: &[usize]) -> Result<Self> {
        config.validate()?;
        let states = layer_param_lens
            .iter()
            .map(|&len| {
                if len == 0 {
                    return Ok(None);
                }
                let shape = [len];
                let state = match config.kind {
                    OptimizerKind::Sgd | OptimizerKind::Decay => LayerState::Stateless,
                    OptimizerKind::Adagrad => {
                        LayerState::Adagrad(AdagradState::new(&shape, config.epsilon, config.b))
                    }
                    OptimizerKind::Rmsprop => LayerState::Rmsprop(RmspropState::new(
                        &shape,
                        config.rho,
                        config.epsilon,
                        config.b,
                    )?),
                    OptimizerKind::Momentum => LayerState::Momentum {
                        v: MomentumState::new(&shape, config.beta)?,
                        a: AdagradState::new(&shape, config.epsilon, config.b),
                    },
                    OptimizerKind::Adam => LayerState::Adam(AdamState::new(&shape, config.b)),
                    OptimizerKind::Adadelta => LayerState::Adadelta(AdadeltaState::new(&shape)),
                    OptimizerKind::BbAdagrad => LayerState::Bb(BBState::new(
                        InnerRate::Adagrad(AdagradState::new(&shape, config.epsilon, config.b)),
                        config.bb_epsilon,
                        config.safeguard(),
                    )?),
                    OptimizerKind::BbRmsprop => LayerState::Bb(BBState::new(
                        InnerRate::Rmsprop(RmspropState::new(
                            &shape,
                            config.rho,
                            config.epsilon,
                            config.b,
                        )?),
                        config.bb_epsilon,
                        config.safeguard(),
                    )?),
                };
                Ok(Some(state))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Optimizer {
            config,
            states,
            iterate: 0,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Minibatch iterates applied so far.
    pub fn iterate(&self) -> u64 {
        self.iterate
    }

    /// BB step lengths of the most recent iterate, one per layer (None for
    /// parameterless layers and non-BB methods).
    pub fn last_gammas(&self) -> Vec<Option<f64>> {
        self.states
            .iter()
            .map(|s| match s {
                Some(LayerState::Bb(bb)) => bb.last_gamma(),
                _ => None,
            })
            .collect()
    }

    /// Applies one iterate: updates every layer's flattened parameters in
    /// place from the matching flattened gradients.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::CountMismatch {
                left: self.states.len(),
                right: params.len().min(grads.len()),
            });
        }
        self.iterate += 1;
        let k = self.iterate;
        for ((state, theta), g) in self.states.iter_mut().zip(params.iter_mut()).zip(grads) {
            let Some(state) = state else {
                continue;
            };
            let updated = match state {
                LayerState::Stateless => {
                    let alpha = match self.config.kind {
                        OptimizerKind::Sgd => self.config.b,
                        _ => decay_lr(&DecaySchedule::new(self.config.b)?, k)?,
                    };
                    sgd_step(theta, g, alpha)?
                }
                LayerState::Adagrad(s) => adagrad_step(s, theta, g, 1.0)?,
                LayerState::Rmsprop(s) => rmsprop_step(s, theta, g, 1.0)?,
                LayerState::Momentum { v, a } => momentum_step(v, a, theta, g)?,
                LayerState::Adam(s) => adam_step(s, theta, g)?,
                LayerState::Adadelta(s) => adadelta_step(s, theta, g)?,
                LayerState::Bb(bb) => {
                    if bb.bootstrapped() {
                        bb_step(bb, g, theta)?
                    } else {
                        bootstrap_step(bb, theta, g)?
                    }
                }
            };
            *theta = updated;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
        Tensor::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in OptimizerKind::ALL {
            assert_eq!(OptimizerKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(OptimizerKind::parse("nadam").is_err());
    }

    #[test]
    fn parameterless_layers_are_skipped() {
        let cfg = OptimizerConfig::new(OptimizerKind::BbAdagrad);
        let mut opt = Optimizer::new(cfg, &[3, 0, 2]).unwrap();
        let mut params = vec![
            Tensor::from_vec(vec![1.0, 2.0, 3.0]),
            Tensor::zeros(&[0]),
            Tensor::from_vec(vec![4.0, 5.0]),
        ];
        let grads = vec![
            Tensor::from_vec(vec![0.1, 0.1, 0.1]),
            Tensor::zeros(&[0]),
            Tensor::from_vec(vec![0.2, 0.2]),
        ];
        opt.step(&mut params, &grads).unwrap();
        assert_eq!(params[1].len(), 0);
        assert_ne!(params[0].data()[0], 1.0);
    }

    #[test]
    fn per_layer_gammas_independent_of_other_layers() {
        // running two layers together must give the same per-layer gamma
        // sequences as running each alone
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g_seq: Vec<[Tensor; 2]> = (0..6)
            .map(|_| [random_tensor(&mut rng, 4), random_tensor(&mut rng, 7)])
            .collect();

        let cfg = OptimizerConfig::new(OptimizerKind::BbAdagrad);
        let mut joint = Optimizer::new(cfg.clone(), &[4, 7]).unwrap();
        let mut p_joint = vec![
            Tensor::from_vec(vec![0.5; 4]),
            Tensor::from_vec(vec![-0.25; 7]),
        ];
        let mut joint_gammas = Vec::new();
        for g in &g_seq {
            joint.step(&mut p_joint, &[g[0].clone(), g[1].clone()]).unwrap();
            joint_gammas.push(joint.last_gammas());
        }

        for layer in 0..2 {
            let mut solo = Optimizer::new(cfg.clone(), &[g_seq[0][layer].len()]).unwrap();
            let mut p = vec![if layer == 0 {
                Tensor::from_vec(vec![0.5; 4])
            } else {
                Tensor::from_vec(vec![-0.25; 7])
            }];
            for (i, g) in g_seq.iter().enumerate() {
                solo.step(&mut p, &[g[layer].clone()]).unwrap();
                let solo_gamma = solo.last_gammas()[0];
                let joint_gamma = joint_gammas[i][layer];
                assert_eq!(solo_gamma, joint_gamma, "layer {layer} step {i}");
            }
            assert_eq!(p[0], p_joint[layer], "layer {layer} final params");
        }
    }

    #[test]
    fn adagrad_accumulator_monotone_over_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = OptimizerConfig::new(OptimizerKind::Adagrad);
        let mut opt = Optimizer::new(cfg, &[10]).unwrap();
        let mut params = vec![random_tensor(&mut rng, 10)];
        let mut prev = vec![0.0; 10];
        for _ in 0..20 {
            let g = vec![random_tensor(&mut rng, 10)];
            opt.step(&mut params, &g).unwrap();
            let Some(LayerState::Adagrad(s)) = &opt.states[0] else {
                unreachable!()
            };
            for (c, p) in s.accumulator().data().iter().zip(&prev) {
                assert!(c >= p);
            }
            prev = s.accumulator().data().to_vec();
        }
    }

    #[test]
    fn trajectories_bit_identical_across_runs() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let cfg = OptimizerConfig::new(OptimizerKind::BbRmsprop);
            let mut opt = Optimizer::new(cfg, &[8]).unwrap();
            let mut params = vec![random_tensor(&mut rng, 8)];
            for _ in 0..25 {
                let g = vec![random_tensor(&mut rng, 8)];
                opt.step(&mut params, &g).unwrap();
            }
            params[0].data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn decay_matches_schedule() {
        let mut cfg = OptimizerConfig::new(OptimizerKind::Decay);
        cfg.b = 0.02;
        let mut opt = Optimizer::new(cfg, &[1]).unwrap();
        let mut params = vec![Tensor::from_vec(vec![1.0])];
        let g = vec![Tensor::from_vec(vec![1.0])];
        opt.step(&mut params, &g).unwrap(); // k=1: alpha=0.02
        opt.step(&mut params, &g).unwrap(); // k=2
        opt.step(&mut params, &g).unwrap(); // k=3
        opt.step(&mut params, &g).unwrap(); // k=4: alpha=0.01
        let expect = 1.0 - 0.02 - 0.02 / 2f64.sqrt() - 0.02 / 3f64.sqrt() - 0.01;
        assert!((params[0].data()[0] - expect).abs() < 1e-15);
    }
}

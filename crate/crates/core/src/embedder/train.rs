use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{accumulate_gradients, should_stop, sparse_loss, EmbeddingModel};
use crate::error::{Error, Result};
use crate::measurement::TrainingPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Hyperparameters of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Context size used when the pairs were built. Recorded, not used by the loop.
    pub n: usize,
    pub dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stopping threshold on the ratio of the latest to the largest
    /// validation-loss decrease.
    pub tau: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n: 4,
            dim: 2,
            learning_rate: 0.05,
            batch_size: 256,
            max_epochs: 1000,
            tau: 0.1,
            seed: 0,
            optimizer: Optimizer::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n = {} must be >= 2", self.n));
        }
        if !(2..=3).contains(&self.dim) {
            return Err(Error::InvalidDimension(self.dim));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".to_string());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".to_string());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau {} must lie in (0, 1)", self.tau));
        }
        if let Optimizer::Adam {
            beta1,
            beta2,
            epsilon,
        } = self.optimizer
        {
            if !(0.0..1.0).contains(&beta1)
                || !(0.0..1.0).contains(&beta2)
                || epsilon.is_nan()
                || epsilon <= 0.0
            {
                return bad(
                    "adam betas must lie in [0, 1) and epsilon must be positive".to_string()
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Criterion,
    MaxEpochs,
    NonFinite,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Criterion => "criterion",
            StopReason::MaxEpochs => "max_epochs",
            StopReason::NonFinite => "non_finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
}

impl TrainLog {
    pub fn val_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|r| r.val_loss).collect()
    }

    /// Epoch at which training stopped (0 if none completed).
    pub fn stop_epoch(&self) -> usize {
        self.epochs.last().map_or(0, |r| r.epoch)
    }
}

/// Mean cross entropy of `model` over `pairs`.
pub(crate) fn mean_loss(model: &EmbeddingModel, pairs: &[TrainingPair]) -> f64 {
    let mut out = vec![0.0; model.landmark_count()];
    let total: f64 = pairs
        .iter()
        .map(|p| {
            model.forward_into(p.input_index(), &mut out);
            sparse_loss(&out, p.context())
        })
        .sum();
    total / pairs.len() as f64
}

struct AdamState {
    m_in: Vec<f64>,
    v_in: Vec<f64>,
    m_out: Vec<f64>,
    v_out: Vec<f64>,
    t: i32,
}

/// Trains a freshly initialized model; see [`train_from`].
pub fn train(
    pairs_train: &[TrainingPair],
    pairs_val: &[TrainingPair],
    config: &TrainConfig,
) -> Result<(EmbeddingModel, TrainLog)> {
    let landmarks = pairs_train
        .first()
        .ok_or(Error::EmptyDataset)?
        .landmark_count();
    let model = EmbeddingModel::init(landmarks, config.dim, config.seed)?;
    train_from(model, pairs_train, pairs_val, config)
}

/// Mini-batch training from a given initial model.
///
/// Each epoch shuffles the training pairs with a generator seeded from
/// `config.seed`, steps once per batch on the mean batch loss, and then
/// evaluates the mean validation loss. Training ends when [`should_stop`]
/// fires, after `max_epochs`, or when a loss or weight turns non-finite; in
/// the last case the model from the last finite epoch is returned.
pub fn train_from(
    mut model: EmbeddingModel,
    pairs_train: &[TrainingPair],
    pairs_val: &[TrainingPair],
    config: &TrainConfig,
) -> Result<(EmbeddingModel, TrainLog)> {
    config.validate()?;
    if pairs_train.is_empty() || pairs_val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim,
            actual: model.dim(),
        });
    }
    let landmarks = model.landmark_count();
    if let Some(p) = pairs_train
        .iter()
        .chain(pairs_val)
        .find(|p| p.landmark_count() != landmarks)
    {
        return Err(Error::DimensionMismatch {
            expected: landmarks,
            actual: p.landmark_count(),
        });
    }

    let n_params = landmarks * config.dim;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..pairs_train.len()).collect();

    let mut g_in = vec![0.0; n_params];
    let mut g_out = vec![0.0; n_params];
    let mut step_in = vec![0.0; n_params];
    let mut step_out = vec![0.0; n_params];
    let mut output = vec![0.0; landmarks];
    let mut adam = match config.optimizer {
        Optimizer::Adam { .. } => Some(AdamState {
            m_in: vec![0.0; n_params],
            v_in: vec![0.0; n_params],
            m_out: vec![0.0; n_params],
            v_out: vec![0.0; n_params],
            t: 0,
        }),
        Optimizer::Sgd => None,
    };

    let mut epochs = Vec::new();
    let mut val_losses = Vec::new();
    let stop_reason = 'epochs: loop {
        let epoch = epochs.len() + 1;
        let started = Instant::now();
        let snapshot = model.clone();
        order.shuffle(&mut shuffle_rng);

        let mut train_total = 0.0;
        for batch in order.chunks(config.batch_size) {
            g_in.iter_mut().for_each(|v| *v = 0.0);
            g_out.iter_mut().for_each(|v| *v = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let pair = &pairs_train[i];
                let l = pair.input_index();
                model.forward_into(l, &mut output);
                train_total += sparse_loss(&output, pair.context());
                // output becomes the error signal p - t
                for &(j, t) in pair.context() {
                    output[j] -= t;
                }
                accumulate_gradients(&model, l, &output, scale, &mut g_in, &mut g_out);
            }

            match (&mut adam, config.optimizer) {
                (
                    Some(state),
                    Optimizer::Adam {
                        beta1,
                        beta2,
                        epsilon,
                    },
                ) => {
                    state.t += 1;
                    let bc1 = 1.0 - beta1.powi(state.t);
                    let bc2 = 1.0 - beta2.powi(state.t);
                    let lr = config.learning_rate;
                    let blocks = [
                        (&g_in, &mut state.m_in, &mut state.v_in, &mut step_in),
                        (&g_out, &mut state.m_out, &mut state.v_out, &mut step_out),
                    ];
                    for (g, m, v, step) in blocks {
                        for i in 0..g.len() {
                            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                            step[i] = lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + epsilon);
                        }
                    }
                }
                _ => {
                    for (s, g) in step_in.iter_mut().zip(&g_in) {
                        *s = config.learning_rate * g;
                    }
                    for (s, g) in step_out.iter_mut().zip(&g_out) {
                        *s = config.learning_rate * g;
                    }
                }
            }
            model.apply_update(&step_in, &step_out);

            if !train_total.is_finite() || !model.is_finite() {
                model = snapshot;
                break 'epochs StopReason::NonFinite;
            }
        }

        let val_loss = mean_loss(&model, pairs_val);
        if !val_loss.is_finite() {
            model = snapshot;
            break StopReason::NonFinite;
        }
        val_losses.push(val_loss);
        epochs.push(EpochRecord {
            epoch,
            train_loss: train_total / pairs_train.len() as f64,
            val_loss,
            wall_seconds: started.elapsed().as_secs_f64(),
        });

        if epoch >= 2 && should_stop(&val_losses, config.tau)? {
            break StopReason::Criterion;
        }
        if epoch >= config.max_epochs {
            break StopReason::MaxEpochs;
        }
    };

    Ok((
        model,
        TrainLog {
            epochs,
            stop_reason,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::{backward, forward, init_model, loss};

    fn ring_pairs(landmarks: usize, count: usize) -> Vec<TrainingPair> {
        (0..count)
            .map(|i| {
                let l = i % landmarks;
                let prev = (l + landmarks - 1) % landmarks;
                let next = (l + 1) % landmarks;
                let w = 0.3 + 0.4 * ((i / landmarks) % 2) as f64;
                TrainingPair::new(l, landmarks, vec![(prev, w), (next, 1.0 - w)]).unwrap()
            })
            .collect()
    }

    #[test]
    fn one_epoch_bound() {
        let pairs = ring_pairs(6, 60);
        let config = TrainConfig {
            max_epochs: 1,
            ..TrainConfig::default()
        };
        let (_, log) = train(&pairs, &pairs[..10], &config).unwrap();
        assert_eq!(log.epochs.len(), 1);
        assert_eq!(log.epochs[0].epoch, 1);
        assert_eq!(log.stop_reason, StopReason::MaxEpochs);
    }

    #[test]
    fn deterministic_under_seed() {
        let pairs = ring_pairs(8, 400);
        let config = TrainConfig {
            max_epochs: 20,
            batch_size: 16,
            learning_rate: 0.5,
            seed: 11,
            ..TrainConfig::default()
        };
        let (m1, l1) = train(&pairs[..300], &pairs[300..], &config).unwrap();
        let (m2, l2) = train(&pairs[..300], &pairs[300..], &config).unwrap();
        assert_eq!(m1, m2);
        let strip = |l: &TrainLog| -> Vec<(usize, u64, u64)> {
            l.epochs
                .iter()
                .map(|r| (r.epoch, r.train_loss.to_bits(), r.val_loss.to_bits()))
                .collect()
        };
        assert_eq!(strip(&l1), strip(&l2));
        assert_eq!(l1.stop_reason, l2.stop_reason);
    }

    #[test]
    fn training_reduces_validation_loss() {
        let pairs = ring_pairs(8, 800);
        for optimizer in [Optimizer::Sgd, Optimizer::adam()] {
            let config = TrainConfig {
                max_epochs: 30,
                batch_size: 32,
                learning_rate: if optimizer == Optimizer::Sgd {
                    1.0
                } else {
                    0.02
                },
                tau: 0.01,
                optimizer,
                ..TrainConfig::default()
            };
            let (_, log) = train(&pairs[..600], &pairs[600..], &config).unwrap();
            let losses = log.val_losses();
            assert!(
                losses.last().unwrap() < &losses[0],
                "{optimizer:?}: {losses:?}"
            );
        }
    }

    #[test]
    fn single_sgd_step_reduces_pair_loss() {
        let model = init_model(5, 2, 3).unwrap();
        let pair = TrainingPair::new(1, 5, vec![(0, 0.5), (2, 0.5)]).unwrap();
        let before = loss(&forward(&model, 1).unwrap(), &pair.target()).unwrap();
        let g = backward(&model, &pair).unwrap();
        let mut stepped = model.clone();
        let d_in: Vec<f64> = g.w_in.iter().map(|v| 1e-4 * v).collect();
        let d_out: Vec<f64> = g.w_out.iter().map(|v| 1e-4 * v).collect();
        stepped.apply_update(&d_in, &d_out);
        let after = loss(&forward(&stepped, 1).unwrap(), &pair.target()).unwrap();
        assert!(after < before);
    }

    #[test]
    fn diverging_run_returns_last_finite_model() {
        let pairs = ring_pairs(6, 120);
        let config = TrainConfig {
            learning_rate: 1e300,
            batch_size: 4,
            max_epochs: 5,
            ..TrainConfig::default()
        };
        let init = init_model(6, 2, 0).unwrap();
        let (model, log) = train_from(init.clone(), &pairs, &pairs, &config).unwrap();
        assert_eq!(log.stop_reason, StopReason::NonFinite);
        assert!(model.is_finite());
        assert!(log.epochs.is_empty());
        assert_eq!(model, init);
    }

    #[test]
    fn rejects_empty_and_mismatched_inputs() {
        let pairs = ring_pairs(6, 12);
        let config = TrainConfig::default();
        assert_eq!(
            train(&[], &pairs, &config).unwrap_err(),
            Error::EmptyDataset
        );
        assert_eq!(
            train(&pairs, &[], &config).unwrap_err(),
            Error::EmptyDataset
        );
        let other = ring_pairs(5, 5);
        assert!(train(&pairs, &other, &config).is_err());
        let bad = TrainConfig {
            tau: 1.0,
            ..TrainConfig::default()
        };
        assert!(train(&pairs, &pairs, &bad).is_err());
    }
}

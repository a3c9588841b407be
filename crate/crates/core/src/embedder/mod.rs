//! The `L -> d -> L` butterfly network.
//!
//! A one-hot landmark index selects row `l` of the input-side weights
//! (`w_in`, `L x d`). That row is the linear, bias-free bottleneck activation
//! and, after training, the landmark's coordinates. The output layer
//! (`w_out`, `d x L`) produces one logit per landmark, followed by softmax.
//! Training minimizes the cross entropy against the soft context targets
//! built by [`crate::measurement`].

mod stopping;
mod train;

pub use stopping::should_stop;
pub use train::{train, train_from, EpochRecord, Optimizer, StopReason, TrainConfig, TrainLog};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measurement::{LandmarkMap, TrainingPair};

/// Weights of the embedding network. No bias terms exist.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    landmarks: usize,
    dim: usize,
    /// Row-major `L x d`; row `l` is the embedding of landmark `l`.
    w_in: Vec<f64>,
    /// Row-major `d x L`.
    w_out: Vec<f64>,
}

/// Gradients of the cross-entropy loss, laid out like the model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_in: Vec<f64>,
    pub w_out: Vec<f64>,
}

fn check_shape(landmarks: usize, dim: usize) -> Result<()> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidDimension(dim));
    }
    if landmarks < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 landmarks, got {landmarks}"
        )));
    }
    Ok(())
}

impl EmbeddingModel {
    /// Seeded initialization: every weight i.i.d. uniform on `[-0.5/d, 0.5/d]`.
    pub fn init(landmarks: usize, dim: usize, seed: u64) -> Result<Self> {
        check_shape(landmarks, dim)?;
        let bound = 0.5 / dim as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |count: usize| -> Vec<f64> {
            (0..count)
                .map(|_| rng.random_range(-bound..=bound))
                .collect()
        };
        let w_in = draw(landmarks * dim);
        let w_out = draw(dim * landmarks);
        Ok(Self {
            landmarks,
            dim,
            w_in,
            w_out,
        })
    }

    /// Builds a model from explicit row-major weights.
    pub fn from_weights(
        landmarks: usize,
        dim: usize,
        w_in: Vec<f64>,
        w_out: Vec<f64>,
    ) -> Result<Self> {
        check_shape(landmarks, dim)?;
        if w_in.len() != landmarks * dim {
            return Err(Error::DimensionMismatch {
                expected: landmarks * dim,
                actual: w_in.len(),
            });
        }
        if w_out.len() != dim * landmarks {
            return Err(Error::DimensionMismatch {
                expected: dim * landmarks,
                actual: w_out.len(),
            });
        }
        let model = Self {
            landmarks,
            dim,
            w_in,
            w_out,
        };
        if !model.is_finite() {
            return Err(Error::InvalidConfig(
                "model weights must be finite".to_string(),
            ));
        }
        Ok(model)
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w_in(&self) -> &[f64] {
        &self.w_in
    }

    pub fn w_out(&self) -> &[f64] {
        &self.w_out
    }

    /// Bottleneck activation for one-hot input `l`, i.e. row `l` of `w_in`.
    pub fn bottleneck(&self, l: usize) -> Result<&[f64]> {
        self.check_index(l)?;
        Ok(&self.w_in[l * self.dim..(l + 1) * self.dim])
    }

    pub fn is_finite(&self) -> bool {
        self.w_in.iter().chain(&self.w_out).all(|v| v.is_finite())
    }

    fn check_index(&self, l: usize) -> Result<()> {
        if l >= self.landmarks {
            return Err(Error::IndexOutOfRange {
                index: l,
                landmarks: self.landmarks,
            });
        }
        Ok(())
    }

    /// Logits for input `l` written into `out` (length `L`).
    fn logits_into(&self, l: usize, out: &mut [f64]) {
        let h = &self.w_in[l * self.dim..(l + 1) * self.dim];
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &hk) in h.iter().enumerate() {
            let row = &self.w_out[k * self.landmarks..(k + 1) * self.landmarks];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += hk * w;
            }
        }
    }

    /// Softmax output for input `l` written into `out`.
    pub(crate) fn forward_into(&self, l: usize, out: &mut [f64]) {
        self.logits_into(l, out);
        softmax_in_place(out);
    }

    /// Subtracts precomputed steps from both weight blocks.
    pub(crate) fn apply_update(&mut self, d_in: &[f64], d_out: &[f64]) {
        for (w, d) in self.w_in.iter_mut().zip(d_in) {
            *w -= d;
        }
        for (w, d) in self.w_out.iter_mut().zip(d_out) {
            *w -= d;
        }
    }

    /// Permutes landmark labels: landmark `l` of `self` becomes landmark
    /// `perm[l]` of the result.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let (n, d) = (self.landmarks, self.dim);
        let mut w_in = vec![0.0; n * d];
        let mut w_out = vec![0.0; d * n];
        for (l, &p) in perm.iter().enumerate() {
            w_in[p * d..(p + 1) * d].copy_from_slice(&self.w_in[l * d..(l + 1) * d]);
            for k in 0..d {
                w_out[k * n + p] = self.w_out[k * n + l];
            }
        }
        Self {
            landmarks: n,
            dim: d,
            w_in,
            w_out,
        }
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// Seeded model initialization; see [`EmbeddingModel::init`].
pub fn init_model(landmarks: usize, dim: usize, seed: u64) -> Result<EmbeddingModel> {
    EmbeddingModel::init(landmarks, dim, seed)
}

/// Softmax output distribution for one-hot input `input_index`.
pub fn forward(model: &EmbeddingModel, input_index: usize) -> Result<Vec<f64>> {
    model.check_index(input_index)?;
    let mut out = vec![0.0; model.landmarks];
    model.forward_into(input_index, &mut out);
    Ok(out)
}

/// Cross entropy `-sum_j t_j ln(p_j)`, skipping terms where `t_j = 0`.
pub fn loss(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            actual: output.len(),
        });
    }
    Ok(output
        .iter()
        .zip(target)
        .filter(|(_, &t)| t != 0.0)
        .map(|(&p, &t)| -t * p.ln())
        .sum())
}

/// Cross entropy against a sparse target.
pub(crate) fn sparse_loss(output: &[f64], context: &[(usize, f64)]) -> f64 {
    context.iter().map(|&(j, t)| -t * output[j].ln()).sum()
}

/// Exact gradients of `loss(forward(model, pair.input), pair.target)`.
///
/// The output-layer error signal is `p - t`; only row `pair.input_index()`
/// of the `w_in` gradient is nonzero.
pub fn backward(model: &EmbeddingModel, pair: &TrainingPair) -> Result<Gradients> {
    if pair.landmark_count() != model.landmarks {
        return Err(Error::DimensionMismatch {
            expected: model.landmarks,
            actual: pair.landmark_count(),
        });
    }
    let l = pair.input_index();
    let mut delta = forward(model, l)?;
    for &(j, t) in pair.context() {
        delta[j] -= t;
    }
    let mut grads = Gradients {
        w_in: vec![0.0; model.landmarks * model.dim],
        w_out: vec![0.0; model.dim * model.landmarks],
    };
    accumulate_gradients(model, l, &delta, 1.0, &mut grads.w_in, &mut grads.w_out);
    Ok(grads)
}

/// Adds `scale *` the gradient contribution of one example (input `l`,
/// output error `delta`) into the accumulators.
pub(crate) fn accumulate_gradients(
    model: &EmbeddingModel,
    l: usize,
    delta: &[f64],
    scale: f64,
    g_in: &mut [f64],
    g_out: &mut [f64],
) {
    let (n, d) = (model.landmarks, model.dim);
    let h = &model.w_in[l * d..(l + 1) * d];
    for k in 0..d {
        let row = &model.w_out[k * n..(k + 1) * n];
        let g_row = &mut g_out[k * n..(k + 1) * n];
        let mut dh = 0.0;
        for j in 0..n {
            g_row[j] += scale * h[k] * delta[j];
            dh += row[j] * delta[j];
        }
        g_in[l * d + k] += scale * dh;
    }
}

/// Reads the landmark map off the trained model: landmark `l` sits at row
/// `l` of `w_in`.
pub fn extract_map(model: &EmbeddingModel) -> LandmarkMap {
    let coords = model
        .w_in
        .chunks(model.dim)
        .map(|row| row.to_vec())
        .collect();
    LandmarkMap::new(model.dim, coords).expect("model weights are finite with d in {2, 3}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_range_and_determinism() {
        let a = init_model(6, 2, 1).unwrap();
        assert_eq!(a.w_in().len(), 12);
        assert_eq!(a.w_out().len(), 12);
        assert!(a.w_in().iter().chain(a.w_out()).all(|v| v.abs() <= 0.25));
        assert_eq!(a, init_model(6, 2, 1).unwrap());
        assert_ne!(a, init_model(6, 2, 2).unwrap());
        let b = init_model(5, 3, 9).unwrap();
        assert!(b.w_in().iter().all(|v| v.abs() <= 0.5 / 3.0));
    }

    #[test]
    fn init_rejects_bad_shapes() {
        assert_eq!(init_model(6, 1, 0), Err(Error::InvalidDimension(1)));
        assert_eq!(init_model(6, 4, 0), Err(Error::InvalidDimension(4)));
        assert!(init_model(1, 2, 0).is_err());
    }

    #[test]
    fn zero_output_weights_give_uniform() {
        let m = EmbeddingModel::from_weights(4, 2, vec![1.0; 8], vec![0.0; 8]).unwrap();
        let p = forward(&m, 2).unwrap();
        assert!(p.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn hand_evaluated_softmax() {
        // h = [1, 0]; output columns [1,0], [0,0], [-1,0] -> logits [1, 0, -1].
        let w_in = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let w_out = vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0];
        let m = EmbeddingModel::from_weights(3, 2, w_in, w_out).unwrap();
        let p = forward(&m, 0).unwrap();
        let expected = [0.66524, 0.24473, 0.09003];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn forward_rejects_bad_index() {
        let m = init_model(4, 2, 0).unwrap();
        assert_eq!(
            forward(&m, 4),
            Err(Error::IndexOutOfRange {
                index: 4,
                landmarks: 4
            })
        );
    }

    #[test]
    fn loss_values() {
        let l = loss(&[0.5, 0.25, 0.25], &[0.0, 0.5, 0.5]).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);
        let uniform = vec![0.2; 5];
        let l = loss(&uniform, &[0.0, 0.3, 0.0, 0.7, 0.0]).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-12);
        let near_perfect = loss(&[1e-12, 1.0 - 1e-12], &[0.0, 1.0]).unwrap();
        assert!(near_perfect.abs() < 1e-11);
        assert!(loss(&[0.5, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn gradient_vanishes_when_target_equals_output() {
        let m = EmbeddingModel::from_weights(
            3,
            2,
            vec![0.4, -0.1, 0.2, 0.3, -0.5, 0.1],
            vec![0.1, 0.2, -0.3, 0.0, 0.5, -0.2],
        )
        .unwrap();
        // A softmax output is never zero at the input landmark, so a valid
        // pair cannot equal it; exercise the identity on the error signal.
        let p = forward(&m, 0).unwrap();
        let mut g_in = vec![0.0; 6];
        let mut g_out = vec![0.0; 6];
        let delta: Vec<f64> = p.iter().map(|v| v - v).collect();
        accumulate_gradients(&m, 0, &delta, 1.0, &mut g_in, &mut g_out);
        assert!(g_in.iter().chain(&g_out).all(|&v| v == 0.0));
    }

    #[test]
    fn only_input_row_has_gradient() {
        let m = init_model(5, 3, 4).unwrap();
        let pair = TrainingPair::new(2, 5, vec![(0, 0.25), (4, 0.75)]).unwrap();
        let g = backward(&m, &pair).unwrap();
        for l in 0..5 {
            let row = &g.w_in[l * 3..(l + 1) * 3];
            if l == 2 {
                assert!(row.iter().any(|&v| v != 0.0));
            } else {
                assert!(row.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn extract_map_reads_rows() {
        let mut w_in = vec![0.0; 8];
        w_in[6] = 1.5;
        w_in[7] = -2.0;
        let m = EmbeddingModel::from_weights(4, 2, w_in, vec![0.0; 8]).unwrap();
        let map = extract_map(&m);
        assert_eq!(map.point(3), &[1.5, -2.0]);
        for l in 0..4 {
            assert_eq!(map.point(l), m.bottleneck(l).unwrap());
        }
    }

    #[test]
    fn permuted_model_permutes_outputs() {
        let m = init_model(4, 2, 3).unwrap();
        let perm = [2, 0, 3, 1];
        let pm = m.permuted(&perm);
        for l in 0..4 {
            let p = forward(&m, l).unwrap();
            let q = forward(&pm, perm[l]).unwrap();
            for j in 0..4 {
                assert!((p[j] - q[perm[j]]).abs() < 1e-15);
            }
        }
    }
}

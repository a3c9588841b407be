//! Analytic gradients against central finite differences.

use landmark2vec::{backward, forward, loss, EmbeddingModel, TrainingPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-6;

fn pair_loss(model: &EmbeddingModel, pair: &TrainingPair) -> f64 {
    loss(&forward(model, pair.input_index()).unwrap(), &pair.target()).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, l: usize, d: usize) -> EmbeddingModel {
    // Wider than the init range so softmax is far from uniform.
    let mut draw = |k: usize| {
        (0..k)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect::<Vec<f64>>()
    };
    let w_in = draw(l * d);
    let w_out = draw(d * l);
    EmbeddingModel::from_weights(l, d, w_in, w_out).unwrap()
}

fn random_pair(rng: &mut ChaCha8Rng, l: usize) -> TrainingPair {
    let input = rng.random_range(0..l);
    let mut others: Vec<usize> = (0..l).filter(|&j| j != input).collect();
    let keep = rng.random_range(1..=others.len());
    // partial Fisher-Yates
    for i in 0..keep {
        let j = rng.random_range(i..others.len());
        others.swap(i, j);
    }
    let raw: Vec<f64> = (0..keep).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let context = others[..keep]
        .iter()
        .zip(&raw)
        .map(|(&j, &w)| (j, w / total))
        .collect();
    TrainingPair::new(input, l, context).unwrap()
}

fn central_difference(
    model: &EmbeddingModel,
    pair: &TrainingPair,
    which_in: bool,
    idx: usize,
) -> f64 {
    let (l, d) = (model.landmark_count(), model.dim());
    let eval = |delta: f64| {
        let mut w_in = model.w_in().to_vec();
        let mut w_out = model.w_out().to_vec();
        if which_in {
            w_in[idx] += delta;
        } else {
            w_out[idx] += delta;
        }
        pair_loss(
            &EmbeddingModel::from_weights(l, d, w_in, w_out).unwrap(),
            pair,
        )
    };
    (eval(STEP) - eval(-STEP)) / (2.0 * STEP)
}

#[test]
fn backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let l = rng.random_range(2..=8);
        let d = rng.random_range(2..=3);
        let model = random_model(&mut rng, l, d);
        let pair = random_pair(&mut rng, l);
        let g = backward(&model, &pair).unwrap();
        for (i, &a) in g.w_in.iter().enumerate() {
            let err = (a - central_difference(&model, &pair, true, i)).abs();
            worst = worst.max(err);
            assert!(err <= TOL, "w_in[{i}] off by {err} (L={l}, d={d})");
        }
        for (i, &a) in g.w_out.iter().enumerate() {
            let err = (a - central_difference(&model, &pair, false, i)).abs();
            worst = worst.max(err);
            assert!(err <= TOL, "w_out[{i}] off by {err} (L={l}, d={d})");
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn small_step_against_gradient_lowers_pair_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let l = rng.random_range(2..=8);
        let d = rng.random_range(2..=3);
        let model = random_model(&mut rng, l, d);
        let pair = random_pair(&mut rng, l);
        let g = backward(&model, &pair).unwrap();
        let step = |w: &[f64], dw: &[f64]| -> Vec<f64> {
            w.iter().zip(dw).map(|(a, b)| a - 1e-4 * b).collect()
        };
        let next = EmbeddingModel::from_weights(
            l,
            d,
            step(model.w_in(), &g.w_in),
            step(model.w_out(), &g.w_out),
        )
        .unwrap();
        assert!(pair_loss(&next, &pair) < pair_loss(&model, &pair));
    }
}

#![allow(clippy::needless_range_loop)]

use landmark2vec::simgen::{generate, PathlossParams, Region, SignalModel};
use landmark2vec::{
    build_dataset, extract_map, forward, init_model, make_layout, split, train, train_from, Layout,
    TrainConfig, TrainingPair,
};

fn circle_pairs(landmarks: usize, count: usize, seed: u64) -> Vec<TrainingPair> {
    let map = make_layout(&Layout::circle(landmarks, 5.0)).unwrap();
    let model = SignalModel::Pathloss(PathlossParams::uniform(landmarks, 20.0, 3.0, 2.0, 0.5));
    let set = generate(&map, count, &Region::around(&map, 0.1), &model, seed).unwrap();
    build_dataset(&set, 4).unwrap().pairs
}

fn relabel(pair: &TrainingPair, perm: &[usize]) -> TrainingPair {
    let context = pair.context().iter().map(|&(j, t)| (perm[j], t)).collect();
    TrainingPair::new(perm[pair.input_index()], pair.landmark_count(), context).unwrap()
}

fn config() -> TrainConfig {
    TrainConfig {
        dim: 2,
        learning_rate: 1.0,
        batch_size: 32,
        max_epochs: 4,
        tau: 1e-6,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn relabeled_problem_gives_relabeled_map() {
    let pairs = circle_pairs(8, 2000, 1);
    let (tr, va) = split(&pairs, 0.8, 2).unwrap();
    let perm = [3, 0, 7, 5, 1, 6, 2, 4];
    let tr_p: Vec<TrainingPair> = tr.iter().map(|p| relabel(p, &perm)).collect();
    let va_p: Vec<TrainingPair> = va.iter().map(|p| relabel(p, &perm)).collect();
    let cfg = config();
    let init = init_model(8, 2, 9).unwrap();

    let (a, log_a) = train_from(init.clone(), &tr, &va, &cfg).unwrap();
    let (b, log_b) = train_from(init.permuted(&perm), &tr_p, &va_p, &cfg).unwrap();
    assert_eq!(log_a.stop_epoch(), log_b.stop_epoch());

    let (ma, mb) = (extract_map(&a), extract_map(&b));
    for l in 0..8 {
        for k in 0..2 {
            let (x, y) = (ma.point(l)[k], mb.point(perm[l])[k]);
            assert!((x - y).abs() <= 1e-9, "landmark {l} axis {k}: {x} vs {y}");
        }
    }
}

#[test]
fn same_seed_same_bits() {
    let pairs = circle_pairs(6, 1500, 4);
    let (tr, va) = split(&pairs, 0.8, 1).unwrap();
    let (a, la) = train(&tr, &va, &config()).unwrap();
    let (b, lb) = train(&tr, &va, &config()).unwrap();
    assert_eq!(a, b);
    assert_eq!(la.val_losses(), lb.val_losses());
}

#[test]
fn bottleneck_rows_are_the_map() {
    let pairs = circle_pairs(6, 1500, 5);
    let (tr, va) = split(&pairs, 0.8, 1).unwrap();
    let (model, _) = train(&tr, &va, &config()).unwrap();
    let map = extract_map(&model);
    assert_eq!(map.len(), 6);
    for l in 0..6 {
        assert_eq!(model.bottleneck(l).unwrap(), map.point(l));
        let p = forward(&model, l).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0));
    }
}

//! Reconstructs a 30-landmark circle from simulated pathloss scans and
//! prints the error report.
//!
//! cargo run --release -p landmark2vec --example circle [seed]

use landmark2vec::simgen::{generate, PathlossParams, Region, SignalModel};
use landmark2vec::{build_dataset, evaluate, extract_map, make_layout, split, train};
use landmark2vec::{Layout, TrainConfig};

fn main() -> Result<(), landmark2vec::Error> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);

    let truth = make_layout(&Layout::circle(30, 10.0))?;
    let signal = SignalModel::Pathloss(PathlossParams::uniform(30, 20.0, 3.0, 2.0, 0.5));
    let scans = generate(&truth, 100_000, &Region::around(&truth, 0.1), &signal, seed)?;

    let data = build_dataset(&scans, 6)?;
    let (tr, va) = split(&data.pairs, 0.8, seed)?;
    let config = TrainConfig {
        n: 6,
        learning_rate: 1.0,
        batch_size: 16,
        seed,
        ..TrainConfig::default()
    };
    let (model, log) = train(&tr, &va, &config)?;
    for r in &log.epochs {
        println!(
            "epoch {:3}  train {:.4}  val {:.4}",
            r.epoch, r.train_loss, r.val_loss
        );
    }

    let report = evaluate(&truth, &extract_map(&model))?;
    println!("stopped: {}", log.stop_reason.as_str());
    println!(
        "ssme {:.4}  normalized {:.5}",
        report.ssme, report.ssme_normalized
    );
    if let Some(score) = report.cyclic_order_score {
        println!("cyclic order {score:.3}");
    }
    Ok(())
}

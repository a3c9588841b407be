//! Unsupervised reconstruction of landmark maps from unlabeled measurements.
//!
//! Each measurement is the vector of signal strengths an agent observes from
//! `L` landmarks at one unknown location. Treating the strongest landmark as
//! a "center word" and the next strongest ones as its "context", a shallow
//! `L -> d -> L` softmax network is trained skip-gram style; the input-side
//! weights of the `d`-neuron linear bottleneck are then the landmark
//! coordinates, up to an unknown affine frame.
//!
//! ```
//! use landmark2vec::{
//!     build_dataset, extract_map, make_layout, simgen, split, ssme, train,
//!     Layout, TrainConfig,
//! };
//!
//! let truth = make_layout(&Layout::circle(8, 10.0)).unwrap();
//! let region = simgen::Region::around(&truth, 0.1);
//! let params = simgen::PathlossParams::uniform(8, 20.0, 3.0, 2.0, 0.5);
//! let set = simgen::gen_pathloss(&truth, 2_000, &region, &params, 1).unwrap();
//!
//! let data = build_dataset(&set, 3).unwrap();
//! let (train_pairs, val_pairs) = split(&data.pairs, 0.8, 1).unwrap();
//! let config = TrainConfig { n: 3, max_epochs: 5, ..TrainConfig::default() };
//! let (model, log) = train(&train_pairs, &val_pairs, &config).unwrap();
//!
//! let estimate = extract_map(&model);
//! assert_eq!(estimate.len(), 8);
//! assert!(log.epochs.len() <= 5);
//! assert!(ssme(&truth, &estimate).unwrap() >= 0.0);
//! ```

pub mod embedder;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod measurement;
pub mod simgen;

pub use embedder::{
    backward, extract_map, forward, init_model, loss, should_stop, train, train_from,
    EmbeddingModel, Gradients, Optimizer, StopReason, TrainConfig, TrainLog,
};
pub use error::{Error, Result};
pub use evaluation::{
    cyclic_order_score, evaluate, fit_affine, ssme, wcl_agent, wcl_landmarks, AffineFit,
    EvaluationReport,
};
pub use measurement::{
    build_dataset, build_pair, split, Dataset, LandmarkMap, MeasurementSet, MeasurementVector,
    PairBuilder, TrainingPair,
};
pub use simgen::{make_layout, Layout, LayoutKind};

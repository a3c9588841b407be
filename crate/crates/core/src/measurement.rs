//! Measurement and map types, and the conversion of raw measurement vectors
//! into skip-gram style training pairs.
//!
//! A measurement is the vector of `L` signal weights an agent observes at one
//! (unknown) location. Weights are nonnegative and monotone in proximity:
//! larger means closer or stronger. Raw RSS in dBm must be converted to a
//! linear scale before it enters this module (see [`crate::simgen`]).
//!
//! Each measurement becomes exactly one [`TrainingPair`]: the strongest
//! landmark is the input, and the next `n - 1` strongest landmarks, weighted
//! by their normalized signal, form a soft target distribution.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// One measurement: the signal weight observed from each landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    /// Validates and wraps a vector of signal weights.
    ///
    /// Requires at least two entries, all finite and nonnegative, and at least
    /// one strictly positive entry.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidMeasurement(format!(
                "need at least 2 landmarks, got {}",
                values.len()
            )));
        }
        if let Some((l, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidMeasurement(format!(
                "entry {l} is {v}; weights must be finite and >= 0"
            )));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidMeasurement(
                "all entries are zero".to_string(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of strictly positive entries.
    pub fn support(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }
}

/// An ordered collection of measurements over `L` landmarks, optionally with
/// the ground-truth position at which each one was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    landmarks: usize,
    measurements: Vec<MeasurementVector>,
    coords: Option<Vec<Vec<f64>>>,
}

impl MeasurementSet {
    pub fn new(landmarks: usize, measurements: Vec<MeasurementVector>) -> Result<Self> {
        if let Some(m) = measurements.iter().find(|m| m.len() != landmarks) {
            return Err(Error::DimensionMismatch {
                expected: landmarks,
                actual: m.len(),
            });
        }
        Ok(Self {
            landmarks,
            measurements,
            coords: None,
        })
    }

    /// Attaches ground-truth coordinates, one point per measurement.
    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.measurements.len() {
            return Err(Error::DimensionMismatch {
                expected: self.measurements.len(),
                actual: coords.len(),
            });
        }
        if let Some(first) = coords.first() {
            let dim = first.len();
            if !(2..=3).contains(&dim) {
                return Err(Error::InvalidDimension(dim));
            }
            if let Some(c) = coords.iter().find(|c| c.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.len(),
                });
            }
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn measurements(&self) -> &[MeasurementVector] {
        &self.measurements
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    /// Dimension of the ground-truth coordinates, if any are attached.
    pub fn coord_dim(&self) -> Option<usize> {
        self.coords
            .as_ref()
            .and_then(|c| c.first())
            .map(|c| c.len())
    }
}

/// Input landmark plus soft target distribution over the other landmarks.
///
/// The target is stored sparsely as `(landmark, probability)` entries sorted
/// by landmark index; every landmark not listed has probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    input_index: usize,
    landmarks: usize,
    context: Vec<(usize, f64)>,
}

impl TrainingPair {
    /// Builds a pair from explicit parts, checking the pair invariants.
    pub fn new(
        input_index: usize,
        landmarks: usize,
        mut context: Vec<(usize, f64)>,
    ) -> Result<Self> {
        if input_index >= landmarks {
            return Err(Error::IndexOutOfRange {
                index: input_index,
                landmarks,
            });
        }
        context.sort_by_key(|&(j, _)| j);
        if context.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasurement(
                "duplicate landmark in target".to_string(),
            ));
        }
        for &(j, p) in &context {
            if j >= landmarks {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    landmarks,
                });
            }
            if j == input_index {
                return Err(Error::InvalidMeasurement(
                    "target puts mass on the input landmark".to_string(),
                ));
            }
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidMeasurement(format!(
                    "target probability {p} for landmark {j}"
                )));
            }
        }
        let total: f64 = context.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasurement(format!(
                "target sums to {total}, expected 1"
            )));
        }
        Ok(Self {
            input_index,
            landmarks,
            context,
        })
    }

    pub fn input_index(&self) -> usize {
        self.input_index
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks
    }

    /// Nonzero target entries, sorted by landmark index.
    pub fn context(&self) -> &[(usize, f64)] {
        &self.context
    }

    /// The target as a dense length-`L` probability vector.
    pub fn target(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.landmarks];
        for &(j, p) in &self.context {
            t[j] = p;
        }
        t
    }

    /// The input as a dense one-hot vector.
    pub fn input_one_hot(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.landmarks];
        u[self.input_index] = 1.0;
        u
    }
}

/// Builds training pairs for a fixed landmark count and context size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairBuilder {
    landmarks: usize,
    n: usize,
}

impl PairBuilder {
    pub fn new(landmarks: usize, n: usize) -> Result<Self> {
        if landmarks < 2 || n < 2 || n > landmarks {
            return Err(Error::InvalidN { n, landmarks });
        }
        Ok(Self { landmarks, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Converts one measurement into a pair, or `None` when fewer than two
    /// landmarks are heard (there is no context to predict).
    ///
    /// The `n` strongest entries are kept with ties going to the lower
    /// landmark index. The strongest becomes the input; the remaining kept
    /// entries that are strictly positive are renormalized into the target.
    pub fn build(&self, m: &MeasurementVector) -> Result<Option<TrainingPair>> {
        let values = m.values();
        if values.len() != self.landmarks {
            return Err(Error::DimensionMismatch {
                expected: self.landmarks,
                actual: values.len(),
            });
        }
        if m.support() < 2 {
            return Ok(None);
        }

        let mut order: Vec<usize> = (0..values.len()).collect();
        // Stable sort keeps lower indices first among equal values.
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

        let input_index = order[0];
        let mut context: Vec<(usize, f64)> = order[1..self.n]
            .iter()
            .copied()
            .filter(|&j| values[j] > 0.0)
            .map(|j| (j, values[j]))
            .collect();
        let total: f64 = context.iter().map(|&(_, v)| v).sum();
        for entry in &mut context {
            entry.1 /= total;
        }
        context.sort_by_key(|&(j, _)| j);

        Ok(Some(TrainingPair {
            input_index,
            landmarks: self.landmarks,
            context,
        }))
    }
}

/// Converts a single measurement into a training pair using context size `n`.
///
/// ```
/// use landmark2vec::{build_pair, MeasurementVector};
///
/// let m = MeasurementVector::new(vec![1.0, 2.0, 8.0, 4.0, 3.0, 1.0]).unwrap();
/// let pair = build_pair(&m, 4).unwrap().unwrap();
/// assert_eq!(pair.input_index(), 2);
/// assert_eq!(pair.target(), vec![0.0, 2.0 / 9.0, 0.0, 4.0 / 9.0, 3.0 / 9.0, 0.0]);
/// ```
pub fn build_pair(m: &MeasurementVector, n: usize) -> Result<Option<TrainingPair>> {
    PairBuilder::new(m.len(), n)?.build(m)
}

/// Training pairs built from a measurement set, with the number of
/// measurements that were skipped for lack of context.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<TrainingPair>,
    pub skipped: usize,
}

/// Builds one pair per measurement, preserving order and dropping
/// measurements that hear fewer than two landmarks.
pub fn build_dataset(set: &MeasurementSet, n: usize) -> Result<Dataset> {
    let builder = PairBuilder::new(set.landmark_count(), n)?;
    let built: Vec<Option<TrainingPair>> = set
        .measurements()
        .par_iter()
        .map(|m| builder.build(m))
        .collect::<Result<_>>()?;
    let total = built.len();
    let pairs: Vec<TrainingPair> = built.into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let skipped = total - pairs.len();
    Ok(Dataset { pairs, skipped })
}

/// Shuffles deterministically under `seed` and partitions into
/// `(train, validation)`.
///
/// The training share is `floor(train_fraction * len)`, clamped so that both
/// partitions hold at least one item.
pub fn split<T: Clone>(items: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    if items.len() < 2 {
        return Err(Error::TooFewPairs(items.len()));
    }
    let n = items.len();
    let n_train = ((train_fraction * n as f64).floor() as usize).clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let train = order[..n_train].iter().map(|&i| items[i].clone()).collect();
    let validation = order[n_train..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, validation))
}

/// Landmark coordinates in a `d`-dimensional frame, with landmark labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMap {
    dim: usize,
    ids: Vec<usize>,
    coords: Vec<Vec<f64>>,
}

impl LandmarkMap {
    /// Builds a map labelled `0..L`.
    pub fn new(dim: usize, coords: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..coords.len()).collect();
        Self::with_ids(dim, ids, coords)
    }

    pub fn with_ids(dim: usize, ids: Vec<usize>, coords: Vec<Vec<f64>>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if ids.len() != coords.len() {
            return Err(Error::DimensionMismatch {
                expected: coords.len(),
                actual: ids.len(),
            });
        }
        for c in &coords {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasurement(
                    "landmark coordinate is not finite".to_string(),
                ));
            }
        }
        Ok(Self { dim, ids, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn point(&self, l: usize) -> &[f64] {
        &self.coords[l]
    }

    /// Centroid of all landmark positions.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in &self.coords {
            for (acc, v) in c.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let n = self.coords.len().max(1) as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Sum of squared distances of the landmarks from their centroid.
    pub fn total_variance(&self) -> f64 {
        let c = self.centroid();
        self.coords
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Applies `x -> A x + b` to every landmark.
    pub fn transformed(&self, a: &[Vec<f64>], b: &[f64]) -> Self {
        let coords = self
            .coords
            .iter()
            .map(|p| {
                (0..self.dim)
                    .map(|r| (0..self.dim).map(|c| a[r][c] * p[c]).sum::<f64>() + b[r])
                    .collect()
            })
            .collect();
        Self {
            dim: self.dim,
            ids: self.ids.clone(),
            coords,
        }
    }
}

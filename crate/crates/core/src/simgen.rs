//! Synthetic measurement generation.
//!
//! Two observation models are provided:
//!
//! * log-distance pathloss, `P = P_T - 10 n log10(d) + eta` in dBm with
//!   Gaussian shadowing `eta`, converted to linear milliwatts
//!   `10^(P/10)` so that weights are positive and grow with proximity;
//! * inverse-linear (camera-like apparent size), `m = s / d + eta`, clamped
//!   at zero.
//!
//! Distances are floored at `d0`. Agent positions are drawn uniformly from a
//! [`Region`]. Measurement `i` uses its own ChaCha stream, so the output is
//! identical whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measurement::{LandmarkMap, MeasurementSet, MeasurementVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    Circle,
    Grid,
    UniformRandom,
}

impl std::str::FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(LayoutKind::Circle),
            "grid" => Ok(LayoutKind::Grid),
            "uniform_random" => Ok(LayoutKind::UniformRandom),
            other => Err(Error::InvalidConfig(format!(
                "unknown layout '{other}' (expected circle, grid or uniform_random)"
            ))),
        }
    }
}

/// Landmark placement inside a cube/square of side `extent` anchored at the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub kind: LayoutKind,
    pub landmarks: usize,
    pub dim: usize,
    pub extent: f64,
    /// Circle radius; ignored by the other kinds.
    pub radius: f64,
    /// Circle center; defaults to the middle of the extent.
    pub center: Option<Vec<f64>>,
    pub seed: u64,
}

impl Layout {
    pub fn circle(landmarks: usize, radius: f64) -> Self {
        Self {
            kind: LayoutKind::Circle,
            landmarks,
            dim: 2,
            extent: 2.0 * radius,
            radius,
            center: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.landmarks < 2 {
            return Err(Error::InvalidConfig(format!(
                "layout needs at least 2 landmarks, got {}",
                self.landmarks
            )));
        }
        if !(2..=3).contains(&self.dim) {
            return Err(Error::InvalidDimension(self.dim));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "extent {} must be positive",
                self.extent
            )));
        }
        if self.kind == LayoutKind::Circle && !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "radius {} must be positive",
                self.radius
            )));
        }
        if let Some(c) = &self.center {
            if c.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: c.len(),
                });
            }
        }
        Ok(())
    }
}

/// Places the landmarks described by `layout`.
///
/// A circle puts landmark `l` at angle `2 pi l / L` (in the `x-y` plane for
/// 3-D layouts). A grid fills the nearest square (or cube) row by row with
/// cell-centered points. `UniformRandom` draws i.i.d. uniform points under
/// `layout.seed`.
pub fn make_layout(layout: &Layout) -> Result<LandmarkMap> {
    layout.validate()?;
    let (n, dim, ext) = (layout.landmarks, layout.dim, layout.extent);
    let coords: Vec<Vec<f64>> = match layout.kind {
        LayoutKind::Circle => {
            let center = layout
                .center
                .clone()
                .unwrap_or_else(|| vec![ext / 2.0; dim]);
            (0..n)
                .map(|l| {
                    let t = std::f64::consts::TAU * l as f64 / n as f64;
                    let mut p = center.clone();
                    p[0] += layout.radius * t.cos();
                    p[1] += layout.radius * t.sin();
                    p
                })
                .collect()
        }
        LayoutKind::Grid => {
            let side = if dim == 2 {
                (n as f64).sqrt().ceil() as usize
            } else {
                (n as f64).cbrt().ceil() as usize
            };
            let cell = ext / side as f64;
            (0..n)
                .map(|l| {
                    let mut idx = l;
                    (0..dim)
                        .map(|_| {
                            let i = idx % side;
                            idx /= side;
                            (i as f64 + 0.5) * cell
                        })
                        .collect()
                })
                .collect()
        }
        LayoutKind::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(layout.seed);
            (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(0.0..ext)).collect())
                .collect()
        }
    };
    LandmarkMap::new(dim, coords)
}

/// Axis-aligned box from which agent positions are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Region {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                actual: max.len(),
            });
        }
        if min
            .iter()
            .zip(&max)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
        {
            return Err(Error::InvalidConfig(
                "region bounds must satisfy min <= max".to_string(),
            ));
        }
        Ok(Self { min, max })
    }

    /// Bounding box of `map` grown by `margin` times its size on each side.
    /// Flat axes borrow the size of the widest axis.
    pub fn around(map: &LandmarkMap, margin: f64) -> Self {
        let dim = map.dim();
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for p in map.coords() {
            for k in 0..dim {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        let widest = (0..dim).map(|k| max[k] - min[k]).fold(0.0, f64::max);
        let widest = if widest > 0.0 { widest } else { 1.0 };
        for k in 0..dim {
            let size = max[k] - min[k];
            let pad = margin * if size > 0.0 { size } else { widest };
            min[k] -= pad;
            max[k] += pad;
        }
        Self { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(&a, &b)| if a < b { rng.random_range(a..b) } else { a })
            .collect()
    }
}

/// Log-distance pathloss parameters, one transmit power and exponent per
/// landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PathlossParams {
    /// Transmit power `P_T` in dBm.
    pub tx_power: Vec<f64>,
    pub exponent: Vec<f64>,
    /// Shadowing standard deviation in dB.
    pub noise_std: f64,
    /// Distance floor in meters.
    pub d0: f64,
}

impl PathlossParams {
    /// Same transmit power and exponent for every landmark.
    pub fn uniform(
        landmarks: usize,
        tx_power: f64,
        exponent: f64,
        noise_std: f64,
        d0: f64,
    ) -> Self {
        Self {
            tx_power: vec![tx_power; landmarks],
            exponent: vec![exponent; landmarks],
            noise_std,
            d0,
        }
    }

    fn validate(&self, landmarks: usize) -> Result<()> {
        for len in [self.tx_power.len(), self.exponent.len()] {
            if len != landmarks {
                return Err(Error::DimensionMismatch {
                    expected: landmarks,
                    actual: len,
                });
            }
        }
        if self.tx_power.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("tx_power must be finite".to_string()));
        }
        if self.exponent.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::InvalidConfig(
                "pathloss exponent must be positive".to_string(),
            ));
        }
        check_noise_and_floor(self.noise_std, self.d0)
    }
}

/// Inverse-linear (apparent size) parameters, one scale per landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseLinearParams {
    pub scale: Vec<f64>,
    /// Standard deviation of the additive observation noise.
    pub noise_std: f64,
    pub d0: f64,
}

impl InverseLinearParams {
    pub fn uniform(landmarks: usize, scale: f64, noise_std: f64, d0: f64) -> Self {
        Self {
            scale: vec![scale; landmarks],
            noise_std,
            d0,
        }
    }

    fn validate(&self, landmarks: usize) -> Result<()> {
        if self.scale.len() != landmarks {
            return Err(Error::DimensionMismatch {
                expected: landmarks,
                actual: self.scale.len(),
            });
        }
        if self.scale.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidConfig("scale must be positive".to_string()));
        }
        check_noise_and_floor(self.noise_std, self.d0)
    }
}

fn check_noise_and_floor(noise_std: f64, d0: f64) -> Result<()> {
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise_std {noise_std} must be >= 0"
        )));
    }
    if !(d0.is_finite() && d0 > 0.0) {
        return Err(Error::InvalidConfig(format!("d0 {d0} must be positive")));
    }
    Ok(())
}

/// Received power in dBm at distance `d` (before the `d0` floor is applied
/// by the caller) plus a shadowing term already scaled to dB.
pub fn pathloss_dbm(tx_power: f64, exponent: f64, d: f64, shadowing: f64) -> f64 {
    tx_power - 10.0 * exponent * d.log10() + shadowing
}

/// dBm to milliwatts.
pub fn dbm_to_mw(p: f64) -> f64 {
    10f64.powf(p / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalModel {
    Pathloss(PathlossParams),
    InverseLinear(InverseLinearParams),
}

impl SignalModel {
    fn validate(&self, landmarks: usize) -> Result<()> {
        match self {
            SignalModel::Pathloss(p) => p.validate(landmarks),
            SignalModel::InverseLinear(p) => p.validate(landmarks),
        }
    }

    fn observe(&self, distances: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            SignalModel::Pathloss(p) => distances
                .iter()
                .enumerate()
                .map(|(l, &d)| {
                    let eta: f64 = rng.sample::<f64, _>(StandardNormal) * p.noise_std;
                    dbm_to_mw(pathloss_dbm(p.tx_power[l], p.exponent[l], d.max(p.d0), eta))
                })
                .collect(),
            SignalModel::InverseLinear(p) => loop {
                let values: Vec<f64> = distances
                    .iter()
                    .enumerate()
                    .map(|(l, &d)| {
                        let eta: f64 = rng.sample::<f64, _>(StandardNormal) * p.noise_std;
                        (p.scale[l] / d.max(p.d0) + eta).max(0.0)
                    })
                    .collect();
                // Redraw the noise in the (vanishingly rare) case that every
                // observation was clamped to zero.
                if values.iter().any(|&v| v > 0.0) {
                    break values;
                }
            },
        }
    }
}

/// Samples `count` agent positions in `region` and observes every landmark
/// of `map` from each one. Ground-truth positions are stored with the set.
pub fn generate(
    map: &LandmarkMap,
    count: usize,
    region: &Region,
    model: &SignalModel,
    seed: u64,
) -> Result<MeasurementSet> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "measurement count must be >= 1".to_string(),
        ));
    }
    if region.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.dim(),
            actual: region.dim(),
        });
    }
    model.validate(map.len())?;

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let pos = region.sample(&mut rng);
            let distances: Vec<f64> = map
                .coords()
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(&pos)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            (pos, model.observe(&distances, &mut rng))
        })
        .collect();

    let mut coords = Vec::with_capacity(count);
    let mut measurements = Vec::with_capacity(count);
    for (pos, values) in rows {
        coords.push(pos);
        measurements.push(MeasurementVector::new(values)?);
    }
    MeasurementSet::new(map.len(), measurements)?.with_coords(coords)
}

/// Pathloss measurements; see [`generate`].
pub fn gen_pathloss(
    map: &LandmarkMap,
    count: usize,
    region: &Region,
    params: &PathlossParams,
    seed: u64,
) -> Result<MeasurementSet> {
    generate(
        map,
        count,
        region,
        &SignalModel::Pathloss(params.clone()),
        seed,
    )
}

/// Inverse-linear measurements; see [`generate`].
pub fn gen_inverse_linear(
    map: &LandmarkMap,
    count: usize,
    region: &Region,
    params: &InverseLinearParams,
    seed: u64,
) -> Result<MeasurementSet> {
    generate(
        map,
        count,
        region,
        &SignalModel::InverseLinear(params.clone()),
        seed,
    )
}

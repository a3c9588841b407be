//! Ground-truth evaluation of an estimated map, and the supervised weighted
//! centroid baseline.
//!
//! An estimated map is only meaningful up to an unknown affine frame, so the
//! error metric first fits the least-squares affine transform taking the
//! estimate onto the truth and then reports the residual sum of squares
//! (SSME). The linear part is a general `d x d` matrix, so rotations,
//! reflections, scalings and shears are all absorbed.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{LandmarkMap, MeasurementSet, MeasurementVector};

/// Relative eigenvalue threshold below which the centered scatter matrix of
/// the estimated points is treated as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-10;

/// Least-squares affine alignment `true ~= A * est + b` and its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    /// Row-major `d x d`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub ssme: f64,
}

impl AffineFit {
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() + bi)
            .collect()
    }

    /// Sum of squared residuals of this transform on the given maps.
    pub fn residual(&self, true_map: &LandmarkMap, est_map: &LandmarkMap) -> f64 {
        true_map
            .coords()
            .iter()
            .zip(est_map.coords())
            .map(|(c, e)| {
                self.apply(e)
                    .iter()
                    .zip(c)
                    .map(|(p, t)| (t - p) * (t - p))
                    .sum::<f64>()
            })
            .sum()
    }
}

fn check_pair(true_map: &LandmarkMap, est_map: &LandmarkMap) -> Result<()> {
    if true_map.dim() != est_map.dim() {
        return Err(Error::DimensionMismatch {
            expected: true_map.dim(),
            actual: est_map.dim(),
        });
    }
    if true_map.len() != est_map.len() {
        return Err(Error::DimensionMismatch {
            expected: true_map.len(),
            actual: est_map.len(),
        });
    }
    if true_map.len() < true_map.dim() + 1 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} landmarks cannot determine a {}-D affine fit",
            true_map.len(),
            true_map.dim()
        )));
    }
    Ok(())
}

/// Fits the affine map from `est_map` onto `true_map` by least squares.
///
/// Both point sets are centered first, which splits the normal equations of
/// the design matrix `[est^T, 1]` into a `d x d` system for `A` plus
/// `b = mean(true) - A * mean(est)`. The system is solved by Cholesky.
pub fn fit_affine(true_map: &LandmarkMap, est_map: &LandmarkMap) -> Result<AffineFit> {
    check_pair(true_map, est_map)?;
    let d = true_map.dim();
    let n = true_map.len();
    let mu_est = est_map.centroid();
    let mu_true = true_map.centroid();

    let x = DMatrix::from_fn(n, d, |i, k| est_map.point(i)[k] - mu_est[k]);
    let y = DMatrix::from_fn(n, d, |i, k| true_map.point(i)[k] - mu_true[k]);
    let scatter = x.transpose() * &x;
    let cross = x.transpose() * &y;

    let eig = SymmetricEigen::new(scatter.clone()).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if max.is_nan() || max <= 0.0 || min <= SINGULAR_TOLERANCE * max {
        return Err(Error::DegenerateConfiguration(format!(
            "estimated points are {}",
            if d == 2 { "collinear" } else { "coplanar" }
        )));
    }
    let chol = scatter.cholesky().ok_or_else(|| {
        Error::DegenerateConfiguration("normal equations are not positive definite".to_string())
    })?;
    // scatter * A^T = cross
    let a_t = chol.solve(&cross);

    let a: Vec<Vec<f64>> = (0..d)
        .map(|r| (0..d).map(|c| a_t[(c, r)]).collect())
        .collect();
    let b: Vec<f64> = (0..d)
        .map(|r| mu_true[r] - (0..d).map(|c| a[r][c] * mu_est[c]).sum::<f64>())
        .collect();
    let mut fit = AffineFit { a, b, ssme: 0.0 };
    fit.ssme = fit.residual(true_map, est_map);
    Ok(fit)
}

/// Sum of squared matching errors after the best affine alignment.
pub fn ssme(true_map: &LandmarkMap, est_map: &LandmarkMap) -> Result<f64> {
    Ok(fit_affine(true_map, est_map)?.ssme)
}

/// Weighted centroid estimate of every landmark from labelled measurements:
/// landmark `l` sits at the `m_{i,l}`-weighted mean of the measurement
/// positions.
pub fn wcl_landmarks(set: &MeasurementSet) -> Result<LandmarkMap> {
    let coords = set.coords().ok_or(Error::MissingGroundTruth)?;
    let dim = set.coord_dim().ok_or(Error::MissingGroundTruth)?;
    let landmarks = set.landmark_count();
    let mut sums = vec![vec![0.0; dim]; landmarks];
    let mut weights = vec![0.0; landmarks];
    for (m, c) in set.measurements().iter().zip(coords) {
        for (l, &w) in m.values().iter().enumerate() {
            weights[l] += w;
            for (s, x) in sums[l].iter_mut().zip(c) {
                *s += w * x;
            }
        }
    }
    let points = sums
        .into_iter()
        .zip(&weights)
        .enumerate()
        .map(|(l, (s, &w))| {
            if w > 0.0 {
                Ok(s.into_iter().map(|v| v / w).collect())
            } else {
                Err(Error::ZeroWeightLandmark(l))
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    LandmarkMap::new(dim, points)
}

/// Weighted centroid estimate of an agent position from one measurement and
/// known (or estimated) landmark positions.
pub fn wcl_agent(landmarks: &LandmarkMap, m: &MeasurementVector) -> Result<Vec<f64>> {
    if m.len() != landmarks.len() {
        return Err(Error::DimensionMismatch {
            expected: landmarks.len(),
            actual: m.len(),
        });
    }
    let total: f64 = m.values().iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroWeightMeasurement);
    }
    let mut pos = vec![0.0; landmarks.dim()];
    for (w, p) in m.values().iter().zip(landmarks.coords()) {
        for (acc, x) in pos.iter_mut().zip(p) {
            *acc += w * x;
        }
    }
    pos.iter_mut().for_each(|v| *v /= total);
    Ok(pos)
}

/// Landmark indices sorted by angle around the map centroid.
fn angular_order(map: &LandmarkMap) -> Result<Vec<usize>> {
    let c = map.centroid();
    let radii: Vec<f64> = map
        .coords()
        .iter()
        .map(|p| (p[0] - c[0]).hypot(p[1] - c[1]))
        .collect();
    let scale = radii.iter().copied().fold(0.0, f64::max);
    if let Some(l) = radii.iter().position(|&r| r <= 1e-12 * scale) {
        return Err(Error::DegenerateConfiguration(format!(
            "landmark {} coincides with the centroid",
            map.ids()[l]
        )));
    }
    let angles: Vec<f64> = map
        .coords()
        .iter()
        .map(|p| (p[1] - c[1]).atan2(p[0] - c[0]))
        .collect();
    let mut order: Vec<usize> = (0..map.len()).collect();
    order.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]));
    Ok(order)
}

/// Fraction of angularly adjacent landmark pairs in `true_map` that are also
/// adjacent in `est_map`.
///
/// Adjacency is taken as unordered pairs around the cyclic order, so the
/// score does not depend on where the estimated order starts or on its
/// direction (rotation and reflection).
pub fn cyclic_order_score(true_map: &LandmarkMap, est_map: &LandmarkMap) -> Result<f64> {
    check_pair(true_map, est_map)?;
    if true_map.dim() != 2 {
        return Err(Error::InvalidDimension(true_map.dim()));
    }
    let n = true_map.len();
    if n < 3 {
        return Err(Error::DegenerateConfiguration(
            "cyclic order needs at least 3 landmarks".to_string(),
        ));
    }
    let adjacent = |order: &[usize]| -> Vec<(usize, usize)> {
        (0..n)
            .map(|k| {
                let (a, b) = (order[k], order[(k + 1) % n]);
                (a.min(b), a.max(b))
            })
            .collect()
    };
    let truth = adjacent(&angular_order(true_map)?);
    let mut est = adjacent(&angular_order(est_map)?);
    est.sort_unstable();
    let kept = truth
        .iter()
        .filter(|p| est.binary_search(p).is_ok())
        .count();
    Ok(kept as f64 / n as f64)
}

/// Everything `evaluate` reports about one estimated map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub ssme: f64,
    pub ssme_per_landmark: f64,
    /// SSME divided by the true map's total variance about its centroid.
    pub ssme_normalized: f64,
    /// Only defined for 2-D maps.
    pub cyclic_order_score: Option<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

pub fn evaluate(true_map: &LandmarkMap, est_map: &LandmarkMap) -> Result<EvaluationReport> {
    let fit = fit_affine(true_map, est_map)?;
    let cyclic_order_score = if true_map.dim() == 2 && true_map.len() >= 3 {
        Some(cyclic_order_score(true_map, est_map)?)
    } else {
        None
    };
    Ok(EvaluationReport {
        ssme: fit.ssme,
        ssme_per_landmark: fit.ssme / true_map.len() as f64,
        ssme_normalized: fit.ssme / true_map.total_variance(),
        cyclic_order_score,
        a: fit.a,
        b: fit.b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map2(points: &[(f64, f64)]) -> LandmarkMap {
        LandmarkMap::new(2, points.iter().map(|&(x, y)| vec![x, y]).collect()).unwrap()
    }

    fn circle(n: usize) -> LandmarkMap {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|l| {
                let t = std::f64::consts::TAU * l as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .collect();
        map2(&pts)
    }

    #[test]
    fn identity_fit() {
        let m = map2(&[(0.0, 0.0), (2.0, 0.5), (1.0, 3.0), (-1.0, 1.0)]);
        let fit = fit_affine(&m, &m).unwrap();
        assert!((fit.a[0][0] - 1.0).abs() < 1e-9 && (fit.a[1][1] - 1.0).abs() < 1e-9);
        assert!(fit.a[0][1].abs() < 1e-9 && fit.a[1][0].abs() < 1e-9);
        assert!(fit.b.iter().all(|v| v.abs() < 1e-9));
        assert!(fit.ssme < 1e-9);
    }

    #[test]
    fn similarity_transform_is_recovered() {
        let m = map2(&[(0.0, 0.0), (2.0, 0.5), (1.0, 3.0), (-1.0, 1.0), (0.3, -2.0)]);
        let (s, c) = 37f64.to_radians().sin_cos();
        let k = 3.2;
        let t = m.transformed(&[vec![k * c, -k * s], vec![k * s, k * c]], &[5.0, -1.0]);
        assert!(ssme(&m, &t).unwrap() < 1e-9);
        let fit = fit_affine(&t, &m).unwrap();
        assert!((fit.a[0][0] - k * c).abs() < 1e-9);
        assert!((fit.b[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn reflection_is_absorbed() {
        let truth = map2(&[(0.0, 0.0), (1.0, 0.2), (0.4, 1.0), (1.3, 1.1), (0.5, 0.5)]);
        let est = map2(&[(0.1, 0.0), (1.0, 0.3), (0.3, 0.9), (1.2, 1.2), (0.6, 0.4)]);
        let reflected = est.transformed(&[vec![-1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0]);
        let a = ssme(&truth, &est).unwrap();
        let b = ssme(&truth, &reflected).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn collinear_estimate_is_degenerate() {
        let truth = map2(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let est = map2(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert!(matches!(
            fit_affine(&truth, &est),
            Err(Error::DegenerateConfiguration(_))
        ));
        let too_few = map2(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(
            fit_affine(&too_few, &too_few),
            Err(Error::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn mismatched_maps() {
        let a = circle(5);
        let b = circle(6);
        assert!(matches!(
            fit_affine(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wcl_single_point() {
        let set = MeasurementSet::new(
            3,
            vec![MeasurementVector::new(vec![1.0, 2.0, 3.0]).unwrap()],
        )
        .unwrap()
        .with_coords(vec![vec![2.0, 3.0]])
        .unwrap();
        let map = wcl_landmarks(&set).unwrap();
        assert!(map.coords().iter().all(|p| p == &[2.0, 3.0]));
    }

    #[test]
    fn wcl_midpoint_and_weighted() {
        let mv = |v: &[f64]| MeasurementVector::new(v.to_vec()).unwrap();
        let set = MeasurementSet::new(2, vec![mv(&[1.0, 1.0]), mv(&[1.0, 2.0]), mv(&[0.0, 1.0])])
            .unwrap()
            .with_coords(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let map = wcl_landmarks(&set).unwrap();
        assert_eq!(map.point(0), &[0.5, 0.0]);
        assert_eq!(map.point(1), &[0.5, 0.25]);
    }

    #[test]
    fn wcl_errors() {
        let mv = |v: &[f64]| MeasurementVector::new(v.to_vec()).unwrap();
        let set = MeasurementSet::new(2, vec![mv(&[1.0, 0.0])]).unwrap();
        assert_eq!(wcl_landmarks(&set), Err(Error::MissingGroundTruth));
        let set = set.with_coords(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(wcl_landmarks(&set), Err(Error::ZeroWeightLandmark(1)));
        let lm = map2(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert!(wcl_agent(&lm, &mv(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn wcl_agent_values() {
        let lm = map2(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)]);
        let m = MeasurementVector::new(vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(wcl_agent(&lm, &m).unwrap(), vec![0.75, 1.5]);
        let only = MeasurementVector::new(vec![0.0, 0.0, 5.0]).unwrap();
        assert_eq!(wcl_agent(&lm, &only).unwrap(), vec![0.0, 3.0]);
        let two = map2(&[(0.0, 0.0), (4.0, 0.0), (9.0, 9.0)]);
        let m = MeasurementVector::new(vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(wcl_agent(&two, &m).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn cyclic_score_identity_and_reflection() {
        let c = circle(12);
        assert_eq!(cyclic_order_score(&c, &c).unwrap(), 1.0);
        let r = c.transformed(&[vec![1.0, 0.0], vec![0.0, -1.0]], &[3.0, 3.0]);
        assert_eq!(cyclic_order_score(&c, &r).unwrap(), 1.0);
    }

    #[test]
    fn cyclic_score_rejects_centroid_point() {
        let m = map2(&[(1.0, 0.0), (-1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, -1.0)]);
        assert!(matches!(
            cyclic_order_score(&m, &m),
            Err(Error::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn report_fields() {
        let c = circle(8);
        let r = evaluate(&c, &c).unwrap();
        assert!(r.ssme < 1e-12);
        assert_eq!(r.cyclic_order_score, Some(1.0));
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "ssme",
            "ssme_per_landmark",
            "ssme_normalized",
            "cyclic_order_score",
            "A",
            "b",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}

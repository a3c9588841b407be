use crate::error::{Error, Result};

/// Decides whether training should stop after the latest epoch.
///
/// With `delta_e = loss_{e-1} - loss_e`, returns true when the newest delta
/// divided by the largest delta seen so far drops below `tau`. If the loss
/// has never decreased (largest delta `<= 0`) the ratio is undefined and the
/// rule fires.
///
/// ```
/// use landmark2vec::should_stop;
///
/// assert!(!should_stop(&[10.0, 9.0, 8.0, 7.0], 0.1).unwrap());
/// assert!(should_stop(&[10.0, 5.0, 4.9], 0.1).unwrap());
/// ```
pub fn should_stop(val_losses: &[f64], tau: f64) -> Result<bool> {
    if val_losses.len() < 2 {
        return Err(Error::TooFewEpochs(val_losses.len()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "tau {tau} must lie in (0, 1)"
        )));
    }
    let max_delta = val_losses
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    if max_delta <= 0.0 {
        return Ok(true);
    }
    let n = val_losses.len();
    let latest = val_losses[n - 2] - val_losses[n - 1];
    Ok(latest / max_delta < tau)
}

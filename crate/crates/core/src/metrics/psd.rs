//! Performance-scaled disparity: group spread relative to overall performance.
//!
//! Group and overall values must share a scale (both fractions or both
//! percent); results are in percent either way.

use crate::error::{Error, Result};

fn check(group_perfs: &[f64], overall: f64) -> Result<()> {
    if group_perfs.len() < 2 {
        return Err(Error::TooFewGroups(group_perfs.len()));
    }
    if overall.is_nan() || overall <= 0.0 || overall.is_infinite() {
        return Err(Error::NonPositiveOverall(overall));
    }
    if !group_perfs.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("group performance"));
    }
    Ok(())
}

/// `100 · population_std(group_perfs) / overall` (divides by G, not G-1).
pub fn mean_psd(group_perfs: &[f64], overall: f64) -> Result<f64> {
    check(group_perfs, overall)?;
    let n = group_perfs.len() as f64;
    let mean = group_perfs.iter().sum::<f64>() / n;
    let var = group_perfs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(100.0 * var.sqrt() / overall)
}

/// `100 · (max - min) / overall`.
pub fn max_psd(group_perfs: &[f64], overall: f64) -> Result<f64> {
    check(group_perfs, overall)?;
    let max = group_perfs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = group_perfs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(100.0 * (max - min) / overall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_group_row() {
        let g = [0.7642, 0.6855, 0.7857];
        assert!((mean_psd(&g, 0.7910).unwrap() - 5.45).abs() <= 0.01);
        assert!((max_psd(&g, 0.7910).unwrap() - 12.67).abs() <= 0.01);
    }

    #[test]
    fn two_group_row_needs_population_std() {
        let g = [0.8058, 0.7661];
        let m = mean_psd(&g, 0.7910).unwrap();
        assert!((m - 2.51).abs() <= 0.01);
        // Sample std would land near 3.55.
        assert!((m * 2f64.sqrt() - 3.55).abs() <= 0.01);
        assert!((max_psd(&g, 0.7910).unwrap() - 5.02).abs() <= 0.01);
    }

    #[test]
    fn equal_groups_have_zero_disparity() {
        assert!(mean_psd(&[0.8, 0.8, 0.8], 0.8).unwrap().abs() < 1e-12);
        assert_eq!(max_psd(&[0.8, 0.8], 0.9).unwrap(), 0.0);
    }

    #[test]
    fn scale_free() {
        let frac = mean_psd(&[0.70, 0.80], 0.75).unwrap();
        let pct = mean_psd(&[70.0, 80.0], 75.0).unwrap();
        assert!((frac - pct).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(mean_psd(&[0.5], 0.5), Err(Error::TooFewGroups(1))));
        assert!(matches!(
            max_psd(&[0.5, 0.6], 0.0),
            Err(Error::NonPositiveOverall(_))
        ));
        assert!(matches!(
            max_psd(&[0.5, 0.6], -1.0),
            Err(Error::NonPositiveOverall(_))
        ));
    }
}

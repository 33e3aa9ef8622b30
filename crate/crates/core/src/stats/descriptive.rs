use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for n = 1.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Middle order statistic, averaging the two middles for even `n`.
/// `None` for an empty sample.
pub fn median(sample: &[f64]) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

pub fn mean(sample: &[f64]) -> Option<f64> {
    if sample.is_empty() {
        None
    } else {
        Some(sample.iter().sum::<f64>() / sample.len() as f64)
    }
}

pub fn descriptive(sample: &[f64]) -> Result<Descriptive, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = sample.len();
    let mean = mean(sample).expect("non-empty");
    let sd = if n > 1 {
        let ss: f64 = sample.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Descriptive {
        n,
        mean,
        median: median(sample).expect("non-empty"),
        sd,
        min: sample.iter().copied().fold(f64::INFINITY, f64::min),
        max: sample.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn summary() {
        let d = descriptive(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(d.n, 8);
        assert_eq!(d.mean, 5.0);
        assert_eq!(d.median, 4.5);
        assert!((d.sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!((d.min, d.max), (2.0, 9.0));
        assert_eq!(descriptive(&[1.5]).unwrap().sd, 0.0);
        assert!(matches!(descriptive(&[]), Err(StatsError::EmptySample)));
    }
}

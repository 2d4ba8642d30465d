use serde::{Deserialize, Serialize};

use super::distributions::student_t_two_tailed;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
    pub p_value: f64,
}

/// Pearson product-moment correlation with a t-transform p-value
/// (`n - 2` degrees of freedom).
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::InsufficientData { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::UndefinedCorrelation);
    }
    let rho = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let p_value = if rho.abs() == 1.0 {
        0.0
    } else {
        let t = rho * ((nf - 2.0) / (1.0 - rho * rho)).sqrt();
        student_t_two_tailed(t, nf - 2.0)?
    };
    Ok(CorrelationResult { rho, n, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson_correlation(&xs, &xs).unwrap().rho, 1.0);
        assert_eq!(pearson_correlation(&xs, &neg).unwrap().rho, -1.0);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::UndefinedCorrelation)
        ));
    }

    #[test]
    fn length_and_size_checks() {
        assert!(matches!(pearson_correlation(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::InsufficientData { .. })));
        assert!(matches!(pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch { .. })));
    }
}

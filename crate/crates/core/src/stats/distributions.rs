use super::special::{regularized_beta_with_complement, regularized_gamma_p, regularized_gamma_q};
use super::StatsError;

fn check_dof(dof: f64) -> Result<(), StatsError> {
    if dof.is_finite() && dof > 0.0 {
        Ok(())
    } else {
        Err(StatsError::Domain(format!("degrees of freedom must be positive, got {dof}")))
    }
}

/// One-sided tail `P(T > |t|)` for Student's t.
fn student_t_tail(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let t2 = t * t;
    let x = dof / (dof + t2);
    let y = t2 / (dof + t2);
    0.5 * regularized_beta_with_complement(0.5 * dof, 0.5, x, y)
}

/// Student-t cumulative distribution `P(T <= x)`.
pub fn student_t_cdf(x: f64, dof: f64) -> Result<f64, StatsError> {
    check_dof(dof)?;
    if x.is_nan() {
        return Err(StatsError::Domain("t value is NaN".into()));
    }
    let tail = student_t_tail(x, dof);
    Ok(if x > 0.0 { 1.0 - tail } else { tail })
}

/// Two-tailed p-value `P(|T| >= |t|)`.
pub fn student_t_two_tailed(t: f64, dof: f64) -> Result<f64, StatsError> {
    check_dof(dof)?;
    if t.is_nan() {
        return Err(StatsError::Domain("t value is NaN".into()));
    }
    Ok((2.0 * student_t_tail(t.abs(), dof)).min(1.0))
}

/// Chi-square cumulative distribution `P(X <= x)`.
pub fn chi_square_cdf(x: f64, dof: f64) -> Result<f64, StatsError> {
    check_dof(dof)?;
    if x.is_nan() {
        return Err(StatsError::Domain("chi-square value is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(regularized_gamma_p(0.5 * dof, 0.5 * x))
}

/// Chi-square upper tail `P(X > x)`, computed directly rather than as `1 - cdf`.
pub fn chi_square_sf(x: f64, dof: f64) -> Result<f64, StatsError> {
    check_dof(dof)?;
    if x.is_nan() {
        return Err(StatsError::Domain("chi-square value is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(regularized_gamma_q(0.5 * dof, 0.5 * x))
}

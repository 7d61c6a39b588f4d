//! Sensitivity (influence) functions: the directional derivative of a risk
//! measure at a base law toward a point mass, analytically for loss
//! certainty equivalents, their truncations, and loss quantiles, plus a
//! numeric difference-quotient oracle and a boundedness report.

use crate::dist::{contaminate_quantile, derivative_at, ContaminationSpec, QuantileFn};
use crate::error::{Error, Result};
use crate::measures::{eval, eval_loss_ce, EvalInput, LossUtility, RiskMeasureSpec};

/// Band around zero inside which G(delta) is treated as exactly zero when
/// choosing the sign case.
const SIGN_TOL: f64 = 1e-9;

/// Default contamination weights for the numeric difference quotients.
pub const DEFAULT_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Loss magnitude |z ^ 0|.
fn loss_mag(z: f64) -> f64 {
    -z.min(0.0)
}

/// Sensitivity of the untruncated loss certainty equivalent:
/// (u(|z ^ 0|) - u(rho(G))) / u'(rho(G)).
pub fn sensitivity_ce(u: &LossUtility, g: &QuantileFn, z: f64) -> Result<f64> {
    let rho = eval_loss_ce(g, u)?;
    let up = u.u_prime(rho)?;
    if up <= 0.0 {
        return Err(Error::Degenerate(format!(
            "utility derivative vanishes at risk level {rho}"
        )));
    }
    Ok((u.u(loss_mag(z))? - u.u(rho)?) / up)
}

/// Sensitivity of the delta-truncated loss certainty equivalent, split on
/// the sign of G(delta). The quantile derivative at delta is estimated by
/// central difference; step quantiles are refused where it is needed.
pub fn sensitivity_truncated_ce(
    u: &LossUtility,
    g: &QuantileFn,
    delta: f64,
    z: f64,
) -> Result<f64> {
    truncated_ce_impl(u, g, delta, z, None)
}

/// Same, with the quantile derivative G'(delta) supplied by the caller.
pub fn sensitivity_truncated_ce_with_derivative(
    u: &LossUtility,
    g: &QuantileFn,
    delta: f64,
    z: f64,
    g_deriv: f64,
) -> Result<f64> {
    truncated_ce_impl(u, g, delta, z, Some(g_deriv))
}

fn truncated_ce_impl(
    u: &LossUtility,
    g: &QuantileFn,
    delta: f64,
    z: f64,
    g_deriv: Option<f64>,
) -> Result<f64> {
    if g.cdf(z) >= 1.0 {
        return Err(Error::PreconditionViolated(format!(
            "distribution function reaches 1 at contamination point {z}"
        )));
    }
    if g.cdf(z) - g.cdf_left(z) > 1e-12 {
        return Err(Error::PreconditionViolated(format!(
            "base law has an atom at contamination point {z}; use the numeric path"
        )));
    }
    let gd = g.value(delta)?;
    // The derivative enters only some branches, so it is resolved lazily
    // and a step quantile stays usable where the formula does not need it.
    let deriv = || -> Result<f64> {
        match g_deriv {
            Some(d) => Ok(d),
            None => derivative_at(g, delta),
        }
    };
    if gd > SIGN_TOL {
        return Ok(0.0);
    }
    let truncated = QuantileFn::floor_truncated(g.clone(), delta)?;
    let rho_delta = eval_loss_ce(&truncated, u)?;
    let up = u.u_prime(rho_delta)?;
    if up <= 0.0 {
        return Err(Error::Degenerate(format!(
            "utility derivative vanishes at truncated risk level {rho_delta}"
        )));
    }
    if gd.abs() <= SIGN_TOL {
        if z >= gd {
            return Ok(0.0);
        }
        return Ok(delta * (1.0 - delta) * deriv()? / up);
    }
    // G(delta) < 0.
    let mag = loss_mag(gd);
    let branch = if z > gd {
        u.u(loss_mag(z))? - delta * delta * u.u_prime(mag)? * deriv()?
    } else if z == gd {
        u.u(loss_mag(z))?
    } else {
        u.u(mag)? + delta * (1.0 - delta) * u.u_prime(mag)? * deriv()?
    };
    Ok((-u.u(rho_delta)? + branch) / up)
}

/// Sensitivity of the delta-level loss quantile. With f the density of the
/// base law, 1/f(G(delta)) is the quantile derivative at delta.
pub fn sensitivity_var(g: &QuantileFn, delta: f64, z: f64) -> Result<f64> {
    let gprime = derivative_at(g, delta)?;
    if !(gprime > 0.0 && gprime.is_finite()) {
        return Err(Error::Degenerate(format!(
            "zero or undefined density at the level-{delta} quantile"
        )));
    }
    let gd = g.value(delta)?;
    Ok(if z > gd {
        delta * gprime
    } else if z == gd {
        0.0
    } else {
        -(1.0 - delta) * gprime
    })
}

/// Difference quotients of a risk measure under point-mass contamination,
/// with a first-order extrapolated estimate.
#[derive(Debug, Clone)]
pub struct NumericSensitivity {
    /// (epsilon, quotient) pairs in ladder order.
    pub quotients: Vec<(f64, f64)>,
    /// Richardson extrapolation from the two smallest weights; equals the
    /// single quotient when the ladder has one rung.
    pub estimate: f64,
}

/// Evaluates (rho(G_eps) - rho(G)) / eps along a decreasing weight ladder.
pub fn sensitivity_numeric(
    spec: &RiskMeasureSpec,
    g: &QuantileFn,
    z: f64,
    ladder: &[f64],
) -> Result<NumericSensitivity> {
    if ladder.is_empty() {
        return Err(Error::DomainError("empty contamination ladder".into()));
    }
    for w in ladder.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::DomainError(
                "contamination ladder must be strictly decreasing".into(),
            ));
        }
    }
    if !(ladder[0] < 1.0 && *ladder.last().unwrap() > 0.0) {
        return Err(Error::DomainError(
            "contamination weights must lie in (0,1)".into(),
        ));
    }
    let rho0 = eval(spec, EvalInput::Quantile(g))?;
    let mut quotients = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let contaminated = contaminate_quantile(g, &ContaminationSpec { z, epsilon: eps })?;
        let rho = eval(spec, EvalInput::Quantile(&contaminated))?;
        quotients.push((eps, (rho - rho0) / eps));
    }
    let estimate = match quotients.len() {
        1 => quotients[0].1,
        k => {
            let (e1, d1) = quotients[k - 2];
            let (e2, d2) = quotients[k - 1];
            let r = e1 / e2;
            (r * d2 - d1) / (r - 1.0)
        }
    };
    Ok(NumericSensitivity { quotients, estimate })
}

/// Grid supremum of the truncated-CE sensitivity next to its closed-form
/// upper bound.
#[derive(Debug, Clone)]
pub struct BoundednessReport {
    pub grid_sup: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Sweeps the truncated-CE sensitivity over `z_grid` and compares against
/// the three-case bound: 0 when G(delta) > 0; d(1-d)G'(d)/u'(rho_d) when
/// G(delta) = 0; the z-independent lower-branch value when G(delta) < 0.
pub fn boundedness_report(
    u: &LossUtility,
    g: &QuantileFn,
    delta: f64,
    z_grid: &[f64],
) -> Result<BoundednessReport> {
    if z_grid.is_empty() {
        return Err(Error::InvalidInput("empty z grid".into()));
    }
    let mut grid_sup = f64::NEG_INFINITY;
    for &z in z_grid {
        grid_sup = grid_sup.max(sensitivity_truncated_ce(u, g, delta, z)?);
    }
    let gd = g.value(delta)?;
    let bound = if gd > SIGN_TOL {
        0.0
    } else {
        let truncated = QuantileFn::floor_truncated(g.clone(), delta)?;
        let rho_delta = eval_loss_ce(&truncated, u)?;
        let up = u.u_prime(rho_delta)?;
        if up <= 0.0 {
            return Err(Error::Degenerate(format!(
                "utility derivative vanishes at truncated risk level {rho_delta}"
            )));
        }
        let gprime = derivative_at(g, delta)?;
        if gd.abs() <= SIGN_TOL {
            delta * (1.0 - delta) * gprime / up
        } else {
            let mag = loss_mag(gd);
            (-u.u(rho_delta)? + u.u(mag)? + delta * (1.0 - delta) * u.u_prime(mag)? * gprime) / up
        }
    };
    Ok(BoundednessReport {
        grid_sup,
        bound,
        within_bound: grid_sup <= bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{EmpiricalDistribution, Interpolation};
    use approx::assert_relative_eq;

    fn qemp(samples: &[f64]) -> QuantileFn {
        QuantileFn::empirical(EmpiricalDistribution::from_samples(samples).unwrap())
    }

    fn linear(lo: f64, hi: f64) -> QuantileFn {
        QuantileFn::tabulated(vec![(0.0, lo), (1.0, hi)], Interpolation::Linear).unwrap()
    }

    #[test]
    fn ce_sensitivity_linear_utility() {
        let g = qemp(&[-2.0, 1.0, 3.0]);
        let u = LossUtility::power(1.0).unwrap();
        assert_relative_eq!(
            sensitivity_ce(&u, &g, -5.0).unwrap(),
            13.0 / 3.0,
            max_relative = 1e-12
        );
        // Gains contribute u(0): for the linear utility this is -rho(G).
        assert_relative_eq!(
            sensitivity_ce(&u, &g, 2.0).unwrap(),
            -2.0 / 3.0,
            max_relative = 1e-12
        );
        // The formula crosses zero where the loss magnitude equals the risk.
        assert_relative_eq!(
            sensitivity_ce(&u, &g, -2.0 / 3.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ce_sensitivity_degenerate_on_gain_only_base() {
        let g = qemp(&[1.0, 2.0]);
        let u = LossUtility::power(2.0).unwrap();
        assert!(matches!(
            sensitivity_ce(&u, &g, -1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn truncated_positive_floor_is_identically_zero() {
        // G(0.7) = 2 > 0; no derivative needed even on a step quantile.
        let g = qemp(&[1.0, 2.0, 5.0]);
        let u = LossUtility::power(2.0).unwrap();
        for z in [-100.0, -1.0, 0.5] {
            assert_eq!(sensitivity_truncated_ce(&u, &g, 0.7, z).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncated_negative_floor_branches() {
        // G(t) = -5 + 10t, delta = 0.25: G(delta) = -2.5, rho_delta = 0.9375.
        let g = linear(-5.0, 5.0);
        let u = LossUtility::power(1.0).unwrap();
        let s_above_loss = sensitivity_truncated_ce(&u, &g, 0.25, -1.0).unwrap();
        assert_relative_eq!(s_above_loss, -0.5625, max_relative = 1e-9);
        let s_above_gain = sensitivity_truncated_ce(&u, &g, 0.25, 2.0).unwrap();
        assert_relative_eq!(s_above_gain, -1.5625, max_relative = 1e-9);
        let s_below = sensitivity_truncated_ce(&u, &g, 0.25, -50.0).unwrap();
        assert_relative_eq!(s_below, 3.4375, max_relative = 1e-9);
        // Constant on the lower region.
        assert_eq!(
            s_below,
            sensitivity_truncated_ce(&u, &g, 0.25, -100.0).unwrap()
        );
        // Middle branch at z = G(delta) exactly.
        let s_at = sensitivity_truncated_ce(&u, &g, 0.25, -2.5).unwrap();
        assert_relative_eq!(s_at, -0.9375 + 2.5, max_relative = 1e-9);
    }

    #[test]
    fn truncated_zero_floor_matches_quotients() {
        // G(t) = -0.5 + 10t has G(0.05) = 0 exactly.
        let g = linear(-0.5, 9.5);
        let u = LossUtility::power(1.0).unwrap();
        assert_eq!(sensitivity_truncated_ce(&u, &g, 0.05, 1.0).unwrap(), 0.0);
        let s = sensitivity_truncated_ce(&u, &g, 0.05, -3.0).unwrap();
        assert_relative_eq!(s, 0.05 * 0.95 * 10.0, max_relative = 1e-6);
        let spec = RiskMeasureSpec::Truncated {
            inner: Box::new(RiskMeasureSpec::LossCe(u)),
            delta: 0.05,
        };
        let numeric = sensitivity_numeric(&spec, &g, -3.0, &DEFAULT_LADDER).unwrap();
        assert_relative_eq!(numeric.estimate, s, max_relative = 1e-4);
    }

    #[test]
    fn truncated_preconditions() {
        let u = LossUtility::power(1.0).unwrap();
        let g = linear(-5.0, 5.0);
        assert!(matches!(
            sensitivity_truncated_ce(&u, &g, 0.25, 6.0),
            Err(Error::PreconditionViolated(_))
        ));
        let atomic = qemp(&[-2.0, -1.0, 3.0]);
        assert!(matches!(
            sensitivity_truncated_ce(&u, &atomic, 0.25, -2.0),
            Err(Error::PreconditionViolated(_))
        ));
        // Step quantile with a negative floor needs a derivative.
        assert!(matches!(
            sensitivity_truncated_ce(&u, &atomic, 0.25, -10.0),
            Err(Error::MissingDerivative)
        ));
        // Unless the caller supplies one.
        assert!(
            sensitivity_truncated_ce_with_derivative(&u, &atomic, 0.25, -10.0, 2.0).is_ok()
        );
    }

    #[test]
    fn truncated_power2_zero_floor_is_degenerate() {
        let g = linear(-0.5, 9.5);
        let u = LossUtility::power(2.0).unwrap();
        assert!(matches!(
            sensitivity_truncated_ce(&u, &g, 0.05, -3.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn var_sensitivity_three_cases() {
        let g = linear(0.0, 10.0);
        // G'(0.3) = 10, G(0.3) = 3.
        assert_relative_eq!(sensitivity_var(&g, 0.3, 5.0).unwrap(), 3.0, epsilon = 1e-8);
        assert_eq!(sensitivity_var(&g, 0.3, 3.0).unwrap(), 0.0);
        assert_relative_eq!(sensitivity_var(&g, 0.3, -1.0).unwrap(), -7.0, epsilon = 1e-8);
        assert!(matches!(
            sensitivity_var(&qemp(&[1.0, 2.0]), 0.3, 0.0),
            Err(Error::MissingDerivative)
        ));
    }

    #[test]
    fn numeric_matches_analytic_untruncated() {
        let g = linear(-5.0, 5.0);
        let u = LossUtility::power(2.0).unwrap();
        let spec = RiskMeasureSpec::LossCe(u);
        for z in [-8.0, -3.0, -0.7, 1.5] {
            let analytic = sensitivity_ce(&u, &g, z).unwrap();
            let numeric = sensitivity_numeric(&spec, &g, z, &DEFAULT_LADDER).unwrap();
            let tol = (1e-2 * analytic.abs()).max(1e-3);
            assert!(
                (numeric.estimate - analytic).abs() <= tol,
                "z = {z}: numeric {} vs analytic {analytic}",
                numeric.estimate
            );
        }
    }

    #[test]
    fn numeric_matches_analytic_truncated_negative_case() {
        let g = linear(-5.0, 5.0);
        let u = LossUtility::exponential(1.0).unwrap();
        let spec = RiskMeasureSpec::Truncated {
            inner: Box::new(RiskMeasureSpec::LossCe(u)),
            delta: 0.25,
        };
        for z in [-20.0, -4.0, -1.0, 2.0] {
            let analytic = sensitivity_truncated_ce(&u, &g, 0.25, z).unwrap();
            let numeric = sensitivity_numeric(&spec, &g, z, &DEFAULT_LADDER).unwrap();
            let tol = (1e-2 * analytic.abs()).max(1e-3);
            assert!(
                (numeric.estimate - analytic).abs() <= tol,
                "z = {z}: numeric {} vs analytic {analytic}",
                numeric.estimate
            );
        }
    }

    #[test]
    fn ladder_validation() {
        let g = linear(-1.0, 1.0);
        let spec = RiskMeasureSpec::PutPremium;
        assert!(sensitivity_numeric(&spec, &g, -1.0, &[]).is_err());
        assert!(sensitivity_numeric(&spec, &g, -1.0, &[1e-3, 1e-2]).is_err());
        assert!(sensitivity_numeric(&spec, &g, -1.0, &[1.5, 0.1]).is_err());
    }

    #[test]
    fn boundedness_three_cases() {
        let u = LossUtility::power(2.0).unwrap();
        let grid: Vec<f64> = (0..21).map(|k| -40.0 + 2.0 * k as f64).collect();

        let positive = linear(1.0, 11.0);
        let r = boundedness_report(&u, &positive, 0.05, &grid).unwrap();
        assert_eq!(r.bound, 0.0);
        assert_eq!(r.grid_sup, 0.0);
        assert!(r.within_bound);

        let negative = linear(-6.0, 4.0);
        let r = boundedness_report(&u, &negative, 0.05, &grid).unwrap();
        assert!(r.within_bound, "sup {} bound {}", r.grid_sup, r.bound);
        assert!(r.bound > 0.0);

        let zero = linear(-0.5, 9.5);
        let u1 = LossUtility::power(1.0).unwrap();
        let r = boundedness_report(&u1, &zero, 0.05, &grid).unwrap();
        assert!(r.within_bound);
        assert_relative_eq!(r.bound, 0.475, max_relative = 1e-6);
    }
}

//! Constraint penalties: the squared hinge used for ranking and its smooth
//! relaxation used by the estimator-bias checks.

/// `max(0, cost - xi)^2`.
pub fn penalty(cost: f64, xi: f64) -> f64 {
    let excess = (cost - xi).max(0.0);
    excess * excess
}

/// `rho * ln(1 + exp((g - xi) / rho))`, evaluated without overflow.
pub fn relaxed_penalty(g: f64, xi: f64, rho: f64) -> f64 {
    let x = (g - xi) / rho;
    rho * (x.max(0.0) + (-x.abs()).exp().ln_1p())
}

/// Derivative of [`relaxed_penalty`] with respect to `g`: the logistic function.
pub fn relaxed_penalty_slope(g: f64, xi: f64, rho: f64) -> f64 {
    let x = (g - xi) / rho;
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smooth stochastic-ranking surrogate `p_f * F - (1 - p_f) * relaxed_penalty(g)`.
pub fn sr_surrogate(f: f64, g: f64, xi: f64, rho: f64, p_f: f64) -> f64 {
    p_f * f - (1.0 - p_f) * relaxed_penalty(g, xi, rho)
}

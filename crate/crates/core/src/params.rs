//! Closed-form schedules and exponent bounds used to configure the solver
//! and to sanity-check parameter choices.

/// Default round count for the min-max game: `ceil(10 ln(d) / eps^2)`,
/// where `d` is the number of coordinates still available at the node.
/// Always at least 1.
pub fn default_rounds(d_avail: usize, epsilon: f64) -> usize {
    let t = (10.0 * (d_avail as f64).ln() / (epsilon * epsilon)).ceil();
    (t as usize).max(1)
}

/// Default multiplicative-weights base: `1 - sqrt(ln(d) / T)`.
pub fn default_beta(d_avail: usize, rounds: usize) -> f64 {
    1.0 - ((d_avail as f64).ln() / rounds as f64).sqrt()
}

/// Exponent of classical uniform LSH for queries at distance `r` with
/// approximation `c`: `ln(1 - r/d) / ln(1 - cr/d)`.
pub fn uniform_lsh_exponent(r: usize, d: usize, c: f64) -> f64 {
    let rd = r as f64 / d as f64;
    (1.0 - rd).ln() / (1.0 - c * rd).ln()
}

/// The tight exponent bound for trees queried with pivot parameter `m`
/// (`delta = 1/m`): `ln(1/(1 - r/d)) / ln(1/(1 - (1-delta) c r/d))`.
pub fn precise_rho(r: usize, d: usize, c: f64, delta: f64) -> f64 {
    let rd = r as f64 / d as f64;
    (1.0 / (1.0 - rd)).ln() / (1.0 / (1.0 - (1.0 - delta) * c * rd)).ln()
}

/// The simple upper bound `1 / ((1 - delta) c)` that dominates
/// [`precise_rho`].
pub fn rho_bound(c: f64, delta: f64) -> f64 {
    1.0 / ((1.0 - delta) * c)
}

/// Default near-neighbor approximation factor for a given exponent: `c = 1/rho`.
pub fn approximation_from_rho(rho: f64) -> f64 {
    1.0 / rho
}

use serde::{Deserialize, Serialize};

use super::Lattice;
use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, Ball, DominatingFunction};

/// `Theta(Q) = mu(alpha B(Q)) / lambda(z_Q, alpha r(Q))`.
pub fn theta(
    measure: &AtomicMeasure,
    lambda: &DominatingFunction,
    alpha: f64,
    center: f64,
    radius: f64,
) -> Result<f64> {
    let r = alpha * radius;
    if r < measure.floor() {
        return Err(Error::BelowResolutionFloor {
            scale: r,
            floor: measure.floor(),
        });
    }
    Ok(measure.mu_ball(Ball::new(center, r)) / lambda.eval(center, r))
}

/// Measured decay of `Theta` along a chain `Q_0 ⊃ Q_1 ⊃ ...` whose cells after
/// the first are non-doubling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub chain: Vec<usize>,
    /// `Theta(Q_k) / Theta(Q_0)` for `k = 0..`.
    pub ratios: Vec<f64>,
    /// `rho^k`.
    pub bounds: Vec<f64>,
    pub decay_base: f64,
    /// Smallest `C` with `ratio_k <= C rho^k` along the chain.
    pub implied_constant: f64,
    /// `C0^(l0/2) > C_lambda^ceil(log2 A0)`.
    pub hypothesis_holds: bool,
    /// `None` in relaxed mode, where the check is report-only.
    pub pass: Option<bool>,
}

pub fn theta_decay_check(lattice: &Lattice, chain: &[usize]) -> Result<DecayReport> {
    let lambda = lattice
        .lambda()
        .ok_or_else(|| Error::Contract("theta decay needs a dominating function".into()))?;
    if chain.is_empty() {
        return Err(Error::Contract("empty chain".into()));
    }
    for w in chain.windows(2) {
        let (outer, inner) = (lattice.cell(w[0]), lattice.cell(w[1]));
        if inner.level <= outer.level || !lattice.is_subset(w[1], w[0]) {
            return Err(Error::Contract(format!("cells {} and {} are not nested", w[0], w[1])));
        }
    }
    if let Some(&id) = chain[1..].iter().find(|&&id| lattice.cell(id).doubling) {
        return Err(Error::Contract(format!("cell {id} in the chain is doubling")));
    }
    let thetas: Vec<f64> = chain.iter().map(|&id| lattice.theta_of(id)).collect::<Result<_>>()?;
    let rho = lattice.decay_base();
    let ratios: Vec<f64> = thetas.iter().map(|t| t / thetas[0]).collect();
    let bounds: Vec<f64> = (0..chain.len()).map(|k| rho.powi(k as i32)).collect();
    let implied_constant = ratios.iter().zip(&bounds).map(|(r, b)| r / b).fold(0.0, f64::max);
    let params = lattice.params();
    Ok(DecayReport {
        chain: chain.to_vec(),
        ratios,
        bounds,
        decay_base: rho,
        implied_constant,
        hypothesis_holds: params.decay_hypothesis(lambda.constant),
        pass: (!params.relaxed).then_some(implied_constant.is_finite()),
    })
}

//! Weights, their duals, the cell and interval characteristics, weighted
//! maximal functions and empirical norms of sparse forms.

mod maximal;
mod norm;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::measure::AtomicMeasure;
use crate::numeric::pow_exact;

pub use maximal::{martingale_maximal, martingale_maximal_all, martingale_weak_type, sigma_maximal_all, MaximalNorms};
pub use norm::{
    duality_bound, holder_check, norm_sweep, sparse_pairing, weighted_sparse_norm, DualityBound, HolderCheck,
    SparseNormEstimate, SweepRow, TestPair,
};

/// A weight `w > 0` at the atoms with exponent `p`, and its dual
/// `sigma = w^{-1/(p-1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightRepr", into = "WeightRepr")]
pub struct Weight {
    p: f64,
    values: Vec<f64>,
    sigma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightRepr {
    p: f64,
    values: Vec<f64>,
}

impl TryFrom<WeightRepr> for Weight {
    type Error = Error;

    fn try_from(r: WeightRepr) -> Result<Self> {
        Weight::from_values(r.values, r.p)
    }
}

impl From<Weight> for WeightRepr {
    fn from(w: Weight) -> Self {
        WeightRepr {
            p: w.p,
            values: w.values,
        }
    }
}

impl Weight {
    fn from_values(values: Vec<f64>, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidWeight(format!("exponent p = {p} not in (1, inf)")));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidWeight(format!("value {v} at atom {i}")));
        }
        let sigma = values
            .iter()
            .map(|&w| if p == 2.0 { 1.0 / w } else { w.powf(-1.0 / (p - 1.0)) })
            .collect();
        Ok(Weight { p, values, sigma })
    }

    pub fn new(measure: &AtomicMeasure, values: Vec<f64>, p: f64) -> Result<Self> {
        if values.len() != measure.len() {
            return Err(Error::InvalidWeight(format!(
                "{} values for {} atoms",
                values.len(),
                measure.len()
            )));
        }
        Self::from_values(values, p)
    }

    pub fn unit(measure: &AtomicMeasure, p: f64) -> Result<Self> {
        Self::new(measure, vec![1.0; measure.len()], p)
    }

    /// `w(x) = |x - center|^a`.
    pub fn power(measure: &AtomicMeasure, center: f64, a: f64, p: f64) -> Result<Self> {
        let values = measure
            .positions()
            .iter()
            .map(|&x| (x - center).abs().powf(a))
            .collect();
        Self::new(measure, values, p)
    }

    /// Reads `{"p": .., "values": [..]}` and checks it against the measure.
    pub fn from_json(measure: &AtomicMeasure, text: &str) -> Result<Self> {
        let w: Weight = serde_json::from_str(text)?;
        if w.len() != measure.len() {
            return Err(Error::InvalidWeight(format!(
                "{} values for {} atoms",
                w.len(),
                measure.len()
            )));
        }
        Ok(w)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_values(self.values.iter().map(|w| c * w).collect(), self.p)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_prime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn p_star(&self) -> f64 {
        self.p.max(self.p_prime())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `w(S)` for the atoms in `range`.
    pub fn w_mass(&self, measure: &AtomicMeasure, range: Range<usize>) -> f64 {
        measure.integrate_abs(&self.values, range)
    }

    pub fn sigma_mass(&self, measure: &AtomicMeasure, range: Range<usize>) -> f64 {
        measure.integrate_abs(&self.sigma, range)
    }

    pub fn w_mass_set(&self, measure: &AtomicMeasure, atoms: &[usize]) -> f64 {
        atoms.iter().map(|&i| self.values[i] * measure.mass(i)).sum()
    }

    pub fn sigma_mass_set(&self, measure: &AtomicMeasure, atoms: &[usize]) -> f64 {
        atoms.iter().map(|&i| self.sigma[i] * measure.mass(i)).sum()
    }

    /// `max |w^{1/p} sigma^{1/p'} - 1|` over atoms.
    pub fn duality_defect(&self) -> f64 {
        let (a, b) = (1.0 / self.p, 1.0 / self.p_prime());
        self.values
            .iter()
            .zip(&self.sigma)
            .map(|(w, s)| (w.powf(a) * s.powf(b) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    pub value: f64,
    pub attaining_cell: usize,
    pub per_cell: Vec<f64>,
}

/// The cell expression
/// `sigma(200B) w(Q) sigma(Q)^{(p-2)+} w(Q)^{(p'-2)+} / (mu(alpha B) mu(Q)^{p*-1})`
/// for one cell.
pub fn cell_term(weight: &Weight, lattice: &Lattice, cell: usize) -> f64 {
    let m = lattice.measure();
    let q = lattice.cell(cell);
    let (p, pp) = (weight.p(), weight.p_prime());
    let ball = q.ball();
    let sigma_200 = weight.sigma_mass(m, m.ball_range(ball.scale(200.0)));
    let w_q = weight.w_mass(m, q.atoms.clone());
    let sigma_q = weight.sigma_mass(m, q.atoms.clone());
    let num = sigma_200 * w_q * pow_exact(sigma_q, (p - 2.0).max(0.0)) * pow_exact(w_q, (pp - 2.0).max(0.0));
    let den = m.mu_ball(ball.scale(lattice.params().alpha)) * pow_exact(q.mass, weight.p_star() - 1.0);
    num / den
}

/// Supremum of [`cell_term`] over every cell of the lattice.
pub fn cell_characteristic(weight: &Weight, lattice: &Lattice) -> CharacteristicReport {
    let per_cell: Vec<f64> = (0..lattice.cells().len())
        .map(|q| cell_term(weight, lattice, q))
        .collect();
    let (attaining_cell, value) =
        per_cell.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, v)| if v > best.1 { (i, v) } else { best },
        );
    CharacteristicReport {
        value,
        attaining_cell,
        per_cell,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalA2Report {
    /// `sup <w>_{30I} <sigma>_I`.
    pub w_side: f64,
    /// `sup <sigma>_{30I} <w>_I`.
    pub sigma_side: f64,
    pub value: f64,
    pub w_side_cell: usize,
    pub sigma_side_cell: usize,
    pub intervals: usize,
}

fn average(measure: &AtomicMeasure, values: &[f64], range: Range<usize>) -> f64 {
    measure.integrate_abs(values, range.clone()) / measure.mass_of(range)
}

/// The two-sided interval `A_2` expression over the cell extents `I` and
/// their dilates `30I`.
pub fn interval_a2_characteristic(weight: &Weight, lattice: &Lattice) -> Result<IntervalA2Report> {
    if weight.p() != 2.0 {
        return Err(Error::Contract(format!("interval A_2 needs p = 2, got {}", weight.p())));
    }
    let m = lattice.measure();
    let mut r = IntervalA2Report {
        w_side: 0.0,
        sigma_side: 0.0,
        value: 0.0,
        w_side_cell: 0,
        sigma_side_cell: 0,
        intervals: 0,
    };
    for q in lattice.cells() {
        let inner = m.interval_range(q.extent);
        let outer = m.interval_range(q.extent.dilate(30.0));
        if inner.is_empty() {
            continue;
        }
        r.intervals += 1;
        let w = average(m, weight.values(), outer.clone()) * average(m, weight.sigma(), inner.clone());
        let s = average(m, weight.sigma(), outer) * average(m, weight.values(), inner);
        if w > r.w_side {
            r.w_side = w;
            r.w_side_cell = q.id;
        }
        if s > r.sigma_side {
            r.sigma_side = s;
            r.sigma_side_cell = q.id;
        }
    }
    r.value = r.w_side.min(r.sigma_side);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeParams;

    fn grid(n: usize) -> AtomicMeasure {
        AtomicMeasure::new(
            (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect(),
            None,
        )
        .unwrap()
    }

    fn lattice(alpha: f64) -> Lattice {
        Lattice::build(
            &grid(128),
            &LatticeParams::relaxed(1000.0, 4.0, alpha, 4).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn duality_identity() {
        let m = grid(32);
        for p in [1.5, 2.0, 3.0, 7.0] {
            let w = Weight::power(&m, 0.5, -0.7, p).unwrap();
            assert!(w.duality_defect() < 1e-12, "p = {p}");
        }
        assert!(Weight::new(&m, vec![0.0; 32], 2.0).is_err());
        assert!(Weight::unit(&m, 1.0).is_err());
    }

    #[test]
    fn unit_weight_characteristic_is_one() {
        let l = lattice(200.0);
        let w = Weight::unit(l.measure(), 2.0).unwrap();
        assert_eq!(cell_characteristic(&w, &l).value, 1.0);
        let l = lattice(400.0);
        assert!(cell_characteristic(&w, &l).value <= 1.0);
    }

    #[test]
    fn scale_invariance_at_p2() {
        let l = lattice(200.0);
        let w = Weight::power(l.measure(), 0.5, 0.6, 2.0).unwrap();
        let a = cell_characteristic(&w, &l).value;
        let b = cell_characteristic(&w.scaled(37.5).unwrap(), &l).value;
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn interval_a2_trivial_weights() {
        let l = lattice(200.0);
        let one = interval_a2_characteristic(&Weight::unit(l.measure(), 2.0).unwrap(), &l).unwrap();
        assert_eq!(one.value, 1.0);
        let two = Weight::new(l.measure(), vec![2.0; 128], 2.0).unwrap();
        assert_eq!(interval_a2_characteristic(&two, &l).unwrap().value, 1.0);
        let p3 = Weight::unit(l.measure(), 3.0).unwrap();
        assert!(matches!(interval_a2_characteristic(&p3, &l), Err(Error::Contract(_))));
    }

    #[test]
    fn weight_json() {
        let m = grid(3);
        let w = Weight::from_json(&m, r#"{"p": 2.0, "values": [1.0, 2.0, 4.0]}"#).unwrap();
        assert_eq!(w.sigma(), &[1.0, 0.5, 0.25]);
        assert!(Weight::from_json(&m, r#"{"p": 2.0, "values": [1.0]}"#).is_err());
        assert!(Weight::from_json(&m, r#"{"p": 0.5, "values": [1.0, 1.0, 1.0]}"#).is_err());
    }
}

//! Calderón–Zygmund kernels on atomic measures: truncations, the maximal
//! truncation, cell tails and the maximal operators built on the lattice.
//!
//! Suprema over truncation scales and radii run over the finitely many atom
//! distances where the underlying step functions jump, restricted to scales
//! `>= h`.

mod kernel;
mod reports;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cell, Lattice};
use crate::measure::{distance, AtomicMeasure, Ball, DominatingFunction};
use crate::numeric::CompensatedSum;

pub use kernel::{verify_kernel, Kernel, KernelKind, KernelReport, Modulus, KERNEL_TOLERANCE};
pub(crate) use reports::weak_type_from_values;
pub use reports::{
    compare_truncations, consecutive_scales, n_tsharp, weak_type_mu, ConsecutiveScalesReport, NTsharpReport,
    TruncationComparison, WeakTypeReport, TRUNCATION_WINDOW,
};

/// Values of `f` at the atoms, in atom order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSample {
    values: Vec<f64>,
    l1: f64,
}

impl FunctionSample {
    pub fn new(measure: &AtomicMeasure, values: Vec<f64>) -> Result<Self> {
        if values.len() != measure.len() {
            return Err(Error::InvalidFunction(format!(
                "{} values for {} atoms",
                values.len(),
                measure.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("non-finite value {v}")));
        }
        let l1 = measure.integrate_abs(&values, 0..values.len());
        Ok(FunctionSample { values, l1 })
    }

    pub fn zeros(measure: &AtomicMeasure) -> Self {
        FunctionSample {
            values: vec![0.0; measure.len()],
            l1: 0.0,
        }
    }

    pub fn constant(measure: &AtomicMeasure, c: f64) -> Result<Self> {
        Self::new(measure, vec![c; measure.len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `||f||_{L^1(mu)}`.
    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn scaled(&self, measure: &AtomicMeasure, c: f64) -> Result<Self> {
        Self::new(measure, self.values.iter().map(|v| c * v).collect())
    }

    /// `f 1_B`.
    pub fn restricted(&self, measure: &AtomicMeasure, ball: Ball) -> Self {
        let keep = measure.ball_range(ball);
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if keep.contains(&i) { v } else { 0.0 })
            .collect();
        Self::new(measure, values).expect("restriction keeps values finite")
    }
}

/// `T_eps f(x) = sum_{|x-y| > eps} K(x,y) f(y) mu({y})`.
pub fn truncated(kernel: &Kernel, measure: &AtomicMeasure, f: &FunctionSample, x: f64, eps: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (i, (y, m)) in measure.atoms().enumerate() {
        if distance(x, y) > eps {
            acc.add(kernel.eval(x, y) * f.values[i] * m);
        }
    }
    acc.value()
}

/// `T# f(x) = sup_{eps >= h} |T_eps f(x)|`, evaluated at `eps = h` and at every
/// atom distance `>= h`.
pub fn max_truncation(kernel: &Kernel, measure: &AtomicMeasure, f: &FunctionSample, x: f64) -> f64 {
    let h = measure.floor();
    let order = measure.by_distance(x);
    let mut acc = CompensatedSum::new();
    let mut best: f64 = 0.0;
    let mut i = order.len();
    while i > 0 && order[i - 1].0 > h {
        let d = order[i - 1].0;
        // acc holds the atoms strictly farther than d
        best = best.max(acc.value().abs());
        while i > 0 && order[i - 1].0 == d {
            let a = order[i - 1].1;
            acc.add(kernel.eval(x, measure.position(a)) * f.values[a] * measure.mass(a));
            i -= 1;
        }
    }
    best.max(acc.value().abs())
}

/// `M_lambda f(x) = sup_{R >= h} lambda(x,R)^-1 int_{B(x,R)} |f| dmu`.
pub fn maximal_lambda(measure: &AtomicMeasure, lambda: &DominatingFunction, f: &FunctionSample, x: f64) -> f64 {
    let h = measure.floor();
    let order = measure.by_distance(x);
    let mut acc = CompensatedSum::new();
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < order.len() {
        let d = order[i].0;
        while i < order.len() && order[i].0 == d {
            let a = order[i].1;
            acc.add(f.values[a].abs() * measure.mass(a));
            i += 1;
        }
        let next = order.get(i).map_or(f64::INFINITY, |o| o.0);
        if d >= h {
            best = best.max(acc.value() / lambda.eval(x, d));
        } else if next > h {
            best = best.max(acc.value() / lambda.eval(x, h));
        }
    }
    best
}

/// `F(x,Q) = sum_{y outside 30B(Q)} K(x,y) f(y) mu({y})` for an atom `x ∈ Q`.
pub fn tail(kernel: &Kernel, measure: &AtomicMeasure, f: &FunctionSample, x: usize, cell: &Cell) -> Result<f64> {
    if !cell.contains(x) {
        return Err(Error::Contract(format!("atom {x} is not in cell {}", cell.id)));
    }
    Ok(tail_unchecked(
        kernel,
        measure,
        f,
        measure.position(x),
        cell.ball().scale(30.0),
    ))
}

fn tail_unchecked(kernel: &Kernel, measure: &AtomicMeasure, f: &FunctionSample, x: f64, ball: Ball) -> f64 {
    let inside = measure.ball_range(ball);
    let mut acc = CompensatedSum::new();
    for a in (0..inside.start).chain(inside.end..measure.len()) {
        acc.add(kernel.eval(x, measure.position(a)) * f.values[a] * measure.mass(a));
    }
    acc.value()
}

/// `sup_{y ∈ P} |F(y, P)|` for every cell `P`.
pub fn tail_sups(kernel: &Kernel, lattice: &Lattice, f: &FunctionSample) -> Vec<f64> {
    let m = lattice.measure();
    lattice
        .cells()
        .iter()
        .map(|p| {
            let ball = p.ball().scale(30.0);
            p.atoms
                .clone()
                .map(|y| tail_unchecked(kernel, m, f, m.position(y), ball).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `N_{Q0} f(x)`: the largest tail sup over cells of `D(Q0)` containing the
/// atom `x`; zero when `x ∉ Q0`.
pub fn grand_maximal(kernel: &Kernel, lattice: &Lattice, f: &FunctionSample, q0: usize, x: usize) -> f64 {
    let m = lattice.measure();
    lattice
        .chain_within(q0, x)
        .into_iter()
        .map(|p| {
            let p = lattice.cell(p);
            let ball = p.ball().scale(30.0);
            p.atoms
                .clone()
                .map(|y| tail_unchecked(kernel, m, f, m.position(y), ball).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `N_{Q0} f` at every atom, from precomputed [`tail_sups`].
pub fn grand_maximal_all(lattice: &Lattice, sups: &[f64], q0: usize) -> Vec<f64> {
    chain_max_all(lattice, q0, |p| sups[p])
}

fn chain_max_all(lattice: &Lattice, q0: usize, value: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..lattice.measure().len())
        .map(|x| lattice.chain_within(q0, x).into_iter().map(&value).fold(0.0, f64::max))
        .collect()
}

/// `A(f,Q) = int_{30B(Q)} |f| dmu / mu(alpha B(Q))`.
pub fn cell_average(measure: &AtomicMeasure, f: &FunctionSample, cell: &Cell, alpha: f64) -> f64 {
    let ball = cell.ball();
    measure.integrate_abs(&f.values, measure.ball_range(ball.scale(30.0))) / measure.mu_ball(ball.scale(alpha))
}

/// `A(f,Q)` for every cell.
pub fn cell_averages(lattice: &Lattice, f: &FunctionSample) -> Vec<f64> {
    let alpha = lattice.params().alpha;
    lattice
        .cells()
        .iter()
        .map(|c| cell_average(lattice.measure(), f, c, alpha))
        .collect()
}

/// `M_mu f(x) = sup_{x ∈ Q} A(f,Q)` at the atom `x`.
pub fn maximal_mu(lattice: &Lattice, f: &FunctionSample, x: usize) -> f64 {
    let alpha = lattice.params().alpha;
    lattice
        .chain(x)
        .into_iter()
        .map(|q| cell_average(lattice.measure(), f, lattice.cell(q), alpha))
        .fold(0.0, f64::max)
}

/// `M_mu f` at every atom, from precomputed [`cell_averages`].
pub fn maximal_mu_all(lattice: &Lattice, averages: &[f64]) -> Vec<f64> {
    chain_max_all(lattice, lattice.root(), |q| averages[q])
}

/// `M_mu f` with the supremum restricted to `D(Q0)`; zero outside `Q0`.
pub fn maximal_mu_within_all(lattice: &Lattice, averages: &[f64], q0: usize) -> Vec<f64> {
    chain_max_all(lattice, q0, |q| averages[q])
}

/// `sup_{x ∈ Q ∈ D(Q0)} Theta(Q) A(f,Q)` at the atom `x`; zero when `x ∉ Q0`.
pub fn localized_theta_maximal(lattice: &Lattice, f: &FunctionSample, q0: usize, x: usize) -> Result<f64> {
    let alpha = lattice.params().alpha;
    lattice
        .chain_within(q0, x)
        .into_iter()
        .map(|q| Ok(lattice.theta_of(q)? * cell_average(lattice.measure(), f, lattice.cell(q), alpha)))
        .try_fold(0.0, |best: f64, v: Result<f64>| Ok(best.max(v?)))
}

/// [`localized_theta_maximal`] at every atom.
pub fn localized_theta_maximal_all(lattice: &Lattice, averages: &[f64], q0: usize) -> Result<Vec<f64>> {
    let thetas: Vec<f64> = (0..lattice.cells().len())
        .map(|q| lattice.theta_of(q))
        .collect::<Result<_>>()?;
    Ok(chain_max_all(lattice, q0, |q| thetas[q] * averages[q]))
}

/// `T# f` at every atom.
pub fn max_truncation_all(kernel: &Kernel, measure: &AtomicMeasure, f: &FunctionSample) -> Vec<f64> {
    measure
        .positions()
        .iter()
        .map(|&x| max_truncation(kernel, measure, f, x))
        .collect()
}

/// `M_lambda f` at every atom.
pub fn maximal_lambda_all(measure: &AtomicMeasure, lambda: &DominatingFunction, f: &FunctionSample) -> Vec<f64> {
    measure
        .positions()
        .iter()
        .map(|&x| maximal_lambda(measure, lambda, f, x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeParams;

    fn three(h: f64) -> AtomicMeasure {
        AtomicMeasure::new(vec![(0.0, 1.0), (0.5, 2.0), (1.0, 1.0)], Some(h)).unwrap()
    }

    fn hilbert() -> Kernel {
        Kernel::hilbert(1.0, Modulus { c: 4.0, tau: 1.0 }).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let m = three(0.1);
        let one = FunctionSample::constant(&m, 1.0).unwrap();
        assert_eq!(truncated(&hilbert(), &m, &one, 0.5, 0.4), 0.0);
        assert_eq!(truncated(&hilbert(), &m, &one, 0.0, 0.4), -5.0);
        let zero = FunctionSample::zeros(&m);
        assert_eq!(truncated(&hilbert(), &m, &zero, 0.3, 0.2), 0.0);
        assert_eq!(max_truncation(&hilbert(), &m, &one, 0.5), 0.0);
        assert_eq!(max_truncation(&hilbert(), &m, &one, 0.0), 5.0);
    }

    #[test]
    fn maximal_lambda_examples() {
        let m = three(0.5);
        let one = FunctionSample::constant(&m, 1.0).unwrap();
        let constant = DominatingFunction::constant(4.0).unwrap();
        assert_eq!(maximal_lambda(&m, &constant, &one, 0.0), 1.0);
        let linear = DominatingFunction::power(1.0, 1.0).unwrap();
        assert_eq!(maximal_lambda(&m, &linear, &one, 0.5), 8.0);
        assert_eq!(maximal_lambda(&m, &linear, &FunctionSample::zeros(&m), 0.5), 0.0);
    }

    #[test]
    fn tail_examples() {
        let m = AtomicMeasure::new(vec![(0.0, 1.0), (0.001, 2.0), (1.0, 3.0)], None).unwrap();
        let p = LatticeParams::relaxed(2.0, 20.0, 4.0, 3).unwrap();
        let l = Lattice::build(&m, &p, None).unwrap();
        let f = FunctionSample::new(&m, vec![1.0, -2.0, 0.5]).unwrap();
        // a cell around the left pair with 30B missing the atom at 1
        let q = l
            .cells()
            .iter()
            .find(|c| c.contains(0) && 30.0 * c.radius < 0.99)
            .expect("a small cell around 0");
        let expected = hilbert().eval(0.0, 1.0) * 0.5 * 3.0;
        assert_eq!(tail(&hilbert(), &m, &f, 0, q).unwrap(), expected);
        // the root's 30B covers everything
        assert_eq!(tail(&hilbert(), &m, &f, 0, l.cell(l.root())).unwrap(), 0.0);
        assert!(matches!(tail(&hilbert(), &m, &f, 2, q), Err(Error::Contract(_))));
        // f supported in 30B(Q)
        let local = FunctionSample::new(&m, vec![1.0, -2.0, 0.0]).unwrap();
        assert_eq!(tail(&hilbert(), &m, &local, 0, q).unwrap(), 0.0);
    }

    #[test]
    fn cell_average_examples() {
        let m = three(0.5);
        let p = LatticeParams::relaxed(2.0, 20.0, 30.0, 0).unwrap();
        let l = Lattice::build(&m, &p, None).unwrap();
        let root = l.cell(l.root());
        let one = FunctionSample::constant(&m, 1.0).unwrap();
        assert_eq!(cell_average(&m, &one, root, 30.0), 1.0);
        assert_eq!(cell_average(&m, &FunctionSample::zeros(&m), root, 30.0), 0.0);
        assert_eq!(maximal_mu(&l, &one, 1), 1.0);
    }

    #[test]
    fn function_sample_validation() {
        let m = three(0.5);
        assert!(FunctionSample::new(&m, vec![1.0]).is_err());
        assert!(FunctionSample::new(&m, vec![1.0, f64::NAN, 0.0]).is_err());
        let f = FunctionSample::new(&m, vec![1.0, -1.0, 2.0]).unwrap();
        assert_eq!(f.l1(), 1.0 + 2.0 + 2.0);
    }
}

//! Measured constants for the comparison inequalities between truncations,
//! tails and maximal functions.

use serde::{Deserialize, Serialize};

use super::{
    cell_averages, grand_maximal_all, max_truncation_all, maximal_lambda_all, maximal_mu_all, tail_sups,
    tail_unchecked, truncated, FunctionSample, Kernel,
};
use crate::error::Result;
use crate::lattice::Lattice;
use crate::measure::DominatingFunction;

/// Truncation radii compared against `F(x,Q)`, as multiples of `r(Q)`.
pub const TRUNCATION_WINDOW: [f64; 3] = [1.0, 30.0, 60.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationComparison {
    pub window: Vec<f64>,
    /// `max |T_r f(x) - F(x,Q)| / (C_K M_lambda f(x))` over the whole lattice.
    pub constant: f64,
    /// Per-cell constants, zero where every difference vanishes.
    pub per_cell: Vec<f64>,
    /// Ratio of the largest to the smallest positive per-cell constant.
    pub spread: f64,
}

/// `|T_r f(x) - F(x,Q)| <= C C_K M_lambda f(x)` for `r ∈ {1, 30, 60} r(Q)`.
pub fn compare_truncations(
    kernel: &Kernel,
    lattice: &Lattice,
    lambda: &DominatingFunction,
    f: &FunctionSample,
) -> TruncationComparison {
    let m = lattice.measure();
    let h = m.floor();
    let ml = maximal_lambda_all(m, lambda, f);
    let per_cell: Vec<f64> = lattice
        .cells()
        .iter()
        .map(|q| {
            let ball = q.ball().scale(30.0);
            let mut c: f64 = 0.0;
            for x in q.atoms.clone() {
                let px = m.position(x);
                let tail = tail_unchecked(kernel, m, f, px, ball);
                for r in TRUNCATION_WINDOW.iter().map(|w| w * q.radius).filter(|&r| r >= h) {
                    let diff = (truncated(kernel, m, f, px, r) - tail).abs();
                    if diff > 0.0 {
                        c = c.max(diff / (kernel.size_constant * ml[x]));
                    }
                }
            }
            c
        })
        .collect();
    let constant = per_cell.iter().copied().fold(0.0, f64::max);
    let min_pos = per_cell
        .iter()
        .copied()
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    TruncationComparison {
        window: TRUNCATION_WINDOW.to_vec(),
        constant,
        spread: if min_pos.is_finite() { constant / min_pos } else { 1.0 },
        per_cell,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NTsharpReport {
    /// `max |N f - T# f| / ((||omega||_Dini + C_K) M_lambda f)` over atoms of `Q0`.
    pub constant: f64,
    pub worst_atom: Option<usize>,
    pub dini_norm: f64,
}

/// `|N_{Q0} f - T# f| <= C (||omega||_Dini + C_K) M_lambda f` on `Q0`, for
/// `f` restricted to `30B(Q0)`.
pub fn n_tsharp(
    kernel: &Kernel,
    lattice: &Lattice,
    lambda: &DominatingFunction,
    f: &FunctionSample,
    q0: usize,
) -> NTsharpReport {
    let m = lattice.measure();
    let cell = lattice.cell(q0);
    let f = f.restricted(m, cell.ball().scale(30.0));
    let sups = tail_sups(kernel, lattice, &f);
    let n = grand_maximal_all(lattice, &sups, q0);
    let t = max_truncation_all(kernel, m, &f);
    let ml = maximal_lambda_all(m, lambda, &f);
    let scale = kernel.dini_norm() + kernel.size_constant;
    let mut constant: f64 = 0.0;
    let mut worst_atom = None;
    for x in cell.atoms.clone() {
        let diff = (n[x] - t[x]).abs();
        if diff > 0.0 {
            let c = diff / (scale * ml[x]);
            if c > constant {
                constant = c;
                worst_atom = Some(x);
            }
        }
    }
    NTsharpReport {
        constant,
        worst_atom,
        dini_norm: kernel.dini_norm(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsecutiveScalesReport {
    /// `max int_{30B(parent) \ 30B(Q)} |K(x,y)||f(y)| / (Theta(parent) A(f,parent))`.
    pub constant: f64,
    pub worst_cell: Option<usize>,
}

pub fn consecutive_scales(kernel: &Kernel, lattice: &Lattice, f: &FunctionSample) -> Result<ConsecutiveScalesReport> {
    let m = lattice.measure();
    let averages = cell_averages(lattice, f);
    let mut constant: f64 = 0.0;
    let mut worst_cell = None;
    for q in lattice.cells() {
        let Some(p) = q.parent else { continue };
        let parent = lattice.cell(p);
        let outer = m.ball_range(parent.ball().scale(30.0));
        let inner = m.ball_range(q.ball().scale(30.0));
        let bound = lattice.theta_of(p)? * averages[p];
        for x in q.atoms.clone() {
            let px = m.position(x);
            let s: f64 = outer
                .clone()
                .filter(|a| !inner.contains(a))
                .map(|a| (kernel.eval(px, m.position(a)) * f.values()[a]).abs() * m.mass(a))
                .sum();
            if s > 0.0 {
                let c = s / bound;
                if c > constant {
                    constant = c;
                    worst_cell = Some(q.id);
                }
            }
        }
    }
    Ok(ConsecutiveScalesReport { constant, worst_cell })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeReport {
    /// `sup_v v mu{M_mu f > v} / ||f||_1`.
    pub constant: f64,
    pub threshold: f64,
}

/// Weak (1,1) ratio of `M_mu`: the supremum over `v` is attained just below a
/// value `t` of `M_mu f`, where it equals `t mu{M_mu f >= t}`.
pub fn weak_type_mu(lattice: &Lattice, f: &FunctionSample) -> WeakTypeReport {
    let m = lattice.measure();
    let values = maximal_mu_all(lattice, &cell_averages(lattice, f));
    weak_type_from_values(m.masses(), &values, f.l1())
}

pub(crate) fn weak_type_from_values(masses: &[f64], values: &[f64], norm: f64) -> WeakTypeReport {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut mass = 0.0;
    let mut best = WeakTypeReport {
        constant: 0.0,
        threshold: 0.0,
    };
    let mut i = 0;
    while i < order.len() {
        let t = values[order[i]];
        while i < order.len() && values[order[i]] == t {
            mass += masses[order[i]];
            i += 1;
        }
        if t > 0.0 && norm > 0.0 {
            let c = t * mass / norm;
            if c > best.constant {
                best = WeakTypeReport {
                    constant: c,
                    threshold: t,
                };
            }
        }
    }
    best
}

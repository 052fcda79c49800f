use serde::{Deserialize, Serialize};

use super::{sparse_eval_all, SparseFamilies};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operators::{
    cell_average, cell_averages, localized_theta_maximal_all, max_truncation_all, maximal_lambda_all, FunctionSample,
    Kernel,
};

/// Relative tolerance for the `rhs = 0` violation test, scaled by the largest lhs.
pub const VIOLATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub atom: usize,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
}

/// Smallest `C` in the one-step recursion inequality below a root `P`:
/// `N_P g <= sum_{P' ∈ F(P)} N_{P'} g 1_{P'} + C (A(g,P) + sum_n rho^n sum_{C_n} A(g,Q) 1_Q)`
/// with `g = f 1_{30B(P)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub root: usize,
    pub threshold: Option<f64>,
    pub constant: f64,
    pub worst_atom: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationCertificate {
    pub rows: Vec<CertificateRow>,
    /// `max lhs/rhs` over atoms with `rhs > 0`.
    pub c_star: f64,
    pub violations: Vec<usize>,
    pub tolerance: f64,
    pub decay_base: f64,
    /// `rho^n` for each family index present.
    pub coefficients: Vec<f64>,
    pub recursion: Vec<RecursionCheck>,
    /// `max M_lambda f / N~_{Q0} f`; `None` without a dominating function.
    pub lambda_over_theta: Option<f64>,
    /// `max N~_{Q0} f / S`; `None` without a dominating function.
    pub theta_over_sparse: Option<f64>,
}

impl DominationCertificate {
    pub fn recursion_constant(&self) -> f64 {
        self.recursion.iter().map(|r| r.constant).fold(0.0, f64::max)
    }
}

fn max_ratio(num: &[f64], den: &[f64]) -> f64 {
    num.iter()
        .zip(den)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&n, &d)| n / d)
        .fold(0.0, f64::max)
}

/// Pointwise `T# f <= c* S` at every atom, with the per-root recursion
/// constants and the maximal-function side.
pub fn certify(
    kernel: &Kernel,
    lattice: &Lattice,
    families: &SparseFamilies,
    f: &FunctionSample,
) -> Result<DominationCertificate> {
    let m = lattice.measure();
    if f.len() != m.len() {
        return Err(Error::InvalidFunction(format!(
            "{} values for {} atoms",
            f.len(),
            m.len()
        )));
    }
    let lhs = max_truncation_all(kernel, m, f);
    let rhs = sparse_eval_all(families, lattice, f);
    let scale = lhs.iter().copied().fold(0.0, f64::max);
    let tolerance = VIOLATION_TOLERANCE * scale;
    let mut c_star: f64 = 0.0;
    let mut violations = Vec::new();
    let rows = (0..m.len())
        .map(|a| {
            let ratio = (rhs[a] > 0.0).then(|| lhs[a] / rhs[a]);
            match ratio {
                Some(r) => c_star = c_star.max(r),
                None if lhs[a] > tolerance => violations.push(a),
                None => {}
            }
            CertificateRow {
                atom: a,
                x: m.position(a),
                lhs: lhs[a],
                rhs: rhs[a],
                ratio,
            }
        })
        .collect();

    let rho = families.decay_base;
    let alpha = lattice.params().alpha;
    let mut recursion = Vec::new();
    for sel in &families.selections {
        let root = lattice.cell(sel.root);
        let g = f.restricted(m, root.ball().scale(30.0));
        let mut denom: Vec<f64> = vec![sel.average; root.len()];
        for (i, chain) in sel.chains.iter().enumerate() {
            let w = rho.powi(i as i32 + 1);
            for &q in chain {
                let cell = lattice.cell(q);
                let a = w * cell_average(m, &g, cell, alpha);
                for x in cell.atoms.clone() {
                    denom[x - root.atoms.start] += a;
                }
            }
        }
        let mut stopped = vec![0.0; root.len()];
        for &p in &sel.stopped {
            let next = families
                .selection(p)
                .ok_or_else(|| Error::Contract(format!("stopped cell {p} was never selected from")))?;
            for x in lattice.cell(p).atoms.clone() {
                stopped[x - root.atoms.start] += next.grand_maximal_at(lattice, x);
            }
        }
        let mut check = RecursionCheck {
            root: sel.root,
            threshold: sel.threshold,
            constant: 0.0,
            worst_atom: None,
        };
        for (i, x) in root.atoms.clone().enumerate() {
            let excess = sel.grand_maximal[i] - stopped[i];
            if excess <= 0.0 {
                continue;
            }
            let c = if denom[i] > 0.0 {
                excess / denom[i]
            } else {
                f64::INFINITY
            };
            if c > check.constant {
                check.constant = c;
                check.worst_atom = Some(x);
            }
        }
        recursion.push(check);
    }

    let (lambda_over_theta, theta_over_sparse) = match lattice.lambda() {
        Some(lam) => {
            let theta_max = localized_theta_maximal_all(lattice, &cell_averages(lattice, f), families.root)?;
            (
                Some(max_ratio(&maximal_lambda_all(m, lam, f), &theta_max)),
                Some(max_ratio(&theta_max, &rhs)),
            )
        }
        None => (None, None),
    };
    let top = families.families.keys().copied().max().unwrap_or(0);

    Ok(DominationCertificate {
        rows,
        c_star,
        violations,
        tolerance,
        decay_base: rho,
        coefficients: (0..=top).map(|n| rho.powi(n as i32)).collect(),
        recursion,
        lambda_over_theta,
        theta_over_sparse,
    })
}

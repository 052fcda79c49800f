use serde::{Deserialize, Serialize};

use super::Weight;
use crate::lattice::Lattice;
use crate::operators::{weak_type_from_values, FunctionSample, WeakTypeReport};

fn cell_nu_average(lattice: &Lattice, weight: &Weight, g: &FunctionSample, q: usize) -> f64 {
    let m = lattice.measure();
    let atoms = lattice.cell(q).atoms.clone();
    let num: f64 = atoms
        .clone()
        .map(|a| g.values()[a].abs() * weight.values()[a] * m.mass(a))
        .sum();
    num / weight.w_mass(m, atoms)
}

/// `M^D_nu g(x) = sup_{x ∈ Q} nu(Q)^{-1} int_Q |g| dnu` with `dnu = w dmu`.
pub fn martingale_maximal(lattice: &Lattice, weight: &Weight, g: &FunctionSample, x: usize) -> f64 {
    lattice
        .chain(x)
        .into_iter()
        .map(|q| cell_nu_average(lattice, weight, g, q))
        .fold(0.0, f64::max)
}

pub fn martingale_maximal_all(lattice: &Lattice, weight: &Weight, g: &FunctionSample) -> Vec<f64> {
    let averages: Vec<f64> = (0..lattice.cells().len())
        .map(|q| cell_nu_average(lattice, weight, g, q))
        .collect();
    (0..lattice.measure().len())
        .map(|x| lattice.chain(x).into_iter().map(|q| averages[q]).fold(0.0, f64::max))
        .collect()
}

/// `sup_t t nu{M^D g >= t} / ||g||_{L^1(nu)}` over the values `t` of `M^D g`.
pub fn martingale_weak_type(lattice: &Lattice, weight: &Weight, g: &FunctionSample) -> WeakTypeReport {
    let m = lattice.measure();
    let nu: Vec<f64> = (0..m.len()).map(|a| weight.values()[a] * m.mass(a)).collect();
    let norm: f64 = nu.iter().zip(g.values()).map(|(n, v)| n * v.abs()).sum();
    let values = martingale_maximal_all(lattice, weight, g);
    weak_type_from_values(&nu, &values, norm)
}

/// `sup_{x ∈ Q} sigma(200B(Q))^{-1} int_{30B(Q)} |f| sigma dmu` at every atom.
pub fn sigma_maximal_all(lattice: &Lattice, weight: &Weight, f: &FunctionSample) -> Vec<f64> {
    let m = lattice.measure();
    let fs: Vec<f64> = f
        .values()
        .iter()
        .zip(weight.sigma())
        .map(|(v, s)| v.abs() * s)
        .collect();
    let averages: Vec<f64> = lattice
        .cells()
        .iter()
        .map(|q| {
            let ball = q.ball();
            m.integrate_abs(&fs, m.ball_range(ball.scale(30.0))) / weight.sigma_mass(m, m.ball_range(ball.scale(200.0)))
        })
        .collect();
    (0..m.len())
        .map(|x| lattice.chain(x).into_iter().map(|q| averages[q]).fold(0.0, f64::max))
        .collect()
}

/// Empirical norms of `M_sigma` on `L^p(sigma)` and `M^D_w` on `L^{p'}(w)`
/// over a set of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalNorms {
    pub sigma_maximal: f64,
    pub martingale: f64,
    pub tests: usize,
}

impl MaximalNorms {
    pub fn measure(lattice: &Lattice, weight: &Weight, tests: &[FunctionSample]) -> Self {
        let m = lattice.measure();
        let (p, pp) = (weight.p(), weight.p_prime());
        let lp = |v: &[f64], dens: &[f64], e: f64| -> f64 {
            v.iter()
                .zip(dens)
                .enumerate()
                .map(|(i, (x, d))| x.abs().powf(e) * d * m.mass(i))
                .sum::<f64>()
                .powf(1.0 / e)
        };
        let mut out = MaximalNorms {
            sigma_maximal: 0.0,
            martingale: 0.0,
            tests: tests.len(),
        };
        for f in tests {
            let fs = lp(f.values(), weight.sigma(), p);
            if fs > 0.0 {
                let mf = sigma_maximal_all(lattice, weight, f);
                out.sigma_maximal = out.sigma_maximal.max(lp(&mf, weight.sigma(), p) / fs);
            }
            let gw = lp(f.values(), weight.values(), pp);
            if gw > 0.0 {
                let mg = martingale_maximal_all(lattice, weight, f);
                out.martingale = out.martingale.max(lp(&mg, weight.values(), pp) / gw);
            }
        }
        out
    }
}

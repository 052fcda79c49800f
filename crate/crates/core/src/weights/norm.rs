use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cell_characteristic, MaximalNorms, Weight};
use crate::error::Result;
use crate::lattice::Lattice;
use crate::operators::{FunctionSample, Kernel};
use crate::sparse::{recurse, SelectConfig, SparseFamilies};

/// Power-iteration steps run from the best sampled pair.
pub const POWER_ITERATIONS: usize = 25;

struct Term {
    coefficient: f64,
    cell: Range<usize>,
    ball: Range<usize>,
}

/// `S(f sigma) = sum_n rho^n sum_{Q ∈ F_n} A(f sigma, Q) 1_Q` as a list of terms.
fn terms(families: &SparseFamilies, lattice: &Lattice) -> Vec<Term> {
    let m = lattice.measure();
    let alpha = lattice.params().alpha;
    families
        .members()
        .map(|(n, member)| {
            let q = lattice.cell(member.cell);
            Term {
                coefficient: families.decay_base.powi(n as i32) / m.mu_ball(q.ball().scale(alpha)),
                cell: q.atoms.clone(),
                ball: m.ball_range(q.ball().scale(30.0)),
            }
        })
        .collect()
}

fn lp_norm(lattice: &Lattice, v: &[f64], density: &[f64], e: f64) -> f64 {
    let m = lattice.measure();
    v.iter()
        .zip(density)
        .enumerate()
        .map(|(i, (x, d))| x.abs().powf(e) * d * m.mass(i))
        .sum::<f64>()
        .powf(1.0 / e)
}

fn weighted_integral(lattice: &Lattice, v: &[f64], density: &[f64], range: Range<usize>) -> f64 {
    let m = lattice.measure();
    range.map(|i| v[i].abs() * density[i] * m.mass(i)).sum()
}

fn pairing_with(terms: &[Term], lattice: &Lattice, weight: &Weight, f: &[f64], g: &[f64]) -> f64 {
    let nf = lp_norm(lattice, f, weight.sigma(), weight.p());
    let ng = lp_norm(lattice, g, weight.values(), weight.p_prime());
    if nf == 0.0 || ng == 0.0 {
        return 0.0;
    }
    let total: f64 = terms
        .iter()
        .map(|t| {
            t.coefficient
                * weighted_integral(lattice, f, weight.sigma(), t.ball.clone())
                * weighted_integral(lattice, g, weight.values(), t.cell.clone())
        })
        .sum();
    total / (nf * ng)
}

/// `|int S(f sigma) g w dmu| / (||f||_{L^p(sigma)} ||g||_{L^{p'}(w)})`; zero
/// when either norm vanishes.
pub fn sparse_pairing(families: &SparseFamilies, lattice: &Lattice, weight: &Weight, f: &[f64], g: &[f64]) -> f64 {
    pairing_with(&terms(families, lattice), lattice, weight, f, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPair {
    pub label: String,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl TestPair {
    /// The deterministic pair set: constants, `(1_{30B(Q)}, 1_Q)` for each
    /// family cell, and `trials` seeded random nonnegative pairs.
    pub fn sampled(families: &SparseFamilies, lattice: &Lattice, trials: usize, seed: u64) -> Vec<TestPair> {
        let m = lattice.measure();
        let n = m.len();
        let mut pairs = vec![TestPair {
            label: "unit".into(),
            f: vec![1.0; n],
            g: vec![1.0; n],
        }];
        for (_, member) in families.members() {
            let q = lattice.cell(member.cell);
            let ball = m.ball_range(q.ball().scale(30.0));
            pairs.push(TestPair {
                label: format!("cell:{}", member.cell),
                f: (0..n).map(|i| ball.contains(&i) as u8 as f64).collect(),
                g: (0..n).map(|i| q.contains(i) as u8 as f64).collect(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in 0..trials {
            pairs.push(TestPair {
                label: format!("random:{t}"),
                f: (0..n).map(|_| rng.gen::<f64>()).collect(),
                g: (0..n).map(|_| rng.gen::<f64>()).collect(),
            });
        }
        pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseNormEstimate {
    /// Best normalized pairing after power iteration; a lower bound for the norm.
    pub value: f64,
    /// Best normalized pairing over the sampled pairs alone.
    pub sampled_value: f64,
    pub attaining: String,
    pub pairs: usize,
}

/// Empirical lower bound for the `L^p(w)` norm of the sparse operator.
pub fn weighted_sparse_norm(
    families: &SparseFamilies,
    lattice: &Lattice,
    weight: &Weight,
    trials: usize,
    seed: u64,
) -> SparseNormEstimate {
    let pairs = TestPair::sampled(families, lattice, trials, seed);
    let mut est = SparseNormEstimate {
        value: 0.0,
        sampled_value: 0.0,
        attaining: String::new(),
        pairs: pairs.len(),
    };
    if families.is_empty() {
        return est;
    }
    let terms = terms(families, lattice);
    let mut best = 0;
    for (i, pair) in pairs.iter().enumerate() {
        let v = pairing_with(&terms, lattice, weight, &pair.f, &pair.g);
        if v > est.sampled_value {
            est.sampled_value = v;
            best = i;
        }
    }
    est.value = est.sampled_value;
    est.attaining = pairs[best].label.clone();

    let (p, pp) = (weight.p(), weight.p_prime());
    let n = lattice.measure().len();
    let mut f = pairs[best].f.clone();
    for step in 0..POWER_ITERATIONS {
        let mut h = vec![0.0; n];
        for t in &terms {
            let a = t.coefficient * weighted_integral(lattice, &f, weight.sigma(), t.ball.clone());
            for x in t.cell.clone() {
                h[x] += a;
            }
        }
        let g: Vec<f64> = h.iter().map(|v| v.powf(p - 1.0)).collect();
        let mut adj = vec![0.0; n];
        for t in &terms {
            let a = t.coefficient * weighted_integral(lattice, &g, weight.values(), t.cell.clone());
            for y in t.ball.clone() {
                adj[y] += a;
            }
        }
        let v = pairing_with(&terms, lattice, weight, &f, &g);
        if v > est.value {
            est.value = v;
            est.attaining = format!("{}+power:{}", pairs[best].label, step + 1);
        }
        let next: Vec<f64> = adj.iter().map(|v| v.powf(pp - 1.0)).collect();
        let scale = next.iter().copied().fold(0.0, f64::max);
        if !(scale > 0.0) {
            break;
        }
        f = next.iter().map(|v| v / scale).collect();
    }
    est
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityBound {
    /// `sup sigma(200B) w(Q) / (mu(alpha B) sigma(E)^{1/p} w(E)^{1/p'})`.
    pub value: f64,
    pub attaining_cell: Option<usize>,
    /// Family cells whose witness set has zero `w`- or `sigma`-mass.
    pub excluded: usize,
    pub cells: usize,
}

pub fn duality_bound(families: &SparseFamilies, lattice: &Lattice, weight: &Weight) -> DualityBound {
    let m = lattice.measure();
    let alpha = lattice.params().alpha;
    let (p, pp) = (weight.p(), weight.p_prime());
    let mut out = DualityBound {
        value: 0.0,
        attaining_cell: None,
        excluded: 0,
        cells: 0,
    };
    for (_, member) in families.members() {
        out.cells += 1;
        let q = lattice.cell(member.cell);
        let se = weight.sigma_mass_set(m, &member.witness);
        let we = weight.w_mass_set(m, &member.witness);
        if !(se > 0.0 && we > 0.0) {
            out.excluded += 1;
            continue;
        }
        let ball = q.ball();
        let num = weight.sigma_mass(m, m.ball_range(ball.scale(200.0))) * weight.w_mass(m, q.atoms.clone());
        let v = num / (m.mu_ball(ball.scale(alpha)) * se.powf(1.0 / p) * we.powf(1.0 / pp));
        if v > out.value {
            out.value = v;
            out.attaining_cell = Some(member.cell);
        }
    }
    out
}

/// Tolerance on the Hölder step, relative to `mu(E)`.
pub const HOLDER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub members: usize,
    /// Members with `mu(Q) > 2 mu(E(Q))`.
    pub half_mass_failures: Vec<usize>,
    /// Members with `mu(E) > w(E)^{1/p} sigma(E)^{1/p'}`.
    pub holder_failures: Vec<usize>,
    /// `max mu(E) / (w(E)^{1/p} sigma(E)^{1/p'})`.
    pub worst_ratio: f64,
}

impl HolderCheck {
    pub fn pass(&self) -> bool {
        self.half_mass_failures.is_empty() && self.holder_failures.is_empty()
    }
}

pub fn holder_check(families: &SparseFamilies, lattice: &Lattice, weight: &Weight) -> HolderCheck {
    let m = lattice.measure();
    let (p, pp) = (weight.p(), weight.p_prime());
    let mut out = HolderCheck {
        members: 0,
        half_mass_failures: Vec::new(),
        holder_failures: Vec::new(),
        worst_ratio: 0.0,
    };
    for (_, member) in families.members() {
        out.members += 1;
        let mu_e = m.mass_of_set(&member.witness);
        if lattice.cell(member.cell).mass > 2.0 * mu_e {
            out.half_mass_failures.push(member.cell);
        }
        let bound = weight.w_mass_set(m, &member.witness).powf(1.0 / p)
            * weight.sigma_mass_set(m, &member.witness).powf(1.0 / pp);
        if bound > 0.0 {
            out.worst_ratio = out.worst_ratio.max(mu_e / bound);
        }
        if mu_e > bound * (1.0 + HOLDER_TOLERANCE) {
            out.holder_failures.push(member.cell);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub characteristic: f64,
    pub empirical_norm: f64,
    /// `empirical_norm / characteristic`.
    pub ratio: f64,
    pub duality_bound: f64,
    pub maximal_norms: MaximalNorms,
    /// `empirical_norm / (duality_bound * ||M_sigma|| * ||M^D_w||)`.
    pub consistency: f64,
    pub family_cells: usize,
}

/// For each exponent `a`, the power weight `|x - center|^a`, the families of
/// the test function `w + sigma` (singular at `center` for either sign of `a`)
/// and the resulting norm estimate.
pub fn norm_sweep(
    kernel: &Kernel,
    lattice: &Lattice,
    exponents: &[f64],
    p: f64,
    center: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let m = lattice.measure();
    exponents
        .iter()
        .map(|&a| {
            let weight = Weight::power(m, center, a, p)?;
            let f = FunctionSample::new(
                m,
                weight.values().iter().zip(weight.sigma()).map(|(w, s)| w + s).collect(),
            )?;
            let families = recurse(kernel, lattice, &f, lattice.root(), &SelectConfig::default())?;
            let characteristic = cell_characteristic(&weight, lattice).value;
            let est = weighted_sparse_norm(&families, lattice, &weight, trials, seed);
            let dual = duality_bound(&families, lattice, &weight);
            let tests: Vec<FunctionSample> = TestPair::sampled(&families, lattice, trials, seed)
                .into_iter()
                .flat_map(|t| [t.f, t.g])
                .map(|v| FunctionSample::new(m, v))
                .collect::<Result<_>>()?;
            let maximal_norms = MaximalNorms::measure(lattice, &weight, &tests);
            let denom = dual.value * maximal_norms.sigma_maximal * maximal_norms.martingale;
            Ok(SweepRow {
                a,
                characteristic,
                empirical_norm: est.value,
                ratio: est.value / characteristic,
                duality_bound: dual.value,
                consistency: if denom > 0.0 { est.value / denom } else { 0.0 },
                maximal_norms,
                family_cells: dual.cells,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeParams;
    use crate::measure::AtomicMeasure;
    use crate::operators::Modulus;

    fn grid(n: usize) -> AtomicMeasure {
        AtomicMeasure::new(
            (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect(),
            None,
        )
        .unwrap()
    }

    fn root_only() -> (Lattice, SparseFamilies) {
        let m = grid(32);
        let l = Lattice::build(&m, &LatticeParams::relaxed(1000.0, 4.0, 200.0, 0).unwrap(), None).unwrap();
        let k = Kernel::hilbert(3.0, Modulus { c: 12.0, tau: 1.0 }).unwrap();
        let f = FunctionSample::constant(&m, 1.0).unwrap();
        let fam = recurse(&k, &l, &f, l.root(), &SelectConfig::default()).unwrap();
        (l, fam)
    }

    #[test]
    fn unit_weight_root_family() {
        let (l, fam) = root_only();
        let w = Weight::unit(l.measure(), 2.0).unwrap();
        let one = vec![1.0; 32];
        assert!((sparse_pairing(&fam, &l, &w, &one, &one) - 1.0).abs() < 1e-12);
        let est = weighted_sparse_norm(&fam, &l, &w, 4, 1);
        assert!(est.value >= 1.0 - 1e-12);
        let d = duality_bound(&fam, &l, &w);
        assert_eq!(d.value, 1.0);
        assert!(holder_check(&fam, &l, &w).pass());
    }

    #[test]
    fn empty_families_give_zero() {
        let (l, mut fam) = root_only();
        fam.families.clear();
        let w = Weight::unit(l.measure(), 2.0).unwrap();
        assert_eq!(weighted_sparse_norm(&fam, &l, &w, 4, 1).value, 0.0);
    }

    #[test]
    fn shrinking_witness_never_lowers_the_bound() {
        let (l, fam) = root_only();
        let w = Weight::power(l.measure(), 0.5, 0.4, 2.0).unwrap();
        let full = duality_bound(&fam, &l, &w).value;
        let mut smaller = fam.clone();
        for members in smaller.families.values_mut() {
            for m in members {
                m.witness.truncate(m.witness.len() / 2);
            }
        }
        assert!(duality_bound(&smaller, &l, &w).value >= full);
    }
}

#![allow(dead_code)]

pub mod oracle;

use nhsl::lattice::{Lattice, LatticeParams};
use nhsl::measure::{AtomicMeasure, DominatingFunction};
use nhsl::operators::{FunctionSample, Kernel, Modulus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub measure: AtomicMeasure,
    pub lambda: DominatingFunction,
    pub lattice: Lattice,
    pub kernel: Kernel,
    pub f: FunctionSample,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Distinct sorted positions in `[0, 1)` (clustered half the time) with
/// masses spanning several orders of magnitude.
pub fn random_measure(rng: &mut ChaCha8Rng, max_atoms: usize) -> AtomicMeasure {
    let n = rng.gen_range(2..=max_atoms);
    let clustered = rng.gen_bool(0.5);
    let mut xs: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            if clustered {
                u.powi(4)
            } else {
                u
            }
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let atoms = xs
        .into_iter()
        .map(|x| (x, 10f64.powf(rng.gen_range(-3.0..1.0))))
        .collect();
    AtomicMeasure::new(atoms, None).unwrap()
}

pub fn random_function(rng: &mut ChaCha8Rng, measure: &AtomicMeasure) -> FunctionSample {
    let values = (0..measure.len())
        .map(|_| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(-2.0..2.0)
            }
        })
        .collect();
    FunctionSample::new(measure, values).unwrap()
}

/// A random instance whose lattice builds; retries with fresh draws.
pub fn instance(seed: u64, max_atoms: usize) -> Instance {
    let mut rng = rng(seed);
    loop {
        let measure = random_measure(&mut rng, max_atoms);
        let lambda = DominatingFunction::constant(measure.total_mass()).unwrap();
        let c0 = [4.0, 50.0, 1000.0][rng.gen_range(0..3)];
        let a0 = [4.0, 8.0][rng.gen_range(0..2)];
        let alpha = [30.0, 200.0][rng.gen_range(0..2)];
        let params = LatticeParams::relaxed(c0, a0, alpha, 4).unwrap();
        let Ok(lattice) = Lattice::build(&measure, &params, Some(&lambda)) else {
            continue;
        };
        let omega = Modulus { c: 1.0, tau: 1.0 };
        let kernel = if rng.gen_bool(0.5) {
            Kernel::hilbert(1.0, omega).unwrap()
        } else {
            Kernel::smooth(rng.gen_range(1e-3..0.1), 1.0, omega).unwrap()
        };
        let f = random_function(&mut rng, &measure);
        return Instance {
            measure,
            lambda,
            lattice,
            kernel,
            f,
        };
    }
}

/// `|a - b| <= tol * scale`, with `scale` at least `|a|, |b|`.
pub fn close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(a.abs()).max(b.abs())
}

#![allow(clippy::needless_range_loop)]

//! Library operators against direct enumeration over atoms and cells.
//!
//! The library uses compensated sums and precomputed ranges. Sums with
//! cancellation are compared relative to the sum of absolute terms.

mod common;

use common::oracle::*;
use common::{close, instance};
use nhsl::operators::{
    cell_averages, grand_maximal, grand_maximal_all, max_truncation, maximal_lambda, maximal_mu, maximal_mu_all,
    tail_sups, FunctionSample,
};
use nhsl::sparse::{recurse, sparse_eval, sparse_eval_all, SelectConfig};
use nhsl::weights::{cell_characteristic, Weight};
use rand::Rng;

const CASES: u64 = 100;
const MAX_ATOMS: usize = 200;
const TOL: f64 = 1e-12;

#[test]
fn max_truncation_matches_enumeration() {
    for seed in 0..CASES {
        let inst = instance(seed, MAX_ATOMS);
        for (a, &x) in inst.measure.positions().iter().enumerate() {
            let got = max_truncation(&inst.kernel, &inst.measure, &inst.f, x);
            let (want, scale) = oracle_max_truncation(&inst, x);
            assert!(close(got, want, TOL, scale), "seed {seed} atom {a}: {got} vs {want}");
        }
    }
}

#[test]
fn maximal_lambda_matches_enumeration() {
    for seed in 0..CASES {
        let inst = instance(1000 + seed, MAX_ATOMS);
        for (a, &x) in inst.measure.positions().iter().enumerate() {
            let got = maximal_lambda(&inst.measure, &inst.lambda, &inst.f, x);
            let want = oracle_maximal_lambda(&inst, x);
            assert!(close(got, want, TOL, 0.0), "seed {seed} atom {a}: {got} vs {want}");
        }
    }
}

#[test]
fn maximal_mu_matches_enumeration() {
    for seed in 0..CASES {
        let inst = instance(2000 + seed, MAX_ATOMS);
        let all = maximal_mu_all(&inst.lattice, &cell_averages(&inst.lattice, &inst.f));
        for x in 0..inst.measure.len() {
            let want = oracle_maximal_mu(&inst, x);
            let got = maximal_mu(&inst.lattice, &inst.f, x);
            assert!(close(got, want, TOL, 0.0), "seed {seed} atom {x}: {got} vs {want}");
            assert!(
                close(all[x], want, TOL, 0.0),
                "seed {seed} atom {x}: {} vs {want}",
                all[x]
            );
        }
    }
}

#[test]
fn grand_maximal_matches_enumeration() {
    for seed in 0..CASES {
        let inst = instance(3000 + seed, MAX_ATOMS);
        let l = &inst.lattice;
        let q0 = common::rng(seed).gen_range(0..l.cells().len());
        let all = grand_maximal_all(l, &tail_sups(&inst.kernel, l, &inst.f), q0);
        for x in 0..inst.measure.len() {
            let (want, scale) = oracle_grand_maximal(&inst, q0, x);
            let got = grand_maximal(&inst.kernel, l, &inst.f, q0, x);
            assert!(close(got, want, TOL, scale), "seed {seed} atom {x}: {got} vs {want}");
            assert!(
                close(all[x], want, TOL, scale),
                "seed {seed} atom {x}: {} vs {want}",
                all[x]
            );
        }
    }
}

#[test]
fn sparse_eval_matches_enumeration() {
    let mut done = 0;
    let mut seed = 4000;
    while done < CASES {
        seed += 1;
        let inst = instance(seed, MAX_ATOMS);
        let l = &inst.lattice;
        let Ok(fam) = recurse(&inst.kernel, l, &inst.f, l.root(), &SelectConfig::default()) else {
            continue;
        };
        done += 1;
        let all = sparse_eval_all(&fam, l, &inst.f);
        for x in 0..inst.measure.len() {
            let want = oracle_sparse_eval(l, &fam, inst.f.values(), x);
            let got = sparse_eval(&fam, l, &inst.f, x);
            assert!(close(got, want, TOL, 0.0), "seed {seed} atom {x}: {got} vs {want}");
            assert!(
                close(all[x], want, TOL, 0.0),
                "seed {seed} atom {x}: {} vs {want}",
                all[x]
            );
        }
    }
}

#[test]
fn cell_characteristic_matches_enumeration() {
    for seed in 0..CASES {
        let inst = instance(5000 + seed, MAX_ATOMS);
        let l = &inst.lattice;
        let m = &inst.measure;
        let mut rng = common::rng(seed);
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let values: Vec<f64> = (0..m.len()).map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect();
        let w = Weight::new(m, values, p).unwrap();
        let want = oracle_cell_characteristic(l, &w);
        let got = cell_characteristic(&w, l).value;
        assert!(close(got, want, TOL, 0.0), "seed {seed} p {p}: {got} vs {want}");
    }
}

#[test]
fn zero_function_gives_zero_everywhere() {
    let inst = instance(77, 50);
    let z = FunctionSample::zeros(&inst.measure);
    for &x in inst.measure.positions() {
        assert_eq!(max_truncation(&inst.kernel, &inst.measure, &z, x), 0.0);
        assert_eq!(maximal_lambda(&inst.measure, &inst.lambda, &z, x), 0.0);
    }
}

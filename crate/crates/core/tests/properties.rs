mod common;

use common::instance;
use nhsl::lattice::{check_lattice, Lattice, LatticeParams};
use nhsl::operators::weak_type_mu;
use nhsl::sparse::{certify, check_families, recurse, SelectConfig};
use nhsl::weights::{cell_characteristic, martingale_weak_type, Weight};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lattice_suite_and_theta(seed in any::<u64>()) {
        let inst = instance(seed, 300);
        let check = check_lattice(&inst.lattice);
        prop_assert!(check.pass, "{:?}", check.checks.iter().filter(|c| !c.ok).collect::<Vec<_>>());
        for q in 0..inst.lattice.cells().len() {
            let t = inst.lattice.theta_of(q).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0, "cell {q}: theta {t}");
        }
    }

    #[test]
    fn doubling_flags_are_exact(seed in any::<u64>()) {
        let inst = instance(seed, 300);
        let l = &inst.lattice;
        let c0 = l.params().c0;
        for c in l.cells().iter().filter(|c| c.doubling) {
            let b = c.ball();
            prop_assert!(l.measure().mu_ball(b.scale(100.0)) <= c0 * l.measure().mu_ball(b));
        }
        for c in l.cells().iter().filter(|c| !c.doubling) {
            prop_assert_eq!(c.radius, c.base_radius);
        }
    }

    #[test]
    fn families_are_sparse(seed in any::<u64>()) {
        let inst = instance(seed, 200);
        let l = &inst.lattice;
        if let Ok(fam) = recurse(&inst.kernel, l, &inst.f, l.root(), &SelectConfig::default()) {
            let r = check_families(l, &fam);
            prop_assert!(r.pass, "{r:?}");
            let cert = certify(&inst.kernel, l, &fam, &inst.f).unwrap();
            prop_assert!(cert.violations.is_empty());
            prop_assert!(cert.c_star.is_finite());
        }
    }

    #[test]
    fn certificate_is_homogeneous(seed in any::<u64>(), c in 0.01f64..100.0) {
        let inst = instance(seed, 120);
        let l = &inst.lattice;
        let cfg = SelectConfig::default();
        let (Ok(a), Ok(b)) = (
            recurse(&inst.kernel, l, &inst.f, l.root(), &cfg),
            recurse(&inst.kernel, l, &inst.f.scaled(&inst.measure, c).unwrap(), l.root(), &cfg),
        ) else { return Ok(()) };
        prop_assert_eq!(
            a.members().map(|(n, m)| (n, m.cell)).collect::<Vec<_>>(),
            b.members().map(|(n, m)| (n, m.cell)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn weak_type_bounds(seed in any::<u64>()) {
        let inst = instance(seed, 300);
        prop_assert!(weak_type_mu(&inst.lattice, &inst.f).constant <= 10.0);
        let w = Weight::power(&inst.measure, 0.3, -0.4, 2.0).unwrap();
        prop_assert!(martingale_weak_type(&inst.lattice, &w, &inst.f).constant <= 1.0 + 1e-12);
    }

    #[test]
    fn weight_identities(seed in any::<u64>(), a in -0.95f64..0.95, c in 1e-3f64..1e3, p in 1.2f64..6.0) {
        let inst = instance(seed, 200);
        let w = Weight::power(&inst.measure, 0.5, a, p).unwrap();
        prop_assert!(w.duality_defect() <= 1e-12);
        let w2 = Weight::power(&inst.measure, 0.5, a, 2.0).unwrap();
        let x = cell_characteristic(&w2, &inst.lattice).value;
        let y = cell_characteristic(&w2.scaled(c).unwrap(), &inst.lattice).value;
        prop_assert!((x - y).abs() <= 1e-12 * x);
    }

    #[test]
    fn unit_weight_characteristic(seed in any::<u64>()) {
        let inst = instance(seed, 200);
        let params = LatticeParams { alpha: 200.0, ..inst.lattice.params().clone() };
        let l = Lattice::build(&inst.measure, &params, Some(&inst.lambda)).unwrap();
        let w = Weight::unit(&inst.measure, 2.0).unwrap();
        prop_assert_eq!(cell_characteristic(&w, &l).value, 1.0);
    }
}

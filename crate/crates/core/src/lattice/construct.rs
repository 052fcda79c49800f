//! Nets, extended intervals and the supervising map of one level.

use serde::{Deserialize, Serialize};

use super::LatticeParams;
use crate::error::{Error, Result};
use crate::measure::{distance, AtomicMeasure, Interval};

/// A net point `x` with its base ball `B(x) = B(x, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetPoint {
    pub atom: usize,
    pub x: f64,
    pub radius: f64,
}

/// Base radius `scale * A0^-k`.
pub fn base_radius(scale: f64, params: &LatticeParams, k: usize) -> f64 {
    scale / params.a0.powi(k as i32)
}

/// Greedy left-to-right net at level `k`: an atom joins when its `5B` misses
/// the `5B` of the last kept point.
pub fn build_net(measure: &AtomicMeasure, k: usize, params: &LatticeParams, scale: f64) -> Result<Vec<NetPoint>> {
    build_net_with_radius(measure, base_radius(scale, params, k))
}

pub fn build_net_with_radius(measure: &AtomicMeasure, radius: f64) -> Result<Vec<NetPoint>> {
    if radius < measure.floor() {
        return Err(Error::BelowResolutionFloor {
            scale: radius,
            floor: measure.floor(),
        });
    }
    let mut net: Vec<NetPoint> = Vec::new();
    for (atom, &x) in measure.positions().iter().enumerate() {
        // closed balls of radius 5b are disjoint iff the centers are > 10b apart
        if net.last().is_none_or(|last| distance(x, last.x) > 10.0 * radius) {
            net.push(NetPoint { atom, x, radius });
        }
    }
    Ok(net)
}

/// Grows `5B(x)` outward at speed `r(x)` until it reaches an endpoint of
/// `25B(x)` or meets the neighbouring extension.
pub fn extend_intervals(net: &[NetPoint]) -> Vec<Interval> {
    let n = net.len();
    let mut out: Vec<Interval> = net
        .iter()
        .map(|p| Interval::new(p.x - 25.0 * p.radius, p.x + 25.0 * p.radius))
        .collect();
    for i in 0..n.saturating_sub(1) {
        let (l, r) = (net[i], net[i + 1]);
        let a = l.x + 5.0 * l.radius;
        let b = r.x - 5.0 * r.radius;
        // both fronts start at the same time; each has 20 time units to reach 25B
        let t = (b - a) / (l.radius + r.radius);
        if t <= 20.0 {
            let meet = a + l.radius * t;
            out[i].hi = meet;
            out[i + 1].lo = meet;
        }
    }
    out
}

/// Index of the first coarse interval containing `x`; shared endpoints go to
/// the left interval.
pub fn first_containing(intervals: &[Interval], x: f64) -> Option<usize> {
    let i = intervals.partition_point(|iv| iv.hi < x);
    (i < intervals.len() && intervals[i].contains(x)).then_some(i)
}

/// `h(y)` for every finer net point `y`: the coarse point whose extended
/// interval contains `y`.
pub fn supervise(fine: &[NetPoint], coarse: &[Interval]) -> Result<Vec<usize>> {
    let map: Vec<usize> = fine
        .iter()
        .map(|p| {
            first_containing(coarse, p.x)
                .ok_or_else(|| Error::Construction(format!("net point {} is covered by no extended interval", p.x)))
        })
        .collect::<Result<_>>()?;
    if map.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Construction("supervising map is not monotone".into()));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(xs: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(xs.iter().map(|&x| (x, 1.0)).collect(), Some(1e-4)).unwrap()
    }

    fn xs(net: &[NetPoint]) -> Vec<f64> {
        net.iter().map(|p| p.x).collect()
    }

    #[test]
    fn net_examples() {
        assert_eq!(xs(&build_net_with_radius(&atoms(&[0.3]), 0.01).unwrap()), vec![0.3]);
        assert_eq!(
            xs(&build_net_with_radius(&atoms(&[0.0, 0.5, 1.0]), 0.01).unwrap()),
            vec![0.0, 0.5, 1.0]
        );
        let net = build_net_with_radius(&atoms(&[0.0, 0.01]), 0.01).unwrap();
        assert_eq!(xs(&net), vec![0.0]);
        let b = extend_intervals(&net);
        assert_eq!(b[0], Interval::new(-0.25, 0.25));
        assert!(b[0].contains(0.01));
    }

    #[test]
    fn net_below_floor_is_refused() {
        assert!(matches!(
            build_net_with_radius(&atoms(&[0.0, 1.0]), 1e-5),
            Err(Error::BelowResolutionFloor { .. })
        ));
    }

    #[test]
    fn extension_examples() {
        let net = build_net_with_radius(&atoms(&[0.0, 1.0]), 0.01).unwrap();
        let b = extend_intervals(&net);
        assert_eq!(b, vec![Interval::new(-0.25, 0.25), Interval::new(0.75, 1.25)]);

        let net = build_net_with_radius(&atoms(&[0.0, 0.3]), 0.01).unwrap();
        let b = extend_intervals(&net);
        assert!((b[0].hi - 0.15).abs() < 1e-15);
        assert_eq!(b[0].hi, b[1].lo);
        assert_eq!(b[0].lo, -0.25);
        assert!((b[1].hi - 0.55).abs() < 1e-15);

        let single = build_net_with_radius(&atoms(&[0.5]), 0.01).unwrap();
        assert_eq!(extend_intervals(&single), vec![Interval::new(0.25, 0.75)]);
    }

    #[test]
    fn supervise_examples() {
        let coarse = vec![Interval::new(-0.25, 0.15), Interval::new(0.15, 0.55)];
        let fine: Vec<NetPoint> = [0.0, 0.1, 0.3, 0.15]
            .iter()
            .map(|&x| NetPoint {
                atom: 0,
                x,
                radius: 1e-3,
            })
            .collect();
        let h: Vec<usize> = fine.iter().map(|p| first_containing(&coarse, p.x).unwrap()).collect();
        assert_eq!(h, vec![0, 0, 1, 0]);
        assert_eq!(supervise(&fine[..3], &coarse).unwrap(), vec![0, 0, 1]);
        let one = vec![Interval::new(0.0, 1.0)];
        assert_eq!(supervise(&fine[..3], &one).unwrap(), vec![0, 0, 0]);
        let stray = [NetPoint {
            atom: 0,
            x: 2.0,
            radius: 1e-3,
        }];
        assert!(matches!(supervise(&stray, &one), Err(Error::Construction(_))));
    }

    proptest::proptest! {
        #[test]
        fn net_and_extension_invariants(
            raw in proptest::collection::btree_set(0u32..4096, 1..200),
            b_exp in 0u32..6,
        ) {
            let positions: Vec<f64> = raw.iter().map(|&i| i as f64 / 4096.0).collect();
            let m = AtomicMeasure::new(positions.iter().map(|&x| (x, 1.0)).collect(), Some(1.0 / 4096.0)).unwrap();
            let b = 2f64.powi(b_exp as i32) / 4096.0;
            let net = build_net_with_radius(&m, b).unwrap();
            // 5B pairwise disjoint
            for w in net.windows(2) {
                proptest::prop_assert!(w[1].x - 5.0 * b > w[0].x + 5.0 * b);
            }
            // maximal: every skipped atom hits some 5B
            for &p in &positions {
                let blocked = net.iter().any(|q| distance(p, q.x) <= 10.0 * b);
                proptest::prop_assert!(blocked);
            }
            let ext = extend_intervals(&net);
            for (q, iv) in net.iter().zip(&ext) {
                proptest::prop_assert!(iv.lo <= q.x - 5.0 * b && q.x + 5.0 * b <= iv.hi);
                proptest::prop_assert!(q.x - 25.0 * b <= iv.lo && iv.hi <= q.x + 25.0 * b);
            }
            for w in ext.windows(2) {
                proptest::prop_assert!(w[0].hi <= w[1].lo);
            }
            for &p in &positions {
                proptest::prop_assert!(first_containing(&ext, p).is_some());
            }
        }
    }
}

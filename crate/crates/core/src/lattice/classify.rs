use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::LatticeParams;
use crate::measure::{distance, AtomicMeasure, Ball};

/// `mu(100 B) <= C0 mu(B)`.
pub fn is_doubling_ball(measure: &AtomicMeasure, c0: f64, ball: Ball) -> bool {
    measure.mu_ball(ball.scale(100.0)) <= c0 * measure.mu_ball(ball)
}

/// Neighbouring `5B` balls on the same level that an enlarged ball must miss.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neighbors {
    /// Center and final radius of the left neighbour.
    pub left: Option<(f64, f64)>,
    /// Center and base radius of the right neighbour.
    pub right: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthViolation {
    pub multiplier: f64,
    /// Whether the multiplier was inside the admissible scan window.
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub doubling: bool,
    pub radius: f64,
    pub multiplier: f64,
    /// `mu(100B) / mu(B)` at the chosen radius.
    pub ratio: f64,
    /// Largest multiplier inside the admissible window.
    pub window: f64,
    pub violations: Vec<GrowthViolation>,
}

/// Scans radii `c * base` for the doubling condition.
///
/// Multipliers beyond 1 are admissible only while the ball's atoms stay inside
/// the cell and its `5B` misses the neighbouring `5B` balls; the scan stops at
/// the first inadmissible multiplier. Non-doubling cells keep the base radius
/// and are tested against the doubling condition at every dilation sample.
pub fn classify_doubling(
    measure: &AtomicMeasure,
    params: &LatticeParams,
    atoms: Range<usize>,
    center: f64,
    base: f64,
    neighbors: Neighbors,
) -> Classification {
    let admissible = |c: f64| {
        if c == 1.0 {
            return true;
        }
        let r = c * base;
        let inside = measure.ball_range(Ball::new(center, r));
        if inside.start < atoms.start || inside.end > atoms.end {
            return false;
        }
        let apart = |(z, rz): (f64, f64)| distance(center, z) > 5.0 * rz + 5.0 * r;
        neighbors.left.is_none_or(apart) && neighbors.right.is_none_or(apart)
    };
    let ratio_at = |r: f64| {
        let ball = Ball::new(center, r);
        measure.mu_ball(ball.scale(100.0)) / measure.mu_ball(ball)
    };

    let mut window = 1.0;
    for c in params.scan_multipliers() {
        if !admissible(c) {
            break;
        }
        window = c;
        let ball = Ball::new(center, c * base);
        if is_doubling_ball(measure, params.c0, ball) {
            return Classification {
                doubling: true,
                radius: ball.radius,
                multiplier: c,
                ratio: ratio_at(ball.radius),
                window,
                violations: Vec::new(),
            };
        }
    }

    let violations = params
        .dilation_samples()
        .into_iter()
        .filter(|&c| is_doubling_ball(measure, params.c0, Ball::new(center, c * base)))
        .map(|c| GrowthViolation {
            multiplier: c,
            in_window: c <= window,
        })
        .collect();
    Classification {
        doubling: false,
        radius: base,
        multiplier: 1.0,
        ratio: ratio_at(base),
        window,
        violations,
    }
}

//! Atomic measures on the line, closed balls, dominating functions and the
//! upper-doubling / geometric-doubling diagnostics.
//!
//! A non-atomic measure is modelled by finitely many point masses together
//! with a resolution floor `h`: statements about radii or truncation scales are
//! only made for scales `>= h`.

mod dimension;
mod dominating;
pub mod io;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dimension::{estimate_doubling_dimension, DimensionReport, SeparatedCount};
pub use dominating::{
    regularize_dominating, verify_upper_doubling, DominatingFunction, LambdaFamily, LambdaGrid, LambdaTable,
    UpperDoublingReport, UpperDoublingSamples, Witness,
};

/// Closed ball `{y : |y - center| <= radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: f64,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: f64, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative radius {radius}");
        Ball { center, radius }
    }

    /// `c B`: same center, radius multiplied by `c`.
    pub fn scale(&self, c: f64) -> Ball {
        Ball::new(self.center, self.radius * c)
    }

    #[inline]
    pub fn contains(&self, p: f64) -> bool {
        distance(p, self.center) <= self.radius
    }

    pub fn as_interval(&self) -> Interval {
        Interval::new(self.center - self.radius, self.center + self.radius)
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Dilate about the midpoint by `c`.
    pub fn dilate(&self, c: f64) -> Interval {
        let mid = self.center();
        let half = 0.5 * self.len() * c;
        Interval::new(mid - half, mid + half)
    }
}

/// Euclidean distance on the line; every membership test goes through here so
/// that ball queries and brute-force enumeration agree bit for bit.
#[inline]
pub fn distance(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Finite sum of point masses with a declared resolution floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct AtomicMeasure {
    positions: Vec<f64>,
    masses: Vec<f64>,
    floor: f64,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<(f64, f64)>,
    resolution_floor: f64,
}

impl TryFrom<MeasureRepr> for AtomicMeasure {
    type Error = Error;

    fn try_from(repr: MeasureRepr) -> Result<Self> {
        AtomicMeasure::new(repr.atoms, Some(repr.resolution_floor))
    }
}

impl From<AtomicMeasure> for MeasureRepr {
    fn from(m: AtomicMeasure) -> Self {
        MeasureRepr {
            atoms: m.atoms().collect(),
            resolution_floor: m.floor,
        }
    }
}

/// Default floor for a measure with a single atom, where no gap is available.
const SINGLE_ATOM_FLOOR: f64 = 1.0;

impl AtomicMeasure {
    /// Builds a measure from `(position, mass)` pairs in any order.
    ///
    /// Without an explicit floor, `h` is the minimal gap between consecutive
    /// atoms.
    pub fn new(atoms: Vec<(f64, f64)>, floor: Option<f64>) -> Result<Self> {
        Self::with_floor_factor(atoms, floor, 1.0)
    }

    /// Like [`AtomicMeasure::new`] but accepts floors up to `factor` times the
    /// minimal gap.
    pub fn with_floor_factor(mut atoms: Vec<(f64, f64)>, floor: Option<f64>, factor: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidMeasure(format!("floor factor {factor} must be positive")));
        }
        for &(p, m) in &atoms {
            if !p.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite position {p}")));
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "mass {m} at {p} is not strictly positive and finite"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidMeasure(format!("duplicate atom position {}", w[0].0)));
        }
        let positions: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let masses: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let min_gap = positions.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let floor = match floor {
            Some(h) => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("resolution floor {h} must be positive")));
                }
                if min_gap.is_finite() && h > min_gap * factor {
                    return Err(Error::InvalidMeasure(format!(
                        "resolution floor {h} exceeds {factor} x minimal gap {min_gap}"
                    )));
                }
                h
            }
            None if min_gap.is_finite() => min_gap * factor,
            None => SINGLE_ATOM_FLOOR,
        };
        let total = masses.iter().sum();
        Ok(AtomicMeasure {
            positions,
            masses,
            floor,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn position(&self, i: usize) -> f64 {
        self.positions[i]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.masses.iter().copied())
    }

    /// Resolution floor `h`.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.positions[self.len() - 1] - self.positions[0]
    }

    pub fn support_hull(&self) -> Interval {
        Interval::new(self.positions[0], self.positions[self.len() - 1])
    }

    /// Index range of the atoms inside a closed ball. Atoms are sorted, so the
    /// intersection is contiguous.
    pub fn ball_range(&self, ball: Ball) -> Range<usize> {
        let (c, r) = (ball.center, ball.radius);
        let lo = self.positions.partition_point(|&p| p < c && distance(p, c) > r);
        let hi = self.positions.partition_point(|&p| p <= c || distance(p, c) <= r);
        lo..hi.max(lo)
    }

    /// Index range of the atoms inside a closed interval.
    pub fn interval_range(&self, interval: Interval) -> Range<usize> {
        let lo = self.positions.partition_point(|&p| p < interval.lo);
        let hi = self.positions.partition_point(|&p| p <= interval.hi);
        lo..hi.max(lo)
    }

    /// `mu(B)` for a closed ball: exact sum of the masses inside.
    pub fn mu_ball(&self, ball: Ball) -> f64 {
        self.mass_of(self.ball_range(ball))
    }

    /// Mass of a contiguous index range, summed in index order.
    pub fn mass_of(&self, range: Range<usize>) -> f64 {
        self.masses[range].iter().sum()
    }

    /// Mass of an arbitrary index set, summed in the given order.
    pub fn mass_of_set(&self, atoms: &[usize]) -> f64 {
        atoms.iter().map(|&i| self.masses[i]).sum()
    }

    /// `sum_{i in range} |values[i]| * mass[i]`.
    pub fn integrate_abs(&self, values: &[f64], range: Range<usize>) -> f64 {
        range.map(|i| values[i].abs() * self.masses[i]).sum()
    }

    /// Index of an atom located exactly at `x`.
    pub fn atom_at(&self, x: f64) -> Option<usize> {
        self.positions.binary_search_by(|p| p.total_cmp(&x)).ok()
    }

    /// Atom indices ordered by distance from `x` (ties: left atom first),
    /// produced by merging the two sorted halves.
    pub fn by_distance(&self, x: f64) -> Vec<(f64, usize)> {
        let n = self.len();
        let split = self.positions.partition_point(|&p| p < x);
        let mut out = Vec::with_capacity(n);
        let (mut l, mut r) = (split, split);
        while l > 0 || r < n {
            let dl = if l > 0 {
                distance(self.positions[l - 1], x)
            } else {
                f64::INFINITY
            };
            let dr = if r < n {
                distance(self.positions[r], x)
            } else {
                f64::INFINITY
            };
            if dl <= dr {
                out.push((dl, l - 1));
                l -= 1;
            } else {
                out.push((dr, r));
                r += 1;
            }
        }
        out
    }
}

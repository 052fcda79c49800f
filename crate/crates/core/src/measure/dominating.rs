use serde::{Deserialize, Serialize};

use super::{distance, AtomicMeasure, Ball};
use crate::error::{Error, Result};

/// Tabulated dominating function over a grid of centers and radii.
///
/// Lookups take the nearest tabulated center and the smallest tabulated radius
/// `>= r` (the last radius beyond the grid), which keeps the table
/// nondecreasing in `r` and preserves domination between grid radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTable {
    pub xs: Vec<f64>,
    pub radii: Vec<f64>,
    /// Row per center, column per radius.
    pub values: Vec<Vec<f64>>,
}

impl LambdaTable {
    fn validate(&self) -> Result<()> {
        if self.xs.is_empty() || self.radii.is_empty() {
            return Err(Error::InvalidDominating("empty table".into()));
        }
        if self.values.len() != self.xs.len() || self.values.iter().any(|r| r.len() != self.radii.len()) {
            return Err(Error::InvalidDominating("table shape does not match its axes".into()));
        }
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&self.xs) || !sorted(&self.radii) {
            return Err(Error::InvalidDominating(
                "table axes must be strictly increasing".into(),
            ));
        }
        if self.values.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidDominating("table values must be positive".into()));
        }
        Ok(())
    }

    fn nearest_x(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&p| p < x);
        if i == 0 {
            0
        } else if i == self.xs.len() || x - self.xs[i - 1] <= self.xs[i] - x {
            i - 1
        } else {
            i
        }
    }

    fn eval(&self, x: f64, r: f64) -> f64 {
        let row = &self.values[self.nearest_x(x)];
        let j = self.radii.partition_point(|&q| q < r).min(self.radii.len() - 1);
        row[j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LambdaFamily {
    /// `c * r^s`
    Power {
        #[serde(rename = "c")]
        coefficient: f64,
        #[serde(rename = "s")]
        exponent: f64,
    },
    Constant {
        value: f64,
    },
    Table(LambdaTable),
}

/// Dominating function `lambda(x, r)` together with its doubling constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominatingFunction {
    #[serde(flatten)]
    pub family: LambdaFamily,
    #[serde(rename = "C_lambda")]
    pub constant: f64,
}

impl DominatingFunction {
    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        Self::new(LambdaFamily::Power { coefficient, exponent }, 2f64.powf(exponent))
    }

    pub fn constant(value: f64) -> Result<Self> {
        // Any C_lambda > 1 works for a constant; 2 is the conventional choice.
        Self::new(LambdaFamily::Constant { value }, 2.0)
    }

    pub fn new(family: LambdaFamily, constant: f64) -> Result<Self> {
        let f = DominatingFunction { family, constant };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.constant >= 1.0 && self.constant.is_finite()) {
            return Err(Error::InvalidDominating(format!(
                "C_lambda = {} must be finite and at least 1",
                self.constant
            )));
        }
        match &self.family {
            LambdaFamily::Power { coefficient, exponent } => {
                if !(*coefficient > 0.0 && coefficient.is_finite()) {
                    return Err(Error::InvalidDominating(format!("coefficient {coefficient}")));
                }
                if !(*exponent >= 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidDominating(format!("exponent {exponent}")));
                }
            }
            LambdaFamily::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(Error::InvalidDominating(format!("constant {value}")));
                }
            }
            LambdaFamily::Table(t) => t.validate()?,
        }
        Ok(())
    }

    /// `lambda(x, r)`.
    pub fn eval(&self, x: f64, r: f64) -> f64 {
        match &self.family {
            LambdaFamily::Power { coefficient, exponent } => coefficient * r.powf(*exponent),
            LambdaFamily::Constant { value } => *value,
            LambdaFamily::Table(t) => t.eval(x, r),
        }
    }
}

/// Sample grid for tabulating a regularized dominating function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub xs: Vec<f64>,
    pub radii: Vec<f64>,
}

impl LambdaGrid {
    /// Atom positions and a geometric radius grid from `h` to twice the
    /// diameter with ratio `2^(1/steps_per_octave)`.
    pub fn for_measure(measure: &AtomicMeasure, steps_per_octave: usize) -> Self {
        let h = measure.floor();
        let top = (2.0 * measure.diameter()).max(2.0 * h);
        let ratio = 2f64.powf(1.0 / steps_per_octave.max(1) as f64);
        let mut radii = vec![h];
        while *radii.last().unwrap() < top {
            let next = radii.last().unwrap() * ratio;
            radii.push(next);
        }
        LambdaGrid {
            xs: measure.positions().to_vec(),
            radii,
        }
    }
}

/// Largest admissible ratio between consecutive grid radii; coarser grids
/// cannot resolve the halving inequality.
const MAX_GRID_RATIO: f64 = 2.0;

/// Tabulates `inf_z lambda(z, r + |x - z|)`, the infimum running over atom
/// positions plus the query point itself.
pub fn regularize_dominating(
    lambda: &DominatingFunction,
    measure: &AtomicMeasure,
    grid: &LambdaGrid,
) -> Result<DominatingFunction> {
    let h = measure.floor();
    if grid.xs.is_empty() || grid.radii.is_empty() {
        return Err(Error::GridTooCoarse("empty sample grid".into()));
    }
    if !grid.radii.windows(2).all(|w| w[0] < w[1]) || !grid.xs.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::GridTooCoarse("grid axes must be strictly increasing".into()));
    }
    if grid.radii[0] < h {
        return Err(Error::GridTooCoarse(format!(
            "smallest radius {} lies below the resolution floor {h}",
            grid.radii[0]
        )));
    }
    if let Some(w) = grid.radii.windows(2).find(|w| w[1] > MAX_GRID_RATIO * w[0]) {
        return Err(Error::GridTooCoarse(format!(
            "radius step {} -> {} exceeds ratio {MAX_GRID_RATIO}",
            w[0], w[1]
        )));
    }
    let values = grid
        .xs
        .iter()
        .map(|&x| {
            grid.radii
                .iter()
                .map(|&r| {
                    measure
                        .positions()
                        .iter()
                        .map(|&z| lambda.eval(z, r + distance(x, z)))
                        .fold(lambda.eval(x, r), f64::min)
                })
                .collect()
        })
        .collect();
    DominatingFunction::new(
        LambdaFamily::Table(LambdaTable {
            xs: grid.xs.clone(),
            radii: grid.radii.clone(),
            values,
        }),
        lambda.constant,
    )
}

/// Centers and radii at which the upper-doubling inequalities are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperDoublingSamples {
    pub xs: Vec<f64>,
    pub radii: Vec<f64>,
    /// Also check domination at every atom-distance breakpoint from each center.
    pub breakpoints: bool,
}

impl UpperDoublingSamples {
    pub fn exhaustive(measure: &AtomicMeasure) -> Self {
        let grid = LambdaGrid::for_measure(measure, 2);
        UpperDoublingSamples {
            xs: measure.positions().to_vec(),
            radii: grid.radii,
            breakpoints: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub ratio: f64,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Witness {
    fn none() -> Self {
        Witness {
            ratio: 0.0,
            x: f64::NAN,
            y: f64::NAN,
            r: f64::NAN,
        }
    }

    fn offer(&mut self, ratio: f64, x: f64, y: f64, r: f64) {
        if ratio > self.ratio {
            *self = Witness { ratio, x, y, r };
        }
    }
}

/// Worst-case ratios of the three upper-doubling inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperDoublingReport {
    /// `max mu(B(x,r)) / lambda(x,r)`, must be `<= 1`.
    pub domination: Witness,
    /// `max lambda(x,r) / lambda(x,r/2)`, must be `<= C_lambda`.
    pub halving: Witness,
    /// `max lambda(x,r) / lambda(y,r)` over `|x-y| <= r`, must be `<= C_lambda`.
    pub locality: Witness,
    pub declared_constant: f64,
    /// Largest of the halving and locality ratios.
    pub achieved_constant: f64,
    pub pass: bool,
}

pub fn verify_upper_doubling(
    measure: &AtomicMeasure,
    lambda: &DominatingFunction,
    samples: &UpperDoublingSamples,
) -> UpperDoublingReport {
    let h = measure.floor();
    let radii: Vec<f64> = samples.radii.iter().copied().filter(|&r| r >= h).collect();
    let mut domination = Witness::none();
    let mut halving = Witness::none();
    let mut locality = Witness::none();

    for &x in &samples.xs {
        for &r in &radii {
            let mu = measure.mu_ball(Ball::new(x, r));
            let lam = lambda.eval(x, r);
            domination.offer(mu / lam, x, x, r);
            halving.offer(lam / lambda.eval(x, 0.5 * r), x, x, r);
        }
        if samples.breakpoints {
            let mut mass = 0.0;
            let order = measure.by_distance(x);
            let mut i = 0;
            while i < order.len() {
                let d = order[i].0;
                while i < order.len() && order[i].0 == d {
                    mass += measure.mass(order[i].1);
                    i += 1;
                }
                if d >= h {
                    let lam = lambda.eval(x, d);
                    domination.offer(mass / lam, x, x, d);
                    halving.offer(lam / lambda.eval(x, 0.5 * d), x, x, d);
                }
            }
        }
    }

    // Locality over pairs of sample centers within distance r.
    let mut xs = samples.xs.clone();
    xs.sort_by(f64::total_cmp);
    for &r in &radii {
        let row: Vec<f64> = xs.iter().map(|&x| lambda.eval(x, r)).collect();
        for (i, &x) in xs.iter().enumerate() {
            let lo = xs.partition_point(|&y| y < x - r);
            for j in lo..xs.len() {
                let y = xs[j];
                if y - x > r {
                    break;
                }
                if i != j && distance(x, y) <= r {
                    locality.offer(row[i] / row[j], x, y, r);
                }
            }
        }
    }

    let c = lambda.constant;
    let achieved = halving.ratio.max(locality.ratio);
    UpperDoublingReport {
        pass: domination.ratio <= 1.0 && halving.ratio <= c && locality.ratio <= c,
        domination,
        halving,
        locality,
        declared_constant: c,
        achieved_constant: achieved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_measure(n: usize) -> AtomicMeasure {
        let atoms = (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect();
        AtomicMeasure::new(atoms, None).unwrap()
    }

    #[test]
    fn constant_lambda_regularizes_to_itself() {
        let m = grid_measure(16);
        let lam = DominatingFunction::constant(3.0).unwrap();
        let reg = regularize_dominating(&lam, &m, &LambdaGrid::for_measure(&m, 2)).unwrap();
        for &x in m.positions() {
            for r in [m.floor(), 0.1, 0.5, 1.0] {
                assert_eq!(reg.eval(x, r), 3.0);
            }
        }
    }

    #[test]
    fn translation_invariant_lambda_is_unchanged_on_grid() {
        let m = grid_measure(16);
        let lam = DominatingFunction::power(1.0, 1.0).unwrap();
        let grid = LambdaGrid::for_measure(&m, 4);
        let reg = regularize_dominating(&lam, &m, &grid).unwrap();
        for &x in &grid.xs {
            for &r in &grid.radii {
                assert_eq!(reg.eval(x, r), r);
            }
        }
    }

    #[test]
    fn inflated_entry_is_pulled_down_by_a_neighbor() {
        let m = grid_measure(8);
        let xs = m.positions().to_vec();
        let radii: Vec<f64> = (0..12).map(|j| 0.125 * 1.25f64.powi(j)).collect();
        let mut values: Vec<Vec<f64>> = xs.iter().map(|_| radii.iter().map(|&r| 2.0 * r).collect()).collect();
        let (i0, j0) = (3, 2);
        values[i0][j0] = 50.0;
        let lam = DominatingFunction::new(
            LambdaFamily::Table(LambdaTable {
                xs: xs.clone(),
                radii: radii.clone(),
                values: values.clone(),
            }),
            2.0,
        )
        .unwrap();
        let grid = LambdaGrid {
            xs: xs.clone(),
            radii: radii.clone(),
        };
        let reg = regularize_dominating(&lam, &m, &grid).unwrap();
        let (x0, r0) = (xs[i0], radii[j0]);

        // brute-force infimum over every grid center
        let brute = xs
            .iter()
            .map(|&z| lam.eval(z, r0 + (x0 - z).abs()))
            .fold(lam.eval(x0, r0), f64::min);
        assert_eq!(reg.eval(x0, r0), brute);
        assert!(reg.eval(x0, r0) < 50.0);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &r) in radii.iter().enumerate() {
                assert!(reg.eval(x, r) <= values[i][j]);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn regularization_never_increases_and_stays_monotone(
            n in 2usize..24,
            c in 0.5f64..4.0,
            s in 0.2f64..1.0,
            bumps in proptest::collection::vec(0.0f64..0.5, 24),
        ) {
            // monotone, non-translation-invariant input: coefficient varies with x
            let m = grid_measure(n);
            let grid = LambdaGrid::for_measure(&m, 3);
            let values: Vec<Vec<f64>> = grid
                .xs
                .iter()
                .enumerate()
                .map(|(i, _)| grid.radii.iter().map(|&r| (c + bumps[i % bumps.len()]) * r.powf(s)).collect())
                .collect();
            let lam = DominatingFunction::new(
                LambdaFamily::Table(LambdaTable { xs: grid.xs.clone(), radii: grid.radii.clone(), values: values.clone() }),
                2f64.powf(s) * 1.5,
            ).unwrap();
            let reg = regularize_dominating(&lam, &m, &grid).unwrap();
            for (i, &x) in grid.xs.iter().enumerate() {
                for (j, &r) in grid.radii.iter().enumerate() {
                    proptest::prop_assert!(reg.eval(x, r) <= values[i][j]);
                    if j > 0 {
                        proptest::prop_assert!(reg.eval(x, grid.radii[j - 1]) <= reg.eval(x, r));
                    }
                }
            }
        }
    }

    #[test]
    fn coarse_grid_is_refused() {
        let m = grid_measure(8);
        let lam = DominatingFunction::power(1.0, 1.0).unwrap();
        let below = LambdaGrid {
            xs: m.positions().to_vec(),
            radii: vec![m.floor() / 2.0, m.floor()],
        };
        assert!(matches!(
            regularize_dominating(&lam, &m, &below),
            Err(Error::GridTooCoarse(_))
        ));
        let sparse = LambdaGrid {
            xs: m.positions().to_vec(),
            radii: vec![m.floor(), 10.0 * m.floor()],
        };
        assert!(matches!(
            regularize_dominating(&lam, &m, &sparse),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn grid_measure_is_dominated_by_three_r() {
        let m = grid_measure(1024);
        let lam = DominatingFunction::power(3.0, 1.0).unwrap();
        let report = verify_upper_doubling(&m, &lam, &UpperDoublingSamples::exhaustive(&m));
        assert!(report.pass, "{report:?}");
        assert!((report.achieved_constant - 2.0).abs() <= 0.02);
    }

    #[test]
    fn grid_measure_two_r_fails_at_the_floor() {
        // dyadic grid keeps every sum exact; closed balls of radius j/n around an atom hold 2j+1 atoms, so the
        // worst ratio (2j+1)/(2j) is 3/2 at j = 1
        let m = grid_measure(1024);
        let lam = DominatingFunction::power(2.0, 1.0).unwrap();
        let report = verify_upper_doubling(&m, &lam, &UpperDoublingSamples::exhaustive(&m));
        assert!(!report.pass);
        assert!(
            (report.domination.ratio - 1.5).abs() < 1e-9,
            "{}",
            report.domination.ratio
        );
    }

    #[test]
    fn total_mass_constant_always_dominates() {
        let m = AtomicMeasure::new(vec![(0.0, 1.0), (0.3, 5.0), (2.0, 0.5)], None).unwrap();
        let lam = DominatingFunction::constant(m.total_mass()).unwrap();
        let report = verify_upper_doubling(&m, &lam, &UpperDoublingSamples::exhaustive(&m));
        assert!(report.pass);
        assert_eq!(report.domination.ratio, 1.0);
    }

    #[test]
    fn undersized_power_law_fails_domination() {
        let m = grid_measure(200);
        let lam = DominatingFunction::power(0.1, 1.0).unwrap();
        let report = verify_upper_doubling(&m, &lam, &UpperDoublingSamples::exhaustive(&m));
        assert!(!report.pass);
        assert!(report.domination.ratio > 1.0);
    }

    #[test]
    fn power_law_halving_constant_is_two_to_the_s() {
        let m = grid_measure(256);
        for s in [0.5, 1.0] {
            let lam = DominatingFunction::power(10.0, s).unwrap();
            let report = verify_upper_doubling(&m, &lam, &UpperDoublingSamples::exhaustive(&m));
            assert!((report.achieved_constant / 2f64.powf(s) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn dominating_function_json_shape() {
        let lam: DominatingFunction =
            serde_json::from_str(r#"{"family":"power","c":3.0,"s":1.0,"C_lambda":2.0}"#).unwrap();
        assert_eq!(lam.eval(0.0, 2.0), 6.0);
        let lam: DominatingFunction =
            serde_json::from_str(r#"{"family":"constant","value":4.0,"C_lambda":2.0}"#).unwrap();
        assert_eq!(lam.eval(1.0, 0.1), 4.0);
    }
}

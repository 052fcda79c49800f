//! Small numeric helpers shared by the kernels.

/// Neumaier-compensated running sum.
///
/// Suprema over truncations and radii are computed by accumulating terms in
/// distance order, while reference evaluations sum in atom order; compensation
/// keeps both within a few ulps of the exact value.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `x^e` that is exact for the exponents 0 and 1.
#[inline]
pub fn pow_exact(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

/// Relative closeness with an explicit magnitude scale.
pub fn rel_close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    if a == b {
        return true;
    }
    let m = a.abs().max(b.abs()).max(scale.abs());
    (a - b).abs() <= rel * m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(v), 2.0);
    }

    #[test]
    fn pow_exact_is_exact_on_trivial_exponents() {
        let x = 0.1 + 0.2;
        assert_eq!(pow_exact(x, 1.0), x);
        assert_eq!(pow_exact(x, 0.0), 1.0);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the interval lattice.
///
/// Level `k` uses base radius `scale * A0^-k`; `scale` defaults to the
/// diameter of the support so that level 0 is a single root cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub alpha: f64,
    pub max_level: usize,
    #[serde(default)]
    pub relaxed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl LatticeParams {
    /// Paper regime: `A0 > 5000 C0`, `alpha >= 200`, `C0 >= 100 alpha`.
    pub fn paper(c0: f64, a0: f64, alpha: f64, max_level: usize) -> Result<Self> {
        let p = LatticeParams {
            c0,
            a0,
            alpha,
            max_level,
            relaxed: false,
            scale: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn relaxed(c0: f64, a0: f64, alpha: f64, max_level: usize) -> Result<Self> {
        let p = LatticeParams {
            c0,
            a0,
            alpha,
            max_level,
            relaxed: true,
            scale: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        if !(self.c0 > 1.0 && finite(self.c0)) {
            return Err(Error::InvalidParams(format!("C0 = {} must exceed 1", self.c0)));
        }
        if !(self.a0 > 1.0 && finite(self.a0)) {
            return Err(Error::InvalidParams(format!("A0 = {} must exceed 1", self.a0)));
        }
        if !(self.alpha >= 1.0 && finite(self.alpha)) {
            return Err(Error::InvalidParams(format!(
                "alpha = {} must be at least 1",
                self.alpha
            )));
        }
        if let Some(s) = self.scale {
            if !(s > 0.0 && finite(s)) {
                return Err(Error::InvalidParams(format!("scale {s} must be positive")));
            }
        }
        if !self.relaxed {
            if self.a0 <= 5000.0 * self.c0 {
                return Err(Error::InvalidParams(format!(
                    "A0 = {} must exceed 5000 C0 = {} (use relaxed mode)",
                    self.a0,
                    5000.0 * self.c0
                )));
            }
            if self.alpha < 200.0 {
                return Err(Error::InvalidParams(format!(
                    "alpha = {} must be at least 200 (use relaxed mode)",
                    self.alpha
                )));
            }
            if self.c0 < 100.0 * self.alpha {
                return Err(Error::InvalidParams(format!(
                    "C0 = {} must be at least 100 alpha so that l0 >= 1 (use relaxed mode)",
                    self.c0
                )));
            }
        }
        Ok(())
    }

    /// Largest integer `l0` with `100^l0 <= C0 / alpha` (may be negative).
    pub fn l0(&self) -> i32 {
        let q = self.c0 / self.alpha;
        let mut l = 0i32;
        let mut p = 1.0f64;
        if q >= 1.0 {
            while p * 100.0 <= q {
                p *= 100.0;
                l += 1;
            }
        } else {
            while p > q {
                p /= 100.0;
                l -= 1;
            }
        }
        l
    }

    /// `C0^(-l0/2)`, capped at 1 when `l0 <= 0`.
    pub fn formula_decay_base(&self) -> f64 {
        let l0 = self.l0();
        if l0 <= 0 {
            1.0
        } else {
            self.c0.powf(-(l0 as f64) / 2.0)
        }
    }

    /// Whether `C0^(l0/2) > C_lambda^ceil(log2 A0)`.
    pub fn decay_hypothesis(&self, c_lambda: f64) -> bool {
        let lhs = self.c0.powf(self.l0() as f64 / 2.0);
        let rhs = c_lambda.powf(self.a0.log2().ceil());
        lhs > rhs
    }

    /// Geometric sample `1, 2, 5, 10, 20, 50, ...` of `[1, C0]`, plus `C0`.
    pub fn dilation_samples(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut decade = 1.0;
        'outer: loop {
            for m in [1.0, 2.0, 5.0] {
                let c = m * decade;
                if c > self.c0 {
                    break 'outer;
                }
                out.push(c);
            }
            decade *= 10.0;
        }
        if out.last() != Some(&self.c0) {
            out.push(self.c0);
        }
        out
    }

    /// Radius multipliers tried by the doubling scan: powers of 100 up to
    /// `C0` merged with [`LatticeParams::dilation_samples`].
    pub fn scan_multipliers(&self) -> Vec<f64> {
        let mut out = self.dilation_samples();
        let mut c = 100.0;
        while c <= self.c0 {
            out.push(c);
            c *= 100.0;
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn mode(&self) -> &'static str {
        if self.relaxed {
            "relaxed"
        } else {
            "paper-constants"
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{distance, AtomicMeasure, DominatingFunction};

/// Modulus of continuity `omega(t) = c t^tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub c: f64,
    pub tau: f64,
}

impl Modulus {
    pub fn eval(&self, t: f64) -> f64 {
        self.c * t.powf(self.tau)
    }

    /// `sum_{j>=0} omega(2^-j) = c / (1 - 2^-tau)`.
    pub fn dini_norm(&self) -> f64 {
        self.c / (1.0 - 2f64.powf(-self.tau))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `1 / (x - y)`
    Hilbert,
    /// `(x - y) / ((x - y)^2 + w^2)`, bounded by `1 / (2w)`.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    #[serde(rename = "C_K")]
    pub size_constant: f64,
    pub omega: Modulus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

impl Kernel {
    pub fn hilbert(size_constant: f64, omega: Modulus) -> Result<Self> {
        let k = Kernel {
            kind: KernelKind::Hilbert,
            size_constant,
            omega,
            width: None,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn smooth(width: f64, size_constant: f64, omega: Modulus) -> Result<Self> {
        let k = Kernel {
            kind: KernelKind::Smooth,
            size_constant,
            omega,
            width: Some(width),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size_constant > 0.0 && self.size_constant.is_finite()) {
            return Err(Error::InvalidKernel(format!("C_K = {}", self.size_constant)));
        }
        if !(self.omega.c > 0.0 && self.omega.c.is_finite()) {
            return Err(Error::InvalidKernel(format!("omega coefficient {}", self.omega.c)));
        }
        if !(self.omega.tau > 0.0 && self.omega.tau <= 1.0) {
            return Err(Error::InvalidKernel(format!(
                "omega exponent {} not in (0, 1]",
                self.omega.tau
            )));
        }
        match (self.kind, self.width) {
            (KernelKind::Smooth, Some(w)) if w > 0.0 && w.is_finite() => Ok(()),
            (KernelKind::Smooth, w) => Err(Error::InvalidKernel(format!("smooth kernel width {w:?}"))),
            (KernelKind::Hilbert, _) => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let u = x - y;
        match self.kind {
            KernelKind::Hilbert => 1.0 / u,
            KernelKind::Smooth => {
                let w = self.width.unwrap_or(1.0);
                u / (u * u + w * w)
            }
        }
    }

    pub fn dini_norm(&self) -> f64 {
        self.omega.dini_norm()
    }
}

/// Worst ratios of the size and smoothness conditions against their bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    /// `max |K(x,y)| lambda(x, d(x,y)) / C_K`.
    pub size_ratio: f64,
    /// `max (|K(x,y)-K(x',y)| + |K(y,x)-K(y,x')|) lambda(x,d) / omega(d(x,x')/d)`.
    pub smoothness_ratio: f64,
    pub pairs: usize,
    pub triples: usize,
    pub pass: bool,
}

/// Relative slack on the ratios, for equality cases lost to rounding.
pub const KERNEL_TOLERANCE: f64 = 1e-12;

/// At most this many atoms are used as sample points for the triple scan.
const SMOOTHNESS_SAMPLES: usize = 96;

/// Samples the size bound over all atom pairs with `d >= h` and the
/// smoothness bound over triples of (strided) atoms with `d(x,x') <= d(x,y)/2`.
pub fn verify_kernel(kernel: &Kernel, measure: &AtomicMeasure, lambda: &DominatingFunction) -> KernelReport {
    let h = measure.floor();
    let xs = measure.positions();
    let mut size_ratio: f64 = 0.0;
    let mut pairs = 0;
    for &x in xs {
        for &y in xs {
            let d = distance(x, y);
            if d >= h {
                size_ratio = size_ratio.max(kernel.eval(x, y).abs() * lambda.eval(x, d) / kernel.size_constant);
                pairs += 1;
            }
        }
    }
    let stride = xs.len().div_ceil(SMOOTHNESS_SAMPLES).max(1);
    let sample: Vec<f64> = xs.iter().copied().step_by(stride).collect();
    let mut smoothness_ratio: f64 = 0.0;
    let mut triples = 0;
    for &x in &sample {
        for &y in &sample {
            let d = distance(x, y);
            if d < h {
                continue;
            }
            for &xp in &sample {
                let t = distance(x, xp);
                if t == 0.0 || t > 0.5 * d {
                    continue;
                }
                let diff =
                    (kernel.eval(x, y) - kernel.eval(xp, y)).abs() + (kernel.eval(y, x) - kernel.eval(y, xp)).abs();
                smoothness_ratio = smoothness_ratio.max(diff * lambda.eval(x, d) / kernel.omega.eval(t / d));
                triples += 1;
            }
        }
    }
    KernelReport {
        size_ratio,
        smoothness_ratio,
        pairs,
        triples,
        pass: size_ratio <= 1.0 + KERNEL_TOLERANCE && smoothness_ratio <= 1.0 + KERNEL_TOLERANCE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dini_closed_form_matches_series() {
        let m = Modulus { c: 1.5, tau: 0.5 };
        let series: f64 = (0..200).map(|j| m.eval(2f64.powi(-j))).sum();
        assert!((series - m.dini_norm()).abs() < 1e-12);
        assert_eq!(Modulus { c: 12.0, tau: 1.0 }.dini_norm(), 24.0);
    }

    #[test]
    fn hilbert_on_grid_with_linear_lambda() {
        let n = 64;
        let m = AtomicMeasure::new(
            (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect(),
            None,
        )
        .unwrap();
        let lam = DominatingFunction::power(3.0, 1.0).unwrap();
        let k = Kernel::hilbert(3.0, Modulus { c: 12.0, tau: 1.0 }).unwrap();
        let r = verify_kernel(&k, &m, &lam);
        assert!(r.pass, "{r:?}");
        assert!((r.size_ratio - 1.0).abs() < 1e-12);
        let tight = Kernel::hilbert(2.0, Modulus { c: 12.0, tau: 1.0 }).unwrap();
        assert!(!verify_kernel(&tight, &m, &lam).pass);
    }

    #[test]
    fn kernel_json_shape() {
        let k: Kernel =
            serde_json::from_str(r#"{"kind":"smooth","C_K":2.0,"omega":{"c":4.0,"tau":1.0},"width":0.1}"#).unwrap();
        assert_eq!(k.kind, KernelKind::Smooth);
        assert!(k.validate().is_ok());
        let bad: Kernel = serde_json::from_str(r#"{"kind":"smooth","C_K":2.0,"omega":{"c":4.0,"tau":1.0}}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(Kernel::hilbert(1.0, Modulus { c: 1.0, tau: 1.5 }).is_err());
    }
}

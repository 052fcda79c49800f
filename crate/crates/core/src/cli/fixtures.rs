//! Named, reproducible instances: a measure with its dominating function,
//! kernel and lattice constants.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::measure::{AtomicMeasure, DominatingFunction};
use crate::operators::{FunctionSample, Kernel, Modulus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub seed: u64,
    pub description: &'static str,
}

pub const FIXTURES: &[FixtureInfo] = &[
    FixtureInfo {
        name: "lebesgue-grid-1k",
        seed: 0,
        description: "1024 equal atoms at (i + 1/2)/1024, lambda = 3r, Hilbert kernel with C_K = 3 and omega(t) = 12t",
    },
    FixtureInfo {
        name: "cantor-like",
        seed: 7,
        description: "middle-thirds construction of depth 10 with seeded 1/4 : 3/4 mass splits, smooth kernel",
    },
    FixtureInfo {
        name: "two-cluster",
        seed: 11,
        description:
            "heavy cluster near 0 and a light cluster near 1/2 whose cells are non-doubling at consecutive levels",
    },
    FixtureInfo {
        name: "paper-small-1",
        seed: 0,
        description: "seven atoms on scales 1e-17 to 1, paper-constants mode C0 = 2e4, A0 = 2e8, alpha = 200",
    },
    FixtureInfo {
        name: "paper-small-2",
        seed: 0,
        description: "six atoms with a pair at 4e-9, paper-constants mode",
    },
    FixtureInfo {
        name: "paper-small-3",
        seed: 0,
        description: "a 50-atom cluster at spacing 1e-9 and 20 atoms near 1/2, paper-constants mode",
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureData {
    pub name: String,
    pub seed: u64,
    pub measure: AtomicMeasure,
    pub lambda: DominatingFunction,
    pub kernel: Kernel,
    pub params: LatticeParams,
}

pub fn info(name: &str) -> Result<&'static FixtureInfo> {
    FIXTURES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFixture(name.to_string()))
}

/// Smooth kernel of width `diam / 64` with constants valid for the constant
/// dominating function `total`: `|K| <= 1/(2w)` and `|K'| <= 1/w^2`.
fn smooth_kernel(measure: &AtomicMeasure, total: f64) -> Result<Kernel> {
    let diam = measure.diameter();
    let w = diam / 64.0;
    Kernel::smooth(
        w,
        total / (2.0 * w),
        Modulus {
            c: 2.0 * diam * total / (w * w),
            tau: 1.0,
        },
    )
}

fn with_constant_lambda(name: &str, seed: u64, measure: AtomicMeasure, params: LatticeParams) -> Result<FixtureData> {
    let total = measure.total_mass();
    Ok(FixtureData {
        name: name.to_string(),
        seed,
        lambda: DominatingFunction::constant(total)?,
        kernel: smooth_kernel(&measure, total)?,
        measure,
        params,
    })
}

pub fn lebesgue_grid(n: usize) -> Result<AtomicMeasure> {
    AtomicMeasure::new(
        (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect(),
        None,
    )
}

fn cantor_like(seed: u64) -> Result<AtomicMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = vec![(0.0f64, 1.0f64, 1.0f64)];
    for _ in 0..10 {
        let mut next = Vec::with_capacity(2 * cells.len());
        for (lo, len, mass) in cells {
            let third = len / 3.0;
            let (a, b) = if rng.gen_bool(0.5) { (0.25, 0.75) } else { (0.75, 0.25) };
            next.push((lo, third, mass * a));
            next.push((lo + 2.0 * third, third, mass * b));
        }
        cells = next;
    }
    AtomicMeasure::new(
        cells.into_iter().map(|(lo, len, m)| (lo + 0.5 * len, m)).collect(),
        None,
    )
}

fn two_cluster() -> Result<AtomicMeasure> {
    let heavy = (0..64).map(|i| (i as f64 / 64.0 * 1e-3, 1.0 / 64.0));
    let light = (0..64).map(|i| (0.5 + i as f64 / 64.0 * 1e-2, 2f64.powi(-20)));
    AtomicMeasure::new(heavy.chain(light).collect(), None)
}

fn paper_small(which: u8) -> Vec<(f64, f64)> {
    match which {
        1 => vec![
            (0.0, 1.0),
            (3e-17, 1.0),
            (1e-16, 2.0),
            (2e-8, 1.0),
            (5e-8, 1.0),
            (0.5, 4.0),
            (1.0, 1.0),
        ],
        2 => vec![
            (0.0, 1.0),
            (5e-17, 1.0),
            (4e-9, 1.0),
            (4.00000001e-9, 1.0),
            (0.3, 1.0),
            (1.0, 1.0),
        ],
        _ => (0..50)
            .map(|i| (i as f64 * 1e-9, 1.0))
            .chain((0..20).map(|i| (0.5 + i as f64 * 0.02, 2.0)))
            .collect(),
    }
}

/// Builds the named fixture; `seed` overrides the documented seed where the
/// construction is random.
pub fn generate(name: &str, seed: Option<u64>) -> Result<FixtureData> {
    let info = info(name)?;
    let seed = seed.unwrap_or(info.seed);
    match name {
        "lebesgue-grid-1k" => Ok(FixtureData {
            name: name.to_string(),
            seed,
            measure: lebesgue_grid(1024)?,
            lambda: DominatingFunction::power(3.0, 1.0)?,
            kernel: Kernel::hilbert(3.0, Modulus { c: 12.0, tau: 1.0 })?,
            params: LatticeParams::relaxed(1000.0, 4.0, 200.0, 12)?,
        }),
        "cantor-like" => with_constant_lambda(
            name,
            seed,
            cantor_like(seed)?,
            LatticeParams::relaxed(100.0, 4.0, 200.0, 12)?,
        ),
        "two-cluster" => with_constant_lambda(
            name,
            seed,
            two_cluster()?,
            LatticeParams::relaxed(1000.0, 4.0, 200.0, 12)?,
        ),
        _ => {
            let which = name.as_bytes()[name.len() - 1] - b'0';
            with_constant_lambda(
                name,
                seed,
                AtomicMeasure::new(paper_small(which), None)?,
                LatticeParams::paper(2e4, 2e8, 200.0, 3)?,
            )
        }
    }
}

/// Writes `measure.json`, `lambda.json`, `kernel.json`, `params.json` and
/// `fixture.json` into `dir`.
pub fn write(data: &FixtureData, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let info = info(&data.name)?;
    let entries = [
        ("measure.json", serde_json::to_string_pretty(&data.measure)?),
        ("lambda.json", serde_json::to_string_pretty(&data.lambda)?),
        ("kernel.json", serde_json::to_string_pretty(&data.kernel)?),
        ("params.json", serde_json::to_string_pretty(&data.params)?),
        (
            "fixture.json",
            serde_json::to_string_pretty(&serde_json::json!({
                "name": data.name,
                "seed": data.seed,
                "description": info.description,
            }))?,
        ),
    ];
    let mut out = Vec::new();
    for (file, text) in entries {
        let path = dir.join(file);
        fs::write(&path, text + "\n")?;
        out.push(path);
    }
    Ok(out)
}

/// Seeded test function: `u^4` values with random signs on a run of `n/16`
/// consecutive atoms at a random offset, zero elsewhere.
pub fn random_function(measure: &AtomicMeasure, seed: u64) -> Result<FunctionSample> {
    let n = measure.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (n / 16).max(1);
    let start = rng.gen_range(0..=n - width);
    let values = (0..n)
        .map(|i| {
            let u: f64 = rng.gen();
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            if (start..start + width).contains(&i) {
                s * u.powi(4)
            } else {
                0.0
            }
        })
        .collect();
    FunctionSample::new(measure, values)
}

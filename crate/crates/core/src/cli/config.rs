//! Experiment configuration.
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fixtures;
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;
use crate::measure::io::{read_existing, read_measure, read_values};
use crate::measure::{AtomicMeasure, DominatingFunction};
use crate::operators::{FunctionSample, Kernel};
use crate::weights::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    PaperConstants,
    Relaxed,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PaperConstants => "paper-constants",
            Mode::Relaxed => "relaxed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSource {
    Zero,
    File {
        path: PathBuf,
    },
    /// Seeded block function; the seed is the config seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    /// `{"p": .., "values": [..]}` JSON, or a one-column CSV with `p` given here.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
    },
    /// `|x - center|^a`.
    Power {
        a: f64,
        center: f64,
        p: f64,
    },
    Unit {
        p: f64,
    },
}

impl WeightSpec {
    pub fn label(&self) -> String {
        match self {
            WeightSpec::File { path, .. } => format!("file:{}", path.display()),
            WeightSpec::Power { a, center, p } => format!("power:a={a},center={center},p={p}"),
            WeightSpec::Unit { p } => format!("unit:p={p}"),
        }
    }

    pub fn build(&self, measure: &AtomicMeasure) -> Result<Weight> {
        match self {
            WeightSpec::Power { a, center, p } => Weight::power(measure, *center, *a, *p),
            WeightSpec::Unit { p } => Weight::unit(measure, *p),
            WeightSpec::File { path, p } => {
                let csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
                match (csv, p) {
                    (true, Some(p)) => Weight::new(measure, read_values(path)?, *p),
                    (true, None) => Err(Error::Config(format!("CSV weight {} needs \"p\"", path.display()))),
                    (false, _) => Weight::from_json(measure, &read_existing(path)?),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub a: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_center")]
    pub center: f64,
}

fn default_p() -> f64 {
    2.0
}

fn default_center() -> f64 {
    0.5
}

fn default_trials() -> usize {
    8
}

fn default_f() -> FunctionSource {
    FunctionSource::Random
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Named fixture supplying every input not given explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
    #[serde(default = "default_f")]
    pub f: FunctionSource,
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_cap: Option<f64>,
    pub mode: Mode,
    pub out: PathBuf,
}

/// Everything a run needs, loaded and checked.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub measure: AtomicMeasure,
    pub lambda: Option<DominatingFunction>,
    pub kernel: Kernel,
    pub params: LatticeParams,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_existing(path)?)?)
}

impl Inputs {
    /// Explicit files override the fixture's parts.
    pub fn load(
        fixture: Option<&str>,
        measure: Option<&Path>,
        lambda: Option<&Path>,
        kernel: Option<&Path>,
        params: Option<&Path>,
    ) -> Result<Self> {
        let base = fixture.map(|name| fixtures::generate(name, None)).transpose()?;
        let missing = |what: &str| Error::Config(format!("no {what} given and no fixture to supply it"));
        let measure = match measure {
            Some(p) => read_measure(p)?,
            None => base
                .as_ref()
                .map(|b| b.measure.clone())
                .ok_or_else(|| missing("measure"))?,
        };
        let lambda = match lambda {
            Some(p) => Some(read_json::<DominatingFunction>(p)?),
            None => base.as_ref().map(|b| b.lambda.clone()),
        };
        if let Some(l) = &lambda {
            l.validate()?;
        }
        let kernel: Kernel = match kernel {
            Some(p) => read_json(p)?,
            None => base
                .as_ref()
                .map(|b| b.kernel.clone())
                .ok_or_else(|| missing("kernel"))?,
        };
        kernel.validate()?;
        let params: LatticeParams = match params {
            Some(p) => read_json(p)?,
            None => base
                .as_ref()
                .map(|b| b.params.clone())
                .ok_or_else(|| missing("params"))?,
        };
        params.validate()?;
        Ok(Inputs {
            measure,
            lambda,
            kernel,
            params,
        })
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = read_existing(path)?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.measure, &mut self.lambda, &mut self.kernel, &mut self.params]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        if let FunctionSource::File { path } = &mut self.f {
            join(path);
        }
        for w in &mut self.weights {
            if let WeightSpec::File { path, .. } = w {
                join(path);
            }
        }
        join(&mut self.out);
    }

    /// Referenced files exist and the mode agrees with the lattice params.
    pub fn validate(&self) -> Result<()> {
        let mut paths: Vec<&PathBuf> = [&self.measure, &self.lambda, &self.kernel, &self.params]
            .into_iter()
            .flatten()
            .collect();
        if let FunctionSource::File { path } = &self.f {
            paths.push(path);
        }
        for w in &self.weights {
            if let WeightSpec::File { path, .. } = w {
                paths.push(path);
            }
        }
        if let Some(p) = paths.into_iter().find(|p| !p.exists()) {
            return Err(Error::MissingFile(p.clone()));
        }
        if self.fixture.is_none() && (self.measure.is_none() || self.kernel.is_none() || self.params.is_none()) {
            return Err(Error::Config(
                "without a fixture, measure, kernel and params are required".into(),
            ));
        }
        if let Some(name) = &self.fixture {
            fixtures::info(name)?;
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        Ok(())
    }

    pub fn inputs(&self) -> Result<Inputs> {
        let inputs = Inputs::load(
            self.fixture.as_deref(),
            self.measure.as_deref(),
            self.lambda.as_deref(),
            self.kernel.as_deref(),
            self.params.as_deref(),
        )?;
        if inputs.params.mode() != self.mode.as_str() {
            return Err(Error::Config(format!(
                "mode {} but params are {}",
                self.mode.as_str(),
                inputs.params.mode()
            )));
        }
        Ok(inputs)
    }

    pub fn function(&self, measure: &AtomicMeasure) -> Result<FunctionSample> {
        match &self.f {
            FunctionSource::Zero => Ok(FunctionSample::zeros(measure)),
            FunctionSource::File { path } => FunctionSample::new(measure, read_values(path)?),
            FunctionSource::Random => fixtures::random_function(measure, self.seed),
        }
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

//! End-to-end run: lattice, sparse families and certificate, weights.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{ExperimentConfig, Inputs};
use super::fixtures;
use crate::error::{Error, Result};
use crate::lattice::{check_lattice, theta_decay_check, Lattice};
use crate::measure::{verify_upper_doubling, UpperDoublingSamples};
use crate::operators::{n_tsharp, verify_kernel, weak_type_mu, FunctionSample};
use crate::sparse::{certify, check_families, recurse, DominationCertificate, SelectConfig, SparseFamilies};
use crate::weights::{
    cell_characteristic, duality_bound, holder_check, interval_a2_characteristic, martingale_weak_type, norm_sweep,
    weighted_sparse_norm, SweepRow, Weight,
};

/// Tolerance of the asserted weight identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Lattice,
    Sparse,
    Weights,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 1,
            Stage::Lattice => 2,
            Stage::Sparse => 3,
            Stage::Weights => 4,
        }
    }

    /// The stage an error most naturally belongs to, for commands that do
    /// not track stages themselves.
    pub fn of(error: &Error) -> Stage {
        match error {
            Error::InvalidMeasure(_)
            | Error::InvalidDominating(_)
            | Error::GridTooCoarse(_)
            | Error::InvalidParams(_)
            | Error::BelowResolutionFloor { .. }
            | Error::Construction(_) => Stage::Lattice,
            Error::InvalidKernel(_) | Error::InvalidFunction(_) | Error::NoThreshold { .. } | Error::Contract(_) => {
                Stage::Sparse
            }
            Error::InvalidWeight(_) => Stage::Weights,
            _ => Stage::Config,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage:?} stage: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

/// Tags an error with [`Stage::of`].
impl From<Error> for StageError {
    fn from(source: Error) -> Self {
        StageError {
            stage: Stage::of(&source),
            source,
        }
    }
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// An exit-code-bearing check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub stage: Stage,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<PathBuf>,
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Adds `config_hash` and `mode` to a JSON object.
pub fn stamp<T: Serialize>(value: &T, hash: &str, mode: &str) -> Result<Value> {
    let mut map = match serde_json::to_value(value)? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    map.insert("config_hash".into(), json!(hash));
    map.insert("mode".into(), json!(mode));
    Ok(Value::Object(map))
}

pub fn certificate_csv(cert: &DominationCertificate) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["atom", "x", "lhs", "rhs", "ratio"])?;
    for r in &cert.rows {
        w.write_record([
            r.atom.to_string(),
            r.x.to_string(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.ratio.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn certificate_summary(cert: &DominationCertificate) -> Value {
    json!({
        "c_star": cert.c_star,
        "K_per_root": cert.recursion.iter().map(|r| json!({
            "root": r.root,
            "K": r.threshold,
            "recursion_constant": r.constant,
            "worst_atom": r.worst_atom,
        })).collect::<Vec<_>>(),
        "violations": cert.violations,
        "tolerance": cert.tolerance,
        "decay_base": cert.decay_base,
        "coefficients": cert.coefficients,
        "lambda_over_theta": cert.lambda_over_theta,
        "theta_over_sparse": cert.theta_over_sparse,
    })
}

pub fn families_json(families: &SparseFamilies) -> Value {
    json!({
        "root": families.root,
        "decay_base": families.decay_base,
        "depth": families.depth,
        "families": families.families,
    })
}

pub fn per_cell_csv(values: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cell", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "a",
        "characteristic",
        "empirical_norm",
        "ratio",
        "duality_bound",
        "sigma_maximal",
        "martingale_maximal",
        "consistency",
        "family_cells",
    ])?;
    for r in rows {
        w.write_record([
            r.a.to_string(),
            r.characteristic.to_string(),
            r.empirical_norm.to_string(),
            r.ratio.to_string(),
            r.duality_bound.to_string(),
            r.maximal_norms.sigma_maximal.to_string(),
            r.maximal_norms.martingale.to_string(),
            r.consistency.to_string(),
            r.family_cells.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `max ratio` and `max / min` of the positive per-row ratios.
pub fn sweep_constant(rows: &[SweepRow]) -> (f64, f64) {
    let pos: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| *r > 0.0).collect();
    let max = pos.iter().copied().fold(0.0, f64::max);
    let min = pos.iter().copied().fold(f64::INFINITY, f64::min);
    (max, if min.is_finite() { max / min } else { f64::INFINITY })
}

struct Run {
    out: PathBuf,
    hash: String,
    mode: &'static str,
    assertions: Vec<Assertion>,
    measured: Map<String, Value>,
    artifacts: Vec<PathBuf>,
}

impl Run {
    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        write_atomic(&path, bytes)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let v = stamp(value, &self.hash, self.mode)?;
        let text = serde_json::to_string_pretty(&v)? + "\n";
        self.emit(name, text.as_bytes())
    }

    fn assert(&mut self, name: impl Into<String>, stage: Stage, ok: bool, detail: String) {
        self.assertions.push(Assertion {
            name: name.into(),
            stage,
            ok,
            detail,
        });
    }

    fn measure<T: Serialize>(&mut self, key: &str, value: T) {
        self.measured.insert(key.into(), json!(value));
    }
}

/// Runs the configured experiment and writes its artifacts. Errors carry the
/// stage that raised them; failed assertions produce a nonzero exit code in
/// the outcome, with every artifact still written.
pub fn run_pipeline(config: &ExperimentConfig) -> std::result::Result<RunOutcome, StageError> {
    config.validate().at(Stage::Config)?;
    let hash = config.hash().at(Stage::Config)?;
    let inputs = config.inputs().map_err(StageError::from)?;
    let f = config.function(&inputs.measure).map_err(StageError::from)?;
    let weights: Vec<(String, Weight)> = config
        .weights
        .iter()
        .map(|spec| Ok((spec.label(), spec.build(&inputs.measure)?)))
        .collect::<Result<_>>()
        .at(Stage::Weights)?;

    let mut run = Run {
        out: config.out.clone(),
        hash,
        mode: config.mode.as_str(),
        assertions: Vec::new(),
        measured: Map::new(),
        artifacts: Vec::new(),
    };
    let lattice = lattice_stage(&mut run, &inputs).at(Stage::Lattice)?;
    let select = SelectConfig {
        threshold_cap: config.threshold_cap.unwrap_or(SelectConfig::default().threshold_cap),
    };
    let families = sparse_stage(&mut run, &inputs, &lattice, &f, &select).at(Stage::Sparse)?;
    weights_stage(&mut run, config, &inputs, &lattice, &families, &weights).at(Stage::Weights)?;

    let exit_code = run
        .assertions
        .iter()
        .filter(|a| !a.ok)
        .map(|a| a.stage.exit_code())
        .min()
        .unwrap_or(0);
    let summary = json!({
        "exit_code": exit_code,
        "asserted": run.assertions,
        "measured": run.measured,
        "artifacts": run.artifacts.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy()).collect::<Vec<_>>(),
    });
    run.emit_json("summary.json", &summary).at(Stage::Config)?;
    Ok(RunOutcome {
        exit_code,
        assertions: run.assertions,
        artifacts: run.artifacts,
    })
}

fn lattice_stage(run: &mut Run, inputs: &Inputs) -> Result<Lattice> {
    let m = &inputs.measure;
    if let Some(lambda) = &inputs.lambda {
        let ud = verify_upper_doubling(m, lambda, &UpperDoublingSamples::exhaustive(m));
        run.assert(
            "upper_doubling",
            Stage::Lattice,
            ud.pass,
            format!(
                "domination {} achieved C_lambda {}",
                ud.domination.ratio, ud.achieved_constant
            ),
        );
        run.measure("upper_doubling", &ud);
    }
    let lattice = Lattice::build(m, &inputs.params, inputs.lambda.as_ref())?;
    let check = check_lattice(&lattice);
    for c in check.checks.iter().filter(|c| c.asserted) {
        run.assert(format!("lattice:{}", c.name), Stage::Lattice, c.ok, c.detail.clone());
    }
    run.measure("lattice_levels", check.levels);
    run.measure("lattice_cells", check.cells);
    run.measure("non_doubling_cells", check.non_doubling_cells);
    run.measure("sandwich_dilate", check.sandwich_dilate);
    run.measure("decay_base", lattice.decay_base());
    if lattice.lambda().is_some() {
        let mut worst: f64 = 0.0;
        let mut longest = 0;
        let mut failed = Vec::new();
        for chain in lattice.non_doubling_chains() {
            let r = theta_decay_check(&lattice, &chain)?;
            worst = worst.max(r.implied_constant);
            longest = longest.max(chain.len() - 1);
            if r.pass == Some(false) {
                failed.push(chain[0]);
            }
        }
        run.assert(
            "theta_decay",
            Stage::Lattice,
            failed.is_empty(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("chains from {failed:?}")
            },
        );
        run.measure("theta_decay_constant", worst);
        run.measure("longest_non_doubling_chain", longest);
    }
    let text = stamp(
        &serde_json::from_str::<Value>(&lattice.to_json()?)?,
        &run.hash,
        run.mode,
    )?;
    run.emit("lattice.json", (serde_json::to_string_pretty(&text)? + "\n").as_bytes())?;
    run.emit_json("lattice_check.json", &check)?;
    Ok(lattice)
}

fn sparse_stage(
    run: &mut Run,
    inputs: &Inputs,
    lattice: &Lattice,
    f: &FunctionSample,
    select: &SelectConfig,
) -> Result<SparseFamilies> {
    let kernel = &inputs.kernel;
    if let Some(lambda) = &inputs.lambda {
        let kr = verify_kernel(kernel, &inputs.measure, lambda);
        run.assert(
            "kernel_bounds",
            Stage::Sparse,
            kr.pass,
            format!("size {} smoothness {}", kr.size_ratio, kr.smoothness_ratio),
        );
        let nt = n_tsharp(kernel, lattice, lambda, f, lattice.root());
        run.measure("n_tsharp_constant", nt.constant);
    }
    let families = recurse(kernel, lattice, f, lattice.root(), select)?;
    let sparsity = check_families(lattice, &families);
    run.assert(
        "sparsity",
        Stage::Sparse,
        sparsity.pass,
        format!(
            "max child ratio {} min witness ratio {}",
            sparsity.max_child_ratio, sparsity.min_witness_ratio
        ),
    );
    let cert = certify(kernel, lattice, &families, f)?;
    run.assert(
        "no_violations",
        Stage::Sparse,
        cert.violations.is_empty(),
        format!("{} atom(s) with rhs = 0 < lhs", cert.violations.len()),
    );
    run.assert(
        "c_star_finite",
        Stage::Sparse,
        cert.c_star.is_finite(),
        cert.c_star.to_string(),
    );
    run.measure("c_star", cert.c_star);
    run.measure("recursion_constant", cert.recursion_constant());
    run.measure("lambda_over_theta", cert.lambda_over_theta);
    run.measure("theta_over_sparse", cert.theta_over_sparse);
    run.measure("weak_type_mu", weak_type_mu(lattice, f).constant);
    run.measure("family_members", families.members().count());
    run.measure("sparsity", &sparsity);

    run.emit_json("families.json", &families_json(&families))?;
    run.emit("certificate.csv", &certificate_csv(&cert)?)?;
    run.emit_json("certificate.json", &certificate_summary(&cert))?;
    Ok(families)
}

fn weights_stage(
    run: &mut Run,
    config: &ExperimentConfig,
    inputs: &Inputs,
    lattice: &Lattice,
    families: &SparseFamilies,
    weights: &[(String, Weight)],
) -> Result<()> {
    let m = lattice.measure();
    let probe = fixtures::random_function(m, config.seed)?;
    let mut reports = Vec::new();
    for (i, (label, w)) in weights.iter().enumerate() {
        let defect = w.duality_defect();
        run.assert(
            format!("duality_identity[{i}]"),
            Stage::Weights,
            defect <= IDENTITY_TOLERANCE,
            defect.to_string(),
        );
        let holder = holder_check(families, lattice, w);
        run.assert(
            format!("holder[{i}]"),
            Stage::Weights,
            holder.pass(),
            format!("worst ratio {}", holder.worst_ratio),
        );
        let weak = martingale_weak_type(lattice, w, &probe);
        run.assert(
            format!("martingale_weak_type[{i}]"),
            Stage::Weights,
            weak.constant <= 1.0 + IDENTITY_TOLERANCE,
            weak.constant.to_string(),
        );
        let ch = cell_characteristic(w, lattice);
        let table = format!("characteristic_{i}_cells.csv");
        run.emit(&table, &per_cell_csv(&ch.per_cell)?)?;
        let interval = (w.p() == 2.0)
            .then(|| interval_a2_characteristic(w, lattice))
            .transpose()?;
        let norm = weighted_sparse_norm(families, lattice, w, config.trials, config.seed);
        let dual = duality_bound(families, lattice, w);
        let report = json!({
            "weight": label,
            "p": w.p(),
            "value": ch.value,
            "attaining_cell": ch.attaining_cell,
            "per_cell_table_path": table,
            "interval_a2": interval,
            "empirical_sparse_norm": norm.value,
            "duality_bound": dual.value,
        });
        run.emit_json(&format!("characteristic_{i}.json"), &report)?;
        reports.push(report);
    }
    if !reports.is_empty() {
        run.measure("weights", reports);
    }
    if let Some(sweep) = &config.sweep {
        let rows = norm_sweep(
            &inputs.kernel,
            lattice,
            &sweep.a,
            sweep.p,
            sweep.center,
            config.trials,
            config.seed,
        )?;
        run.emit("sweep.csv", &sweep_csv(&rows)?)?;
        let (c, spread) = sweep_constant(&rows);
        run.measure("sweep_constant", c);
        run.measure("sweep_ratio_spread", spread);
    }
    Ok(())
}

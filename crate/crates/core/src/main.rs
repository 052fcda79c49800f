use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nhsl::cli::fixtures;
use nhsl::cli::pipeline::{
    certificate_csv, certificate_summary, families_json, per_cell_csv, sweep_constant, sweep_csv, write_atomic,
};
use nhsl::cli::{run_pipeline, ExperimentConfig, Inputs, Stage};
use nhsl::error::{Error, Result};
use nhsl::lattice::{check_lattice, Lattice, LatticeParams};
use nhsl::measure::io::{read_existing, read_measure, read_values};
use nhsl::measure::DominatingFunction;
use nhsl::operators::FunctionSample;
use nhsl::sparse::{certify, check_families, recurse, SelectConfig};
use nhsl::weights::{cell_characteristic, interval_a2_characteristic, norm_sweep, Weight};

#[derive(Parser)]
#[command(
    name = "nhsl",
    version,
    about = "Sparse domination on non-doubling measures on the line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check an interval lattice.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Sparse families and the pointwise certificate.
    #[command(subcommand)]
    Sparse(SparseCmd),
    /// Weight characteristics and norm sweeps.
    #[command(subcommand)]
    Weights(WeightsCmd),
    /// Run a full experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// List or write the named fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Builds a lattice and writes it as JSON.
    Build {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        lambda: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the invariant suite; exit 0 iff every asserted check passes.
    Check { lattice: PathBuf },
}

// A fixture, explicit files, or a fixture with some files overridden.
#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
}

impl InputArgs {
    fn load(&self) -> Result<Inputs> {
        Inputs::load(
            self.fixture.as_deref(),
            self.measure.as_deref(),
            self.lambda.as_deref(),
            self.kernel.as_deref(),
            self.params.as_deref(),
        )
    }
}

#[derive(Subcommand)]
enum SparseCmd {
    /// Selects sparse families and writes the domination certificate.
    Run {
        #[command(flatten)]
        inputs: InputArgs,
        /// Function values in atom order; a seeded random function when absent.
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Power,
}

#[derive(Subcommand)]
enum WeightsCmd {
    /// Cell characteristic of one weight with its per-cell table.
    Characteristic {
        #[command(flatten)]
        inputs: InputArgs,
        /// `{"p": .., "values": [..]}` or a one-column CSV.
        #[arg(long)]
        weight: PathBuf,
        /// Exponent for CSV weights.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Characteristic and empirical sparse norm over a family of power weights.
    NormSweep {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, value_enum, default_value = "power")]
        family: Family,
        /// `start:stop:step`, inclusive.
        #[arg(long, allow_hyphen_values = true)]
        a_range: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.5)]
        center: f64,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum FixturesCmd {
    List,
    /// Writes measure, lambda, kernel and params files for a fixture.
    Generate {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("range `{text}`: {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Config(format!("range `{text}` is not start:stop:step")));
    };
    if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || stop < start {
        return Err(Error::Config(format!("range `{text}` is empty")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // round to the step's decimal grid so that 0.1 steps print cleanly
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn to_json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_existing(path)?)?)
}

fn lattice_cmd(cmd: LatticeCmd) -> Result<i32> {
    match cmd {
        LatticeCmd::Build {
            measure,
            params,
            lambda,
            out,
        } => {
            let m = read_measure(&measure)?;
            let params: LatticeParams = read_json(&params)?;
            let lambda: Option<DominatingFunction> = lambda.as_deref().map(read_json).transpose()?;
            let l = Lattice::build(&m, &params, lambda.as_ref())?;
            write_atomic(&out, (l.to_json()? + "\n").as_bytes())?;
            println!(
                "{} levels, {} cells -> {}",
                l.num_levels(),
                l.cells().len(),
                out.display()
            );
            Ok(0)
        }
        LatticeCmd::Check { lattice } => {
            let l = Lattice::from_json(&read_existing(&lattice)?)?;
            let check = check_lattice(&l);
            println!("{}", serde_json::to_string_pretty(&check)?);
            Ok(if check.pass { 0 } else { 1 })
        }
    }
}

fn sparse_cmd(cmd: SparseCmd) -> Result<i32> {
    let SparseCmd::Run { inputs, f, seed, out } = cmd;
    let inputs = inputs.load()?;
    let m = &inputs.measure;
    let f = match f {
        Some(p) => FunctionSample::new(m, read_values(&p)?)?,
        None => fixtures::random_function(m, seed)?,
    };
    let l = Lattice::build(m, &inputs.params, inputs.lambda.as_ref())?;
    let families = recurse(&inputs.kernel, &l, &f, l.root(), &SelectConfig::default())?;
    let sparsity = check_families(&l, &families);
    let cert = certify(&inputs.kernel, &l, &families, &f)?;
    to_json_file(&out.join("families.json"), &families_json(&families))?;
    write_atomic(&out.join("certificate.csv"), &certificate_csv(&cert)?)?;
    let mut summary = certificate_summary(&cert);
    summary["sparsity"] = serde_json::to_value(&sparsity)?;
    to_json_file(&out.join("certificate.json"), &summary)?;
    println!(
        "c* = {}, {} violation(s), {} family member(s)",
        cert.c_star,
        cert.violations.len(),
        families.members().count()
    );
    let ok = sparsity.pass && cert.violations.is_empty() && cert.c_star.is_finite();
    Ok(if ok { 0 } else { Stage::Sparse.exit_code() })
}

fn weights_cmd(cmd: WeightsCmd) -> Result<i32> {
    match cmd {
        WeightsCmd::Characteristic { inputs, weight, p, out } => {
            let inputs = inputs.load()?;
            let m = &inputs.measure;
            let w = if weight.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let p = p.ok_or_else(|| Error::Config("--p is required for CSV weights".into()))?;
                Weight::new(m, read_values(&weight)?, p)?
            } else {
                Weight::from_json(m, &read_existing(&weight)?)?
            };
            let l = Lattice::build(m, &inputs.params, inputs.lambda.as_ref())?;
            let ch = cell_characteristic(&w, &l);
            let interval = (w.p() == 2.0).then(|| interval_a2_characteristic(&w, &l)).transpose()?;
            write_atomic(&out.join("characteristic_cells.csv"), &per_cell_csv(&ch.per_cell)?)?;
            let report = serde_json::json!({
                "value": ch.value,
                "attaining_cell": ch.attaining_cell,
                "per_cell_table_path": "characteristic_cells.csv",
                "interval_a2": interval,
            });
            to_json_file(&out.join("characteristic.json"), &report)?;
            println!("characteristic {} at cell {}", ch.value, ch.attaining_cell);
            Ok(0)
        }
        WeightsCmd::NormSweep {
            inputs,
            family: Family::Power,
            a_range,
            p,
            center,
            trials,
            seed,
            out,
        } => {
            let exponents = parse_range(&a_range)?;
            let inputs = inputs.load()?;
            let l = Lattice::build(&inputs.measure, &inputs.params, inputs.lambda.as_ref())?;
            let rows = norm_sweep(&inputs.kernel, &l, &exponents, p, center, trials, seed)?;
            write_atomic(&out, &sweep_csv(&rows)?)?;
            let (c, spread) = sweep_constant(&rows);
            println!("C = {c}, ratio spread {spread}");
            Ok(0)
        }
    }
}

fn fixtures_cmd(cmd: FixturesCmd) -> Result<i32> {
    match cmd {
        FixturesCmd::List => {
            for f in fixtures::FIXTURES {
                println!("{}\tseed {}\t{}", f.name, f.seed, f.description);
            }
        }
        FixturesCmd::Generate { name, seed, out } => {
            let data = fixtures::generate(&name, seed)?;
            for p in fixtures::write(&data, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(0)
}

fn run_cmd(config: &Path) -> i32 {
    let cfg = match ExperimentConfig::from_path(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Stage::Config.exit_code();
        }
    };
    match run_pipeline(&cfg) {
        Ok(outcome) => {
            for a in outcome.assertions.iter().filter(|a| !a.ok) {
                eprintln!("failed: {} ({})", a.name, a.detail);
            }
            println!("{} artifact(s) in {}", outcome.artifacts.len(), cfg.out.display());
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => Ok(run_cmd(&config)),
        Command::Lattice(c) => lattice_cmd(c),
        Command::Sparse(c) => sparse_cmd(c),
        Command::Weights(c) => weights_cmd(c),
        Command::Fixtures(c) => fixtures_cmd(c),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Stage::of(&e).exit_code()
    });
    ExitCode::from(code as u8)
}

//! `qrem`: detector tomography, characterization, correction and Monte Carlo
//! checks from the command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
//! 3 mitigation verdict not successful (the report is still written).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use qrem_core::distances::BoundOptions;
use qrem_core::io::{
    self, CalibrationFile, CharacterizationFile, CountsFile, InputDigest, PovmFile, Provenance,
    ReportFile,
};
use qrem_core::mitigation::{self, MitigationContext};
use qrem_core::povm::{born_probabilities, projective_basis, readout_params};
use qrem_core::simulator::{self, FractionOptions, FractionReport, Shots};
use qrem_core::tomography::{self, CalibrationRecord, MleDiagnostics, MleOptions, ProbeSet};
use qrem_core::{fixtures, Povm};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        source: qrem_core::Error,
    },
    #[error(transparent)]
    Core(#[from] qrem_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::Input { source: e, .. } if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "qrem",
    version,
    about = "Readout error characterization and mitigation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a POVM to calibration counts by maximum likelihood.
    Fit(FitArgs),
    /// Split a POVM into classical noise and coherent residual; emit the correction matrix.
    Characterize(CharacterizeArgs),
    /// Correct a counts file with a characterization and assess the result.
    Mitigate(MitigateArgs),
    /// Monte Carlo fraction of states for which correction helps.
    SimulateF(SimulateArgs),
    /// Write sampled or exact calibration counts for a POVM.
    SynthCalibration(SynthArgs),
    /// Bundled reference detectors.
    Fixture {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ProbeArg {
    Minimal,
    Overcomplete,
}

impl From<ProbeArg> for ProbeSet {
    fn from(p: ProbeArg) -> Self {
        match p {
            ProbeArg::Minimal => ProbeSet::Minimal,
            ProbeArg::Overcomplete => ProbeSet::Overcomplete,
        }
    }
}

#[derive(Args)]
struct BoundArgs {
    /// Random subsets for the sampled lower bound on large detectors.
    #[arg(long, default_value_t = qrem_core::distances::DEFAULT_SUBSETS)]
    subsets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BoundArgs {
    fn options(&self) -> BoundOptions {
        BoundOptions {
            subsets: self.subsets,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    calibration: PathBuf,
    /// Restrict the fit to the records of this probe set.
    #[arg(long, value_enum, default_value = "overcomplete")]
    probe_set: ProbeArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Fitted POVM (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Fit diagnostics report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CharacterizeArgs {
    /// POVM file; repeat to characterize the tensor product (first file = qubit 0).
    #[arg(long, required = true)]
    povm: Vec<PathBuf>,
    #[command(flatten)]
    bounds: BoundArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MitigateArgs {
    #[arg(long)]
    counts: PathBuf,
    /// Characterization report from `qrem characterize`.
    #[arg(long)]
    correction: PathBuf,
    #[arg(long, default_value_t = mitigation::DEFAULT_PR_ERR)]
    pr_err: f64,
    /// Override the lower bound on D_op(M, ideal) used on the right-hand side.
    #[arg(long)]
    dop_bound: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    povm: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    /// Use exact probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = mitigation::DEFAULT_PR_ERR)]
    pr_err: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated off-diagonal magnitudes; replaces the POVM's own |z| (single qubit only).
    #[arg(long, value_delimiter = ',')]
    z_sweep: Option<Vec<f64>>,
    #[arg(long, default_value_t = qrem_core::distances::DEFAULT_SUBSETS)]
    subsets: usize,
    /// Figure data: one row per sweep point.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// POVM file; repeat for a product detector.
    #[arg(long, required = true)]
    povm: Vec<PathBuf>,
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "overcomplete")]
    probe_set: ProbeArg,
    /// Rounded exact probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FixtureAction {
    /// Names of the bundled detectors.
    List,
    /// Write every bundled detector as a POVM file.
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
}

struct Input {
    path: PathBuf,
    text: String,
}

impl Input {
    fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            source: qrem_core::Error::Parse(e.to_string()),
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
        })
    }

    fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        io::from_json(&self.text).map_err(|source| self.error(source))
    }

    fn error(&self, source: qrem_core::Error) -> CliError {
        CliError::Input {
            path: self.path.clone(),
            source,
        }
    }

    fn digest(&self) -> InputDigest {
        InputDigest {
            path: self.path.display().to_string(),
            sha256: io::sha256_hex(self.text.as_bytes()),
        }
    }

    fn povm(&self) -> Result<Povm> {
        self.parse::<PovmFile>()?
            .to_povm()
            .map_err(|e| self.error(e))
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|source| CliError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            fs::write(path, text).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
        None => write_stdout(text),
    }
}

/// A closed pipe downstream is not an error.
fn write_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn write_report<T: Serialize>(
    path: Option<&Path>,
    kind: &str,
    provenance: Provenance,
    result: T,
) -> Result<()> {
    write_output(
        path,
        &io::to_json(&ReportFile::new(kind, provenance, result)),
    )
}

fn probe_filter(
    records: Vec<CalibrationRecord>,
    probes: ProbeSet,
) -> Result<Vec<CalibrationRecord>> {
    let Some(first) = records.first() else {
        return Err(CliError::Usage("calibration file has no records".into()));
    };
    let wanted = probes.labels(tomography::qubit_count(&first.label));
    let kept: Vec<CalibrationRecord> = records
        .into_iter()
        .filter(|r| wanted.iter().any(|w| w == &r.label))
        .collect();
    if kept.len() < wanted.len() {
        return Err(CliError::Usage(format!(
            "calibration covers {} of the {} states in the probe set",
            kept.len(),
            wanted.len()
        )));
    }
    Ok(kept)
}

#[derive(Serialize)]
struct FitResult {
    probe_set: ProbeArg,
    records: usize,
    diagnostics: MleDiagnostics,
}

fn cmd_fit(args: &FitArgs) -> Result<ExitCode> {
    let input = Input::read(&args.calibration)?;
    let file: CalibrationFile = input.parse()?;
    let records = file.to_records().map_err(|e| input.error(e))?;
    let records = probe_filter(records, args.probe_set.into())?;
    let opts = MleOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let (fit, code) = match tomography::mle_fit(&records, &opts) {
        Ok(fit) => (fit, ExitCode::SUCCESS),
        Err(qrem_core::Error::NotConverged(fit)) => {
            eprintln!(
                "warning: MLE did not converge after {} iterations (last step {:e})",
                fit.diagnostics.iterations, fit.diagnostics.final_change
            );
            (*fit, ExitCode::from(2))
        }
        Err(e) => return Err(input.error(e)),
    };
    write_output(
        args.output.as_deref(),
        &io::to_json(&PovmFile::from_povm(&fit.povm, None)),
    )?;
    if let Some(path) = &args.report {
        let provenance = Provenance {
            inputs: vec![input.digest()],
            seed: None,
            parameters: json!({ "probe_set": args.probe_set, "tol": args.tol, "max_iter": args.max_iter }),
        };
        let result = FitResult {
            probe_set: args.probe_set,
            records: records.len(),
            diagnostics: fit.diagnostics,
        };
        write_report(Some(path), "fit", provenance, result)?;
    }
    Ok(code)
}

fn cmd_characterize(args: &CharacterizeArgs) -> Result<ExitCode> {
    let inputs = args
        .povm
        .iter()
        .map(|p| Input::read(p))
        .collect::<Result<Vec<_>>>()?;
    let povms = inputs.iter().map(Input::povm).collect::<Result<Vec<_>>>()?;
    let opts = args.bounds.options();
    let ch = if let [single] = povms.as_slice() {
        mitigation::characterize(single, &projective_basis(single.dim()), &opts)?
    } else {
        mitigation::characterize_product(&povms, &opts)?
    };
    let provenance = Provenance {
        inputs: inputs.iter().map(Input::digest).collect(),
        seed: Some(opts.seed),
        parameters: json!({ "subsets": opts.subsets }),
    };
    write_report(
        args.output.as_deref(),
        "characterization",
        provenance,
        CharacterizationFile::from_characterization(&ch),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_mitigate(args: &MitigateArgs) -> Result<ExitCode> {
    let counts_in = Input::read(&args.counts)?;
    let char_in = Input::read(&args.correction)?;
    let counts = counts_in
        .parse::<CountsFile>()?
        .to_counts()
        .map_err(|e| counts_in.error(e))?;
    let report: ReportFile<CharacterizationFile> = char_in.parse()?;
    let ch = report.result;
    let correction = ch.correction_matrix().map_err(|e| char_in.error(e))?;
    let mut dop_bound = ch.distance_to_ideal;
    if let Some(lower) = args.dop_bound {
        dop_bound.lower = lower;
    }
    let ctx = MitigationContext {
        coherent_distance: ch.coherent_distance.upper,
        dop_bound,
        pr_err: args.pr_err,
    };
    let result = mitigation::mitigate(&counts, &correction, &ctx)?;
    let successful = result.successful;
    let provenance = Provenance {
        inputs: vec![counts_in.digest(), char_in.digest()],
        seed: None,
        parameters: json!({ "pr_err": args.pr_err, "dop_bound": args.dop_bound }),
    };
    write_report(args.output.as_deref(), "mitigation", provenance, result)?;
    Ok(if successful {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

#[derive(Serialize)]
struct SweepPoint {
    z: f64,
    report: FractionReport,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let input = Input::read(&args.povm)?;
    let povm = input.povm()?;
    let opts = FractionOptions {
        trials: args.trials,
        shots: if args.exact {
            Shots::Exact
        } else {
            Shots::Finite(args.shots)
        },
        pr_err: args.pr_err,
        seed: args.seed,
        bounds: BoundOptions {
            subsets: args.subsets,
            seed: args.seed,
        },
    };
    let points: Vec<SweepPoint> = match &args.z_sweep {
        Some(zs) => {
            if povm.dim() != 2 || povm.num_outcomes() != 2 {
                return Err(CliError::Usage(
                    "--z-sweep needs a single-qubit, two-outcome POVM".into(),
                ));
            }
            let params = readout_params(&povm)?;
            simulator::coherent_sweep(params.p, params.q, zs, &opts)?
                .into_iter()
                .zip(zs)
                .map(|(report, &z)| SweepPoint { z, report })
                .collect()
        }
        None => {
            let z = if povm.dim() == 2 && povm.num_outcomes() == 2 {
                readout_params(&povm)?.z_mag
            } else {
                f64::NAN
            };
            let report = simulator::fraction_f(&povm, &projective_basis(povm.dim()), &opts)?;
            vec![SweepPoint { z, report }]
        }
    };
    if let Some(path) = &args.csv {
        let rows: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                let r = &p.report;
                vec![
                    p.z,
                    r.ratio,
                    r.f,
                    r.mean_alpha,
                    r.delta,
                    r.epsilon,
                    r.dop,
                    r.coherent_distance,
                ]
            })
            .collect();
        let header = [
            "z",
            "ratio",
            "f",
            "mean_alpha",
            "delta",
            "epsilon",
            "dop",
            "coherent_distance",
        ];
        write_output(Some(path), &io::write_csv(&header, &rows))?;
    }
    let provenance = Provenance {
        inputs: vec![input.digest()],
        seed: Some(args.seed),
        parameters: json!({
            "trials": args.trials,
            "shots": opts.shots,
            "pr_err": args.pr_err,
            "z_sweep": args.z_sweep,
            "subsets": args.subsets,
        }),
    };
    write_report(args.output.as_deref(), "fraction_f", provenance, points)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: &SynthArgs) -> Result<ExitCode> {
    let inputs = args
        .povm
        .iter()
        .map(|p| Input::read(p))
        .collect::<Result<Vec<_>>>()?;
    let povms = inputs.iter().map(Input::povm).collect::<Result<Vec<_>>>()?;
    if povms.iter().any(|p| p.dim() != 2 || p.num_outcomes() != 2) {
        return Err(CliError::Usage(
            "calibration synthesis needs single-qubit, two-outcome POVMs".into(),
        ));
    }
    let povm = qrem_core::povm::tensor_all(&povms);
    let labels = ProbeSet::from(args.probe_set).labels(povms.len());
    let records = if args.exact {
        tomography::synthesize_records(&povm, &labels, args.shots)?
    } else {
        labels
            .iter()
            .enumerate()
            .map(|(l, label)| {
                let rho = tomography::pauli_state(label)?;
                let p = born_probabilities(&rho, &povm)?;
                let mut rng = simulator::trial_rng(args.seed, l as u64);
                let counts = simulator::sample_counts_with(&p, args.shots, &mut rng)?;
                CalibrationRecord::new(label, counts)
            })
            .collect::<qrem_core::Result<Vec<_>>>()?
    };
    write_output(
        args.output.as_deref(),
        &io::to_json(&CalibrationFile::from_records(&records)),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixture(action: &FixtureAction) -> Result<ExitCode> {
    match action {
        FixtureAction::List => {
            let names: String = fixtures::all()
                .iter()
                .map(|fx| format!("{}\n", fx.name))
                .collect();
            write_stdout(&names)?;
        }
        FixtureAction::Export { dir } => {
            for fx in fixtures::all() {
                let file = PovmFile::from_povm(&fx.povm, Some(fx.name.clone()));
                write_output(
                    Some(&dir.join(format!("{}.json", fx.name))),
                    &io::to_json(&file),
                )?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Characterize(a) => cmd_characterize(a),
        Command::Mitigate(a) => cmd_mitigate(a),
        Command::SimulateF(a) => cmd_simulate(a),
        Command::SynthCalibration(a) => cmd_synth(a),
        Command::Fixture { action } => cmd_fixture(action),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

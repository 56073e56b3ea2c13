//! `attn-audit`: exact transport distances, attention flows, regularity
//! audits and the full reproduction suite, over JSON instance files.
//!
//! Exit codes: 0 on success, 1 when an asserted criterion or audited bound
//! fails, 2 on usage or configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use attn_transport::applications::{fixed_point_iterate, sequence_perturbation};
use attn_transport::attention::{particle_flow, AttentionSpec, TransformerSpec};
use attn_transport::entropy::{maxent_solve, maxent_verify, MaxEntProblem};
use attn_transport::error::Error;
use attn_transport::measure::{DiscreteMeasure, InstanceFile};
use attn_transport::regularity::{empirical_ratio, AuditMode, TrialConfig};
use attn_transport::suite::{run_suite, SuiteConfig};
use attn_transport::transport::w1_exact;

#[derive(Parser)]
#[command(
    name = "attn-audit",
    about = "Attention as measure transport: exact W1 distances, particle flows, and Lipschitz-bound audits",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Query,
    Measure,
    #[value(name = "self")]
    SelfAttention,
    Gaussian,
}

impl From<ModeArg> for AuditMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Query => AuditMode::Query,
            ModeArg::Measure => AuditMode::Measure,
            ModeArg::SelfAttention => AuditMode::SelfAttention,
            ModeArg::Gaussian => AuditMode::GaussianUnbounded,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact 1-Wasserstein distance between two instance files.
    W1 {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Write the optimal coupling (sparse triples, cost, duals) here.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run a configuration through repeated transformer steps.
    Flow {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized worst-case audit of a contraction bound.
    Audit {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        padding: f64,
    },
    /// Solve a maximum-entropy problem and verify it against sampled
    /// competitors.
    Maxent {
        #[arg(long)]
        base: PathBuf,
        /// JSON matrix, one row per feature, evaluated on the base support.
        #[arg(long)]
        features: PathBuf,
        /// JSON array of target moments.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 500)]
        verify_samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Iterate a weight-shared transformer to its fixed point.
    FixedPoint {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Compare two token sequences before and after transformer flow.
    Perturb {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Run the full reproduction suite.
    Suite {
        /// JSON suite configuration; defaults apply for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the aggregate report here (in addition to any configured
        /// output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
}

fn load_points(path: &PathBuf) -> Result<Vec<Vec<f64>>, Error> {
    let file: InstanceFile = read_json(path)?;
    Ok(file.points)
}

fn is_config_error(err: &Error) -> bool {
    matches!(
        err,
        Error::InvalidParameter(_) | Error::Io(_) | Error::Json(_)
    )
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::W1 { a, b, plan } => {
            let mu = DiscreteMeasure::from_json_path(&a)?;
            let nu = DiscreteMeasure::from_json_path(&b)?;
            let (cost, transport_plan) = w1_exact(&mu, &nu)?;
            if let Some(path) = plan {
                std::fs::write(path, serde_json::to_string_pretty(&transport_plan)?)?;
            }
            println!("{cost}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Flow {
            spec,
            input,
            depth,
            out,
        } => {
            let tspec: TransformerSpec = read_json(&spec)?;
            let mu = DiscreteMeasure::from_json_path(&input)?;
            let trajectory = particle_flow(&mu, &tspec, depth)?;
            let rendered: Vec<serde_json::Value> =
                trajectory.iter().map(|m| m.to_json_value()).collect();
            std::fs::write(out, serde_json::to_string_pretty(&rendered)?)?;
            println!("flow: {} steps written", trajectory.len() - 1);
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit {
            spec,
            mode,
            trials,
            seed,
            report,
            dim,
            padding,
        } => {
            let attention: AttentionSpec = read_json(&spec)?;
            let cfg = TrialConfig {
                trials,
                master_seed: seed,
                dim,
                box_padding: padding,
                ..TrialConfig::default()
            };
            let bound_report = empirical_ratio(&attention, mode.into(), &cfg)?;
            let rendered = serde_json::to_string_pretty(&bound_report)?;
            if let Some(path) = report {
                std::fs::write(path, &rendered)?;
            }
            println!("{rendered}");
            if bound_report.holds {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Maxent {
            base,
            features,
            target,
            tol,
            max_iter,
            verify_samples,
            seed,
        } => {
            let problem = MaxEntProblem {
                base: DiscreteMeasure::from_json_path(&base)?,
                features: read_json(&features)?,
                target: read_json(&target)?,
            };
            let solution = maxent_solve(&problem, tol, max_iter)?;
            let verify = maxent_verify(&problem, &solution, verify_samples, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "solution": solution,
                    "verify": verify,
                }))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::FixedPoint {
            spec,
            input,
            tol,
            max_iter,
        } => {
            let tspec: TransformerSpec = read_json(&spec)?;
            let mu = DiscreteMeasure::from_json_path(&input)?;
            let result = fixed_point_iterate(&mu, &tspec, tol, max_iter)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Perturb { a, b, spec, depth } => {
            let tspec: TransformerSpec = read_json(&spec)?;
            let seq_a = load_points(&a)?;
            let seq_b = load_points(&b)?;
            let result = sequence_perturbation(&seq_a, &seq_b, &tspec, depth)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite { config, out } => {
            let suite_config: SuiteConfig = match config {
                Some(path) => read_json(&path)?,
                None => SuiteConfig::default(),
            };
            suite_config.validate()?;
            let report = run_suite(&suite_config)?;
            for criterion in &report.criteria {
                let status = if criterion.passed { "PASS" } else { "FAIL" };
                println!("{status} {}", criterion.name);
            }
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            if report.all_passed {
                println!("suite: all asserted criteria passed");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("suite: asserted criterion failures");
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if is_config_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! `qms`: analyze finite-dimensional QMS generators — stationary states,
//! special GKSL representations, modular commutation, s-dual semigroups and
//! detailed balance — with machine-readable JSON reports.
//!
//! Exit codes: 0 success, 1 input error, 2 analysis precondition failure,
//! 3 internal inconsistency (including example-suite mismatches).

mod pipeline;
mod suite;
mod wire;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qms_core::matrices::{cr, C64};
use qms_core::qubit::{dual_qms_family, QubitParams};
use qms_core::{DensityState, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wire::{to_json_deterministic, InstanceFile};

#[derive(Parser)]
#[command(name = "qms", version, about = "Quantum Markov semigroup generator analyzer")]
struct Cli {
    /// Scale factor applied to all tolerances.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol: f64,

    /// Comma-separated list of s values in [0, 1] (default "0,0.5").
    #[arg(long, global = true)]
    s: Option<String>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for randomized checks and draws.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze an instance file: stationary states, special representation,
    /// modular commutation, privileged representation, duals and balance.
    Analyze {
        /// Path to an instance JSON file.
        path: PathBuf,
    },
    /// Run the built-in example suite and assert its reference values.
    Examples {
        /// Run only checks whose name contains this substring.
        #[arg(long)]
        only: Option<String>,
    },
    /// Construct a qubit-family instance (dual is a QMS by construction)
    /// and emit it as an instance file.
    QubitBuild {
        /// State parameter nu in (0, 1), nu != 1/2.
        #[arg(long)]
        nu: Option<f64>,
        /// Modulus of the sigma^- coefficient.
        #[arg(long, default_value_t = 1.0)]
        mu_abs: f64,
        /// Phase of the sigma^- coefficient.
        #[arg(long, default_value_t = 0.0)]
        mu_arg: f64,
        /// Phase of the sigma^+ coefficient (modulus is derived).
        #[arg(long, default_value_t = 0.0)]
        lambda_arg: f64,
        /// Modulus of the diagonal-operator coefficient.
        #[arg(long, default_value_t = 0.0)]
        eta_abs: f64,
        /// Phase of the diagonal-operator coefficient.
        #[arg(long, default_value_t = 0.0)]
        eta_arg: f64,
        /// Hamiltonian coefficients H = v0 + v3 sigma_3.
        #[arg(long, default_value_t = 0.0)]
        v0: f64,
        #[arg(long, default_value_t = 0.0)]
        v3: f64,
        /// Draw all parameters at random (overrides the flags above).
        #[arg(long)]
        random: bool,
    },
    /// Classical reversibility check pi_j q_jk = pi_k q_kj for a rate
    /// matrix file {"q": [[...]], "pi": [...]}.
    Classical {
        /// Path to the rate-matrix JSON file.
        path: PathBuf,
    },
}

fn emit(output: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_s_list(s: &Option<String>) -> Result<Option<Vec<f64>>, String> {
    match s {
        None => Ok(None),
        Some(text) => {
            let mut out = Vec::new();
            for part in text.split(',') {
                let v: f64 = part
                    .trim()
                    .parse()
                    .map_err(|_| format!("invalid s value '{part}'"))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("s value {v} outside [0, 1]"));
                }
                out.push(v);
            }
            Ok(Some(out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let s_list = match parse_s_list(&cli.s) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("input error: {e}");
            return ExitCode::from(1);
        }
    };

    match &cli.command {
        Command::Analyze { path } => {
            match pipeline::analyze_path(path, s_list.as_deref(), cli.tol) {
                Ok(report) => {
                    let text = to_json_deterministic(&report).expect("report serialization");
                    if emit(cli.output.as_ref(), &text).is_err() {
                        eprintln!("input error: cannot write output");
                        return ExitCode::from(1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Examples { only } => {
            let tol = Tolerances::scaled(cli.tol);
            let report = suite::run(only.as_deref(), cli.seed, &tol);
            let text = to_json_deterministic(&report).expect("report serialization");
            if emit(cli.output.as_ref(), &text).is_err() {
                eprintln!("input error: cannot write output");
                return ExitCode::from(1);
            }
            if report.failed > 0 {
                eprintln!(
                    "{} of {} example checks mismatched",
                    report.failed, report.total
                );
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::QubitBuild {
            nu,
            mu_abs,
            mu_arg,
            lambda_arg,
            eta_abs,
            eta_arg,
            v0,
            v3,
            random,
        } => {
            let params = if *random {
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                QubitParams::sample(&mut rng, false)
            } else {
                let Some(nu) = nu else {
                    eprintln!("input error: --nu is required unless --random is given");
                    return ExitCode::from(1);
                };
                let mu = C64::new(0.0, *mu_arg).exp() * cr(*mu_abs);
                let eta = if *eta_abs == 0.0 {
                    cr(0.0)
                } else {
                    C64::new(0.0, *eta_arg).exp() * cr(*eta_abs)
                };
                QubitParams::consistent(*nu, *v0, *v3, mu, *lambda_arg, eta)
            };
            let rep = match dual_qms_family(&params) {
                Ok(rep) => rep,
                Err(e) => {
                    eprintln!("input error: {e}");
                    return ExitCode::from(1);
                }
            };
            let rho = DensityState::from_probabilities(&[params.nu, 1.0 - params.nu])
                .expect("valid family state");
            let id = format!("qubit-family-nu{:.6}", params.nu);
            let instance = InstanceFile::from_rep(&id, &rep, Some(&rho));
            let text = to_json_deterministic(&instance).expect("instance serialization");
            if emit(cli.output.as_ref(), &text).is_err() {
                eprintln!("input error: cannot write output");
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Command::Classical { path } => {
            #[derive(serde::Deserialize)]
            struct ClassicalFile {
                q: Vec<Vec<f64>>,
                pi: Vec<f64>,
            }
            #[derive(serde::Serialize)]
            struct ClassicalReport {
                reversible: bool,
                max_violation: f64,
            }
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("input error: reading {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            };
            let file: ClassicalFile = match serde_json::from_str(&text) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("input error: parsing {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            };
            let d = file.pi.len();
            if file.q.len() != d || file.q.iter().any(|row| row.len() != d) {
                eprintln!("input error: rate matrix must be {d}x{d}");
                return ExitCode::from(1);
            }
            let flat: Vec<f64> = file.q.iter().flatten().cloned().collect();
            let q = nalgebra::DMatrix::from_row_slice(d, d, &flat);
            let pi = nalgebra::DVector::from_column_slice(&file.pi);
            let tol = Tolerances::scaled(cli.tol);
            match qms_core::balance::classical_reversibility(&q, &pi, &tol) {
                Ok((reversible, max_violation)) => {
                    let report = ClassicalReport {
                        reversible,
                        max_violation,
                    };
                    let text = to_json_deterministic(&report).expect("report serialization");
                    if emit(cli.output.as_ref(), &text).is_err() {
                        eprintln!("input error: cannot write output");
                        return ExitCode::from(1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("input error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use certirelu::bounds::{derived_constants, BoundDocument, SmoothnessCertificate};
use certirelu::experiments::{
    emit_report, format_number, rho_for_target, run_sweep, summarize, SweepConfig, TargetId, VmodFunction,
};
use certirelu::fourier::{Multiplier, RhoSettings};
use certirelu::policy_eval::{linear_benchmark, paper_example, policy_eval_table, SimulationSettings};

#[derive(Parser)]
#[command(name = "certirelu", version, about = "Random ReLU feature networks with approximation certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemId {
    /// Scalar example with policy -tanh(5x).
    Paper,
    /// Scalar linear benchmark with policy -x.
    Linear,
}

#[derive(Subcommand)]
enum Command {
    /// Fit networks over a grid of widths and seeds and write the report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the bound constants and a table of bound values as JSON.
    Bounds {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long)]
        delta: f64,
    },
    /// Estimate the smoothness level of a target.
    Rho {
        /// `paper_vmod`, `gaussian`, or a CSV sample file with columns x1,f.
        #[arg(long)]
        target: String,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2.5)]
        x_half_width: f64,
        #[arg(long, default_value_t = 1.0 / 500.0)]
        x_step: f64,
        #[arg(long, default_value_t = 60.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 0.01)]
        omega_step: f64,
        #[arg(long, default_value_t = Multiplier::DEFAULT_CUTOFF)]
        multiplier_cutoff: f64,
        /// Write the weighted transform profile here as CSV.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Compare simulated and model values along closed-loop trajectories.
    PolicyEval {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, value_enum, default_value = "paper")]
        problem: ProblemId,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-7)]
        stop_radius: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Sweep { config, out_dir } => {
            let mut config = SweepConfig::from_path(&config)?;
            if let Some(dir) = out_dir {
                config.out_dir = dir;
            }
            let outcome = run_sweep(&config)?;
            let vmod = VmodFunction::new(Multiplier::new(config.multiplier_cutoff, Multiplier::MAX_STEP)?);
            let files = emit_report(&outcome, &vmod, &config.out_dir)?;
            writeln!(out, "m,median_err_f,rhs_f,median_err_g2,rhs_g2,failures")?;
            for s in summarize(&outcome.rows) {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.m,
                    format_number(s.err_f),
                    format_number(s.rhs_f),
                    format_number(s.err_g2),
                    format_number(s.rhs_g2),
                    s.failures
                )?;
            }
            eprintln!("wrote {}", files.sweep_csv.display());
        }
        Command::Bounds { cert, m, delta } => {
            let cert: SmoothnessCertificate = serde_json::from_str(&std::fs::read_to_string(cert)?)?;
            let doc = BoundDocument::new(derived_constants(&cert)?, &m, delta)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Command::Rho { target, k, n, x_half_width, x_step, omega_max, omega_step, multiplier_cutoff, profile } => {
            let settings = RhoSettings { k, x_half_width, x_step, omega_max, omega_step };
            let report = rho_for_target(&TargetId::parse(&target), n, &settings, multiplier_cutoff)?;
            if let Some(path) = profile {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
                w.write_record(["omega", "weighted_abs_f_hat"])?;
                for (o, v) in &report.profile {
                    w.write_record([format_number(*o), format_number(*v)])?;
                }
                w.flush()?;
            }
            let e = &report.estimate;
            let doc = json!({
                "rho_hat": e.rho_hat,
                "k": e.k,
                "argmax_omega": e.argmax_omega,
                "grids": report.settings,
                "edge_diagnostic": { "edge_ratio": e.edge_ratio, "tail_bound": e.tail_bound },
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Command::PolicyEval { x0, problem, step, horizon, stop_radius } => {
            let (problem, model) = match problem {
                ProblemId::Paper => paper_example(),
                ProblemId::Linear => linear_benchmark(),
            };
            let settings = SimulationSettings { step, horizon, stop_radius };
            let rows = policy_eval_table(&problem, &model, &x0, &settings)?;
            writeln!(out, "x0,v_simulated,v_model,pde_residual,truncated")?;
            let mut inconsistent = false;
            for r in &rows {
                inconsistent |= r.residual.abs() > 1e-8;
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    format_number(r.x0),
                    format_number(r.simulated),
                    format_number(r.analytic),
                    format_number(r.residual),
                    r.truncated
                )?;
            }
            if inconsistent {
                eprintln!(
                    "warning: the model value does not satisfy the value PDE for this problem \
                     (nonzero residual); simulated and model values are expected to differ"
                );
            }
        }
    }
    Ok(())
}

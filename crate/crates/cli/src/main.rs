use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kornlab_core::report::{cmd_estimate, cmd_sweep, cmd_verify_identities, sweep_csv, RunConfig};

#[derive(Parser)]
#[command(name = "kornlab", version, about = "Discrete Korn-type constants on box grids")]
struct Cli {
    /// UTF-8 key=value file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the algebraic and discrete identities.
    VerifyIdentities {
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the identity report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate one constant and write a JSON report.
    Estimate(Common),
    /// Estimate constants along one parameter and write a CSV table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated; gamma face sets are separated by `;`.
        #[arg(long)]
        values: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    ineq: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Points per axis, either one number or one per axis.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    extents: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    starts: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    tol_rel: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let pairs = [
            ("ineq", &self.ineq),
            ("dim", &self.dim),
            ("p", &self.p),
            ("grid", &self.grid),
            ("extents", &self.extents),
            ("gamma", &self.gamma),
            ("seed", &self.seed),
            ("starts", &self.starts),
            ("max_iter", &self.max_iter),
            ("tol_rel", &self.tol_rel),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        if self.oracle {
            cfg.oracle = true;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        Ok(())
    }
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("KORNLAB_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .with_context(|| format!("KORNLAB_THREADS must be a positive integer, got `{raw}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::VerifyIdentities { dims, seed, out } => {
            if let Some(d) = dims {
                cfg.set("dims", &d).context("--dims")?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = cmd_verify_identities(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for r in &report.results {
                let status = if r.passed { "ok" } else { "FAILED" };
                println!("{:<28} max residual {:.3e} (tol {:.0e})  {status}", r.name, r.max_residual, r.tolerance);
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("failing identities: {}", report.failing().join(", "));
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Estimate(common) => {
            common.apply(&mut cfg)?;
            let report = cmd_estimate(&cfg)?;
            if cfg.out.is_none() {
                println!("{}", report.to_json()?);
            } else {
                println!(
                    "{} constant {:.10} quotient {:.10}{}",
                    cfg.inequality,
                    report.constant_estimate,
                    report.quotient_value,
                    if report.lower_bound { " (lower bound)" } else { "" }
                );
            }
            if let Some(k) = &report.kernel_check {
                if !k.passed {
                    eprintln!(
                        "warning: oracle found {} near-zero eigenvalues, expected {}",
                        k.near_zero_eigenvalues, k.expected
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { common, axis, values } => {
            common.apply(&mut cfg)?;
            if let Some(a) = axis {
                cfg.set("axis", &a).context("--axis")?;
            }
            if let Some(v) = values {
                cfg.set("values", &v).context("--values")?;
            }
            let rows = cmd_sweep(&cfg)?;
            if cfg.out.is_none() {
                print!("{}", sweep_csv(&rows)?);
            }
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} of {} sweep points failed", rows.len());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lshade_memetic::autoloop::{run_loop, ExternalProposer, LoopContext, LoopLog, Proposer, ScriptedProposer};
use lshade_memetic::gnbg::{make_instance, save_instance, InstanceSpec};
use lshade_memetic::harness::{
    classify_failure, read_summary_csv, run_suite, write_reports, ClassifierThresholds, SuiteConfig,
};
use lshade_memetic::polish::PolishVariant;

#[derive(Parser)]
#[command(name = "lshade-memetic", version, about = "Memetic LSHADE benchmark workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Compliant,
    /// Seeds the polish with component minima; every record is flagged non-compliant.
    Leaky,
}

impl From<Variant> for PolishVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Compliant => PolishVariant::CompliantB,
            Variant::Leaky => PolishVariant::LeakyA,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of every function in a suite and write runs.csv,
    /// summary.csv and report.json.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, value_enum, default_value = "compliant")]
        polish_variant: Variant,
        #[arg(long)]
        out: PathBuf,
        /// Run seeds one after another instead of in parallel.
        #[arg(long)]
        serial: bool,
    },
    /// Generate a composition-function instance file.
    GenInstance {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        components: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        rotation: Option<bool>,
        #[arg(long, allow_hyphen_values = true)]
        lb: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        ub: Option<f64>,
        /// JSON spec; flags given above override its fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label each function of a summary.csv by its failure signature.
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        deterministic_std: f64,
        #[arg(long, default_value_t = 0.1)]
        tight_cv: f64,
    },
    /// Run the design loop against a suite.
    Loop {
        /// `scripted:FILE.json` or `cmd:SHELL COMMAND`.
        #[arg(long)]
        proposer: String,
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 30)]
        max_iters: usize,
        /// Where experiments.tsv, protocol.md and state.json live.
        #[arg(long, default_value = "loop")]
        dir: PathBuf,
        /// Proposer timeout in seconds.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            suite,
            polish_variant,
            out,
            serial,
        } => {
            let cfg = SuiteConfig::load(&suite).with_context(|| format!("reading {}", suite.display()))?;
            let report = run_suite(&cfg, polish_variant.into(), !serial)?;
            write_reports(&report, &out)?;
            println!("{:>4} {:>5} {:>12} {:>12}  label", "f", "wins", "mean_gap", "std_gap");
            for f in &report.functions {
                println!(
                    "{:>4} {:>2}/{:<2} {:>12.4e} {:>12.4e}  {}",
                    f.function_id, f.wins, f.runs, f.mean_gap, f.std_gap, f.label
                );
            }
            println!("total wins {} of {}", report.total_wins, report.total_runs);
            if report.non_compliant {
                println!("non-compliant: polish was seeded with component minima");
            }
        }
        Command::GenInstance {
            dim,
            components,
            seed,
            rotation,
            lb,
            ub,
            spec,
            out,
        } => {
            let mut s = match spec {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => InstanceSpec::default(),
            };
            s.dim = dim.unwrap_or(s.dim);
            s.components = components.unwrap_or(s.components);
            s.rotation = rotation.unwrap_or(s.rotation);
            s.lb = lb.unwrap_or(s.lb);
            s.ub = ub.unwrap_or(s.ub);
            let inst = make_instance(&s, seed)?;
            save_instance(&inst, &out)?;
            println!("wrote {} (optimum {:.17e})", out.display(), inst.optimum_value());
        }
        Command::Classify {
            input,
            deterministic_std,
            tight_cv,
        } => {
            let t = ClassifierThresholds {
                deterministic_std,
                tight_cv,
            };
            let rows = read_summary_csv(fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
            println!("function_id,wins,mean_gap,std_gap,label");
            for r in rows {
                let label = classify_failure(r.wins, r.runs, r.mean_gap, r.std_gap, &t);
                println!("{},{},{:.16e},{:.16e},{}", r.function_id, r.wins, r.mean_gap, r.std_gap, label);
            }
        }
        Command::Loop {
            proposer,
            suite,
            max_iters,
            dir,
            timeout,
        } => {
            let log = LoopLog::open(&dir)?;
            let done = log.load_state()?.map_or(0, |s| s.iteration as usize);
            let mut source: Box<dyn Proposer> = if let Some(file) = proposer.strip_prefix("scripted:") {
                let mut p = ScriptedProposer::from_json(&fs::read_to_string(file)?).map_err(anyhow::Error::msg)?;
                // replies already consumed by an earlier session
                p.skip(done);
                Box::new(p)
            } else if let Some(cmd) = proposer.strip_prefix("cmd:") {
                let mut p = ExternalProposer::new(cmd);
                p.timeout = std::time::Duration::from_secs(timeout);
                Box::new(p)
            } else {
                bail!("--proposer must start with scripted: or cmd:");
            };
            let cfg = SuiteConfig::load(&suite).with_context(|| format!("reading {}", suite.display()))?;
            let ctx = LoopContext::new(cfg)?;
            let state = run_loop(&ctx, &log, source.as_mut(), max_iters)?;
            for e in state.history.iter().skip(done) {
                println!("{}", e.tsv_line());
            }
            println!(
                "best total wins {} after {} experiments; log in {}",
                state.best_total_wins,
                state.iteration,
                dir.display()
            );
        }
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netsynth::pipeline::{self, DesignMode, PipelineError, Preset, Project, EXIT_CONFIG};
use netsynth::runtime::Pick;
use netsynth::synthesis::WordPolicy;

#[derive(Parser)]
#[command(name = "netsynth", version, about = "Symbolic controller synthesis for networks of control systems")]
struct Cli {
    /// Worker threads for synthesis and simulation; 0 picks a default.
    #[arg(long, global = true, env = "NETSYNTH_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Print the machine-readable report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Project config (TOML).
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Falsify the certificate and plan mu and eta.
    Check(ConfigArg),
    /// Design controllers and write them to the output directory.
    Synthesize {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        mode: Option<DesignMode>,
        /// shortest, index:K or unroll:R
        #[arg(long)]
        word_policy: Option<WordPolicy>,
        /// Continue when the certificate is falsified; marks outputs tainted.
        #[arg(long)]
        override_check: bool,
    },
    /// Run the synthesized controllers in closed loop.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// min, max or seeded:S
        #[arg(long)]
        input_pick: Option<Pick>,
    },
    /// Counter and timing table over ring sizes.
    Bench {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Sizes as `3..20` (inclusive) or `3,5,8`.
        #[arg(long, default_value = "3..20", value_parser = parse_n_list)]
        n_list: NList,
    },
    /// Compare the heating design with the published reference data.
    Report(ConfigArg),
}

#[derive(Clone)]
struct NList(Vec<usize>);

fn parse_n_list(s: &str) -> Result<NList, String> {
    let bad = |e: std::num::ParseIntError| e.to_string();
    let v: Vec<usize> = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(bad)?..=b.trim().parse().map_err(bad)?).collect(),
        None => s.split(',').map(|x| x.trim().parse().map_err(bad)).collect::<Result<_, _>>()?,
    };
    if v.is_empty() || v.iter().any(|n| *n < 3) {
        return Err("sizes must be at least 3".into());
    }
    Ok(NList(v))
}

fn emit<T: serde::Serialize>(json: bool, report: &T, text: String) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
    } else {
        print!("{text}");
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let json = cli.json;
    let workers = cli.workers;
    match cli.command {
        Command::Check(c) => {
            let r = pipeline::check(&Project::load(&c.config)?)?;
            emit(json, &r, r.render());
        }
        Command::Synthesize { cfg, mode, word_policy, override_check } => {
            let mut p = Project::load(&cfg.config)?;
            if let Some(m) = mode {
                p.config.mode = m;
            }
            if let Some(w) = word_policy {
                p.config.word_policy = w;
            }
            p.config.override_check |= override_check;
            let r = pipeline::synthesize(&p, workers)?;
            emit(json, &r, r.render());
        }
        Command::Simulate { cfg, preset, samples, seed, input_pick } => {
            let mut p = Project::load(&cfg.config)?;
            let sim = &mut p.config.simulation;
            if let Some(v) = preset {
                sim.preset = v;
                sim.x0 = None;
            }
            if let Some(v) = samples {
                sim.samples = v;
            }
            if let Some(v) = seed {
                sim.seed = v;
            }
            if let Some(v) = input_pick {
                sim.input_pick = v;
            }
            let r = pipeline::simulate(&p)?;
            emit(json, &r, r.render());
        }
        Command::Bench { cfg, n_list } => {
            let r = pipeline::bench(&Project::load(&cfg.config)?, &n_list.0, workers)?;
            emit(json, &r, r.render());
        }
        Command::Report(c) => {
            let r = pipeline::reproduce(&Project::load(&c.config)?, workers)?;
            emit(json, &r, r.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let PipelineError::Unenforceable { diagnosis, .. } = &e {
                for line in &diagnosis.summary {
                    eprintln!("  {line}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

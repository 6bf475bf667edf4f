use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swarm_nd::harness::sweep::{aggregate_dir, csv_files_in};
use swarm_nd::harness::{
    aggregate_files, run_to_writer, sweep, Manifest, Precision, SimConfig, SweepPlan,
};
use swarm_nd::policy::Algorithm;
use swarm_nd::{Error, Result};

#[derive(Parser)]
#[command(
    name = "swarm-nd",
    version,
    about = "Directional neighbor discovery swarm simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one (config, seed) and write its metrics CSV.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory; the CSV is named after the run id. Stdout if absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write per-node and per-user positions and outcomes.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate every algorithm × weight × seed and aggregate across seeds.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = Algorithm::ALL)]
        algorithms: Vec<Algorithm>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 0.9])]
        weights: Vec<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Re-run exactly the plan recorded in a previous sweep's manifest.
        #[arg(long, conflicts_with_all = ["algorithms", "weights"])]
        manifest: Option<PathBuf>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Average raw run CSVs across seeds, per (algorithm, w).
    Aggregate {
        /// Raw CSV files or directories containing them.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

macro_rules! config_args {
    ($($field:ident : $ty:ty),* $(,)?) => {
        /// Overrides for every configuration field; unset flags keep the
        /// config-file or built-in value.
        #[derive(Args, Debug, Default)]
        struct ConfigArgs {
            /// Flat `key = value` config file.
            #[arg(long)]
            config: Option<PathBuf>,
            /// Comma-separated seed list (sweep).
            #[arg(long, value_delimiter = ',')]
            seeds: Option<Vec<u64>>,
            $(
                #[arg(long)]
                $field: Option<$ty>,
            )*
        }

        impl ConfigArgs {
            fn resolve(&self) -> Result<SimConfig> {
                let mut cfg = match &self.config {
                    Some(path) => SimConfig::from_file(path)?,
                    None => SimConfig::default(),
                };
                if let Some(seeds) = &self.seeds {
                    cfg.seeds = seeds.clone();
                }
                $(
                    if let Some(v) = &self.$field {
                        cfg.$field = v.clone().into();
                    }
                )*
                cfg.validate()?;
                Ok(cfg)
            }
        }
    };
}

config_args! {
    n: usize,
    m: usize,
    k: usize,
    area: f64,
    range: f64,
    r_d: f64,
    v: f64,
    r_roam: f64,
    drift_speed: f64,
    user_speed: f64,
    user_turn_prob: f64,
    dt: f64,
    p_t: f64,
    eta: f64,
    lambda: f64,
    p_o: f64,
    k0_override: f64,
    power_check: bool,
    window: usize,
    link_timeout: u32,
    w: f64,
    alpha_ewma: f64,
    algorithm: Algorithm,
    gamma: f64,
    lr: f64,
    eps_max: f64,
    eps_min: f64,
    eps_decay: u64,
    batch: usize,
    replay: usize,
    hidden: usize,
    target_network: bool,
    target_sync: u64,
    intervals: usize,
    precision: Precision,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            cfg,
            seed,
            out_dir,
            trace,
        } => {
            let cfg = cfg.resolve()?;
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                    let path = dir.join(format!("{}.csv", cfg.run_id(seed)));
                    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
                    let trace_file = if trace {
                        let tp = dir.join(format!("{}_trace.csv", cfg.run_id(seed)));
                        Some(BufWriter::new(
                            File::create(&tp).map_err(|e| io_err(&tp, e))?,
                        ))
                    } else {
                        None
                    };
                    run_to_writer(&cfg, seed, BufWriter::new(file), trace_file)?;
                    eprintln!("wrote {}", path.display());
                }
                None => {
                    let stdout = io::stdout().lock();
                    run_to_writer(&cfg, seed, stdout, None::<io::Sink>)?;
                }
            }
            Ok(())
        }
        Command::Sweep {
            cfg,
            algorithms,
            weights,
            out_dir,
            manifest,
            jobs,
        } => {
            let plan = match manifest {
                Some(path) => Manifest::read(&path)?.plan,
                None => {
                    let base = cfg.resolve()?;
                    SweepPlan {
                        algorithms,
                        weights,
                        seeds: base.seeds.clone(),
                        base,
                    }
                }
            };
            if let Some(j) = jobs {
                // only fails if the global pool was already built
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build_global();
            }
            let out = sweep(&plan, &out_dir)?;
            let mut stderr = io::stderr().lock();
            let _ = writeln!(
                stderr,
                "{} runs, {} aggregates, manifest {}",
                out.raw.len(),
                out.aggregates.len(),
                out.manifest.display()
            );
            Ok(())
        }
        Command::Aggregate { inputs, out_dir } => {
            let mut files = Vec::new();
            for p in inputs {
                if p.is_dir() {
                    files.extend(csv_files_in(&p)?);
                } else {
                    files.push(p);
                }
            }
            for p in aggregate_files(&files, &aggregate_dir(&out_dir))? {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn io_err(path: &std::path::Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

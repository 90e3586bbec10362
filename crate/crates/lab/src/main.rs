use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use schn_core::contour::{self, extract_contours};
use schn_core::exact::{brute_probability, exact_probability, transfer_probability, PartialAssignment};
use schn_core::mc::{run_chain, run_replica, Dynamics, Observable, RunOptions, Schedule};
use schn_core::{build_lattice, FrozenSpec, ModelParams, Segment, Site, MINUS, PLUS};
use schn_lab::config::LawSpec;
use schn_lab::walk_suite::build_law;
use schn_lab::ExperimentConfig;
use schn_walk::ballot::{ballot_dp, ballot_mc, min_height_cap, simple_ballot_exact, write_ballot_row, BALLOT_CSV_HEADER};

#[derive(Parser)]
#[command(name = "schn", version, about = "Conditioned 2D Ising experiments and effective-walk checks")]
struct Cli {
    /// Base seed of every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "SCHN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct BoxArgs {
    /// Box half-side.
    #[arg(long)]
    m: i32,
    #[arg(long)]
    beta: f64,
    /// Plus or minus segment `X0:X1:Y:S` with `S` one of `+`, `-`.
    #[arg(long = "segment", value_parser = parse_segment, allow_hyphen_values = true)]
    segments: Vec<Segment>,
}

impl BoxArgs {
    fn spec(&self) -> FrozenSpec {
        self.segments.iter().fold(FrozenSpec::minus(), |s, &seg| s.with_segment(seg))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMethod {
    Auto,
    Brute,
    Transfer,
}

#[derive(Clone, Copy, ValueEnum)]
enum DynamicsArg {
    HeatBath,
    Metropolis,
}

#[derive(Clone, Copy, ValueEnum)]
enum WalkMethod {
    Dp,
    Mc,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Exact `P(σ_site = +1)` by enumeration or column transfer.
    Exact {
        #[command(flatten)]
        lattice: BoxArgs,
        /// Site `X,Y`.
        #[arg(long = "site", value_parser = parse_site, allow_hyphen_values = true, required = true)]
        sites: Vec<Site>,
        #[arg(long, value_enum, default_value = "auto")]
        method: ExactMethod,
    },
    /// Monte Carlo estimates of `P(σ_site = +1)` with batch-means errors.
    Mc {
        #[command(flatten)]
        lattice: BoxArgs,
        #[arg(long = "site", value_parser = parse_site, allow_hyphen_values = true, required = true)]
        sites: Vec<Site>,
        #[arg(long, default_value_t = 1000)]
        burn_in: u64,
        #[arg(long, default_value_t = 100_000)]
        sweeps: u64,
        #[arg(long, default_value_t = 1)]
        thin: u64,
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        #[arg(long, value_enum, default_value = "heat-bath")]
        dynamics: DynamicsArg,
    },
    /// Samples configurations and writes their contours to `contours.csv`.
    Contours {
        #[command(flatten)]
        lattice: BoxArgs,
        #[arg(long, default_value_t = 10)]
        samples: u64,
        #[arg(long, default_value_t = 1000)]
        burn_in: u64,
        #[arg(long, default_value_t = 100)]
        thin: u64,
    },
    /// Ballot probabilities of the effective walk.
    Walk {
        /// `simple`, `degenerate`, `parametric:C:Q` or `animal:BETA`.
        #[arg(long, default_value = "simple")]
        law: LawSpec,
        /// Comma-separated walk lengths.
        #[arg(long, value_delimiter = ',', default_value = "64")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        u: i64,
        #[arg(long, default_value_t = 1)]
        v: i64,
        #[arg(long, value_enum, default_value = "dp")]
        method: WalkMethod,
        #[arg(long, default_value_t = 100_000)]
        walks: u64,
        #[arg(long, default_value_t = 10)]
        animal_cutoff: usize,
    },
    /// Runs the experiment described by a config file.
    Experiment { file: PathBuf },
}

fn parse_site(s: &str) -> Result<Site, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<i32>().map_err(|_| format!("bad coordinate `{t}`"));
    Ok(Site::new(p(x)?, p(y)?))
}

fn parse_segment(s: &str) -> Result<Segment, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [x0, x1, y, v] = parts.as_slice() else {
        return Err(format!("expected X0:X1:Y:S, got `{s}`"));
    };
    let p = |t: &str| t.trim().parse::<i32>().map_err(|_| format!("bad coordinate `{t}`"));
    let value = match *v {
        "+" => PLUS,
        "-" => MINUS,
        _ => return Err(format!("segment value must be + or -, got `{v}`")),
    };
    let (a, b) = (p(x0)?, p(x1)?);
    if b < a {
        return Err(format!("segment end {b} is left of its start {a}"));
    }
    Ok(Segment::new(a, b, p(y)?, value))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("building the thread pool")?;
    }
    let seed = cli.seed.unwrap_or(1);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Exact { lattice, sites, method } => {
            let l = build_lattice(lattice.m, lattice.spec())?;
            let p = ModelParams::new(lattice.beta)?;
            writeln!(out, "x,y,beta,probability,method")?;
            for s in sites {
                let r = match l.frozen_value(s) {
                    Some(v) => {
                        writeln!(out, "{},{},{},{},frozen", s.x, s.y, lattice.beta, (v == PLUS) as u8)?;
                        continue;
                    }
                    None => {
                        let ev = PartialAssignment::single(s, PLUS);
                        match method {
                            ExactMethod::Auto => exact_probability(&l, p, &ev)?,
                            ExactMethod::Brute => brute_probability(&l, p, &ev)?,
                            ExactMethod::Transfer => transfer_probability(&l, p, &ev)?,
                        }
                    }
                };
                writeln!(out, "{},{},{},{:e},{:?}", s.x, s.y, lattice.beta, r.probability, r.method)?;
            }
        }
        Command::Mc { lattice, sites, burn_in, sweeps, thin, replicas, dynamics } => {
            let l = Arc::new(build_lattice(lattice.m, lattice.spec())?);
            let dynamics = match dynamics {
                DynamicsArg::HeatBath => Dynamics::HeatBath,
                DynamicsArg::Metropolis => Dynamics::Metropolis,
            };
            let obs: Vec<Observable> = sites.iter().map(|&s| Observable::SpinUp(s)).collect();
            let est = run_chain(
                l,
                ModelParams::new(lattice.beta)?,
                Schedule::new(burn_in, sweeps, thin)?,
                seed,
                RunOptions { dynamics, replicas },
                &obs,
            )?;
            writeln!(out, "x,y,beta,probability,stderr,samples")?;
            for (s, e) in sites.iter().zip(&est) {
                writeln!(out, "{},{},{},{:e},{:e},{}", s.x, s.y, lattice.beta, e.mean, e.stderr, e.n_samples)?;
            }
        }
        Command::Contours { lattice, samples, burn_in, thin } => {
            let l = Arc::new(build_lattice(lattice.m, lattice.spec())?);
            let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("contours.csv");
            let mut file = BufWriter::new(File::create(&path)?);
            writeln!(file, "{}", contour::CSV_HEADER)?;
            let schedule = Schedule::new(burn_in, samples * thin, thin)?;
            let mut id = 0u64;
            run_replica(l, ModelParams::new(lattice.beta)?, schedule, Dynamics::HeatBath, seed, 0, |c, _| {
                contour::write_csv(&mut file, id, &extract_contours(c))
                    .map_err(|e| schn_core::Error::Parameter(e.to_string()))?;
                id += 1;
                Ok(())
            })?;
            file.flush()?;
            writeln!(out, "{}", path.display())?;
        }
        Command::Walk { law, n, u, v, method, walks, animal_cutoff } => {
            let steps = build_law(&law, animal_cutoff)?;
            writeln!(out, "{BALLOT_CSV_HEADER}")?;
            for n in n {
                let r = match method {
                    WalkMethod::Dp => ballot_dp(n, u, v, &steps, min_height_cap(n))?,
                    WalkMethod::Mc => ballot_mc(n, u, v, &steps, walks, seed)?,
                    WalkMethod::Exact => {
                        if law != LawSpec::Simple {
                            bail!("the exact method applies to the simple law only");
                        }
                        if u < 1 || v < 1 {
                            bail!("endpoints must be >= 1");
                        }
                        simple_ballot_exact(n, u as u64, v as u64)
                    }
                };
                write_ballot_row(&mut out, n, u, v, &r)?;
            }
        }
        Command::Experiment { file } => {
            let mut config =
                ExperimentConfig::load(&file).with_context(|| format!("reading {}", file.display()))?;
            if let Some(s) = cli.seed {
                config.seed = s;
            }
            if let Some(d) = cli.out_dir {
                config.out_dir = d;
            }
            let summary = schn_lab::run_experiment(&config)?;
            for v in &summary.verdicts {
                writeln!(
                    out,
                    "{} {} measured={} threshold={}",
                    if v.pass { "PASS" } else { "FAIL" },
                    v.property,
                    v.measured,
                    v.threshold
                )?;
            }
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            out.flush()?;
            return Ok(summary.all_pass());
        }
    }
    out.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use splitdre::experiments::{
    build_problem, run_experiment, ExperimentConfig, RunMetadata, DEFAULT_SEED_P0, DEFAULT_SEED_S,
};
use splitdre::fem::{sample_q_wiener, PeriodicGrid, Regularity};
use splitdre::flows::integrate_streaming;
use splitdre::oracle::self_check;
use splitdre::{Error, LowRankFactor, Result, Scheme};

#[derive(Parser, Debug)]
#[command(name = "splitdre", version, about = "Low-rank splitting for differential Riccati equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one (scheme, Nh, Nt) configuration.
    Solve(SolveArgs),
    /// Run the convergence sweep of one experiment.
    Experiment(ExperimentArgs),
    /// Compare the low-rank flows with dense references.
    OracleCheck(OracleArgs),
    /// Write a sampled random function to disk.
    Sample(SampleArgs),
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Flat `key = value` config file, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Final time.
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Relative compression tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed_s: Option<u64>,
    #[arg(long)]
    seed_p0: Option<u64>,
    /// The random functions are sampled on 2^k nodes.
    #[arg(long)]
    master_exp: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value = "strang")]
    scheme: Scheme,
    #[arg(long)]
    nh: usize,
    #[arg(long)]
    nt: usize,
    /// Experiment whose coefficient functions define the problem.
    #[arg(long, default_value_t = 1)]
    id: u8,
    #[command(flatten)]
    common: ProblemArgs,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    id: u8,
    /// Comma-separated spatial node counts.
    #[arg(long, value_delimiter = ',')]
    nh: Option<Vec<usize>>,
    /// Comma-separated step counts.
    #[arg(long, value_delimiter = ',')]
    nt: Option<Vec<usize>>,
    /// The reference uses 2^k Strang steps.
    #[arg(long)]
    tau_ref_exp: Option<u32>,
    /// Largest grids and step counts; takes hours.
    #[arg(long)]
    full: bool,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: ProblemArgs,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random problems.
    #[arg(long, default_value_t = 10)]
    problems: usize,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Comma-separated seeds; one file per seed.
    #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_SEED_S, DEFAULT_SEED_P0])]
    seed: Vec<u64>,
    #[arg(long, default_value = "H2per")]
    regularity: Regularity,
    /// Karhunen–Loève modes, default all resolvable.
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, default_value_t = 17)]
    master_exp: u32,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Experiment(args) => experiment(args),
        Command::OracleCheck(args) => oracle_check(args),
        Command::Sample(args) => sample(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn base_config(id: u8, full: bool, common: &ProblemArgs) -> Result<ExperimentConfig> {
    let mut config = if full {
        ExperimentConfig::full(id)?
    } else {
        ExperimentConfig::desk(id)?
    };
    if let Some(path) = &common.config {
        config.apply_kv(&fs::read_to_string(path)?)?;
        config.set("experiment", &id.to_string())?;
    }
    if let Some(t) = common.horizon {
        config.horizon = t;
    }
    if let Some(tol) = common.tol {
        config.compress_tol = tol;
    }
    if let Some(s) = common.seed_s {
        config.seed_s = s;
    }
    if let Some(s) = common.seed_p0 {
        config.seed_p0 = s;
    }
    if let Some(k) = common.master_exp {
        config.master_exponent = k;
    }
    Ok(config)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let mut config = base_config(args.id, false, &args.common)?;
    config.nh_list = vec![args.nh];
    config.nt_list = vec![args.nt];
    if config.reference_steps() <= args.nt {
        config.tau_ref_exponent = args.nt.trailing_zeros() + 1;
    }
    config.validate()?;
    let started = Instant::now();
    let cell = format!("{} Nh={} Nt={}", args.scheme, args.nh, args.nt);
    let nodal = build_problem(&config, args.nh).map_err(|e| annotate(e, &cell))?;
    let modal = nodal.modal().map_err(|e| annotate(e, &cell))?;
    let mut last = None;
    let summary = integrate_streaming(&modal, &config.scheme_config(args.scheme, args.nt), |n, z| {
        if n == args.nt {
            last = Some(z.clone());
        }
        Ok(())
    })
    .map_err(|e| annotate(e, &cell))?;
    let last = last.unwrap_or_else(|| modal.z0().clone());
    let factor: LowRankFactor = nodal.nodal_factor(&last)?;

    let stem = format!("solve_{}_Nh{}_Nt{}", args.scheme, args.nh, args.nt);
    factor.write_to(create(&args.common.out, &format!("{stem}.factor"))?)?;
    let mut ranks = create(&args.common.out, &format!("{stem}_ranks.txt"))?;
    writeln!(ranks, "step rank")?;
    for (n, r) in summary.ranks.iter().enumerate() {
        writeln!(ranks, "{n} {r}")?;
    }
    ranks.flush()?;
    let wall = started.elapsed().as_secs_f64();
    write_json(
        &args.common.out,
        &format!("{stem}_meta.json"),
        &json!({
            "crate_version": env!("CARGO_PKG_VERSION"),
            "command": "solve",
            "scheme": args.scheme,
            "nh": args.nh,
            "nt": args.nt,
            "config": config,
            "final_rank": factor.rank(),
            "max_rank": summary.ranks.iter().max(),
            "wall_time_s": wall,
        }),
    )?;
    println!(
        "{cell}: final rank {}, max rank {}, {:.2}s",
        factor.rank(),
        summary.ranks.iter().max().unwrap_or(&0),
        wall
    );
    Ok(ExitCode::SUCCESS)
}

fn annotate(e: Error, cell: &str) -> Error {
    match e {
        Error::InvalidConfig(_) | Error::Parse(_) | Error::Io(_) => e,
        other => {
            eprintln!("failing cell: {cell}");
            other
        }
    }
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let mut config = base_config(args.id, args.full, &args.common)?;
    if let Some(nh) = args.nh {
        config.nh_list = nh;
    }
    if let Some(nt) = args.nt {
        config.nt_list = nt;
    }
    if let Some(k) = args.tau_ref_exp {
        config.tau_ref_exponent = k;
    }
    if let Some(j) = args.jobs {
        config.jobs = j;
    }
    config.validate()?;
    let started = Instant::now();
    let table = run_experiment(&config)?;
    let out = &args.common.out;
    let stem = format!("experiment{}", config.experiment_id);
    let mut csv = create(out, &format!("{stem}.csv"))?;
    table.write_csv(&mut csv)?;
    csv.flush()?;
    for scheme in [Scheme::Lie, Scheme::Strang] {
        let mut plot = create(out, &format!("{stem}_{scheme}.dat"))?;
        table.write_plot_data(scheme, &mut plot)?;
        plot.flush()?;
    }
    let mut meta = create(out, &format!("{stem}_meta.json"))?;
    RunMetadata::new(&config, &table).write_json(&mut meta)?;
    meta.flush()?;

    for fit in &table.slopes {
        match fit.slope {
            Some(s) => println!("{:<6} Nh={:<6} slope {:.3}", fit.scheme, fit.nh, s),
            None => println!("{:<6} Nh={:<6} slope n/a", fit.scheme, fit.nh),
        }
    }
    println!("{} rows in {:.1}s", table.rows.len(), started.elapsed().as_secs_f64());
    let failures = table.failures();
    for f in &failures {
        eprintln!(
            "failing cell: {} Nh={} Nt={}: {}",
            f.scheme,
            f.nh,
            f.nt,
            f.failure.as_deref().unwrap_or("")
        );
    }
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn oracle_check(args: OracleArgs) -> Result<ExitCode> {
    let outcomes = self_check(args.seed, args.problems);
    let mut failed = 0;
    let mut executed = 0;
    for o in &outcomes {
        executed += o.cases;
        let verdict = if o.passed() { "PASS" } else { "FAIL" };
        if !o.passed() {
            failed += 1;
        }
        println!("{verdict} {} ({} cases, worst {:.2e}, tol {:.0e})", o.name, o.cases, o.worst, o.tolerance);
    }
    println!("{executed} checks executed, {failed} properties failed");
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn sample(args: SampleArgs) -> Result<ExitCode> {
    let grid = PeriodicGrid::new(1usize << args.master_exp)?;
    let modes = args.modes.unwrap_or(grid.nodes() / 2 - 1);
    for &seed in &args.seed {
        let f = sample_q_wiener(args.regularity, modes, seed, &grid)?;
        let mut out = create(&args.out, &format!("sample_{}_seed{seed}.txt", args.regularity))?;
        f.write_to(&mut out)?;
        out.flush()?;
        println!("seed {seed}: L2 norm {:.6}", f.l2_norm());
    }
    write_json(
        &args.out,
        &format!("sample_{}_meta.json", args.regularity),
        &json!({
            "crate_version": env!("CARGO_PKG_VERSION"),
            "command": "sample",
            "regularity": args.regularity.to_string(),
            "decay_exponent": args.regularity.decay_exponent(),
            "seeds": args.seed,
            "modes": modes,
            "master_nodes": grid.nodes(),
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nrtsave_core::trial::{run_policy, Realization};
use nrtsave_core::PolicyKind;
use nrtsave_sim::config_file::{load_config, RunConfig};
use nrtsave_sim::experiment::run_experiment;
use nrtsave_sim::oracle::{
    check_offline, check_waterfill, random_offline_instance, random_waterfill_instance,
};
use nrtsave_sim::output::{write_experiment, write_rows, write_traces, Format};
use nrtsave_sim::sched_check::{validate_schedule_probability, ScheduleCheckSetup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "nrtsave", version, about = "Energy-saving NRT transmission with BS sleeping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over deadlines and policies.
    Run(RunArgs),
    /// Compare the scheduling-probability approximation with simulation.
    ValidateProp1(ScheduleCheckArgs),
    /// Check the solvers against brute-force references on small instances.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Scenario file (`key = value` lines); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated policy names.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicyKind>>,
    /// Comma-separated deadlines in slots.
    #[arg(long, value_delimiter = ',')]
    t_sweep: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Also dump traces and decisions of one realization, as `T:TRIAL`.
    #[arg(long)]
    dump_trace: Option<String>,
}

#[derive(Args)]
struct ScheduleCheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    /// Size of the random idle set.
    #[arg(long, default_value_t = 100)]
    idle: usize,
    #[arg(long, default_value_t = 20)]
    n_hat: usize,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha_error_db: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    waterfill_instances: usize,
    #[arg(long, default_value_t = 10)]
    max_slots: usize,
    #[arg(long, default_value_t = 200)]
    offline_instances: usize,
    #[arg(long, default_value_t = 8)]
    max_horizon: usize,
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut run = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        run.scenario.base_seed = seed;
    }
    Ok(run)
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load(&args.common)?;
    if let Some(p) = args.policies {
        cfg.policies = p;
    }
    if let Some(t) = args.t_sweep {
        cfg.t_sweep = t;
    }
    if let Some(n) = args.trials {
        cfg.scenario.trials = n;
    }
    cfg.validate()?;
    let format = Format::from(args.common.format);
    let started = Instant::now();
    let result = run_experiment(&cfg, args.threads)?;
    let written = write_experiment(&args.common.out, &cfg, &result, format)?;
    for agg in &result.aggregates {
        let energy = agg
            .mean_nrt_energy_j
            .map_or_else(|| "-".to_owned(), |e| format!("{e:.1}"));
        eprintln!(
            "{:<12} T={:<5} mean_nrt_energy_j={:<10} outage={:.3}",
            agg.policy, agg.horizon, energy, agg.outage_fraction
        );
    }
    if let Some(spec) = args.dump_trace {
        let (t, k) = spec
            .split_once(':')
            .and_then(|(t, k)| Some((t.parse::<usize>().ok()?, k.parse::<usize>().ok()?)))
            .with_context(|| format!("--dump-trace expects T:TRIAL, got `{spec}`"))?;
        let scenario = cfg.scenario_for(t);
        let realization = Realization::generate(&scenario, t, k);
        let runs = cfg
            .policies
            .iter()
            .map(|&p| run_policy(p, &realization, &scenario, k))
            .collect::<Result<Vec<_>, _>>()?;
        write_traces(&args.common.out.join("traces"), &realization, &runs, k, format)?;
    }
    eprintln!(
        "wrote {} files to {} in {:.1} s",
        written.len(),
        args.common.out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn validate_schedule(args: ScheduleCheckArgs) -> Result<()> {
    let cfg = load(&args.common)?;
    let setup = ScheduleCheckSetup {
        horizon: args.horizon,
        idle_count: args.idle,
        n_hat: args.n_hat,
        draws: args.draws,
        points: args.points,
        alpha_error_db: args.alpha_error_db,
        seed: cfg.scenario.base_seed,
    };
    if setup.idle_count == 0 || setup.idle_count > setup.horizon {
        bail!("--idle must lie in 1..={}", setup.horizon);
    }
    let rows = validate_schedule_probability(&cfg.scenario, &setup, None)?;
    std::fs::create_dir_all(&args.common.out)
        .with_context(|| format!("creating {}", args.common.out.display()))?;
    let format = Format::from(args.common.format);
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = args.common.out.join(format!("schedule_check.{ext}"));
    write_rows(&path, &rows, format)?;
    println!("g_th,analytic_perfect,analytic_error,simulated");
    for r in &rows {
        println!(
            "{:.6e},{:.4},{:.4},{:.4}",
            r.g_th, r.analytic_perfect, r.analytic_error, r.simulated
        );
    }
    let worst = rows.iter().map(|r| r.gap_perfect()).fold(0.0, f64::max);
    eprintln!("max |analytic - simulated| = {worst:.4}; wrote {}", path.display());
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (mut obj, mut bits, mut kkt, mut cf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut disagreements = 0;
    for _ in 0..args.waterfill_instances {
        let c = check_waterfill(&random_waterfill_instance(&mut rng, args.max_slots))?;
        disagreements += usize::from(!c.feasible_agrees);
        obj = obj.max(c.objective_rel_err);
        bits = bits.max(c.bits_rel_err);
        kkt = kkt.max(c.kkt_residual);
        cf = cf.max(c.closed_form_rel_err.unwrap_or(0.0));
    }
    println!(
        "water-filling: {} instances, worst objective {obj:.2e}, bits {bits:.2e}, kkt {kkt:.2e}, closed form {cf:.2e}, feasibility mismatches {disagreements}",
        args.waterfill_instances
    );
    let (mut off, mut off_bad) = (0.0f64, 0);
    for _ in 0..args.offline_instances {
        let c = check_offline(&random_offline_instance(&mut rng, args.max_horizon));
        off = off.max(c.rel_err);
        off_bad += usize::from(!c.feasible_agrees);
    }
    println!(
        "offline: {} instances, worst objective {off:.2e}, feasibility mismatches {off_bad}",
        args.offline_instances
    );
    Ok(disagreements == 0 && off_bad == 0 && obj <= 1e-6 && bits <= 1e-9 && kkt <= 1e-9 && cf <= 1e-9 && off <= 1e-6)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::ValidateProp1(a) => validate_schedule(a).map(|_| true),
        Command::Oracle(a) => oracle(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("oracle checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use flowsched_core::dsee::{build_schedule, compute_g_bound, run_unknown, GBoundParams};
use flowsched_core::export;
use flowsched_core::game::{convergence_bound_detail, is_nash, run_to_equilibrium};
use flowsched_core::model::expected_total_cost;
use flowsched_core::poa::{brute_force_optimum, poa_study, PoaStudyConfig};
use flowsched_core::regret::{regret_study, replication_seed, RegretStudyConfig};
use flowsched_core::{Error, Instance, Scenario, DEFAULT_CAP};

use output::OutDir;

#[derive(Parser)]
#[command(name = "flowsched", version, about = "Flow scheduling games, price of anarchy and DSEE learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory for CSV artifacts and the run manifest.
    #[arg(long, env = "FLOWSCHED_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent runs; 0 uses every core.
    #[arg(long, env = "FLOWSCHED_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Top-level seed, overriding the scenario's.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn jobs(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the virtual game with known costs to an equilibrium.
    RunKnown {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample random instances and histogram their price of anarchy.
    PoaStudy {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Samples per polynomial order.
        #[arg(long)]
        samples: Option<usize>,
        /// Polynomial orders, one histogram each.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u32>>,
        /// Also write an SVG chart.
        #[arg(long)]
        plot: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep G for the unknown-model learner and record regret curves.
    RegretStudy {
        #[arg(long)]
        config: PathBuf,
        /// Multiples of the base G.
        #[arg(long, value_delimiter = ',')]
        g_multipliers: Option<Vec<f64>>,
        #[arg(long)]
        g_base: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Also compute the sufficient G and its parameters.
        #[arg(long)]
        bound: bool,
        /// Write the slot trace and sample store of the first run.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        plot: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Print the slot labeling for given schedule parameters.
    SchedulePreview {
        #[arg(long)]
        g: f64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        horizon: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Compute the sufficient G for a scenario.
    Bound {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load_instance(path: &Path) -> Result<(Scenario, Instance)> {
    let scenario = Scenario::load(path)?;
    if !scenario.has_network() {
        bail!("{}: scenario has no vertices", path.display());
    }
    let inst = scenario
        .build_instance()
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok((scenario, inst))
}

#[derive(Serialize)]
struct KnownSummary {
    digest: String,
    expected_cost: f64,
    circles: usize,
    circles_with_moves: usize,
    is_nash: bool,
    convergence_bound: Option<u64>,
    within_bound: Option<bool>,
    optimum_cost: Option<f64>,
    price_of_anarchy: Option<f64>,
}

fn run_known(config: &Path, common: &Common) -> Result<()> {
    let (scenario, inst) = load_instance(config)?;
    let (flow, circles, moves) = run_to_equilibrium(&inst)?;
    let mut moved: Vec<usize> = moves.iter().map(|m| m.circle).collect();
    moved.dedup();
    let bound = match convergence_bound_detail(&inst, DEFAULT_CAP) {
        Ok(b) => Some(b.bound),
        Err(Error::Degenerate(_) | Error::EnumerationCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let optimum = match brute_force_optimum(&inst, DEFAULT_CAP) {
        Ok((_, c)) => Some(c),
        Err(Error::EnumerationCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let cost = expected_total_cost(&inst, &flow)?;
    let summary = KnownSummary {
        digest: inst.digest(),
        expected_cost: cost,
        circles,
        circles_with_moves: moved.len(),
        is_nash: is_nash(&inst, &flow)?,
        convergence_bound: bound,
        within_bound: bound.map(|b| moved.len() as u64 <= b),
        optimum_cost: optimum,
        price_of_anarchy: optimum.filter(|&o| o > 0.0).map(|o| cost / o),
    };

    let mut out = OutDir::create(&common.out)?;
    out.write("moves.csv", |w| Ok(export::write_moves(&inst, &moves, w)?))?;
    out.write("assignment.csv", |w| Ok(export::write_assignment(&inst, flow.assignments(), w)?))?;
    out.write_json("summary.json", &summary)?;
    out.finish("run-known", &scenario, &[inst.seed()])?;

    println!("expected cost: {cost}");
    println!("circles: {circles} ({} with moves)", moved.len());
    println!("nash equilibrium: {}", summary.is_nash);
    match bound {
        Some(b) => println!("circle bound: {b}"),
        None => println!("circle bound: unavailable"),
    }
    for (k, p) in flow.assignments().iter().enumerate() {
        let p = p.as_ref().expect("equilibrium assigns every commodity");
        println!("user {k}: {}", inst.describe_path(p));
    }
    Ok(())
}

fn cmd_poa_study(
    config: Option<&Path>,
    samples: Option<usize>,
    orders: Option<Vec<u32>>,
    plot: bool,
    common: &Common,
) -> Result<()> {
    let scenario = match config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    let mut cfg = scenario.poa_study.clone().unwrap_or_default();
    if let Some(n) = samples {
        cfg.samples = n;
    }
    if let Some(o) = orders {
        cfg.orders = o;
    }
    let seed = common.seed.unwrap_or(scenario.seed);
    let result = poa_study(&cfg, seed, common.jobs())?;

    let mut out = OutDir::create(&common.out)?;
    out.write("poa_records.csv", |w| Ok(export::write_poa_records(&result.records, w)?))?;
    out.write("histogram.csv", |w| Ok(export::write_histograms(&result.histograms, w)?))?;
    if plot {
        let bins: Vec<(f64, f64)> = result.histograms[0].bins.iter().map(|b| (b.low, b.high)).collect();
        let series: Vec<(String, Vec<f64>)> = result
            .histograms
            .iter()
            .map(|h| {
                let total = h.total().max(1) as f64;
                (format!("order {}", h.order), h.bins.iter().map(|b| b.count as f64 / total).collect())
            })
            .collect();
        let svg = plot::bars("price of anarchy", &bins, &series);
        out.write("histogram.svg", |w| {
            w.extend_from_slice(svg.as_bytes());
            Ok(())
        })?;
    }
    #[derive(Serialize)]
    struct Resolved<'a> {
        poa_study: &'a PoaStudyConfig,
    }
    out.finish("poa-study", &Resolved { poa_study: &cfg }, &[seed])?;

    for h in &result.histograms {
        let skipped = result.skipped.iter().find(|s| s.0 == h.order).map_or(0, |s| s.1);
        println!(
            "order {}: {} instances, {} skipped, {:.3} below 1.1",
            h.order,
            h.total(),
            skipped,
            h.mass_below(1.1)
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundReport {
    params: GBoundParams,
    g_star: f64,
}

fn print_bound(b: &BoundReport) {
    println!("G* = {}", b.g_star);
    println!(
        "d = {}, sigma^2 = {}, r = {} +/- {}, c = {}",
        b.params.d, b.params.sigma2, b.params.r, b.params.r_half_width, b.params.c
    );
}

#[allow(clippy::too_many_arguments)]
fn cmd_regret_study(
    config: &Path,
    g_multipliers: Option<Vec<f64>>,
    g_base: Option<f64>,
    horizon: Option<u64>,
    replications: Option<usize>,
    bound: bool,
    trace: bool,
    plot: bool,
    common: &Common,
) -> Result<()> {
    let (scenario, inst) = load_instance(config)?;
    let mut cfg = scenario.regret_study.clone().unwrap_or_default();
    if let Some(m) = g_multipliers {
        cfg.multipliers = m;
    }
    if let Some(g) = g_base {
        cfg.g_base = g;
    }
    if let Some(h) = horizon {
        cfg.horizon = h;
        cfg.checkpoints = None;
    }
    if let Some(r) = replications {
        cfg.replications = r;
    }
    let seed = common.seed.unwrap_or(scenario.seed);
    let mut out = OutDir::create(&common.out)?;

    if bound {
        let opts = scenario.g_bound.unwrap_or_default();
        let (params, g_star) = compute_g_bound(&inst, &opts, seed)?;
        let report = BoundReport { params, g_star };
        print_bound(&report);
        out.write_json("bound.json", &report)?;
    }

    let result = regret_study(&inst, &cfg, seed, common.jobs())?;
    out.write("curves.csv", |w| Ok(export::write_curves(&result.curves, w)?))?;
    out.write("aggregate.csv", |w| Ok(export::write_aggregate(&result.aggregate, w)?))?;

    if trace {
        let g = cfg.g_values()[0];
        let run = run_unknown(&inst, g, cfg.horizon, replication_seed(seed, 0))?;
        out.write("trace.csv", |w| Ok(export::write_trace(&run.trace, w)?))?;
        out.write("store.csv", |w| Ok(export::write_store(&inst, &run.summary.store, w)?))?;
    }
    if plot {
        let series: Vec<plot::Series> = cfg
            .g_values()
            .iter()
            .map(|&g| plot::Series {
                label: format!("G = {g}"),
                points: result
                    .aggregate
                    .iter()
                    .filter(|r| r.g == g)
                    .map(|r| (r.t as f64, r.mean_over_log))
                    .collect(),
            })
            .collect();
        let svg = plot::lines_logx("regret / ln T", "mean regret / ln T", &series);
        out.write("regret_over_log.svg", |w| {
            w.extend_from_slice(svg.as_bytes());
            Ok(())
        })?;
    }

    #[derive(Serialize)]
    struct Resolved<'a> {
        scenario: &'a Scenario,
        regret_study: &'a RegretStudyConfig,
    }
    let seeds: Vec<u64> = (0..cfg.replications).map(|i| replication_seed(seed, i)).collect();
    out.finish(
        "regret-study",
        &Resolved {
            scenario: &scenario,
            regret_study: &cfg,
        },
        &seeds,
    )?;

    let last = *cfg.checkpoints().last().expect("horizon has checkpoints");
    for g in cfg.g_values() {
        if let Some(row) = result.aggregate_at(g, last) {
            println!(
                "G = {g}: mean regret {} at T = {last}, regret / ln T = {:.3}",
                row.mean, row.mean_over_log
            );
        }
    }
    Ok(())
}

fn cmd_schedule_preview(g: f64, n: u32, k: u32, horizon: u64, common: &Common) -> Result<()> {
    let schedule = build_schedule(g, n, k, horizon)?;
    let mut out = OutDir::create(&common.out)?;
    out.write("schedule.csv", |w| Ok(export::write_schedule(&schedule, w)?))?;
    #[derive(Serialize)]
    struct Args {
        g: f64,
        n: u32,
        k: u32,
        horizon: u64,
    }
    out.finish("schedule-preview", &Args { g, n, k, horizon }, &[])?;
    let c = schedule.counts();
    println!(
        "explore {}, bellman_ford {}, exploit {}",
        c.explore, c.bellman_ford, c.exploit
    );
    Ok(())
}

fn cmd_bound(config: &Path, common: &Common) -> Result<()> {
    let (scenario, inst) = load_instance(config)?;
    let seed = common.seed.unwrap_or(scenario.seed);
    let opts = scenario.g_bound.unwrap_or_default();
    let (params, g_star) = compute_g_bound(&inst, &opts, seed)?;
    let report = BoundReport { params, g_star };
    print_bound(&report);
    let mut out = OutDir::create(&common.out)?;
    out.write_json("bound.json", &report)?;
    out.finish("bound", &scenario, &[seed])?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunKnown { config, common } => run_known(&config, &common),
        Command::PoaStudy {
            config,
            samples,
            orders,
            plot,
            common,
        } => cmd_poa_study(config.as_deref(), samples, orders, plot, &common),
        Command::RegretStudy {
            config,
            g_multipliers,
            g_base,
            horizon,
            replications,
            bound,
            trace,
            plot,
            common,
        } => cmd_regret_study(
            &config,
            g_multipliers,
            g_base,
            horizon,
            replications,
            bound,
            trace,
            plot,
            &common,
        ),
        Command::SchedulePreview {
            g,
            n,
            k,
            horizon,
            common,
        } => cmd_schedule_preview(g, n, k, horizon, &common),
        Command::Bound { config, common } => cmd_bound(&config, &common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

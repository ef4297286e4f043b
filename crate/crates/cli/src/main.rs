use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use double_auction::experiments::{self, checks, ExperimentConfig, SuiteResult};
use double_auction::market::{random_profile, Market, MechanismKind, MechanismSpec};
use double_auction::matching::{mtheta_match, Theta};
use double_auction::metrics::reported_profit;
use double_auction::orders::{book_from_orders, parse_orders, profile_from_orders};
use double_auction::pricing::{price_matching, PricingRule};
use double_auction::{Money, StrategyKind};

#[derive(Parser)]
#[command(name = "dauction", version, about = "Double-auction clearing and market simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clear an order file once and print the executed trades.
    Clear(ClearArgs),
    /// Simulate one market and print per-day metrics.
    Simulate(SimulateArgs),
    /// Run a batch experiment and write CSV tables and SVG plots.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Me,
    Mv,
    Mtheta,
}

#[derive(clap::Args)]
struct ClearArgs {
    #[arg(long, value_enum, default_value = "me")]
    policy: Policy,
    /// Parameter of the mtheta policy, in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, default_value = "midpoint")]
    pricing: PricingRule,
    /// Order file: `BID|ASK <price> <quantity> [trader_id]` per line.
    orderfile: PathBuf,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// cda | ch | mv | mtheta:<theta>
    #[arg(long, default_value = "ch")]
    mechanism: MechanismKind,
    /// Overrides the clearing-house parameter.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// tt | ps:<delta> | zic | gd[:memory,grid]
    #[arg(long, default_value = "tt")]
    strategy: StrategyKind,
    /// Total traders, half buyers and half sellers. Ignored with --values.
    #[arg(long, default_value_t = 20)]
    traders: usize,
    #[arg(long, default_value_t = 1)]
    rounds: u32,
    #[arg(long, default_value_t = 1)]
    days: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "midpoint")]
    pricing: PricingRule,
    /// Lower bound of drawn private values.
    #[arg(long, default_value = "50")]
    value_min: Money,
    /// Upper bound of drawn private values.
    #[arg(long, default_value = "150")]
    value_max: Money,
    /// Private values in order-file format (one unit per line) instead of random draws.
    #[arg(long)]
    values: Option<PathBuf>,
    /// Also write every executed trade to this CSV file.
    #[arg(long)]
    trades: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Baseline,
    Multiround,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// TOML config; the built-in defaults for the suite are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write one CSV line per run.
    #[arg(long)]
    raw: bool,
    /// Evaluate the suite's trend checks; exit non-zero if any fails.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    no_plots: bool,
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

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Clear(args) => clear(args).map(|()| ExitCode::SUCCESS),
        Command::Simulate(args) => simulate(args).map(|()| ExitCode::SUCCESS),
        Command::Experiment(args) => experiment(args),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn clear(args: ClearArgs) -> Result<()> {
    let theta = match (args.policy, args.theta) {
        (Policy::Me, None) => Theta::EQUILIBRIUM,
        (Policy::Mv, None) => Theta::MAX_VOLUME,
        (Policy::Mtheta, Some(t)) => Theta::new(t)?,
        (Policy::Mtheta, None) => bail!("--policy mtheta needs --theta"),
        (_, Some(_)) => bail!("--theta only applies to --policy mtheta"),
    };
    let orders = parse_orders(&read(&args.orderfile)?)
        .with_context(|| format!("in {}", args.orderfile.display()))?;
    let book = book_from_orders(&orders)?;
    let result = mtheta_match(theta, &book);
    let trades = price_matching(&result.matching, args.pricing, result.price_interval)?;

    let stdout = io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    w.write_record(["bid_id", "ask_id", "bid_price", "ask_price", "trade_price", "qty"])?;
    for t in &trades {
        w.write_record([
            t.bid_id.to_string(),
            t.ask_id.to_string(),
            t.bid_price.to_string(),
            t.ask_price.to_string(),
            t.price.to_string(),
            t.quantity.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    let mut out = stdout.lock();
    writeln!(out)?;
    writeln!(out, "q_me,q_mv,q_target,reported_profit")?;
    writeln!(
        out,
        "{},{},{},{}",
        result.q_me,
        result.q_mv,
        result.q_target,
        reported_profit(&result.matching)
    )?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let kind = match (args.mechanism, args.theta) {
        (MechanismKind::Cda, Some(_)) => bail!("--theta does not apply to the cda mechanism"),
        (MechanismKind::Ch(_), Some(t)) => MechanismKind::Ch(Theta::new(t)?),
        (kind, None) => kind,
    };
    if args.rounds == 0 || args.days == 0 {
        bail!("--rounds and --days must be at least 1");
    }
    let spec = MechanismSpec::new(kind, args.pricing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let profile = match &args.values {
        Some(path) => {
            let orders = parse_orders(&read(path)?).with_context(|| format!("in {}", path.display()))?;
            profile_from_orders(&orders)?
        }
        None => {
            if args.traders < 2 || !args.traders.is_multiple_of(2) {
                bail!("--traders must be a positive even number");
            }
            if args.value_min > args.value_max || args.value_min.is_negative() {
                bail!("value range must satisfy 0 <= min <= max");
            }
            let half = args.traders / 2;
            random_profile(&mut rng, half, half, (args.value_min, args.value_max))
        }
    };
    let mut market = Market::homogeneous(spec, args.strategy, &profile, rng.next_u64())?;

    let mut trade_log = match &args.trades {
        Some(path) => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            w.write_record(["day", "round", "buyer", "seller", "bid_price", "ask_price", "price"])?;
            Some(w)
        }
        None => None,
    };

    let stdout = io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    w.write_record(["mechanism", "strategy", "day", "round_count", "volume", "pe", "pa", "ea"])?;
    for day in 0..args.days {
        let result = market.run_day(day, args.rounds)?;
        let r = &result.report;
        w.write_record([
            kind.to_string(),
            args.strategy.to_string(),
            day.to_string(),
            args.rounds.to_string(),
            r.volume.to_string(),
            r.equilibrium_profit.to_string(),
            r.actual_profit.to_string(),
            r.efficiency.map(|e| format!("{e:.6}")).unwrap_or_default(),
        ])?;
        if let Some(log) = trade_log.as_mut() {
            for t in &result.trades {
                log.write_record([
                    t.day.to_string(),
                    t.round.to_string(),
                    t.buyer.0.to_string(),
                    t.seller.0.to_string(),
                    t.bid_price.to_string(),
                    t.ask_price.to_string(),
                    t.price.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    if let Some(mut log) = trade_log {
        log.flush()?;
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let (name, defaults) = match args.suite {
        Suite::Baseline => ("baseline", ExperimentConfig::baseline()),
        Suite::Multiround => ("multiround", ExperimentConfig::multiround()),
    };
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => defaults,
    };
    if args.jobs == Some(0) {
        bail!("--jobs must be at least 1");
    }
    let suite: SuiteResult = match args.suite {
        Suite::Baseline => experiments::run_baseline_suite(&config, args.jobs)?,
        Suite::Multiround => experiments::run_multiround_suite(&config, args.jobs)?,
    };
    let mut written = experiments::emit_csv(&suite, &args.out, name, args.raw)?;
    if !args.no_plots {
        written.extend(experiments::emit_plots(&suite, &args.out, name)?);
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    if !args.check {
        return Ok(ExitCode::SUCCESS);
    }
    let outcomes = match args.suite {
        Suite::Baseline => checks::check_baseline(&suite),
        Suite::Multiround => checks::check_multiround(&suite),
    };
    for o in &outcomes {
        println!("{o}");
    }
    Ok(if outcomes.iter().all(|o| o.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

//! Batch experiments: many seeded market runs per (mechanism, strategy,
//! rounds) cell, aggregated into means, standard deviations and standard
//! errors.
//!
//! Every run draws a fresh value profile. Run `i` of a cell is seeded with
//! the first eight bytes of `sha256(base_seed, cell key, i)`, so results do
//! not depend on how runs are scheduled across threads.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::market::{random_profile, MarketError, Market, MechanismKind, MechanismSpec};
use crate::metrics::MetricsError;
use crate::money::Money;
use crate::pricing::PricingRule;
use crate::traders::StrategyKind;

pub mod checks;
mod output;

pub use output::{emit_csv, emit_plots, write_aggregate_csv, write_raw_csv};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("experiment config lists no {0}")]
    Empty(&'static str),
    #[error("invalid experiment config: {0}")]
    Invalid(String),
    #[error("cannot parse experiment config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: cannot draw plot: {message}")]
    Plot { path: PathBuf, message: String },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn default_traders() -> usize {
    20
}

fn default_days() -> u32 {
    1
}

/// Experiment description, usually read from a TOML file:
///
/// ```toml
/// mechanisms = ["cda", "ch", "mtheta:-0.5", "mtheta:0.5", "mv"]
/// strategies = ["tt", "ps:5", "ps:10", "ps:15", "ps:20", "zic", "gd"]
/// traders = 20
/// value_range = [50, 150]
/// repetitions = 100
/// rounds = [1]
/// days = 1
/// base_seed = 1
/// pricing = "midpoint"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mechanisms: Vec<MechanismKind>,
    pub strategies: Vec<StrategyKind>,
    /// Total traders, split evenly into buyers and sellers.
    #[serde(default = "default_traders")]
    pub traders: usize,
    /// Private values are drawn uniformly from this closed range.
    pub value_range: [f64; 2],
    pub repetitions: usize,
    /// Rounds per day; one cell per entry.
    pub rounds: Vec<u32>,
    #[serde(default = "default_days")]
    pub days: u32,
    pub base_seed: u64,
    #[serde(default)]
    pub pricing: PricingRule,
}

fn standard_strategies() -> Vec<StrategyKind> {
    ["tt", "ps:5", "ps:10", "ps:15", "ps:20", "zic", "gd"]
        .iter()
        .map(|s| s.parse().expect("built-in strategy"))
        .collect()
}

fn mechanisms(names: &[&str]) -> Vec<MechanismKind> {
    names
        .iter()
        .map(|s| s.parse().expect("built-in mechanism"))
        .collect()
}

impl ExperimentConfig {
    /// Single-round study over five mechanisms and seven strategies.
    pub fn baseline() -> Self {
        ExperimentConfig {
            mechanisms: mechanisms(&["cda", "ch", "mtheta:-0.5", "mtheta:0.5", "mv"]),
            strategies: standard_strategies(),
            traders: 20,
            value_range: [50.0, 150.0],
            repetitions: 100,
            rounds: vec![1],
            days: 1,
            base_seed: 20_080_101,
            pricing: PricingRule::PairMidpoint,
        }
    }

    /// Rounds swept from 1 to 10 under CDA, CH and MV.
    pub fn multiround() -> Self {
        ExperimentConfig {
            mechanisms: mechanisms(&["cda", "ch", "mv"]),
            rounds: (1..=10).collect(),
            ..Self::baseline()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.mechanisms.is_empty() {
            return Err(ExperimentError::Empty("mechanisms"));
        }
        if self.strategies.is_empty() {
            return Err(ExperimentError::Empty("strategies"));
        }
        if self.rounds.is_empty() {
            return Err(ExperimentError::Empty("round counts"));
        }
        let invalid = |msg: String| Err(ExperimentError::Invalid(msg));
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1".into());
        }
        if self.traders < 2 || !self.traders.is_multiple_of(2) {
            return invalid(format!(
                "traders must be a positive even number, got {}",
                self.traders
            ));
        }
        if let Some(r) = self.rounds.iter().find(|&&r| r == 0) {
            return invalid(format!("round counts must be at least 1, got {r}"));
        }
        if self.days == 0 {
            return invalid("days must be at least 1".into());
        }
        let [lo, hi] = self.value_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return invalid(format!("value_range [{lo}, {hi}] must satisfy 0 <= lo <= hi"));
        }
        for &m in &self.mechanisms {
            MechanismSpec::new(m, self.pricing)?;
        }
        Ok(())
    }

    fn value_bounds(&self) -> (Money, Money) {
        let cents = |x: f64| Money::from_minor((x * 100.0).round() as i64);
        (cents(self.value_range[0]), cents(self.value_range[1]))
    }

    /// Cells in configuration order: mechanism, then strategy, then rounds.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &mechanism in &self.mechanisms {
            for &strategy in &self.strategies {
                for &rounds in &self.rounds {
                    out.push(Cell {
                        mechanism,
                        strategy,
                        rounds,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub mechanism: MechanismKind,
    pub strategy: StrategyKind,
    pub rounds: u32,
}

impl Cell {
    pub fn key(&self) -> String {
        format!("{}|{}|{}", self.mechanism, self.strategy, self.rounds)
    }
}

pub fn run_seed(base_seed: u64, cell: &Cell, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(cell.key().as_bytes());
    h.update((run as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Outcome of one day of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub mechanism: MechanismKind,
    pub strategy: StrategyKind,
    pub day: u32,
    pub rounds: u32,
    pub run: usize,
    pub volume: u64,
    pub equilibrium_profit: Money,
    pub actual_profit: Money,
    /// Percentage; `None` when the equilibrium profit is zero.
    pub efficiency: Option<f64>,
}

fn run_once(config: &ExperimentConfig, cell: &Cell, run: usize) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(config.base_seed, cell, run));
    let half = config.traders / 2;
    let profile = random_profile(&mut rng, half, half, config.value_bounds());
    let spec = MechanismSpec::new(cell.mechanism, config.pricing)?;
    let mut market = Market::homogeneous(spec, cell.strategy, &profile, rng.next_u64())?;
    (0..config.days)
        .map(|day| {
            let result = market.run_day(day, cell.rounds)?;
            Ok(RunRecord {
                mechanism: cell.mechanism,
                strategy: cell.strategy,
                day,
                rounds: cell.rounds,
                run,
                volume: result.report.volume,
                equilibrium_profit: result.report.equilibrium_profit,
                actual_profit: result.report.actual_profit,
                efficiency: result.report.efficiency,
            })
        })
        .collect()
}

/// Sample statistics over repetitions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single sample.
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(xs: &[f64]) -> Option<Summary> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        Some(Summary {
            n,
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub mechanism: MechanismKind,
    pub strategy: StrategyKind,
    pub day: u32,
    pub rounds: u32,
    pub runs: usize,
    pub volume: Summary,
    /// Over runs with a defined efficiency only.
    pub efficiency: Option<Summary>,
    /// Runs whose equilibrium profit was zero.
    pub efficiency_undefined: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub config: ExperimentConfig,
    /// Every run-day, in cell order, then run, then day.
    pub records: Vec<RunRecord>,
    pub rows: Vec<AggregateRow>,
}

impl SuiteResult {
    pub fn row(
        &self,
        mechanism: MechanismKind,
        strategy: StrategyKind,
        rounds: u32,
    ) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| {
            r.mechanism == mechanism && r.strategy == strategy && r.rounds == rounds && r.day == 0
        })
    }
}

fn aggregate(config: &ExperimentConfig, records: &[RunRecord]) -> Vec<AggregateRow> {
    let per_cell = config.repetitions * config.days as usize;
    let mut rows = Vec::new();
    for chunk in records.chunks(per_cell) {
        for day in 0..config.days {
            let runs: Vec<&RunRecord> = chunk.iter().filter(|r| r.day == day).collect();
            let volumes: Vec<f64> = runs.iter().map(|r| r.volume as f64).collect();
            let effs: Vec<f64> = runs.iter().filter_map(|r| r.efficiency).collect();
            let first = runs[0];
            rows.push(AggregateRow {
                mechanism: first.mechanism,
                strategy: first.strategy,
                day,
                rounds: first.rounds,
                runs: runs.len(),
                volume: Summary::of(&volumes).expect("repetitions >= 1"),
                efficiency: Summary::of(&effs),
                efficiency_undefined: runs.len() - effs.len(),
            });
        }
    }
    rows
}

/// Runs every cell of `config`. `jobs` caps worker threads; `None` uses all
/// cores. The result does not depend on `jobs`.
pub fn run_suite(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SuiteResult, ExperimentError> {
    config.validate()?;
    let cells = config.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.repetitions).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?;
    let nested: Vec<Vec<RunRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| run_once(config, &cells[c], r))
            .collect::<Result<_, _>>()
    })?;
    let records: Vec<RunRecord> = nested.into_iter().flatten().collect();
    let rows = aggregate(config, &records);
    Ok(SuiteResult {
        config: config.clone(),
        records,
        rows,
    })
}

/// Single-round, single-day study: one row per mechanism and strategy.
pub fn run_baseline_suite(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SuiteResult, ExperimentError> {
    if config.rounds != [1] || config.days != 1 {
        return Err(ExperimentError::Invalid(
            "the baseline suite runs exactly one round on one day".into(),
        ));
    }
    run_suite(config, jobs)
}

/// Round-count sweep: one row per mechanism, strategy and round count.
pub fn run_multiround_suite(config: &ExperimentConfig, jobs: Option<usize>) -> Result<SuiteResult, ExperimentError> {
    if config.days != 1 {
        return Err(ExperimentError::Invalid(
            "the multi-round suite runs a single day".into(),
        ));
    }
    run_suite(config, jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            mechanisms: mechanisms(&["cda", "mv"]),
            strategies: vec![StrategyKind::TruthTelling, StrategyKind::ZeroIntelligenceC],
            repetitions: 6,
            rounds: vec![1, 3],
            ..ExperimentConfig::baseline()
        }
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.se - s.sd / 2.0).abs() < 1e-12);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert_eq!(Summary::of(&[7.0]).unwrap().sd, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn seeds_differ_across_cells_and_runs() {
        let cells = small().cells();
        let mut seeds: Vec<u64> = cells
            .iter()
            .flat_map(|c| (0..50).map(move |r| run_seed(1, c, r)))
            .collect();
        let n = seeds.len();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), n);
        assert_ne!(run_seed(1, &cells[0], 0), run_seed(2, &cells[0], 0));
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let cfg = small();
        let serial = run_suite(&cfg, Some(1)).unwrap();
        let parallel = run_suite(&cfg, Some(4)).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.rows.len(), 8);
        assert_eq!(serial.records.len(), 8 * 6);
        for row in &serial.rows {
            assert_eq!(row.runs, 6);
            assert!(row.volume.min <= row.volume.mean && row.volume.mean <= row.volume.max);
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        for cfg in [ExperimentConfig::baseline(), ExperimentConfig::multiround()] {
            let text = cfg.to_toml_string();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ExperimentConfig::baseline();
        let empty = ExperimentConfig {
            strategies: vec![],
            ..base.clone()
        };
        assert!(matches!(run_suite(&empty, None), Err(ExperimentError::Empty("strategies"))));
        let odd = ExperimentConfig { traders: 7, ..base.clone() };
        assert!(matches!(odd.validate(), Err(ExperimentError::Invalid(_))));
        let uniform_mv = ExperimentConfig {
            pricing: PricingRule::UniformMidOfInterval,
            ..base.clone()
        };
        assert!(matches!(uniform_mv.validate(), Err(ExperimentError::Market(_))));
        let text = "mechanisms = [\"cda\"]\nstrategies = [\"zip\"]\nvalue_range = [50, 150]\nrepetitions = 1\nrounds = [1]\nbase_seed = 1\n";
        assert!(matches!(ExperimentConfig::from_toml_str(text), Err(ExperimentError::Parse(_))));
        let multi = ExperimentConfig::multiround();
        assert!(matches!(run_baseline_suite(&multi, None), Err(ExperimentError::Invalid(_))));
    }

    #[test]
    fn parses_minimal_toml() {
        let text = "mechanisms = [\"cda\", \"mtheta:0.5\"]\nstrategies = [\"gd:4,16\"]\nvalue_range = [50, 150.5]\nrepetitions = 3\nrounds = [2]\nbase_seed = 9\n";
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.traders, 20);
        assert_eq!(cfg.days, 1);
        assert_eq!(cfg.pricing, PricingRule::PairMidpoint);
        assert_eq!(cfg.value_bounds(), (Money::from_units(50), Money::from_minor(15050)));
    }
}

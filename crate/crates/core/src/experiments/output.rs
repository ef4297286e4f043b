use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use super::{AggregateRow, ExperimentError, RunRecord, SuiteResult};
use crate::market::MechanismKind;

fn theta_cell(m: MechanismKind) -> String {
    m.theta().map(|t| t.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct RawRow {
    mechanism: String,
    strategy: String,
    theta: String,
    day: u32,
    round_count: u32,
    run: usize,
    volume: u64,
    pe: String,
    pa: String,
    ea: String,
}

impl From<&RunRecord> for RawRow {
    fn from(r: &RunRecord) -> Self {
        RawRow {
            mechanism: r.mechanism.to_string(),
            strategy: r.strategy.to_string(),
            theta: theta_cell(r.mechanism),
            day: r.day,
            round_count: r.rounds,
            run: r.run,
            volume: r.volume,
            pe: r.equilibrium_profit.to_string(),
            pa: r.actual_profit.to_string(),
            ea: r.efficiency.map(|e| format!("{e:.6}")).unwrap_or_default(),
        }
    }
}

#[derive(Serialize)]
struct AggRow {
    mechanism: String,
    strategy: String,
    theta: String,
    day: u32,
    round_count: u32,
    runs: usize,
    volume_mean: String,
    volume_sd: String,
    volume_se: String,
    volume_min: String,
    volume_max: String,
    ea_mean: String,
    ea_sd: String,
    ea_se: String,
    ea_undefined: usize,
}

impl From<&AggregateRow> for AggRow {
    fn from(r: &AggregateRow) -> Self {
        let f = |x: f64| format!("{x:.6}");
        let ea = |g: fn(&super::Summary) -> f64| r.efficiency.as_ref().map(|s| f(g(s))).unwrap_or_default();
        AggRow {
            mechanism: r.mechanism.to_string(),
            strategy: r.strategy.to_string(),
            theta: theta_cell(r.mechanism),
            day: r.day,
            round_count: r.rounds,
            runs: r.runs,
            volume_mean: f(r.volume.mean),
            volume_sd: f(r.volume.sd),
            volume_se: f(r.volume.se),
            volume_min: f(r.volume.min),
            volume_max: f(r.volume.max),
            ea_mean: ea(|s| s.mean),
            ea_sd: ea(|s| s.sd),
            ea_se: ea(|s| s.se),
            ea_undefined: r.efficiency_undefined,
        }
    }
}

/// One line per run and day: `mechanism,strategy,theta,day,round_count,run,volume,pe,pa,ea`.
pub fn write_raw_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(RawRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

/// One line per cell and day. Efficiency columns are means over runs with a
/// defined efficiency (mean of per-run ratios).
pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(AggRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File, ExperimentError> {
    fs::File::create(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `<name>.csv` (aggregate) and, when `raw` is set, `<name>_runs.csv`
/// into `dir`. Returns the files written.
pub fn emit_csv(suite: &SuiteResult, dir: &Path, name: &str, raw: bool) -> Result<Vec<PathBuf>, ExperimentError> {
    if suite.rows.is_empty() {
        return Err(ExperimentError::Empty("results to write"));
    }
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let path = dir.join(format!("{name}.csv"));
    write_aggregate_csv(&suite.rows, create(&path)?)
        .map_err(|source| ExperimentError::Csv { path: path.clone(), source })?;
    written.push(path);
    if raw {
        let path = dir.join(format!("{name}_runs.csv"));
        write_raw_csv(&suite.records, create(&path)?)
            .map_err(|source| ExperimentError::Csv { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Copy)]
enum Metric {
    Volume,
    Efficiency,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Volume => "volume",
            Metric::Efficiency => "efficiency",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Volume => "mean trading volume",
            Metric::Efficiency => "mean allocative efficiency (%)",
        }
    }

    fn of(self, row: &AggregateRow) -> f64 {
        match self {
            Metric::Volume => row.volume.mean,
            Metric::Efficiency => row.efficiency.map_or(0.0, |s| s.mean),
        }
    }
}

fn plot_err<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> ExperimentError + '_ {
    move |e| ExperimentError::Plot {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn upper_bound(values: impl Iterator<Item = f64>) -> f64 {
    let top = values.fold(0.0, f64::max);
    if top > 0.0 {
        top * 1.1
    } else {
        1.0
    }
}

/// Grouped bars: one group per strategy, one bar per mechanism.
fn bar_chart(suite: &SuiteResult, metric: Metric, path: &Path) -> Result<(), ExperimentError> {
    let cfg = &suite.config;
    let rounds = cfg.rounds[0];
    let root = SVGBackend::new(path, (1000, 520)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err(path))?;
    let groups = cfg.strategies.len();
    let width = cfg.mechanisms.len() as f64 + 1.0;
    let y_max = upper_bound(suite.rows.iter().filter(|r| r.day == 0).map(|r| metric.of(r)));
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} ({} round)", metric.label(), rounds), ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..groups as f64 * width, 0.0..y_max)
        .map_err(plot_err(path))?;
    let strategies: Vec<String> = cfg.strategies.iter().map(|s| s.to_string()).collect();
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(groups * 2 + 1)
        .x_label_formatter(&|x| {
            let g = (x / width).floor() as usize;
            let centered = (x - (g as f64 + 0.5) * width).abs() < width / 4.0;
            match strategies.get(g) {
                Some(s) if centered => s.clone(),
                _ => String::new(),
            }
        })
        .y_desc(metric.label())
        .draw()
        .map_err(plot_err(path))?;
    for (mi, &mechanism) in cfg.mechanisms.iter().enumerate() {
        let color = Palette99::pick(mi).filled();
        let bars: Vec<Rectangle<(f64, f64)>> = cfg
            .strategies
            .iter()
            .enumerate()
            .filter_map(|(si, &strategy)| {
                let row = suite.row(mechanism, strategy, rounds)?;
                let x0 = si as f64 * width + 0.5 + mi as f64;
                Some(Rectangle::new([(x0, 0.0), (x0 + 0.9, metric.of(row))], color))
            })
            .collect();
        chart
            .draw_series(bars)
            .map_err(plot_err(path))?
            .label(mechanism.to_string())
            .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 10, y + 5)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err(path))?;
    root.present().map_err(plot_err(path))
}

/// One panel per strategy, one line per mechanism, metric against rounds.
fn line_chart(suite: &SuiteResult, metric: Metric, path: &Path) -> Result<(), ExperimentError> {
    let cfg = &suite.config;
    let panels = cfg.strategies.len();
    let cols = panels.min(4);
    let rows = panels.div_ceil(cols);
    let root = SVGBackend::new(path, (320 * cols as u32, 280 * rows as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err(path))?;
    let r_min = *cfg.rounds.iter().min().expect("validated") as f64;
    let r_max = *cfg.rounds.iter().max().expect("validated") as f64;
    let y_max = upper_bound(suite.rows.iter().filter(|r| r.day == 0).map(|r| metric.of(r)));
    let areas = root.split_evenly((rows, cols));
    for (&strategy, area) in cfg.strategies.iter().zip(areas.iter()) {
        let mut chart = ChartBuilder::on(area)
            .caption(strategy.to_string(), ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(45)
            .build_cartesian_2d(r_min..r_max.max(r_min + 1.0), 0.0..y_max)
            .map_err(plot_err(path))?;
        chart
            .configure_mesh()
            .x_desc("rounds")
            .y_desc(metric.name())
            .draw()
            .map_err(plot_err(path))?;
        for (mi, &mechanism) in cfg.mechanisms.iter().enumerate() {
            let color = Palette99::pick(mi).to_rgba();
            let points: Vec<(f64, f64)> = cfg
                .rounds
                .iter()
                .filter_map(|&r| suite.row(mechanism, strategy, r).map(|row| (r as f64, metric.of(row))))
                .collect();
            chart
                .draw_series(LineSeries::new(points, color.stroke_width(2)))
                .map_err(plot_err(path))?
                .label(mechanism.to_string())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 12, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err(path))?;
    }
    root.present().map_err(plot_err(path))
}

/// Writes `<name>_volume.svg` and `<name>_efficiency.svg`. A suite with a
/// single round count is drawn as grouped bars, a round sweep as lines.
pub fn emit_plots(suite: &SuiteResult, dir: &Path, name: &str) -> Result<Vec<PathBuf>, ExperimentError> {
    if suite.rows.is_empty() {
        return Err(ExperimentError::Empty("results to plot"));
    }
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for metric in [Metric::Volume, Metric::Efficiency] {
        let path = dir.join(format!("{name}_{}.svg", metric.name()));
        if suite.config.rounds.len() == 1 {
            bar_chart(suite, metric, &path)?;
        } else {
            line_chart(suite, metric, &path)?;
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_suite, ExperimentConfig};

    fn tiny(rounds: Vec<u32>) -> SuiteResult {
        let cfg = ExperimentConfig {
            mechanisms: vec!["cda".parse().unwrap(), "mv".parse().unwrap()],
            strategies: vec!["tt".parse().unwrap(), "gd".parse().unwrap()],
            repetitions: 3,
            rounds,
            ..ExperimentConfig::baseline()
        };
        run_suite(&cfg, Some(2)).unwrap()
    }

    #[test]
    fn csv_row_counts() {
        let suite = tiny(vec![1]);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_csv(&suite, dir.path(), "baseline", true).unwrap();
        let agg = fs::read_to_string(&files[0]).unwrap();
        let raw = fs::read_to_string(&files[1]).unwrap();
        assert_eq!(agg.lines().count(), 1 + 4);
        assert_eq!(raw.lines().count(), 1 + 4 * 3);
        assert_eq!(
            raw.lines().next().unwrap(),
            "mechanism,strategy,theta,day,round_count,run,volume,pe,pa,ea"
        );
        assert!(raw.lines().any(|l| l.starts_with("mv,tt,1,0,1,")));
        assert!(raw.lines().any(|l| l.starts_with("cda,gd,,0,1,")));
    }

    #[test]
    fn csv_is_reproducible() {
        let a = tiny(vec![1, 2]);
        let b = tiny(vec![1, 2]);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_raw_csv(&a.records, &mut x).unwrap();
        write_raw_csv(&b.records, &mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn plots_are_svg_files() {
        let dir = tempfile::tempdir().unwrap();
        for (name, rounds) in [("bars", vec![1]), ("lines", vec![1, 2, 3])] {
            let files = emit_plots(&tiny(rounds), dir.path(), name).unwrap();
            assert_eq!(files.len(), 2);
            for f in files {
                let text = fs::read_to_string(&f).unwrap();
                assert!(text.starts_with("<svg"), "{}", f.display());
            }
        }
    }
}

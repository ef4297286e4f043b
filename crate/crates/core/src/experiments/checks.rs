//! Trend checks over aggregated suites.
//!
//! Comparisons use a three-standard-error margin. Cells are seeded
//! independently, so the standard error of a difference of means is
//! `sqrt(se_a² + se_b²)`. A claim `a >= b` fails only when `a` is more than
//! three standard errors below `b`; a claim `a > b` holds only when `a`
//! exceeds `b` by more than three standard errors.

use std::fmt;

use super::{Summary, SuiteResult};
use crate::market::MechanismKind;
use crate::matching::Theta;
use crate::traders::StrategyKind;

pub const MARGIN_SE: f64 = 3.0;

fn diff_se(a: &Summary, b: &Summary) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

/// `a >= b` cannot be rejected at the margin.
pub fn not_below(a: &Summary, b: &Summary) -> bool {
    a.mean - b.mean >= -MARGIN_SE * diff_se(a, b)
}

/// `a > b` is established at the margin.
pub fn clearly_above(a: &Summary, b: &Summary) -> bool {
    a.mean - b.mean > MARGIN_SE * diff_se(a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub comparisons: usize,
    /// One line per failed comparison.
    pub failures: Vec<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.comparisons > 0
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {} ({} comparisons, {} failed)",
            self.name,
            self.comparisons,
            self.failures.len()
        )?;
        for line in &self.failures {
            write!(f, "\n    {line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Field {
    Volume,
    Efficiency,
}

struct Checker<'a> {
    suite: &'a SuiteResult,
    outcome: CheckOutcome,
}

impl<'a> Checker<'a> {
    fn new(suite: &'a SuiteResult, name: &'static str) -> Self {
        Checker {
            suite,
            outcome: CheckOutcome {
                name,
                comparisons: 0,
                failures: Vec::new(),
            },
        }
    }

    fn summary(&mut self, m: MechanismKind, s: StrategyKind, rounds: u32, field: Field) -> Option<Summary> {
        let row = self.suite.row(m, s, rounds);
        let summary = row.and_then(|r| match field {
            Field::Volume => Some(r.volume),
            Field::Efficiency => r.efficiency,
        });
        if summary.is_none() {
            self.outcome
                .failures
                .push(format!("missing cell {m} / {s} / {rounds} rounds"));
        }
        summary
    }

    /// Records `lhs >= rhs` (or `lhs > rhs` when `strict`).
    fn compare(
        &mut self,
        lhs: (MechanismKind, StrategyKind, u32),
        rhs: (MechanismKind, StrategyKind, u32),
        field: Field,
        strict: bool,
    ) {
        self.outcome.comparisons += 1;
        let (Some(a), Some(b)) = (
            self.summary(lhs.0, lhs.1, lhs.2, field),
            self.summary(rhs.0, rhs.1, rhs.2, field),
        ) else {
            return;
        };
        let ok = if strict { clearly_above(&a, &b) } else { not_below(&a, &b) };
        if !ok {
            let op = if strict { ">" } else { ">=" };
            let name = match field {
                Field::Volume => "volume",
                Field::Efficiency => "efficiency",
            };
            self.outcome.failures.push(format!(
                "{name}: {}/{}/{}r {:.4}±{:.4} {op} {}/{}/{}r {:.4}±{:.4}",
                lhs.0, lhs.1, lhs.2, a.mean, a.se, rhs.0, rhs.1, rhs.2, b.mean, b.se
            ));
        }
    }

    fn finish(self) -> CheckOutcome {
        self.outcome
    }
}

fn ch(theta: f64) -> MechanismKind {
    MechanismKind::Ch(Theta::new(theta).expect("constant theta in range"))
}

fn is_truthful_or_markup(s: StrategyKind) -> bool {
    matches!(s, StrategyKind::TruthTelling | StrategyKind::PureSimple { .. })
}

/// Single-round volume is non-decreasing across θ = -0.5, 0, 0.5, 1 for each
/// strategy, and strictly higher at θ = 1 than at θ = 0 for truthful and
/// fixed-markup strategies.
pub fn volume_rises_with_theta(suite: &SuiteResult) -> CheckOutcome {
    let mut c = Checker::new(suite, "volume rises with theta");
    let thetas = [-0.5, 0.0, 0.5, 1.0];
    for &s in &suite.config.strategies {
        for w in thetas.windows(2) {
            c.compare((ch(w[1]), s, 1), (ch(w[0]), s, 1), Field::Volume, false);
        }
        if is_truthful_or_markup(s) {
            c.compare((ch(1.0), s, 1), (ch(0.0), s, 1), Field::Volume, true);
        }
    }
    c.finish()
}

/// Truth telling is strictly less efficient under MV than under CH, and
/// θ = 0.5 is at least as efficient as the CDA for every strategy.
pub fn efficiency_ordering(suite: &SuiteResult) -> CheckOutcome {
    let mut c = Checker::new(suite, "efficiency ordering");
    let tt = StrategyKind::TruthTelling;
    c.compare((ch(0.0), tt, 1), (ch(1.0), tt, 1), Field::Efficiency, true);
    for &s in &suite.config.strategies {
        c.compare((ch(0.5), s, 1), (MechanismKind::Cda, s, 1), Field::Efficiency, false);
    }
    c.finish()
}

/// Every single-round GD run trades nothing.
pub fn gd_single_round_is_idle(suite: &SuiteResult) -> CheckOutcome {
    let mut outcome = CheckOutcome {
        name: "single-round GD does not trade",
        comparisons: 0,
        failures: Vec::new(),
    };
    let runs = suite
        .records
        .iter()
        .filter(|r| matches!(r.strategy, StrategyKind::GjerstadDickhaut(_)) && r.rounds == 1);
    for r in runs {
        outcome.comparisons += 1;
        if r.volume != 0 {
            outcome.failures.push(format!(
                "{} / {} run {} traded {} units",
                r.mechanism, r.strategy, r.run, r.volume
            ));
        }
    }
    outcome
}

/// Volume is non-increasing in the markup δ = 0, 5, 10, 15, 20 (δ = 0 being
/// truth telling) under every mechanism.
pub fn volume_falls_with_markup(suite: &SuiteResult) -> CheckOutcome {
    let mut c = Checker::new(suite, "volume falls with markup");
    let ladder: Vec<StrategyKind> = ["tt", "ps:5", "ps:10", "ps:15", "ps:20"]
        .iter()
        .map(|s| s.parse().expect("constant strategy"))
        .collect();
    for &m in &suite.config.mechanisms {
        for w in ladder.windows(2) {
            c.compare((m, w[0], 1), (m, w[1], 1), Field::Volume, false);
        }
    }
    c.finish()
}

/// At the longest round count, MV trades strictly more than CH and the CDA
/// for every strategy; ZI-C under the CDA is strictly more efficient than
/// after one round; GD trades strictly more than after one round.
pub fn multiround_trends(suite: &SuiteResult) -> CheckOutcome {
    let mut c = Checker::new(suite, "multi-round trends");
    let last = suite.config.rounds.iter().copied().max().unwrap_or(1);
    let cda = MechanismKind::Cda;
    for &s in &suite.config.strategies {
        c.compare((ch(1.0), s, last), (ch(0.0), s, last), Field::Volume, true);
        c.compare((ch(1.0), s, last), (cda, s, last), Field::Volume, true);
    }
    let zic = StrategyKind::ZeroIntelligenceC;
    c.compare((cda, zic, last), (cda, zic, 1), Field::Efficiency, true);
    for &s in &suite.config.strategies {
        if matches!(s, StrategyKind::GjerstadDickhaut(_)) {
            for &m in &suite.config.mechanisms {
                c.compare((m, s, last), (m, s, 1), Field::Volume, true);
            }
        }
    }
    c.finish()
}

pub fn check_baseline(suite: &SuiteResult) -> Vec<CheckOutcome> {
    vec![
        volume_rises_with_theta(suite),
        efficiency_ordering(suite),
        gd_single_round_is_idle(suite),
        volume_falls_with_markup(suite),
    ]
}

pub fn check_multiround(suite: &SuiteResult) -> Vec<CheckOutcome> {
    vec![multiround_trends(suite)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(mean: f64, se: f64) -> Summary {
        Summary {
            n: 100,
            mean,
            sd: se * 10.0,
            se,
            min: 0.0,
            max: 10.0,
        }
    }

    #[test]
    fn margins() {
        assert!(not_below(&s(1.0, 0.1), &s(1.0, 0.1)));
        assert!(not_below(&s(0.7, 0.1), &s(1.0, 0.1)));
        assert!(!not_below(&s(0.5, 0.1), &s(1.0, 0.1)));
        assert!(!clearly_above(&s(1.2, 0.1), &s(1.0, 0.1)));
        assert!(clearly_above(&s(1.5, 0.1), &s(1.0, 0.1)));
        assert!(!clearly_above(&s(0.0, 0.0), &s(0.0, 0.0)));
    }
}

use rayon::prelude::*;
use statrs::statistics::{Data, OrderStatistics, RankTieBreaker, Statistics};

use super::sample::{sample_rng, sample_scm, ScmSamplerConfig};
use crate::bounds::{ace_bounds, algorithm1, subset_instrument_bounds, trivial_bounds, upper_bound, BoundQuery};
use crate::error::Result;
use crate::events::{CounterfactualEvent, SingleWorldEvent};
use crate::graph::{Admg, VarId};
use crate::identify::{DiscreteDistribution, SymbolicExpr};
use crate::inequalities::{check_distribution, Constraint};

/// Slack allowed when comparing a bound with the exact probability.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyQuery {
    /// Algorithm 1 lower bound and the matching upper bound.
    Algorithm1(BoundQuery),
    SubsetInstrument {
        target: SingleWorldEvent,
        tilde: Vec<VarId>,
    },
    Trivial(SingleWorldEvent),
}

impl VerifyQuery {
    pub fn target(&self) -> &SingleWorldEvent {
        match self {
            Self::Algorithm1(q) => &q.target,
            Self::SubsetInstrument { target, .. } | Self::Trivial(target) => target,
        }
    }

    pub fn bounds(&self, g: &Admg) -> Result<(SymbolicExpr, SymbolicExpr)> {
        match self {
            Self::Algorithm1(q) => Ok((algorithm1(g, q)?.0, upper_bound(g, q)?)),
            Self::SubsetInstrument { target, tilde } => subset_instrument_bounds(g, target, tilde),
            Self::Trivial(target) => trivial_bounds(g, target),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub samples: usize,
    /// Samples whose truth lies in `[lower - tol, upper + tol]`.
    pub contained: usize,
    /// Samples with `lower <= upper + tol`.
    pub ordered: usize,
    /// Samples where some term conditioned on a zero-probability event.
    pub skipped: usize,
    /// Stream indices of samples that failed containment or ordering.
    pub failures: Vec<u64>,
    /// `min(truth - lower, upper - truth)` over evaluated samples.
    pub min_slack: Option<f64>,
    pub mean_slack: Option<f64>,
    pub constraint_checks: usize,
    pub constraint_violations: usize,
    pub worst_violation: f64,
}

impl VerifyReport {
    pub fn evaluated(&self) -> usize {
        self.samples - self.skipped
    }

    pub fn all_contained(&self) -> bool {
        self.contained == self.evaluated() && self.ordered == self.evaluated()
    }

    pub fn is_clean(&self) -> bool {
        self.all_contained() && self.constraint_violations == 0
    }
}

enum Outcome {
    Skipped,
    Checked { contained: bool, ordered: bool, slack: f64 },
}

/// Samples `n` SCMs (stream `i` for sample `i`), checks that the exact
/// target probability lies within the bounds, and that none of
/// `constraints` is violated by the observational law.
pub fn verify_bounds(
    g: &Admg,
    query: &VerifyQuery,
    n: usize,
    cfg: &ScmSamplerConfig,
    constraints: &[Constraint],
) -> Result<VerifyReport> {
    cfg.validate()?;
    let (lower, upper) = query.bounds(g)?;
    let target = CounterfactualEvent::single(query.target().clone());
    let per_sample = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let scm = sample_scm(g, cfg, &mut sample_rng(cfg.seed, i))?;
            let joint = scm.observed_joint()?;
            let truth = scm.counterfactual_prob(&target);
            let outcome = match (lower.evaluate(&joint), upper.evaluate(&joint)) {
                (Ok(lo), Ok(hi)) => Outcome::Checked {
                    contained: lo - VERIFY_TOL <= truth && truth <= hi + VERIFY_TOL,
                    ordered: lo <= hi + VERIFY_TOL,
                    slack: (truth - lo).min(hi - truth),
                },
                _ => Outcome::Skipped,
            };
            let report = check_distribution(constraints, &joint);
            let worst = report
                .violations(VERIFY_TOL)
                .first()
                .and_then(|c| c.slack())
                .map_or(0.0, |s| -s);
            Ok((i, outcome, report.violations(VERIFY_TOL).len(), worst))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut r = VerifyReport {
        samples: n,
        ..Default::default()
    };
    let mut slack_sum = 0.0;
    for (i, outcome, violations, worst) in per_sample {
        r.constraint_checks += constraints.len();
        r.constraint_violations += violations;
        r.worst_violation = r.worst_violation.max(worst);
        match outcome {
            Outcome::Skipped => r.skipped += 1,
            Outcome::Checked {
                contained,
                ordered,
                slack,
            } => {
                r.contained += usize::from(contained);
                r.ordered += usize::from(ordered);
                if !(contained && ordered) {
                    r.failures.push(i);
                }
                slack_sum += slack;
                r.min_slack = Some(r.min_slack.map_or(slack, |m: f64| m.min(slack)));
            }
        }
    }
    if r.evaluated() > 0 {
        r.mean_slack = Some(slack_sum / r.evaluated() as f64);
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    /// Pearson correlation between instrument and treatment.
    pub corr: f64,
    /// Width of the ACE bounds.
    pub width: f64,
    pub excludes_zero: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub rows: usize,
    pub skipped: usize,
    pub mean_width: Option<f64>,
    pub sd_width: Option<f64>,
    pub excludes_zero_fraction: Option<f64>,
    /// Spearman correlation between `|corr|` and width.
    pub spearman: Option<f64>,
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    x.covariance(y) / (x.std_dev() * y.std_dev())
}

/// Rank correlation with tied values given their average rank.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = Data::new(x.to_vec()).ranks(RankTieBreaker::Average);
    let ry = Data::new(y.to_vec()).ranks(RankTieBreaker::Average);
    pearson(&rx, &ry)
}

fn correlation(joint: &DiscreteDistribution, x: VarId, y: VarId) -> f64 {
    let (mut ex, mut ey, mut exx, mut eyy, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (idx, &p) in joint.cells().iter().enumerate() {
        let v = joint.cell_values(idx);
        let (a, b) = (v[x.0] as f64, v[y.0] as f64);
        ex += p * a;
        ey += p * b;
        exx += p * a * a;
        eyy += p * b * b;
        exy += p * a * b;
    }
    (exy - ex * ey) / ((exx - ex * ex) * (eyy - ey * ey)).sqrt()
}

/// Draws `n` SCMs and records the instrument-treatment correlation and the
/// width of the ACE bounds in each. Rows are in sample order.
pub fn bound_width_study(
    g: &Admg,
    treatment: VarId,
    outcome: VarId,
    instrument: VarId,
    n: usize,
    cfg: &ScmSamplerConfig,
) -> Result<(Vec<StudyRow>, StudySummary)> {
    cfg.validate()?;
    let (lower, upper) = ace_bounds(g, treatment, outcome, &[instrument])?;
    let drawn = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let scm = sample_scm(g, cfg, &mut sample_rng(cfg.seed, i))?;
            let joint = scm.observed_joint()?;
            Ok(match (lower.evaluate(&joint), upper.evaluate(&joint)) {
                (Ok(lo), Ok(hi)) => Some(StudyRow {
                    corr: correlation(&joint, instrument, treatment),
                    width: hi - lo,
                    excludes_zero: lo > 0.0 || hi < 0.0,
                }),
                _ => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped = drawn.iter().filter(|r| r.is_none()).count();
    let rows: Vec<StudyRow> = drawn.into_iter().flatten().collect();
    let widths: Vec<f64> = rows.iter().map(|r| r.width).collect();
    let abs_corr: Vec<f64> = rows.iter().map(|r| r.corr.abs()).collect();
    let m = rows.len();
    let summary = StudySummary {
        rows: m,
        skipped,
        mean_width: (m > 0).then(|| widths.iter().mean()),
        sd_width: (m > 1).then(|| widths.iter().std_dev()),
        excludes_zero_fraction: (m > 0)
            .then(|| rows.iter().filter(|r| r.excludes_zero).count() as f64 / m as f64),
        spearman: (m > 2).then(|| spearman(&abs_corr, &widths)),
    };
    Ok((rows, summary))
}

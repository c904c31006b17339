//! Exact comparison of per-article citation distributions.
//!
//! Two journals with a 2:1 ratio of mean citations can still produce a
//! lower-mean article that is cited at least as often as a higher-mean one
//! most of the time, because both distributions carry most of their mass at
//! zero. [`prob_at_least`] computes that probability exactly.

use std::collections::BTreeMap;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, YearRange};
use crate::rational::{ratio_u64, Rational};

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("distribution has no articles")]
    Empty,
    #[error("histogram bucket {value} has zero articles")]
    ZeroBucket { value: u64 },
    #[error("journal `{journal}` has no substantive articles published in {years}")]
    NoArticles { journal: String, years: YearRange },
    #[error("need at least two distinct positive counts for a log-normal fit, found {0}")]
    DegenerateFit(usize),
    #[error("log-normal fit did not converge: {0}")]
    FitFailed(String),
    #[error("article totals too large for exact arithmetic")]
    Overflow,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub journal_id: String,
    pub publication_years: YearRange,
    pub citing_years: YearRange,
}

/// Histogram of per-article citation counts: count value -> articles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    histogram: BTreeMap<u64, u64>,
    article_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl EmpiricalDistribution {
    pub fn from_histogram(histogram: BTreeMap<u64, u64>) -> Result<Self, CompareError> {
        if let Some((&value, _)) = histogram.iter().find(|(_, &n)| n == 0) {
            return Err(CompareError::ZeroBucket { value });
        }
        let article_total = histogram
            .values()
            .try_fold(0u64, |acc, &n| acc.checked_add(n))
            .ok_or(CompareError::Overflow)?;
        if article_total == 0 {
            return Err(CompareError::Empty);
        }
        Ok(Self {
            histogram,
            article_total,
            provenance: None,
        })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self, CompareError> {
        let mut histogram = BTreeMap::new();
        for &c in counts {
            *histogram.entry(c).or_insert(0) += 1;
        }
        Self::from_histogram(histogram)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn histogram(&self) -> &BTreeMap<u64, u64> {
        &self.histogram
    }

    pub fn article_total(&self) -> u64 {
        self.article_total
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn zero_fraction(&self) -> Rational {
        let zeros = self.histogram.get(&0).copied().unwrap_or(0);
        ratio_u64(zeros, self.article_total).expect("article_total > 0")
    }
}

/// Per-article citation counts of `journal_id`'s substantive articles
/// published in `publication_years`, counting citations made in
/// `citing_years`.
pub fn journal_distribution(
    corpus: &Corpus,
    journal_id: &str,
    publication_years: YearRange,
    citing_years: YearRange,
) -> Result<EmpiricalDistribution, CompareError> {
    let counts: Vec<u64> = corpus
        .journal_papers(journal_id)?
        .iter()
        .filter(|&&i| {
            let p = corpus.paper(i);
            p.kind.is_substantive() && publication_years.contains(p.year)
        })
        .map(|&i| corpus.citation_count(i, Some(citing_years)))
        .collect();
    if counts.is_empty() {
        return Err(CompareError::NoArticles {
            journal: journal_id.to_string(),
            years: publication_years,
        });
    }
    Ok(
        EmpiricalDistribution::from_counts(&counts)?.with_provenance(Provenance {
            journal_id: journal_id.to_string(),
            publication_years,
            citing_years,
        }),
    )
}

pub fn mean(dist: &EmpiricalDistribution) -> Result<Rational, CompareError> {
    let mut total: u128 = 0;
    for (&v, &n) in &dist.histogram {
        total += u128::from(v) * u128::from(n);
    }
    let total = u64::try_from(total).map_err(|_| CompareError::Overflow)?;
    ratio_u64(total, dist.article_total).ok_or(CompareError::Overflow)
}

/// Probabilities for independent uniform draws `X_a` from `a` and `X_b`
/// from `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// `P(X_a > X_b)`
    pub p_greater: Rational,
    /// `P(X_a = X_b)`
    pub p_equal: Rational,
    /// `P(X_a >= X_b)`
    pub p_at_least: Rational,
    pub mean_a: Rational,
    pub mean_b: Rational,
}

impl ComparisonResult {
    /// `mean_b / mean_a`, `None` when `mean_a` is zero.
    pub fn mean_ratio(&self) -> Option<Rational> {
        (self.mean_a != Rational::from_integer(0)).then(|| self.mean_b / self.mean_a)
    }
}

/// Exact `P(X_a > X_b)`, `P(X_a = X_b)` and `P(X_a >= X_b)`.
///
/// Walks both histograms in increasing value order keeping a running count
/// of `b`'s articles strictly below the current value, so the cost is linear
/// in the number of distinct values.
pub fn prob_at_least(
    a: &EmpiricalDistribution,
    b: &EmpiricalDistribution,
) -> Result<ComparisonResult, CompareError> {
    let mut greater: u128 = 0;
    let mut equal: u128 = 0;
    let mut b_iter = b.histogram.iter().peekable();
    let mut b_below: u128 = 0;
    for (&value, &n_a) in &a.histogram {
        while let Some((&bv, &n_b)) = b_iter.peek() {
            if bv >= value {
                break;
            }
            b_below += u128::from(n_b);
            b_iter.next();
        }
        let n_a = u128::from(n_a);
        greater += n_a * b_below;
        if let Some(&n_b) = b.histogram.get(&value) {
            equal += n_a * u128::from(n_b);
        }
    }
    let pairs = u128::from(a.article_total) * u128::from(b.article_total);
    let frac = |num: u128| -> Result<Rational, CompareError> {
        let num = i64::try_from(num).map_err(|_| CompareError::Overflow)?;
        let den = i64::try_from(pairs).map_err(|_| CompareError::Overflow)?;
        Ok(Rational::new(num, den))
    };
    Ok(ComparisonResult {
        p_greater: frac(greater)?,
        p_equal: frac(equal)?,
        p_at_least: frac(greater + equal)?,
        mean_a: mean(a)?,
        mean_b: mean(b)?,
    })
}

/// Log-normal fit of the positive counts, with zeros reported as a separate
/// mass. `mu` and `sigma` treat each count `k` as a rounded log-normal draw,
/// i.e. as the interval `[k - 1/2, k + 1/2)` truncated to `k >= 1`;
/// `log_mean` and `log_sd` are the plain moments of `ln(count)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub log_mean: f64,
    pub log_sd: f64,
    pub zero_fraction: f64,
    pub positive_articles: u64,
}

/// Upper tail of the standard normal.
fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `P(lo <= Z < hi)` for a standard normal `Z`, accurate in either tail.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        upper_tail(lo) - upper_tail(hi)
    } else {
        upper_tail(-hi) - upper_tail(-lo)
    }
}

struct RoundedLogNormal<'a> {
    positive: &'a [(u64, f64)],
}

impl CostFunction for RoundedLogNormal<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    /// Negative log-likelihood at `(mu, ln sigma)`.
    fn cost(&self, p: &Self::Param) -> Result<f64, argmin::core::Error> {
        let (mu, sigma) = (p[0], p[1].exp());
        let z = |x: f64| (x.ln() - mu) / sigma;
        let kept = upper_tail(z(0.5));
        let mut nll = 0.0;
        for &(k, n) in self.positive {
            let k = k as f64;
            let mass = normal_mass(z(k - 0.5), z(k + 0.5)) / kept;
            nll -= n * mass.max(f64::MIN_POSITIVE).ln();
        }
        Ok(nll)
    }
}

/// Maximum-likelihood log-normal fit over the positive counts.
pub fn lognormal_fit(dist: &EmpiricalDistribution) -> Result<LogNormalFit, CompareError> {
    let positive: Vec<(u64, f64)> = dist
        .histogram
        .iter()
        .filter(|(&v, _)| v > 0)
        .map(|(&v, &n)| (v, n as f64))
        .collect();
    if positive.len() < 2 {
        return Err(CompareError::DegenerateFit(positive.len()));
    }
    let n: f64 = positive.iter().map(|(_, w)| w).sum();
    let log_mean = positive
        .iter()
        .map(|&(v, w)| (v as f64).ln() * w)
        .sum::<f64>()
        / n;
    let log_var = positive
        .iter()
        .map(|&(v, w)| w * ((v as f64).ln() - log_mean).powi(2))
        .sum::<f64>()
        / n;
    let log_sd = log_var.sqrt();

    let start = vec![log_mean, log_sd.max(0.05).ln()];
    let simplex = vec![
        start.clone(),
        vec![start[0] + 0.2, start[1]],
        vec![start[0], start[1] + 0.2],
    ];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-10)
        .map_err(|e| CompareError::FitFailed(e.to_string()))?;
    let result = Executor::new(
        RoundedLogNormal {
            positive: &positive,
        },
        solver,
    )
    .configure(|state| state.max_iters(2000))
    .run()
    .map_err(|e| CompareError::FitFailed(e.to_string()))?;
    let best = result
        .state()
        .get_best_param()
        .ok_or_else(|| CompareError::FitFailed("no parameters".into()))?;
    Ok(LogNormalFit {
        mu: best[0],
        sigma: best[1].exp(),
        log_mean,
        log_sd,
        zero_fraction: crate::rational::to_f64(&dist.zero_fraction()),
        positive_articles: n as u64,
    })
}

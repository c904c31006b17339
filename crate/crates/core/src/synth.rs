//! Seeded synthetic citation corpora.
//!
//! Every paper gets a latent lifetime citation count `L`: zero with the
//! configured zero-inflation probability, otherwise
//! `round(quality * exp(N(mu, sigma)))`. Its realized citations are
//! `Poisson(L)`; each citation lands at age `1 + Geometric(1 - 2^(-1/h))`
//! for half-life `h`, so the expected citations at age `a` are
//! `L * (1 - q) * q^(a - 1)` with `q = 2^(-1/h)`. A citation is attached to
//! a random paper published in the citing year (from the same journal with
//! probability `same_journal_share`). Citations that would fall after the
//! last generated year are censored, so the corpus is closed: every
//! reference resolves.
//!
//! All randomness derives from `SynthConfig::seed` through independent
//! ChaCha streams, one per generation phase.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, PaperKind, PaperRecord, YearRange, MAX_YEAR, MIN_YEAR};
use crate::journal::{if_variability, IfQuery, MetricError};
use crate::Rational;

const MATH_PRESET: &str = include_str!("../presets/math.json");

const STREAM_LAYOUT: u64 = 1;
const STREAM_LATENT: u64 = 2;
const STREAM_CITATIONS: u64 = 3;
const CITER_RETRIES: usize = 8;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("configuration produces no papers")]
    NoPapers,
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JournalSpec {
    pub id: String,
    pub articles_per_year: u32,
    pub first_year: i32,
    pub last_year: i32,
    /// Multiplier on every latent rate of the journal's papers.
    #[serde(default = "one")]
    pub quality: f64,
}

fn one() -> f64 {
    1.0
}

/// Zero-inflated discretized log-normal latent rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentRates {
    pub mu: f64,
    pub sigma: f64,
    pub zero_inflation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuthorModel {
    /// Size of the global author pool.
    pub pool: u32,
    /// Authors per paper are uniform on `1..=max_per_paper`.
    pub max_per_paper: u32,
}

impl Default for AuthorModel {
    fn default() -> Self {
        Self {
            pool: 1000,
            max_per_paper: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub journals: Vec<JournalSpec>,
    pub latent: LatentRates,
    /// Years after which half of a paper's remaining citations have arrived.
    pub half_life: f64,
    #[serde(default)]
    pub same_journal_share: f64,
    /// Share of items generated as editorials (non-substantive).
    #[serde(default)]
    pub non_substantive_share: f64,
    #[serde(default)]
    pub authors: AuthorModel,
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let config: SynthConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Calibration for a mathematics-like field: ten-year citation
    /// half-life, about 30% of papers never cited, journals of 20 to 250
    /// articles per year over 1940-2008.
    pub fn math_preset() -> Self {
        Self::from_json(MATH_PRESET).expect("shipped preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "math" => Some(Self::math_preset()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if !(self.half_life.is_finite() && self.half_life > 0.0) {
            return bad(format!(
                "half_life must be positive, got {}",
                self.half_life
            ));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.latent.zero_inflation) {
            return bad("zero_inflation must lie in [0, 1]".into());
        }
        if !(self.latent.sigma.is_finite()
            && self.latent.sigma >= 0.0
            && self.latent.mu.is_finite())
        {
            return bad("latent mu must be finite and sigma nonnegative".into());
        }
        if !unit(self.same_journal_share) || !unit(self.non_substantive_share) {
            return bad("shares must lie in [0, 1]".into());
        }
        if self.authors.pool == 0 || self.authors.max_per_paper == 0 {
            return bad("author pool and max_per_paper must be at least 1".into());
        }
        for j in &self.journals {
            if j.first_year > j.last_year || j.first_year < MIN_YEAR || j.last_year > MAX_YEAR {
                return bad(format!("journal `{}` has invalid years", j.id));
            }
            if !(j.quality.is_finite() && j.quality > 0.0) {
                return bad(format!("journal `{}` quality must be positive", j.id));
            }
        }
        let mut ids: Vec<&str> = self.journals.iter().map(|j| j.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("journal ids must be unique".into());
        }
        Ok(())
    }

    /// Years covered by at least one journal.
    pub fn year_span(&self) -> Option<YearRange> {
        let first = self.journals.iter().map(|j| j.first_year).min()?;
        let last = self.journals.iter().map(|j| j.last_year).max()?;
        Some(YearRange { first, last })
    }

    fn total_papers(&self) -> u64 {
        self.journals
            .iter()
            .map(|j| u64::from(j.articles_per_year) * (j.last_year - j.first_year + 1) as u64)
            .sum()
    }

    /// Per-year survival ratio `q = 2^(-1/h)` of the age distribution.
    pub fn decay_ratio(&self) -> f64 {
        0.5f64.powf(1.0 / self.half_life)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

fn stream(seed: u64, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase);
    rng
}

/// One draw of `round(exp(N(mu, sigma)))`.
pub fn sample_discretized_lognormal<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> u64 {
    sample_scaled(rng, mu, sigma, 1.0)
}

/// One draw of `round(scale * exp(N(mu, sigma)))`.
fn sample_scaled<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64, scale: f64) -> u64 {
    let raw = if sigma == 0.0 {
        mu.exp()
    } else {
        LogNormal::new(mu, sigma)
            .expect("sigma checked nonnegative")
            .sample(rng)
    };
    (scale * raw).round() as u64
}

/// Draws discretized log-normal counts until `positives` of them are
/// positive; zeros produced by rounding are kept in the output.
pub fn discretized_lognormal_counts(seed: u64, mu: f64, sigma: f64, positives: usize) -> Vec<u64> {
    let mut rng = stream(seed, STREAM_LATENT);
    let mut out = Vec::with_capacity(positives + positives / 8);
    let mut found = 0;
    while found < positives {
        let c = sample_discretized_lognormal(&mut rng, mu, sigma);
        found += usize::from(c > 0);
        out.push(c);
    }
    out
}

/// `E[round(scale * exp(N(mu, sigma)))]`, summed as `Σ_k P(value ≥ k - 1/2)`.
pub fn expected_discretized_lognormal(mu: f64, sigma: f64, scale: f64) -> f64 {
    if sigma == 0.0 {
        return (scale * mu.exp()).round();
    }
    let mut total = 0.0;
    let median = scale * mu.exp();
    for k in 1u64.. {
        let threshold = ((k as f64 - 0.5) / scale).ln();
        let tail = 0.5 * erfc((threshold - mu) / (sigma * std::f64::consts::SQRT_2));
        total += tail;
        if tail < 1e-13 && k as f64 > median {
            break;
        }
    }
    total
}

/// Expected citations received by a paper of a journal with `quality` at
/// ages `ages.first..=ages.last` (ages ≥ 1), ignoring censoring.
pub fn expected_citations(config: &SynthConfig, quality: f64, ages: (u32, u32)) -> f64 {
    let lat = config.latent;
    let lifetime =
        (1.0 - lat.zero_inflation) * expected_discretized_lognormal(lat.mu, lat.sigma, quality);
    let q = config.decay_ratio();
    let (lo, hi) = ages;
    // Σ_{a=lo}^{hi} (1-q) q^(a-1) = q^(lo-1) - q^hi
    lifetime * (q.powi(lo as i32 - 1) - q.powi(hi as i32))
}

/// Generates the synthetic records. Deterministic in `config`.
pub fn generate_records(config: &SynthConfig) -> Result<Vec<PaperRecord>, SynthError> {
    config.validate()?;
    if config.total_papers() == 0 {
        return Err(SynthError::NoPapers);
    }
    let span = config.year_span().ok_or(SynthError::NoPapers)?;

    let mut layout_rng = stream(config.seed, STREAM_LAYOUT);
    let mut latent_rng = stream(config.seed, STREAM_LATENT);
    let mut cite_rng = stream(config.seed, STREAM_CITATIONS);

    struct Draft {
        journal: usize,
        year: i32,
        latent: u64,
    }
    let mut records = Vec::new();
    let mut drafts = Vec::new();
    let mut by_year: Vec<Vec<usize>> = vec![Vec::new(); span.len()];
    let mut by_journal_year: HashMap<(usize, i32), Vec<usize>> = HashMap::new();
    let lat = config.latent;
    let pool = config.authors.pool as usize;
    let max_authors = (config.authors.max_per_paper as usize).min(pool);

    for year in span.years() {
        for (j, spec) in config.journals.iter().enumerate() {
            if !(spec.first_year..=spec.last_year).contains(&year) {
                continue;
            }
            for i in 0..spec.articles_per_year {
                let idx = records.len();
                let kind = if layout_rng.random::<f64>() < config.non_substantive_share {
                    PaperKind::Editorial
                } else {
                    PaperKind::ResearchArticle
                };
                let n_authors = layout_rng.random_range(1..=max_authors);
                let mut authors: Vec<usize> =
                    index::sample(&mut layout_rng, pool, n_authors).into_vec();
                authors.sort_unstable();
                let latent = if latent_rng.random::<f64>() < lat.zero_inflation {
                    0
                } else {
                    sample_scaled(&mut latent_rng, lat.mu, lat.sigma, spec.quality)
                };
                records.push(PaperRecord {
                    id: format!("{}-{year}-{i:04}", spec.id),
                    journal_id: spec.id.clone(),
                    year,
                    kind,
                    author_ids: authors.iter().map(|a| format!("A{a:05}")).collect(),
                    reference_ids: Vec::new(),
                });
                drafts.push(Draft {
                    journal: j,
                    year,
                    latent,
                });
                by_year[(year - span.first) as usize].push(idx);
                by_journal_year.entry((j, year)).or_default().push(idx);
            }
        }
    }

    let age_dist = Geometric::new(1.0 - config.decay_ratio())
        .map_err(|e| SynthError::InvalidConfig(format!("half-life: {e}")))?;
    let mut references: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
    for (cited, draft) in drafts.iter().enumerate() {
        if draft.latent == 0 {
            continue;
        }
        let n = Poisson::new(draft.latent as f64)
            .expect("positive rate")
            .sample(&mut cite_rng) as u64;
        for _ in 0..n {
            let age = 1 + age_dist.sample(&mut cite_rng);
            let citing_year = i64::from(draft.year) + age as i64;
            if citing_year > i64::from(span.last) {
                continue;
            }
            let citing_year = citing_year as i32;
            let same_journal = config.same_journal_share > 0.0
                && cite_rng.random::<f64>() < config.same_journal_share;
            let candidates = match by_journal_year.get(&(draft.journal, citing_year)) {
                Some(list) if same_journal => list,
                _ => &by_year[(citing_year - span.first) as usize],
            };
            if candidates.is_empty() {
                continue;
            }
            for _ in 0..CITER_RETRIES {
                let citer = candidates[cite_rng.random_range(0..candidates.len())];
                if !references[citer].contains(&cited) {
                    references[citer].push(cited);
                    break;
                }
            }
        }
    }

    for (citer, mut refs) in references.into_iter().enumerate() {
        refs.sort_unstable();
        records[citer].reference_ids = refs.into_iter().map(|i| records[i].id.clone()).collect();
    }
    Ok(records)
}

pub fn generate(config: &SynthConfig) -> Result<Corpus, SynthError> {
    Ok(Corpus::from_records(generate_records(config)?)?)
}

/// Seed of replicate run `run`, a SplitMix64 mix of the master seed and the
/// run index.
pub fn run_seed(master: u64, run: u64) -> u64 {
    let mut z = master ^ run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSpec {
    pub window: u32,
    /// Defaults to the last ten years of the config's span for which the
    /// window fits inside the span.
    pub census_years: Option<YearRange>,
}

impl Default for ReplicateSpec {
    fn default() -> Self {
        Self {
            window: 2,
            census_years: None,
        }
    }
}

impl ReplicateSpec {
    fn resolve(&self, config: &SynthConfig) -> Result<YearRange, SynthError> {
        if let Some(r) = self.census_years {
            return Ok(r);
        }
        let span = config.year_span().ok_or(SynthError::NoPapers)?;
        let earliest = span.first + self.window as i32;
        let first = (span.last - 9).max(earliest);
        YearRange::new(first, span.last).map_err(|_| {
            SynthError::InvalidConfig(format!(
                "span {span} too short for a {}-year window",
                self.window
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JournalRunSummary {
    pub journal_id: String,
    pub articles_per_year: u32,
    pub impact_factors: Vec<(i32, Option<Rational>)>,
    pub mean_relative_change: Option<f64>,
    pub pairs_used: usize,
    pub skipped_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub census_years: YearRange,
    pub journals: Vec<JournalRunSummary>,
}

fn summarize_run(
    config: &SynthConfig,
    run: usize,
    census_years: YearRange,
    window: u32,
) -> Result<RunSummary, SynthError> {
    let seed = run_seed(config.seed, run as u64);
    let corpus = generate(&config.with_seed(seed))?;
    let mut journals = Vec::with_capacity(config.journals.len());
    for spec in &config.journals {
        let base = IfQuery::new(spec.id.clone(), census_years.first, window);
        let summary = match if_variability(&corpus, &base, census_years) {
            Ok(v) => JournalRunSummary {
                journal_id: spec.id.clone(),
                articles_per_year: spec.articles_per_year,
                impact_factors: v.series,
                mean_relative_change: v.mean_relative_change,
                pairs_used: v.pairs_used,
                skipped_pairs: v.skipped_zero_base + v.skipped_undefined,
            },
            Err(MetricError::InsufficientSeries { .. }) => {
                let impact_factors = census_years
                    .years()
                    .map(|y| {
                        crate::journal::impact_factor(&corpus, &base.at_census(y))
                            .map(|r| (y, r.value))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                JournalRunSummary {
                    journal_id: spec.id.clone(),
                    articles_per_year: spec.articles_per_year,
                    impact_factors,
                    mean_relative_change: None,
                    pairs_used: 0,
                    skipped_pairs: census_years.len().saturating_sub(1),
                }
            }
            Err(e) => return Err(e.into()),
        };
        journals.push(summary);
    }
    Ok(RunSummary {
        run,
        seed,
        census_years,
        journals,
    })
}

/// Generates `runs` independent corpora from `config` (run `i` uses
/// [`run_seed`]`(config.seed, i)`) and summarizes impact factors and their
/// volatility for every configured journal. Runs execute in parallel; the
/// output order and content do not depend on scheduling.
pub fn replicate(
    config: &SynthConfig,
    runs: usize,
    spec: &ReplicateSpec,
) -> Result<Vec<RunSummary>, SynthError> {
    if runs == 0 {
        return Err(SynthError::NoRuns);
    }
    config.validate()?;
    let census_years = spec.resolve(config)?;
    (0..runs)
        .into_par_iter()
        .map(|run| summarize_run(config, run, census_years, spec.window))
        .collect()
}

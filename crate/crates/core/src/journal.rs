//! Journal-level statistics: generalized impact factors, citation-age
//! profiles, window coverage, year-over-year volatility and same-journal
//! citation share.
//!
//! "Journal items" for impact-factor windows never include books; citations
//! *from* papers of any kind are counted.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, PaperKind, YearRange, MIN_YEAR};
use crate::rational::{ratio_u64, to_f64, Rational};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("window must be at least 1 year and start no earlier than {MIN_YEAR} (census {census_year}, window {window})")]
    InvalidWindow { census_year: i32, window: u32 },
    #[error(
        "journal `{journal}` has fewer than two consecutive defined impact factors in {years}"
    )]
    InsufficientSeries { journal: String, years: YearRange },
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
}

/// Which window items form the impact-factor denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorPolicy {
    /// Research articles and reviews only.
    #[default]
    SubstantiveOnly,
    /// Every non-book item.
    AllItems,
}

impl DenominatorPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            DenominatorPolicy::SubstantiveOnly => "substantive-only",
            DenominatorPolicy::AllItems => "all-items",
        }
    }

    fn counts(self, kind: PaperKind) -> bool {
        match self {
            DenominatorPolicy::SubstantiveOnly => kind.is_substantive(),
            DenominatorPolicy::AllItems => kind != PaperKind::Book,
        }
    }
}

impl FromStr for DenominatorPolicy {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "substantive" | "substantive-only" => Ok(Self::SubstantiveOnly),
            "all" | "all-items" => Ok(Self::AllItems),
            other => Err(MetricError::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfCitationPolicy {
    #[default]
    Include,
    ExcludeSameJournal,
}

impl SelfCitationPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            SelfCitationPolicy::Include => "include",
            SelfCitationPolicy::ExcludeSameJournal => "exclude-same-journal",
        }
    }
}

impl FromStr for SelfCitationPolicy {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "include" => Ok(Self::Include),
            "exclude" | "exclude-same-journal" => Ok(Self::ExcludeSameJournal),
            other => Err(MetricError::UnknownPolicy(other.to_string())),
        }
    }
}

/// A generalized impact-factor query: citations made in `census_year` to
/// the journal's items published in the `window` preceding years.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfQuery {
    pub journal_id: String,
    pub census_year: i32,
    pub window: u32,
    pub denominator: DenominatorPolicy,
    pub self_citations: SelfCitationPolicy,
}

impl IfQuery {
    pub fn new(journal_id: impl Into<String>, census_year: i32, window: u32) -> Self {
        Self {
            journal_id: journal_id.into(),
            census_year,
            window,
            denominator: DenominatorPolicy::default(),
            self_citations: SelfCitationPolicy::default(),
        }
    }

    pub fn with_denominator(mut self, policy: DenominatorPolicy) -> Self {
        self.denominator = policy;
        self
    }

    pub fn with_self_citations(mut self, policy: SelfCitationPolicy) -> Self {
        self.self_citations = policy;
        self
    }

    pub fn at_census(&self, census_year: i32) -> Self {
        Self {
            census_year,
            ..self.clone()
        }
    }

    /// Target (publication) years `census_year - window ..= census_year - 1`.
    pub fn window_years(&self) -> Result<YearRange, MetricError> {
        window_years(self.census_year, self.window)
    }

    /// Provenance string recorded next to every result.
    pub fn policies_label(&self) -> String {
        format!(
            "denominator={};self-cites={};citing-kinds=all",
            self.denominator.as_str(),
            self.self_citations.as_str()
        )
    }
}

fn window_years(census_year: i32, window: u32) -> Result<YearRange, MetricError> {
    let start = i64::from(census_year) - i64::from(window);
    if window == 0 || start < i64::from(MIN_YEAR) {
        return Err(MetricError::InvalidWindow {
            census_year,
            window,
        });
    }
    Ok(YearRange {
        first: start as i32,
        last: census_year - 1,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfResult {
    pub numerator: u64,
    pub denominator: u64,
    /// `None` when the window holds no citable items.
    pub value: Option<Rational>,
    pub query: IfQuery,
}

impl IfResult {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

pub fn impact_factor(corpus: &Corpus, query: &IfQuery) -> Result<IfResult, MetricError> {
    let window = query.window_years()?;
    let papers = corpus.journal_papers(&query.journal_id)?;
    let mut numerator = 0u64;
    let mut denominator = 0u64;
    for &idx in papers {
        let p = corpus.paper(idx);
        if p.kind == PaperKind::Book || !window.contains(p.year) {
            continue;
        }
        if query.denominator.counts(p.kind) {
            denominator += 1;
        }
        numerator += corpus
            .incoming(idx)
            .filter(|e| e.citing_year == query.census_year)
            .filter(|e| match query.self_citations {
                SelfCitationPolicy::Include => true,
                SelfCitationPolicy::ExcludeSameJournal => {
                    corpus.paper(e.citing).journal_id != query.journal_id
                }
            })
            .count() as u64;
    }
    Ok(IfResult {
        numerator,
        denominator,
        value: ratio_u64(numerator, denominator),
        query: query.clone(),
    })
}

/// Citations made in the census years, bucketed by age in years.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeProfile {
    pub census_years: Option<YearRange>,
    pub journal_id: Option<String>,
    pub counts: BTreeMap<i32, u64>,
    pub warning: Option<String>,
}

impl AgeProfile {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Shares of ages `1..=10`, `11..=20`, ... for the first `decades`
    /// decades, relative to all counted citations.
    pub fn decade_shares(&self, decades: usize) -> Vec<Option<Rational>> {
        let total = self.total();
        (0..decades as i32)
            .map(|d| {
                let in_decade = self
                    .counts
                    .range(d * 10 + 1..=d * 10 + 10)
                    .map(|(_, c)| *c)
                    .sum();
                ratio_u64(in_decade, total)
            })
            .collect()
    }
}

/// Age profile of the citations made in `census_year`. When `journal_id` is
/// given only citations to that journal's papers are counted.
pub fn citation_age_profile(
    corpus: &Corpus,
    journal_id: Option<&str>,
    census_year: i32,
) -> Result<AgeProfile, MetricError> {
    citation_age_profile_over(corpus, journal_id, YearRange::single(census_year))
}

/// Same as [`citation_age_profile`], pooled over several census years.
pub fn citation_age_profile_over(
    corpus: &Corpus,
    journal_id: Option<&str>,
    census_years: YearRange,
) -> Result<AgeProfile, MetricError> {
    if let Some(j) = journal_id {
        corpus.journal_papers(j)?;
    }
    let mut counts = BTreeMap::new();
    let mut citing_papers = 0usize;
    for p in corpus.papers() {
        if census_years.contains(p.year) {
            citing_papers += 1;
        }
    }
    for e in corpus.edges() {
        if !census_years.contains(e.citing_year) {
            continue;
        }
        if journal_id.is_some_and(|j| corpus.paper(e.cited).journal_id != j) {
            continue;
        }
        *counts.entry(e.age()).or_insert(0) += 1;
    }
    let warning =
        (citing_papers == 0).then(|| format!("no citing papers published in {census_years}"));
    Ok(AgeProfile {
        census_years: Some(census_years),
        journal_id: journal_id.map(str::to_string),
        counts,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub inside_window: u64,
    pub total: u64,
    /// `None` when nothing was received.
    pub fraction: Option<Rational>,
}

/// Fraction of census-year citations received by `journal_id` (all journals
/// when `None`) whose cited paper was published in the `window` years before
/// the citing year.
pub fn window_coverage(
    corpus: &Corpus,
    journal_id: Option<&str>,
    census_years: YearRange,
    window: u32,
) -> Result<Coverage, MetricError> {
    if let Some(j) = journal_id {
        corpus.journal_papers(j)?;
    }
    window_years(census_years.first, window)?;
    let mut inside = 0u64;
    let mut total = 0u64;
    for e in corpus.edges() {
        if !census_years.contains(e.citing_year) {
            continue;
        }
        if journal_id.is_some_and(|j| corpus.paper(e.cited).journal_id != j) {
            continue;
        }
        total += 1;
        let age = e.age();
        if age >= 1 && age <= window as i32 {
            inside += 1;
        }
    }
    Ok(Coverage {
        inside_window: inside,
        total,
        fraction: ratio_u64(inside, total),
    })
}

/// Year-over-year impact-factor volatility over a range of census years.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variability {
    pub journal_id: String,
    pub series: Vec<(i32, Option<Rational>)>,
    /// Mean of `|IF(y+1) - IF(y)| / IF(y)` over usable pairs. Floating
    /// point: the sum of many unrelated fractions does not stay in `i64`.
    pub mean_relative_change: Option<f64>,
    pub pairs_used: usize,
    pub skipped_zero_base: usize,
    pub skipped_undefined: usize,
}

/// Computes impact factors for every census year in `census_years` using
/// `base` as a template (journal, window, policies) and summarizes the
/// consecutive relative changes. Pairs whose base year has IF = 0 are
/// skipped and counted; pairs touching an undefined IF likewise.
pub fn if_variability(
    corpus: &Corpus,
    base: &IfQuery,
    census_years: YearRange,
) -> Result<Variability, MetricError> {
    let series = census_years
        .years()
        .map(|y| impact_factor(corpus, &base.at_census(y)).map(|r| (y, r.value)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut sum = 0.0;
    let mut pairs_used = 0;
    let mut skipped_zero_base = 0;
    let mut skipped_undefined = 0;
    for pair in series.windows(2) {
        match (pair[0].1, pair[1].1) {
            (Some(prev), Some(next)) => {
                if prev == Rational::from_integer(0) {
                    skipped_zero_base += 1;
                } else {
                    sum += to_f64(&((next - prev) / prev)).abs();
                    pairs_used += 1;
                }
            }
            _ => skipped_undefined += 1,
        }
    }
    if pairs_used + skipped_zero_base == 0 {
        return Err(MetricError::InsufficientSeries {
            journal: base.journal_id.clone(),
            years: census_years,
        });
    }
    Ok(Variability {
        journal_id: base.journal_id.clone(),
        series,
        mean_relative_change: (pairs_used > 0).then(|| sum / pairs_used as f64),
        pairs_used,
        skipped_zero_base,
        skipped_undefined,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfCitation {
    pub same_journal: u64,
    pub total: u64,
    pub fraction: Option<Rational>,
}

/// Share of the citations received by `journal_id` that come from the same
/// journal. With `window = Some(w)` only citations to papers published in
/// the `w` years before the citing paper are considered.
pub fn self_citation_fraction(
    corpus: &Corpus,
    journal_id: &str,
    window: Option<u32>,
) -> Result<SelfCitation, MetricError> {
    let papers = corpus.journal_papers(journal_id)?;
    let mut same = 0u64;
    let mut total = 0u64;
    for &idx in papers {
        for e in corpus.incoming(idx) {
            if let Some(w) = window {
                let age = e.age();
                if age < 1 || age > w as i32 {
                    continue;
                }
            }
            total += 1;
            if corpus.paper(e.citing).journal_id == journal_id {
                same += 1;
            }
        }
    }
    Ok(SelfCitation {
        same_journal: same,
        total,
        fraction: ratio_u64(same, total),
    })
}

impl fmt::Display for IfResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Some(v) => write!(f, "{}/{} = {v}", self.numerator, self.denominator),
            None => write!(f, "{}/0 = NA", self.numerator),
        }
    }
}

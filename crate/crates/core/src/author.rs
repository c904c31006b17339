//! Per-author citation records and single-number indices.
//!
//! The indices (h, g, m) summarize a citation record; [`citation_histogram`]
//! keeps the distribution they throw away.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, YearRange};
use crate::rational::{ratio_u64, Rational};

#[derive(Debug, Error)]
pub enum AuthorError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(
        "evaluation year {evaluation_year} precedes first publication in {first_publication_year}"
    )]
    EvaluationBeforeFirstPaper {
        first_publication_year: i32,
        evaluation_year: i32,
    },
    #[error("bucket edges must be strictly increasing and start at 0")]
    InvalidBuckets,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub paper_ids: Vec<String>,
    /// Citation count of each paper, aligned with `paper_ids`.
    pub counts: Vec<u64>,
    pub first_publication_year: i32,
}

impl AuthorRecord {
    pub fn total_citations(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Builds the citation record of `author_id`. Every listed author gets full
/// credit for a multi-author paper.
pub fn author_record(
    corpus: &Corpus,
    author_id: &str,
    citing_years: Option<YearRange>,
) -> Result<AuthorRecord, AuthorError> {
    let papers = corpus.author_papers(author_id)?;
    let first_publication_year = papers
        .iter()
        .map(|&i| corpus.paper(i).year)
        .min()
        .ok_or_else(|| CorpusError::UnknownAuthor(author_id.to_string()))?;
    Ok(AuthorRecord {
        author_id: author_id.to_string(),
        paper_ids: papers.iter().map(|&i| corpus.paper(i).id.clone()).collect(),
        counts: papers
            .iter()
            .map(|&i| corpus.citation_count(i, citing_years))
            .collect(),
        first_publication_year,
    })
}

fn sorted_desc(counts: &[u64]) -> Vec<u64> {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
}

/// Largest `n` such that `n` papers each have at least `n` citations.
pub fn h_index(counts: &[u64]) -> u64 {
    sorted_desc(counts)
        .iter()
        .enumerate()
        .take_while(|&(i, &c)| c > i as u64)
        .count() as u64
}

/// Largest `n` (at most the number of papers) whose `n` most cited papers
/// total at least `n²` citations.
pub fn g_index(counts: &[u64]) -> u64 {
    let mut cumulative: u128 = 0;
    let mut g = 0;
    for (i, c) in sorted_desc(counts).into_iter().enumerate() {
        let n = i as u128 + 1;
        cumulative += u128::from(c);
        if cumulative >= n * n {
            g = n as u64;
        }
    }
    g
}

/// `h` divided by the years elapsed since the first paper, with the divisor
/// clamped to at least 1.
pub fn m_index(
    h: u64,
    first_publication_year: i32,
    evaluation_year: i32,
) -> Result<Rational, AuthorError> {
    if evaluation_year < first_publication_year {
        return Err(AuthorError::EvaluationBeforeFirstPaper {
            first_publication_year,
            evaluation_year,
        });
    }
    let years = (evaluation_year - first_publication_year).max(1) as u64;
    Ok(ratio_u64(h, years).expect("years is at least 1"))
}

/// How per-paper counts are grouped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BucketSpec {
    /// One bucket per distinct observed count.
    #[default]
    Exact,
    /// Buckets `[e_i, e_{i+1})`, the last one open-ended. Must start at 0.
    Edges(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub low: u64,
    /// Inclusive upper bound; `None` for an open-ended bucket.
    pub high: Option<u64>,
    pub papers: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationHistogram {
    pub buckets: Vec<Bucket>,
    pub papers: u64,
    pub h: u64,
    /// Papers with at least `h` citations.
    pub tail_papers: u64,
    /// `tail_papers / papers`; `None` for an empty record.
    pub tail_fraction: Option<Rational>,
}

pub fn citation_histogram(
    counts: &[u64],
    spec: &BucketSpec,
) -> Result<CitationHistogram, AuthorError> {
    let buckets = match spec {
        BucketSpec::Exact => {
            let mut by_value: BTreeMap<u64, u64> = BTreeMap::new();
            for &c in counts {
                *by_value.entry(c).or_insert(0) += 1;
            }
            by_value
                .into_iter()
                .map(|(v, n)| Bucket {
                    low: v,
                    high: Some(v),
                    papers: n,
                })
                .collect()
        }
        BucketSpec::Edges(edges) => {
            if edges.first() != Some(&0) || edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(AuthorError::InvalidBuckets);
            }
            let mut buckets: Vec<Bucket> = edges
                .iter()
                .enumerate()
                .map(|(i, &low)| Bucket {
                    low,
                    high: edges.get(i + 1).map(|next| next - 1),
                    papers: 0,
                })
                .collect();
            for &c in counts {
                let slot = edges.partition_point(|&e| e <= c) - 1;
                buckets[slot].papers += 1;
            }
            buckets
        }
    };
    let h = h_index(counts);
    let tail_papers = counts.iter().filter(|&&c| c >= h).count() as u64;
    let papers = counts.len() as u64;
    Ok(CitationHistogram {
        buckets,
        papers,
        h,
        tail_papers,
        tail_fraction: ratio_u64(tail_papers, papers),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PaperKind, PaperRecord};
    use proptest::prelude::*;

    fn brute_h(counts: &[u64]) -> u64 {
        (0..=counts.len() as u64)
            .filter(|&n| counts.iter().filter(|&&c| c >= n).count() as u64 >= n)
            .max()
            .unwrap_or(0)
    }

    fn brute_g(counts: &[u64]) -> u64 {
        let sorted = sorted_desc(counts);
        (0..=counts.len())
            .filter(|&n| sorted[..n].iter().sum::<u64>() >= (n * n) as u64)
            .max()
            .unwrap_or(0) as u64
    }

    #[test]
    fn hirsch_counterexamples() {
        let ten_by_ten = vec![10u64; 10];
        assert_eq!(h_index(&ten_by_ten), 10);
        let mut plus_ninety = ten_by_ten.clone();
        plus_ninety.extend(std::iter::repeat_n(9, 90));
        assert_eq!(h_index(&plus_ninety), 10);
        let hundreds = vec![100u64; 10];
        assert_eq!(h_index(&hundreds), 10);
        assert_eq!(g_index(&hundreds), 10);
        assert_eq!(h_index(&[]), 0);
        assert_eq!(g_index(&[]), 0);
    }

    #[test]
    fn g_exceeds_h_on_skewed_record() {
        let counts = [10, 5, 3, 1];
        assert_eq!(h_index(&counts), 3);
        assert_eq!(g_index(&counts), 4);
    }

    #[test]
    fn m_index_cases() {
        assert_eq!(m_index(0, 2000, 2010).unwrap(), Rational::from_integer(0));
        assert_eq!(m_index(15, 1990, 2005).unwrap(), Rational::from_integer(1));
        assert_eq!(m_index(3, 2020, 2020).unwrap(), Rational::from_integer(3));
        assert!(matches!(
            m_index(3, 2020, 2019),
            Err(AuthorError::EvaluationBeforeFirstPaper { .. })
        ));
    }

    #[test]
    fn histogram_zero_counts_single_bucket() {
        let h = citation_histogram(&[0, 0, 0], &BucketSpec::Exact).unwrap();
        assert_eq!(
            h.buckets,
            vec![Bucket {
                low: 0,
                high: Some(0),
                papers: 3
            }]
        );
        assert_eq!(h.h, 0);
        assert_eq!(h.tail_fraction, Some(Rational::from_integer(1)));
        assert_eq!(
            citation_histogram(&[], &BucketSpec::Exact)
                .unwrap()
                .tail_fraction,
            None
        );
    }

    #[test]
    fn histogram_edges_by_enumeration() {
        // 0 | 1-4 | 5-9 | 10+
        let counts = [0, 3, 4, 7, 12];
        let h = citation_histogram(&counts, &BucketSpec::Edges(vec![0, 1, 5, 10])).unwrap();
        let papers: Vec<u64> = h.buckets.iter().map(|b| b.papers).collect();
        assert_eq!(papers, vec![1, 2, 1, 1]);
        assert_eq!(h.buckets[1].high, Some(4));
        assert_eq!(h.buckets[3].high, None);
        assert_eq!(h.h, 3);
        assert_eq!(h.tail_papers, 4);
        assert!(citation_histogram(&counts, &BucketSpec::Edges(vec![1, 5])).is_err());
        assert!(citation_histogram(&counts, &BucketSpec::Edges(vec![0, 5, 5])).is_err());
    }

    fn rec(id: &str, year: i32, authors: &[&str], refs: &[&str]) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            journal_id: "J".into(),
            year,
            kind: PaperKind::ResearchArticle,
            author_ids: authors.iter().map(|s| s.to_string()).collect(),
            reference_ids: refs.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn author_records() {
        let c = Corpus::from_records(vec![
            rec("p1", 2000, &["ann"], &[]),
            rec("p2", 2002, &["ann", "bob"], &[]),
            rec("c1", 2003, &["carl"], &["p1"]),
            rec("c2", 2004, &["carl"], &["p1"]),
            rec("c3", 2005, &["carl"], &["p1"]),
            rec("solo", 2010, &["dee"], &[]),
        ])
        .unwrap();
        let ann = author_record(&c, "ann", None).unwrap();
        assert_eq!(ann.counts, vec![3, 0]);
        assert_eq!(ann.first_publication_year, 2000);
        let dee = author_record(&c, "dee", None).unwrap();
        assert_eq!(dee.counts, vec![0]);
        assert_eq!(dee.first_publication_year, 2010);
        let windowed = author_record(&c, "ann", Some(YearRange::new(2020, 2030).unwrap())).unwrap();
        assert_eq!(windowed.counts, vec![0, 0]);
        assert!(matches!(
            author_record(&c, "zed", None),
            Err(AuthorError::Corpus(CorpusError::UnknownAuthor(_)))
        ));
    }

    proptest! {
        #[test]
        fn h_and_g_match_brute_force(counts in prop::collection::vec(0u64..60, 0..40)) {
            let h = h_index(&counts);
            let g = g_index(&counts);
            prop_assert_eq!(h, brute_h(&counts));
            prop_assert_eq!(g, brute_g(&counts));
            prop_assert!(g >= h);
            let max = counts.iter().copied().max().unwrap_or(0);
            prop_assert!(h <= (counts.len() as u64).min(max));
        }

        #[test]
        fn indices_ignore_order(mut counts in prop::collection::vec(0u64..30, 0..25)) {
            let (h, g) = (h_index(&counts), g_index(&counts));
            counts.reverse();
            prop_assert_eq!(h_index(&counts), h);
            prop_assert_eq!(g_index(&counts), g);
        }
    }
}

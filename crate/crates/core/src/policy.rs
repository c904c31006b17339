//! Institutional scoring rules that substitute a journal's impact factor for
//! the citations of the paper itself, and a rank-divergence diagnostic
//! against actual citation counts.
//!
//! * `core-points`: 15 points per publication in a core-list journal, 10 per
//!   publication in any other indexed journal.
//! * `tier-points`: five papers scored 3/2/1 by the impact-factor tercile of
//!   their journal; unindexed journals score 0.
//! * `weighted-if`: sum over papers of `impact factor / number of authors`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::journal::{impact_factor, IfQuery, MetricError};
use crate::rational::{ratio_u64, Rational};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("need at least 3 journals with a defined impact factor, found {0}")]
    TooFewJournals(usize),
    #[error("tier scoring takes exactly 5 papers, got {0}")]
    WrongPaperCount(usize),
    #[error("journal `{0}` has no defined impact factor")]
    UndefinedImpactFactor(String),
    #[error("paper `{0}` lists no authors")]
    NoAuthors(String),
    #[error("rankings cover different subjects")]
    SubjectMismatch,
    #[error("need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Top,
    Middle,
    Bottom,
    Unindexed,
}

impl Tier {
    pub fn points(self) -> i64 {
        match self {
            Tier::Top => 3,
            Tier::Middle => 2,
            Tier::Bottom => 1,
            Tier::Unindexed => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Top => "top",
            Tier::Middle => "middle",
            Tier::Bottom => "bottom",
            Tier::Unindexed => "unindexed",
        }
    }
}

pub const TIE_RULE: &str = "equal impact factors ordered by journal id, ascending";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierTable {
    pub census_year: i32,
    pub window: u32,
    pub tie_rule: String,
    pub tiers: BTreeMap<String, Tier>,
    /// Indexed journals from highest to lowest impact factor.
    pub ranking: Vec<(String, Rational)>,
}

impl TierTable {
    pub fn tier(&self, journal_id: &str) -> Tier {
        self.tiers
            .get(journal_id)
            .copied()
            .unwrap_or(Tier::Unindexed)
    }
}

/// Ranks every journal by its default impact factor and splits the ranked
/// list into thirds whose sizes differ by at most one (larger tiers first).
pub fn build_tiers(
    corpus: &Corpus,
    census_year: i32,
    window: u32,
) -> Result<TierTable, PolicyError> {
    let mut tiers = BTreeMap::new();
    let mut ranking = Vec::new();
    for j in corpus.journal_ids() {
        match impact_factor(corpus, &IfQuery::new(j, census_year, window))?.value {
            Some(v) => ranking.push((j.to_string(), v)),
            None => {
                tiers.insert(j.to_string(), Tier::Unindexed);
            }
        }
    }
    if ranking.len() < 3 {
        return Err(PolicyError::TooFewJournals(ranking.len()));
    }
    ranking.sort_by(|(ja, a), (jb, b)| b.cmp(a).then_with(|| ja.cmp(jb)));
    let n = ranking.len();
    let (k, r) = (n / 3, n % 3);
    let top = k + usize::from(r >= 1);
    let middle = k + usize::from(r >= 2);
    for (i, (j, _)) in ranking.iter().enumerate() {
        let tier = if i < top {
            Tier::Top
        } else if i < top + middle {
            Tier::Middle
        } else {
            Tier::Bottom
        };
        tiers.insert(j.clone(), tier);
    }
    Ok(TierTable {
        census_year,
        window,
        tie_rule: TIE_RULE.to_string(),
        tiers,
        ranking,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyRule {
    CorePoints,
    TierPoints,
    WeightedIf,
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyRule::CorePoints => "core-points",
            PolicyRule::TierPoints => "tier-points",
            PolicyRule::WeightedIf => "weighted-if",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreComponent {
    pub paper_id: String,
    pub journal_id: String,
    pub points: Rational,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyScore {
    pub subject: String,
    pub rule: PolicyRule,
    pub score: Rational,
    pub breakdown: Vec<ScoreComponent>,
}

impl PolicyScore {
    fn from_components(subject: &str, rule: PolicyRule, breakdown: Vec<ScoreComponent>) -> Self {
        Self {
            subject: subject.to_string(),
            rule,
            score: breakdown.iter().map(|c| c.points).sum(),
            breakdown,
        }
    }
}

fn lookup<'a, S: AsRef<str>>(
    corpus: &'a Corpus,
    paper_id: &S,
) -> Result<&'a crate::corpus::PaperRecord, PolicyError> {
    let id = paper_id.as_ref();
    let idx = corpus
        .index_of(id)
        .ok_or_else(|| CorpusError::UnknownPaper(id.to_string()))?;
    Ok(corpus.paper(idx))
}

/// 15 points per core-list publication, 10 per other indexed publication.
/// A journal on both lists counts as core.
pub fn score_example1<S: AsRef<str>>(
    corpus: &Corpus,
    subject: &str,
    paper_ids: &[S],
    core: &BTreeSet<String>,
    indexed: &BTreeSet<String>,
) -> Result<PolicyScore, PolicyError> {
    let breakdown = paper_ids
        .iter()
        .map(|id| {
            let p = lookup(corpus, id)?;
            let (points, note) = if core.contains(&p.journal_id) {
                (15, "core list")
            } else if indexed.contains(&p.journal_id) {
                (10, "indexed")
            } else {
                (0, "not indexed")
            };
            Ok(ScoreComponent {
                paper_id: p.id.clone(),
                journal_id: p.journal_id.clone(),
                points: Rational::from_integer(points),
                note: note.to_string(),
            })
        })
        .collect::<Result<Vec<_>, PolicyError>>()?;
    Ok(PolicyScore::from_components(
        subject,
        PolicyRule::CorePoints,
        breakdown,
    ))
}

/// 3/2/1 points per paper by journal tier; unindexed journals score 0.
pub fn score_example2<S: AsRef<str>>(
    corpus: &Corpus,
    subject: &str,
    paper_ids: &[S],
    tiers: &TierTable,
) -> Result<PolicyScore, PolicyError> {
    if paper_ids.len() != 5 {
        return Err(PolicyError::WrongPaperCount(paper_ids.len()));
    }
    let breakdown = paper_ids
        .iter()
        .map(|id| {
            let p = lookup(corpus, id)?;
            let tier = tiers.tier(&p.journal_id);
            Ok(ScoreComponent {
                paper_id: p.id.clone(),
                journal_id: p.journal_id.clone(),
                points: Rational::from_integer(tier.points()),
                note: tier.as_str().to_string(),
            })
        })
        .collect::<Result<Vec<_>, PolicyError>>()?;
    Ok(PolicyScore::from_components(
        subject,
        PolicyRule::TierPoints,
        breakdown,
    ))
}

/// Sum of `IF(journal) / authors` over the papers. `impact_factors` maps a
/// journal to its impact factor; missing or undefined entries are errors.
pub fn score_example3<S: AsRef<str>>(
    corpus: &Corpus,
    subject: &str,
    paper_ids: &[S],
    impact_factors: &BTreeMap<String, Option<Rational>>,
) -> Result<PolicyScore, PolicyError> {
    let breakdown = paper_ids
        .iter()
        .map(|id| {
            let p = lookup(corpus, id)?;
            let authors = p.author_ids.len() as u64;
            let share =
                ratio_u64(1, authors).ok_or_else(|| PolicyError::NoAuthors(p.id.clone()))?;
            let jif = impact_factors
                .get(&p.journal_id)
                .copied()
                .flatten()
                .ok_or_else(|| PolicyError::UndefinedImpactFactor(p.journal_id.clone()))?;
            Ok(ScoreComponent {
                paper_id: p.id.clone(),
                journal_id: p.journal_id.clone(),
                points: share * jif,
                note: format!("IF {jif} / {authors} author(s)"),
            })
        })
        .collect::<Result<Vec<_>, PolicyError>>()?;
    Ok(PolicyScore::from_components(
        subject,
        PolicyRule::WeightedIf,
        breakdown,
    ))
}

/// Rank agreement between two scorings of the same subjects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub subjects: usize,
    pub concordant: u64,
    pub discordant: u64,
    pub ties_first: u64,
    pub ties_second: u64,
    pub ties_both: u64,
    /// Kendall tau-b; `None` when either scoring is constant.
    pub tau_b: Option<f64>,
    /// Discordant pairs over all pairs.
    pub discordant_fraction: Rational,
}

fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    sorted
        .chunk_by(|a, b| a == b)
        .map(|g| (g.len() as u64) * (g.len() as u64 - 1) / 2)
        .sum()
}

/// Merge sort that counts strict inversions (`left > right`).
fn count_inversions<T: Ord + Clone>(v: &mut [T], buf: &mut Vec<T>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j].clone());
            j += 1;
        } else {
            buf.push(v[i].clone());
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.clone_from_slice(buf);
    swaps
}

/// Kendall tau-b between two scorings (higher is better in both) in
/// `O(n log n)`: sort by the first score, then count the inversions of the
/// second.
pub fn divergence<A: Ord + Clone, B: Ord + Clone>(
    first: &BTreeMap<String, A>,
    second: &BTreeMap<String, B>,
) -> Result<Divergence, PolicyError> {
    if first.len() != second.len() || first.keys().zip(second.keys()).any(|(a, b)| a != b) {
        return Err(PolicyError::SubjectMismatch);
    }
    let n = first.len();
    if n < 2 {
        return Err(PolicyError::TooFewSubjects(n));
    }
    let mut pairs: Vec<(A, B)> = first
        .values()
        .cloned()
        .zip(second.values().cloned())
        .collect();
    pairs.sort_by(|(a1, b1), (a2, b2)| match a1.cmp(a2) {
        Ordering::Equal => b1.cmp(b2),
        o => o,
    });
    let total = (n as u64) * (n as u64 - 1) / 2;
    let xs: Vec<&A> = pairs.iter().map(|(a, _)| a).collect();
    let ties_first = tied_pairs(&xs);
    let ties_both = tied_pairs(&pairs.iter().collect::<Vec<_>>());
    let mut ys: Vec<B> = pairs.into_iter().map(|(_, b)| b).collect();
    let discordant = count_inversions(&mut ys, &mut Vec::with_capacity(n));
    let ties_second = tied_pairs(&ys);
    let concordant = total + ties_both - ties_first - ties_second - discordant;
    let denom = ((total - ties_first) as f64) * ((total - ties_second) as f64);
    let tau_b = (denom > 0.0).then(|| (concordant as f64 - discordant as f64) / denom.sqrt());
    Ok(Divergence {
        subjects: n,
        concordant,
        discordant,
        ties_first,
        ties_second,
        ties_both,
        tau_b,
        discordant_fraction: ratio_u64(discordant, total).expect("n >= 2"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PaperKind, PaperRecord};
    use proptest::prelude::*;

    fn rec(id: &str, journal: &str, year: i32, authors: usize, refs: &[&str]) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            journal_id: journal.into(),
            year,
            kind: PaperKind::ResearchArticle,
            author_ids: (0..authors).map(|i| format!("a{i}")).collect(),
            reference_ids: refs.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Journals with one 2010 article each, cited `cites[j]` times in 2011.
    fn corpus_with_ifs(cites: &[(&str, usize)]) -> Corpus {
        let mut recs = Vec::new();
        let mut citers = 0;
        for (j, c) in cites {
            let target = format!("{j}-t");
            recs.push(rec(&target, j, 2010, 1, &[]));
            for _ in 0..*c {
                recs.push(rec(&format!("c{citers}"), "CITER", 2011, 1, &[&target]));
                citers += 1;
            }
        }
        Corpus::from_records(recs).unwrap()
    }

    #[test]
    fn three_distinct_journals_one_per_tier() {
        let c = corpus_with_ifs(&[("X", 1), ("Y", 3), ("Z", 2)]);
        let t = build_tiers(&c, 2011, 1).unwrap();
        assert_eq!(t.tier("Y"), Tier::Top);
        assert_eq!(t.tier("Z"), Tier::Middle);
        assert_eq!(t.tier("X"), Tier::Bottom);
        // CITER has no items in 2010: undefined impact factor.
        assert_eq!(t.tiers["CITER"], Tier::Unindexed);
        assert_eq!(t.tier("never-seen"), Tier::Unindexed);
    }

    #[test]
    fn boundary_ties_break_by_journal_id() {
        // IFs: A=5, B=3, C=3, D=3, E=1, F=0. Sorted: A, B, C, D, E, F.
        let c = corpus_with_ifs(&[("D", 3), ("C", 3), ("B", 3), ("A", 5), ("F", 0), ("E", 1)]);
        let t = build_tiers(&c, 2011, 1).unwrap();
        let got: Vec<(&str, Tier)> = ["A", "B", "C", "D", "E", "F"]
            .iter()
            .map(|j| (*j, t.tier(j)))
            .collect();
        use Tier::*;
        assert_eq!(
            got,
            vec![
                ("A", Top),
                ("B", Top),
                ("C", Middle),
                ("D", Middle),
                ("E", Bottom),
                ("F", Bottom)
            ]
        );
    }

    #[test]
    fn too_few_defined_journals() {
        let c = corpus_with_ifs(&[("X", 1), ("Y", 3)]);
        assert!(matches!(
            build_tiers(&c, 2011, 1),
            Err(PolicyError::TooFewJournals(2))
        ));
    }

    #[test]
    fn example1_points() {
        let c = corpus_with_ifs(&[("CORE", 0), ("IDX", 0), ("OTHER", 0)]);
        let core: BTreeSet<String> = ["CORE".to_string()].into();
        let indexed: BTreeSet<String> = ["IDX".to_string()].into();
        let none: [&str; 0] = [];
        assert_eq!(
            score_example1(&c, "s", &none, &core, &indexed)
                .unwrap()
                .score,
            Rational::from_integer(0)
        );
        let s = score_example1(&c, "s", &["CORE-t", "IDX-t", "IDX-t"], &core, &indexed).unwrap();
        assert_eq!(s.score, Rational::from_integer(35));
        assert_eq!(s.breakdown.len(), 3);
        let s = score_example1(&c, "s", &["OTHER-t"], &core, &indexed).unwrap();
        assert_eq!(s.score, Rational::from_integer(0));
        assert!(score_example1(&c, "s", &["missing"], &core, &indexed).is_err());
    }

    fn manual_tiers(entries: &[(&str, Tier)]) -> TierTable {
        TierTable {
            census_year: 2011,
            window: 1,
            tie_rule: TIE_RULE.into(),
            tiers: entries.iter().map(|(j, t)| (j.to_string(), *t)).collect(),
            ranking: Vec::new(),
        }
    }

    #[test]
    fn example2_points() {
        let c = corpus_with_ifs(&[("T", 0), ("M", 0), ("B", 0), ("U", 0)]);
        let tiers = manual_tiers(&[("T", Tier::Top), ("M", Tier::Middle), ("B", Tier::Bottom)]);
        let s = score_example2(&c, "s", &["T-t", "M-t", "B-t", "T-t", "M-t"], &tiers).unwrap();
        assert_eq!(s.score, Rational::from_integer(11));
        let s = score_example2(&c, "s", &["B-t"; 5], &tiers).unwrap();
        assert_eq!(s.score, Rational::from_integer(5));
        let s = score_example2(&c, "s", &["T-t", "T-t", "T-t", "T-t", "U-t"], &tiers).unwrap();
        assert_eq!(s.score, Rational::from_integer(12));
        assert_eq!(s.breakdown[4].points, Rational::from_integer(0));
        assert_eq!(s.breakdown[4].note, "unindexed");
        assert!(matches!(
            score_example2(&c, "s", &["T-t"; 4], &tiers),
            Err(PolicyError::WrongPaperCount(4))
        ));
    }

    #[test]
    fn example3_points() {
        let c = Corpus::from_records(vec![
            rec("solo", "J2", 2010, 1, &[]),
            rec("trio", "J3", 2010, 3, &[]),
            rec("anon", "J3", 2010, 0, &[]),
            rec("lost", "JX", 2010, 1, &[]),
        ])
        .unwrap();
        let ifs: BTreeMap<String, Option<Rational>> = [
            ("J2".to_string(), Some(Rational::from_integer(2))),
            ("J3".to_string(), Some(Rational::from_integer(3))),
            ("JX".to_string(), None),
        ]
        .into();
        assert_eq!(
            score_example3(&c, "s", &["solo"], &ifs).unwrap().score,
            Rational::from_integer(2)
        );
        assert_eq!(
            score_example3(&c, "s", &["trio"], &ifs).unwrap().score,
            Rational::from_integer(1)
        );
        let both = score_example3(&c, "s", &["solo", "trio"], &ifs).unwrap();
        assert_eq!(both.score, Rational::from_integer(3));
        let reordered = score_example3(&c, "s", &["trio", "solo"], &ifs).unwrap();
        assert_eq!(reordered.score, both.score);
        let doubled = score_example3(&c, "s", &["solo", "trio", "solo", "trio"], &ifs).unwrap();
        assert_eq!(doubled.score, both.score * Rational::from_integer(2));
        match score_example3(&c, "s", &["lost"], &ifs) {
            Err(PolicyError::UndefinedImpactFactor(j)) => assert_eq!(j, "JX"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            score_example3(&c, "s", &["anon"], &ifs),
            Err(PolicyError::NoAuthors(_))
        ));
    }

    fn scores(values: &[i64]) -> BTreeMap<String, i64> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("s{i:02}"), *v))
            .collect()
    }

    /// All-pairs tau-b.
    fn tau_b_oracle(x: &[i64], y: &[i64]) -> (Option<f64>, u64) {
        let n = x.len();
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let sx = (x[i] - x[j]).signum();
                let sy = (y[i] - y[j]).signum();
                match (sx, sy) {
                    (0, 0) => {}
                    (0, _) => tx += 1,
                    (_, 0) => ty += 1,
                    _ if sx == sy => c += 1,
                    _ => d += 1,
                }
            }
        }
        let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
        ((denom > 0.0).then(|| (c - d) as f64 / denom), d as u64)
    }

    #[test]
    fn divergence_extremes_and_four_subjects() {
        let a = scores(&[1, 2, 3, 4]);
        let same = divergence(&a, &a).unwrap();
        assert_eq!(same.tau_b, Some(1.0));
        assert_eq!(same.discordant_fraction, Rational::from_integer(0));
        let rev = divergence(&a, &scores(&[4, 3, 2, 1])).unwrap();
        assert_eq!(rev.tau_b, Some(-1.0));
        assert_eq!(rev.discordant_fraction, Rational::from_integer(1));

        let x = [3, 1, 4, 1];
        let y = [2, 7, 1, 8];
        let d = divergence(&scores(&x), &scores(&y)).unwrap();
        let (tau, disc) = tau_b_oracle(&x, &y);
        assert_eq!(d.discordant, disc);
        assert!((d.tau_b.unwrap() - tau.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn divergence_errors() {
        let a = scores(&[1, 2]);
        let mut b = a.clone();
        b.insert("other".into(), 1);
        assert!(matches!(
            divergence(&a, &b),
            Err(PolicyError::SubjectMismatch)
        ));
        let one = scores(&[1]);
        assert!(matches!(
            divergence(&one, &one),
            Err(PolicyError::TooFewSubjects(1))
        ));
        let flat = divergence(&scores(&[1, 1, 1]), &scores(&[1, 2, 3])).unwrap();
        assert_eq!(flat.tau_b, None);
    }

    proptest! {
        #[test]
        fn divergence_matches_pair_oracle(
            pairs in prop::collection::vec((0i64..5, 0i64..5), 2..40)
        ) {
            let x: Vec<i64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<i64> = pairs.iter().map(|p| p.1).collect();
            let d = divergence(&scores(&x), &scores(&y)).unwrap();
            let (tau, disc) = tau_b_oracle(&x, &y);
            prop_assert_eq!(d.discordant, disc);
            match (d.tau_b, tau) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn self_divergence_is_one(values in prop::collection::vec(0i64..1000, 2..30)) {
            let a = scores(&values);
            let d = divergence(&a, &a).unwrap();
            if let Some(t) = d.tau_b {
                prop_assert!((t - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(d.discordant, 0);
        }
    }
}

//! Publication records, ingestion and the derived citation graph.
//!
//! A [`Corpus`] is built once from a sequence of [`PaperRecord`]s and is
//! immutable afterwards. References that point outside the corpus never
//! become edges but are tallied in
//! [`Corpus::unresolved_reference_count`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const MIN_YEAR: i32 = 1800;
pub const MAX_YEAR: i32 = 2100;

const RECORD_FIELDS: [&str; 6] = ["id", "journal", "year", "kind", "authors", "references"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: duplicate paper id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unknown paper id `{0}`")]
    UnknownPaper(String),
    #[error("unknown journal `{0}`")]
    UnknownJournal(String),
    #[error("unknown author `{0}`")]
    UnknownAuthor(String),
    #[error("invalid year range: {0}")]
    InvalidYearRange(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Publication kind. Research articles and reviews are the substantive,
/// "citable" items of an impact-factor denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaperKind {
    ResearchArticle,
    Review,
    Letter,
    Editorial,
    Book,
}

impl PaperKind {
    pub fn is_substantive(self) -> bool {
        matches!(self, PaperKind::ResearchArticle | PaperKind::Review)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PaperKind::ResearchArticle => "research-article",
            PaperKind::Review => "review",
            PaperKind::Letter => "letter",
            PaperKind::Editorial => "editorial",
            PaperKind::Book => "book",
        }
    }
}

/// One published item as it appears on a line of the input file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    #[serde(rename = "journal")]
    pub journal_id: String,
    pub year: i32,
    pub kind: PaperKind,
    #[serde(rename = "authors")]
    pub author_ids: Vec<String>,
    #[serde(rename = "references")]
    pub reference_ids: Vec<String>,
}

impl PaperRecord {
    fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty paper id".into());
        }
        if !(MIN_YEAR..=MAX_YEAR).contains(&self.year) {
            return Err(format!(
                "paper `{}`: year {} outside [{MIN_YEAR}, {MAX_YEAR}]",
                self.id, self.year
            ));
        }
        let mut seen = HashSet::with_capacity(self.reference_ids.len());
        for r in &self.reference_ids {
            if *r == self.id {
                return Err(format!("paper `{}` references itself", self.id));
            }
            if !seen.insert(r.as_str()) {
                return Err(format!("paper `{}` lists reference `{r}` twice", self.id));
            }
        }
        Ok(())
    }
}

/// Inclusive range of years.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    pub fn new(first: i32, last: i32) -> Result<Self, CorpusError> {
        if first > last {
            return Err(CorpusError::InvalidYearRange(format!("{first}:{last}")));
        }
        Ok(Self { first, last })
    }

    pub fn single(year: i32) -> Self {
        Self {
            first: year,
            last: year,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.first == self.last {
            write!(f, "{}", self.first)
        } else {
            write!(f, "{}:{}", self.first, self.last)
        }
    }
}

impl FromStr for YearRange {
    type Err = CorpusError;

    /// Accepts `2005` or `2000:2004`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::InvalidYearRange(s.to_string());
        match s.split_once(':') {
            Some((a, b)) => {
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                YearRange::new(a, b)
            }
            None => Ok(YearRange::single(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

/// A resolved reference. `citing` and `cited` index into [`Corpus::papers`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CitationEdge {
    pub citing: usize,
    pub cited: usize,
    pub citing_year: i32,
    pub cited_year: i32,
}

impl CitationEdge {
    /// Negative for in-press anomalies.
    pub fn age(&self) -> i32 {
        self.citing_year - self.cited_year
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Reject unknown record fields instead of warning about them.
    pub strict: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    by_id: HashMap<String, usize>,
    edges: Vec<CitationEdge>,
    cited_by: Vec<Vec<usize>>,
    journals: BTreeMap<String, Vec<usize>>,
    authors: BTreeMap<String, Vec<usize>>,
    unresolved_reference_count: usize,
    warnings: Vec<String>,
}

impl Corpus {
    /// Builds a corpus from already-parsed records. Record positions are
    /// reported as 1-based line numbers in errors.
    pub fn from_records(records: Vec<PaperRecord>) -> Result<Self, CorpusError> {
        Self::build(records, Vec::new())
    }

    fn build(papers: Vec<PaperRecord>, warnings: Vec<String>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(papers.len());
        let mut journals: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut authors: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, p) in papers.iter().enumerate() {
            p.check().map_err(|message| CorpusError::Malformed {
                line: idx + 1,
                message,
            })?;
            if by_id.insert(p.id.clone(), idx).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: p.id.clone(),
                    line: idx + 1,
                });
            }
            journals.entry(p.journal_id.clone()).or_default().push(idx);
            for a in &p.author_ids {
                let list = authors.entry(a.clone()).or_default();
                if list.last() != Some(&idx) {
                    list.push(idx);
                }
            }
        }

        let mut edges = Vec::new();
        let mut cited_by = vec![Vec::new(); papers.len()];
        let mut unresolved = 0;
        for (citing, p) in papers.iter().enumerate() {
            for r in &p.reference_ids {
                match by_id.get(r) {
                    Some(&cited) => {
                        cited_by[cited].push(edges.len());
                        edges.push(CitationEdge {
                            citing,
                            cited,
                            citing_year: p.year,
                            cited_year: papers[cited].year,
                        });
                    }
                    None => unresolved += 1,
                }
            }
        }

        Ok(Self {
            papers,
            by_id,
            edges,
            cited_by,
            journals,
            authors,
            unresolved_reference_count: unresolved,
            warnings,
        })
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, idx: usize) -> &PaperRecord {
        &self.papers[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn edges(&self) -> &[CitationEdge] {
        &self.edges
    }

    /// Edges whose cited endpoint is paper `idx`.
    pub fn incoming(&self, idx: usize) -> impl Iterator<Item = &CitationEdge> + '_ {
        self.cited_by[idx].iter().map(move |&e| &self.edges[e])
    }

    pub fn journal_ids(&self) -> impl Iterator<Item = &str> {
        self.journals.keys().map(String::as_str)
    }

    pub fn journal_papers(&self, journal_id: &str) -> Result<&[usize], CorpusError> {
        self.journals
            .get(journal_id)
            .map(Vec::as_slice)
            .ok_or_else(|| CorpusError::UnknownJournal(journal_id.to_string()))
    }

    pub fn author_ids(&self) -> impl Iterator<Item = &str> {
        self.authors.keys().map(String::as_str)
    }

    pub fn author_papers(&self, author_id: &str) -> Result<&[usize], CorpusError> {
        self.authors
            .get(author_id)
            .map(Vec::as_slice)
            .ok_or_else(|| CorpusError::UnknownAuthor(author_id.to_string()))
    }

    pub fn unresolved_reference_count(&self) -> usize {
        self.unresolved_reference_count
    }

    /// Non-fatal notes produced while loading (ignored unknown fields).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Publication years spanned by the corpus, `None` when empty.
    pub fn year_span(&self) -> Option<YearRange> {
        let first = self.papers.iter().map(|p| p.year).min()?;
        let last = self.papers.iter().map(|p| p.year).max()?;
        Some(YearRange { first, last })
    }

    /// Number of in-corpus citations received by paper `idx`, optionally
    /// restricted to citing years.
    pub fn citation_count(&self, idx: usize, citing_years: Option<YearRange>) -> u64 {
        self.incoming(idx)
            .filter(|e| citing_years.is_none_or(|w| w.contains(e.citing_year)))
            .count() as u64
    }

    pub fn citations_to(
        &self,
        paper_id: &str,
        citing_years: Option<YearRange>,
    ) -> Result<u64, CorpusError> {
        let idx = self
            .index_of(paper_id)
            .ok_or_else(|| CorpusError::UnknownPaper(paper_id.to_string()))?;
        Ok(self.citation_count(idx, citing_years))
    }

    pub fn validate(&self) -> ValidationReport {
        ValidationReport {
            papers: self.papers.len(),
            edges: self.edges.len(),
            unresolved_references: self.unresolved_reference_count,
            negative_age_edges: self.edges.iter().filter(|e| e.age() < 0).count(),
            papers_without_authors: self
                .papers
                .iter()
                .filter(|p| p.author_ids.is_empty())
                .count(),
        }
    }

    /// Writes the records back out as JSON lines, in load order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.papers {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Data-integrity counts. Produced by [`Corpus::validate`]; never fatal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub papers: usize,
    pub edges: usize,
    pub unresolved_references: usize,
    pub negative_age_edges: usize,
    pub papers_without_authors: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.unresolved_references == 0
            && self.negative_age_edges == 0
            && self.papers_without_authors == 0
    }
}

/// Parses a JSON-lines stream into a [`Corpus`]. Blank lines are skipped.
pub fn load_corpus<R: BufRead>(reader: R, options: LoadOptions) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut warnings = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::Malformed {
            line: line_no,
            message,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let Value::Object(mut map) = value else {
            return Err(malformed("record is not a JSON object".into()));
        };
        let unknown: Vec<String> = map
            .keys()
            .filter(|k| !RECORD_FIELDS.contains(&k.as_str()))
            .cloned()
            .collect();
        for key in unknown {
            if options.strict {
                return Err(malformed(format!("unknown field `{key}`")));
            }
            warnings.push(format!("line {line_no}: ignoring unknown field `{key}`"));
            map.remove(&key);
        }
        let record: PaperRecord =
            serde_json::from_value(Value::Object(map)).map_err(|e| malformed(e.to_string()))?;
        records.push(record);
        lines.push(line_no);
    }
    // Re-map record positions onto physical line numbers.
    Corpus::build(records, warnings).map_err(|e| match e {
        CorpusError::DuplicateId { id, line } => CorpusError::DuplicateId {
            id,
            line: lines[line - 1],
        },
        CorpusError::Malformed { line, message } => CorpusError::Malformed {
            line: lines[line - 1],
            message,
        },
        other => other,
    })
}

pub fn load_corpus_path(path: &Path, options: LoadOptions) -> Result<Corpus, CorpusError> {
    load_corpus(BufReader::new(File::open(path)?), options)
}

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::json;

use super::{
    data, read_corpus, read_corpus_path, read_input, report, CliError, Command, Outputs, RuleArg,
    SynthSource,
};
use crate::author::{author_record, citation_histogram, g_index, h_index, m_index, BucketSpec};
use crate::compare::{journal_distribution, prob_at_least, EmpiricalDistribution};
use crate::corpus::{Corpus, YearRange};
use crate::journal::{citation_age_profile, impact_factor, window_coverage, IfQuery, IfResult};
use crate::policy::{
    build_tiers, divergence, score_example1, score_example2, score_example3, PolicyScore,
};
use crate::rational::{render_fixed, Rational};
use crate::synth::{generate, replicate, ReplicateSpec, SynthConfig};

pub(crate) fn fixed(value: &Option<Rational>) -> String {
    value
        .as_ref()
        .map_or_else(|| "NA".to_string(), |v| render_fixed(v, 4))
}

pub(crate) fn exact(value: &Option<Rational>) -> String {
    value
        .as_ref()
        .map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub(crate) fn csv_table<I, R>(header: &[&str], rows: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(data)?;
    for row in rows {
        w.write_record(row).map_err(data)?;
    }
    let bytes = w.into_inner().map_err(data)?;
    String::from_utf8(bytes).map_err(data)
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value).map_err(data)? + "\n")
}

pub(crate) fn if_row(r: &IfResult) -> Vec<String> {
    vec![
        r.query.journal_id.clone(),
        r.query.census_year.to_string(),
        r.query.window.to_string(),
        r.numerator.to_string(),
        r.denominator.to_string(),
        fixed(&r.value),
        r.query.policies_label(),
    ]
}

pub(crate) const IF_HEADER: [&str; 7] = [
    "journal_id",
    "census_year",
    "window_w",
    "numerator",
    "denominator",
    "value",
    "policies",
];

pub(crate) fn dispatch(command: &Command) -> Result<Outputs, CliError> {
    match command {
        Command::Ingest { input, .. } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let rows = [
                ("papers", corpus.papers().len()),
                ("edges", corpus.edges().len()),
                ("journals", corpus.journal_ids().count()),
                ("authors", corpus.author_ids().count()),
                ("unresolved_references", corpus.unresolved_reference_count()),
                ("warnings", corpus.warnings().len()),
            ];
            let table = csv_table(
                &["metric", "value"],
                rows.iter().map(|(k, v)| [k.to_string(), v.to_string()]),
            )?;
            let mut out = Outputs::new("ingest.csv", table);
            out.file("corpus.jsonl", corpus.to_jsonl());
            out.notes = corpus.warnings().to_vec();
            out.inputs = inputs;
            Ok(out)
        }
        Command::Validate { input, .. } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let report = corpus.validate();
            let rows = [
                ("papers", report.papers.to_string()),
                ("edges", report.edges.to_string()),
                (
                    "unresolved_references",
                    report.unresolved_references.to_string(),
                ),
                ("negative_age_edges", report.negative_age_edges.to_string()),
                (
                    "papers_without_authors",
                    report.papers_without_authors.to_string(),
                ),
                ("clean", report.is_clean().to_string()),
            ];
            let table = csv_table(
                &["metric", "value"],
                rows.iter().map(|(k, v)| [*k, v.as_str()]),
            )?;
            let mut out = Outputs::new("validation.csv", table);
            out.file("validation.json", to_json(&report)?);
            out.notes = corpus.warnings().to_vec();
            out.inputs = inputs;
            Ok(out)
        }
        Command::JournalIf {
            input,
            census_year,
            policy,
            journal,
            ..
        } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let journals = selected_journals(&corpus, journal)?;
            let rows = journals
                .iter()
                .map(|j| {
                    let q = IfQuery::new(j.clone(), *census_year, policy.window)
                        .with_denominator(policy.denominator.into())
                        .with_self_citations(policy.self_cites.into());
                    impact_factor(&corpus, &q).map(|r| if_row(&r)).map_err(data)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = Outputs::new("journal_if.csv", csv_table(&IF_HEADER, rows)?);
            out.inputs = inputs;
            Ok(out)
        }
        Command::JournalProfile {
            input,
            census_year,
            journal,
            window,
            ..
        } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let profile =
                citation_age_profile(&corpus, journal.as_deref(), *census_year).map_err(data)?;
            let total = profile.total();
            let rows = profile.counts.iter().map(|(age, n)| {
                [
                    age.to_string(),
                    n.to_string(),
                    fixed(&crate::rational::ratio_u64(*n, total)),
                ]
            });
            let mut out = Outputs::new(
                "age_profile.csv",
                csv_table(&["age", "citations", "share"], rows)?,
            );
            let decades = profile.decade_shares(5);
            out.file(
                "decades.csv",
                csv_table(
                    &["decade", "ages", "share", "share_exact"],
                    decades.iter().enumerate().map(|(d, s)| {
                        [
                            (d + 1).to_string(),
                            format!("{}-{}", d * 10 + 1, d * 10 + 10),
                            fixed(s),
                            exact(s),
                        ]
                    }),
                )?,
            );
            let cov = window_coverage(
                &corpus,
                journal.as_deref(),
                YearRange::single(*census_year),
                *window,
            )
            .map_err(data)?;
            out.file(
                "coverage.csv",
                csv_table(
                    &["window_w", "inside_window", "total", "fraction"],
                    [[
                        window.to_string(),
                        cov.inside_window.to_string(),
                        cov.total.to_string(),
                        fixed(&cov.fraction),
                    ]],
                )?,
            );
            out.notes.extend(profile.warning.clone());
            out.inputs = inputs;
            Ok(out)
        }
        Command::AuthorIndex {
            input,
            census_year,
            citing_years,
            author,
            histograms,
            ..
        } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let evaluation_year = match census_year {
                Some(y) => *y,
                None => {
                    corpus
                        .year_span()
                        .ok_or_else(|| CliError::Data("empty corpus".into()))?
                        .last
                }
            };
            let authors: Vec<String> = if author.is_empty() {
                corpus.author_ids().map(str::to_string).collect()
            } else {
                author.clone()
            };
            let mut rows = Vec::new();
            let mut hist_json = serde_json::Map::new();
            for a in &authors {
                let rec = author_record(&corpus, a, *citing_years).map_err(data)?;
                let h = h_index(&rec.counts);
                let g = g_index(&rec.counts);
                let m = m_index(h, rec.first_publication_year, evaluation_year).map_err(data)?;
                let hist = citation_histogram(&rec.counts, &BucketSpec::Exact).map_err(data)?;
                rows.push([
                    a.clone(),
                    rec.counts.len().to_string(),
                    rec.total_citations().to_string(),
                    h.to_string(),
                    g.to_string(),
                    render_fixed(&m, 4),
                    fixed(&hist.tail_fraction),
                ]);
                if *histograms {
                    hist_json.insert(a.clone(), serde_json::to_value(&hist).map_err(data)?);
                }
            }
            let mut out = Outputs::new(
                "author_index.csv",
                csv_table(
                    &[
                        "author_id",
                        "papers",
                        "total_citations",
                        "h",
                        "g",
                        "m",
                        "tail_fraction",
                    ],
                    rows,
                )?,
            );
            if *histograms {
                out.file("histograms.json", to_json(&hist_json)?);
            }
            out.inputs = inputs;
            Ok(out)
        }
        Command::Compare {
            input,
            strict,
            journal_a,
            journal_b,
            pub_years,
            citing_years,
            hist_a,
            hist_b,
            json,
            ..
        } => {
            let mut inputs = Vec::new();
            let corpus = match input {
                Some(path) => Some(read_corpus_path(path, *strict, &mut inputs)?),
                None => None,
            };
            let side = |journal: &Option<String>,
                        hist: &Option<std::path::PathBuf>,
                        inputs: &mut Vec<_>|
             -> Result<EmpiricalDistribution, CliError> {
                match (journal, hist, &corpus) {
                    (Some(j), None, Some(c)) => {
                        let (p, w) = comparison_years(c, *pub_years, *citing_years)?;
                        journal_distribution(c, j, p, w).map_err(data)
                    }
                    (None, Some(path), _) => read_histogram(path, inputs),
                    _ => Err(CliError::Usage(
                        "each side needs either --journal-a/--journal-b with --input, or --hist-a/--hist-b"
                            .into(),
                    )),
                }
            };
            let a = side(journal_a, hist_a, &mut inputs)?;
            let b = side(journal_b, hist_b, &mut inputs)?;
            let result = prob_at_least(&a, &b).map_err(data)?;
            let table = comparison_table(&result)?;
            let full = json!({
                "p_greater": result.p_greater.to_string(),
                "p_equal": result.p_equal.to_string(),
                "p_at_least": result.p_at_least.to_string(),
                "mean_a": result.mean_a.to_string(),
                "mean_b": result.mean_b.to_string(),
                "mean_ratio": exact(&result.mean_ratio()),
                "a": a,
                "b": b,
            });
            let json_text = to_json(&full)?;
            let mut out = if *json {
                Outputs::new("comparison.json", json_text)
            } else {
                let mut o = Outputs::new("comparison.csv", table);
                o.file("comparison.json", json_text);
                o
            };
            out.inputs = inputs;
            Ok(out)
        }
        Command::Synth { source, .. } => {
            let mut inputs = Vec::new();
            let config = synth_config(source, &mut inputs)?;
            let corpus = generate(&config).map_err(data)?;
            let mut out = Outputs::new("corpus.jsonl", corpus.to_jsonl());
            out.file("synth_config.json", to_json(&config)?);
            out.seeds = vec![config.seed];
            out.inputs = inputs;
            Ok(out)
        }
        Command::Replicate {
            source,
            runs,
            window,
            census_years,
            ..
        } => {
            let mut inputs = Vec::new();
            let config = synth_config(source, &mut inputs)?;
            if *runs == 0 {
                return Err(CliError::Usage("--runs must be at least 1".into()));
            }
            let spec = ReplicateSpec {
                window: *window,
                census_years: *census_years,
            };
            let summaries = replicate(&config, *runs, &spec).map_err(data)?;
            let mut summary_rows = Vec::new();
            let mut if_rows = Vec::new();
            for s in &summaries {
                for j in &s.journals {
                    summary_rows.push([
                        s.run.to_string(),
                        s.seed.to_string(),
                        j.journal_id.clone(),
                        j.articles_per_year.to_string(),
                        j.mean_relative_change
                            .map_or_else(|| "NA".into(), |v| format!("{v:.4}")),
                        j.pairs_used.to_string(),
                        j.skipped_pairs.to_string(),
                    ]);
                    for (y, v) in &j.impact_factors {
                        if_rows.push([
                            s.run.to_string(),
                            j.journal_id.clone(),
                            y.to_string(),
                            fixed(v),
                            exact(v),
                        ]);
                    }
                }
            }
            let mut out = Outputs::new(
                "replicate.csv",
                csv_table(
                    &[
                        "run",
                        "seed",
                        "journal_id",
                        "articles_per_year",
                        "mean_abs_rel_change[f64]",
                        "pairs_used",
                        "skipped_pairs",
                    ],
                    summary_rows,
                )?,
            );
            out.file(
                "replicate_if.csv",
                csv_table(
                    &["run", "journal_id", "census_year", "value", "value_exact"],
                    if_rows,
                )?,
            );
            out.seeds = std::iter::once(config.seed)
                .chain(summaries.iter().map(|s| s.seed))
                .collect();
            out.inputs = inputs;
            Ok(out)
        }
        Command::Policy {
            input,
            rule,
            census_year,
            window,
            core_list,
            indexed_list,
            ..
        } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let mut out = policy_command(
                &corpus,
                *rule,
                *census_year,
                *window,
                core_list.as_deref(),
                indexed_list.as_deref(),
                &mut inputs,
            )?;
            out.inputs = inputs;
            Ok(out)
        }
        Command::Report {
            input,
            census_year,
            pair,
            pub_years,
            policy,
            ..
        } => {
            let mut inputs = Vec::new();
            let corpus = read_corpus(input, &mut inputs)?;
            let mut out = report::build(&corpus, *census_year, pair, *pub_years, policy)?;
            out.inputs = inputs;
            Ok(out)
        }
    }
}

fn selected_journals(corpus: &Corpus, requested: &[String]) -> Result<Vec<String>, CliError> {
    if requested.is_empty() {
        return Ok(corpus.journal_ids().map(str::to_string).collect());
    }
    for j in requested {
        corpus.journal_papers(j).map_err(data)?;
    }
    Ok(requested.to_vec())
}

/// Publication years default to the five years before the latest corpus
/// year and citing years to that latest year.
pub(crate) fn comparison_years(
    corpus: &Corpus,
    pub_years: Option<YearRange>,
    citing_years: Option<YearRange>,
) -> Result<(YearRange, YearRange), CliError> {
    let citing = match citing_years {
        Some(c) => c,
        None => YearRange::single(
            corpus
                .year_span()
                .ok_or_else(|| CliError::Data("empty corpus".into()))?
                .last,
        ),
    };
    let publication = match pub_years {
        Some(p) => p,
        None => YearRange::new(citing.first - 5, citing.first - 1).map_err(data)?,
    };
    Ok((publication, citing))
}

fn read_histogram(
    path: &Path,
    inputs: &mut Vec<super::FileDigest>,
) -> Result<EmpiricalDistribution, CliError> {
    let bytes = read_input(path, inputs)?;
    let raw: BTreeMap<String, u64> = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let histogram = raw
        .into_iter()
        .map(|(k, v)| {
            k.trim().parse::<u64>().map(|k| (k, v)).map_err(|_| {
                CliError::Data(format!("{}: bad citation value `{k}`", path.display()))
            })
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    EmpiricalDistribution::from_histogram(histogram).map_err(data)
}

pub(crate) fn comparison_table(
    result: &crate::compare::ComparisonResult,
) -> Result<String, CliError> {
    let ratio = result.mean_ratio();
    let rows = [
        ("p_greater", Some(result.p_greater)),
        ("p_equal", Some(result.p_equal)),
        ("p_at_least", Some(result.p_at_least)),
        ("mean_a", Some(result.mean_a)),
        ("mean_b", Some(result.mean_b)),
        ("mean_ratio", ratio),
    ];
    csv_table(
        &["metric", "value", "exact"],
        rows.iter()
            .map(|(k, v)| [k.to_string(), fixed(v), exact(v)]),
    )
}

fn synth_config(
    source: &SynthSource,
    inputs: &mut Vec<super::FileDigest>,
) -> Result<SynthConfig, CliError> {
    let mut config = match (&source.config, &source.preset) {
        (Some(path), None) => {
            let bytes = read_input(path, inputs)?;
            let text = String::from_utf8(bytes).map_err(data)?;
            SynthConfig::from_json(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => SynthConfig::preset(name)
            .ok_or_else(|| CliError::Usage(format!("unknown preset `{name}` (available: math)")))?,
        _ => {
            return Err(CliError::Usage(
                "pass exactly one of --config or --preset".into(),
            ))
        }
    };
    if let Some(seed) = source.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn read_journal_list(
    path: &Path,
    inputs: &mut Vec<super::FileDigest>,
) -> Result<BTreeSet<String>, CliError> {
    let bytes = read_input(path, inputs)?;
    let text = String::from_utf8(bytes).map_err(data)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Scores every author. The tier rule uses each author's five most cited
/// papers (ties by paper id) and skips authors with fewer than five.
fn policy_command(
    corpus: &Corpus,
    rule: RuleArg,
    census_year: i32,
    window: u32,
    core_list: Option<&Path>,
    indexed_list: Option<&Path>,
    inputs: &mut Vec<super::FileDigest>,
) -> Result<Outputs, CliError> {
    let impact_factors: BTreeMap<String, Option<Rational>> = corpus
        .journal_ids()
        .map(|j| {
            impact_factor(corpus, &IfQuery::new(j, census_year, window))
                .map(|r| (j.to_string(), r.value))
                .map_err(data)
        })
        .collect::<Result<_, _>>()?;
    let tiers = match rule {
        RuleArg::TierPoints => Some(build_tiers(corpus, census_year, window).map_err(data)?),
        RuleArg::CorePoints if core_list.is_none() => {
            Some(build_tiers(corpus, census_year, window).map_err(data)?)
        }
        _ => None,
    };
    let (core, indexed) = match rule {
        RuleArg::CorePoints => {
            let core = match core_list {
                Some(p) => read_journal_list(p, inputs)?,
                None => tiers
                    .as_ref()
                    .expect("tiers built above")
                    .tiers
                    .iter()
                    .filter(|(_, t)| **t == crate::policy::Tier::Top)
                    .map(|(j, _)| j.clone())
                    .collect(),
            };
            let indexed = match indexed_list {
                Some(p) => read_journal_list(p, inputs)?,
                None => impact_factors
                    .iter()
                    .filter(|(_, v)| v.is_some())
                    .map(|(j, _)| j.clone())
                    .collect(),
            };
            (core, indexed)
        }
        _ => (BTreeSet::new(), BTreeSet::new()),
    };

    let mut rows = Vec::new();
    let mut breakdowns = serde_json::Map::new();
    let mut policy_scores: BTreeMap<String, Rational> = BTreeMap::new();
    let mut citation_totals: BTreeMap<String, u64> = BTreeMap::new();
    let mut notes = Vec::new();
    let mut skipped = 0usize;
    for author in corpus.author_ids() {
        let papers = corpus.author_papers(author).map_err(data)?;
        let mut scored: Vec<(u64, &str)> = papers
            .iter()
            .map(|&i| (corpus.citation_count(i, None), corpus.paper(i).id.as_str()))
            .collect();
        if let RuleArg::TierPoints = rule {
            if scored.len() < 5 {
                skipped += 1;
                continue;
            }
            scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            scored.truncate(5);
        }
        let ids: Vec<&str> = scored.iter().map(|(_, id)| *id).collect();
        let score: Result<PolicyScore, _> = match rule {
            RuleArg::CorePoints => score_example1(corpus, author, &ids, &core, &indexed),
            RuleArg::TierPoints => score_example2(
                corpus,
                author,
                &ids,
                tiers.as_ref().expect("tiers built above"),
            ),
            RuleArg::WeightedIf => score_example3(corpus, author, &ids, &impact_factors),
        };
        let rule_name = match rule {
            RuleArg::CorePoints => "core-points",
            RuleArg::TierPoints => "tier-points",
            RuleArg::WeightedIf => "weighted-if",
        };
        match score {
            Ok(s) => {
                rows.push([
                    author.to_string(),
                    rule_name.to_string(),
                    render_fixed(&s.score, 4),
                ]);
                policy_scores.insert(author.to_string(), s.score);
                citation_totals.insert(author.to_string(), scored.iter().map(|(c, _)| c).sum());
                breakdowns.insert(
                    author.to_string(),
                    json!({
                        "score_exact": s.score.to_string(),
                        "breakdown": s.breakdown.iter().map(|c| json!({
                            "paper_id": c.paper_id,
                            "journal_id": c.journal_id,
                            "points": c.points.to_string(),
                            "note": c.note,
                        })).collect::<Vec<_>>(),
                    }),
                );
            }
            Err(e) => {
                rows.push([author.to_string(), rule_name.to_string(), "NA".to_string()]);
                breakdowns.insert(author.to_string(), json!({ "error": e.to_string() }));
            }
        }
    }
    if skipped > 0 {
        notes.push(format!(
            "{skipped} author(s) with fewer than 5 papers skipped"
        ));
    }
    let mut out = Outputs::new(
        "policy.csv",
        csv_table(&["subject", "rule", "score"], rows)?,
    );
    out.file("policy_breakdown.json", to_json(&breakdowns)?);
    if let Some(t) = &tiers {
        out.file("tiers.json", to_json(t)?);
    }
    match divergence(&policy_scores, &citation_totals) {
        Ok(d) => out.file(
            "divergence.json",
            to_json(&json!({
                "subjects": d.subjects,
                "kendall_tau_b": d.tau_b,
                "concordant": d.concordant,
                "discordant": d.discordant,
                "discordant_fraction": render_fixed(&d.discordant_fraction, 4),
                "discordant_fraction_exact": d.discordant_fraction.to_string(),
                "compared_against": "total citations of the scored papers",
            }))?,
        ),
        Err(e) => notes.push(format!("divergence not computed: {e}")),
    }
    out.notes = notes;
    Ok(out)
}

use std::fmt::Write as _;

use super::commands::{comparison_years, csv_table, fixed};
use super::{data, CliError, IfArgs, Outputs};
use crate::compare::{journal_distribution, lognormal_fit, prob_at_least, EmpiricalDistribution};
use crate::corpus::{Corpus, YearRange};
use crate::journal::{
    citation_age_profile, if_variability, impact_factor, self_citation_fraction, window_coverage,
    IfQuery,
};
use crate::rational::render_fixed;

const WINDOWS: [u32; 3] = [2, 5, 10];

struct JournalSection {
    id: String,
    values: Vec<String>,
    distribution: Option<EmpiricalDistribution>,
}

fn histogram_csv(dist: &EmpiricalDistribution) -> Result<String, CliError> {
    let total = dist.article_total();
    csv_table(
        &["citations", "articles", "share"],
        dist.histogram().iter().map(|(c, n)| {
            [
                c.to_string(),
                n.to_string(),
                fixed(&crate::rational::ratio_u64(*n, total)),
            ]
        }),
    )
}

fn split_pair(pair: &str) -> Result<(&str, &str), CliError> {
    match pair.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a, b)),
        _ => Err(CliError::Usage(format!(
            "--pair expects `A:B`, got `{pair}`"
        ))),
    }
}

/// Builds the report bundle: per-journal summary, pairwise comparisons,
/// plot data and a markdown overview.
pub(crate) fn build(
    corpus: &Corpus,
    census_year: Option<i32>,
    pairs: &[String],
    pub_years: Option<YearRange>,
    policy: &IfArgs,
) -> Result<Outputs, CliError> {
    let span = corpus
        .year_span()
        .ok_or_else(|| CliError::Data("empty corpus".into()))?;
    let census = census_year.unwrap_or(span.last);
    let (publication, citing) =
        comparison_years(corpus, pub_years, Some(YearRange::single(census)))?;

    let parsed_pairs = pairs
        .iter()
        .map(|p| split_pair(p))
        .collect::<Result<Vec<_>, _>>()?;
    for (a, b) in &parsed_pairs {
        corpus.journal_papers(a).map_err(data)?;
        corpus.journal_papers(b).map_err(data)?;
    }

    let query = |j: &str, w: u32| {
        IfQuery::new(j, census, w)
            .with_denominator(policy.denominator.into())
            .with_self_citations(policy.self_cites.into())
    };
    let variability_years =
        YearRange::new((census - 9).max(span.first + policy.window as i32), census).ok();

    let mut sections = Vec::new();
    for j in corpus.journal_ids() {
        let mut values = vec![j.to_string()];
        for w in WINDOWS {
            let r = impact_factor(corpus, &query(j, w)).map_err(data)?;
            values.push(fixed(&r.value));
        }
        let cov = window_coverage(corpus, Some(j), YearRange::single(census), policy.window)
            .map_err(data)?;
        values.push(fixed(&cov.fraction));
        let sc = self_citation_fraction(corpus, j, None).map_err(data)?;
        values.push(fixed(&sc.fraction));
        let variability = variability_years
            .and_then(|years| if_variability(corpus, &query(j, policy.window), years).ok())
            .and_then(|v| v.mean_relative_change);
        values.push(variability.map_or_else(|| "NA".into(), |v| format!("{v:.4}")));
        let distribution = journal_distribution(corpus, j, publication, citing).ok();
        sections.push(JournalSection {
            id: j.to_string(),
            values,
            distribution,
        });
    }

    let journal_header = [
        "journal_id",
        "if_w2",
        "if_w5",
        "if_w10",
        "coverage",
        "self_citation_fraction",
        "mean_abs_rel_change[f64]",
    ];
    let mut out = Outputs::new(
        "journals.csv",
        csv_table(&journal_header, sections.iter().map(|s| s.values.clone()))?,
    );

    let mut comparison_rows = Vec::new();
    let mut comparison_md = String::new();
    for (a, b) in &parsed_pairs {
        let da = journal_distribution(corpus, a, publication, citing).map_err(data)?;
        let db = journal_distribution(corpus, b, publication, citing).map_err(data)?;
        let r = prob_at_least(&da, &db).map_err(data)?;
        let ratio = r.mean_ratio();
        comparison_rows.push([
            a.to_string(),
            b.to_string(),
            render_fixed(&r.p_greater, 4),
            render_fixed(&r.p_equal, 4),
            render_fixed(&r.p_at_least, 4),
            render_fixed(&r.mean_a, 4),
            render_fixed(&r.mean_b, 4),
            fixed(&ratio),
            r.p_at_least.to_string(),
        ]);
        let _ = writeln!(comparison_md, "## Comparison {a} vs {b}\n");
        let _ = writeln!(
            comparison_md,
            "Articles published {publication}, citations made in {citing}.\n"
        );
        let _ = writeln!(comparison_md, "| metric | value |\n|---|---|");
        let _ = writeln!(
            comparison_md,
            "| P({a} > {b}) | {} |",
            render_fixed(&r.p_greater, 4)
        );
        let _ = writeln!(
            comparison_md,
            "| P({a} = {b}) | {} |",
            render_fixed(&r.p_equal, 4)
        );
        let _ = writeln!(
            comparison_md,
            "| P({a} >= {b}) | {} (exact {}) |",
            render_fixed(&r.p_at_least, 4),
            r.p_at_least
        );
        let _ = writeln!(
            comparison_md,
            "| mean {a} | {} |",
            render_fixed(&r.mean_a, 4)
        );
        let _ = writeln!(
            comparison_md,
            "| mean {b} | {} |",
            render_fixed(&r.mean_b, 4)
        );
        let _ = writeln!(
            comparison_md,
            "| mean ratio {b}/{a} | {} |\n",
            fixed(&ratio)
        );
    }
    out.file(
        "comparisons.csv",
        csv_table(
            &[
                "journal_a",
                "journal_b",
                "p_greater",
                "p_equal",
                "p_at_least",
                "mean_a",
                "mean_b",
                "mean_ratio",
                "p_at_least_exact",
            ],
            comparison_rows,
        )?,
    );

    let profile = citation_age_profile(corpus, None, census).map_err(data)?;
    let total = profile.total();
    out.file(
        "age_profile.csv",
        csv_table(
            &["age", "citations", "share"],
            profile.counts.iter().map(|(age, n)| {
                [
                    age.to_string(),
                    n.to_string(),
                    fixed(&crate::rational::ratio_u64(*n, total)),
                ]
            }),
        )?,
    );
    out.notes.extend(profile.warning.clone());

    let mut md = String::new();
    let _ = writeln!(md, "# Citation report\n");
    let _ = writeln!(
        md,
        "Census year {census}. Impact-factor policies: {}. Compared articles published {publication}.\n",
        query("*", policy.window).policies_label()
    );
    let decades = profile.decade_shares(3);
    let _ = writeln!(
        md,
        "Citations made in {census}: {total}. Share by cited age 1-10 / 11-20 / 21-30: {} / {} / {}.\n",
        fixed(&decades[0]),
        fixed(&decades[1]),
        fixed(&decades[2])
    );
    if let Ok(all) = window_coverage(corpus, None, YearRange::single(census), policy.window) {
        let _ = writeln!(
            md,
            "Share inside the {}-year window: {} ({} of {}).\n",
            policy.window,
            fixed(&all.fraction),
            all.inside_window,
            all.total
        );
    }
    for s in &sections {
        let _ = writeln!(md, "## Journal {}\n", s.id);
        let _ = writeln!(md, "| metric | value |\n|---|---|");
        for (name, value) in journal_header.iter().zip(&s.values).skip(1) {
            let _ = writeln!(md, "| {name} | {value} |");
        }
        if let Some(dist) = &s.distribution {
            out.file(format!("histograms/{}.csv", s.id), histogram_csv(dist)?);
            let zero = dist.zero_fraction();
            let _ = writeln!(md, "| articles | {} |", dist.article_total());
            let _ = writeln!(md, "| uncited share | {} |", render_fixed(&zero, 4));
            if let Ok(fit) = lognormal_fit(dist) {
                let _ = writeln!(md, "| log-normal mu[mle] | {:.4} |", fit.mu);
                let _ = writeln!(md, "| log-normal sigma[mle] | {:.4} |", fit.sigma);
            }
        }
        md.push('\n');
    }
    md.push_str(&comparison_md);
    out.file("report.md", md);
    Ok(out)
}

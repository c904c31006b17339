use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn citestat<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_citestat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn validate_clean_fixture() {
    let out = citestat(
        ["validate", "--input"]
            .map(Into::into)
            .into_iter()
            .chain([fixture("if_fixture.jsonl").into_os_string()]),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("clean,true"));
}

#[test]
fn journal_if_prints_one_and_a_half() {
    let out = citestat([
        "journal-if".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--census-year".as_ref(),
        "2007".as_ref(),
        "--journal".as_ref(),
        "J".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("journal_id,census_year,window_w,numerator,denominator,value,policies")
    );
    assert!(lines.next().unwrap().starts_with("J,2007,2,6,4,1.5000,"));
}

#[test]
fn compare_histograms_prints_point_six() {
    let out = citestat([
        "compare".as_ref(),
        "--hist-a".as_ref(),
        fixture("hist_a.json").as_os_str(),
        "--hist-b".as_ref(),
        fixture("hist_b.json").as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("p_at_least,0.6000,3/5"));
}

#[test]
fn compare_json_output() {
    let out = citestat([
        "compare".as_ref(),
        "--hist-a".as_ref(),
        fixture("hist_a.json").as_os_str(),
        "--hist-b".as_ref(),
        fixture("hist_b.json").as_os_str(),
        "--json".as_ref(),
    ]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["p_at_least"], "3/5");
    assert_eq!(v["mean_ratio"], "2");
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = citestat(["journal-if", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_journal_is_data_error() {
    let out = citestat([
        "journal-if".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--census-year".as_ref(),
        "2007".as_ref(),
        "--journal".as_ref(),
        "NOPE".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NOPE"));
}

#[test]
fn missing_input_is_data_error() {
    let out = citestat(["validate", "--input", "/nonexistent/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let out = citestat(["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("journal-if"));
}

#[test]
fn out_dir_gets_manifest_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out = citestat([
        "journal-profile".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--census-year".as_ref(),
        "2007".as_ref(),
        "--out".as_ref(),
        dir.path().as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let manifest: Value = serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    let names: Vec<&str> = outputs
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["age_profile.csv", "decades.csv", "coverage.csv"]);
    for o in outputs {
        let bytes = std::fs::read(dir.path().join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"], citestat::cli::sha256_hex(&bytes));
    }
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);
    assert_eq!(read(&dir.path().join("age_profile.csv")), stdout(&out));
    assert!(read(&dir.path().join("coverage.csv")).contains("2,6,6,1.0000"));
}

#[test]
fn synth_is_reproducible_and_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"seed": 7, "journals": [{"id": "S", "articles_per_year": 15, "first_year": 2000, "last_year": 2006}],
            "latent": {"mu": 0.5, "sigma": 0.7, "zero_inflation": 0.3}, "half_life": 5.0,
            "same_journal_share": 0.2, "non_substantive_share": 0.1}"#,
    )
    .unwrap();
    let run = |out: &Path| {
        citestat([
            "synth".as_ref(),
            "--config".as_ref(),
            config.as_os_str(),
            "--out".as_ref(),
            out.as_os_str(),
        ])
    };
    let (a, b) = (run(&dir.path().join("a")), run(&dir.path().join("b")));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 15 * 7);
    let manifest: Value = serde_json::from_str(&read(&dir.path().join("a/manifest.json"))).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([7]));

    let reseeded = citestat([
        "synth".as_ref(),
        "--config".as_ref(),
        config.as_os_str(),
        "--seed".as_ref(),
        "8".as_ref(),
    ]);
    assert_ne!(stdout(&reseeded), stdout(&a));
}

#[test]
fn synth_output_loads_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = citestat(["synth", "--preset", "math"]);
    assert_eq!(out.status.code(), Some(0));
    let corpus = dir.path().join("math.jsonl");
    std::fs::write(&corpus, &out.stdout).unwrap();
    let check = citestat([
        "validate".as_ref(),
        "--strict".as_ref(),
        "--input".as_ref(),
        corpus.as_os_str(),
    ]);
    assert_eq!(check.status.code(), Some(0));
    assert!(stdout(&check).contains("clean,true"));
}

#[test]
fn replicate_tags_float_column() {
    let out = citestat(["replicate", "--preset", "math", "--runs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("run,seed,journal_id,articles_per_year,mean_abs_rel_change[f64],"));
    assert_eq!(text.lines().count(), 1 + 2 * 12);
}

#[test]
fn author_index_fixture() {
    let out = citestat([
        "author-index".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--histograms".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("author_id,papers,total_citations,h,g,m,tail_fraction\n"));
    // bo: j2 cited by c1 and c4, j3 by c1 and c3; first paper 2005, evaluated 2008.
    assert!(text.contains("\nbo,2,4,2,2,0.6667,1.0000\n"), "{text}");
}

#[test]
fn policy_weighted_if() {
    let out = citestat([
        "policy".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--rule".as_ref(),
        "weighted-if".as_ref(),
        "--census-year".as_ref(),
        "2007".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    // cy wrote one J paper alone: IF(J) = 3/2.
    assert!(stdout(&out).contains("cy,weighted-if,1.5000"));
}

#[test]
fn report_sections_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = citestat([
        "report".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--census-year".as_ref(),
        "2007".as_ref(),
        "--pub-years".as_ref(),
        "2005:2006".as_ref(),
        "--pair".as_ref(),
        "J:J".as_ref(),
        "--out".as_ref(),
        dir.path().as_os_str(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let md = read(&dir.path().join("report.md"));
    for section in [
        "## Journal J",
        "## Journal K",
        "## Journal L",
        "## Comparison J vs J",
    ] {
        assert!(md.contains(section), "missing {section}");
    }
    assert!(read(&dir.path().join("journals.csv")).contains("\nJ,1.5000,"));
    assert!(dir.path().join("histograms/J.csv").exists());
    assert!(dir.path().join("age_profile.csv").exists());
    assert!(read(&dir.path().join("comparisons.csv")).contains("J,J,0.2500,0.5000,0.7500,"));
}

#[test]
fn report_unknown_pair_journal_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = citestat([
        "report".as_ref(),
        "--input".as_ref(),
        fixture("if_fixture.jsonl").as_os_str(),
        "--pair".as_ref(),
        "J:NOPE".as_ref(),
        "--out".as_ref(),
        dir.path().as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_single_journal_without_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("one.jsonl");
    std::fs::write(
        &corpus,
        concat!(
            r#"{"id":"a","journal":"J","year":2000,"kind":"research-article","authors":["x"],"references":[]}"#,
            "\n",
            r#"{"id":"b","journal":"J","year":2001,"kind":"research-article","authors":["x"],"references":["a"]}"#,
            "\n"
        ),
    )
    .unwrap();
    let out = citestat([
        "report".as_ref(),
        "--input".as_ref(),
        corpus.as_os_str(),
        "--out".as_ref(),
        dir.path().join("r").as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let md = read(&dir.path().join("r/report.md"));
    assert_eq!(md.matches("## Journal ").count(), 1);
    assert_eq!(md.matches("## Comparison ").count(), 0);
}

#[test]
fn report_on_math_preset() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("math.jsonl");
    std::fs::write(&corpus, citestat(["synth", "--preset", "math"]).stdout).unwrap();
    let run = |name: &str| {
        citestat([
            "report".as_ref(),
            "--input".as_ref(),
            corpus.as_os_str(),
            "--pair".as_ref(),
            "MATH-A:MATH-L".as_ref(),
            "--out".as_ref(),
            dir.path().join(name).as_os_str(),
        ])
    };
    assert_eq!(run("r1").status.code(), Some(0));
    assert_eq!(run("r2").status.code(), Some(0));
    let md = read(&dir.path().join("r1/report.md"));
    assert_eq!(md.matches("## Journal ").count(), 12);
    assert_eq!(md.matches("## Comparison ").count(), 1);
    for name in [
        "report.md",
        "journals.csv",
        "comparisons.csv",
        "age_profile.csv",
    ] {
        assert_eq!(
            read(&dir.path().join("r1").join(name)),
            read(&dir.path().join("r2").join(name)),
            "{name} differs between runs"
        );
    }
    let manifest = |d: &str| -> Value {
        let mut m: Value =
            serde_json::from_str(&read(&dir.path().join(d).join("manifest.json"))).unwrap();
        m["timestamp"] = Value::Null;
        m["command_line"] = Value::Null;
        m
    };
    assert_eq!(manifest("r1"), manifest("r2"));
}

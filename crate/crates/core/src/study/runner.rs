//! End-to-end study runner: ingest, score, regress, and emit a deterministic
//! bundle of report files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest_corpus, ingest_tags, Corpus, CorpusConfig, DocType, Tag, TagTable};
use crate::error::{Error, Result};
use crate::glm::poisson_count_diagnostics;
use crate::scores::{score_corpus, KeywordNewness, ScoreOptions, ScoreTable};
use crate::stats::descriptive_stats;
use crate::study::{
    evaluate_expectations, join_scores_tags, run_inclusion_models, run_probit_robustness,
    run_tag_models, AnalysisRow, ExpectationTable, InclusionRow, Predictor, ProbitCell,
    ProbitReport, SampleSpec, StudyReport, TagCell, Verdict, YearInclusion,
};

fn default_min_ref_year() -> i32 {
    1980
}

fn default_predictors() -> Vec<Predictor> {
    vec![
        Predictor::U,
        Predictor::W,
        Predictor::K,
        Predictor::Citations,
        Predictor::FmRecommendations,
    ]
}

/// Configuration of one study run; deserializable from TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub corpus: PathBuf,
    pub tags: PathBuf,
    /// Inclusive publication years whose papers are scored and analyzed.
    pub focal_years: (i32, i32),
    /// Inclusive coverage of the corpus. Defaults to the focal years padded
    /// by the prior and following windows.
    #[serde(default)]
    pub corpus_years: Option<(i32, i32)>,
    #[serde(default = "default_min_ref_year")]
    pub min_ref_year: i32,
    #[serde(default)]
    pub keyword_newness: KeywordNewness,
    #[serde(default = "default_predictors")]
    pub predictors: Vec<Predictor>,
    /// Seed for the comparison-group draw.
    pub seed: u64,
}

/// The report bundle: file name → exact bytes, plus headline row counts.
/// Byte-identical across runs and thread counts for a fixed config.
#[derive(Debug, Clone, Default)]
pub struct StudyOutputs {
    pub files: BTreeMap<String, Vec<u8>>,
    pub row_counts: BTreeMap<String, usize>,
}

/// Everything serialized into `fits.json`, keyed so that every table cell is
/// traceable to its fit.
#[derive(Debug, Serialize)]
struct FitsBundle<'a> {
    config: &'a StudyConfig,
    corpus_digest: String,
    tag_models: &'a BTreeMap<&'static str, StudyReport>,
    probit_models: &'a BTreeMap<&'static str, ProbitReport>,
    inclusion_models: &'a BTreeMap<i32, YearInclusion>,
    verdicts: &'a Vec<Verdict>,
}

fn csv_bytes(rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Run the whole study under a dedicated thread pool of the given size.
pub fn run_study(config: &StudyConfig, threads: usize) -> Result<StudyOutputs> {
    if threads == 0 {
        return Err(Error::Invalid("thread count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_study_inner(config))
}

fn run_study_inner(config: &StudyConfig) -> Result<StudyOutputs> {
    let (focal_lo, focal_hi) = config.focal_years;
    let mut corpus_config = CorpusConfig::new(config.corpus_years.unwrap_or((
        focal_lo - 3,
        focal_hi + 3,
    )));
    corpus_config.min_ref_year = config.min_ref_year;

    let (corpus, ingest_report) = ingest_corpus(&config.corpus, corpus_config)?;
    let tags = ingest_tags(&config.tags)?;

    let mut opts = ScoreOptions::new(config.focal_years);
    opts.keyword_newness = config.keyword_newness;
    let scores = score_corpus(&corpus, &opts)?;

    let rows = join_scores_tags(&scores, &tags);
    if rows.is_empty() {
        return Err(Error::EmptyInput(
            "no tagged papers in the focal window".into(),
        ));
    }

    let mut out = StudyOutputs::default();
    out.row_counts.insert("papers".into(), corpus.papers().len());
    out.row_counts.insert("scored".into(), scores.rows.len());
    out.row_counts.insert("tagged_and_scored".into(), rows.len());
    out.files
        .insert("ingest_report.txt".into(), ingest_report.summary().into_bytes());

    let mut score_csv = Vec::new();
    scores.write_csv(&mut score_csv)?;
    out.files.insert("scores.csv".into(), score_csv);

    out.files
        .insert("table1_stats.csv".into(), descriptives_csv(&rows)?);

    // Count regressions of every tag on each predictor.
    let mut tag_models: BTreeMap<&'static str, StudyReport> = BTreeMap::new();
    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut prm_rows: Vec<Vec<String>> = vec![prm_header()];
    for &predictor in &config.predictors {
        match run_tag_models(&rows, predictor) {
            Ok(report) => {
                verdicts.push(evaluate_expectations(
                    &report,
                    &ExpectationTable::for_predictor(predictor),
                ));
                append_prm_rows(&mut prm_rows, &report);
                tag_models.insert(predictor.name(), report);
            }
            Err(e) => {
                prm_rows.push(error_row(predictor.name(), &e, prm_header().len()));
            }
        }
    }
    out.files.insert("table4_prm.csv".into(), csv_bytes(&prm_rows)?);
    out.files
        .insert("verdicts.csv".into(), verdicts_csv(&verdicts)?);

    // Probit robustness for the novelty scores only; W enters categorically.
    let mut probit_models: BTreeMap<&'static str, ProbitReport> = BTreeMap::new();
    let mut probit_rows: Vec<Vec<String>> = vec![probit_header()];
    let mut probit_predictors: Vec<Predictor> = config
        .predictors
        .iter()
        .filter_map(|&p| match p {
            Predictor::U | Predictor::K | Predictor::WCategorical => Some(p),
            Predictor::W => Some(Predictor::WCategorical),
            _ => None,
        })
        .collect();
    probit_predictors.dedup();
    for predictor in probit_predictors {
        match run_probit_robustness(&rows, predictor) {
            Ok(report) => {
                append_probit_rows(&mut probit_rows, &report);
                probit_models.insert(report.predictor.name(), report);
            }
            Err(e) => {
                probit_rows.push(error_row(predictor.name(), &e, probit_header().len()));
            }
        }
    }
    out.files
        .insert("table5_probit.csv".into(), csv_bytes(&probit_rows)?);

    // Comparison group: untagged articles/reviews sharing a subject category
    // with the tagged group, sampled to the tagged group's strata.
    let inclusion = comparison_rows(&corpus, &tags, &scores, &rows, config.seed)?;
    out.row_counts
        .insert("included_group".into(), inclusion.iter().filter(|r| r.included).count());
    out.row_counts.insert(
        "comparison_group".into(),
        inclusion.iter().filter(|r| !r.included).count(),
    );
    out.files
        .insert("table6_groups.csv".into(), group_stats_csv(&inclusion)?);

    let years: Vec<i32> = (focal_lo..=focal_hi).collect();
    let inclusion_models = run_inclusion_models(&inclusion, &years);
    out.files.insert(
        "table7_logit.csv".into(),
        inclusion_csv(&inclusion_models)?,
    );

    out.files
        .insert("figure1_counts.csv".into(), count_diag_csv(&rows)?);

    let bundle = FitsBundle {
        config,
        corpus_digest: corpus.digest(),
        tag_models: &tag_models,
        probit_models: &probit_models,
        inclusion_models: &inclusion_models,
        verdicts: &verdicts,
    };
    let mut json = serde_json::to_vec_pretty(&bundle)?;
    json.push(b'\n');
    out.files.insert("fits.json".into(), json);

    Ok(out)
}

fn descriptives_csv(rows: &[AnalysisRow]) -> Result<Vec<u8>> {
    let mut table: Vec<Vec<String>> = vec![vec![
        "variable".into(),
        "group".into(),
        "n".into(),
        "mean".into(),
        "median".into(),
        "sd".into(),
        "min".into(),
        "max".into(),
    ]];
    let variables: [(&str, Box<dyn Fn(&AnalysisRow) -> Option<f64>>); 5] = [
        ("u", Box::new(|r: &AnalysisRow| r.u)),
        ("w", Box::new(|r: &AnalysisRow| r.w)),
        ("k", Box::new(|r: &AnalysisRow| r.k)),
        ("citations", Box::new(|r: &AnalysisRow| Some(r.citations))),
        (
            "fm_recommendations",
            Box::new(|r: &AnalysisRow| Some(r.fm_recommendations)),
        ),
    ];
    for (name, get) in &variables {
        let mut values = Vec::new();
        let mut groups = Vec::new();
        for r in rows {
            if let Some(v) = get(r) {
                values.push(v);
                groups.push(r.year.to_string());
            }
        }
        if values.is_empty() {
            continue;
        }
        let stats = descriptive_stats(&values, &groups)?;
        for row in stats.groups.iter().chain(std::iter::once(&stats.pooled)) {
            table.push(vec![
                name.to_string(),
                row.group.clone(),
                row.n.to_string(),
                fmt(row.mean),
                fmt(row.median),
                fmt(row.sd),
                fmt(row.min),
                fmt(row.max),
            ]);
        }
    }
    csv_bytes(&table)
}

fn prm_header() -> Vec<String> {
    [
        "predictor", "tag", "term", "coefficient", "robust_se", "predictor_sd",
        "percent_change", "stars", "p_value", "pseudo_r2", "n", "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn error_row(predictor: &str, e: &Error, width: usize) -> Vec<String> {
    let mut row = vec![String::new(); width];
    row[0] = predictor.to_string();
    row[width - 1] = e.to_string();
    row
}

fn append_prm_rows(rows: &mut Vec<Vec<String>>, report: &StudyReport) {
    for (tag, cell) in &report.cells {
        match cell {
            TagCell::Fit {
                effects,
                pseudo_r2,
                n,
                ..
            } => {
                for e in effects {
                    rows.push(vec![
                        report.predictor.name().to_string(),
                        tag.name().to_string(),
                        e.term.clone(),
                        fmt(e.coefficient),
                        fmt(e.robust_se),
                        fmt(e.predictor_sd),
                        fmt(e.percent_change),
                        e.stars.clone(),
                        fmt(e.p_value),
                        fmt(*pseudo_r2),
                        n.to_string(),
                        String::new(),
                    ]);
                }
            }
            TagCell::Failed { error } => {
                let mut row = vec![String::new(); prm_header().len()];
                row[0] = report.predictor.name().to_string();
                row[1] = tag.name().to_string();
                row[11] = error.clone();
                rows.push(row);
            }
        }
    }
}

fn probit_header() -> Vec<String> {
    [
        "predictor", "tag", "term", "coefficient", "robust_se", "std_coef",
        "stars", "p_value", "pseudo_r2", "n", "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn append_probit_rows(rows: &mut Vec<Vec<String>>, report: &ProbitReport) {
    for (tag, cell) in &report.cells {
        match cell {
            ProbitCell::Fit {
                effects,
                pseudo_r2,
                n,
                ..
            } => {
                for e in effects {
                    rows.push(vec![
                        report.predictor.name().to_string(),
                        tag.name().to_string(),
                        e.term.clone(),
                        fmt(e.coefficient),
                        fmt(e.robust_se),
                        fmt(e.std_coef),
                        e.stars.clone(),
                        fmt(e.p_value),
                        fmt(*pseudo_r2),
                        n.to_string(),
                        String::new(),
                    ]);
                }
            }
            ProbitCell::Failed { error } => {
                let mut row = vec![String::new(); probit_header().len()];
                row[0] = report.predictor.name().to_string();
                row[1] = tag.name().to_string();
                row[10] = error.clone();
                rows.push(row);
            }
        }
    }
}

fn verdicts_csv(verdicts: &[Verdict]) -> Result<Vec<u8>> {
    let mut rows = vec![vec![
        "predictor".into(),
        "matched".into(),
        "total".into(),
        "convergent".into(),
        "mismatches".into(),
    ]];
    for v in verdicts {
        rows.push(vec![
            v.predictor.name().to_string(),
            v.matched.to_string(),
            v.total.to_string(),
            v.convergent.to_string(),
            v.mismatches
                .iter()
                .map(|t| t.name())
                .collect::<Vec<_>>()
                .join(";"),
        ]);
    }
    csv_bytes(&rows)
}

/// Assemble inclusion rows: the tagged group plus a stratified draw of
/// untagged papers. The comparison pool is untagged articles and reviews in
/// the focal window that share a subject category with the tagged group and
/// have all three scores; requested stratum counts are capped at what the
/// pool can supply.
fn comparison_rows(
    corpus: &Corpus,
    tags: &TagTable,
    scores: &ScoreTable,
    tagged: &[AnalysisRow],
    seed: u64,
) -> Result<Vec<InclusionRow>> {
    let tagged_categories: std::collections::BTreeSet<&str> = tagged
        .iter()
        .filter_map(|r| corpus.paper(&r.paper_id))
        .flat_map(|p| p.subject_categories.iter().map(|s| s.as_str()))
        .collect();

    let complete = |paper_id: &str| {
        scores
            .get(paper_id)
            .map(|s| (s.u.map(|u| u.value), s.w.map(|w| w.value), s.k.as_ref().map(|k| k.value)))
    };

    let included_papers: Vec<&crate::corpus::PaperRecord> = tagged
        .iter()
        .filter_map(|r| corpus.paper(&r.paper_id))
        .filter(|p| matches!(p.doc_type, DocType::Article | DocType::Review))
        .collect();

    let pool: Vec<&crate::corpus::PaperRecord> = scores
        .rows
        .iter()
        .filter(|s| !tags.contains(&s.paper_id))
        .filter_map(|s| corpus.paper(&s.paper_id))
        .filter(|p| matches!(p.doc_type, DocType::Article | DocType::Review))
        .filter(|p| {
            p.subject_categories
                .iter()
                .any(|c| tagged_categories.contains(c.as_str()))
        })
        .collect();

    let mut spec = SampleSpec::from_reference(included_papers.iter().copied(), seed);
    // Cap each requested count at the pool's supply so a thin pool shrinks
    // the comparison group instead of failing the run.
    let mut available: BTreeMap<(i32, DocType), usize> = BTreeMap::new();
    for p in &pool {
        *available.entry((p.year, p.doc_type)).or_insert(0) += 1;
    }
    for (stratum, want) in spec.strata.iter_mut() {
        *want = (*want).min(available.get(stratum).copied().unwrap_or(0));
    }
    let sampled = crate::study::stratified_sample(pool.iter().copied(), &spec)?;

    let mut rows = Vec::new();
    for p in &included_papers {
        if let Some((u, w, k)) = complete(&p.paper_id) {
            rows.push(InclusionRow {
                paper_id: p.paper_id.clone(),
                year: p.year,
                included: true,
                u,
                w,
                k,
            });
        }
    }
    for id in &sampled {
        let p = corpus.paper(id).expect("sampled from corpus");
        if let Some((u, w, k)) = complete(id) {
            rows.push(InclusionRow {
                paper_id: id.clone(),
                year: p.year,
                included: false,
                u,
                w,
                k,
            });
        }
    }
    rows.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    Ok(rows)
}

fn group_stats_csv(rows: &[InclusionRow]) -> Result<Vec<u8>> {
    let mut table = vec![vec![
        "variable".into(),
        "group".into(),
        "n".into(),
        "mean".into(),
        "median".into(),
        "sd".into(),
        "min".into(),
        "max".into(),
    ]];
    let variables: [(&str, fn(&InclusionRow) -> Option<f64>); 3] = [
        ("u", |r| r.u),
        ("w", |r| r.w),
        ("k", |r| r.k),
    ];
    for (name, get) in &variables {
        let mut values = Vec::new();
        let mut groups = Vec::new();
        for r in rows {
            if let Some(v) = get(r) {
                values.push(v);
                groups.push(format!(
                    "{}_{}",
                    r.year,
                    if r.included { "tagged" } else { "comparison" }
                ));
            }
        }
        if values.is_empty() {
            continue;
        }
        let stats = descriptive_stats(&values, &groups)?;
        for row in stats.groups.iter().chain(std::iter::once(&stats.pooled)) {
            table.push(vec![
                name.to_string(),
                row.group.clone(),
                row.n.to_string(),
                fmt(row.mean),
                fmt(row.median),
                fmt(row.sd),
                fmt(row.min),
                fmt(row.max),
            ]);
        }
    }
    csv_bytes(&table)
}

fn inclusion_csv(models: &BTreeMap<i32, YearInclusion>) -> Result<Vec<u8>> {
    let mut rows = vec![vec![
        "year".into(),
        "term".into(),
        "coefficient".into(),
        "robust_se".into(),
        "predictor_sd".into(),
        "percent_change_odds".into(),
        "stars".into(),
        "p_value".into(),
        "pseudo_r2".into(),
        "n".into(),
        "n_dropped_missing".into(),
        "error".into(),
    ]];
    for (year, cell) in models {
        match cell {
            YearInclusion::Fit {
                effects,
                pseudo_r2,
                n,
                n_dropped_missing,
                ..
            } => {
                for e in effects {
                    rows.push(vec![
                        year.to_string(),
                        e.term.clone(),
                        fmt(e.coefficient),
                        fmt(e.robust_se),
                        fmt(e.predictor_sd),
                        fmt(e.percent_change_odds),
                        e.stars.clone(),
                        fmt(e.p_value),
                        fmt(*pseudo_r2),
                        n.to_string(),
                        n_dropped_missing.to_string(),
                        String::new(),
                    ]);
                }
            }
            YearInclusion::Failed { error } => {
                let mut row = vec![String::new(); 12];
                row[0] = year.to_string();
                row[11] = error.clone();
                rows.push(row);
            }
        }
    }
    csv_bytes(&rows)
}

fn count_diag_csv(rows: &[AnalysisRow]) -> Result<Vec<u8>> {
    let mut table = vec![vec![
        "tag".into(),
        "count".into(),
        "observed".into(),
        "predicted".into(),
    ]];
    for &tag in &Tag::ALL {
        let counts: Vec<u64> = rows
            .iter()
            .map(|r| r.tag_counts.get(&tag).copied().unwrap_or(0) as u64)
            .collect();
        for d in poisson_count_diagnostics(&counts)? {
            table.push(vec![
                tag.name().to_string(),
                d.count.to_string(),
                fmt(d.observed),
                fmt(d.predicted),
            ]);
        }
    }
    csv_bytes(&table)
}

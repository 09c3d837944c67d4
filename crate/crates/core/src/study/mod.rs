//! Convergent-validity study: tag regressions across predictors, probit
//! robustness checks, comparison-group sampling and inclusion models.

mod runner;
mod synth;

pub use runner::{run_study, StudyConfig, StudyOutputs};
pub use synth::{generate_synthetic_corpus, SynthParams, TagGen};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{DocType, PaperRecord, Tag, TagTable};
use crate::error::{Error, Result};
use crate::glm::{
    fit_logistic, fit_poisson, fit_probit, mcfadden_r2, percent_change, sample_sd, sample_var,
    stars_for_p, std_coef_probit, wald_p_value, DesignMatrix, Family, FitResult,
};
use crate::scores::{ScoreTable, WCategory};

/// Independent variables the harness can put on the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    U,
    W,
    WCategorical,
    K,
    Citations,
    FmRecommendations,
}

impl Predictor {
    pub const ALL: [Predictor; 6] = [
        Predictor::U,
        Predictor::W,
        Predictor::WCategorical,
        Predictor::K,
        Predictor::Citations,
        Predictor::FmRecommendations,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Predictor::U => "u",
            Predictor::W => "w",
            Predictor::WCategorical => "w_categorical",
            Predictor::K => "k",
            Predictor::Citations => "citations",
            Predictor::FmRecommendations => "fm_recommendations",
        }
    }

    pub fn from_name(name: &str) -> Option<Predictor> {
        Predictor::ALL.iter().copied().find(|p| p.name() == name)
    }
}

/// Expected direction of a tag's association with a predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedSign {
    Positive,
    Negative,
    Either,
}

/// Expected signs per tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectationTable {
    pub signs: BTreeMap<Tag, ExpectedSign>,
}

impl ExpectationTable {
    /// Expectations for the novelty scores: the four newness tags positive,
    /// the four confirmatory tags negative, controversial undetermined.
    pub fn novelty_default() -> ExpectationTable {
        use ExpectedSign::*;
        let signs = [
            (Tag::Confirmation, Negative),
            (Tag::GoodForTeaching, Negative),
            (Tag::NegativeNull, Negative),
            (Tag::Refutation, Negative),
            (Tag::Controversial, Either),
            (Tag::Hypothesis, Positive),
            (Tag::NewFinding, Positive),
            (Tag::NovelDrugTarget, Positive),
            (Tag::TechnicalAdvance, Positive),
        ]
        .into_iter()
        .collect();
        ExpectationTable { signs }
    }

    /// Quality proxies (citations, reviewer recommendations) are expected to
    /// relate positively to every tag.
    pub fn all_positive() -> ExpectationTable {
        ExpectationTable {
            signs: Tag::ALL
                .iter()
                .map(|&t| (t, ExpectedSign::Positive))
                .collect(),
        }
    }

    pub fn for_predictor(predictor: Predictor) -> ExpectationTable {
        match predictor {
            Predictor::Citations | Predictor::FmRecommendations => Self::all_positive(),
            _ => Self::novelty_default(),
        }
    }
}

/// One joined observation: scores plus tag outcomes for one paper.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub paper_id: String,
    pub year: i32,
    pub u: Option<f64>,
    pub w: Option<f64>,
    pub w_category: Option<WCategory>,
    pub k: Option<f64>,
    pub citations: f64,
    pub fm_recommendations: f64,
    pub tag_counts: BTreeMap<Tag, u32>,
}

/// Inner join of scores and tags on `paper_id`, in `paper_id` order.
pub fn join_scores_tags(scores: &ScoreTable, tags: &TagTable) -> Vec<AnalysisRow> {
    scores
        .rows
        .iter()
        .filter_map(|s| {
            tags.get(&s.paper_id).map(|t| AnalysisRow {
                paper_id: s.paper_id.clone(),
                year: s.year,
                u: s.u.map(|u| u.value),
                w: s.w.map(|w| w.value),
                w_category: s.w.map(|w| w.category),
                k: s.k.as_ref().map(|k| k.value),
                citations: t.citation_count as f64,
                fm_recommendations: t.fm_score_sum as f64,
                tag_counts: t.tag_counts.clone(),
            })
        })
        .collect()
}

const MIN_MODEL_ROWS: usize = 30;

/// Dummy term names for the categorical W variable (reference: non-novel).
pub const W_MODERATE_TERM: &str = "w_moderately_novel";
pub const W_HIGHLY_TERM: &str = "w_highly_novel";

fn predictor_present(row: &AnalysisRow, predictor: Predictor) -> bool {
    match predictor {
        Predictor::U => row.u.is_some(),
        Predictor::W | Predictor::WCategorical => row.w.is_some(),
        Predictor::K => row.k.is_some(),
        Predictor::Citations | Predictor::FmRecommendations => true,
    }
}

/// Predictor columns for the given rows (which must all have the predictor
/// present). Categorical W yields two dummies against non-novel; a dummy
/// level absent from the sample is omitted.
fn predictor_columns(
    rows: &[&AnalysisRow],
    predictor: Predictor,
) -> Result<Vec<(String, Vec<f64>)>> {
    let continuous = |name: &str, get: fn(&AnalysisRow) -> f64| -> Result<Vec<(String, Vec<f64>)>> {
        let col: Vec<f64> = rows.iter().map(|r| get(r)).collect();
        if sample_var(&col) == 0.0 {
            return Err(Error::Degenerate(format!(
                "predictor {name} is constant across the sample"
            )));
        }
        Ok(vec![(name.to_string(), col)])
    };
    match predictor {
        Predictor::U => continuous("u", |r| r.u.unwrap()),
        Predictor::W => continuous("w", |r| r.w.unwrap()),
        Predictor::K => continuous("k", |r| r.k.unwrap()),
        Predictor::Citations => continuous("citations", |r| r.citations),
        Predictor::FmRecommendations => {
            continuous("fm_recommendations", |r| r.fm_recommendations)
        }
        Predictor::WCategorical => {
            let moderate: Vec<f64> = rows
                .iter()
                .map(|r| (r.w_category == Some(WCategory::ModeratelyNovel)) as u8 as f64)
                .collect();
            let highly: Vec<f64> = rows
                .iter()
                .map(|r| (r.w_category == Some(WCategory::HighlyNovel)) as u8 as f64)
                .collect();
            let mut cols = Vec::new();
            if sample_var(&moderate) > 0.0 {
                cols.push((W_MODERATE_TERM.to_string(), moderate));
            }
            if sample_var(&highly) > 0.0 {
                cols.push((W_HIGHLY_TERM.to_string(), highly));
            }
            if cols.is_empty() {
                return Err(Error::Degenerate(
                    "categorical W has a single level across the sample".into(),
                ));
            }
            Ok(cols)
        }
    }
}

/// Publication-year dummies with the earliest year as reference category.
fn year_dummy_columns(rows: &[&AnalysisRow]) -> Vec<(String, Vec<f64>)> {
    let mut years: Vec<i32> = rows.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    years
        .iter()
        .skip(1)
        .map(|&y| {
            (
                format!("year_{y}"),
                rows.iter().map(|r| (r.year == y) as u8 as f64).collect(),
            )
        })
        .collect()
}

/// One estimated effect of interest within a cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectCell {
    pub term: String,
    pub coefficient: f64,
    pub robust_se: f64,
    /// Sample SD of the term over the estimation sample.
    pub predictor_sd: f64,
    /// 100·(exp(β·sd) − 1).
    pub percent_change: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TagCell {
    Fit {
        effects: Vec<EffectCell>,
        /// McFadden pseudo-R², percent.
        pseudo_r2: f64,
        n: usize,
        fit: FitResult,
    },
    Failed {
        error: String,
    },
}

/// Count regressions of every tag on one predictor plus year dummies.
#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub predictor: Predictor,
    pub n_rows: usize,
    pub cells: BTreeMap<Tag, TagCell>,
}

fn effect_cells(
    fit: &FitResult,
    design: &DesignMatrix,
    terms: &[String],
) -> Vec<EffectCell> {
    terms
        .iter()
        .map(|term| {
            let j = design.column_index(term).expect("term in design");
            let coefficient = fit.coefficients[j];
            let robust = fit.robust_se[j];
            let sd = sample_sd(&design.column(j));
            let p = wald_p_value(coefficient, robust);
            EffectCell {
                term: term.clone(),
                coefficient,
                robust_se: robust,
                predictor_sd: sd,
                percent_change: percent_change(coefficient, sd),
                p_value: p,
                stars: stars_for_p(p).to_string(),
            }
        })
        .collect()
}

/// For each of the nine tags, fit a count regression of the tag's assignment
/// count on the predictor and year dummies; report percent change per
/// predictor SD, stars from robust-SE Wald tests, and pseudo-R². A failing
/// cell (e.g. a never-assigned tag) is reported and does not abort the rest.
pub fn run_tag_models(rows: &[AnalysisRow], predictor: Predictor) -> Result<StudyReport> {
    let usable: Vec<&AnalysisRow> = rows
        .iter()
        .filter(|r| predictor_present(r, predictor))
        .collect();
    if usable.len() < MIN_MODEL_ROWS {
        return Err(Error::SmallSample {
            rows: usable.len(),
            min: MIN_MODEL_ROWS,
        });
    }
    let pred_cols = predictor_columns(&usable, predictor)?;
    let terms: Vec<String> = pred_cols.iter().map(|(name, _)| name.clone()).collect();
    let year_cols = year_dummy_columns(&usable);

    let cells: Vec<(Tag, TagCell)> = Tag::ALL
        .par_iter()
        .map(|&tag| {
            let y: Vec<f64> = usable
                .iter()
                .map(|r| r.tag_counts.get(&tag).copied().unwrap_or(0) as f64)
                .collect();
            let mut cols = pred_cols.clone();
            cols.extend(year_cols.clone());
            let cell = (|| -> Result<TagCell> {
                let design = DesignMatrix::with_intercept(y, cols)?;
                let fit = fit_poisson(&design)?;
                fit.require_converged()?;
                let effects = effect_cells(&fit, &design, &terms);
                Ok(TagCell::Fit {
                    effects,
                    pseudo_r2: mcfadden_r2(&fit)?,
                    n: design.n(),
                    fit,
                })
            })()
            .unwrap_or_else(|e| TagCell::Failed {
                error: e.to_string(),
            });
            (tag, cell)
        })
        .collect();

    Ok(StudyReport {
        predictor,
        n_rows: usable.len(),
        cells: cells.into_iter().collect(),
    })
}

/// One model fit on demand: a single tag against a single predictor.
#[derive(Debug, Clone, Serialize)]
pub struct NamedModel {
    pub family: Family,
    pub predictor: Predictor,
    pub tag: Tag,
    pub effects: Vec<EffectCell>,
    pub pseudo_r2: f64,
    pub n: usize,
    pub fit: FitResult,
}

/// Fit one named model: the tag's assignment counts (Poisson) or its
/// any-assignment indicator (logistic/probit) on the predictor plus year
/// dummies. Unlike the table runners, failures here are hard errors.
pub fn run_named_model(
    rows: &[AnalysisRow],
    predictor: Predictor,
    tag: Tag,
    family: Family,
) -> Result<NamedModel> {
    let usable: Vec<&AnalysisRow> = rows
        .iter()
        .filter(|r| predictor_present(r, predictor))
        .collect();
    if usable.len() < MIN_MODEL_ROWS {
        return Err(Error::SmallSample {
            rows: usable.len(),
            min: MIN_MODEL_ROWS,
        });
    }
    let pred_cols = predictor_columns(&usable, predictor)?;
    let terms: Vec<String> = pred_cols.iter().map(|(name, _)| name.clone()).collect();
    let mut cols = pred_cols;
    cols.extend(year_dummy_columns(&usable));
    let y: Vec<f64> = usable
        .iter()
        .map(|r| {
            let count = r.tag_counts.get(&tag).copied().unwrap_or(0);
            match family {
                Family::Poisson => count as f64,
                Family::Logistic | Family::Probit => (count >= 1) as u8 as f64,
            }
        })
        .collect();
    let design = DesignMatrix::with_intercept(y, cols)?;
    let fit = match family {
        Family::Poisson => fit_poisson(&design)?,
        Family::Logistic => fit_logistic(&design)?,
        Family::Probit => fit_probit(&design)?,
    };
    fit.require_converged()?;
    let effects = effect_cells(&fit, &design, &terms);
    Ok(NamedModel {
        family,
        predictor,
        tag,
        effects,
        pseudo_r2: mcfadden_r2(&fit)?,
        n: design.n(),
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbitEffect {
    pub term: String,
    pub coefficient: f64,
    pub robust_se: f64,
    /// Fully standardized coefficient.
    pub std_coef: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProbitCell {
    Fit {
        effects: Vec<ProbitEffect>,
        pseudo_r2: f64,
        n: usize,
        fit: FitResult,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbitReport {
    pub predictor: Predictor,
    pub n_rows: usize,
    pub cells: BTreeMap<Tag, ProbitCell>,
}

/// Robustness check: dichotomize each tag (any assignment → 1) and fit a
/// probit with year dummies, reporting fully standardized coefficients.
/// W always enters as the categorical variable; non-convergence is reported
/// per cell rather than aborting the report.
pub fn run_probit_robustness(rows: &[AnalysisRow], predictor: Predictor) -> Result<ProbitReport> {
    let predictor = match predictor {
        Predictor::W => Predictor::WCategorical,
        other => other,
    };
    let usable: Vec<&AnalysisRow> = rows
        .iter()
        .filter(|r| predictor_present(r, predictor))
        .collect();
    if usable.len() < MIN_MODEL_ROWS {
        return Err(Error::SmallSample {
            rows: usable.len(),
            min: MIN_MODEL_ROWS,
        });
    }
    let pred_cols = predictor_columns(&usable, predictor)?;
    let terms: Vec<String> = pred_cols.iter().map(|(name, _)| name.clone()).collect();
    let year_cols = year_dummy_columns(&usable);

    let cells: Vec<(Tag, ProbitCell)> = Tag::ALL
        .par_iter()
        .map(|&tag| {
            let y: Vec<f64> = usable
                .iter()
                .map(|r| (r.tag_counts.get(&tag).copied().unwrap_or(0) >= 1) as u8 as f64)
                .collect();
            let mut cols = pred_cols.clone();
            cols.extend(year_cols.clone());
            let cell = (|| -> Result<ProbitCell> {
                let design = DesignMatrix::with_intercept(y, cols)?;
                let fit = fit_probit(&design)?;
                fit.require_converged()?;
                let effects = terms
                    .iter()
                    .map(|term| {
                        let j = design.column_index(term).expect("term in design");
                        let coefficient = fit.coefficients[j];
                        let robust = fit.robust_se[j];
                        let p = wald_p_value(coefficient, robust);
                        Ok(ProbitEffect {
                            term: term.clone(),
                            coefficient,
                            robust_se: robust,
                            std_coef: std_coef_probit(&fit, &design, term)?,
                            p_value: p,
                            stars: stars_for_p(p).to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ProbitCell::Fit {
                    effects,
                    pseudo_r2: mcfadden_r2(&fit)?,
                    n: design.n(),
                    fit,
                })
            })()
            .unwrap_or_else(|e| ProbitCell::Failed {
                error: e.to_string(),
            });
            (tag, cell)
        })
        .collect();

    Ok(ProbitReport {
        predictor,
        n_rows: usable.len(),
        cells: cells.into_iter().collect(),
    })
}

/// Dichotomize counts for the probit robustness models.
pub fn dichotomize(counts: &[u32]) -> Vec<u8> {
    counts.iter().map(|&c| (c >= 1) as u8).collect()
}

/// Sign-agreement verdict for one predictor's report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub predictor: Predictor,
    /// Tags (with a directional expectation) whose sign matched.
    pub matched: usize,
    /// Tags with a directional expectation.
    pub total: usize,
    /// True iff every directional expectation matched.
    pub convergent: bool,
    pub mismatches: Vec<Tag>,
}

/// The headline effect of a cell: the highly-novel dummy for categorical W,
/// the single predictor term otherwise.
fn headline_effect<'a>(effects: &'a [EffectCell], predictor: Predictor) -> Option<&'a EffectCell> {
    match predictor {
        Predictor::WCategorical => effects
            .iter()
            .find(|e| e.term == W_HIGHLY_TERM)
            .or_else(|| effects.first()),
        _ => effects.first(),
    }
}

/// Compare each cell's percent-change sign against the expectation. Tags
/// expected "either" always match and are excluded from the totals; failed
/// cells count as mismatches.
pub fn evaluate_expectations(report: &StudyReport, expectations: &ExpectationTable) -> Verdict {
    let mut matched = 0;
    let mut total = 0;
    let mut mismatches = Vec::new();
    for &tag in &Tag::ALL {
        let expected = expectations
            .signs
            .get(&tag)
            .copied()
            .unwrap_or(ExpectedSign::Either);
        if expected == ExpectedSign::Either {
            continue;
        }
        total += 1;
        let ok = match report.cells.get(&tag) {
            Some(TagCell::Fit { effects, .. }) => {
                match headline_effect(effects, report.predictor) {
                    Some(e) => match expected {
                        ExpectedSign::Positive => e.percent_change > 0.0,
                        ExpectedSign::Negative => e.percent_change < 0.0,
                        ExpectedSign::Either => true,
                    },
                    None => false,
                }
            }
            _ => false,
        };
        if ok {
            matched += 1;
        } else {
            mismatches.push(tag);
        }
    }
    Verdict {
        predictor: report.predictor,
        matched,
        total,
        convergent: matched == total,
        mismatches,
    }
}

// ---------------------------------------------------------------------------
// Stratified sampling
// ---------------------------------------------------------------------------

/// Requested stratum counts for a comparison sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSpec {
    pub strata: BTreeMap<(i32, DocType), usize>,
    pub seed: u64,
}

impl SampleSpec {
    /// Copy the (year, doc_type) cell counts of a reference group.
    pub fn from_reference<'a>(
        papers: impl Iterator<Item = &'a PaperRecord>,
        seed: u64,
    ) -> SampleSpec {
        let mut strata: BTreeMap<(i32, DocType), usize> = BTreeMap::new();
        for p in papers {
            *strata.entry((p.year, p.doc_type)).or_insert(0) += 1;
        }
        SampleSpec { strata, seed }
    }
}

fn stratum_rng(seed: u64, year: i32, doc_type: DocType) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(year.to_le_bytes());
    hasher.update(doc_type.to_string().as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Seeded, without-replacement sample matching each stratum count exactly.
/// The pool is sorted by `paper_id` first, so the draw is invariant under
/// pool reordering; the result is sorted.
pub fn stratified_sample<'a>(
    pool: impl Iterator<Item = &'a PaperRecord>,
    spec: &SampleSpec,
) -> Result<Vec<String>> {
    let mut by_stratum: BTreeMap<(i32, DocType), Vec<&str>> = BTreeMap::new();
    for p in pool {
        by_stratum
            .entry((p.year, p.doc_type))
            .or_default()
            .push(&p.paper_id);
    }
    for ids in by_stratum.values_mut() {
        ids.sort_unstable();
        ids.dedup();
    }
    let mut selected = Vec::new();
    for (&(year, doc_type), &requested) in &spec.strata {
        if requested == 0 {
            continue;
        }
        let ids = by_stratum.get(&(year, doc_type)).map_or(&[][..], |v| v);
        if ids.len() < requested {
            return Err(Error::StratumShortage {
                year,
                doc_type: doc_type.to_string(),
                available: ids.len(),
                requested,
            });
        }
        let mut rng = stratum_rng(spec.seed, year, doc_type);
        let picks = rand::seq::index::sample(&mut rng, ids.len(), requested);
        for i in picks.iter() {
            selected.push(ids[i].to_string());
        }
    }
    selected.sort();
    Ok(selected)
}

// ---------------------------------------------------------------------------
// Inclusion models
// ---------------------------------------------------------------------------

/// One observation for the inclusion models: group membership plus scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionRow {
    pub paper_id: String,
    pub year: i32,
    pub included: bool,
    pub u: Option<f64>,
    pub w: Option<f64>,
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionEffect {
    pub term: String,
    pub coefficient: f64,
    pub robust_se: f64,
    pub predictor_sd: f64,
    /// Percent change in odds per predictor-SD increase.
    pub percent_change_odds: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum YearInclusion {
    Fit {
        effects: Vec<InclusionEffect>,
        pseudo_r2: f64,
        n: usize,
        /// Rows dropped for missing scores.
        n_dropped_missing: usize,
        fit: FitResult,
    },
    Failed {
        error: String,
    },
}

/// Per publication year, a logistic regression of group membership on all
/// three scores jointly, with robust SEs and percent change in odds per
/// score SD. Rows missing any score are dropped listwise and counted.
pub fn run_inclusion_models(
    rows: &[InclusionRow],
    years: &[i32],
) -> BTreeMap<i32, YearInclusion> {
    let mut out = BTreeMap::new();
    for &year in years {
        let year_rows: Vec<&InclusionRow> = rows.iter().filter(|r| r.year == year).collect();
        let complete: Vec<&InclusionRow> = year_rows
            .iter()
            .copied()
            .filter(|r| r.u.is_some() && r.w.is_some() && r.k.is_some())
            .collect();
        let n_dropped_missing = year_rows.len() - complete.len();
        let cell = (|| -> Result<YearInclusion> {
            if complete.is_empty() {
                return Err(Error::EmptyInput(format!("no complete rows in {year}")));
            }
            let y: Vec<f64> = complete.iter().map(|r| r.included as u8 as f64).collect();
            let cols = vec![
                ("u".to_string(), complete.iter().map(|r| r.u.unwrap()).collect::<Vec<_>>()),
                ("w".to_string(), complete.iter().map(|r| r.w.unwrap()).collect()),
                ("k".to_string(), complete.iter().map(|r| r.k.unwrap()).collect()),
            ];
            let design = DesignMatrix::with_intercept(y, cols)?;
            let fit = fit_logistic(&design)?;
            fit.require_converged()?;
            let effects = ["u", "w", "k"]
                .iter()
                .map(|term| {
                    let j = design.column_index(term).expect("term in design");
                    let coefficient = fit.coefficients[j];
                    let robust = fit.robust_se[j];
                    let sd = sample_sd(&design.column(j));
                    let p = wald_p_value(coefficient, robust);
                    InclusionEffect {
                        term: term.to_string(),
                        coefficient,
                        robust_se: robust,
                        predictor_sd: sd,
                        percent_change_odds: percent_change(coefficient, sd),
                        p_value: p,
                        stars: stars_for_p(p).to_string(),
                    }
                })
                .collect();
            Ok(YearInclusion::Fit {
                effects,
                pseudo_r2: mcfadden_r2(&fit)?,
                n: design.n(),
                n_dropped_missing,
                fit,
            })
        })()
        .unwrap_or_else(|e| YearInclusion::Failed {
            error: e.to_string(),
        });
        out.insert(year, cell);
    }
    out
}

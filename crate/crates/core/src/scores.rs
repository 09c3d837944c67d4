//! The three per-paper novelty indicators.
//!
//! * U: negative log of the 10th-percentile commonness across a paper's
//!   reference pairs — high U means atypical journal combinations.
//! * W: sum of (1 − cosine similarity of co-citation profiles) over the
//!   paper's new, later-reused journal pairs — high W means hard first-time
//!   combinations. Carries a three-way category assigned over the dataset.
//! * K: proportion of a paper's keywords never seen before in its subject
//!   category, maximized over categories.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocite::{
    build_cocitation_profiles, journal_activity_filter, CoCitationProfile, CociteIndex,
    JournalActivity, JournalPair, PairCountConfig, PairHistory, YearPairCounts,
};
use crate::corpus::{Corpus, JournalIdx, PaperRecord};
use crate::error::{Error, Result};
use crate::order_stats::nearest_rank;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoveltyU {
    pub value: f64,
    /// Reference pairs that entered the commonness series.
    pub n_pairs: usize,
    /// True when the 10th-percentile commonness was 0 and the year's
    /// smallest positive commonness was substituted.
    pub zero_floor_applied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WCategory {
    NonNovel,
    ModeratelyNovel,
    HighlyNovel,
}

impl WCategory {
    pub fn name(&self) -> &'static str {
        match self {
            WCategory::NonNovel => "non_novel",
            WCategory::ModeratelyNovel => "moderately_novel",
            WCategory::HighlyNovel => "highly_novel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoveltyW {
    pub value: f64,
    /// Journal pairs that were both new and re-used in the following window.
    pub n_new_pairs: usize,
    pub category: WCategory,
    /// New pairs scored with the zero-vector cosine convention.
    pub undefined_profile_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyK {
    pub value: f64,
    pub per_category: BTreeMap<String, f64>,
    /// Total keywords on the paper.
    pub k_total: usize,
    /// New-keyword count in the maximizing category.
    pub k_new_max: usize,
}

/// U from an already-assembled commonness series. `zero_floor` supplies the
/// substitute when the percentile is 0 (the year's smallest positive
/// commonness); it is only consulted in that case.
pub fn novelty_u_from_series(
    series: &[f64],
    zero_floor: impl FnOnce() -> Option<f64>,
) -> Result<NoveltyU> {
    assert!(!series.is_empty());
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut p10 = nearest_rank(&sorted, 0.1);
    let mut zero_floor_applied = false;
    if p10 == 0.0 {
        match zero_floor() {
            Some(floor) if floor > 0.0 => {
                p10 = floor;
                zero_floor_applied = true;
            }
            _ => {
                return Err(Error::UndefinedScore(
                    "all commonness values are 0 and the year has no positive floor".into(),
                ))
            }
        }
    }
    Ok(NoveltyU {
        value: -p10.ln(),
        n_pairs: series.len(),
        zero_floor_applied,
    })
}

/// Score U for one paper against its publication year's pair counts.
/// Returns `None` for papers with fewer than two filtered references.
pub fn score_u(
    paper: &PaperRecord,
    counts: &YearPairCounts,
    cfg: PairCountConfig,
) -> Result<Option<NoveltyU>> {
    if paper.references.len() < 2 {
        return Ok(None);
    }
    let pairs = crate::cocite::paper_journal_pairs(paper, cfg);
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut series = Vec::with_capacity(pairs.len());
    for pair in pairs {
        series.push(counts.commonness(pair.lo(), pair.hi())?);
    }
    novelty_u_from_series(&series, || counts.min_positive_commonness()).map(Some)
}

/// Cosine similarity of two sparse non-negative count vectors; 0 when either
/// vector is empty or all-zero.
pub fn cosine_similarity(u: &HashMap<JournalIdx, u64>, v: &HashMap<JournalIdx, u64>) -> f64 {
    let norm = |m: &HashMap<JournalIdx, u64>| -> f64 {
        m.values().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
    };
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let (small, large) = if u.len() <= v.len() { (u, v) } else { (v, u) };
    let dot: f64 = small
        .iter()
        .filter_map(|(j, &c)| large.get(j).map(|&d| c as f64 * d as f64))
        .sum();
    dot / (nu * nv)
}

/// Score W for one paper. The caller guarantees the corpus covers the
/// following window; papers with fewer than two references score `None`.
pub fn score_w(
    paper: &PaperRecord,
    history: &PairHistory,
    profiles: &CoCitationProfile,
    activity: &JournalActivity,
    following_window: u32,
) -> Option<NoveltyW> {
    if paper.references.len() < 2 {
        return None;
    }
    // Distinct pairs of referenced journals, i != j, both retained.
    let mut pairs: Vec<JournalPair> = Vec::new();
    let refs = &paper.references;
    for i in 0..refs.len() {
        for j in (i + 1)..refs.len() {
            let pair = JournalPair::new(refs[i].journal, refs[j].journal);
            if pair.is_self_pair() {
                continue;
            }
            if !activity.is_retained(pair.lo()) || !activity.is_retained(pair.hi()) {
                continue;
            }
            pairs.push(pair);
        }
    }
    pairs.sort();
    pairs.dedup();

    let empty: HashMap<JournalIdx, u64> = HashMap::new();
    let mut value = 0.0;
    let mut n_new_pairs = 0;
    let mut undefined_profile_pairs = 0;
    let t = paper.year;
    for pair in pairs {
        if history.cocited_before(pair, t) {
            continue;
        }
        if !history.cocited_in(pair, t + 1, t + following_window as i32) {
            continue;
        }
        n_new_pairs += 1;
        let u = profiles.vector(pair.lo()).unwrap_or(&empty);
        let v = profiles.vector(pair.hi()).unwrap_or(&empty);
        if u.is_empty() || v.is_empty() {
            undefined_profile_pairs += 1;
        }
        value += 1.0 - cosine_similarity(u, v);
    }
    let category = if n_new_pairs == 0 {
        WCategory::NonNovel
    } else {
        WCategory::ModeratelyNovel
    };
    Some(NoveltyW {
        value,
        n_new_pairs,
        category,
        undefined_profile_pairs,
    })
}

/// Assign the three-way category across a dataset: non-novel without new
/// pairs, highly novel for papers whose W reaches the top 1% (the
/// ⌈0.01·m⌉-th largest value), moderately novel otherwise.
pub fn categorize_w(scores: &mut [NoveltyW]) {
    if scores.is_empty() {
        return;
    }
    let m = scores.len();
    let k = ((0.01 * m as f64).ceil() as usize).clamp(1, m);
    let mut values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cutoff = values[k - 1];
    for s in scores.iter_mut() {
        s.category = if s.n_new_pairs == 0 {
            WCategory::NonNovel
        } else if s.value >= cutoff {
            WCategory::HighlyNovel
        } else {
            WCategory::ModeratelyNovel
        };
    }
}

/// How keyword newness is judged within a subject category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordNewness {
    /// New iff the keyword never occurred in the category in any earlier year.
    #[default]
    AllPriorYears,
    /// New iff no other paper used the keyword in the category in the same year.
    SameYearExclusive,
}

#[derive(Debug, Clone, Default)]
struct KeywordStat {
    first_year: i32,
    year_counts: BTreeMap<i32, u32>,
}

/// First-seen years and per-year usage counts for every (category, keyword)
/// combination in the corpus.
#[derive(Debug, Clone, Default)]
pub struct KeywordHistory {
    stats: HashMap<(String, String), KeywordStat>,
}

impl KeywordHistory {
    pub fn build(corpus: &Corpus) -> KeywordHistory {
        let mut stats: HashMap<(String, String), KeywordStat> = HashMap::new();
        for paper in corpus.papers() {
            for cat in &paper.subject_categories {
                for kw in &paper.keywords {
                    let entry = stats
                        .entry((cat.clone(), kw.clone()))
                        .or_insert_with(|| KeywordStat {
                            first_year: paper.year,
                            year_counts: BTreeMap::new(),
                        });
                    entry.first_year = entry.first_year.min(paper.year);
                    *entry.year_counts.entry(paper.year).or_insert(0) += 1;
                }
            }
        }
        KeywordHistory { stats }
    }

    fn is_new(&self, cat: &str, kw: &str, year: i32, mode: KeywordNewness) -> bool {
        match self.stats.get(&(cat.to_string(), kw.to_string())) {
            // Unseen combination: trivially new.
            None => true,
            Some(stat) => match mode {
                KeywordNewness::AllPriorYears => stat.first_year >= year,
                KeywordNewness::SameYearExclusive => {
                    stat.year_counts.get(&year).copied().unwrap_or(0) <= 1
                }
            },
        }
    }
}

/// Score K for one paper: per category, the share of its keywords that are
/// new there; the paper's K is the maximum over its categories. `None` when
/// the paper has no keywords or no categories.
pub fn score_k(
    paper: &PaperRecord,
    history: &KeywordHistory,
    mode: KeywordNewness,
) -> Option<NoveltyK> {
    if paper.keywords.is_empty() || paper.subject_categories.is_empty() {
        return None;
    }
    let k_total = paper.keywords.len();
    let mut per_category = BTreeMap::new();
    let mut best = (0.0f64, 0usize);
    for cat in &paper.subject_categories {
        let new_count = paper
            .keywords
            .iter()
            .filter(|kw| history.is_new(cat, kw, paper.year, mode))
            .count();
        let share = new_count as f64 / k_total as f64;
        if share > best.0 {
            best = (share, new_count);
        }
        per_category.insert(cat.clone(), share);
    }
    Some(NoveltyK {
        value: best.0,
        per_category,
        k_total,
        k_new_max: best.1,
    })
}

// ---------------------------------------------------------------------------
// Corpus-level scoring pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    /// Inclusive publication years to score.
    pub focal_years: (i32, i32),
    pub pairs: PairCountConfig,
    pub keyword_newness: KeywordNewness,
}

impl ScoreOptions {
    pub fn new(focal_years: (i32, i32)) -> Self {
        ScoreOptions {
            focal_years,
            pairs: PairCountConfig::default(),
            keyword_newness: KeywordNewness::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperScores {
    pub paper_id: String,
    pub year: i32,
    pub u: Option<NoveltyU>,
    pub w: Option<NoveltyW>,
    /// Why W is missing, when it is.
    pub w_missing: Option<String>,
    pub k: Option<NoveltyK>,
}

/// Scores for every paper in the focal window, sorted by `paper_id`.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    pub rows: Vec<PaperScores>,
}

impl ScoreTable {
    pub fn get(&self, paper_id: &str) -> Option<&PaperScores> {
        self.rows
            .binary_search_by(|r| r.paper_id.as_str().cmp(paper_id))
            .ok()
            .map(|i| &self.rows[i])
    }

    /// CSV with one row per paper and empty fields for missing scores.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "paper_id",
            "year",
            "u",
            "u_flag",
            "n_pairs",
            "w",
            "w_category",
            "n_new_pairs",
            "k",
        ])?;
        for r in &self.rows {
            let (u, u_flag, n_pairs) = match &r.u {
                Some(u) => (
                    format!("{}", u.value),
                    if u.zero_floor_applied { "1" } else { "0" }.to_string(),
                    u.n_pairs.to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            let (wv, wc, np) = match &r.w {
                Some(wsc) => (
                    format!("{}", wsc.value),
                    wsc.category.name().to_string(),
                    wsc.n_new_pairs.to_string(),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            let k = r
                .k
                .as_ref()
                .map(|k| format!("{}", k.value))
                .unwrap_or_default();
            w.write_record([
                r.paper_id.as_str(),
                &r.year.to_string(),
                &u,
                &u_flag,
                &n_pairs,
                &wv,
                &wc,
                &np,
                &k,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-year machinery shared by all papers of one focal year.
struct YearContext {
    counts: YearPairCounts,
    activity: Option<JournalActivity>,
    profiles: Option<CoCitationProfile>,
    w_missing: Option<String>,
}

/// Compute U, W and K for every paper published in the focal window.
///
/// W is missing (with a reason) for papers whose following window extends
/// beyond the corpus, and for papers whose prior window contains no
/// co-citations. Categories for W are assigned over all papers scored here.
pub fn score_corpus(corpus: &Corpus, opts: &ScoreOptions) -> Result<ScoreTable> {
    let (lo, hi) = opts.focal_years;
    let (start, end) = corpus.config().year_range;
    if lo < start || hi > end {
        return Err(Error::YearOutOfRange {
            year: if lo < start { lo } else { hi },
            start,
            end,
        });
    }
    let index = CociteIndex::build(corpus, lo, hi, opts.pairs)?;
    let history = PairHistory::build(corpus);
    let keyword_history = KeywordHistory::build(corpus);
    let following = corpus.config().w_following_window;

    let mut contexts: BTreeMap<i32, YearContext> = BTreeMap::new();
    for t in lo..=hi {
        let counts = index.years[&t].clone();
        let mut w_missing = None;
        if t + following as i32 > end {
            w_missing = Some(format!(
                "following window {}..={} extends beyond corpus end {end}",
                t + 1,
                t + following as i32
            ));
        }
        let (activity, profiles) = if w_missing.is_none() {
            match journal_activity_filter(corpus, t) {
                Ok(activity) => {
                    let profiles =
                        build_cocitation_profiles(corpus, t, &activity, opts.pairs)?;
                    (Some(activity), Some(profiles))
                }
                Err(Error::EmptyWindow(a, b)) => {
                    w_missing = Some(format!("no co-citations in prior window {a}..={b}"));
                    (None, None)
                }
                Err(e) => return Err(e),
            }
        } else {
            (None, None)
        };
        contexts.insert(
            t,
            YearContext {
                counts,
                activity,
                profiles,
                w_missing,
            },
        );
    }

    let papers: Vec<&PaperRecord> = corpus.papers_in_window(lo, hi).collect();
    let mut rows: Vec<PaperScores> = papers
        .par_iter()
        .map(|paper| -> Result<PaperScores> {
            let ctx = &contexts[&paper.year];
            let u = score_u(paper, &ctx.counts, opts.pairs)?;
            let (w, w_missing) = match (&ctx.activity, &ctx.profiles) {
                (Some(activity), Some(profiles)) => {
                    let w = score_w(paper, &history, profiles, activity, following);
                    let reason = if w.is_none() {
                        Some("fewer than two references".to_string())
                    } else {
                        None
                    };
                    (w, reason)
                }
                _ => (None, ctx.w_missing.clone()),
            };
            let k = score_k(paper, &keyword_history, opts.keyword_newness);
            Ok(PaperScores {
                paper_id: paper.paper_id.clone(),
                year: paper.year,
                u,
                w,
                w_missing,
                k,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    rows.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));

    // Dataset-level W categories.
    let mut ws: Vec<NoveltyW> = rows.iter().filter_map(|r| r.w).collect();
    categorize_w(&mut ws);
    let mut it = ws.into_iter();
    for r in &mut rows {
        if r.w.is_some() {
            r.w = Some(it.next().expect("category count matches"));
        }
    }

    Ok(ScoreTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocite::build_year_pair_counts;
    use crate::testutil::toy_corpus;
    use approx::assert_relative_eq;

    #[test]
    fn u_three_paper_example() {
        let corpus = toy_corpus(&[
            ("p1", 2013, &[("A", 2000), ("B", 2000)]),
            ("p2", 2013, &[("A", 2000), ("B", 2000), ("C", 2000)]),
            ("p3", 2013, &[("A", 2000), ("B", 2000), ("C", 2000)]),
        ]);
        let counts = build_year_pair_counts(&corpus, 2013, PairCountConfig::default()).unwrap();
        assert_eq!(counts.total, 7);
        let focal = corpus.paper("p3").unwrap();
        let u = score_u(focal, &counts, PairCountConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(u.n_pairs, 3);
        assert!(!u.zero_floor_applied);
        assert_relative_eq!(u.value, -(0.7f64).ln(), epsilon = 1e-12);
        assert_relative_eq!(u.value, 0.3567, epsilon = 1e-4);
    }

    #[test]
    fn u_zero_when_all_commonness_one() {
        let u = novelty_u_from_series(&[1.0, 1.0, 1.0], || None).unwrap();
        assert_eq!(u.value, 0.0);
    }

    #[test]
    fn u_inverts_log() {
        let u = novelty_u_from_series(&[(-2.0f64).exp()], || None).unwrap();
        assert_relative_eq!(u.value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn u_zero_floor_substitution() {
        let u = novelty_u_from_series(&[0.0, 0.5], || Some(0.25)).unwrap();
        assert!(u.zero_floor_applied);
        assert_relative_eq!(u.value, -(0.25f64).ln());
        assert!(matches!(
            novelty_u_from_series(&[0.0], || None),
            Err(Error::UndefinedScore(_))
        ));
    }

    #[test]
    fn u_missing_below_two_references() {
        let corpus = toy_corpus(&[
            ("p1", 2013, &[("A", 2000)]),
            ("p2", 2013, &[("A", 2000), ("B", 2000)]),
        ]);
        let counts = build_year_pair_counts(&corpus, 2013, PairCountConfig::default()).unwrap();
        let p1 = corpus.paper("p1").unwrap();
        assert!(score_u(p1, &counts, PairCountConfig::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn cosine_examples() {
        let v = |entries: &[(u32, u64)]| -> HashMap<u32, u64> {
            entries.iter().copied().collect()
        };
        assert_relative_eq!(cosine_similarity(&v(&[(0, 2)]), &v(&[(0, 3)])), 1.0);
        assert_relative_eq!(cosine_similarity(&v(&[(0, 1)]), &v(&[(1, 1)])), 0.0);
        assert_relative_eq!(
            cosine_similarity(&v(&[(0, 1), (1, 1)]), &v(&[(0, 1)])),
            1.0 / 2.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(cosine_similarity(&v(&[]), &v(&[(0, 1)])), 0.0);
    }

    /// Shared fixture: X and Y both active, first co-cited together by the
    /// focal paper in 2013 and re-used in 2014. Profile shapes come from the
    /// 2010-2012 window.
    fn w_fixture(prior: &[(&str, i32, &[(&str, i32)])]) -> (Corpus, Option<NoveltyW>) {
        let mut papers: Vec<(&str, i32, &[(&str, i32)])> = prior.to_vec();
        papers.push(("focal", 2013, &[("X", 2000), ("Y", 2000)]));
        papers.push(("reuse", 2014, &[("X", 2000), ("Y", 2000)]));
        // keep the corpus range covering 2013+3
        papers.push(("pad", 2016, &[]));
        let corpus = toy_corpus(&papers);
        let history = PairHistory::build(&corpus);
        let activity = journal_activity_filter(&corpus, 2013).unwrap();
        let profiles =
            build_cocitation_profiles(&corpus, 2013, &activity, PairCountConfig::default())
                .unwrap();
        let focal = corpus.paper("focal").unwrap();
        let w = score_w(focal, &history, &profiles, &activity, 3);
        (corpus, w)
    }

    #[test]
    fn w_orthogonal_profiles_scores_one() {
        // X co-cited only with A, Y only with B; all four journals cited
        // equally often so the activity filter retains everything.
        let (_, w) = w_fixture(&[
            ("h1", 2012, &[("X", 2000), ("A", 2000)]),
            ("h2", 2012, &[("X", 2001), ("A", 2001)]),
            ("h3", 2012, &[("Y", 2000), ("B", 2000)]),
            ("h4", 2012, &[("Y", 2001), ("B", 2001)]),
        ]);
        let w = w.unwrap();
        assert_eq!(w.n_new_pairs, 1);
        assert_relative_eq!(w.value, 1.0, epsilon = 1e-12);
        assert_eq!(w.category, WCategory::ModeratelyNovel);
    }

    #[test]
    fn w_parallel_profiles_scores_zero() {
        // Both X and Y co-cited only with A.
        let (_, w) = w_fixture(&[
            ("h1", 2012, &[("X", 2000), ("A", 2000), ("A", 2001)]),
            ("h2", 2012, &[("Y", 2000), ("A", 2000), ("A", 2001), ("A", 2002)]),
        ]);
        let w = w.unwrap();
        assert_eq!(w.n_new_pairs, 1);
        assert_relative_eq!(w.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn w_no_new_pairs_is_non_novel() {
        // X,Y co-cited already in 2012 → condition (1) fails.
        let (_, w) = w_fixture(&[("h1", 2012, &[("X", 2000), ("Y", 2000)])]);
        let w = w.unwrap();
        assert_eq!(w.n_new_pairs, 0);
        assert_eq!(w.value, 0.0);
        assert_eq!(w.category, WCategory::NonNovel);
    }

    #[test]
    fn w_requires_following_reuse() {
        // New pair, but never co-cited again → not counted.
        let papers: Vec<(&str, i32, &[(&str, i32)])> = vec![
            ("h1", 2012, &[("X", 2000), ("A", 2000)]),
            ("h2", 2012, &[("Y", 2000), ("A", 2000)]),
            ("focal", 2013, &[("X", 2000), ("Y", 2000)]),
            ("pad", 2016, &[]),
        ];
        let corpus = toy_corpus(&papers);
        let history = PairHistory::build(&corpus);
        let activity = journal_activity_filter(&corpus, 2013).unwrap();
        let profiles =
            build_cocitation_profiles(&corpus, 2013, &activity, PairCountConfig::default())
                .unwrap();
        let w = score_w(
            corpus.paper("focal").unwrap(),
            &history,
            &profiles,
            &activity,
            3,
        )
        .unwrap();
        assert_eq!(w.n_new_pairs, 0);
        assert_eq!(w.category, WCategory::NonNovel);
    }

    #[test]
    fn w_zero_vector_convention_counts_undefined() {
        // No prior co-citations for X or Y at all, but both journals cited
        // (activity window has citations), so profiles are empty vectors.
        let papers: Vec<(&str, i32, &[(&str, i32)])> = vec![
            ("h1", 2012, &[("X", 2000)]),
            ("h2", 2012, &[("Y", 2000)]),
            ("focal", 2013, &[("X", 2000), ("Y", 2000)]),
            ("reuse", 2014, &[("X", 2000), ("Y", 2000)]),
            ("pad", 2016, &[]),
        ];
        let corpus = toy_corpus(&papers);
        let history = PairHistory::build(&corpus);
        let activity = journal_activity_filter(&corpus, 2013).unwrap();
        let profiles =
            build_cocitation_profiles(&corpus, 2013, &activity, PairCountConfig::default())
                .unwrap();
        let w = score_w(
            corpus.paper("focal").unwrap(),
            &history,
            &profiles,
            &activity,
            3,
        )
        .unwrap();
        assert_eq!(w.n_new_pairs, 1);
        assert_eq!(w.undefined_profile_pairs, 1);
        assert_relative_eq!(w.value, 1.0);
    }

    #[test]
    fn categorize_top_one_percent_of_200() {
        let mut scores: Vec<NoveltyW> = (1..=200)
            .map(|i| NoveltyW {
                value: i as f64,
                n_new_pairs: 1,
                category: WCategory::ModeratelyNovel,
                undefined_profile_pairs: 0,
            })
            .collect();
        scores[0].n_new_pairs = 0; // one non-novel paper stays non-novel
        scores[0].value = 0.0;
        categorize_w(&mut scores);
        let highly: Vec<f64> = scores
            .iter()
            .filter(|s| s.category == WCategory::HighlyNovel)
            .map(|s| s.value)
            .collect();
        assert_eq!(highly, vec![199.0, 200.0]);
        assert_eq!(scores[0].category, WCategory::NonNovel);
        assert!(scores[1..198]
            .iter()
            .all(|s| s.category == WCategory::ModeratelyNovel));
    }

    fn kw_corpus() -> Corpus {
        use crate::corpus::{CorpusConfig, DocType, RawPaper};
        let raw = |id: &str, year: i32, cats: &[&str], kws: &[&str]| RawPaper {
            paper_id: id.into(),
            year,
            doc_type: DocType::Article,
            journal: "J".into(),
            subject_categories: cats.iter().map(|s| s.to_string()).collect(),
            keywords: kws.iter().map(|s| s.to_string()).collect(),
            references: vec![],
        };
        Corpus::from_raw(
            vec![
                raw("old1", 2012, &["c1"], &["k2", "k3", "k4"]),
                raw("old2", 2012, &["c2"], &["k1", "k2"]),
                raw("focal", 2013, &["c1"], &["k1", "k2", "k3", "k4"]),
                raw("multi", 2013, &["c1", "c2"], &["k1", "k2"]),
                raw("bare", 2013, &["c1"], &[]),
            ],
            CorpusConfig::new((2010, 2016)),
        )
        .unwrap()
        .0
    }

    #[test]
    fn k_ratio_of_new_keywords() {
        let corpus = kw_corpus();
        let history = KeywordHistory::build(&corpus);
        // focal in c1: k1 is new (never in c1 before), k2-k4 are not → 1/4
        let k = score_k(
            corpus.paper("focal").unwrap(),
            &history,
            KeywordNewness::AllPriorYears,
        )
        .unwrap();
        assert_relative_eq!(k.value, 0.25);
        assert_eq!(k.k_total, 4);
        assert_eq!(k.k_new_max, 1);
    }

    #[test]
    fn k_max_over_categories() {
        let corpus = kw_corpus();
        let history = KeywordHistory::build(&corpus);
        // multi: in c1, k1 new, k2 old → 0.5; in c2, neither new → 0
        let k = score_k(
            corpus.paper("multi").unwrap(),
            &history,
            KeywordNewness::AllPriorYears,
        )
        .unwrap();
        assert_relative_eq!(k.per_category["c1"], 0.5);
        assert_relative_eq!(k.per_category["c2"], 0.0);
        assert_relative_eq!(k.value, 0.5);
    }

    #[test]
    fn k_bounds_and_missing() {
        let corpus = kw_corpus();
        let history = KeywordHistory::build(&corpus);
        assert!(score_k(
            corpus.paper("bare").unwrap(),
            &history,
            KeywordNewness::AllPriorYears
        )
        .is_none());
        // all keywords previously seen in the category → 0
        let old = corpus.paper("old1").unwrap();
        // old1 is itself the first occurrence, so all its keywords are new → 1
        let k = score_k(old, &history, KeywordNewness::AllPriorYears).unwrap();
        assert_relative_eq!(k.value, 1.0);
    }

    #[test]
    fn score_corpus_emits_missing_w_near_boundary() {
        let corpus = toy_corpus(&[
            ("h", 2012, &[("A", 2000), ("B", 2000)]),
            ("p1", 2013, &[("A", 2000), ("B", 2000)]),
            ("late", 2019, &[("A", 2000), ("B", 2000)]),
        ]);
        let table = score_corpus(&corpus, &ScoreOptions::new((2013, 2019))).unwrap();
        let p1 = table.get("p1").unwrap();
        assert!(p1.w.is_some());
        let late = table.get("late").unwrap();
        assert!(late.w.is_none());
        assert!(late.w_missing.as_ref().unwrap().contains("following window"));
    }

    #[test]
    fn score_csv_has_empty_fields_for_missing() {
        let corpus = toy_corpus(&[
            ("h", 2012, &[("A", 2000), ("B", 2000)]),
            ("p1", 2013, &[("A", 2000)]),
        ]);
        let table = score_corpus(&corpus, &ScoreOptions::new((2013, 2013))).unwrap();
        let mut out = Vec::new();
        table.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "paper_id,year,u,u_flag,n_pairs,w,w_category,n_new_pairs,k"
        );
        // single reference → u and w empty, k present
        assert!(lines[1].starts_with("p1,2013,,,,,,,"));
    }
}

//! Naive reference implementations ("oracles") and corpus fuzzing shared by
//! the integration suites. Everything here is written for obviousness, not
//! speed, and deliberately avoids the production code paths it checks.
//!
//! Each test target uses its own subset of these helpers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use novelty_core::corpus::{Corpus, CorpusConfig, DocType, PaperRecord, RawPaper, RawRef};

/// Naive per-year co-citation counts keyed by journal names.
pub struct OracleYear {
    pub pair_counts: HashMap<(String, String), u64>,
    pub marginals: HashMap<String, u64>,
    pub total: u64,
}

fn name_pair(corpus: &Corpus, a: u32, b: u32) -> (String, String) {
    let (x, y) = (
        corpus.journal_name(a).to_string(),
        corpus.journal_name(b).to_string(),
    );
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Count every reference pair of every paper published in year `t`,
/// self-pairs and duplicates included.
pub fn oracle_year_counts(corpus: &Corpus, t: i32) -> OracleYear {
    let mut pair_counts: HashMap<(String, String), u64> = HashMap::new();
    let mut total = 0;
    for paper in corpus.papers().iter().filter(|p| p.year == t) {
        let refs = &paper.references;
        for i in 0..refs.len() {
            for j in (i + 1)..refs.len() {
                let key = name_pair(corpus, refs[i].journal, refs[j].journal);
                *pair_counts.entry(key).or_insert(0) += 1;
                total += 1;
            }
        }
    }
    let mut marginals: HashMap<String, u64> = HashMap::new();
    for ((lo, hi), c) in &pair_counts {
        *marginals.entry(lo.clone()).or_insert(0) += c;
        if lo != hi {
            *marginals.entry(hi.clone()).or_insert(0) += c;
        }
    }
    OracleYear {
        pair_counts,
        marginals,
        total,
    }
}

impl OracleYear {
    pub fn commonness(&self, lo: &str, hi: &str) -> Option<f64> {
        let ni = *self.marginals.get(lo)?;
        let nj = *self.marginals.get(hi)?;
        let key = if lo <= hi {
            (lo.to_string(), hi.to_string())
        } else {
            (hi.to_string(), lo.to_string())
        };
        let nij = self.pair_counts.get(&key).copied().unwrap_or(0);
        Some(nij as f64 * self.total as f64 / (ni as f64 * nj as f64))
    }

    pub fn min_positive_commonness(&self) -> Option<f64> {
        self.pair_counts
            .keys()
            .filter_map(|(lo, hi)| self.commonness(lo, hi))
            .filter(|&c| c > 0.0)
            .fold(None, |acc: Option<f64>, c| {
                Some(acc.map_or(c, |m| m.min(c)))
            })
    }
}

/// Brute-force U: 10th-percentile (nearest-rank) commonness over the paper's
/// reference pairs, negative log, with the year's smallest positive
/// commonness substituted for an all-zero percentile. `None` below two
/// references, `Err(())` when the score is undefined.
pub fn oracle_u(
    corpus: &Corpus,
    paper: &PaperRecord,
    year: &OracleYear,
) -> Result<Option<(f64, bool)>, ()> {
    if paper.references.len() < 2 {
        return Ok(None);
    }
    let refs = &paper.references;
    let mut series = Vec::new();
    for i in 0..refs.len() {
        for j in (i + 1)..refs.len() {
            let (lo, hi) = name_pair(corpus, refs[i].journal, refs[j].journal);
            series.push(year.commonness(&lo, &hi).ok_or(())?);
        }
    }
    series.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = series.len();
    let idx = ((0.1 * m as f64).ceil() as usize).clamp(1, m);
    let mut p10 = series[idx - 1];
    let mut substituted = false;
    if p10 == 0.0 {
        match year.min_positive_commonness() {
            Some(floor) => {
                p10 = floor;
                substituted = true;
            }
            None => return Err(()),
        }
    }
    Ok(Some((-p10.ln(), substituted)))
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Brute-force W for one paper: activity filter, window profiles, newness
/// and re-use gates, then Σ(1 − cosine). `None` mirrors the production
/// missing cases (too few references, following window out of range, empty
/// prior window).
pub fn oracle_w(corpus: &Corpus, paper: &PaperRecord) -> Option<(f64, usize)> {
    let t = paper.year;
    let prior = corpus.config().w_prior_window as i32;
    let following = corpus.config().w_following_window as i32;
    let (_, end) = corpus.config().year_range;
    if t + following > end {
        return None;
    }

    // Activity: reference instances per journal over [t−prior, t−1].
    let mut citation_counts: HashMap<String, u64> = HashMap::new();
    for p in corpus.papers() {
        if p.year < t - prior || p.year > t - 1 {
            continue;
        }
        for r in &p.references {
            *citation_counts
                .entry(corpus.journal_name(r.journal).to_string())
                .or_insert(0) += 1;
        }
    }
    if citation_counts.is_empty() {
        return None;
    }
    let cut = median_of(citation_counts.values().map(|&c| c as f64).collect());
    let retained: BTreeSet<String> = citation_counts
        .iter()
        .filter(|(_, &c)| c as f64 >= cut)
        .map(|(j, _)| j.clone())
        .collect();

    if paper.references.len() < 2 {
        return None;
    }

    // Profiles over the prior window, both journals retained, no self-pairs.
    let mut vectors: HashMap<String, HashMap<String, u64>> = HashMap::new();
    for p in corpus.papers() {
        if p.year < t - prior || p.year > t - 1 {
            continue;
        }
        let refs = &p.references;
        for i in 0..refs.len() {
            for j in (i + 1)..refs.len() {
                let (lo, hi) = name_pair(corpus, refs[i].journal, refs[j].journal);
                if lo == hi || !retained.contains(&lo) || !retained.contains(&hi) {
                    continue;
                }
                *vectors.entry(lo.clone()).or_default().entry(hi.clone()).or_insert(0) += 1;
                *vectors.entry(hi).or_default().entry(lo).or_insert(0) += 1;
            }
        }
    }

    // Distinct co-citation years per journal pair, over the whole corpus.
    let cocited_in = |lo: &str, hi: &str, from: i32, to: i32| -> bool {
        corpus.papers().iter().any(|p| {
            if p.year < from || p.year > to {
                return false;
            }
            let refs = &p.references;
            for i in 0..refs.len() {
                for j in (i + 1)..refs.len() {
                    let (a, b) = name_pair(corpus, refs[i].journal, refs[j].journal);
                    if a == lo && b == hi {
                        return true;
                    }
                }
            }
            false
        })
    };

    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    let refs = &paper.references;
    for i in 0..refs.len() {
        for j in (i + 1)..refs.len() {
            let (lo, hi) = name_pair(corpus, refs[i].journal, refs[j].journal);
            if lo != hi && retained.contains(&lo) && retained.contains(&hi) {
                pairs.insert((lo, hi));
            }
        }
    }

    let cosine = |a: &str, b: &str| -> f64 {
        let empty = HashMap::new();
        let u = vectors.get(a).unwrap_or(&empty);
        let v = vectors.get(b).unwrap_or(&empty);
        let nu: f64 = u.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        let nv: f64 = v.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        if nu == 0.0 || nv == 0.0 {
            return 0.0;
        }
        let dot: f64 = u
            .iter()
            .filter_map(|(k, &c)| v.get(k).map(|&d| (c * d) as f64))
            .sum();
        dot / (nu * nv)
    };

    let mut value = 0.0;
    let mut n_new = 0;
    let min_year = corpus.papers().iter().map(|p| p.year).min().unwrap();
    for (lo, hi) in &pairs {
        if cocited_in(lo, hi, min_year, t - 1) {
            continue;
        }
        if !cocited_in(lo, hi, t + 1, t + following) {
            continue;
        }
        n_new += 1;
        value += 1.0 - cosine(lo, hi);
    }
    Some((value, n_new))
}

/// Brute-force K: per subject category, the share of the paper's keywords
/// that no strictly-earlier paper used in that category; maximum over the
/// paper's categories.
pub fn oracle_k(corpus: &Corpus, paper: &PaperRecord) -> Option<f64> {
    if paper.keywords.is_empty() || paper.subject_categories.is_empty() {
        return None;
    }
    let mut best = 0.0f64;
    for cat in &paper.subject_categories {
        let new = paper
            .keywords
            .iter()
            .filter(|kw| {
                !corpus.papers().iter().any(|q| {
                    q.year < paper.year
                        && q.subject_categories.contains(cat)
                        && q.keywords.contains(kw)
                })
            })
            .count();
        best = best.max(new as f64 / paper.keywords.len() as f64);
    }
    Some(best)
}

/// A small random corpus: ≤ 50 papers, ≤ 10 journals, publication years
/// 2008–2015 inside a 2006–2018 coverage window.
pub fn random_corpus(seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_journals: usize = rng.gen_range(3..=10);
    let n_papers: usize = rng.gen_range(5..=50);
    let records: Vec<RawPaper> = (0..n_papers)
        .map(|i| {
            let year = rng.gen_range(2008..=2015);
            let n_refs = rng.gen_range(0..=6);
            let references = (0..n_refs)
                .map(|_| RawRef {
                    journal: format!("J{}", rng.gen_range(0..n_journals)),
                    year: (year - rng.gen_range(0..8)).max(1980),
                })
                .collect();
            let n_kws = rng.gen_range(0..=3);
            let keywords = (0..n_kws)
                .map(|_| format!("kw{}", rng.gen_range(0..10)))
                .collect();
            let n_cats = rng.gen_range(1..=2);
            let subject_categories = (0..n_cats)
                .map(|_| format!("c{}", rng.gen_range(0..3)))
                .collect();
            RawPaper {
                paper_id: format!("p{i:03}"),
                year,
                doc_type: DocType::Article,
                journal: format!("J{}", rng.gen_range(0..n_journals)),
                subject_categories,
                keywords,
                references,
            }
        })
        .collect();
    Corpus::from_raw(records, CorpusConfig::new((2006, 2018)))
        .expect("random corpus is valid")
        .0
}

/// Rows of synthetic per-paper analysis data with a planted Poisson effect;
/// returns (u values, counts, years).
pub fn planted_poisson_rows(
    seed: u64,
    n: usize,
    intercept: f64,
    u_coef: f64,
) -> (Vec<f64>, Vec<f64>, Vec<i32>) {
    use rand_distr::{Distribution, Poisson};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut us = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut years = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.gen_range(-1.5..1.5);
        let mu = (intercept + u_coef * u).exp();
        let y = Poisson::new(mu.max(1e-12)).unwrap().sample(&mut rng);
        us.push(u);
        ys.push(y);
        years.push(2013 + (i % 3) as i32);
    }
    (us, ys, years)
}

/// Deterministic map from (year, count) pairs to a BTreeMap, handy for
/// comparing histograms.
pub fn histogram(values: &[u64]) -> BTreeMap<u64, usize> {
    let mut h = BTreeMap::new();
    for &v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h
}

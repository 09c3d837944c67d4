//! Seeded synthetic corpora with planted effects, used to exercise the full
//! pipeline end to end and to check that the regressions recover known
//! coefficients.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::cocite::{build_year_pair_counts, PairCountConfig};
use crate::corpus::{Corpus, CorpusConfig, DocType, RawPaper, RawRef, Tag, TagRecord, TagTable};
use crate::error::{Error, Result};
use crate::scores::score_u;

/// Planted log-linear tag model: E[count] = exp(intercept + u_coef·U).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagGen {
    pub intercept: f64,
    pub u_coef: f64,
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub n_papers: usize,
    pub n_journals: usize,
    /// Publication years, starting at `start_year`.
    pub n_years: usize,
    pub start_year: i32,
    pub refs_per_paper: usize,
    /// Whether a paper's references must hit distinct journals.
    pub distinct_journals: bool,
    /// Journals are split into communities; references stay within the
    /// citing journal's community except with `cross_community_prob`.
    pub n_communities: usize,
    pub cross_community_prob: f64,
    pub keywords_per_paper: usize,
    /// Initial keyword pool size; the pool grows each year so later papers
    /// can use keywords unseen in earlier years.
    pub keyword_pool: usize,
    pub n_categories: usize,
    /// Share of papers that receive a tag record.
    pub tag_fraction: f64,
    /// Tags absent from this map get intercept −1.0 and no U effect.
    pub tag_model: BTreeMap<Tag, TagGen>,
}

impl SynthParams {
    pub fn new(n_papers: usize, n_journals: usize, n_years: usize, refs_per_paper: usize) -> Self {
        SynthParams {
            n_papers,
            n_journals,
            n_years,
            start_year: 2000,
            refs_per_paper,
            distinct_journals: true,
            n_communities: 2,
            cross_community_prob: 0.1,
            keywords_per_paper: 4,
            keyword_pool: 50,
            n_categories: 2,
            tag_fraction: 1.0,
            tag_model: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_papers == 0 || self.n_journals == 0 || self.n_years == 0 {
            return Err(Error::Invalid(
                "papers, journals and years must all be positive".into(),
            ));
        }
        if self.distinct_journals && self.refs_per_paper > self.n_journals {
            return Err(Error::Invalid(format!(
                "cannot draw {} distinct journals from a pool of {}",
                self.refs_per_paper, self.n_journals
            )));
        }
        if self.n_communities == 0 || self.n_communities > self.n_journals {
            return Err(Error::Invalid("invalid community count".into()));
        }
        if !(0.0..=1.0).contains(&self.cross_community_prob)
            || !(0.0..=1.0).contains(&self.tag_fraction)
        {
            return Err(Error::Invalid("probabilities must lie in [0, 1]".into()));
        }
        if self.n_categories == 0 || self.keyword_pool == 0 {
            return Err(Error::Invalid(
                "need at least one category and one keyword".into(),
            ));
        }
        Ok(())
    }
}

fn community_of(journal: usize, n_communities: usize) -> usize {
    journal % n_communities
}

/// Draw a reference journal: usually from `own` community, occasionally from
/// another; falls back to any unchosen journal if the target community is
/// exhausted.
fn draw_journal(
    rng: &mut ChaCha8Rng,
    params: &SynthParams,
    own_community: usize,
    chosen: &BTreeSet<usize>,
) -> usize {
    let target = if params.n_communities > 1 && rng.gen::<f64>() < params.cross_community_prob {
        let mut c = rng.gen_range(0..params.n_communities - 1);
        if c >= own_community {
            c += 1;
        }
        c
    } else {
        own_community
    };
    let eligible = |j: &usize| !params.distinct_journals || !chosen.contains(j);
    let in_target: Vec<usize> = (0..params.n_journals)
        .filter(|&j| community_of(j, params.n_communities) == target)
        .filter(eligible)
        .collect();
    let pool = if in_target.is_empty() {
        (0..params.n_journals).filter(eligible).collect()
    } else {
        in_target
    };
    pool[rng.gen_range(0..pool.len())]
}

/// Generate a corpus plus matching tag table, fully determined by the seed.
///
/// Tag counts are Poisson draws whose log-mean is linear in the paper's own
/// U score (computed with the production scorer), so planted coefficients
/// are recoverable by the study regressions.
pub fn generate_synthetic_corpus(seed: u64, params: &SynthParams) -> Result<(Corpus, TagTable)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let end_year = params.start_year + params.n_years as i32 - 1;
    let keyword_growth = (params.keyword_pool / 10).max(1);

    let mut records = Vec::with_capacity(params.n_papers);
    for i in 0..params.n_papers {
        let year_offset = rng.gen_range(0..params.n_years);
        let year = params.start_year + year_offset as i32;
        let doc_roll: f64 = rng.gen();
        let doc_type = if doc_roll < 0.8 {
            DocType::Article
        } else if doc_roll < 0.95 {
            DocType::Review
        } else {
            DocType::Other
        };
        let journal = rng.gen_range(0..params.n_journals);
        let own_community = community_of(journal, params.n_communities);

        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        let mut references = Vec::with_capacity(params.refs_per_paper);
        for _ in 0..params.refs_per_paper {
            let j = draw_journal(&mut rng, params, own_community, &chosen);
            chosen.insert(j);
            let ref_year = rng.gen_range((year - 9).max(1980)..=year);
            references.push(RawRef {
                journal: format!("J{j:04}"),
                year: ref_year,
            });
        }

        let available = params.keyword_pool + year_offset * keyword_growth;
        let mut keywords: BTreeSet<String> = BTreeSet::new();
        let want = params.keywords_per_paper.min(available);
        while keywords.len() < want {
            keywords.insert(format!("kw{:04}", rng.gen_range(0..available)));
        }

        let n_cats = 1 + rng.gen_range(0..2usize.min(params.n_categories));
        let mut categories: BTreeSet<String> = BTreeSet::new();
        while categories.len() < n_cats {
            categories.insert(format!("cat{:02}", rng.gen_range(0..params.n_categories)));
        }

        records.push(RawPaper {
            paper_id: format!("p{i:06}"),
            year,
            doc_type,
            journal: format!("J{journal:04}"),
            subject_categories: categories.into_iter().collect(),
            keywords: keywords.into_iter().collect(),
            references,
        });
    }

    let config = CorpusConfig::new((params.start_year, end_year));
    let (corpus, _) = Corpus::from_raw(records, config)?;

    // U for every paper, from the production scorer, year by year.
    let pair_cfg = PairCountConfig::default();
    let mut u_by_paper: BTreeMap<String, f64> = BTreeMap::new();
    for t in params.start_year..=end_year {
        if corpus.papers_in_year(t).next().is_none() {
            continue;
        }
        let counts = build_year_pair_counts(&corpus, t, pair_cfg)?;
        for paper in corpus.papers_in_year(t) {
            if let Some(u) = score_u(paper, &counts, pair_cfg)? {
                u_by_paper.insert(paper.paper_id.clone(), u.value);
            }
        }
    }

    let mut tags = TagTable::default();
    let poisson_count = |rng: &mut ChaCha8Rng, mu: f64| -> u32 {
        let mu = mu.clamp(1e-9, 1e6);
        Poisson::new(mu).unwrap().sample(rng) as u32
    };
    for paper in corpus.papers() {
        if rng.gen::<f64>() >= params.tag_fraction {
            continue;
        }
        let u = u_by_paper.get(&paper.paper_id).copied().unwrap_or(0.0);
        let mut tag_counts = BTreeMap::new();
        for &tag in &Tag::ALL {
            let gen = params
                .tag_model
                .get(&tag)
                .copied()
                .unwrap_or(TagGen { intercept: -1.0, u_coef: 0.0 });
            let mu = (gen.intercept + gen.u_coef * u).exp();
            let count = poisson_count(&mut rng, mu);
            if count > 0 {
                tag_counts.insert(tag, count);
            }
        }
        let fm_score_sum = 1 + poisson_count(&mut rng, 1.5);
        let citation_count = poisson_count(&mut rng, (2.5 + 0.1 * u).exp());
        tags.insert(TagRecord {
            paper_id: paper.paper_id.clone(),
            tag_counts,
            fm_score_sum,
            citation_count,
        })?;
    }

    Ok((corpus, tags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        let params = SynthParams::new(200, 30, 5, 6);
        let (c1, t1) = generate_synthetic_corpus(11, &params).unwrap();
        let (c2, t2) = generate_synthetic_corpus(11, &params).unwrap();
        assert!(c1.same_contents(&c2));
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        t1.write_jsonl(&mut b1).unwrap();
        t2.write_jsonl(&mut b2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn different_seed_different_corpus() {
        let params = SynthParams::new(200, 30, 5, 6);
        let (c1, _) = generate_synthetic_corpus(11, &params).unwrap();
        let (c2, _) = generate_synthetic_corpus(12, &params).unwrap();
        assert!(!c1.same_contents(&c2));
    }

    #[test]
    fn distinct_journal_infeasibility_is_error() {
        let params = SynthParams::new(10, 3, 2, 5);
        assert!(matches!(
            generate_synthetic_corpus(1, &params),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn respects_sizes_and_reference_counts() {
        let params = SynthParams::new(150, 25, 4, 7);
        let (corpus, tags) = generate_synthetic_corpus(3, &params).unwrap();
        assert_eq!(corpus.papers().len(), 150);
        assert_eq!(tags.len(), 150);
        for p in corpus.papers() {
            assert_eq!(p.references.len(), 7);
            let mut journals: Vec<_> = p.references.iter().map(|r| r.journal).collect();
            journals.sort_unstable();
            journals.dedup();
            assert_eq!(journals.len(), 7, "references must hit distinct journals");
            assert!((2000..=2003).contains(&p.year));
        }
    }

    #[test]
    fn tag_fraction_leaves_papers_untagged() {
        let mut params = SynthParams::new(400, 25, 4, 5);
        params.tag_fraction = 0.5;
        let (corpus, tags) = generate_synthetic_corpus(3, &params).unwrap();
        assert!(tags.len() < corpus.papers().len());
        assert!(tags.len() > corpus.papers().len() / 4);
    }

    #[test]
    fn cross_community_pairs_are_rare() {
        let params = SynthParams::new(500, 40, 3, 6);
        let (corpus, _) = generate_synthetic_corpus(5, &params).unwrap();
        let mut within = 0usize;
        let mut across = 0usize;
        for p in corpus.papers() {
            for r in &p.references {
                let name = corpus.journal_name(r.journal);
                let j: usize = name[1..].parse().unwrap();
                if community_of(j, params.n_communities)
                    == community_of(
                        corpus.journal_name(p.journal)[1..].parse().unwrap(),
                        params.n_communities,
                    )
                {
                    within += 1;
                } else {
                    across += 1;
                }
            }
        }
        assert!(across * 3 < within, "within={within} across={across}");
    }
}

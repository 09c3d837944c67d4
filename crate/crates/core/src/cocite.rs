//! Journal co-citation index: per-year pair counts, windowed co-citation
//! profiles, the journal activity filter and pair-history queries.
//!
//! Everything here is built once over an immutable [`Corpus`] and then
//! queried read-only.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, JournalIdx, PaperRecord};
use crate::error::{Error, Result};
use crate::order_stats::median;

/// Unordered journal pair in canonical (lo ≤ hi) form. Self-pairs are legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JournalPair {
    lo: JournalIdx,
    hi: JournalIdx,
}

impl JournalPair {
    pub fn new(a: JournalIdx, b: JournalIdx) -> Self {
        if a <= b {
            JournalPair { lo: a, hi: b }
        } else {
            JournalPair { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> JournalIdx {
        self.lo
    }

    pub fn hi(&self) -> JournalIdx {
        self.hi
    }

    pub fn is_self_pair(&self) -> bool {
        self.lo == self.hi
    }
}

/// Counting conventions for reference-pair enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCountConfig {
    /// Count pairs of references published in the same journal.
    pub count_self_pairs: bool,
    /// Count every reference pair, even when several pairs of one citing
    /// paper map to the same journal pair.
    pub count_duplicate_pairs: bool,
}

impl Default for PairCountConfig {
    fn default() -> Self {
        PairCountConfig {
            count_self_pairs: true,
            count_duplicate_pairs: true,
        }
    }
}

/// Enumerate the journal pairs contributed by one citing paper under the
/// given conventions.
pub fn paper_journal_pairs(paper: &PaperRecord, cfg: PairCountConfig) -> Vec<JournalPair> {
    let refs = &paper.references;
    let mut pairs = Vec::new();
    for i in 0..refs.len() {
        for j in (i + 1)..refs.len() {
            let pair = JournalPair::new(refs[i].journal, refs[j].journal);
            if pair.is_self_pair() && !cfg.count_self_pairs {
                continue;
            }
            pairs.push(pair);
        }
    }
    if !cfg.count_duplicate_pairs {
        pairs.sort();
        pairs.dedup();
    }
    pairs
}

/// Co-citation counts for a single year: pair counts, per-journal marginals
/// and the year total. A self-pair counts once toward its journal's marginal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearPairCounts {
    pub year: i32,
    pub pair_counts: HashMap<JournalPair, u64>,
    pub journal_marginals: HashMap<JournalIdx, u64>,
    pub total: u64,
}

impl YearPairCounts {
    pub fn pair_count(&self, a: JournalIdx, b: JournalIdx) -> u64 {
        self.pair_counts
            .get(&JournalPair::new(a, b))
            .copied()
            .unwrap_or(0)
    }

    pub fn marginal(&self, j: JournalIdx) -> u64 {
        self.journal_marginals.get(&j).copied().unwrap_or(0)
    }

    /// Ratio of the pair's co-citation count to what independent citation of
    /// the two journals would predict; symmetric, 0 for never-co-cited pairs.
    pub fn commonness(&self, i: JournalIdx, j: JournalIdx) -> Result<f64> {
        let ni = self.marginal(i);
        let nj = self.marginal(j);
        if ni == 0 {
            return Err(Error::UndefinedCommonness {
                journal: format!("#{i}"),
                year: self.year,
            });
        }
        if nj == 0 {
            return Err(Error::UndefinedCommonness {
                journal: format!("#{j}"),
                year: self.year,
            });
        }
        let nij = self.pair_count(i, j);
        Ok(nij as f64 * self.total as f64 / (ni as f64 * nj as f64))
    }

    /// Smallest positive commonness among pairs co-cited this year.
    pub fn min_positive_commonness(&self) -> Option<f64> {
        self.pair_counts
            .keys()
            .filter_map(|p| self.commonness(p.lo, p.hi).ok())
            .filter(|&c| c > 0.0)
            .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.min(c))))
    }
}

/// Count every reference pair of every paper published in year `t`.
pub fn build_year_pair_counts(
    corpus: &Corpus,
    t: i32,
    cfg: PairCountConfig,
) -> Result<YearPairCounts> {
    let (start, end) = corpus.config().year_range;
    if t < start || t > end {
        return Err(Error::YearOutOfRange { year: t, start, end });
    }
    let mut pair_counts: HashMap<JournalPair, u64> = HashMap::new();
    for paper in corpus.papers_in_year(t) {
        for pair in paper_journal_pairs(paper, cfg) {
            *pair_counts.entry(pair).or_insert(0) += 1;
        }
    }
    let mut journal_marginals: HashMap<JournalIdx, u64> = HashMap::new();
    let mut total = 0;
    for (pair, &c) in &pair_counts {
        total += c;
        *journal_marginals.entry(pair.lo).or_insert(0) += c;
        if !pair.is_self_pair() {
            *journal_marginals.entry(pair.hi).or_insert(0) += c;
        }
    }
    Ok(YearPairCounts {
        year: t,
        pair_counts,
        journal_marginals,
        total,
    })
}

/// Which journals pass the activity cut over a citation window: a journal is
/// retained iff it was cited at least as often as the median journal.
#[derive(Debug, Clone)]
pub struct JournalActivity {
    pub window: (i32, i32),
    pub citation_counts: HashMap<JournalIdx, u64>,
    pub retained: HashSet<JournalIdx>,
}

impl JournalActivity {
    pub fn is_retained(&self, j: JournalIdx) -> bool {
        self.retained.contains(&j)
    }
}

/// Count reference instances per journal over the window preceding
/// `focal_year` and drop the strictly-below-median half.
pub fn journal_activity_filter(corpus: &Corpus, focal_year: i32) -> Result<JournalActivity> {
    let window = prior_window(corpus, focal_year);
    let mut citation_counts: HashMap<JournalIdx, u64> = HashMap::new();
    for paper in corpus.papers_in_window(window.0, window.1) {
        for r in &paper.references {
            *citation_counts.entry(r.journal).or_insert(0) += 1;
        }
    }
    if citation_counts.is_empty() {
        return Err(Error::EmptyWindow(window.0, window.1));
    }
    let counts: Vec<f64> = citation_counts.values().map(|&c| c as f64).collect();
    let cut = median(&counts);
    let retained = citation_counts
        .iter()
        .filter(|(_, &c)| c as f64 >= cut)
        .map(|(&j, _)| j)
        .collect();
    Ok(JournalActivity {
        window,
        citation_counts,
        retained,
    })
}

fn prior_window(corpus: &Corpus, focal_year: i32) -> (i32, i32) {
    let w = corpus.config().w_prior_window as i32;
    (focal_year - w, focal_year - 1)
}

/// Sparse symmetric journal→journal co-citation vectors over a year window,
/// restricted to journals passing the activity filter.
#[derive(Debug, Clone)]
pub struct CoCitationProfile {
    pub window: (i32, i32),
    pub vectors: HashMap<JournalIdx, HashMap<JournalIdx, u64>>,
}

impl CoCitationProfile {
    pub fn vector(&self, j: JournalIdx) -> Option<&HashMap<JournalIdx, u64>> {
        self.vectors.get(&j)
    }
}

/// Aggregate co-citation counts over the window preceding `focal_year`,
/// keeping only journal pairs with both journals retained.
pub fn build_cocitation_profiles(
    corpus: &Corpus,
    focal_year: i32,
    activity: &JournalActivity,
    cfg: PairCountConfig,
) -> Result<CoCitationProfile> {
    let window = prior_window(corpus, focal_year);
    let (start, end) = corpus.config().year_range;
    if window.1 < start || window.0 > end {
        return Err(Error::EmptyWindow(window.0, window.1));
    }
    let mut vectors: HashMap<JournalIdx, HashMap<JournalIdx, u64>> = HashMap::new();
    for paper in corpus.papers_in_window(window.0, window.1) {
        for pair in paper_journal_pairs(paper, cfg) {
            if pair.is_self_pair() {
                continue;
            }
            if !activity.is_retained(pair.lo) || !activity.is_retained(pair.hi) {
                continue;
            }
            *vectors.entry(pair.lo).or_default().entry(pair.hi).or_insert(0) += 1;
            *vectors.entry(pair.hi).or_default().entry(pair.lo).or_insert(0) += 1;
        }
    }
    Ok(CoCitationProfile { window, vectors })
}

/// For each journal pair, the sorted distinct years in which any paper
/// co-cited it. Supports the before/window queries of the novelty gates.
#[derive(Debug, Clone, Default)]
pub struct PairHistory {
    years: HashMap<JournalPair, Vec<i32>>,
}

impl PairHistory {
    /// Build over the full corpus range.
    pub fn build(corpus: &Corpus) -> PairHistory {
        let mut years: HashMap<JournalPair, Vec<i32>> = HashMap::new();
        for paper in corpus.papers() {
            // Distinct pairs per paper; one citing paper establishes a
            // co-citation year regardless of how many reference pairs map
            // onto the same journal pair.
            let mut pairs = paper_journal_pairs(paper, PairCountConfig::default());
            pairs.sort();
            pairs.dedup();
            for pair in pairs {
                let entry = years.entry(pair).or_default();
                if entry.last() != Some(&paper.year) {
                    entry.push(paper.year);
                }
            }
        }
        for v in years.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        PairHistory { years }
    }

    /// True iff the pair was co-cited by any paper published in a year
    /// strictly before `before`.
    pub fn cocited_before(&self, pair: JournalPair, before: i32) -> bool {
        self.years
            .get(&pair)
            .and_then(|v| v.first())
            .is_some_and(|&first| first < before)
    }

    /// True iff the pair was co-cited in the inclusive window `[lo, hi]`.
    pub fn cocited_in(&self, pair: JournalPair, lo: i32, hi: i32) -> bool {
        self.years
            .get(&pair)
            .is_some_and(|v| v.binary_search(&lo).map_or_else(|i| i < v.len() && v[i] <= hi, |_| true))
    }

    /// First year the pair was co-cited, if ever.
    pub fn first_year(&self, pair: JournalPair) -> Option<i32> {
        self.years.get(&pair).and_then(|v| v.first()).copied()
    }
}

// ---------------------------------------------------------------------------
// Persistent index
// ---------------------------------------------------------------------------

const SNAPSHOT_MAGIC: &[u8; 4] = b"NCIX";
const SNAPSHOT_VERSION: u32 = 1;

/// Year-partitioned co-citation index with a persistable snapshot form.
#[derive(Debug, Clone)]
pub struct CociteIndex {
    pub config: PairCountConfig,
    pub journals: Vec<String>,
    /// One entry per built year, ascending.
    pub years: BTreeMap<i32, YearPairCounts>,
}

impl CociteIndex {
    /// Build pair counts for every year in `[lo, hi]`. Years are independent
    /// and built in parallel.
    pub fn build(corpus: &Corpus, lo: i32, hi: i32, config: PairCountConfig) -> Result<CociteIndex> {
        if lo > hi {
            return Err(Error::Invalid(format!("bad year range {lo}:{hi}")));
        }
        let built: Vec<Result<YearPairCounts>> = (lo..=hi)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&t| build_year_pair_counts(corpus, t, config))
            .collect();
        let mut years = BTreeMap::new();
        for counts in built {
            let counts = counts?;
            years.insert(counts.year, counts);
        }
        Ok(CociteIndex {
            config,
            journals: (0..corpus.journal_count() as u32)
                .map(|i| corpus.journal_name(i).to_string())
                .collect(),
            years,
        })
    }

    pub fn year(&self, t: i32) -> Option<&YearPairCounts> {
        self.years.get(&t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        self.write(&mut out)?;
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        out.write_all(&[
            self.config.count_self_pairs as u8,
            self.config.count_duplicate_pairs as u8,
        ])?;
        out.write_all(&(self.journals.len() as u32).to_le_bytes())?;
        for j in &self.journals {
            let bytes = j.as_bytes();
            out.write_all(&(bytes.len() as u32).to_le_bytes())?;
            out.write_all(bytes)?;
        }
        // year manifest
        out.write_all(&(self.years.len() as u32).to_le_bytes())?;
        for &t in self.years.keys() {
            out.write_all(&t.to_le_bytes())?;
        }
        for counts in self.years.values() {
            out.write_all(&counts.year.to_le_bytes())?;
            out.write_all(&counts.total.to_le_bytes())?;
            let mut pairs: Vec<(&JournalPair, &u64)> = counts.pair_counts.iter().collect();
            pairs.sort();
            out.write_all(&(pairs.len() as u64).to_le_bytes())?;
            for (pair, &c) in pairs {
                out.write_all(&pair.lo.to_le_bytes())?;
                out.write_all(&pair.hi.to_le_bytes())?;
                out.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CociteIndex> {
        let bytes = std::fs::read(path)?;
        Self::read(&mut bytes.as_slice())
    }

    pub fn read<R: Read>(input: &mut R) -> Result<CociteIndex> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic bytes".into()));
        }
        let version = read_u32(input)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported format version {version} (expected {SNAPSHOT_VERSION})"
            )));
        }
        let mut flags = [0u8; 2];
        input.read_exact(&mut flags)?;
        let config = PairCountConfig {
            count_self_pairs: flags[0] != 0,
            count_duplicate_pairs: flags[1] != 0,
        };
        let n_journals = read_u32(input)? as usize;
        let mut journals = Vec::with_capacity(n_journals);
        for _ in 0..n_journals {
            let len = read_u32(input)? as usize;
            let mut buf = vec![0u8; len];
            input.read_exact(&mut buf)?;
            journals.push(
                String::from_utf8(buf).map_err(|_| Error::Snapshot("bad journal name".into()))?,
            );
        }
        let n_years = read_u32(input)? as usize;
        let mut manifest = Vec::with_capacity(n_years);
        for _ in 0..n_years {
            manifest.push(read_i32(input)?);
        }
        let mut years = BTreeMap::new();
        for expected in manifest {
            let year = read_i32(input)?;
            if year != expected {
                return Err(Error::Snapshot(format!(
                    "year {year} does not match manifest entry {expected}"
                )));
            }
            let total = read_u64(input)?;
            let n_pairs = read_u64(input)? as usize;
            let mut pair_counts = HashMap::with_capacity(n_pairs);
            for _ in 0..n_pairs {
                let lo = read_u32(input)?;
                let hi = read_u32(input)?;
                let c = read_u64(input)?;
                pair_counts.insert(JournalPair { lo, hi }, c);
            }
            let mut journal_marginals: HashMap<JournalIdx, u64> = HashMap::new();
            let mut check_total = 0;
            for (pair, &c) in &pair_counts {
                check_total += c;
                *journal_marginals.entry(pair.lo).or_insert(0) += c;
                if !pair.is_self_pair() {
                    *journal_marginals.entry(pair.hi).or_insert(0) += c;
                }
            }
            if check_total != total {
                return Err(Error::Snapshot(format!(
                    "year {year}: stored total {total} != sum of pair counts {check_total}"
                )));
            }
            years.insert(
                year,
                YearPairCounts {
                    year,
                    pair_counts,
                    journal_marginals,
                    total,
                },
            );
        }
        Ok(CociteIndex {
            config,
            journals,
            years,
        })
    }

    /// Audit dump: `year,journal_lo,journal_hi,count`, sorted.
    pub fn dump_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", "journal_lo", "journal_hi", "count"])?;
        for counts in self.years.values() {
            let mut rows: Vec<(&str, &str, u64)> = counts
                .pair_counts
                .iter()
                .map(|(p, &c)| {
                    (
                        self.journals[p.lo as usize].as_str(),
                        self.journals[p.hi as usize].as_str(),
                        c,
                    )
                })
                .map(|(a, b, c)| if a <= b { (a, b, c) } else { (b, a, c) })
                .collect();
            rows.sort();
            for (lo, hi, c) in rows {
                w.write_record([&counts.year.to_string(), lo, hi, &c.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_i32<R: Read>(input: &mut R) -> Result<i32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(i32::from_le_bytes(buf))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

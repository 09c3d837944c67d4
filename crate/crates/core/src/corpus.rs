//! Corpus and tag-table ingestion.
//!
//! Corpora arrive as UTF-8 line-delimited JSON, one paper per line. Ingestion
//! normalizes keywords, interns journal identifiers, applies the reference
//! year floor and produces an immutable [`Corpus`] plus an [`IngestReport`]
//! accounting for everything that was dropped.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Interned journal identifier; index into [`Corpus::journals`].
pub type JournalIdx = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Review,
    Other,
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DocType::Article => "article",
            DocType::Review => "review",
            DocType::Other => "other",
        };
        f.write_str(s)
    }
}

/// One cited reference, resolved to a journal and a publication year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefRecord {
    pub journal: JournalIdx,
    pub pub_year: i32,
}

/// One publication with journal-resolved references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub year: i32,
    pub doc_type: DocType,
    pub journal: JournalIdx,
    /// Sorted, deduplicated.
    pub subject_categories: Vec<String>,
    /// Lowercased, trimmed, internal whitespace collapsed; sorted, deduplicated.
    pub keywords: Vec<String>,
    pub references: Vec<RefRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// References published before this year are dropped at ingestion.
    pub min_ref_year: i32,
    /// Inclusive publication-year coverage of the corpus.
    pub year_range: (i32, i32),
    /// Years of co-citation history used for profiles and the activity filter.
    pub w_prior_window: u32,
    /// Years after publication in which a new pair must be re-used.
    pub w_following_window: u32,
}

impl CorpusConfig {
    pub fn new(year_range: (i32, i32)) -> Self {
        CorpusConfig {
            min_ref_year: 1980,
            year_range,
            w_prior_window: 3,
            w_following_window: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.year_range.0 > self.year_range.1 {
            return Err(Error::Invalid(format!(
                "year_range start {} exceeds end {}",
                self.year_range.0, self.year_range.1
            )));
        }
        if self.w_prior_window == 0 || self.w_following_window == 0 {
            return Err(Error::Invalid("windows must be >= 1".into()));
        }
        Ok(())
    }
}

/// What ingestion dropped and why.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub papers_read: usize,
    pub papers_kept: usize,
    pub papers_dropped_out_of_range: usize,
    pub refs_read: usize,
    pub refs_dropped_before_floor: usize,
    pub refs_dropped_no_journal: usize,
}

impl IngestReport {
    /// Plain-text summary suitable for logging alongside the outputs.
    pub fn summary(&self) -> String {
        format!(
            "papers read: {}\npapers kept: {}\npapers dropped (year outside range): {}\n\
             references read: {}\nreferences dropped (published before floor): {}\n\
             references dropped (no journal): {}\n",
            self.papers_read,
            self.papers_kept,
            self.papers_dropped_out_of_range,
            self.refs_read,
            self.refs_dropped_before_floor,
            self.refs_dropped_no_journal,
        )
    }
}

/// Immutable citation corpus. Built once by ingestion, then shared freely
/// across readers.
#[derive(Debug, Clone)]
pub struct Corpus {
    config: CorpusConfig,
    /// Sorted by `paper_id`.
    papers: Vec<PaperRecord>,
    journals: Vec<String>,
    journal_lookup: HashMap<String, JournalIdx>,
    /// Publication year → indexes into `papers`.
    by_year: BTreeMap<i32, Vec<usize>>,
}

impl Corpus {
    pub fn config(&self) -> &CorpusConfig {
        &self.config
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn journal_name(&self, idx: JournalIdx) -> &str {
        &self.journals[idx as usize]
    }

    pub fn journal_count(&self) -> usize {
        self.journals.len()
    }

    pub fn journal_index(&self, name: &str) -> Option<JournalIdx> {
        self.journal_lookup.get(name).copied()
    }

    pub fn paper(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.papers
            .binary_search_by(|p| p.paper_id.as_str().cmp(paper_id))
            .ok()
            .map(|i| &self.papers[i])
    }

    /// Papers published in year `t`, in `paper_id` order.
    pub fn papers_in_year(&self, t: i32) -> impl Iterator<Item = &PaperRecord> {
        self.by_year
            .get(&t)
            .into_iter()
            .flatten()
            .map(move |&i| &self.papers[i])
    }

    /// Papers published in the inclusive window `[lo, hi]`.
    pub fn papers_in_window(&self, lo: i32, hi: i32) -> impl Iterator<Item = &PaperRecord> {
        self.by_year
            .range(lo..=hi)
            .flat_map(move |(_, idxs)| idxs.iter().map(move |&i| &self.papers[i]))
    }

    /// Assemble a corpus from already-parsed raw records, applying the same
    /// normalization and filters as file ingestion.
    pub fn from_raw(records: Vec<RawPaper>, config: CorpusConfig) -> Result<(Corpus, IngestReport)> {
        config.validate()?;
        let mut report = IngestReport::default();
        let mut journals: Vec<String> = Vec::new();
        let mut journal_lookup: HashMap<String, JournalIdx> = HashMap::new();
        let mut papers: Vec<PaperRecord> = Vec::with_capacity(records.len());
        let mut seen: HashMap<String, ()> = HashMap::new();

        for raw in records {
            report.papers_read += 1;
            if raw.paper_id.is_empty() {
                return Err(Error::Invalid("empty paper_id".into()));
            }
            if seen.insert(raw.paper_id.clone(), ()).is_some() {
                return Err(Error::DuplicatePaper(raw.paper_id));
            }
            if raw.year < config.year_range.0 || raw.year > config.year_range.1 {
                report.papers_dropped_out_of_range += 1;
                continue;
            }
            let mut intern = |name: &str| -> JournalIdx {
                if let Some(&idx) = journal_lookup.get(name) {
                    return idx;
                }
                let idx = journals.len() as JournalIdx;
                journals.push(name.to_string());
                journal_lookup.insert(name.to_string(), idx);
                idx
            };
            let journal = intern(&raw.journal);
            let mut references = Vec::with_capacity(raw.references.len());
            for r in &raw.references {
                report.refs_read += 1;
                if r.journal.is_empty() {
                    report.refs_dropped_no_journal += 1;
                    continue;
                }
                if r.year < config.min_ref_year {
                    report.refs_dropped_before_floor += 1;
                    continue;
                }
                references.push(RefRecord {
                    journal: intern(&r.journal),
                    pub_year: r.year,
                });
            }
            let mut subject_categories = raw.subject_categories;
            subject_categories.sort();
            subject_categories.dedup();
            let mut keywords: Vec<String> = raw
                .keywords
                .iter()
                .map(|k| normalize_keyword(k))
                .filter(|k| !k.is_empty())
                .collect();
            keywords.sort();
            keywords.dedup();
            papers.push(PaperRecord {
                paper_id: raw.paper_id,
                year: raw.year,
                doc_type: raw.doc_type,
                journal,
                subject_categories,
                keywords,
                references,
            });
        }
        if report.papers_read == 0 {
            return Err(Error::EmptyInput("corpus has no records".into()));
        }
        report.papers_kept = papers.len();
        papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
        let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, p) in papers.iter().enumerate() {
            by_year.entry(p.year).or_default().push(i);
        }
        Ok((
            Corpus {
                config,
                papers,
                journals,
                journal_lookup,
                by_year,
            },
            report,
        ))
    }

    /// Canonical line-delimited serialization: papers in `paper_id` order,
    /// one normalized JSON object per line. Re-ingesting the output yields
    /// an equal corpus.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.papers {
            let raw = RawPaper {
                paper_id: p.paper_id.clone(),
                year: p.year,
                doc_type: p.doc_type,
                journal: self.journal_name(p.journal).to_string(),
                subject_categories: p.subject_categories.clone(),
                keywords: p.keywords.clone(),
                references: p
                    .references
                    .iter()
                    .map(|r| RawRef {
                        journal: self.journal_name(r.journal).to_string(),
                        year: r.pub_year,
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut out, &raw)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex-encoded. Stable across
    /// ingestion order and input formatting.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        self.write_jsonl(&mut bytes).expect("in-memory write");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hex_encode(&hasher.finalize())
    }

    /// Structural equality ignoring journal interning order.
    pub fn same_contents(&self, other: &Corpus) -> bool {
        self.digest() == other.digest() && self.config == other.config
    }
}

pub(crate) fn hex_encode(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn normalize_keyword(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Wire format of one corpus line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPaper {
    pub paper_id: String,
    pub year: i32,
    pub doc_type: DocType,
    pub journal: String,
    #[serde(default)]
    pub subject_categories: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub references: Vec<RawRef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRef {
    pub journal: String,
    pub year: i32,
}

/// Ingest a line-delimited corpus file.
pub fn ingest_corpus(path: &Path, config: CorpusConfig) -> Result<(Corpus, IngestReport)> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPaper = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        records.push(raw);
    }
    Corpus::from_raw(records, config)
}

// ---------------------------------------------------------------------------
// Tags
// ---------------------------------------------------------------------------

/// The nine reviewer tags, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Confirmation,
    GoodForTeaching,
    NegativeNull,
    Refutation,
    Controversial,
    Hypothesis,
    NewFinding,
    NovelDrugTarget,
    TechnicalAdvance,
}

impl Tag {
    pub const ALL: [Tag; 9] = [
        Tag::Confirmation,
        Tag::GoodForTeaching,
        Tag::NegativeNull,
        Tag::Refutation,
        Tag::Controversial,
        Tag::Hypothesis,
        Tag::NewFinding,
        Tag::NovelDrugTarget,
        Tag::TechnicalAdvance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Tag::Confirmation => "confirmation",
            Tag::GoodForTeaching => "good_for_teaching",
            Tag::NegativeNull => "negative_null",
            Tag::Refutation => "refutation",
            Tag::Controversial => "controversial",
            Tag::Hypothesis => "hypothesis",
            Tag::NewFinding => "new_finding",
            Tag::NovelDrugTarget => "novel_drug_target",
            Tag::TechnicalAdvance => "technical_advance",
        }
    }

    pub fn from_name(name: &str) -> Option<Tag> {
        Tag::ALL.iter().copied().find(|t| t.name() == name)
    }

    fn vocabulary() -> String {
        Tag::ALL
            .iter()
            .map(|t| t.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reviewer assessment counts for one paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagRecord {
    pub paper_id: String,
    pub tag_counts: BTreeMap<Tag, u32>,
    pub fm_score_sum: u32,
    pub citation_count: u32,
}

impl TagRecord {
    pub fn count(&self, tag: Tag) -> u32 {
        self.tag_counts.get(&tag).copied().unwrap_or(0)
    }
}

/// Tag records keyed by `paper_id`.
#[derive(Debug, Clone, Default)]
pub struct TagTable {
    records: BTreeMap<String, TagRecord>,
}

impl TagTable {
    pub fn get(&self, paper_id: &str) -> Option<&TagRecord> {
        self.records.get(paper_id)
    }

    pub fn contains(&self, paper_id: &str) -> bool {
        self.records.contains_key(paper_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TagRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, record: TagRecord) -> Result<()> {
        if self.records.contains_key(&record.paper_id) {
            return Err(Error::DuplicatePaper(record.paper_id.clone()));
        }
        self.records.insert(record.paper_id.clone(), record);
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in self.records.values() {
            let raw = RawTagLine {
                paper_id: r.paper_id.clone(),
                tags: r
                    .tag_counts
                    .iter()
                    .filter(|(_, &c)| c > 0)
                    .map(|(t, &c)| (t.name().to_string(), c as i64))
                    .collect(),
                fm_score_sum: r.fm_score_sum as i64,
                citations: r.citation_count as i64,
            };
            serde_json::to_writer(&mut out, &raw)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTagLine {
    paper_id: String,
    #[serde(default)]
    tags: BTreeMap<String, i64>,
    #[serde(default)]
    fm_score_sum: i64,
    #[serde(default)]
    citations: i64,
}

/// Ingest a line-delimited tag file. Unknown tag names are schema errors;
/// negative counts are validation errors.
pub fn ingest_tags(path: &Path) -> Result<TagTable> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut table = TagTable::default();
    let mut any = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        any = true;
        let raw: RawTagLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        let mut tag_counts = BTreeMap::new();
        for (name, count) in &raw.tags {
            let tag = Tag::from_name(name).ok_or_else(|| Error::UnknownTag {
                name: name.clone(),
                valid: Tag::vocabulary(),
            })?;
            if *count < 0 {
                return Err(Error::Invalid(format!(
                    "negative count {count} for tag {name:?} (paper {})",
                    raw.paper_id
                )));
            }
            tag_counts.insert(tag, *count as u32);
        }
        if raw.fm_score_sum < 0 {
            return Err(Error::Invalid(format!(
                "negative fm_score_sum for paper {}",
                raw.paper_id
            )));
        }
        if raw.citations < 0 {
            return Err(Error::Invalid(format!(
                "negative citation count for paper {}",
                raw.paper_id
            )));
        }
        table.insert(TagRecord {
            paper_id: raw.paper_id,
            tag_counts,
            fm_score_sum: raw.fm_score_sum as u32,
            citation_count: raw.citations as u32,
        })?;
    }
    if !any {
        return Err(Error::EmptyInput("tag file has no records".into()));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn paper_line(id: &str, year: i32, refs: &[(&str, i32)]) -> String {
        let refs: Vec<String> = refs
            .iter()
            .map(|(j, y)| format!(r#"{{"journal":"{j}","year":{y}}}"#))
            .collect();
        format!(
            r#"{{"paper_id":"{id}","year":{year},"doc_type":"article","journal":"J","subject_categories":["bio"],"keywords":["Kw"],"references":[{}]}}"#,
            refs.join(",")
        )
    }

    #[test]
    fn ref_year_floor_drops_and_logs() {
        let f = write_lines(&[&paper_line("p1", 2013, &[("A", 1975), ("B", 1990)])]);
        let (corpus, report) =
            ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))).unwrap();
        let p = corpus.paper("p1").unwrap();
        assert_eq!(p.references.len(), 1);
        assert_eq!(corpus.journal_name(p.references[0].journal), "B");
        assert_eq!(report.refs_dropped_before_floor, 1);
        assert_eq!(report.refs_read, 2);
    }

    #[test]
    fn empty_reference_list_is_kept() {
        let f = write_lines(&[&paper_line("p1", 2013, &[])]);
        let (corpus, _) = ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))).unwrap();
        assert!(corpus.paper("p1").unwrap().references.is_empty());
    }

    #[test]
    fn duplicate_paper_id_is_conflict() {
        let f = write_lines(&[
            &paper_line("p1", 2013, &[]),
            &paper_line("p1", 2014, &[]),
        ]);
        let err = ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))).unwrap_err();
        match err {
            Error::DuplicatePaper(id) => assert_eq!(id, "p1"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_error() {
        let f = write_lines(&[]);
        assert!(matches!(
            ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_lines(&[&paper_line("p1", 2013, &[]), "{not json"]);
        match ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn keywords_are_normalized() {
        let f = write_lines(&[
            r#"{"paper_id":"p1","year":2013,"doc_type":"article","journal":"J","keywords":["  Gene   Editing ","gene editing","CRISPR"],"references":[]}"#,
        ]);
        let (corpus, _) = ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))).unwrap();
        assert_eq!(
            corpus.paper("p1").unwrap().keywords,
            vec!["crispr".to_string(), "gene editing".to_string()]
        );
    }

    #[test]
    fn references_without_journal_are_dropped() {
        let f = write_lines(&[&paper_line("p1", 2013, &[("", 1999), ("A", 1999)])]);
        let (corpus, report) =
            ingest_corpus(f.path(), CorpusConfig::new((2010, 2016))).unwrap();
        assert_eq!(corpus.paper("p1").unwrap().references.len(), 1);
        assert_eq!(report.refs_dropped_no_journal, 1);
    }

    #[test]
    fn round_trip_is_identity() {
        let f = write_lines(&[
            &paper_line("p2", 2014, &[("B", 2001), ("A", 1999)]),
            &paper_line("p1", 2013, &[("A", 1990)]),
        ]);
        let config = CorpusConfig::new((2010, 2016));
        let (corpus, _) = ingest_corpus(f.path(), config).unwrap();
        let mut bytes = Vec::new();
        corpus.write_jsonl(&mut bytes).unwrap();
        let f2 = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f2.path(), &bytes).unwrap();
        let (corpus2, _) = ingest_corpus(f2.path(), config).unwrap();
        assert!(corpus.same_contents(&corpus2));
        let mut bytes2 = Vec::new();
        corpus2.write_jsonl(&mut bytes2).unwrap();
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn tag_ingestion_echoes_counts() {
        let f = write_lines(&[
            r#"{"paper_id":"p1","tags":{"new_finding":2},"fm_score_sum":5,"citations":10}"#,
        ]);
        let table = ingest_tags(f.path()).unwrap();
        let r = table.get("p1").unwrap();
        assert_eq!(r.count(Tag::NewFinding), 2);
        assert_eq!(r.count(Tag::Confirmation), 0);
        assert_eq!(r.fm_score_sum, 5);
        assert_eq!(r.citation_count, 10);
    }

    #[test]
    fn unknown_tag_name_is_schema_error() {
        let f = write_lines(&[r#"{"paper_id":"p1","tags":{"breakthrough":1}}"#]);
        match ingest_tags(f.path()).unwrap_err() {
            Error::UnknownTag { name, valid } => {
                assert_eq!(name, "breakthrough");
                assert!(valid.contains("new_finding"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_citation_count_is_validation_error() {
        let f = write_lines(&[r#"{"paper_id":"p1","tags":{},"citations":-1}"#]);
        assert!(matches!(ingest_tags(f.path()), Err(Error::Invalid(_))));
    }
}

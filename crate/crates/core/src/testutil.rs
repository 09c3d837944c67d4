//! Shared helpers for unit tests.

use crate::corpus::{Corpus, CorpusConfig, DocType, JournalIdx, RawPaper, RawRef};

/// Build a corpus from `(paper_id, year, references)` triples. Every paper
/// is an article in journal "SELF" with one category and one keyword.
pub fn toy_corpus(papers: &[(&str, i32, &[(&str, i32)])]) -> Corpus {
    let records = papers
        .iter()
        .map(|(id, year, refs)| RawPaper {
            paper_id: id.to_string(),
            year: *year,
            doc_type: DocType::Article,
            journal: "SELF".into(),
            subject_categories: vec!["cat".into()],
            keywords: vec!["kw".into()],
            references: refs
                .iter()
                .map(|(j, y)| RawRef {
                    journal: j.to_string(),
                    year: *y,
                })
                .collect(),
        })
        .collect();
    let years: Vec<i32> = papers.iter().map(|(_, y, _)| *y).collect();
    let lo = *years.iter().min().unwrap();
    let hi = *years.iter().max().unwrap();
    Corpus::from_raw(records, CorpusConfig::new((lo.min(2000), hi.max(2020))))
        .unwrap()
        .0
}

pub fn idx(corpus: &Corpus, name: &str) -> JournalIdx {
    corpus.journal_index(name).unwrap()
}

//! Regenerates the bundled synthetic fixture under tests/fixtures/.
//!
//! The tag table is generated with planted Poisson log-linear effects of U
//! (new_finding +0.8 per unit of U, confirmation −0.8), so regression tests
//! can check recovered signs and magnitudes against known truth.

use std::fs::File;
use std::path::Path;

use novelty_core::corpus::Tag;
use novelty_core::study::{generate_synthetic_corpus, SynthParams, TagGen};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut params = SynthParams::new(600, 36, 10, 6);
    params.start_year = 2006;
    params.tag_fraction = 0.65;
    params.tag_model.insert(
        Tag::NewFinding,
        TagGen {
            intercept: 0.3,
            u_coef: 0.8,
        },
    );
    params.tag_model.insert(
        Tag::Confirmation,
        TagGen {
            intercept: 0.3,
            u_coef: -0.8,
        },
    );
    let (corpus, tags) = generate_synthetic_corpus(20210417, &params).expect("generate");
    let mut f = File::create(dir.join("corpus.jsonl")).expect("corpus.jsonl");
    corpus.write_jsonl(&mut f).expect("write corpus");
    let mut f = File::create(dir.join("tags.jsonl")).expect("tags.jsonl");
    tags.write_jsonl(&mut f).expect("write tags");
    println!("fixture written to {}", dir.display());
}

use std::path::Path;

use sft_torsion::corpus::{bundled, invalid, render};
use sft_torsion::{parse_document, run, AnalysisRequest, Command};

#[test]
fn corpus_files_match_the_models() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut expected: Vec<String> = Vec::new();
    for (name, doc) in bundled().into_iter().chain(invalid()) {
        let file = format!("{name}.json");
        let on_disk = std::fs::read_to_string(dir.join(&file)).unwrap_or_default();
        assert_eq!(on_disk, render(&doc), "{file} is stale; run `cargo run -p sft-torsion --example write_corpus`");
        assert_eq!(parse_document(&on_disk).unwrap(), doc);
        expected.push(file);
    }
    let mut present: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    present.sort();
    expected.sort();
    assert_eq!(present, expected);
}

#[test]
fn every_bundled_document_validates() {
    for (name, document) in bundled() {
        let r = run(&AnalysisRequest { command: Command::Validate, document, seed: None });
        assert_eq!(r.exit_code, 0, "{name}: {:?}", r.error);
    }
    for (name, document) in invalid() {
        let r = run(&AnalysisRequest { command: Command::Validate, document, seed: None });
        assert_eq!(r.exit_code, 2, "{name}");
    }
}

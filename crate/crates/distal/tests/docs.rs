//! The worked specs and descriptor examples shipped in docs/ must stay valid.

use std::path::PathBuf;

use distal::experiment::ExperimentSpec;
use distal::families::ParamFamily;

fn docs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn json_blocks(markdown: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<String> = None;
    for line in markdown.lines() {
        match (&mut current, line.trim()) {
            (None, "```json") => current = Some(String::new()),
            (Some(_), "```") => out.extend(current.take()),
            (Some(buf), _) => {
                buf.push_str(line);
                buf.push('\n');
            }
            _ => {}
        }
    }
    out
}

#[test]
fn worked_specs_parse() {
    let mut count = 0;
    for entry in std::fs::read_dir(docs().join("specs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).unwrap();
            let spec = ExperimentSpec::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            spec.family.validate().unwrap();
            count += 1;
        }
    }
    assert!(count >= 4);
}

#[test]
fn descriptor_examples_parse() {
    let text = std::fs::read_to_string(docs().join("family-descriptors.md")).unwrap();
    let blocks = json_blocks(&text);
    assert_eq!(blocks.len(), 3);
    for b in blocks {
        let family = ParamFamily::from_json(&b).unwrap_or_else(|e| panic!("{e}\n{b}"));
        family.validate().unwrap();
    }
}

#[test]
fn mismatched_engine_reports_pointer() {
    let text = std::fs::read_to_string(docs().join("specs/omin1d-x-less-y.json")).unwrap();
    let bad = text.replacen("\"omin1d\"", "\"padic\"", 1);
    let err = ExperimentSpec::from_json(&bad).unwrap_err();
    assert_eq!(err.pointer, "/engine");
}

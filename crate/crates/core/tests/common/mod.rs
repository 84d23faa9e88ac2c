#![allow(dead_code)]

use std::path::{Path, PathBuf};

use d4l_core::analysis::{analyze_instance, discover_sources, parse_sources, InstanceAnalysis};
use d4l_core::context::{ContextBuilder, ContextConfig};
use d4l_core::dataset::{load_dataset, BenchmarkInstance};
use d4l_core::log_extractor::LogExtractor;
use d4l_core::rules::RulesConfig;
use d4l_core::source_model::SourceUnit;
use d4l_core::taxonomy::Taxonomy;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

pub fn dataset() -> Vec<BenchmarkInstance> {
    load_dataset(&fixtures().join("fixtures.d4l.jsonl"), &Taxonomy::builtin()).unwrap()
}

pub fn units(dir: &str) -> Vec<SourceUnit> {
    let root = fixtures().join(dir);
    let files = discover_sources(&root, &[]).unwrap();
    let (units, errors) = parse_sources(&root, &files);
    assert!(errors.is_empty(), "{errors:?}");
    units
}

/// Every fixture instance with its analysis against the fixture sources.
pub fn analyzed() -> Vec<(BenchmarkInstance, InstanceAnalysis)> {
    let units = units("java");
    let builder = ContextBuilder::new(&units);
    let extractor = LogExtractor::default();
    dataset()
        .into_iter()
        .map(|i| {
            let a = analyze_instance(&builder, &extractor, &i, &ContextConfig::default(), &RulesConfig::default())
                .unwrap_or_else(|e| panic!("{}: {e}", i.id));
            (i, a)
        })
        .collect()
}

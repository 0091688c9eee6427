//! The BodySense example system: domain model, use cases, mapping table and a
//! corpus of step sentences with their expected constraints.

use std::collections::BTreeMap;

use crate::domain::{parse_model, DomainModel};
use crate::lexicon::Lexicon;
use crate::rucm::{parse_document, UseCaseSpec};
use crate::uctm::{build_merged, generate_constraints, ConstraintRef, Uctm};

pub const BODYSENSE_MODEL: &str = include_str!("../fixtures/bodysense/bodysense.dm");
pub const BODYSENSE_RUCM: &str = include_str!("../fixtures/bodysense/bodysense.rucm");
pub const BODYSENSE_MAP: &str = include_str!("../fixtures/bodysense/bodysense.map");
pub const BODYSENSE_CORPUS: &str = include_str!("../fixtures/bodysense/corpus.txt");

pub fn bodysense_model() -> DomainModel {
    parse_model(BODYSENSE_MODEL).expect("bundled model parses")
}

pub const BODYSENSE_ROOT: &str = "Identify Occupancy Status";

pub fn bodysense_specs() -> Vec<UseCaseSpec> {
    parse_document(BODYSENSE_RUCM).0
}

/// Generated constraints for every step of the bundled use cases.
pub fn bodysense_constraints() -> BTreeMap<String, ConstraintRef> {
    let model = bodysense_model();
    let lex = Lexicon::bundled();
    let mut table = BTreeMap::new();
    for s in bodysense_specs() {
        let (t, _) = generate_constraints(&s, &model, &lex, &BTreeMap::new()).expect("no manual constraints");
        table.extend(t);
    }
    table
}

/// The merged test model of Identify Occupancy Status.
pub fn bodysense_merged() -> Uctm {
    build_merged(&bodysense_specs(), &bodysense_constraints(), BODYSENSE_ROOT).expect("bundled use cases build").0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub sentence: String,
    pub expected: String,
}

/// Tab separated `id sentence expected` lines; `#` starts a comment line.
pub fn parse_corpus(text: &str) -> Vec<CorpusEntry> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let mut cols = l.splitn(3, '\t');
            Some(CorpusEntry {
                id: cols.next()?.trim().to_string(),
                sentence: cols.next()?.trim().to_string(),
                expected: cols.next()?.trim().to_string(),
            })
        })
        .collect()
}

pub fn bodysense_corpus() -> Vec<CorpusEntry> {
    parse_corpus(BODYSENSE_CORPUS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_load() {
        let m = bodysense_model();
        assert_eq!(m.system_class(), "BodySense");
        assert_eq!(bodysense_corpus().len(), 13);
    }
}

use ucgen_core::constraint_gen::{generate_formula, FormulaOutcome};
use ucgen_core::fixtures;
use ucgen_core::ocl::normalize_ws;
use ucgen_core::Lexicon;

#[test]
fn corpus_constraints_match_expected() {
    let model = fixtures::bodysense_model();
    let lex = Lexicon::bundled();
    let mut wrong = Vec::new();
    for e in fixtures::bodysense_corpus() {
        let got = match generate_formula(&e.sentence, &model, &lex) {
            FormulaOutcome::Generated { formula, .. } => formula.render().unwrap(),
            FormulaOutcome::NeedsManual { reason, .. } => format!("manual: {reason}"),
        };
        if normalize_ws(&got) != normalize_ws(&e.expected) {
            wrong.push(format!("{}: got {got}", e.id));
        }
    }
    assert!(wrong.is_empty(), "{wrong:#?}");
}

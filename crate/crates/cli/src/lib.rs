//! Pipeline commands behind the `ucgen` binary. Every command writes plain
//! text artifacts so that runs can be compared file by file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ucgen_core::constraint_gen::{generate_formula, FormulaOutcome};
use ucgen_core::domain::{check_completeness, parse_model};
use ucgen_core::emitter::{abstract_test_case, apply_mapping, dedupe, parse_mapping_table, EmitOptions};
use ucgen_core::fixtures::parse_corpus;
use ucgen_core::lexicon::parse_lexicon;
use ucgen_core::rucm::{has_errors, parse_document, split_sentences, validate_document, Diagnostic, UseCaseSpec};
use ucgen_core::scenario::{
    coverage_report, dump_scenarios, generate_scenarios_and_inputs, stress_visits, Criterion, GenConfig,
};
use ucgen_core::solver::SolverBounds;
use ucgen_core::uctm::{
    build_merged, generate_constraints, parse_manual_constraints, required_constraints, top_level_use_cases,
    ConstraintRef, UctmError,
};
use ucgen_core::{DomainModel, Lexicon};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rucm: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub constraints: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub use_case: Option<String>,
    pub criterion: Criterion,
    pub loop_bound: usize,
    pub max_iterations: usize,
    pub jobs: usize,
    pub bounds: SolverBounds,
    pub disable_coverage_termination: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rucm: Vec::new(),
            model: None,
            lexicon: None,
            mapping: None,
            constraints: None,
            corpus: None,
            use_case: None,
            criterion: Criterion::Branch,
            loop_bound: 1,
            max_iterations: 10,
            jobs: 0,
            bounds: SolverBounds::default(),
            disable_coverage_termination: false,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            loop_bound: self.loop_bound,
            max_iterations: self.max_iterations,
            criterion: self.criterion,
            bounds: self.bounds.clone(),
            disable_coverage_termination: self.disable_coverage_termination,
            jobs: self.jobs,
        }
    }

    fn check_paths(&self) -> Result<()> {
        let optional = [&self.model, &self.lexicon, &self.mapping, &self.constraints, &self.corpus];
        for p in self.rucm.iter().chain(optional.into_iter().flatten()) {
            if !p.is_file() {
                bail!("input file not found: {}", p.display());
            }
        }
        Ok(())
    }
}

/// Text printed by a command and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn load_model(cfg: &RunConfig) -> Result<DomainModel> {
    let p = cfg.model.as_ref().context("--model is required")?;
    parse_model(&read(p)?).with_context(|| format!("parsing {}", p.display()))
}

fn load_lexicon(cfg: &RunConfig) -> Result<Lexicon> {
    match &cfg.lexicon {
        Some(p) => parse_lexicon(&read(p)?).with_context(|| format!("parsing {}", p.display())),
        None => Ok(Lexicon::bundled()),
    }
}

/// Parses every rucm file; diagnostics are prefixed with the file name.
fn load_specs(cfg: &RunConfig) -> Result<(Vec<UseCaseSpec>, Vec<String>, bool)> {
    let mut specs = Vec::new();
    let mut diags = Vec::new();
    let mut errors = false;
    for p in &cfg.rucm {
        let (s, d) = parse_document(&read(p)?);
        let mut d: Vec<Diagnostic> = d;
        d.extend(validate_document(&s));
        errors |= has_errors(&d);
        diags.extend(d.iter().map(|d| format!("{}: {d}", p.display())));
        specs.extend(s);
    }
    Ok((specs, diags, errors))
}

fn load_manual(cfg: &RunConfig) -> Result<BTreeMap<String, String>> {
    match &cfg.constraints {
        Some(p) => parse_manual_constraints(&read(p)?).with_context(|| format!("parsing {}", p.display())),
        None => Ok(BTreeMap::new()),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

/// Parses the inputs and reports diagnostics and entities the domain model
/// lacks. Exit code 1 when either is present.
pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome> {
    cfg.check_paths()?;
    let model = load_model(cfg)?;
    let lex = load_lexicon(cfg)?;
    let (specs, diags, errors) = load_specs(cfg)?;
    let mut out = String::new();
    for d in &diags {
        writeln!(out, "{d}")?;
    }
    let report = check_completeness(&model, &specs, &lex);
    for m in &report.missing_entities {
        writeln!(out, "missing entity {} (\"{}\", line {})", m.name, m.phrase, m.line)?;
    }
    writeln!(
        out,
        "use cases {}, matched phrases {}, missing entities {}",
        specs.len(),
        report.matched,
        report.missing_entities.len()
    )?;
    let code = i32::from(errors || !report.missing_entities.is_empty());
    Ok(Outcome { code, output: out })
}

fn score_line(key: &str, text: &str, model: &DomainModel, lex: &Lexicon) -> String {
    let scores: Vec<String> = split_sentences(text)
        .iter()
        .filter_map(|s| match generate_formula(s, model, lex) {
            FormulaOutcome::Generated { scores, .. } => Some(scores),
            FormulaOutcome::NeedsManual { .. } => None,
        })
        .flatten()
        .map(|s| format!("{:.4}", s.final_score))
        .collect();
    format!("score {key} {}", scores.join(" "))
}

/// Generates a constraint for every step that needs one and writes them to
/// `constraints.ocl`, together with `genocl.txt` listing scores, manual
/// overrides and sentences that need a manual constraint. With a corpus file,
/// each corpus sentence is processed instead.
pub fn cmd_genocl(cfg: &RunConfig) -> Result<Outcome> {
    cfg.check_paths()?;
    let model = load_model(cfg)?;
    let lex = load_lexicon(cfg)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut constraints = String::new();
    let mut report = String::new();
    let mut generated = 0;
    let mut manual_needed = 0;

    if let Some(corpus) = &cfg.corpus {
        for e in parse_corpus(&read(corpus)?) {
            match generate_formula(&e.sentence, &model, &lex) {
                FormulaOutcome::Generated { formula, scores } => {
                    generated += 1;
                    writeln!(constraints, "{} := {}", e.id, formula.render()?)?;
                    let s: Vec<String> = scores.iter().map(|s| format!("{:.4}", s.final_score)).collect();
                    writeln!(report, "score {} {}", e.id, s.join(" "))?;
                }
                FormulaOutcome::NeedsManual { reason, .. } => {
                    manual_needed += 1;
                    writeln!(report, "manual {} {reason}: {}", e.id, e.sentence)?;
                }
            }
        }
    } else {
        let (specs, diags, errors) = load_specs(cfg)?;
        if errors {
            let mut out = diags.join("\n");
            out.push('\n');
            return Ok(Outcome { code: 1, output: out });
        }
        let manual = load_manual(cfg)?;
        let mut table: BTreeMap<String, ConstraintRef> = BTreeMap::new();
        for s in &specs {
            let (t, needed) = generate_constraints(s, &model, &lex, &manual)?;
            for n in needed {
                manual_needed += 1;
                writeln!(report, "manual {} {}: {}", n.key, n.reason, n.sentence)?;
            }
            for (key, text) in required_constraints(s) {
                if manual.contains_key(&key) {
                    writeln!(report, "override {key}")?;
                } else if t.get(&key).is_some_and(|c| c.ocl.is_some()) {
                    generated += 1;
                    writeln!(report, "{}", score_line(&key, &text, &model, &lex))?;
                }
            }
            table.extend(t);
        }
        for (k, c) in &table {
            match &c.ocl {
                Some(f) => writeln!(constraints, "{k} := {}", f.render()?)?,
                None => writeln!(constraints, "# {k} needs a manual constraint: {}", c.text)?,
            }
        }
    }
    write(&cfg.out, "constraints.ocl", &constraints)?;
    write(&cfg.out, "genocl.txt", &report)?;
    let output = format!("generated {generated}, manual {manual_needed}\n");
    Ok(Outcome { code: i32::from(manual_needed > 0), output })
}

fn slug(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' }).collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

/// Builds the test model of every top level use case (or the one named in
/// the config), generates scenarios and writes one directory per use case:
/// `model.uctm`, `scenarios.scn`, `coverage.txt`, per scenario object
/// diagrams and abstract tests, deduplicated executable tests and
/// `unmapped.txt`.
pub fn cmd_gentests(cfg: &RunConfig) -> Result<Outcome> {
    cfg.check_paths()?;
    let model = load_model(cfg)?;
    let lex = load_lexicon(cfg)?;
    let (specs, diags, errors) = load_specs(cfg)?;
    if errors {
        let mut out = diags.join("\n");
        out.push('\n');
        return Ok(Outcome { code: 1, output: out });
    }
    let manual = load_manual(cfg)?;
    let mapping = match &cfg.mapping {
        Some(p) => Some(parse_mapping_table(&read(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => None,
    };
    let mut table = BTreeMap::new();
    for s in &specs {
        table.extend(generate_constraints(s, &model, &lex, &manual)?.0);
    }
    let roots = match &cfg.use_case {
        Some(u) => vec![u.clone()],
        None => top_level_use_cases(&specs),
    };
    let gen = cfg.gen_config();
    let opts = EmitOptions::default();
    let mut out = String::new();
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    for root in &roots {
        let (tm, warnings) = match build_merged(&specs, &table, root) {
            Ok(r) => r,
            Err(UctmError::MissingConstraints(keys)) => {
                bail!("steps without constraints (run genocl and complete them): {}", keys.join(", "))
            }
            Err(e) => return Err(e.into()),
        };
        let dir = cfg.out.join(slug(root));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut report = generate_scenarios_and_inputs(&tm, &model, &gen);
        report.warnings.extend(warnings);
        write(&dir, "model.uctm", &tm.dump())?;
        write(&dir, "scenarios.scn", &dump_scenarios(&tm, &report))?;
        write(&dir, "coverage.txt", &coverage_report(&report))?;

        let mut executable = Vec::new();
        for (i, g) in report.feasible.iter().enumerate() {
            let n = i + 1;
            write(&dir, &format!("scenario_{n:03}.odg"), &g.diagram.dump())?;
            let abs = abstract_test_case(&tm, &g.scenario, &g.diagram, &model, &lex, &opts)?;
            write(&dir, &format!("scenario_{n:03}.atc"), &abs.render())?;
            if let Some(m) = &mapping {
                executable.push(apply_mapping(&abs, m));
            }
        }
        let mut unmapped = String::new();
        let kept = dedupe(executable);
        for (i, t) in kept.iter().enumerate() {
            write(&dir, &format!("test_{:03}.etc", i + 1), &t.render())?;
            for u in &t.unmapped {
                writeln!(unmapped, "test_{:03}\t{}\t{}", i + 1, u.op, u.payload)?;
            }
        }
        if mapping.is_some() {
            write(&dir, "unmapped.txt", &unmapped)?;
        }
        writeln!(
            out,
            "{root}: {} scenarios, {} infeasible, {} executable tests, {}/{} targets covered",
            report.feasible.len(),
            report.infeasible.len(),
            kept.len(),
            report.targets.intersection(&report.covered).count(),
            report.targets.len()
        )?;
        for w in &report.warnings {
            writeln!(out, "{root}: warning: {w}")?;
        }
    }
    Ok(Outcome { code: 0, output: out })
}

/// Node visit counts of the worst case test model with `n` nodes for every
/// loop bound in `loop_bounds`, as `n,T,visits` CSV.
pub fn cmd_stress(n: usize, loop_bounds: std::ops::RangeInclusive<usize>) -> String {
    let mut out = String::from("n,T,visits\n");
    for t in loop_bounds {
        out.push_str(&format!("{n},{t},{}\n", stress_visits(n, t)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slug_lowercases_and_joins() {
        assert_eq!(slug("Identify Occupancy Status"), "identify-occupancy-status");
        assert_eq!(slug(" Self  Diagnosis."), "self-diagnosis");
    }

    #[test]
    fn stress_csv() {
        assert_eq!(cmd_stress(5, 0..=2), "n,T,visits\n5,0,5\n5,1,30\n5,2,155\n");
        assert_eq!(cmd_stress(1, 0..=0), "n,T,visits\n1,0,1\n");
        assert_eq!(cmd_stress(3, 1..=1), "n,T,visits\n3,1,12\n");
    }

    #[test]
    fn missing_input_is_an_error() {
        let cfg = RunConfig { rucm: vec![PathBuf::from("/nonexistent.rucm")], ..Default::default() };
        assert!(cmd_check(&cfg).is_err());
    }
}

//! The property suites run over a corpus plus generated pairs.

use std::collections::BTreeSet;
use std::fmt;

use super::checks::{
    check_subject_reduction, completeness_witnesses, soundness_with_monitor, CheckOutcome, SubjectReductionOutcome,
};
use super::corpus::{Corpus, CorpusEntry};
use super::gen::Generator;
use crate::model::{Monitor, Process, SessionType, VerdictKind};
use crate::parser::{render_process, render_type};
use crate::semantics::{explore, Configuration, ExecContext, StuckClass, StuckReport, ValueDomain};
use crate::synthesis::synthesize;
use crate::typecheck::{explain_failure, NegRule, TypingEnvs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub depth: usize,
    pub seed: u64,
    /// Generated well-typed pairs added to the soundness and blame suites.
    pub generated: usize,
    pub subject_reduction_samples: usize,
    /// First depth tried by the completeness search; doubled up to `max_completeness_depth`.
    pub completeness_start: usize,
    pub max_completeness_depth: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            depth: 16,
            seed: 42,
            generated: 200,
            subject_reduction_samples: 500,
            completeness_start: 8,
            max_completeness_depth: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionReport {
    pub name: &'static str,
    pub checked: usize,
    pub failures: Vec<String>,
    pub note: String,
}

impl SectionReport {
    pub(crate) fn new(name: &'static str) -> Self {
        Self { name, checked: 0, failures: Vec::new(), note: String::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} checked", self.name, self.checked)?;
        if !self.note.is_empty() {
            write!(f, "; {}", self.note)?;
        }
        f.write_str(")")?;
        for failure in &self.failures {
            write!(f, "\n  {failure}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteReport {
    pub sections: Vec<SectionReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(SectionReport::passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sections {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

fn monitor_for(e: &CorpusEntry) -> Monitor {
    e.monitor.clone().unwrap_or_else(|| crate::synthesis::synthesize_unchecked(&e.session_type))
}

/// Well-typed corpus entries followed by generated pairs.
fn well_typed_cases(corpus: &Corpus, cfg: &SuiteConfig) -> Vec<(String, Process, Monitor)> {
    let mut out: Vec<_> = corpus.well_typed().map(|e| (e.name.clone(), e.process.clone(), monitor_for(e))).collect();
    let mut g = Generator::new(cfg.seed);
    for i in 0..cfg.generated {
        let (p, s) = g.well_typed_pair();
        let m = synthesize(&s).expect("generated types are well-formed");
        out.push((format!("generated #{i}: {} : {}", render_process(&p), render_type(&s)), p, m));
    }
    out
}

fn precondition_issues(corpus: &Corpus) -> Vec<String> {
    corpus
        .well_typed()
        .filter(|e| !e.session_type.has_trivial_assertions())
        .map(|e| format!("{}: type carries assertions; soundness needs an assertion-free type", e.name))
        .collect()
}

/// No verdict blames a well-typed process.
pub fn soundness_suite(corpus: &Corpus, cfg: &SuiteConfig) -> SectionReport {
    let mut r = SectionReport::new("soundness");
    r.failures = precondition_issues(corpus);
    let mut states = 0;
    for (name, p, m) in well_typed_cases(corpus, cfg) {
        r.checked += 1;
        match soundness_with_monitor(&p, &m, cfg.depth, &ValueDomain::default()) {
            CheckOutcome::Pass { states: n } => states += n,
            CheckOutcome::Counterexample(w) => r.failures.push(format!("{name}: {w}")),
        }
    }
    r.note = format!("depth {}, {states} states", cfg.depth);
    r
}

/// Under adversarial inputs, a well-typed process only gets stuck on an
/// environment label violation.
pub fn blame_suite(corpus: &Corpus, cfg: &SuiteConfig) -> SectionReport {
    let mut r = SectionReport::new("blame");
    r.failures = precondition_issues(corpus);
    let ctx = ExecContext::with_domains(ValueDomain::extended());
    let mut env_verdicts = 0;
    for (name, p, m) in well_typed_cases(corpus, cfg) {
        r.checked += 1;
        let e = explore(&Configuration::new(p, m), cfg.depth, &ctx);
        env_verdicts += e.reports.iter().filter(|s| s.verdict() == Some(VerdictKind::NoELabel)).count();
        if let Some(bad) =
            e.reports.iter().find(|s| s.config.process != Process::Nil && s.verdict() != Some(VerdictKind::NoELabel))
        {
            r.failures.push(format!("{name}: {bad}"));
        }
    }
    r.note = format!("depth {}, {env_verdicts} environment verdicts", cfg.depth);
    r
}

/// Outcome of the completeness search for one corpus entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryWitnesses {
    pub name: String,
    /// Depth at which witnesses were found (or the last depth tried).
    pub depth: usize,
    pub witnesses: Vec<StuckReport>,
    pub root_rule: Option<NegRule>,
    pub chain: Vec<NegRule>,
}

impl EntryWitnesses {
    pub fn classes(&self) -> BTreeSet<StuckClass> {
        self.witnesses.iter().map(|w| w.class).collect()
    }
}

/// Witness search with depth escalation, for one pair.
pub fn witnesses_for(p: &Process, s: &SessionType, cfg: &SuiteConfig) -> (usize, Vec<StuckReport>) {
    let mut depth = cfg.completeness_start.clamp(1, cfg.max_completeness_depth);
    loop {
        let found = completeness_witnesses(p, s, depth, &ValueDomain::default());
        if !found.is_empty() || depth >= cfg.max_completeness_depth {
            return (depth, found);
        }
        depth = (depth * 2).min(cfg.max_completeness_depth);
    }
}

pub fn completeness_details(corpus: &Corpus, cfg: &SuiteConfig) -> Vec<EntryWitnesses> {
    corpus
        .ill_typed()
        .filter(|e| e.dead_code_free)
        .map(|e| {
            let (depth, witnesses) = witnesses_for(&e.process, &e.session_type, cfg);
            let report = explain_failure(&TypingEnvs::empty(), &e.process, &e.session_type);
            EntryWitnesses {
                name: e.name.clone(),
                depth,
                witnesses,
                root_rule: report.as_ref().map(|r| r.rule),
                chain: report.map(|r| r.chain).unwrap_or_default(),
            }
        })
        .collect()
}

/// Every ill-typed, dead-code-free entry gets stuck without environment blame.
pub fn completeness_suite(corpus: &Corpus, cfg: &SuiteConfig) -> (SectionReport, Vec<EntryWitnesses>) {
    let mut r = SectionReport::new("weak completeness");
    let details = completeness_details(corpus, cfg);
    for d in &details {
        r.checked += 1;
        if d.witnesses.is_empty() {
            r.failures.push(format!("{}: no witness up to depth {}", d.name, d.depth));
            continue;
        }
        let expected = corpus.get(&d.name).and_then(|e| e.class);
        if let Some(c) = expected.filter(|c| !d.classes().contains(c)) {
            let got: Vec<_> = d.classes().iter().map(|c| c.name()).collect();
            r.failures.push(format!("{}: expected a class {c} witness, found {}", d.name, got.join(", ")));
        }
    }
    r.note = format!("max depth {}", details.iter().map(|d| d.depth).max().unwrap_or(0));
    (r, details)
}

/// Witnessed stuck classes cover the full taxonomy and every negated rule
/// occurs in some failing derivation.
pub fn coverage_section(details: &[EntryWitnesses]) -> SectionReport {
    let mut r = SectionReport::new("coverage");
    let classes: BTreeSet<StuckClass> = details.iter().flat_map(EntryWitnesses::classes).collect();
    let roots: BTreeSet<NegRule> = details.iter().filter_map(|d| d.root_rule).collect();
    let chained: BTreeSet<NegRule> = details.iter().flat_map(|d| d.chain.iter().copied()).collect();
    for c in StuckClass::WITNESS_CLASSES {
        r.checked += 1;
        if !classes.contains(&c) {
            r.failures.push(format!("no witness of stuck class {c}"));
        }
    }
    for rule in NegRule::ALL {
        r.checked += 1;
        if !chained.contains(&rule) {
            r.failures.push(format!("no entry's failing derivation uses {rule}"));
        }
    }
    r.note = format!("{} classes, {} root rules", classes.len(), roots.len());
    r
}

pub fn subject_reduction_section(cfg: &SuiteConfig) -> SectionReport {
    let mut r = SectionReport::new("subject reduction");
    r.checked = cfg.subject_reduction_samples;
    match check_subject_reduction(cfg.subject_reduction_samples, cfg.seed) {
        SubjectReductionOutcome::Pass { transitions, .. } => r.note = format!("{transitions} transitions"),
        SubjectReductionOutcome::Counterexample(f) => r.failures.push(format!(
            "{} : {} --{:?}--> {} is not retyped",
            render_process(&f.process),
            render_type(&f.session_type),
            f.action,
            render_process(&f.target)
        )),
    }
    r
}

/// All suites and the algebraic laws. Coverage is only required when the corpus has ill-typed entries.
pub fn run_all(corpus: &Corpus, cfg: &SuiteConfig) -> SuiteReport {
    let mut sections = vec![soundness_suite(corpus, cfg), blame_suite(corpus, cfg)];
    let (completeness, details) = completeness_suite(corpus, cfg);
    let has_ill = completeness.checked > 0;
    sections.push(completeness);
    if has_ill {
        sections.push(coverage_section(&details));
    }
    sections.push(subject_reduction_section(cfg));
    sections.push(super::dual_involution(1000, cfg.seed));
    sections.push(super::synthesis_commutes_with_substitution(500, cfg.seed));
    sections.push(super::trivial_assertions_never_blame(500, cfg.seed));
    SuiteReport { sections }
}

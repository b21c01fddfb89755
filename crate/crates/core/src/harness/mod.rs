//! Executable checks of the monitorability properties: soundness, blame,
//! weak completeness and subject reduction, over a corpus and over
//! generated instances, plus the algebraic laws of duality and synthesis.

mod algebra;
mod checks;
mod corpus;
mod gen;
mod suite;

pub use algebra::{dual_involution, synthesis_commutes_with_substitution, trivial_assertions_never_blame, with_assertions};
pub use checks::{
    check_blame, check_soundness, check_subject_reduction, check_weak_completeness, completeness_witnesses,
    escalate_weak_completeness, soundness_with_monitor, subject_reduction_pair, CheckOutcome, CompletenessOutcome,
    ProcessAction, SubjectReductionFailure, SubjectReductionOutcome, UsageError,
};
pub use corpus::{Corpus, CorpusEntry, CorpusError, Expected};
pub use gen::{mutants, GenConfig, Generator, Mutant, MutationKind};
pub use suite::{
    blame_suite, completeness_details, completeness_suite, coverage_section, run_all, soundness_suite,
    subject_reduction_section, witnesses_for, EntryWitnesses, SectionReport, SuiteConfig, SuiteReport,
};

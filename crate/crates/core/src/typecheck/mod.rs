//! Duality, type equality, the typing judgment and its negation.

mod equality;
mod typing;
mod wf;


pub use equality::type_equal;
pub use typing::{explain_failure, typecheck, FailureReport, NegRule, PathStep, TypingEnvs};
pub use wf::{check_well_formed, check_well_formed_in, is_well_formed, Violation};

use crate::model::{SessionType, TypeBranch};

/// Swaps every selection with a branching and vice versa. Labels, payloads
/// and assertions are kept.
pub fn dual(s: &SessionType) -> SessionType {
    let flip = |bs: &[TypeBranch]| -> Vec<TypeBranch> {
        bs.iter().map(|b| TypeBranch { cont: dual(&b.cont), ..b.clone() }).collect()
    };
    match s {
        SessionType::Select(bs) => SessionType::Branch(flip(bs)),
        SessionType::Branch(bs) => SessionType::Select(flip(bs)),
        SessionType::Rec(x, body) => SessionType::Rec(x.clone(), Box::new(dual(body))),
        SessionType::Var(_) | SessionType::End => s.clone(),
    }
}

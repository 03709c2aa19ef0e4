//! Core of the λæ toolkit: syntax, effect annotations, types, the modal
//! type-and-effect checker, small-step semantics for computations and
//! processes, and a bounded state-space explorer.

pub mod ast;
pub mod builtins;
pub mod check;
pub mod effects;
pub mod explore;
pub mod process;
pub mod step;
pub mod subst;
pub mod surface;
pub mod types;

//! Use case driven acceptance test generation.
//!
//! The pipeline reads restricted use case specifications (`rucm`) and a domain
//! model (`domain`), turns step sentences into constraints (`srl`,
//! `constraint_gen`), builds use case test models (`uctm`), derives scenarios
//! under a coverage criterion (`scenario`), solves their path conditions into
//! object diagrams (`solver`) and emits test cases (`emitter`).

pub mod constraint_gen;
pub mod domain;
pub mod emitter;
pub mod fixtures;
pub mod lexicon;
pub mod ocl;
pub mod rucm;
pub mod scenario;
pub mod similarity;
pub mod solver;
pub mod srl;
pub mod uctm;

pub use domain::DomainModel;
pub use lexicon::Lexicon;
pub use ocl::{CmpOp, Formula, OclConstraint};

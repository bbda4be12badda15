//! Building blocks for turning Turkish educational texts into validated
//! quiz datasets and evaluating quiz-generating models.

pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod generation;
pub mod jsonl;
pub mod model;
pub mod prompting;
pub mod rouge;
pub mod transform;

//! Question files, collection conversion and accuracy reports.

mod convert;
mod question;
mod report;

pub use convert::{convert_collection_str, convert_collection_xml, CollectionKind, ConversionLog};
pub use question::{
    parse_questions, parse_questions_from, write_questions, write_questions_to, Candidate, Question,
};
pub use report::{evaluate_ensemble, evaluate_model, format_percent, EvalReport, QuestionOutcome};

//! Transformation-based learning for prepositional-phrase attachment.
//!
//! Given labeled `(v, n1, p, n2)` tuples, the learner induces an ordered list
//! of readable rewrite rules of the form "change the attachment from N1 to V
//! if p is *at*". Starting from the right-association guess (everything
//! attached to the object noun), each rule is chosen greedily as the one
//! that removes the most training errors. Nouns can optionally be tested for
//! membership in semantic classes supplied by a flat class lexicon. A
//! lexical-association baseline is included for comparison.

pub mod baseline;
pub mod classes;
pub mod cli;
pub mod corpus;
mod error;
pub mod evaluator;
pub mod learner;
pub mod rules;

pub use baseline::{fit_lexassoc, LexAssocModel};
pub use classes::ClassLexicon;
pub use corpus::{load_corpus, parse_sample, split_corpus, AttachmentSite, Corpus, CorpusOptions, Sample};
pub use error::{Error, Result};
pub use evaluator::{evaluate, Metrics};
pub use learner::{learn, LearnerConfig, RuleScore};
pub use rules::{apply_rule, apply_rules, Condition, LabelState, Rule, RuleList, Slot};

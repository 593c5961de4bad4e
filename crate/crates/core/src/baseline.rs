//! Lexical-association baseline.
//!
//! Compares how strongly the preposition associates with the verb against how
//! strongly it associates with the object noun, using co-occurrence counts:
//!
//! ```text
//! score = ln( P(p | v) / P(p | n1) )
//! P(p | x) = (count(x, p) + alpha * prior(p)) / (count(x) + alpha)
//! prior(p) = count(p) / total
//! ```
//!
//! A positive score predicts verb attachment. Gold labels are not used when
//! fitting; only co-occurrence is counted.

use std::collections::HashMap;

use crate::corpus::{AttachmentSite, Corpus, Sample};
use crate::error::{Error, Result};

/// Scores within this distance of zero count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LexAssocModel {
    verb_prep: Cooccurrence,
    noun_prep: Cooccurrence,
    verb: HashMap<String, u64>,
    noun: HashMap<String, u64>,
    prep: HashMap<String, u64>,
    total: u64,
    alpha: f64,
}

fn get(map: &HashMap<String, u64>, key: &str) -> u64 {
    map.get(key).copied().unwrap_or(0)
}

fn get_pair(map: &Cooccurrence, head: &str, prep: &str) -> u64 {
    map.get(head).map_or(0, |preps| get(preps, prep))
}

/// Head word -> preposition -> count.
type Cooccurrence = HashMap<String, HashMap<String, u64>>;

pub fn fit_lexassoc(train: &Corpus, alpha: f64) -> Result<LexAssocModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Argument(format!("alpha must be positive, got {}", alpha)));
    }
    let mut model = LexAssocModel {
        verb_prep: HashMap::new(),
        noun_prep: HashMap::new(),
        verb: HashMap::new(),
        noun: HashMap::new(),
        prep: HashMap::new(),
        total: 0,
        alpha,
    };
    for s in train {
        *model.verb_prep.entry(s.v().into()).or_default().entry(s.p().into()).or_default() += 1;
        *model.noun_prep.entry(s.n1().into()).or_default().entry(s.p().into()).or_default() += 1;
        *model.verb.entry(s.v().into()).or_default() += 1;
        *model.noun.entry(s.n1().into()).or_default() += 1;
        *model.prep.entry(s.p().into()).or_default() += 1;
        model.total += 1;
    }
    Ok(model)
}

impl LexAssocModel {
    pub fn count_vp(&self, verb: &str, prep: &str) -> u64 {
        get_pair(&self.verb_prep, verb, prep)
    }

    pub fn count_np(&self, noun: &str, prep: &str) -> u64 {
        get_pair(&self.noun_prep, noun, prep)
    }

    pub fn count_v(&self, verb: &str) -> u64 {
        get(&self.verb, verb)
    }

    pub fn count_n(&self, noun: &str) -> u64 {
        get(&self.noun, noun)
    }

    pub fn count_p(&self, prep: &str) -> u64 {
        get(&self.prep, prep)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn smoothed(&self, joint: u64, marginal: u64, prior: f64) -> f64 {
        (joint as f64 + self.alpha * prior) / (marginal as f64 + self.alpha)
    }

    /// Log-likelihood ratio of the preposition given the verb versus given the noun.
    pub fn score(&self, sample: &Sample) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyModel);
        }
        let p = sample.p();
        let prior = self.count_p(p) as f64 / self.total as f64;
        if prior == 0.0 {
            // Unseen preposition: both conditionals are zero.
            return Ok(0.0);
        }
        let given_verb = self.smoothed(self.count_vp(sample.v(), p), self.count_v(sample.v()), prior);
        let given_noun = self.smoothed(self.count_np(sample.n1(), p), self.count_n(sample.n1()), prior);
        Ok(given_verb.ln() - given_noun.ln())
    }

    /// Verb attachment for positive scores; ties go to the noun.
    pub fn predict(&self, sample: &Sample) -> Result<AttachmentSite> {
        let score = self.score(sample)?;
        Ok(if score > TIE_TOLERANCE {
            AttachmentSite::V
        } else {
            AttachmentSite::N1
        })
    }
}

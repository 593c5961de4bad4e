//! Accuracy and confusion counts for predicted attachments.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::corpus::{AttachmentSite, Corpus};
use crate::error::{Error, Result};
use crate::rules::LabelState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrepCounts {
    pub total: usize,
    pub correct: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `confusion[predicted][gold]`, indexed N1 = 0, V = 1.
    pub confusion: [[usize; 2]; 2],
    pub per_preposition: BTreeMap<String, PrepCounts>,
}

impl Metrics {
    pub fn count(&self, predicted: AttachmentSite, gold: AttachmentSite) -> usize {
        self.confusion[predicted.index()][gold.index()]
    }

    /// Prepositions by descending total, then token.
    pub fn prepositions_by_frequency(&self) -> Vec<(&str, PrepCounts)> {
        let mut preps: Vec<(&str, PrepCounts)> =
            self.per_preposition.iter().map(|(p, c)| (p.as_str(), *c)).collect();
        preps.sort_by(|a, b| b.1.total.cmp(&a.1.total).then_with(|| a.0.cmp(b.0)));
        preps
    }

    /// Tab-separated report: accuracy, correct/total, then optionally one
    /// line per preposition.
    pub fn write_report<W: Write + ?Sized>(&self, out: &mut W, per_preposition: bool) -> io::Result<()> {
        writeln!(out, "accuracy\t{:.6}", self.accuracy)?;
        writeln!(out, "correct\t{}\ttotal\t{}", self.correct, self.total)?;
        if per_preposition {
            for (prep, counts) in self.prepositions_by_frequency() {
                writeln!(out, "prep\t{}\t{}\t{}", prep, counts.total, counts.correct)?;
            }
        }
        Ok(())
    }
}

pub fn evaluate(predicted: &LabelState, corpus: &Corpus) -> Result<Metrics> {
    if corpus.is_empty() {
        return Err(Error::Argument("cannot evaluate on an empty corpus".into()));
    }
    if predicted.len() != corpus.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} samples",
            predicted.len(),
            corpus.len()
        )));
    }

    let mut confusion = [[0; 2]; 2];
    let mut per_preposition: BTreeMap<String, PrepCounts> = BTreeMap::new();
    for (&label, sample) in predicted.labels().iter().zip(corpus) {
        let gold = sample.gold();
        confusion[label.index()][gold.index()] += 1;
        let counts = per_preposition.entry(sample.p().to_owned()).or_default();
        counts.total += 1;
        if label == gold {
            counts.correct += 1;
        }
    }

    let correct = confusion[0][0] + confusion[1][1];
    Ok(Metrics {
        total: corpus.len(),
        correct,
        accuracy: correct as f64 / corpus.len() as f64,
        confusion,
        per_preposition,
    })
}

//! Labeled attachment tuples, the tuple file reader, and seeded splitting.

use std::fmt;
use std::io::BufRead;
use std::ops::Index;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Where a prepositional phrase attaches: the object noun or the verb.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttachmentSite {
    N1,
    V,
}

impl AttachmentSite {
    pub fn other(self) -> AttachmentSite {
        match self {
            AttachmentSite::N1 => AttachmentSite::V,
            AttachmentSite::V => AttachmentSite::N1,
        }
    }

    /// Single-character token used in tuple files (`N` or `V`).
    pub fn label_token(self) -> &'static str {
        match self {
            AttachmentSite::N1 => "N",
            AttachmentSite::V => "V",
        }
    }

    pub fn from_label_token(token: &str) -> Option<AttachmentSite> {
        match token {
            "N" => Some(AttachmentSite::N1),
            "V" => Some(AttachmentSite::V),
            _ => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            AttachmentSite::N1 => 0,
            AttachmentSite::V => 1,
        }
    }
}

impl fmt::Display for AttachmentSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttachmentSite::N1 => "N1",
            AttachmentSite::V => "V",
        })
    }
}

impl FromStr for AttachmentSite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N1" | "n1" => Ok(AttachmentSite::N1),
            "V" | "v" => Ok(AttachmentSite::V),
            _ => Err(Error::Argument(format!("unknown attachment site {:?}", s))),
        }
    }
}

/// One of the four word positions of a tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    V,
    N1,
    P,
    N2,
}

impl Slot {
    /// All slots in canonical order.
    pub const ALL: [Slot; 4] = [Slot::V, Slot::N1, Slot::P, Slot::N2];

    pub fn name(self) -> &'static str {
        match self {
            Slot::V => "v",
            Slot::N1 => "n1",
            Slot::P => "p",
            Slot::N2 => "n2",
        }
    }

    pub fn from_name(name: &str) -> Option<Slot> {
        match name {
            "v" => Some(Slot::V),
            "n1" => Some(Slot::N1),
            "p" => Some(Slot::P),
            "n2" => Some(Slot::N2),
            _ => None,
        }
    }

    pub fn is_noun(self) -> bool {
        matches!(self, Slot::N1 | Slot::N2)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

/// A single attachment case: `(v, n1, p, n2)` plus the gold attachment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sample {
    words: [String; 4],
    gold: AttachmentSite,
}

impl Sample {
    /// Construct a sample. Every token must be non-empty and free of whitespace.
    pub fn new(
        v: impl Into<String>,
        n1: impl Into<String>,
        p: impl Into<String>,
        n2: impl Into<String>,
        gold: AttachmentSite,
    ) -> Result<Sample> {
        let words = [v.into(), n1.into(), p.into(), n2.into()];
        for (slot, word) in Slot::ALL.iter().zip(&words) {
            if !is_token(word) {
                return Err(Error::Argument(format!(
                    "{} token {:?} must be non-empty and contain no whitespace",
                    slot.name(),
                    word
                )));
            }
        }
        Ok(Sample { words, gold })
    }

    pub fn word(&self, slot: Slot) -> &str {
        &self.words[slot.index()]
    }

    pub fn v(&self) -> &str {
        self.word(Slot::V)
    }

    pub fn n1(&self) -> &str {
        self.word(Slot::N1)
    }

    pub fn p(&self) -> &str {
        self.word(Slot::P)
    }

    pub fn n2(&self) -> &str {
        self.word(Slot::N2)
    }

    pub fn gold(&self) -> AttachmentSite {
        self.gold
    }
}

/// Formats as a tuple-file record, `v n1 p n2 label`.
impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.words[0],
            self.words[1],
            self.words[2],
            self.words[3],
            self.gold.label_token()
        )
    }
}

pub(crate) fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusOptions {
    pub lowercase: bool,
    /// Records carry a leading identifier column that is discarded.
    pub leading_id: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            lowercase: true,
            leading_id: false,
        }
    }
}

/// An ordered sequence of samples. Order is significant and duplicates are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    samples: Vec<Sample>,
}

impl Corpus {
    pub fn new(samples: Vec<Sample>) -> Corpus {
        Corpus { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// The first `n` samples (or all of them if `n` exceeds the length).
    pub fn prefix(&self, n: usize) -> Corpus {
        Corpus::new(self.samples[..n.min(self.len())].to_vec())
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

impl Index<usize> for Corpus {
    type Output = Sample;

    fn index(&self, index: usize) -> &Sample {
        &self.samples[index]
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

impl FromIterator<Sample> for Corpus {
    fn from_iter<I: IntoIterator<Item = Sample>>(iter: I) -> Self {
        Corpus::new(iter.into_iter().collect())
    }
}

/// Parse one tuple record. `line_no` is only used for error reporting.
pub fn parse_sample(line: &str, line_no: usize, opts: CorpusOptions) -> Result<Sample> {
    let mut fields: Vec<&str> = line.split_ascii_whitespace().collect();
    let expected = if opts.leading_id { 6 } else { 5 };
    if fields.len() != expected {
        return Err(Error::parse(
            line_no,
            line,
            format!("expected {} fields, found {}", expected, fields.len()),
        ));
    }
    if opts.leading_id {
        fields.remove(0);
    }

    let gold = AttachmentSite::from_label_token(fields[4])
        .ok_or_else(|| Error::parse(line_no, line, format!("unknown label {:?}", fields[4])))?;

    let norm = |s: &str| {
        if opts.lowercase {
            s.to_lowercase()
        } else {
            s.to_owned()
        }
    };

    Sample::new(norm(fields[0]), norm(fields[1]), norm(fields[2]), norm(fields[3]), gold)
        .map_err(|e| Error::parse(line_no, line, e.to_string()))
}

/// Whether a line carries no record (blank or `#` comment).
pub fn is_skippable(line: &str) -> bool {
    let trimmed = line.trim();
    trimmed.is_empty() || trimmed.starts_with('#')
}

/// Read a tuple file, keeping the raw text of every record next to its sample.
pub fn read_records<R: BufRead>(source: R, opts: CorpusOptions) -> Result<Vec<(String, Sample)>> {
    let mut records = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let sample = parse_sample(&line, idx + 1, opts)?;
        records.push((line, sample));
    }
    Ok(records)
}

pub fn load_corpus<R: BufRead>(source: R, opts: CorpusOptions) -> Result<Corpus> {
    Ok(read_records(source, opts)?
        .into_iter()
        .map(|(_, sample)| sample)
        .collect())
}

/// Seeded random split into `(train, test)`; the first `n_test` samples of
/// the permutation form the test set.
pub fn split_corpus(corpus: &Corpus, n_test: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    if n_test > corpus.len() {
        return Err(Error::Argument(format!(
            "cannot hold out {} samples from a corpus of {}",
            n_test,
            corpus.len()
        )));
    }

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let test = order[..n_test].iter().map(|&i| corpus[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| corpus[i].clone()).collect();
    Ok((train, test))
}

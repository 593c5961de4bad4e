//! Flat semantic-class lexicon.
//!
//! Each line maps a noun to the names of every class it belongs to, with the
//! hyponym closure already expanded, so membership is a plain set lookup.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use crate::corpus::{is_skippable, is_token};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassLexicon {
    entries: HashMap<String, BTreeSet<String>>,
}

static NO_CLASSES: BTreeSet<String> = BTreeSet::new();

impl ClassLexicon {
    pub fn new() -> ClassLexicon {
        ClassLexicon::default()
    }

    /// Add `classes` to the class set of `token`.
    pub fn insert<I, S>(&mut self, token: impl Into<String>, classes: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let token = token.into();
        if !is_token(&token) {
            return Err(Error::Argument(format!("invalid lexicon token {:?}", token)));
        }
        let set = self.entries.entry(token).or_default();
        for class in classes {
            let class = class.into();
            if !is_token(&class) {
                return Err(Error::Argument(format!("invalid class name {:?}", class)));
            }
            set.insert(class);
        }
        Ok(())
    }

    /// Classes of `word`; empty for words the lexicon does not know.
    pub fn classes_of(&self, word: &str) -> &BTreeSet<String> {
        self.entries.get(word).unwrap_or(&NO_CLASSES)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// A copy with every token key lowercased (class names are untouched).
    pub fn lowercase_tokens(&self) -> ClassLexicon {
        let mut entries: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (token, classes) in &self.entries {
            entries
                .entry(token.to_lowercase())
                .or_default()
                .extend(classes.iter().cloned());
        }
        ClassLexicon { entries }
    }
}

/// Read a lexicon file: `token<TAB>class1 class2 ...` per line.
pub fn load_lexicon<R: BufRead>(source: R) -> Result<ClassLexicon> {
    let mut lexicon = ClassLexicon::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let (token, classes) = match line.split_once('\t') {
            Some((token, classes)) => (token.trim(), classes),
            None => (line.trim(), ""),
        };
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::parse(idx + 1, &line, "expected a token before the first tab"));
        }
        lexicon
            .insert(token, classes.split_ascii_whitespace())
            .map_err(|e| Error::parse(idx + 1, &line, e.to_string()))?;
    }
    Ok(lexicon)
}

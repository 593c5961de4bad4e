//! Transformation rules, their application, and the rule file format.
//!
//! A rule reads `FROM -> TO | cond ; cond ...`, e.g. `N1 -> V | v=have ; p=in`
//! or `N1 -> V | n2~class=time`. Conditions are kept in canonical slot order
//! (v, n1, p, n2), so formatting is deterministic and `parse(format(r)) == r`.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use crate::classes::ClassLexicon;
use crate::corpus::{is_token, AttachmentSite, Corpus, Sample};
use crate::error::{Error, Result};

pub use crate::corpus::Slot;

/// Rules condition on at most this many slots (never all four).
pub const MAX_CONDITIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionKind {
    /// The slot token equals the value.
    Word,
    /// The slot token belongs to the named class.
    Class,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Condition {
    slot: Slot,
    kind: ConditionKind,
    value: String,
}

impl Condition {
    pub fn word(slot: Slot, word: impl Into<String>) -> Result<Condition> {
        Condition::new(slot, ConditionKind::Word, word.into())
    }

    /// Class conditions are only defined on the noun slots.
    pub fn class(slot: Slot, class: impl Into<String>) -> Result<Condition> {
        Condition::new(slot, ConditionKind::Class, class.into())
    }

    fn new(slot: Slot, kind: ConditionKind, value: String) -> Result<Condition> {
        let cond = Condition { slot, kind, value };
        if !is_token(&cond.value) {
            return Err(Error::Rule {
                text: cond.to_string(),
                message: "condition value must be non-empty and contain no whitespace".into(),
            });
        }
        if kind == ConditionKind::Class && !slot.is_noun() {
            return Err(Error::Rule {
                text: cond.to_string(),
                message: "class conditions apply only to n1 and n2".into(),
            });
        }
        Ok(cond)
    }

    pub fn slot(&self) -> Slot {
        self.slot
    }

    pub fn kind(&self) -> ConditionKind {
        self.kind
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn holds(&self, sample: &Sample, lexicon: &ClassLexicon) -> bool {
        let word = sample.word(self.slot);
        match self.kind {
            ConditionKind::Word => word == self.value,
            ConditionKind::Class => lexicon.classes_of(word).contains(&self.value),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConditionKind::Word => write!(f, "{}={}", self.slot.name(), self.value),
            ConditionKind::Class => write!(f, "{}~class={}", self.slot.name(), self.value),
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Condition> {
        let err = |message: &str| Error::Rule {
            text: s.to_owned(),
            message: message.to_owned(),
        };
        let (lhs, value) = s.split_once('=').ok_or_else(|| err("expected slot=value"))?;
        let (slot_name, kind) = match lhs.strip_suffix("~class") {
            Some(slot_name) => (slot_name, ConditionKind::Class),
            None => (lhs, ConditionKind::Word),
        };
        let slot = Slot::from_name(slot_name).ok_or_else(|| err("unknown slot"))?;
        Condition::new(slot, kind, value.to_owned())
    }
}

/// "Change the attachment from `from` to `to` if all conditions hold."
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    from: AttachmentSite,
    to: AttachmentSite,
    conditions: Vec<Condition>,
}

impl Rule {
    /// Build a rule, sorting its conditions into canonical slot order.
    ///
    /// Rejected: `from == to`, zero or more than three conditions, two
    /// conditions on one slot, and class conditions on both n1 and n2.
    pub fn new(from: AttachmentSite, to: AttachmentSite, mut conditions: Vec<Condition>) -> Result<Rule> {
        conditions.sort_by_key(|c| c.slot);
        let rule = Rule { from, to, conditions };
        let invalid = |message: &str| Error::Rule {
            text: rule.to_string(),
            message: message.to_owned(),
        };

        if from == to {
            return Err(invalid("source and target sites are identical"));
        }
        if rule.conditions.is_empty() {
            return Err(invalid("at least one condition is required"));
        }
        if rule.conditions.len() > MAX_CONDITIONS {
            return Err(invalid("conditions on all four slots are not allowed"));
        }
        if rule.conditions.windows(2).any(|w| w[0].slot == w[1].slot) {
            return Err(invalid("at most one condition per slot"));
        }
        let noun_classes = rule
            .conditions
            .iter()
            .filter(|c| c.kind == ConditionKind::Class)
            .count();
        if noun_classes > 1 {
            return Err(invalid("class conditions on both n1 and n2 are not allowed"));
        }
        Ok(rule)
    }

    pub fn from_site(&self) -> AttachmentSite {
        self.from
    }

    pub fn to_site(&self) -> AttachmentSite {
        self.to
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn mentions(&self, slot: Slot) -> bool {
        self.conditions.iter().any(|c| c.slot == slot)
    }

    pub fn has_class_condition(&self) -> bool {
        self.conditions.iter().any(|c| c.kind == ConditionKind::Class)
    }

    /// Whether every condition holds for `sample`. The current label is not consulted.
    pub fn matches(&self, sample: &Sample, lexicon: &ClassLexicon) -> bool {
        self.conditions.iter().all(|c| c.holds(sample, lexicon))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} |", self.from, self.to)?;
        for (i, cond) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ;")?;
            }
            write!(f, " {}", cond)?;
        }
        Ok(())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rule> {
        let err = |message: &str| Error::Rule {
            text: s.to_owned(),
            message: message.to_owned(),
        };
        let (head, body) = s.split_once(" | ").ok_or_else(|| err("expected `FROM -> TO | conditions`"))?;
        let (from, to) = head.split_once(" -> ").ok_or_else(|| err("expected `FROM -> TO`"))?;
        let from: AttachmentSite = site_name(from).ok_or_else(|| err("unknown source site"))?;
        let to: AttachmentSite = site_name(to).ok_or_else(|| err("unknown target site"))?;
        let conditions = body
            .split(" ; ")
            .map(Condition::from_str)
            .collect::<Result<Vec<_>>>()?;

        let rule = Rule::new(from, to, conditions)?;
        // Only the canonical spelling is accepted.
        if rule.to_string() != s {
            return Err(err("not in canonical form"));
        }
        Ok(rule)
    }
}

fn site_name(s: &str) -> Option<AttachmentSite> {
    match s {
        "N1" => Some(AttachmentSite::N1),
        "V" => Some(AttachmentSite::V),
        _ => None,
    }
}

/// Current attachment guesses, index-aligned with a corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelState {
    labels: Vec<AttachmentSite>,
}

impl LabelState {
    pub fn uniform(site: AttachmentSite, len: usize) -> LabelState {
        LabelState {
            labels: vec![site; len],
        }
    }

    pub fn from_labels(labels: Vec<AttachmentSite>) -> LabelState {
        LabelState { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[AttachmentSite] {
        &self.labels
    }

    /// Number of positions whose label differs from the gold label.
    pub fn errors(&self, corpus: &Corpus) -> usize {
        self.labels
            .iter()
            .zip(corpus)
            .filter(|(label, sample)| **label != sample.gold())
            .count()
    }
}

impl Index<usize> for LabelState {
    type Output = AttachmentSite;

    fn index(&self, index: usize) -> &AttachmentSite {
        &self.labels[index]
    }
}

/// Apply one rule in place and return how many labels it flipped.
///
/// # Panics
///
/// If `state` and `corpus` differ in length.
pub fn apply_rule(rule: &Rule, corpus: &Corpus, state: &mut LabelState, lexicon: &ClassLexicon) -> usize {
    assert_eq!(state.len(), corpus.len(), "label state is not aligned with the corpus");
    let mut changed = 0;
    for (label, sample) in state.labels.iter_mut().zip(corpus) {
        if *label == rule.from && rule.matches(sample, lexicon) {
            *label = rule.to;
            changed += 1;
        }
    }
    changed
}

/// Metadata recorded in a rule file header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleListMeta {
    pub initial: AttachmentSite,
    pub classes: bool,
    pub no_n2: bool,
}

impl Default for RuleListMeta {
    fn default() -> Self {
        RuleListMeta {
            initial: AttachmentSite::N1,
            classes: false,
            no_n2: false,
        }
    }
}

/// An ordered transformation list together with its start state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleList {
    pub meta: RuleListMeta,
    pub rules: Vec<Rule>,
}

impl RuleList {
    pub fn new(meta: RuleListMeta, rules: Vec<Rule>) -> RuleList {
        RuleList { meta, rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Label a corpus: initial site everywhere, then each rule in order.
pub fn apply_rules(rules: &RuleList, corpus: &Corpus, lexicon: &ClassLexicon) -> LabelState {
    let mut state = LabelState::uniform(rules.meta.initial, corpus.len());
    for rule in &rules.rules {
        apply_rule(rule, corpus, &mut state, lexicon);
    }
    state
}

fn on_off(flag: bool) -> &'static str {
    if flag {
        "on"
    } else {
        "off"
    }
}

fn parse_on_off(value: &str) -> Option<bool> {
    match value {
        "on" => Some(true),
        "off" => Some(false),
        _ => None,
    }
}

impl fmt::Display for RuleListMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#! initial={} classes={} no_n2={}",
            self.initial,
            on_off(self.classes),
            on_off(self.no_n2)
        )
    }
}

impl FromStr for RuleListMeta {
    type Err = Error;

    fn from_str(s: &str) -> Result<RuleListMeta> {
        let err = |message: String| Error::parse(1, s, message);
        let body = s
            .strip_prefix("#!")
            .ok_or_else(|| err("rule file must start with a `#!` header".into()))?;

        let mut meta = RuleListMeta::default();
        for field in body.split_ascii_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| err(format!("malformed header field {:?}", field)))?;
            let bad_value = || err(format!("bad value for {}: {:?}", key, value));
            match key {
                "initial" => meta.initial = site_name(value).ok_or_else(bad_value)?,
                "classes" => meta.classes = parse_on_off(value).ok_or_else(bad_value)?,
                "no_n2" => meta.no_n2 = parse_on_off(value).ok_or_else(bad_value)?,
                _ => return Err(err(format!("unknown header field {:?}", key))),
            }
        }
        Ok(meta)
    }
}

/// The rule file: header line, then one rule per line, each newline-terminated.
impl fmt::Display for RuleList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.meta)?;
        for rule in &self.rules {
            writeln!(f, "{}", rule)?;
        }
        Ok(())
    }
}

impl FromStr for RuleList {
    type Err = Error;

    fn from_str(s: &str) -> Result<RuleList> {
        let mut lines = s.lines().enumerate();
        let meta = match lines.next() {
            Some((_, header)) => header.parse::<RuleListMeta>()?,
            None => return Err(Error::parse(1, "", "empty rule file")),
        };

        let mut rules = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() || (line.starts_with('#') && !line.starts_with("#!")) {
                continue;
            }
            let rule = line
                .parse::<Rule>()
                .map_err(|e| Error::parse(idx + 1, line, e.to_string()))?;
            if meta.no_n2 && rule.mentions(Slot::N2) {
                return Err(Error::parse(idx + 1, line, "n2 condition in a no_n2 rule file"));
            }
            rules.push(rule);
        }
        Ok(RuleList { meta, rules })
    }
}

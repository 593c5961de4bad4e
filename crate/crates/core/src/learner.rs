//! Greedy transformation-based error-driven learning.
//!
//! Every iteration looks for the rule whose application removes the most
//! training errors, appends it to the rule list, applies it, and repeats
//! until no rule reaches `min_score`.
//!
//! The search is data driven: a rule with positive net score must fix at
//! least one currently mislabeled sample, so candidates are only generated
//! from mislabeled samples. Scores start from two counting passes over
//! interned slot values: fix counts from the mislabeled samples, then break
//! counts from correctly labeled samples that generate the same candidate
//! keys with the opposite target. After a rule is applied only the samples it
//! flipped are recounted; break counts for candidates that appear for the
//! first time are computed from per-condition posting lists.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::classes::ClassLexicon;
use crate::corpus::{AttachmentSite, Corpus, Sample, Slot};
use crate::error::{Error, Result};
use crate::evaluator::evaluate;
use crate::rules::{apply_rule, apply_rules, Condition, LabelState, Rule, RuleList, RuleListMeta, MAX_CONDITIONS};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnerConfig {
    /// Start-state attachment for every sample.
    pub initial: AttachmentSite,
    /// Allow class-membership conditions on n1 and n2.
    pub use_classes: bool,
    /// Never condition on n2.
    pub no_n2: bool,
    /// Smallest net score a rule needs to be learned; at least 1.
    pub min_score: usize,
    pub max_rules: Option<usize>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            initial: AttachmentSite::N1,
            use_classes: false,
            no_n2: false,
            min_score: 1,
            max_rules: None,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_score < 1 {
            return Err(Error::Argument("min_score must be at least 1".into()));
        }
        Ok(())
    }

    /// Rule file header for a run with `lexicon`. Classes count as enabled
    /// only when the lexicon can actually produce class conditions, so a run
    /// with an empty lexicon is indistinguishable from a word-only run.
    pub fn meta(&self, lexicon: &ClassLexicon) -> RuleListMeta {
        RuleListMeta {
            initial: self.initial,
            classes: self.use_classes && !lexicon.is_empty(),
            no_n2: self.no_n2,
        }
    }
}

/// Effect of a rule on the current labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleScore {
    /// Matching samples whose gold label is the rule's target.
    pub fixed: usize,
    /// Matching samples whose gold label is the rule's source.
    pub broken: usize,
    pub net: i64,
}

impl RuleScore {
    pub fn new(fixed: usize, broken: usize) -> RuleScore {
        RuleScore {
            fixed,
            broken,
            net: fixed as i64 - broken as i64,
        }
    }
}

/// Score `rule` by direct evaluation over every sample.
pub fn score_rule(rule: &Rule, corpus: &Corpus, state: &LabelState, lexicon: &ClassLexicon) -> RuleScore {
    assert_eq!(state.len(), corpus.len(), "label state is not aligned with the corpus");
    let (mut fixed, mut broken) = (0, 0);
    for (i, sample) in corpus.iter().enumerate() {
        if state[i] != rule.from_site() || !rule.matches(sample, lexicon) {
            continue;
        }
        if sample.gold() == rule.to_site() {
            fixed += 1;
        } else {
            broken += 1;
        }
    }
    RuleScore::new(fixed, broken)
}

/// Calls `emit` with every admissible condition set drawn from per-slot
/// options: one to three slots, at most one option per slot, and not class
/// options on both nouns. Sets are passed in canonical slot order.
fn for_each_condition_set<T: Copy>(
    options: &[Vec<(T, bool)>; 4],
    mut emit: impl FnMut(&[(Slot, T)]),
) {
    fn recurse<T: Copy>(
        slots: &[Slot],
        options: &[Vec<(T, bool)>; 4],
        has_class: bool,
        chosen: &mut Vec<(Slot, T)>,
        emit: &mut impl FnMut(&[(Slot, T)]),
    ) {
        let Some((&slot, rest)) = slots.split_first() else {
            emit(chosen);
            return;
        };
        for &(value, is_class) in &options[slot.index()] {
            if is_class && has_class {
                continue;
            }
            chosen.push((slot, value));
            recurse(rest, options, has_class || is_class, chosen, emit);
            chosen.pop();
        }
    }

    let mut chosen = Vec::with_capacity(MAX_CONDITIONS);
    let mut slots = Vec::with_capacity(MAX_CONDITIONS);
    for mask in 1u8..0b1111 {
        slots.clear();
        slots.extend(Slot::ALL.iter().copied().filter(|s| mask & (1 << s.index()) != 0));
        recurse(&slots, options, false, &mut chosen, &mut emit);
    }
}

/// All rules `from -> to` that `sample` satisfies and the configuration admits.
pub fn generate_candidates(
    sample: &Sample,
    from: AttachmentSite,
    to: AttachmentSite,
    cfg: &LearnerConfig,
    lexicon: &ClassLexicon,
) -> BTreeSet<Rule> {
    let mut options: [Vec<(usize, bool)>; 4] = Default::default();
    let mut conditions = Vec::new();
    for slot in Slot::ALL {
        if cfg.no_n2 && slot == Slot::N2 {
            continue;
        }
        let word = sample.word(slot);
        options[slot.index()].push((conditions.len(), false));
        conditions.push(Condition::word(slot, word).expect("sample tokens are valid"));
        if cfg.use_classes && slot.is_noun() {
            for class in lexicon.classes_of(word) {
                options[slot.index()].push((conditions.len(), true));
                conditions.push(Condition::class(slot, class.as_str()).expect("class names are valid"));
            }
        }
    }

    let mut rules = BTreeSet::new();
    if from == to {
        return rules;
    }
    for_each_condition_set(&options, |set| {
        let conds = set.iter().map(|&(_, i)| conditions[i].clone()).collect();
        rules.insert(Rule::new(from, to, conds).expect("generated rules are valid"));
    });
    rules
}

// Packed condition: slot in bits 30..32, class flag in bit 29, interned id below.
const CLASS_BIT: u32 = 1 << 29;
const ID_MASK: u32 = CLASS_BIT - 1;
const NO_COND: u32 = u32::MAX;

fn pack(slot: Slot, is_class: bool, id: u32) -> u32 {
    debug_assert!(id <= ID_MASK, "vocabulary too large");
    ((slot.index() as u32) << 30) | if is_class { CLASS_BIT } else { 0 } | id
}

/// A candidate rule over interned values; the target is the other site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    from: AttachmentSite,
    conds: [u32; MAX_CONDITIONS],
}

impl Key {
    fn new(from: AttachmentSite, set: &[(Slot, u32)]) -> Key {
        let mut conds = [NO_COND; MAX_CONDITIONS];
        for (dst, &(_, code)) in conds.iter_mut().zip(set) {
            *dst = code;
        }
        Key { from, conds }
    }

    fn len(&self) -> usize {
        self.conds.iter().filter(|&&c| c != NO_COND).count()
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(s.to_owned(), id);
        self.names.push(s.to_owned());
        id
    }
}

/// Corpus with per-sample candidate options interned for one configuration.
struct Encoded {
    options: Vec<[Vec<(u32, bool)>; 4]>,
    gold: Vec<AttachmentSite>,
    /// Samples carrying each packed condition, in index order.
    postings: HashMap<u32, Vec<usize>>,
    words: Interner,
    classes: Interner,
}

impl Encoded {
    fn new(corpus: &Corpus, cfg: &LearnerConfig, lexicon: &ClassLexicon) -> Encoded {
        let mut words = Interner::default();
        let mut classes = Interner::default();
        let options: Vec<[Vec<(u32, bool)>; 4]> = corpus
            .iter()
            .map(|sample| {
                let mut opts: [Vec<(u32, bool)>; 4] = Default::default();
                for slot in Slot::ALL {
                    if cfg.no_n2 && slot == Slot::N2 {
                        continue;
                    }
                    let word = sample.word(slot);
                    let opt = &mut opts[slot.index()];
                    opt.push((pack(slot, false, words.intern(word)), false));
                    if cfg.use_classes && slot.is_noun() {
                        for class in lexicon.classes_of(word) {
                            opt.push((pack(slot, true, classes.intern(class)), true));
                        }
                    }
                }
                opts
            })
            .collect();

        let mut postings: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, opts) in options.iter().enumerate() {
            for &(code, _) in opts.iter().flatten() {
                postings.entry(code).or_default().push(i);
            }
        }

        Encoded {
            options,
            gold: corpus.iter().map(Sample::gold).collect(),
            postings,
            words,
            classes,
        }
    }

    fn for_each_key(&self, index: usize, from: AttachmentSite, mut f: impl FnMut(Key)) {
        for_each_condition_set(&self.options[index], |set| f(Key::new(from, set)));
    }

    fn decode(&self, key: &Key) -> Rule {
        let conditions = key
            .conds
            .iter()
            .filter(|&&c| c != NO_COND)
            .map(|&code| {
                let slot = Slot::ALL[(code >> 30) as usize];
                let id = (code & ID_MASK) as usize;
                if code & CLASS_BIT != 0 {
                    Condition::class(slot, self.classes.names[id].as_str())
                } else {
                    Condition::word(slot, self.words.names[id].as_str())
                }
                .expect("interned values are valid")
            })
            .collect();
        Rule::new(key.from, key.from.other(), conditions).expect("keys encode valid rules")
    }

    fn satisfies(&self, index: usize, code: u32) -> bool {
        self.options[index][(code >> 30) as usize]
            .iter()
            .any(|&(c, _)| c == code)
    }

    /// Indices of the samples whose slots satisfy every condition of `key`.
    fn matching<'a>(&'a self, key: &Key) -> impl Iterator<Item = usize> + 'a {
        let conds: Vec<u32> = key.conds.iter().copied().filter(|&c| c != NO_COND).collect();
        let shortest = conds
            .iter()
            .map(|c| self.postings.get(c).map_or(&[][..], Vec::as_slice))
            .min_by_key(|list| list.len())
            .unwrap_or(&[]);
        shortest
            .iter()
            .copied()
            .filter(move |&i| conds.iter().all(|&c| self.satisfies(i, c)))
    }
}

/// Fix and break counts for every candidate generated by a currently
/// mislabeled sample, kept up to date as rules are applied.
struct Search<'a> {
    enc: &'a Encoded,
    labels: Vec<AttachmentSite>,
    fixed: HashMap<Key, usize>,
    /// Break counts for keys in `fixed`; a missing entry means zero.
    broken: HashMap<Key, usize>,
}

impl<'a> Search<'a> {
    fn new(enc: &'a Encoded, labels: Vec<AttachmentSite>) -> Search<'a> {
        assert_eq!(labels.len(), enc.gold.len(), "label state is not aligned with the corpus");
        let (wrong, right): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i] != enc.gold[i]);

        let fixed = wrong
            .par_iter()
            .fold(HashMap::<Key, usize>::new, |mut counts, &i| {
                enc.for_each_key(i, labels[i], |key| *counts.entry(key).or_default() += 1);
                counts
            })
            .reduce(HashMap::new, merge_counts);

        let broken = right
            .par_iter()
            .fold(HashMap::<Key, usize>::new, |mut counts, &i| {
                enc.for_each_key(i, labels[i], |key| {
                    if fixed.contains_key(&key) {
                        *counts.entry(key).or_default() += 1;
                    }
                });
                counts
            })
            .reduce(HashMap::new, merge_counts);

        Search {
            enc,
            labels,
            fixed,
            broken,
        }
    }

    fn score(&self, key: &Key) -> RuleScore {
        RuleScore::new(
            self.fixed.get(key).copied().unwrap_or(0),
            self.broken.get(key).copied().unwrap_or(0),
        )
    }

    /// Ordered on (net, fixed, fewer conditions); the formatted rule breaks remaining ties.
    fn best(&self, min_score: usize) -> Option<(Key, Rule, RuleScore)> {
        let mut top = None;
        let mut tied: Vec<(Key, RuleScore)> = Vec::new();
        for key in self.fixed.keys() {
            let score = self.score(key);
            if score.net < min_score as i64 {
                continue;
            }
            let order = (score.net, score.fixed, Reverse(key.len()));
            match top.map(|t| order.cmp(&t)) {
                Some(Ordering::Less) => {}
                Some(Ordering::Equal) => tied.push((*key, score)),
                _ => {
                    top = Some(order);
                    tied.clear();
                    tied.push((*key, score));
                }
            }
        }

        tied.into_iter()
            .map(|(key, score)| {
                let rule = self.enc.decode(&key);
                (rule.to_string(), key, rule, score)
            })
            .min_by(|a, b| a.0.cmp(&b.0))
            .map(|(_, key, rule, score)| (key, rule, score))
    }

    /// Apply the rule encoded by `key`, updating counts only for the samples
    /// it flips. Returns the number of flipped samples.
    fn apply(&mut self, key: &Key) -> usize {
        let enc = self.enc;
        let (from, to) = (key.from, key.from.other());
        let changed: Vec<usize> = enc.matching(key).filter(|&i| self.labels[i] == from).collect();
        for &i in &changed {
            self.labels[i] = to;
        }

        let Search { fixed, broken, .. } = self;
        // Keys that (re)entered `fixed` get their break count recomputed below.
        let mut fresh: HashSet<Key> = HashSet::new();
        for &i in &changed {
            if enc.gold[i] != from {
                enc.for_each_key(i, from, |k| {
                    let count = fixed.get_mut(&k).expect("error keys are counted");
                    *count -= 1;
                    if *count == 0 {
                        fixed.remove(&k);
                        broken.remove(&k);
                    }
                });
            } else {
                enc.for_each_key(i, from, |k| {
                    if fixed.contains_key(&k) && !fresh.contains(&k) {
                        *broken.get_mut(&k).expect("break counts cover fixed keys") -= 1;
                    }
                });
            }

            if enc.gold[i] != to {
                enc.for_each_key(i, to, |k| {
                    let count = fixed.entry(k).or_insert_with(|| {
                        fresh.insert(k);
                        0
                    });
                    *count += 1;
                });
            } else {
                enc.for_each_key(i, to, |k| {
                    if fixed.contains_key(&k) && !fresh.contains(&k) {
                        *broken.entry(k).or_default() += 1;
                    }
                });
            }
        }

        for key in fresh {
            if !self.fixed.contains_key(&key) {
                continue;
            }
            let count = enc
                .matching(&key)
                .filter(|&j| self.labels[j] == key.from && enc.gold[j] == key.from)
                .count();
            self.broken.insert(key, count);
        }
        changed.len()
    }
}

fn merge_counts(a: HashMap<Key, usize>, b: HashMap<Key, usize>) -> HashMap<Key, usize> {
    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (key, count) in small {
        *big.entry(key).or_default() += count;
    }
    big
}

/// The best rule for the current labeling, or `None` if nothing reaches `cfg.min_score`.
///
/// Ties are broken by higher net score, then more fixes, then fewer
/// conditions, then the lexicographically smallest formatted rule.
pub fn best_rule(
    corpus: &Corpus,
    state: &LabelState,
    cfg: &LearnerConfig,
    lexicon: &ClassLexicon,
) -> Option<(Rule, RuleScore)> {
    assert_eq!(state.len(), corpus.len(), "label state is not aligned with the corpus");
    let encoded = Encoded::new(corpus, cfg, lexicon);
    Search::new(&encoded, state.labels().to_vec())
        .best(cfg.min_score)
        .map(|(_, rule, score)| (rule, score))
}

/// Exhaustive search over every rule buildable from observed slot values and
/// classes, scored directly. Only practical for tiny corpora; used as a test
/// oracle for [`best_rule`].
pub fn brute_force_best(
    corpus: &Corpus,
    state: &LabelState,
    cfg: &LearnerConfig,
    lexicon: &ClassLexicon,
) -> Option<RuleScore> {
    let mut per_slot: Vec<Vec<Option<Condition>>> = Vec::new();
    for slot in Slot::ALL {
        let mut conds = vec![None];
        if !(cfg.no_n2 && slot == Slot::N2) {
            let words: BTreeSet<&str> = corpus.iter().map(|s| s.word(slot)).collect();
            conds.extend(words.into_iter().map(|w| Condition::word(slot, w).ok()));
            if cfg.use_classes && slot.is_noun() {
                let classes: BTreeSet<&String> =
                    corpus.iter().flat_map(|s| lexicon.classes_of(s.word(slot))).collect();
                conds.extend(classes.into_iter().map(|c| Condition::class(slot, c.as_str()).ok()));
            }
        }
        per_slot.push(conds);
    }

    let mut best: Option<RuleScore> = None;
    for v in &per_slot[0] {
        for n1 in &per_slot[1] {
            for p in &per_slot[2] {
                for n2 in &per_slot[3] {
                    let conds: Vec<Condition> = [v, n1, p, n2].into_iter().flatten().cloned().collect();
                    for from in [AttachmentSite::N1, AttachmentSite::V] {
                        let Ok(rule) = Rule::new(from, from.other(), conds.clone()) else {
                            continue;
                        };
                        let score = score_rule(&rule, corpus, state, lexicon);
                        if score.net >= cfg.min_score as i64 && best.is_none_or(|b| score.net > b.net) {
                            best = Some(score);
                        }
                    }
                }
            }
        }
    }
    best
}

/// One learned rule, as reported during training.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    /// 1-based iteration number.
    pub iteration: usize,
    pub rule: Rule,
    pub score: RuleScore,
    pub errors_remaining: usize,
}

/// Tab-separated progress record: iteration, rule, fixed, broken, net, remaining errors.
impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.iteration, self.rule, self.score.fixed, self.score.broken, self.score.net, self.errors_remaining
        )
    }
}

#[derive(Clone, Debug)]
pub struct Training {
    pub rules: RuleList,
    /// Training-set labels after the last rule.
    pub state: LabelState,
    pub initial_errors: usize,
    pub steps: Vec<Step>,
}

/// Learn an ordered rule list, calling `on_step` after each learned rule.
pub fn train(
    corpus: &Corpus,
    cfg: &LearnerConfig,
    lexicon: &ClassLexicon,
    mut on_step: impl FnMut(&Step),
) -> Training {
    let encoded = Encoded::new(corpus, cfg, lexicon);
    let mut state = LabelState::uniform(cfg.initial, corpus.len());
    let mut search = Search::new(&encoded, state.labels().to_vec());
    let initial_errors = state.errors(corpus);
    let mut errors = initial_errors;
    let mut rules = Vec::new();
    let mut steps = Vec::new();

    while cfg.max_rules.is_none_or(|max| rules.len() < max) {
        let Some((key, rule, score)) = search.best(cfg.min_score.max(1)) else {
            break;
        };
        let flipped = search.apply(&key);
        let changed = apply_rule(&rule, corpus, &mut state, lexicon);
        debug_assert_eq!(flipped, changed);
        errors -= score.net as usize;
        debug_assert_eq!(errors, state.errors(corpus));

        let step = Step {
            iteration: rules.len() + 1,
            rule: rule.clone(),
            score,
            errors_remaining: errors,
        };
        on_step(&step);
        steps.push(step);
        rules.push(rule);
    }

    Training {
        rules: RuleList::new(cfg.meta(lexicon), rules),
        state,
        initial_errors,
        steps,
    }
}

pub fn learn(corpus: &Corpus, cfg: &LearnerConfig, lexicon: &ClassLexicon) -> RuleList {
    train(corpus, cfg, lexicon, |_| {}).rules
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub train_size: usize,
    pub test_accuracy: f64,
    pub rules_learned: usize,
}

/// Learn on growing prefixes of `train` and measure accuracy on `test`.
pub fn learning_curve(
    train: &Corpus,
    test: &Corpus,
    sizes: &[usize],
    cfg: &LearnerConfig,
    lexicon: &ClassLexicon,
) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    if let Some(&too_big) = sizes.iter().find(|&&k| k > train.len()) {
        return Err(Error::Argument(format!(
            "training size {} exceeds the {} available samples",
            too_big,
            train.len()
        )));
    }
    if test.is_empty() {
        return Err(Error::Argument("learning curve needs a non-empty test set".into()));
    }

    let mut sizes: Vec<usize> = sizes.iter().copied().collect::<HashSet<_>>().into_iter().collect();
    sizes.sort_unstable();

    sizes
        .into_iter()
        .map(|k| {
            let rules = learn(&train.prefix(k), cfg, lexicon);
            let predicted = apply_rules(&rules, test, lexicon);
            let metrics = evaluate(&predicted, test)?;
            Ok(CurvePoint {
                train_size: k,
                test_accuracy: metrics.accuracy,
                rules_learned: rules.len(),
            })
        })
        .collect()
}

//! Word selection and feature extraction.
//!
//! A (modern, diplomatic) pair is described by a WORD indicator for the pair
//! itself plus EDIT features derived from the character-level edit operations
//! that turn the modern spelling into the diplomatic one, each emitted bare
//! and with one character of modern-side context on either flank.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::RwLock;

use crate::corpus::AlignedPair;
use crate::error::{Error, Result};

/// Index into the feature registry. Ids are dense and start at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interns feature names to dense ids. Interning is append-only; ids are
/// assigned in first-seen order, so a fixed featurization order gives a
/// reproducible registry.
#[derive(Debug, Default)]
pub struct FeatureRegistry {
    inner: RwLock<RegistryInner>,
}

#[derive(Debug, Default)]
struct RegistryInner {
    by_name: HashMap<String, FeatureId>,
    names: Vec<String>,
}

impl FeatureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&self, name: &str) -> FeatureId {
        if let Some(&id) = self.inner.read().unwrap().by_name.get(name) {
            return id;
        }
        let mut inner = self.inner.write().unwrap();
        if let Some(&id) = inner.by_name.get(name) {
            return id;
        }
        let id = FeatureId(inner.names.len() as u32);
        inner.names.push(name.to_string());
        inner.by_name.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<FeatureId> {
        self.inner.read().unwrap().by_name.get(name).copied()
    }

    pub fn name(&self, id: FeatureId) -> Option<String> {
        self.inner.read().unwrap().names.get(id.index()).cloned()
    }

    /// All names in id order.
    pub fn names(&self) -> Vec<String> {
        self.inner.read().unwrap().names.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sparse feature counts for one (modern, diplomatic) pair. Entries are
/// sorted by id and never zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureVector {
    entries: Vec<(FeatureId, u32)>,
}

impl FeatureVector {
    pub fn from_counts(counts: BTreeMap<FeatureId, u32>) -> Self {
        FeatureVector {
            entries: counts.into_iter().filter(|&(_, n)| n > 0).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weights absent from `weights` (registry grown after the vector was
    /// built) count as zero.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(id, n)| weights.get(id.index()).copied().unwrap_or(0.0) * f64::from(n))
            .sum()
    }
}

pub const BOUNDARY_START: char = '^';
pub const BOUNDARY_END: char = '$';

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EditOpKind {
    Sub,
    Ins,
    Del,
}

/// One character-level edit operation, with the modern-word characters
/// adjacent to the edit site. `prev_modern` is the modern character before
/// the site (`^` at the word start); `next_modern` is the modern character
/// after it (`$` at the word end). For insertions the site is a gap between
/// modern characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EditOp {
    pub kind: EditOpKind,
    pub modern_char: Option<char>,
    pub diplomatic_char: Option<char>,
    pub prev_modern: char,
    pub next_modern: char,
}

impl EditOp {
    /// Name without context, e.g. `del:u` or `sub:a>e`.
    pub fn bare_name(&self) -> String {
        match self.kind {
            EditOpKind::Sub => format!(
                "sub:{}>{}",
                self.modern_char.unwrap(),
                self.diplomatic_char.unwrap()
            ),
            EditOpKind::Ins => format!("ins:{}", self.diplomatic_char.unwrap()),
            EditOpKind::Del => format!("del:{}", self.modern_char.unwrap()),
        }
    }

    pub fn prev_context_name(&self) -> String {
        format!("{}|p={}", self.bare_name(), self.prev_modern)
    }

    pub fn next_context_name(&self) -> String {
        format!("{}|n={}", self.bare_name(), self.next_modern)
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bare_name())
    }
}

/// Edit operations of one minimal unit-cost alignment of `modern` into
/// `diplomatic`, in left-to-right order. Matches emit nothing. Ties in the
/// backtrace resolve match > substitution > deletion > insertion, scanning
/// from the end, so every pair has one canonical op sequence.
pub fn char_edit_ops(modern: &str, diplomatic: &str) -> Vec<EditOp> {
    let m: Vec<char> = modern.chars().collect();
    let d: Vec<char> = diplomatic.chars().collect();
    let (n, k) = (m.len(), d.len());
    let mut dist = vec![vec![0u32; k + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for j in 0..=k {
        dist[0][j] = j as u32;
    }
    for i in 1..=n {
        for j in 1..=k {
            let sub = dist[i - 1][j - 1] + u32::from(m[i - 1] != d[j - 1]);
            dist[i][j] = sub.min(dist[i - 1][j] + 1).min(dist[i][j - 1] + 1);
        }
    }
    let prev_of = |i: usize| if i >= 1 { m[i - 1] } else { BOUNDARY_START };
    let next_of = |i: usize| if i < n { m[i] } else { BOUNDARY_END };
    let mut ops = Vec::new();
    let (mut i, mut j) = (n, k);
    while i > 0 || j > 0 {
        let cur = dist[i][j];
        if i > 0 && j > 0 && m[i - 1] == d[j - 1] && cur == dist[i - 1][j - 1] {
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && cur == dist[i - 1][j - 1] + 1 {
            ops.push(EditOp {
                kind: EditOpKind::Sub,
                modern_char: Some(m[i - 1]),
                diplomatic_char: Some(d[j - 1]),
                prev_modern: prev_of(i - 1),
                next_modern: next_of(i),
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && cur == dist[i - 1][j] + 1 {
            ops.push(EditOp {
                kind: EditOpKind::Del,
                modern_char: Some(m[i - 1]),
                diplomatic_char: None,
                prev_modern: prev_of(i - 1),
                next_modern: next_of(i),
            });
            i -= 1;
        } else {
            ops.push(EditOp {
                kind: EditOpKind::Ins,
                modern_char: None,
                diplomatic_char: Some(d[j - 1]),
                prev_modern: prev_of(i),
                next_modern: next_of(i),
            });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Which feature families to emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureKinds {
    pub word: bool,
    pub edit: bool,
}

impl FeatureKinds {
    pub const ALL: FeatureKinds = FeatureKinds { word: true, edit: true };
    pub const WORD_ONLY: FeatureKinds = FeatureKinds { word: true, edit: false };
    pub const EDIT_ONLY: FeatureKinds = FeatureKinds { word: false, edit: true };
}

pub fn word_feature_name(modern: &str, diplomatic: &str) -> String {
    format!("word:{modern}>{diplomatic}")
}

/// Builds the sparse feature vector for a pair: the WORD indicator plus, for
/// every edit op, the bare op and its two context variants. Counts accumulate
/// when the same op occurs more than once.
pub fn featurize(
    registry: &FeatureRegistry,
    modern: &str,
    diplomatic: &str,
    kinds: FeatureKinds,
) -> FeatureVector {
    let mut counts: BTreeMap<FeatureId, u32> = BTreeMap::new();
    let mut bump = |id: FeatureId| *counts.entry(id).or_insert(0) += 1;
    if kinds.word {
        bump(registry.intern(&word_feature_name(modern, diplomatic)));
    }
    if kinds.edit {
        for op in char_edit_ops(modern, diplomatic) {
            bump(registry.intern(&op.bare_name()));
            bump(registry.intern(&op.prev_context_name()));
            bump(registry.intern(&op.next_context_name()));
        }
    }
    FeatureVector::from_counts(counts)
}

/// The modeled modern words and the diplomatic forms observed for each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordList {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl WordList {
    pub fn from_entries<I, C>(entries: I) -> Self
    where
        I: IntoIterator<Item = (String, C)>,
        C: IntoIterator<Item = String>,
    {
        WordList {
            entries: entries
                .into_iter()
                .map(|(m, ds)| (m, ds.into_iter().collect()))
                .collect(),
        }
    }

    /// Adds the word with an empty candidate set if absent.
    pub fn insert_word(&mut self, modern: &str) {
        self.entries.entry(modern.to_string()).or_default();
    }

    pub fn insert_observation(&mut self, modern: &str, diplomatic: &str) {
        self.entries
            .entry(modern.to_string())
            .or_default()
            .insert(diplomatic.to_string());
    }

    pub fn contains(&self, modern: &str) -> bool {
        self.entries.contains_key(modern)
    }

    pub fn candidates(&self, modern: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(modern)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub const DEFAULT_MIN_FREQ: u64 = 70;
pub const DEFAULT_MAX_DOMINANT: f64 = 0.8;

/// Words with three fixed entries, after a classic manual study of
/// compositor spelling habits.
pub const HINMAN_WORDS: [&str; 3] = ["do", "go", "here"];

/// Selects modern words to model: frequency strictly above `min_freq`, not in
/// the name blocklist, and no single diplomatic form covering `max_dominant`
/// or more of the occurrences (strictly below). Candidate sets collect every
/// observed form for the kept words.
pub fn select_auto_wordlist(
    pairs: &[AlignedPair],
    min_freq: u64,
    max_dominant: f64,
    name_blocklist: &BTreeSet<String>,
) -> Result<WordList> {
    let mut counts: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for pair in pairs {
        *counts
            .entry(&pair.modern)
            .or_default()
            .entry(&pair.diplomatic)
            .or_insert(0) += 1;
    }
    let mut list = WordList::default();
    for (modern, forms) in &counts {
        if name_blocklist.contains(*modern) {
            continue;
        }
        let freq: u64 = forms.values().sum();
        let top = forms.values().copied().max().unwrap_or(0);
        if freq > min_freq && (top as f64) < max_dominant * freq as f64 {
            for form in forms.keys() {
                list.insert_observation(modern, form);
            }
        }
    }
    if list.is_empty() {
        return Err(Error::EmptyWordList {
            min_freq,
            max_dominant,
        });
    }
    Ok(list)
}

/// The fixed three-word list; candidate sets come from the corpus. Words the
/// corpus never shows are kept with empty candidates and a warning, so the
/// list shape is stable across inputs.
pub fn hinman_wordlist(pairs: &[AlignedPair]) -> WordList {
    let mut list = WordList::default();
    for word in HINMAN_WORDS {
        list.insert_word(word);
    }
    for pair in pairs {
        if HINMAN_WORDS.contains(&pair.modern.as_str()) {
            list.insert_observation(&pair.modern, &pair.diplomatic);
        }
    }
    for word in HINMAN_WORDS {
        if list.candidates(word).is_none_or(BTreeSet::is_empty) {
            log::warn!("word {word:?} never occurs in the aligned corpus; keeping it with no candidates");
        }
    }
    list
}

/// Character names shipped as a default blocklist for automatic word
/// selection.
pub fn default_name_blocklist() -> BTreeSet<String> {
    include_str!("../data/folio_name_blocklist.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

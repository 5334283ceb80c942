//! Ingestion: tokenization, word-level alignment of modern and diplomatic
//! transcriptions, spacing extraction from glyph boxes, and page assembly.
//!
//! Everything here is pure over immutable inputs; the heavier steps are safe
//! to run per page in parallel.

use std::collections::{BTreeMap, BTreeSet};

use crate::features::WordList;

/// One lowercased token from a transcription. Punctuation marks are their own
/// tokens, split off the ends of the words they were attached to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub page_id: String,
    pub line_index: usize,
}

impl Token {
    /// Word tokens carry at least one alphanumeric character; everything else
    /// is detached punctuation.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }
}

/// A modern word paired with the diplomatic form printed for it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AlignedPair {
    pub modern: String,
    pub diplomatic: String,
}

impl AlignedPair {
    pub fn new(modern: impl Into<String>, diplomatic: impl Into<String>) -> Self {
        AlignedPair {
            modern: modern.into(),
            diplomatic: diplomatic.into(),
        }
    }

    pub fn is_exact_match(&self) -> bool {
        self.modern == self.diplomatic
    }
}

/// A glyph bounding box from the OCR geometry output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlyphBox {
    pub glyph: char,
    pub page_id: String,
    pub line_index: u32,
    /// Left edge, pixels.
    pub x_start: u32,
    /// Right edge, pixels; `x_start <= x_end`.
    pub x_end: u32,
}

/// One page's observations: aligned word pairs and medial-comma spacing
/// widths. Pages with no pairs are kept; they still carry prior (and
/// spacing) evidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Page {
    pub page_id: String,
    pub pairs: Vec<AlignedPair>,
    /// Pixel widths, each already clamped to `[0, s_max]` by the producer.
    pub spacings: Vec<u32>,
}

/// Lowercases, splits on whitespace, and detaches leading/trailing
/// punctuation into separate tokens. Line indices follow the input's line
/// breaks. Empty input gives an empty list.
pub fn tokenize(page_id: &str, text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut push = |text: String, line_index: usize| {
        tokens.push(Token {
            text,
            page_id: page_id.to_string(),
            line_index,
        });
    };
    for (line_index, line) in text.lines().enumerate() {
        for chunk in line.split_whitespace() {
            let lower = chunk.to_lowercase();
            let chars: Vec<char> = lower.chars().collect();
            match chars.iter().position(|c| c.is_alphanumeric()) {
                None => {
                    // all punctuation: one token per mark
                    for ch in chars {
                        push(ch.to_string(), line_index);
                    }
                }
                Some(start) => {
                    let end = chars.iter().rposition(|c| c.is_alphanumeric()).unwrap();
                    for ch in &chars[..start] {
                        push(ch.to_string(), line_index);
                    }
                    push(chars[start..=end].iter().collect(), line_index);
                    for ch in &chars[end + 1..] {
                        push(ch.to_string(), line_index);
                    }
                }
            }
        }
    }
    tokens
}

/// Inverse of [`tokenize`] up to whitespace: joins tokens with single spaces,
/// restoring blank lines so that line indices survive a round trip.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut current_line = 0usize;
    let mut line_started = false;
    for token in tokens {
        while current_line < token.line_index {
            out.push('\n');
            current_line += 1;
            line_started = false;
        }
        if line_started {
            out.push(' ');
        }
        out.push_str(&token.text);
        line_started = true;
    }
    out
}

// Word-level alignment costs, in tenths so the DP stays in exact integers.
const WORD_GAP_COST: u64 = 10;
const WORD_SUB_COST: u64 = 10;
// Discounted substitution for likely spelling variants (character-level
// normalized edit distance below 0.5).
const WORD_SUB_NEAR_COST: u64 = 4;

/// Minimal word-level edit-distance alignment of two token streams. Returns
/// the one-to-one aligned pairs (exact matches and substitutions) in reading
/// order; word insertions and deletions are dropped. Substitution cost drops
/// from 1 to 0.4 when the two words are within 0.5 normalized character edit
/// distance, biasing the alignment toward pairing spelling variants.
///
/// Swapping the arguments flips the pairs but yields the same pair multiset:
/// the DP always runs on a canonical argument order.
pub fn align_word_level(modern: &[Token], diplomatic: &[Token]) -> Vec<AlignedPair> {
    let m_words: Vec<&str> = modern.iter().map(|t| t.text.as_str()).collect();
    let d_words: Vec<&str> = diplomatic.iter().map(|t| t.text.as_str()).collect();
    let flipped = m_words > d_words;
    let (a, b) = if flipped {
        (&d_words, &m_words)
    } else {
        (&m_words, &d_words)
    };
    align_seqs(a, b)
        .into_iter()
        .map(|(i, j)| {
            if flipped {
                AlignedPair::new(b[j], a[i])
            } else {
                AlignedPair::new(a[i], b[j])
            }
        })
        .collect()
}

fn word_pair_cost(a: &str, b: &str) -> u64 {
    if a == b {
        return 0;
    }
    let len = a.chars().count().max(b.chars().count());
    if len > 0 && (levenshtein(a, b) as f64) / (len as f64) < 0.5 {
        WORD_SUB_NEAR_COST
    } else {
        WORD_SUB_COST
    }
}

/// DP over word sequences; returns the (i, j) index pairs of diagonal moves.
fn align_seqs(a: &[&str], b: &[&str]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut dist = vec![vec![0u64; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i as u64 * WORD_GAP_COST;
    }
    for j in 0..=m {
        dist[0][j] = j as u64 * WORD_GAP_COST;
    }
    let mut pair_cost = vec![vec![0u64; m]; n];
    for i in 1..=n {
        for j in 1..=m {
            let cost = word_pair_cost(a[i - 1], b[j - 1]);
            pair_cost[i - 1][j - 1] = cost;
            dist[i][j] = (dist[i - 1][j - 1] + cost)
                .min(dist[i - 1][j] + WORD_GAP_COST)
                .min(dist[i][j - 1] + WORD_GAP_COST);
        }
    }
    // Backtrace from the end, preferring pairing > dropping from a > dropping
    // from b.
    let mut pairs = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let cur = dist[i][j];
        if i > 0 && j > 0 && cur == dist[i - 1][j - 1] + pair_cost[i - 1][j - 1] {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if i > 0 && cur == dist[i - 1][j] + WORD_GAP_COST {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    pairs
}

/// Plain character-level Levenshtein distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> u32 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
    let mut cur = vec![0u32; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i as u32 + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + u32::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Result of [`extract_spacings`]: per-page widths in reading order plus
/// clamp diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpacingExtraction {
    pub widths: BTreeMap<String, Vec<u32>>,
    /// Overlapping boxes: raw gap was negative and got clamped to 0.
    pub clamped_negative: usize,
    /// Raw gap exceeded `s_max` and got clamped down.
    pub clamped_over_max: usize,
}

/// Measures the whitespace after every medial comma: a comma glyph that is
/// not the last glyph on its line. Width is the gap to the next glyph's left
/// edge, clamped to `[0, s_max]`.
pub fn extract_spacings(boxes: &[GlyphBox], s_max: u32) -> SpacingExtraction {
    let mut sorted: Vec<&GlyphBox> = boxes.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.page_id, a.line_index, a.x_start, a.x_end)
            .cmp(&(&b.page_id, b.line_index, b.x_start, b.x_end))
    });
    let mut out = SpacingExtraction::default();
    for pair in sorted.windows(2) {
        let (cur, next) = (pair[0], pair[1]);
        if cur.glyph != ',' || cur.page_id != next.page_id || cur.line_index != next.line_index {
            continue;
        }
        let raw = i64::from(next.x_start) - i64::from(cur.x_end);
        let width = if raw < 0 {
            out.clamped_negative += 1;
            0
        } else if raw > i64::from(s_max) {
            out.clamped_over_max += 1;
            s_max
        } else {
            raw as u32
        };
        out.widths.entry(cur.page_id.clone()).or_default().push(width);
    }
    out
}

/// Drops exact-match pairs (diplomatic form identical to the modern word).
/// Off by default in the pipeline; retained matches are what let the model
/// see the unchanged spelling as one of the candidates.
pub fn drop_exact_matches(pairs: Vec<AlignedPair>) -> Vec<AlignedPair> {
    pairs.into_iter().filter(|p| !p.is_exact_match()).collect()
}

/// Assembles pages: keeps only pairs whose modern word is in the word list
/// and attaches spacing lists by page id. Page order follows `aligned`;
/// pages that appear only in the spacing data are appended with empty pairs
/// and a warning.
pub fn build_pages(
    aligned: &[(String, Vec<AlignedPair>)],
    spacings: &BTreeMap<String, Vec<u32>>,
    wordlist: &WordList,
) -> Vec<Page> {
    let mut pages = Vec::with_capacity(aligned.len());
    let mut seen = BTreeSet::new();
    for (page_id, pairs) in aligned {
        seen.insert(page_id.clone());
        pages.push(Page {
            page_id: page_id.clone(),
            pairs: pairs
                .iter()
                .filter(|p| wordlist.contains(&p.modern))
                .cloned()
                .collect(),
            spacings: spacings.get(page_id).cloned().unwrap_or_default(),
        });
    }
    for (page_id, widths) in spacings {
        if !seen.contains(page_id) {
            log::warn!("page {page_id} has spacing data but no transcription; keeping it with no pairs");
            pages.push(Page {
                page_id: page_id.clone(),
                pairs: Vec::new(),
                spacings: widths.clone(),
            });
        }
    }
    pages
}

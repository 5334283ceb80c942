//! The generative model: compositor prior, orthographic channel, whitespace
//! channel, and corpus likelihood.
//!
//! Scoring is pure over immutable `ModelParams` and a `CandidateTable`, so
//! pages can be evaluated in parallel. The orthographic channel normalizes
//! over the corpus-observed candidate set D(m), not an open vocabulary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Page;
use crate::error::{Error, Result};
use crate::features::{featurize, FeatureKinds, FeatureRegistry, FeatureVector, WordList};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrthoMode {
    /// P(d|m,c) ∝ exp(w_c·f(m,d)), softmax over D(m).
    Loglinear,
    /// Plain per-(c,m) multinomial over D(m).
    Basic,
}

/// Per-compositor candidate probabilities for BASIC mode: modern word →
/// diplomatic form → probability.
pub type BasicProbs = BTreeMap<String, BTreeMap<String, f64>>;

/// All learned parameters. `weights` rows are dense by feature id and apply
/// in LOGLINEAR mode; `basic_probs` applies in BASIC mode. The spacing
/// channel enters the joint as θ_c[s]^spacing_exponent, so exponent 0 turns
/// it off without changing any shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub num_compositors: usize,
    pub s_max: u32,
    pub ortho_mode: OrthoMode,
    pub prior: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub basic_probs: Vec<BasicProbs>,
    pub spacing_exponent: f64,
}

impl ModelParams {
    /// Zero weights, uniform prior and spacing: the state before any
    /// training.
    pub fn uniform(
        num_compositors: usize,
        s_max: u32,
        num_features: usize,
        ortho_mode: OrthoMode,
    ) -> Self {
        let c = num_compositors;
        let outcomes = s_max as usize + 1;
        ModelParams {
            num_compositors: c,
            s_max,
            ortho_mode,
            prior: vec![1.0 / c as f64; c],
            weights: vec![vec![0.0; num_features]; c],
            theta: vec![vec![1.0 / outcomes as f64; outcomes]; c],
            basic_probs: Vec::new(),
            spacing_exponent: 1.0,
        }
    }

    /// Shape and normalization checks; run after deserialization and in
    /// tests.
    pub fn validate(&self) -> Result<()> {
        let c = self.num_compositors;
        if c == 0 {
            return Err(Error::InvalidConfig("num_compositors must be >= 1".into()));
        }
        if self.prior.len() != c || self.theta.len() != c {
            return Err(Error::InvalidConfig(format!(
                "expected {c} prior entries and theta rows, got {} and {}",
                self.prior.len(),
                self.theta.len()
            )));
        }
        let prior_sum: f64 = self.prior.iter().sum();
        if (prior_sum - 1.0).abs() > 1e-12 || self.prior.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig(format!(
                "prior is not a probability vector (sum {prior_sum})"
            )));
        }
        let outcomes = self.s_max as usize + 1;
        for (ci, row) in self.theta.iter().enumerate() {
            if row.len() != outcomes {
                return Err(Error::InvalidConfig(format!(
                    "theta[{ci}] has {} outcomes, expected {outcomes}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || row.iter().any(|p| *p <= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "theta[{ci}] is not a smoothed probability vector (sum {sum})"
                )));
            }
        }
        match self.ortho_mode {
            OrthoMode::Loglinear => {
                if self.weights.len() != c {
                    return Err(Error::InvalidConfig(format!(
                        "expected {c} weight vectors, got {}",
                        self.weights.len()
                    )));
                }
                if !self.weights.iter().flatten().all(|w| w.is_finite()) {
                    return Err(Error::NonFinite { quantity: "weights" });
                }
            }
            OrthoMode::Basic => {
                if self.basic_probs.len() != c {
                    return Err(Error::InvalidConfig(format!(
                        "expected {c} basic probability tables, got {}",
                        self.basic_probs.len()
                    )));
                }
                for (ci, table) in self.basic_probs.iter().enumerate() {
                    for (m, forms) in table {
                        let sum: f64 = forms.values().sum();
                        if (sum - 1.0).abs() > 1e-12 {
                            return Err(Error::InvalidConfig(format!(
                                "basic_probs[{ci}][{m}] sums to {sum}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The candidate sets D(m) with featurized candidates, indexed for scoring.
/// Word order and feature ids are deterministic (word list order, then
/// candidate order), so two tables built from the same word list agree.
#[derive(Debug)]
pub struct CandidateTable {
    registry: FeatureRegistry,
    words: Vec<WordCandidates>,
    word_index: BTreeMap<String, usize>,
    kinds: FeatureKinds,
}

#[derive(Debug)]
pub struct WordCandidates {
    pub modern: String,
    pub forms: Vec<String>,
    pub features: Vec<FeatureVector>,
}

impl WordCandidates {
    pub fn form_position(&self, diplomatic: &str) -> Option<usize> {
        self.forms.iter().position(|f| f == diplomatic)
    }
}

impl CandidateTable {
    pub fn build(wordlist: &WordList, kinds: FeatureKinds) -> Self {
        let registry = FeatureRegistry::new();
        let mut words = Vec::with_capacity(wordlist.len());
        let mut word_index = BTreeMap::new();
        for (modern, candidates) in wordlist.iter() {
            let forms: Vec<String> = candidates.iter().cloned().collect();
            let features = forms
                .iter()
                .map(|d| featurize(&registry, modern, d, kinds))
                .collect();
            word_index.insert(modern.clone(), words.len());
            words.push(WordCandidates {
                modern: modern.clone(),
                forms,
                features,
            });
        }
        CandidateTable {
            registry,
            words,
            word_index,
            kinds,
        }
    }

    pub fn registry(&self) -> &FeatureRegistry {
        &self.registry
    }

    pub fn kinds(&self) -> FeatureKinds {
        self.kinds
    }

    pub fn num_features(&self) -> usize {
        self.registry.len()
    }

    pub fn words(&self) -> &[WordCandidates] {
        &self.words
    }

    pub fn word_position(&self, modern: &str) -> Option<usize> {
        self.word_index.get(modern).copied()
    }

    pub fn word(&self, modern: &str) -> Option<&WordCandidates> {
        self.word_position(modern).map(|i| &self.words[i])
    }
}

/// Stable log Σ exp. Empty input or all −inf gives −inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// log P(d|m,c). LOGLINEAR: softmax of w_c·f over D(m) with max subtraction.
/// BASIC: table lookup. `d` outside D(m) means the page was built against a
/// different word list than the model, which is a pipeline bug worth an
/// error rather than a silent smooth-over.
pub fn ortho_log_prob(
    params: &ModelParams,
    table: &CandidateTable,
    c: usize,
    modern: &str,
    diplomatic: &str,
) -> Result<f64> {
    match params.ortho_mode {
        OrthoMode::Loglinear => {
            let entry = table
                .word(modern)
                .ok_or_else(|| Error::UnknownWord(modern.to_string()))?;
            let position = entry.form_position(diplomatic).ok_or_else(|| {
                Error::UnknownCandidate {
                    modern: modern.to_string(),
                    diplomatic: diplomatic.to_string(),
                }
            })?;
            let weights = &params.weights[c];
            let scores: Vec<f64> = entry.features.iter().map(|f| f.dot(weights)).collect();
            Ok(scores[position] - log_sum_exp(&scores))
        }
        OrthoMode::Basic => {
            let forms = params.basic_probs[c]
                .get(modern)
                .ok_or_else(|| Error::UnknownWord(modern.to_string()))?;
            let p = forms.get(diplomatic).ok_or_else(|| Error::UnknownCandidate {
                modern: modern.to_string(),
                diplomatic: diplomatic.to_string(),
            })?;
            Ok(p.ln())
        }
    }
}

/// log θ_c[s]^exponent. Widths must already be clamped by ingestion.
pub fn spacing_log_prob(params: &ModelParams, c: usize, s: u32) -> Result<f64> {
    if s > params.s_max {
        return Err(Error::SpacingOutOfRange {
            width: s,
            s_max: params.s_max,
        });
    }
    Ok(params.spacing_exponent * params.theta[c][s as usize].ln())
}

/// log [ π_c · Π_j P(d_ij|m_ij,c) · Π_k θ_c[s_ik]^exponent ].
pub fn page_log_joint(
    params: &ModelParams,
    table: &CandidateTable,
    page: &Page,
    c: usize,
) -> Result<f64> {
    let mut total = params.prior[c].ln();
    for pair in &page.pairs {
        total += ortho_log_prob(params, table, c, &pair.modern, &pair.diplomatic)?;
    }
    for &s in &page.spacings {
        total += spacing_log_prob(params, c, s)?;
    }
    Ok(total)
}

/// Σ_i log Σ_c exp(page_log_joint). The per-page marginalization is the
/// tractable sum over assignments; page terms are computed independently
/// (and in parallel), the final sum serially for reproducibility.
pub fn corpus_log_likelihood(
    params: &ModelParams,
    table: &CandidateTable,
    pages: &[Page],
) -> Result<f64> {
    let per_page = crate::exec::map_slice(pages, |page| -> Result<f64> {
        let joints: Vec<f64> = (0..params.num_compositors)
            .map(|c| page_log_joint(params, table, page, c))
            .collect::<Result<_>>()?;
        Ok(log_sum_exp(&joints))
    });
    let mut total = 0.0;
    for term in per_page {
        total += term?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AlignedPair;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_word_list() -> WordList {
        WordList::from_entries([
            (
                "do".to_string(),
                vec!["do".to_string(), "doe".to_string()],
            ),
            (
                "here".to_string(),
                vec!["heere".to_string()],
            ),
        ])
    }

    fn page(id: &str, pairs: &[(&str, &str)], spacings: &[u32]) -> Page {
        Page {
            page_id: id.to_string(),
            pairs: pairs
                .iter()
                .map(|&(m, d)| AlignedPair::new(m, d))
                .collect(),
            spacings: spacings.to_vec(),
        }
    }

    #[test]
    fn ortho_single_candidate_is_certain() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(2, 40, table.num_features(), OrthoMode::Loglinear);
        let lp = ortho_log_prob(&params, &table, 0, "here", "heere").unwrap();
        assert_eq!(lp, 0.0);
    }

    #[test]
    fn ortho_zero_weights_is_uniform() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(2, 40, table.num_features(), OrthoMode::Loglinear);
        let lp = ortho_log_prob(&params, &table, 1, "do", "doe").unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ortho_single_word_indicator_softmax() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let mut params = ModelParams::uniform(1, 40, table.num_features(), OrthoMode::Loglinear);
        let id = table.registry().lookup("word:do>doe").unwrap();
        params.weights[0][id.index()] = 1.0;
        let lp = ortho_log_prob(&params, &table, 0, "do", "doe").unwrap();
        let e = std::f64::consts::E;
        assert!((lp - (e / (e + 1.0)).ln()).abs() < 1e-12);
        assert!((lp - (-0.3133)).abs() < 5e-5);
        let other = ortho_log_prob(&params, &table, 0, "do", "do").unwrap();
        assert!((other - (1.0 / (e + 1.0)).ln()).abs() < 1e-12);
    }

    #[test]
    fn ortho_rejects_unknown_word_and_candidate() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(1, 40, table.num_features(), OrthoMode::Loglinear);
        assert!(matches!(
            ortho_log_prob(&params, &table, 0, "young", "yong"),
            Err(Error::UnknownWord(_))
        ));
        assert!(matches!(
            ortho_log_prob(&params, &table, 0, "do", "dooe"),
            Err(Error::UnknownCandidate { .. })
        ));
    }

    #[test]
    fn ortho_normalizes_under_random_weights() {
        let wordlist = WordList::from_entries([
            (
                "dear".to_string(),
                vec!["deare".to_string(), "deere".to_string(), "dear".to_string()],
            ),
            (
                "young".to_string(),
                vec!["young".to_string(), "yong".to_string()],
            ),
        ]);
        let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let mut params =
                ModelParams::uniform(3, 40, table.num_features(), OrthoMode::Loglinear);
            for row in &mut params.weights {
                for w in row.iter_mut() {
                    *w = rng.random_range(-4.0..4.0);
                }
            }
            for c in 0..3 {
                for entry in table.words() {
                    let total: f64 = entry
                        .forms
                        .iter()
                        .map(|d| {
                            ortho_log_prob(&params, &table, c, &entry.modern, d)
                                .unwrap()
                                .exp()
                        })
                        .sum();
                    assert!((total - 1.0).abs() < 1e-10, "sum {total}");
                }
            }
        }
    }

    #[test]
    fn basic_mode_is_table_lookup() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let mut params = ModelParams::uniform(1, 40, 0, OrthoMode::Basic);
        params.weights.clear();
        let mut probs = BasicProbs::new();
        probs.insert(
            "do".to_string(),
            [("do".to_string(), 0.25), ("doe".to_string(), 0.75)]
                .into_iter()
                .collect(),
        );
        params.basic_probs = vec![probs];
        let lp = ortho_log_prob(&params, &table, 0, "do", "doe").unwrap();
        assert!((lp - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn spacing_uniform_and_point_mass() {
        let mut params = ModelParams::uniform(1, 40, 0, OrthoMode::Loglinear);
        let lp = spacing_log_prob(&params, 0, 7).unwrap();
        assert!((lp - (1.0f64 / 41.0).ln()).abs() < 1e-15);
        params.theta[0] = vec![0.5 / 40.0; 41];
        params.theta[0][3] = 0.5;
        let lp3 = spacing_log_prob(&params, 0, 3).unwrap();
        assert!((lp3 - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn spacing_out_of_range_errors() {
        let params = ModelParams::uniform(1, 40, 0, OrthoMode::Loglinear);
        assert!(matches!(
            spacing_log_prob(&params, 0, 41),
            Err(Error::SpacingOutOfRange { width: 41, s_max: 40 })
        ));
    }

    #[test]
    fn spacing_exponent_zero_ignores_channel() {
        let mut params = ModelParams::uniform(1, 40, 0, OrthoMode::Loglinear);
        params.spacing_exponent = 0.0;
        assert_eq!(spacing_log_prob(&params, 0, 7).unwrap(), 0.0);
    }

    #[test]
    fn empty_page_scores_prior_only() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(2, 40, table.num_features(), OrthoMode::Loglinear);
        let lp = page_log_joint(&params, &table, &page("p", &[], &[]), 0).unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn page_joint_sums_channels() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(2, 40, table.num_features(), OrthoMode::Loglinear);
        // prior 1/2, one singleton pair (log 1), one uniform pair (log 1/2),
        // one uniform spacing (log 1/41)
        let p = page("p", &[("here", "heere"), ("do", "do")], &[5]);
        let lp = page_log_joint(&params, &table, &p, 1).unwrap();
        let expected = 0.5f64.ln() + 0.0 + 0.5f64.ln() + (1.0f64 / 41.0).ln();
        assert!((lp - expected).abs() < 1e-12);
    }

    #[test]
    fn corpus_ll_single_compositor_degenerates_to_sum() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(1, 40, table.num_features(), OrthoMode::Loglinear);
        let pages = vec![
            page("a", &[("do", "doe")], &[1, 2]),
            page("b", &[("here", "heere")], &[]),
        ];
        let ll = corpus_log_likelihood(&params, &table, &pages).unwrap();
        let direct: f64 = pages
            .iter()
            .map(|p| page_log_joint(&params, &table, p, 0).unwrap())
            .sum();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn corpus_ll_identical_compositors_fold_prior() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let params = ModelParams::uniform(3, 40, table.num_features(), OrthoMode::Loglinear);
        let pages = vec![page("a", &[("do", "do")], &[0]), page("b", &[], &[3, 3])];
        let ll = corpus_log_likelihood(&params, &table, &pages).unwrap();
        let folded: f64 = pages
            .iter()
            .map(|p| page_log_joint(&params, &table, p, 0).unwrap() - (1.0f64 / 3.0).ln())
            .sum();
        assert!((ll - folded).abs() < 1e-12);
    }

    #[test]
    fn corpus_ll_matches_brute_force_enumeration() {
        // plain-arithmetic oracle, no shared code with the scorer
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let mut params = ModelParams::uniform(2, 4, table.num_features(), OrthoMode::Loglinear);
        params.prior = vec![0.3, 0.7];
        params.theta = vec![
            vec![0.5, 0.2, 0.1, 0.1, 0.1],
            vec![0.1, 0.1, 0.2, 0.3, 0.3],
        ];
        let id = table.registry().lookup("word:do>doe").unwrap();
        params.weights[0][id.index()] = 1.5;
        params.weights[1][id.index()] = -0.5;
        let pages = vec![
            page("a", &[("do", "doe"), ("do", "do")], &[0, 3]),
            page("b", &[("do", "doe")], &[]),
            page("c", &[("here", "heere")], &[4, 4, 1]),
        ];
        let p_doe = |w: f64| w.exp() / (w.exp() + 1.0);
        let channel = |c: usize, d: &str| -> f64 {
            let w = params.weights[c][id.index()];
            match d {
                "doe" => p_doe(w),
                "do" => 1.0 - p_doe(w),
                "heere" => 1.0,
                _ => unreachable!(),
            }
        };
        let mut expected = 0.0;
        for p in &pages {
            let mut marginal = 0.0;
            for c in 0..2 {
                let mut joint = params.prior[c];
                for pair in &p.pairs {
                    joint *= channel(c, &pair.diplomatic);
                }
                for &s in &p.spacings {
                    joint *= params.theta[c][s as usize];
                }
                marginal += joint;
            }
            expected += marginal.ln();
        }
        let ll = corpus_log_likelihood(&params, &table, &pages).unwrap();
        assert!((ll - expected).abs() < 1e-12, "{ll} vs {expected}");
    }

    #[test]
    fn corpus_ll_invariant_under_index_permutation() {
        let table = CandidateTable::build(&two_word_list(), FeatureKinds::ALL);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let mut params =
                ModelParams::uniform(3, 6, table.num_features(), OrthoMode::Loglinear);
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let z: f64 = raw.iter().sum();
            params.prior = raw.iter().map(|p| p / z).collect();
            for row in &mut params.weights {
                for w in row.iter_mut() {
                    *w = rng.random_range(-2.0..2.0);
                }
            }
            for row in &mut params.theta {
                let raw: Vec<f64> = (0..7).map(|_| rng.random_range(0.1..1.0)).collect();
                let z: f64 = raw.iter().sum();
                *row = raw.iter().map(|p| p / z).collect();
            }
            let pages = vec![
                page("a", &[("do", "doe")], &[2]),
                page("b", &[("do", "do"), ("here", "heere")], &[0, 6]),
            ];
            let ll = corpus_log_likelihood(&params, &table, &pages).unwrap();
            let perm = [2, 0, 1];
            let mut permuted = params.clone();
            for (to, &from) in perm.iter().enumerate() {
                permuted.prior[to] = params.prior[from];
                permuted.weights[to] = params.weights[from].clone();
                permuted.theta[to] = params.theta[from].clone();
            }
            let ll_perm = corpus_log_likelihood(&permuted, &table, &pages).unwrap();
            assert!((ll - ll_perm).abs() < 1e-12);
        }
    }

    #[test]
    fn validate_catches_bad_shapes() {
        let mut params = ModelParams::uniform(2, 4, 3, OrthoMode::Loglinear);
        assert!(params.validate().is_ok());
        params.prior = vec![0.6, 0.6];
        assert!(params.validate().is_err());
        let mut params = ModelParams::uniform(2, 4, 3, OrthoMode::Loglinear);
        params.theta[1][0] = 0.0;
        assert!(params.validate().is_err());
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        let x = log_sum_exp(&[1000.0, 1000.0]);
        assert!((x - (1000.0 + 2.0f64.ln())).abs() < 1e-9);
        let y = log_sum_exp(&[f64::NEG_INFINITY, 0.0]);
        assert!(y.abs() < 1e-15);
    }
}

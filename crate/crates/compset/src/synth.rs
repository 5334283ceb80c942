//! Synthetic corpora sampled forward from planted parameters, the ground
//! truth for recovery tests.
//!
//! Planting is a rotation: for word index wi, compositor c prefers candidate
//! (c + wi) mod |D(m)|, receiving weight +separation on that WORD indicator
//! and −separation on the others. Spacing multinomials decay exponentially
//! away from a per-compositor mode width. separation 0 collapses every
//! compositor to the same distribution, the unidentifiable limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AlignedPair, Page};
use crate::error::{Error, Result};
use crate::eval::Attribution;
use crate::exec;
use crate::features::{word_feature_name, FeatureKinds, WordList};
use crate::model::{CandidateTable, ModelParams, OrthoMode};

/// How sharply planted θ concentrates around its mode per unit of
/// separation; at separation 3 the mass halves roughly every width step.
const SPACING_CONCENTRATION: f64 = 1.0 / 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub num_compositors: usize,
    pub pages_per_compositor: usize,
    pub pairs_per_page: usize,
    pub spacings_per_page: usize,
    /// (modern word, diplomatic candidates); every candidate set needs at
    /// least two distinct forms, otherwise the word carries no signal.
    pub vocabulary: Vec<(String, Vec<String>)>,
    /// Scales planted weight magnitudes and spacing concentration.
    pub separation: f64,
    /// Mode spacing width per compositor, cycled when C exceeds the list.
    pub spacing_modes: Vec<u32>,
    pub s_max: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_compositors: 3,
            pages_per_compositor: 40,
            pairs_per_page: 25,
            spacings_per_page: 20,
            vocabulary: default_vocabulary(),
            separation: 3.0,
            spacing_modes: vec![1, 6, 12],
            s_max: 40,
            seed: 0,
        }
    }
}

/// Spelling variants used throughout historical-printing studies of this
/// book.
pub fn default_vocabulary() -> Vec<(String, Vec<String>)> {
    let entry = |m: &str, ds: &[&str]| (m.to_string(), ds.iter().map(|d| d.to_string()).collect());
    vec![
        entry("do", &["do", "doe"]),
        entry("go", &["go", "goe"]),
        entry("here", &["here", "heere"]),
        entry("dear", &["dear", "deare", "deere"]),
        entry("young", &["young", "yong"]),
    ]
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_compositors == 0 || self.pages_per_compositor == 0 {
            return Err(Error::InvalidConfig(
                "need at least one compositor and one page per compositor".into(),
            ));
        }
        if self.vocabulary.is_empty() {
            return Err(Error::InvalidConfig("vocabulary is empty".into()));
        }
        if self.spacing_modes.is_empty() {
            return Err(Error::InvalidConfig("spacing_modes is empty".into()));
        }
        if let Some(bad) = self.spacing_modes.iter().find(|&&m| m > self.s_max) {
            return Err(Error::InvalidConfig(format!(
                "spacing mode {bad} exceeds s_max {}",
                self.s_max
            )));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::InvalidConfig("separation must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn wordlist(&self) -> Result<WordList> {
        let list = WordList::from_entries(
            self.vocabulary
                .iter()
                .map(|(m, ds)| (m.clone(), ds.iter().cloned())),
        );
        for (word, candidates) in list.iter() {
            if candidates.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "word {word:?} has {} distinct candidate(s); need at least 2",
                    candidates.len()
                )));
            }
        }
        if list.len() != self.vocabulary.len() {
            return Err(Error::InvalidConfig(
                "vocabulary lists a modern word twice".into(),
            ));
        }
        Ok(list)
    }
}

/// Planted preferred-candidate index for (compositor, word index).
pub fn planted_preference(c: usize, word_index: usize, num_candidates: usize) -> usize {
    (c + word_index) % num_candidates
}

fn planted_params(config: &SynthConfig, table: &CandidateTable) -> ModelParams {
    let c_total = config.num_compositors;
    let mut params = ModelParams::uniform(
        c_total,
        config.s_max,
        table.num_features(),
        OrthoMode::Loglinear,
    );
    for c in 0..c_total {
        for (wi, entry) in table.words().iter().enumerate() {
            let pref = planted_preference(c, wi, entry.forms.len());
            for (ci, form) in entry.forms.iter().enumerate() {
                let id = table
                    .registry()
                    .lookup(&word_feature_name(&entry.modern, form))
                    .expect("table interned every word feature");
                params.weights[c][id.index()] =
                    if ci == pref { config.separation } else { -config.separation };
            }
        }
        let mode = config.spacing_modes[c % config.spacing_modes.len()];
        let sharpness = config.separation * SPACING_CONCENTRATION;
        let raw: Vec<f64> = (0..=config.s_max)
            .map(|s| (-sharpness * (f64::from(s) - f64::from(mode)).abs()).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        params.theta[c] = raw.iter().map(|p| p / z).collect();
    }
    params
}

fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (i, p) in probs.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return i;
        }
    }
    probs.len() - 1
}

/// Samples pages from the planted model: per page a fixed compositor, then
/// i.i.d. (modern, diplomatic) pairs (modern word uniform over the
/// vocabulary) and spacing widths. Page labels are balanced: exactly
/// `pages_per_compositor` per compositor, in index order, matching the
/// planted uniform prior. Deterministic given the seed; pages use
/// independent derived RNG streams.
pub fn generate(config: &SynthConfig) -> Result<(Vec<Page>, Attribution, ModelParams)> {
    config.validate()?;
    let wordlist = config.wordlist()?;
    let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
    let params = planted_params(config, &table);
    // exact channel probabilities per (compositor, word), softmax of planted
    // scores
    let channel: Vec<Vec<Vec<f64>>> = (0..config.num_compositors)
        .map(|c| {
            table
                .words()
                .iter()
                .map(|entry| {
                    let scores: Vec<f64> = entry
                        .features
                        .iter()
                        .map(|f| f.dot(&params.weights[c]))
                        .collect();
                    let lse = crate::model::log_sum_exp(&scores);
                    scores.iter().map(|s| (s - lse).exp()).collect()
                })
                .collect()
        })
        .collect();
    let total_pages = config.num_compositors * config.pages_per_compositor;
    let n_words = table.words().len();
    let pages = exec::map_range(total_pages, |index| {
        let c = index / config.pages_per_compositor;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1 + index as u64);
        let pairs = (0..config.pairs_per_page)
            .map(|_| {
                let wi = rng.random_range(0..n_words);
                let entry = &table.words()[wi];
                let ci = sample_index(&mut rng, &channel[c][wi]);
                AlignedPair::new(entry.modern.clone(), entry.forms[ci].clone())
            })
            .collect();
        let spacings = (0..config.spacings_per_page)
            .map(|_| sample_index(&mut rng, &params.theta[c]) as u32)
            .collect();
        Page {
            page_id: format!("synth-{index:04}"),
            pairs,
            spacings,
        }
    });
    let gold = Attribution {
        labels: pages
            .iter()
            .enumerate()
            .map(|(index, page)| {
                let c = index / config.pages_per_compositor;
                (page.page_id.clone(), c.to_string())
            })
            .collect(),
    };
    Ok((pages, gold, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::corpus_log_likelihood;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig {
            pages_per_compositor: 4,
            ..SynthConfig::default()
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
    }

    #[test]
    fn zero_separation_makes_compositors_identical() {
        let config = SynthConfig {
            separation: 0.0,
            pages_per_compositor: 2,
            ..SynthConfig::default()
        };
        let (_, _, params) = generate(&config).unwrap();
        for c in 1..params.num_compositors {
            assert_eq!(params.weights[c], params.weights[0]);
            assert_eq!(params.theta[c], params.theta[0]);
        }
        let uniform = 1.0 / 41.0;
        assert!(params.theta[0].iter().all(|p| (p - uniform).abs() < 1e-12));
    }

    #[test]
    fn single_compositor_gold_has_one_class() {
        let config = SynthConfig {
            num_compositors: 1,
            pages_per_compositor: 5,
            ..SynthConfig::default()
        };
        let (pages, gold, _) = generate(&config).unwrap();
        assert_eq!(pages.len(), 5);
        assert!(gold.labels.values().all(|l| l == "0"));
    }

    #[test]
    fn rejects_degenerate_configs() {
        let mut config = SynthConfig::default();
        config.vocabulary = vec![("do".to_string(), vec!["do".to_string()])];
        assert!(generate(&config).is_err());
        let mut config = SynthConfig::default();
        config.vocabulary.clear();
        assert!(generate(&config).is_err());
        let mut config = SynthConfig::default();
        config.spacing_modes = vec![99];
        assert!(generate(&config).is_err());
    }

    #[test]
    fn pages_respect_requested_sizes() {
        let config = SynthConfig {
            num_compositors: 2,
            pages_per_compositor: 3,
            pairs_per_page: 7,
            spacings_per_page: 4,
            ..SynthConfig::default()
        };
        let (pages, gold, _) = generate(&config).unwrap();
        assert_eq!(pages.len(), 6);
        assert_eq!(gold.len(), 6);
        for page in &pages {
            assert_eq!(page.pairs.len(), 7);
            assert_eq!(page.spacings.len(), 4);
            assert!(page.spacings.iter().all(|&s| s <= config.s_max));
        }
    }

    /// Closed-form planted channel probability for the preferred (p) or a
    /// non-preferred candidate.
    fn rotation_prob(sep: f64, n: usize, preferred: bool) -> f64 {
        let hi = sep.exp();
        let lo = (-sep).exp();
        let z = hi + (n as f64 - 1.0) * lo;
        if preferred {
            hi / z
        } else {
            lo / z
        }
    }

    #[test]
    fn empirical_pair_frequencies_match_planted_channel() {
        let config = SynthConfig {
            num_compositors: 2,
            pages_per_compositor: 40,
            pairs_per_page: 50,
            spacings_per_page: 0,
            seed: 5,
            ..SynthConfig::default()
        };
        let (pages, gold, _) = generate(&config).unwrap();
        let wordlist = config.wordlist().unwrap();
        let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
        for c in 0..2 {
            let c_label = c.to_string();
            let mut counts: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
            let mut word_totals = vec![0.0f64; table.words().len()];
            for page in pages
                .iter()
                .filter(|p| gold.labels[&p.page_id] == c_label)
            {
                for pair in &page.pairs {
                    let wi = table.word_position(&pair.modern).unwrap();
                    let ci = table.words()[wi].form_position(&pair.diplomatic).unwrap();
                    *counts.entry((wi, ci)).or_insert(0.0) += 1.0;
                    word_totals[wi] += 1.0;
                }
            }
            for (wi, entry) in table.words().iter().enumerate() {
                let n = entry.forms.len();
                let pref = planted_preference(c, wi, n);
                let draws = word_totals[wi];
                assert!(draws > 200.0, "word {wi} undersampled");
                for ci in 0..n {
                    let p = rotation_prob(config.separation, n, ci == pref);
                    let observed = counts.get(&(wi, ci)).copied().unwrap_or(0.0) / draws;
                    let se = (p * (1.0 - p) / draws).sqrt();
                    assert!(
                        (observed - p).abs() <= 3.0 * se + 1e-9,
                        "c={c} word={wi} cand={ci}: {observed:.4} vs {p:.4} (se {se:.5})"
                    );
                }
            }
        }
    }

    #[test]
    fn spacing_histogram_passes_chi_square() {
        let config = SynthConfig {
            num_compositors: 3,
            pages_per_compositor: 10,
            pairs_per_page: 0,
            spacings_per_page: 400,
            s_max: 20,
            spacing_modes: vec![1, 6, 12],
            seed: 11,
            ..SynthConfig::default()
        };
        let (pages, gold, params) = generate(&config).unwrap();
        for c in 0..3 {
            let c_label = c.to_string();
            let samples: Vec<u32> = pages
                .iter()
                .filter(|p| gold.labels[&p.page_id] == c_label)
                .flat_map(|p| p.spacings.iter().copied())
                .collect();
            let n = samples.len() as f64;
            let mut observed = vec![0.0f64; 21];
            for &s in &samples {
                observed[s as usize] += 1.0;
            }
            // pool outcomes with expected count < 5 into one bin
            let mut obs_bins = Vec::new();
            let mut exp_bins = Vec::new();
            let mut pooled_obs = 0.0;
            let mut pooled_exp = 0.0;
            for s in 0..=20 {
                let expected = params.theta[c][s] * n;
                if expected >= 5.0 {
                    obs_bins.push(observed[s]);
                    exp_bins.push(expected);
                } else {
                    pooled_obs += observed[s];
                    pooled_exp += expected;
                }
            }
            if pooled_exp > 0.0 {
                obs_bins.push(pooled_obs);
                exp_bins.push(pooled_exp);
            }
            let statistic: f64 = obs_bins
                .iter()
                .zip(&exp_bins)
                .map(|(o, e)| (o - e) * (o - e) / e)
                .sum();
            let df = (obs_bins.len() - 1) as f64;
            let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(statistic);
            assert!(
                p_value > 0.01,
                "compositor {c}: chi-square {statistic:.2} on {df} df (p {p_value:.4})"
            );
        }
    }

    #[test]
    fn planted_params_beat_uniform_on_own_data() {
        let config = SynthConfig {
            pages_per_compositor: 6,
            ..SynthConfig::default()
        };
        let (pages, _, params) = generate(&config).unwrap();
        let wordlist = config.wordlist().unwrap();
        let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
        let planted_ll = corpus_log_likelihood(&params, &table, &pages).unwrap();
        let uniform = ModelParams::uniform(
            config.num_compositors,
            config.s_max,
            table.num_features(),
            OrthoMode::Loglinear,
        );
        let uniform_ll = corpus_log_likelihood(&uniform, &table, &pages).unwrap();
        assert!(planted_ll > uniform_ll + 100.0, "{planted_ll} vs {uniform_ll}");
        params.validate().unwrap();
    }
}

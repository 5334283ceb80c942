//! EM training with random restarts, and argmax prediction.
//!
//! The traced per-iteration objective is the penalized likelihood
//! raw log-likelihood − λΣ‖w_c‖² + α_θ Σ ln θ + α_b Σ ln p: the quantity EM
//! actually ascends once smoothing and L2 regularization are on. Every
//! update either maximizes its block exactly (prior, θ, BASIC probabilities)
//! or never accepts a worsening step (weights, via backtracking line
//! search), so the trace is non-decreasing.
//!
//! Restarts draw independent RNG streams from (seed, restart index), so
//! results are reproducible and adding restarts extends rather than reshuffles
//! the candidate set.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Page;
use crate::error::{Error, Result};
use crate::eval::Attribution;
use crate::exec;
use crate::features::{FeatureKinds, WordList};
use crate::model::{
    log_sum_exp, page_log_joint, BasicProbs, CandidateTable, ModelParams, OrthoMode,
    WordCandidates,
};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub num_compositors: usize,
    pub em_iterations: usize,
    pub restarts: usize,
    pub mstep_inner_iterations: usize,
    pub l2_lambda: f64,
    pub theta_alpha: f64,
    /// Add-α smoothing for BASIC-mode candidate multinomials.
    pub basic_alpha: f64,
    pub seed: u64,
    pub s_max: u32,
    pub ortho_mode: OrthoMode,
    pub feature_kinds: FeatureKinds,
    pub use_spacing: bool,
    /// Power on the spacing channel; 1 is the plain product model.
    pub spacing_exponent: f64,
    pub fixed_uniform_prior: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            num_compositors: 2,
            em_iterations: 75,
            restarts: 100,
            mstep_inner_iterations: 25,
            l2_lambda: 0.1,
            theta_alpha: 0.1,
            basic_alpha: 0.1,
            seed: 0,
            s_max: 40,
            ortho_mode: OrthoMode::Loglinear,
            feature_kinds: FeatureKinds::ALL,
            use_spacing: true,
            spacing_exponent: 1.0,
            fixed_uniform_prior: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_compositors == 0 {
            return Err(Error::InvalidConfig("num_compositors must be >= 1".into()));
        }
        if self.em_iterations == 0 || self.restarts == 0 || self.mstep_inner_iterations == 0 {
            return Err(Error::InvalidConfig(
                "iteration and restart counts must be >= 1".into(),
            ));
        }
        if !(self.l2_lambda >= 0.0) || !(self.theta_alpha >= 0.0) || !(self.basic_alpha >= 0.0) {
            return Err(Error::InvalidConfig(
                "lambda and smoothing constants must be >= 0".into(),
            ));
        }
        if !(self.spacing_exponent >= 0.0) {
            return Err(Error::InvalidConfig("spacing_exponent must be >= 0".into()));
        }
        Ok(())
    }

    fn effective_exponent(&self) -> f64 {
        if self.use_spacing {
            self.spacing_exponent
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainResult {
    pub params: ModelParams,
    /// Raw (unpenalized) corpus log-likelihood at the final parameters.
    pub log_likelihood: f64,
    pub assignments: BTreeMap<String, usize>,
    pub restart_index: usize,
    /// Winning restart's per-iteration penalized objective.
    pub ll_trace: Vec<f64>,
    /// Every restart's trace, indexed by restart; empty for failed restarts.
    pub restart_traces: Vec<Vec<f64>>,
    pub failures: Vec<(usize, String)>,
}

/// Page-by-compositor responsibilities γ.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorMatrix {
    pub gamma: Vec<Vec<f64>>,
}

impl PosteriorMatrix {
    pub fn num_pages(&self) -> usize {
        self.gamma.len()
    }

    pub fn num_compositors(&self) -> usize {
        self.gamma.first().map_or(0, Vec::len)
    }
}

/// γ_{ic} ∝ exp(page_log_joint(i, c)), normalized per page. Reference
/// implementation over raw pages; training uses an equivalent compiled path.
pub fn e_step(
    params: &ModelParams,
    table: &CandidateTable,
    pages: &[Page],
) -> Result<PosteriorMatrix> {
    let rows = exec::map_slice(pages, |page| -> Result<Vec<f64>> {
        let joints: Vec<f64> = (0..params.num_compositors)
            .map(|c| page_log_joint(params, table, page, c))
            .collect::<Result<_>>()?;
        posterior_row(&joints).map(|(row, _)| row)
    });
    Ok(PosteriorMatrix {
        gamma: rows.into_iter().collect::<Result<_>>()?,
    })
}

fn posterior_row(joints: &[f64]) -> Result<(Vec<f64>, f64)> {
    let lse = log_sum_exp(joints);
    if !lse.is_finite() {
        return Err(Error::NonFinite {
            quantity: "page posterior",
        });
    }
    Ok((joints.iter().map(|j| (j - lse).exp()).collect(), lse))
}

/// π_c = Σ_i γ_{ic} / I.
pub fn m_step_prior(gamma: &PosteriorMatrix) -> Vec<f64> {
    let i = gamma.num_pages();
    let c = gamma.num_compositors();
    let mut prior = vec![0.0; c];
    for row in &gamma.gamma {
        for (p, g) in prior.iter_mut().zip(row) {
            *p += g;
        }
    }
    for p in &mut prior {
        *p /= i as f64;
    }
    prior
}

/// θ_c[s] = (Σ_i γ_{ic}·count_i(s) + α) / (Σ_i γ_{ic}·K_i + α(s_max+1)).
pub fn m_step_theta(
    gamma: &PosteriorMatrix,
    pages: &[Page],
    alpha: f64,
    s_max: u32,
) -> Result<Vec<Vec<f64>>> {
    assert_eq!(gamma.num_pages(), pages.len());
    let outcomes = s_max as usize + 1;
    let c = gamma.num_compositors();
    let mut counts = vec![vec![0.0f64; outcomes]; c];
    let mut totals = vec![0.0f64; c];
    for (row, page) in gamma.gamma.iter().zip(pages) {
        for &s in &page.spacings {
            if s > s_max {
                return Err(Error::SpacingOutOfRange { width: s, s_max });
            }
            for (ci, &g) in row.iter().enumerate() {
                counts[ci][s as usize] += g;
                totals[ci] += g;
            }
        }
    }
    Ok(normalized_theta(&counts, &totals, alpha, outcomes))
}

fn normalized_theta(
    counts: &[Vec<f64>],
    totals: &[f64],
    alpha: f64,
    outcomes: usize,
) -> Vec<Vec<f64>> {
    counts
        .iter()
        .zip(totals)
        .map(|(row, &total)| {
            let denom = total + alpha * outcomes as f64;
            if denom <= 0.0 {
                return vec![1.0 / outcomes as f64; outcomes];
            }
            row.iter().map(|&n| (n + alpha) / denom).collect()
        })
        .collect()
}

const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const GRAD_NORM_EPS: f64 = 1e-24;

/// The per-compositor M-step objective for the orthographic weights:
/// L(w) = Σ_{(m,d)} n(m,d) · log P(d|m;w) − λ‖w‖², with n the
/// responsibility-weighted pair counts.
pub struct WeightObjective<'a> {
    words: &'a [WordCandidates],
    terms: Vec<WordTerm>,
    lambda: f64,
    n_features: usize,
}

struct WordTerm {
    word: usize,
    counts: Vec<f64>,
    total: f64,
}

impl<'a> WeightObjective<'a> {
    pub fn new(
        table: &'a CandidateTable,
        counts: &[(&str, &str, f64)],
        lambda: f64,
    ) -> Result<Self> {
        let mut per_word: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for &(m, d, n) in counts {
            let wi = table
                .word_position(m)
                .ok_or_else(|| Error::UnknownWord(m.to_string()))?;
            let entry = &table.words()[wi];
            let ci = entry
                .form_position(d)
                .ok_or_else(|| Error::UnknownCandidate {
                    modern: m.to_string(),
                    diplomatic: d.to_string(),
                })?;
            per_word.entry(wi).or_insert_with(|| vec![0.0; entry.forms.len()])[ci] += n;
        }
        Ok(Self::from_word_counts(
            table.words(),
            table.num_features(),
            per_word.into_iter().collect(),
            lambda,
        ))
    }

    fn from_word_counts(
        words: &'a [WordCandidates],
        n_features: usize,
        per_word: Vec<(usize, Vec<f64>)>,
        lambda: f64,
    ) -> Self {
        let terms = per_word
            .into_iter()
            .filter_map(|(word, counts)| {
                let total: f64 = counts.iter().sum();
                (total > 0.0).then_some(WordTerm { word, counts, total })
            })
            .collect();
        WeightObjective {
            words,
            terms,
            lambda,
            n_features,
        }
    }

    fn scores(&self, term: &WordTerm, w: &[f64]) -> Vec<f64> {
        self.words[term.word]
            .features
            .iter()
            .map(|f| f.dot(w))
            .collect()
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.n_features);
        let mut total = 0.0;
        for term in &self.terms {
            let scores = self.scores(term, w);
            let lse = log_sum_exp(&scores);
            for (count, score) in term.counts.iter().zip(&scores) {
                if *count > 0.0 {
                    total += count * (score - lse);
                }
            }
        }
        total - self.lambda * w.iter().map(|x| x * x).sum::<f64>()
    }

    /// Observed minus expected feature counts, minus 2λw.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.n_features);
        let mut g = vec![0.0; self.n_features];
        for term in &self.terms {
            let scores = self.scores(term, w);
            let lse = log_sum_exp(&scores);
            for (ci, (count, score)) in term.counts.iter().zip(&scores).enumerate() {
                let coeff = count - term.total * (score - lse).exp();
                if coeff != 0.0 {
                    for (id, n) in self.words[term.word].features[ci].iter() {
                        g[id.index()] += coeff * f64::from(n);
                    }
                }
            }
        }
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi -= 2.0 * self.lambda * wi;
        }
        g
    }

    pub fn num_features(&self) -> usize {
        self.n_features
    }
}

/// Gradient ascent with backtracking line search (start 1.0, halve until the
/// Armijo condition holds). A step is only ever accepted if it strictly
/// improves the objective, so callers may rely on
/// value(result) ≥ value(w_init).
pub fn ascend_weights(
    objective: &WeightObjective,
    w_init: Vec<f64>,
    inner_iterations: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut w = w_init;
    w.resize(objective.num_features(), 0.0);
    let mut value = objective.value(&w);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            quantity: "weight objective",
        });
    }
    for _ in 0..inner_iterations {
        let grad = objective.gradient(&w);
        let grad_norm2: f64 = grad.iter().map(|g| g * g).sum();
        if !grad_norm2.is_finite() {
            return Err(Error::NonFinite {
                quantity: "weight gradient",
            });
        }
        if grad_norm2 < GRAD_NORM_EPS {
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        while step >= MIN_STEP {
            let trial: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi + step * gi).collect();
            let trial_value = objective.value(&trial);
            if trial_value.is_finite() && trial_value >= value + ARMIJO_C1 * step * grad_norm2 {
                w = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((w, value))
}

/// One weight vector per compositor, warm-started from `w_init` (padded with
/// zeros when the registry has grown past it).
pub fn m_step_weights(
    gamma: &PosteriorMatrix,
    pages: &[Page],
    table: &CandidateTable,
    lambda: f64,
    inner_iterations: usize,
    w_init: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    assert_eq!(gamma.num_pages(), pages.len());
    let c = gamma.num_compositors();
    assert_eq!(w_init.len(), c);
    let ctx = CorpusStats::compile(table, pages)?;
    let results = exec::map_range(c, |ci| -> Result<Vec<f64>> {
        let objective = ctx.weight_objective(gamma, ci, lambda);
        let (w, _) = ascend_weights(&objective, w_init[ci].clone(), inner_iterations)?;
        Ok(w)
    });
    results.into_iter().collect()
}

/// Flattened corpus view for training: per page, candidate-slot counts and a
/// spacing histogram. Slot s for word wi's candidate ci is
/// offsets[wi] + ci.
struct CorpusStats<'a> {
    table: &'a CandidateTable,
    offsets: Vec<usize>,
    n_slots: usize,
    pages: Vec<PageStats>,
}

struct PageStats {
    pair_counts: Vec<(usize, f64)>,
    spacing_counts: Vec<(usize, f64)>,
}

impl<'a> CorpusStats<'a> {
    fn compile(table: &'a CandidateTable, pages: &[Page]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(table.words().len() + 1);
        offsets.push(0);
        for entry in table.words() {
            offsets.push(offsets.last().unwrap() + entry.forms.len());
        }
        let n_slots = *offsets.last().unwrap();
        let compiled = pages
            .iter()
            .map(|page| {
                let mut pair_counts: BTreeMap<usize, f64> = BTreeMap::new();
                for pair in &page.pairs {
                    let wi = table
                        .word_position(&pair.modern)
                        .ok_or_else(|| Error::UnknownWord(pair.modern.clone()))?;
                    let ci = table.words()[wi]
                        .form_position(&pair.diplomatic)
                        .ok_or_else(|| Error::UnknownCandidate {
                            modern: pair.modern.clone(),
                            diplomatic: pair.diplomatic.clone(),
                        })?;
                    *pair_counts.entry(offsets[wi] + ci).or_insert(0.0) += 1.0;
                }
                let mut spacing_counts: BTreeMap<usize, f64> = BTreeMap::new();
                for &s in &page.spacings {
                    spacing_counts.entry(s as usize).or_insert(0.0);
                    *spacing_counts.get_mut(&(s as usize)).unwrap() += 1.0;
                }
                Ok(PageStats {
                    pair_counts: pair_counts.into_iter().collect(),
                    spacing_counts: spacing_counts.into_iter().collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CorpusStats {
            table,
            offsets,
            n_slots,
            pages: compiled,
        })
    }

    fn num_words(&self) -> usize {
        self.offsets.len() - 1
    }

    fn slots_of(&self, wi: usize) -> std::ops::Range<usize> {
        self.offsets[wi]..self.offsets[wi + 1]
    }

    /// Σ_i γ_{ic} count_i per candidate slot.
    fn weighted_slot_counts(&self, gamma: &PosteriorMatrix, c: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_slots];
        for (page, row) in self.pages.iter().zip(&gamma.gamma) {
            let g = row[c];
            if g == 0.0 {
                continue;
            }
            for &(slot, n) in &page.pair_counts {
                acc[slot] += g * n;
            }
        }
        acc
    }

    fn weight_objective(
        &self,
        gamma: &PosteriorMatrix,
        c: usize,
        lambda: f64,
    ) -> WeightObjective<'a> {
        let slot_counts = self.weighted_slot_counts(gamma, c);
        let per_word: Vec<(usize, Vec<f64>)> = (0..self.num_words())
            .map(|wi| (wi, slot_counts[self.slots_of(wi)].to_vec()))
            .collect();
        WeightObjective::from_word_counts(
            self.table.words(),
            self.table.num_features(),
            per_word,
            lambda,
        )
    }
}

#[derive(Clone)]
enum Channel {
    Loglinear { weights: Vec<Vec<f64>> },
    Basic { probs: Vec<Vec<f64>> },
}

#[derive(Clone)]
struct FitState {
    prior: Vec<f64>,
    channel: Channel,
    theta: Vec<Vec<f64>>,
}

impl FitState {
    fn to_params(&self, ctx: &CorpusStats, config: &TrainConfig) -> ModelParams {
        let (weights, basic_probs) = match &self.channel {
            Channel::Loglinear { weights } => (weights.clone(), Vec::new()),
            Channel::Basic { probs } => {
                let tables = probs
                    .iter()
                    .map(|row| {
                        let mut map = BasicProbs::new();
                        for (wi, entry) in ctx.table.words().iter().enumerate() {
                            if entry.forms.is_empty() {
                                continue;
                            }
                            let forms: BTreeMap<String, f64> = entry
                                .forms
                                .iter()
                                .cloned()
                                .zip(row[ctx.slots_of(wi)].iter().copied())
                                .collect();
                            map.insert(entry.modern.clone(), forms);
                        }
                        map
                    })
                    .collect();
                (Vec::new(), tables)
            }
        };
        ModelParams {
            num_compositors: config.num_compositors,
            s_max: config.s_max,
            ortho_mode: config.ortho_mode,
            prior: self.prior.clone(),
            weights,
            theta: self.theta.clone(),
            basic_probs,
            spacing_exponent: config.effective_exponent(),
        }
    }

    /// Per-compositor log channel probabilities by slot.
    fn log_channel(&self, ctx: &CorpusStats) -> Vec<Vec<f64>> {
        match &self.channel {
            Channel::Loglinear { weights } => weights
                .iter()
                .map(|w| {
                    let mut out = vec![0.0; ctx.n_slots];
                    for (wi, entry) in ctx.table.words().iter().enumerate() {
                        let scores: Vec<f64> = entry.features.iter().map(|f| f.dot(w)).collect();
                        let lse = log_sum_exp(&scores);
                        for (slot, score) in ctx.slots_of(wi).zip(&scores) {
                            out[slot] = score - lse;
                        }
                    }
                    out
                })
                .collect(),
            Channel::Basic { probs } => probs
                .iter()
                .map(|row| row.iter().map(|p| p.ln()).collect())
                .collect(),
        }
    }

    /// Log-prior of the parameters under the smoothing terms; added to the
    /// raw likelihood this is the objective EM ascends.
    fn penalty(&self, config: &TrainConfig) -> f64 {
        let mut total = 0.0;
        if let Channel::Loglinear { weights } = &self.channel {
            if config.l2_lambda > 0.0 {
                total -= config.l2_lambda
                    * weights
                        .iter()
                        .flatten()
                        .map(|w| w * w)
                        .sum::<f64>();
            }
        }
        if let Channel::Basic { probs } = &self.channel {
            if config.basic_alpha > 0.0 {
                total += config.basic_alpha
                    * probs.iter().flatten().map(|p| p.ln()).sum::<f64>();
            }
        }
        if config.theta_alpha > 0.0 {
            total += config.theta_alpha
                * self.theta.iter().flatten().map(|t| t.ln()).sum::<f64>();
        }
        total
    }
}

fn fast_e_step(
    state: &FitState,
    ctx: &CorpusStats,
    config: &TrainConfig,
) -> Result<(PosteriorMatrix, f64)> {
    let log_channel = state.log_channel(ctx);
    let log_prior: Vec<f64> = state.prior.iter().map(|p| p.ln()).collect();
    let log_theta: Vec<Vec<f64>> = state
        .theta
        .iter()
        .map(|row| row.iter().map(|t| t.ln()).collect())
        .collect();
    let exponent = config.effective_exponent();
    let rows = exec::map_slice(&ctx.pages, |page| -> Result<(Vec<f64>, f64)> {
        let joints: Vec<f64> = (0..config.num_compositors)
            .map(|c| {
                let mut total = log_prior[c];
                for &(slot, n) in &page.pair_counts {
                    total += n * log_channel[c][slot];
                }
                if exponent != 0.0 {
                    for &(s, n) in &page.spacing_counts {
                        total += exponent * n * log_theta[c][s];
                    }
                }
                total
            })
            .collect();
        posterior_row(&joints)
    });
    let mut gamma = Vec::with_capacity(ctx.pages.len());
    let mut ll = 0.0;
    for row in rows {
        let (g, lse) = row?;
        gamma.push(g);
        ll += lse;
    }
    Ok((PosteriorMatrix { gamma }, ll))
}

fn fast_m_step(
    gamma: &PosteriorMatrix,
    ctx: &CorpusStats,
    config: &TrainConfig,
    previous: &FitState,
) -> Result<FitState> {
    let c = config.num_compositors;
    let prior = if config.fixed_uniform_prior {
        vec![1.0 / c as f64; c]
    } else {
        m_step_prior(gamma)
    };
    let exponent = config.effective_exponent();
    let outcomes = config.s_max as usize + 1;
    let mut counts = vec![vec![0.0f64; outcomes]; c];
    let mut totals = vec![0.0f64; c];
    for (page, row) in ctx.pages.iter().zip(&gamma.gamma) {
        for (ci, &g) in row.iter().enumerate() {
            for &(s, n) in &page.spacing_counts {
                counts[ci][s] += exponent * g * n;
                totals[ci] += exponent * g * n;
            }
        }
    }
    let theta = normalized_theta(&counts, &totals, config.theta_alpha, outcomes);
    let channel = match &previous.channel {
        Channel::Loglinear { weights } => {
            let new_weights = exec::map_range(c, |ci| -> Result<Vec<f64>> {
                let objective = ctx.weight_objective(gamma, ci, config.l2_lambda);
                let (w, _) =
                    ascend_weights(&objective, weights[ci].clone(), config.mstep_inner_iterations)?;
                Ok(w)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            Channel::Loglinear {
                weights: new_weights,
            }
        }
        Channel::Basic { .. } => {
            let probs = (0..c)
                .map(|ci| {
                    let slot_counts = ctx.weighted_slot_counts(gamma, ci);
                    let mut probs = vec![0.0; ctx.n_slots];
                    for wi in 0..ctx.num_words() {
                        let range = ctx.slots_of(wi);
                        let n_forms = range.len();
                        if n_forms == 0 {
                            continue;
                        }
                        let total: f64 = slot_counts[range.clone()].iter().sum();
                        let denom = total + config.basic_alpha * n_forms as f64;
                        for slot in range {
                            probs[slot] = if denom > 0.0 {
                                (slot_counts[slot] + config.basic_alpha) / denom
                            } else {
                                1.0 / n_forms as f64
                            };
                        }
                    }
                    probs
                })
                .collect();
            Channel::Basic { probs }
        }
    };
    Ok(FitState {
        prior,
        channel,
        theta,
    })
}

fn initial_state(ctx: &CorpusStats, config: &TrainConfig) -> FitState {
    let c = config.num_compositors;
    FitState {
        prior: vec![1.0 / c as f64; c],
        channel: match config.ortho_mode {
            OrthoMode::Loglinear => Channel::Loglinear {
                weights: vec![vec![0.0; ctx.table.num_features()]; c],
            },
            OrthoMode::Basic => Channel::Basic {
                probs: vec![vec![0.0; ctx.n_slots]; c],
            },
        },
        theta: vec![vec![1.0 / (config.s_max as f64 + 1.0); config.s_max as usize + 1]; c],
    }
}

/// Uniform-on-the-simplex responsibility rows (symmetric Dirichlet with
/// concentration 1), drawn page by page.
fn random_gamma(rng: &mut ChaCha8Rng, n_pages: usize, c: usize) -> PosteriorMatrix {
    let gamma = (0..n_pages)
        .map(|_| {
            let draws: Vec<f64> = (0..c)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let z: f64 = draws.iter().sum();
            draws.iter().map(|d| d / z).collect()
        })
        .collect();
    PosteriorMatrix { gamma }
}

struct RestartRun {
    state: FitState,
    gamma: PosteriorMatrix,
    trace: Vec<f64>,
    raw_ll: f64,
}

fn run_restart(
    ctx: &CorpusStats,
    config: &TrainConfig,
    restart: usize,
) -> Result<RestartRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1 + restart as u64);
    let gamma0 = random_gamma(&mut rng, ctx.pages.len(), config.num_compositors);
    run_em(ctx, config, gamma0)
}

/// EM from given initial responsibilities: M-step first, then E/M rounds;
/// the final iteration ends on its E-step so the reported likelihood and
/// assignments evaluate exactly the returned parameters.
fn run_em(ctx: &CorpusStats, config: &TrainConfig, gamma0: PosteriorMatrix) -> Result<RestartRun> {
    let mut state = fast_m_step(&gamma0, ctx, config, &initial_state(ctx, config))?;
    let mut trace = Vec::with_capacity(config.em_iterations);
    let mut gamma = gamma0;
    let mut raw_ll = f64::NEG_INFINITY;
    for iteration in 1..=config.em_iterations {
        let (g, ll) = fast_e_step(&state, ctx, config)?;
        gamma = g;
        raw_ll = ll;
        let objective = ll + state.penalty(config);
        if !objective.is_finite() {
            return Err(Error::NonFinite {
                quantity: "em objective",
            });
        }
        trace.push(objective);
        if iteration < config.em_iterations {
            state = fast_m_step(&gamma, ctx, config, &state)?;
        }
    }
    Ok(RestartRun {
        state,
        gamma,
        trace,
        raw_ll,
    })
}

/// Fits the model `config.restarts` times from random initializations and
/// keeps the restart with the best final raw likelihood (ties go to the
/// lowest restart index). Deterministic given (seed, config, page order).
pub fn train(pages: &[Page], wordlist: &WordList, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    if pages.is_empty() {
        return Err(Error::NoPages);
    }
    let table = CandidateTable::build(wordlist, config.feature_kinds);
    let ctx = CorpusStats::compile(&table, pages)?;
    let runs = exec::map_range(config.restarts, |r| run_restart(&ctx, config, r));
    let mut best: Option<(usize, RestartRun)> = None;
    let mut traces = Vec::with_capacity(config.restarts);
    let mut failures = Vec::new();
    for (index, run) in runs.into_iter().enumerate() {
        match run {
            Ok(run) => {
                traces.push(run.trace.clone());
                let better = match &best {
                    None => true,
                    Some((_, incumbent)) => run.raw_ll > incumbent.raw_ll,
                };
                if better {
                    best = Some((index, run));
                }
            }
            Err(err) => {
                traces.push(Vec::new());
                failures.push((index, err.to_string()));
            }
        }
    }
    let Some((restart_index, run)) = best else {
        let reason = failures
            .first()
            .map(|(_, msg)| msg.clone())
            .unwrap_or_else(|| "no restarts ran".to_string());
        return Err(Error::AllRestartsFailed {
            restarts: config.restarts,
            reason,
        });
    };
    if !failures.is_empty() {
        log::warn!("{} of {} restarts failed", failures.len(), config.restarts);
    }
    let params = run.state.to_params(&ctx, config);
    let assignments = pages
        .iter()
        .zip(&run.gamma.gamma)
        .map(|(page, row)| (page.page_id.clone(), argmax(row)))
        .collect();
    Ok(TrainResult {
        params,
        log_likelihood: run.raw_ll,
        assignments,
        restart_index,
        ll_trace: run.trace,
        restart_traces: traces,
        failures,
    })
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Hard assignment per page: argmax_c γ_{ic}, ties to the lowest index.
pub fn predict(
    params: &ModelParams,
    table: &CandidateTable,
    pages: &[Page],
) -> Result<Attribution> {
    let gamma = e_step(params, table, pages)?;
    let labels = pages
        .iter()
        .zip(&gamma.gamma)
        .map(|(page, row)| (page.page_id.clone(), argmax(row).to_string()))
        .collect();
    Ok(Attribution { labels })
}

/// Runs EM once from explicit initial responsibilities. Test hook for
/// initialization-symmetry checks; `train` is the real entry point.
#[cfg(test)]
pub(crate) fn train_from_gamma(
    pages: &[Page],
    wordlist: &WordList,
    config: &TrainConfig,
    gamma0: PosteriorMatrix,
) -> Result<(ModelParams, PosteriorMatrix, Vec<f64>, f64)> {
    let table = CandidateTable::build(wordlist, config.feature_kinds);
    let ctx = CorpusStats::compile(&table, pages)?;
    let run = run_em(&ctx, config, gamma0)?;
    Ok((
        run.state.to_params(&ctx, config),
        run.gamma,
        run.trace,
        run.raw_ll,
    ))
}

//! Attribution comparison metrics, the empirical random baseline, and
//! per-compositor behavior reports.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::Page;
use crate::error::{Error, Result};
use crate::model::{CandidateTable, ModelParams, OrthoMode};

/// Page labels, predicted (cluster indices as strings) or gold (class
/// names). Each page appears exactly once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Attribution {
    pub labels: BTreeMap<String, String>,
}

impl Attribution {
    pub fn from_pairs<I, P, L>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (P, L)>,
        P: Into<String>,
        L: Into<String>,
    {
        Attribution {
            labels: pairs
                .into_iter()
                .map(|(p, l)| (p.into(), l.into()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Predicted-cluster × gold-class page counts over the shared page ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contingency {
    pub counts: Vec<Vec<u64>>,
    pub pred_labels: Vec<String>,
    pub gold_labels: Vec<String>,
    pub total: u64,
}

/// Pages present in only one attribution are dropped with a warning; they
/// are unevaluable, not wrong.
pub fn contingency(pred: &Attribution, gold: &Attribution) -> Result<Contingency> {
    let mut pred_labels: Vec<String> = Vec::new();
    let mut gold_labels: Vec<String> = Vec::new();
    let mut pred_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut gold_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cells: Vec<(usize, usize)> = Vec::new();
    let mut dropped = 0usize;
    for (page, p_label) in &pred.labels {
        let Some(g_label) = gold.labels.get(page) else {
            dropped += 1;
            continue;
        };
        let pi = *pred_index.entry(p_label).or_insert_with(|| {
            pred_labels.push(p_label.clone());
            pred_labels.len() - 1
        });
        let gi = *gold_index.entry(g_label).or_insert_with(|| {
            gold_labels.push(g_label.clone());
            gold_labels.len() - 1
        });
        cells.push((pi, gi));
    }
    dropped += gold.labels.keys().filter(|p| !pred.labels.contains_key(*p)).count();
    if cells.is_empty() {
        return Err(Error::DisjointAttributions);
    }
    if dropped > 0 {
        log::warn!("{dropped} pages appear in only one attribution; excluded from metrics");
    }
    let mut counts = vec![vec![0u64; gold_labels.len()]; pred_labels.len()];
    for (pi, gi) in &cells {
        counts[*pi][*gi] += 1;
    }
    Ok(Contingency {
        counts,
        pred_labels,
        gold_labels,
        total: cells.len() as u64,
    })
}

/// Maximum-weight one-to-one assignment of rows to columns. Rectangular
/// input is padded with zero-weight dummies; dummy matches come back as
/// `None`. O(n³) in the padded size.
pub fn max_weight_assignment(weights: &[Vec<u64>]) -> (u64, Vec<Option<usize>>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0, vec![None; rows]);
    }
    let n = rows.max(cols);
    // minimization form on negated weights, potentials method
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            -(weights[i][j] as i64)
        } else {
            0
        }
    };
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![None; rows];
    let mut total = 0u64;
    for j in 1..=n {
        let i = p[j] - 1;
        if i < rows && j - 1 < cols {
            assignment[i] = Some(j - 1);
            total += weights[i][j - 1];
        }
    }
    (total, assignment)
}

pub fn one_to_one_from_counts(counts: &[Vec<u64>]) -> f64 {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let (matched, _) = max_weight_assignment(counts);
    matched as f64 / total as f64
}

pub fn many_to_one_from_counts(counts: &[Vec<u64>]) -> f64 {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let matched: u64 = counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    matched as f64 / total as f64
}

/// Accuracy under the best one-to-one mapping of predicted clusters to gold
/// classes.
pub fn one_to_one_accuracy(pred: &Attribution, gold: &Attribution) -> Result<f64> {
    Ok(one_to_one_from_counts(&contingency(pred, gold)?.counts))
}

/// Accuracy when every predicted cluster maps to its majority gold class.
pub fn many_to_one_accuracy(pred: &Attribution, gold: &Attribution) -> Result<f64> {
    Ok(many_to_one_from_counts(&contingency(pred, gold)?.counts))
}

/// Mean metrics of uniform-random labelings into `c` clusters, the floor any
/// real model has to beat.
pub fn random_baseline(
    gold: &Attribution,
    c: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if gold.is_empty() {
        return Err(Error::DisjointAttributions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum_one = 0.0;
    let mut sum_many = 0.0;
    for _ in 0..trials {
        let pred = Attribution {
            labels: gold
                .labels
                .keys()
                .map(|page| (page.clone(), rng.random_range(0..c).to_string()))
                .collect(),
        };
        let table = contingency(&pred, gold)?;
        sum_one += one_to_one_from_counts(&table.counts);
        sum_many += many_to_one_from_counts(&table.counts);
    }
    Ok((sum_one / trials as f64, sum_many / trials as f64))
}

/// θ mass strictly above this width reads as a spaced-comma habit.
pub const SPACED_WIDTH_THRESHOLD: u32 = 4;

#[derive(Clone, Debug, Serialize)]
pub struct CompositorReport {
    pub index: usize,
    pub page_count: usize,
    pub prior: f64,
    /// (feature name, weight), most positive first.
    pub top_edit_features: Vec<(String, f64)>,
    /// Most negative first.
    pub bottom_edit_features: Vec<(String, f64)>,
    pub top_word_features: Vec<(String, f64)>,
    pub spacing: Vec<f64>,
    pub spacing_mean: f64,
    /// Majority of θ mass above [`SPACED_WIDTH_THRESHOLD`].
    pub spaced_commas: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub compositors: Vec<CompositorReport>,
    pub empty_clusters: Vec<usize>,
    /// True when every orthographic weight is zero, i.e. the model carries
    /// no learned spelling preferences.
    pub degenerate: bool,
}

/// Summarizes learned behavior per compositor: strongest spelling
/// preferences and the spacing histogram, plus how many pages predict into
/// each cluster.
pub fn report(
    params: &ModelParams,
    table: &CandidateTable,
    pages: &[Page],
    top_k: usize,
) -> Result<Report> {
    let attribution = crate::em::predict(params, table, pages)?;
    let mut page_counts = vec![0usize; params.num_compositors];
    for label in attribution.labels.values() {
        let c: usize = label.parse().expect("predict emits cluster indices");
        page_counts[c] += 1;
    }
    let names = table.registry().names();
    let mut compositors = Vec::with_capacity(params.num_compositors);
    for c in 0..params.num_compositors {
        let (top_edit, bottom_edit, top_word) = match params.ortho_mode {
            OrthoMode::Loglinear => {
                let weighted: Vec<(String, f64)> = names
                    .iter()
                    .zip(&params.weights[c])
                    .filter(|&(_, w)| *w != 0.0)
                    .map(|(n, w)| (n.clone(), *w))
                    .collect();
                let mut edit: Vec<(String, f64)> = weighted
                    .iter()
                    .filter(|(n, _)| !n.starts_with("word:"))
                    .cloned()
                    .collect();
                let mut word: Vec<(String, f64)> = weighted
                    .into_iter()
                    .filter(|(n, _)| n.starts_with("word:"))
                    .collect();
                sort_by_weight_desc(&mut edit);
                sort_by_weight_desc(&mut word);
                let top_edit: Vec<_> = edit.iter().take(top_k).cloned().collect();
                let mut bottom_edit: Vec<_> =
                    edit.iter().rev().take(top_k).cloned().collect();
                bottom_edit.retain(|(_, w)| *w < 0.0);
                word.truncate(top_k);
                (top_edit, bottom_edit, word)
            }
            OrthoMode::Basic => {
                let mut word: Vec<(String, f64)> = params.basic_probs[c]
                    .iter()
                    .flat_map(|(m, forms)| {
                        forms.iter().map(move |(d, p)| (format!("{m}>{d}"), *p))
                    })
                    .collect();
                sort_by_weight_desc(&mut word);
                word.truncate(top_k);
                (Vec::new(), Vec::new(), word)
            }
        };
        let theta = &params.theta[c];
        let spacing_mean: f64 = theta.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        let above: f64 = theta
            .iter()
            .enumerate()
            .filter(|&(s, _)| s as u32 > SPACED_WIDTH_THRESHOLD)
            .map(|(_, p)| p)
            .sum();
        compositors.push(CompositorReport {
            index: c,
            page_count: page_counts[c],
            prior: params.prior[c],
            top_edit_features: top_edit,
            bottom_edit_features: bottom_edit,
            top_word_features: top_word,
            spacing: theta.clone(),
            spacing_mean,
            spaced_commas: above > 0.5,
        });
    }
    let empty_clusters = page_counts
        .iter()
        .enumerate()
        .filter(|&(_, n)| *n == 0)
        .map(|(c, _)| c)
        .collect();
    let degenerate = params.ortho_mode == OrthoMode::Loglinear
        && params.weights.iter().flatten().all(|w| w.abs() < 1e-12);
    Ok(Report {
        compositors,
        empty_clusters,
        degenerate,
    })
}

fn sort_by_weight_desc(items: &mut [(String, f64)]) {
    items.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
}

const HISTOGRAM_BAR_WIDTH: f64 = 40.0;
const HISTOGRAM_MIN_MASS: f64 = 0.005;

/// Text rendering of a report; the JSON twin is the serialized [`Report`].
pub fn render_markdown(report: &Report) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "# Compositor report\n").unwrap();
    if report.degenerate {
        writeln!(
            out,
            "All orthographic weights are zero; the model is untrained or degenerate.\n"
        )
        .unwrap();
    }
    if !report.empty_clusters.is_empty() {
        let ids: Vec<String> = report
            .empty_clusters
            .iter()
            .map(usize::to_string)
            .collect();
        writeln!(
            out,
            "Empty clusters (no pages predicted): {}\n",
            ids.join(", ")
        )
        .unwrap();
    }
    for c in &report.compositors {
        writeln!(out, "## Compositor {}\n", c.index).unwrap();
        writeln!(
            out,
            "- pages: {}  prior: {:.4}  medial commas: {} (mean width {:.2}px)",
            c.page_count,
            c.prior,
            if c.spaced_commas { "spaced" } else { "unspaced" },
            c.spacing_mean,
        )
        .unwrap();
        let mut section = |title: &str, items: &[(String, f64)]| {
            if items.is_empty() {
                return;
            }
            writeln!(out, "\n### {title}\n").unwrap();
            for (name, value) in items {
                writeln!(out, "- `{name}`: {value:+.4}").unwrap();
            }
        };
        section("Strongest edit preferences", &c.top_edit_features);
        section("Strongest edit aversions", &c.bottom_edit_features);
        section("Top word spellings", &c.top_word_features);
        writeln!(out, "\n### Spacing after medial commas\n").unwrap();
        writeln!(out, "```").unwrap();
        let max = c.spacing.iter().copied().fold(0.0f64, f64::max).max(1e-12);
        for (s, p) in c.spacing.iter().enumerate() {
            if *p < HISTOGRAM_MIN_MASS {
                continue;
            }
            let bar = "#".repeat((p / max * HISTOGRAM_BAR_WIDTH).round() as usize);
            writeln!(out, "{s:>3}px {p:>7.4} {bar}").unwrap();
        }
        writeln!(out, "```").unwrap();
        writeln!(out, "(widths with under {HISTOGRAM_MIN_MASS:.1}% of unit mass omitted)\n")
            .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn attribution(pairs: &[(&str, &str)]) -> Attribution {
        Attribution::from_pairs(pairs.iter().copied())
    }

    /// Exhaustive injective row→column mappings; the independent oracle.
    fn brute_force_max(weights: &[Vec<u64>]) -> u64 {
        let rows = weights.len();
        let cols = weights.first().map_or(0, Vec::len);
        fn go(weights: &[Vec<u64>], row: usize, used: &mut Vec<bool>) -> u64 {
            if row == weights.len() {
                return 0;
            }
            let mut best = go(weights, row + 1, used); // leave row unmatched
            for col in 0..used.len() {
                if !used[col] {
                    used[col] = true;
                    best = best.max(weights[row][col] + go(weights, row + 1, used));
                    used[col] = false;
                }
            }
            best
        }
        if rows <= cols {
            go(weights, 0, &mut vec![false; cols])
        } else {
            let t: Vec<Vec<u64>> = (0..cols)
                .map(|j| (0..rows).map(|i| weights[i][j]).collect())
                .collect();
            go(&t, 0, &mut vec![false; rows])
        }
    }

    #[test]
    fn identical_attributions_score_one() {
        let gold = attribution(&[("a", "x"), ("b", "y"), ("c", "x")]);
        assert_eq!(one_to_one_accuracy(&gold, &gold).unwrap(), 1.0);
        assert_eq!(many_to_one_accuracy(&gold, &gold).unwrap(), 1.0);
    }

    #[test]
    fn relabeled_prediction_scores_one() {
        let gold = attribution(&[("a", "x"), ("b", "y"), ("c", "x"), ("d", "z")]);
        let pred = attribution(&[("a", "2"), ("b", "0"), ("c", "2"), ("d", "1")]);
        assert_eq!(one_to_one_accuracy(&pred, &gold).unwrap(), 1.0);
        assert_eq!(many_to_one_accuracy(&pred, &gold).unwrap(), 1.0);
    }

    #[test]
    fn contingency_example_scores_three_quarters() {
        let counts = vec![vec![5, 1], vec![2, 4]];
        assert!((one_to_one_from_counts(&counts) - 0.75).abs() < 1e-15);
        assert!((many_to_one_from_counts(&counts) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn contingency_built_from_attributions() {
        // 2 clusters × 2 classes: cluster 0 = {4 x, 1 y}, cluster 1 = {2 x, 3 y}
        let mut pred_pairs = Vec::new();
        let mut gold_pairs = Vec::new();
        let mut add = |n: usize, cluster: &str, class: &str, tag: &mut usize| {
            for _ in 0..n {
                let page = format!("p{tag}");
                pred_pairs.push((page.clone(), cluster.to_string()));
                gold_pairs.push((page, class.to_string()));
                *tag += 1;
            }
        };
        let mut tag = 0;
        add(4, "0", "x", &mut tag);
        add(1, "0", "y", &mut tag);
        add(2, "1", "x", &mut tag);
        add(3, "1", "y", &mut tag);
        let pred = Attribution::from_pairs(pred_pairs);
        let gold = Attribution::from_pairs(gold_pairs);
        let table = contingency(&pred, &gold).unwrap();
        assert_eq!(table.total, 10);
        let one = one_to_one_accuracy(&pred, &gold).unwrap();
        assert!((one - 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_cluster_many_to_one_is_majority() {
        let gold = attribution(&[("a", "x"), ("b", "x"), ("c", "y")]);
        let pred = attribution(&[("a", "0"), ("b", "0"), ("c", "0")]);
        let many = many_to_one_accuracy(&pred, &gold).unwrap();
        assert!((many - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..120 {
            let rows = rng.random_range(1..5);
            let cols = rng.random_range(1..5);
            let weights: Vec<Vec<u64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(0..30)).collect())
                .collect();
            let (value, assignment) = max_weight_assignment(&weights);
            assert_eq!(value, brute_force_max(&weights), "weights {weights:?}");
            // assignment must be injective and recompute to the value
            let mut seen = std::collections::BTreeSet::new();
            let mut recomputed = 0;
            for (i, a) in assignment.iter().enumerate() {
                if let Some(j) = a {
                    assert!(seen.insert(*j));
                    recomputed += weights[i][*j];
                }
            }
            assert_eq!(recomputed, value);
            let one = one_to_one_from_counts(&weights);
            let many = many_to_one_from_counts(&weights);
            assert!(many >= one - 1e-15);
            assert!((0.0..=1.0).contains(&one) && (0.0..=1.0).contains(&many));
        }
    }

    #[test]
    fn metrics_invariant_under_cluster_relabeling() {
        let gold = attribution(&[("a", "x"), ("b", "y"), ("c", "x"), ("d", "y"), ("e", "x")]);
        let pred = attribution(&[("a", "0"), ("b", "0"), ("c", "1"), ("d", "1"), ("e", "0")]);
        let renamed = attribution(&[("a", "9"), ("b", "9"), ("c", "4"), ("d", "4"), ("e", "9")]);
        assert_eq!(
            one_to_one_accuracy(&pred, &gold).unwrap(),
            one_to_one_accuracy(&renamed, &gold).unwrap()
        );
        assert_eq!(
            many_to_one_accuracy(&pred, &gold).unwrap(),
            many_to_one_accuracy(&renamed, &gold).unwrap()
        );
    }

    #[test]
    fn disjoint_page_sets_error() {
        let gold = attribution(&[("a", "x")]);
        let pred = attribution(&[("b", "0")]);
        assert!(matches!(
            one_to_one_accuracy(&pred, &gold),
            Err(Error::DisjointAttributions)
        ));
    }

    #[test]
    fn partial_overlap_drops_unshared_pages() {
        let gold = attribution(&[("a", "x"), ("b", "y"), ("zzz", "x")]);
        let pred = attribution(&[("a", "0"), ("b", "1"), ("qqq", "0")]);
        assert_eq!(one_to_one_accuracy(&pred, &gold).unwrap(), 1.0);
    }

    #[test]
    fn baseline_single_gold_class_many_is_one() {
        let gold = attribution(&[("a", "x"), ("b", "x"), ("c", "x"), ("d", "x")]);
        for c in [1, 3, 5] {
            let (_, many) = random_baseline(&gold, c, 50, 1).unwrap();
            assert_eq!(many, 1.0);
        }
    }

    #[test]
    fn baseline_single_cluster_is_majority_fraction() {
        let gold = attribution(&[("a", "x"), ("b", "x"), ("c", "x"), ("d", "y")]);
        let (one, many) = random_baseline(&gold, 1, 20, 2).unwrap();
        assert!((one - 0.75).abs() < 1e-15);
        assert!((many - 0.75).abs() < 1e-15);
    }

    #[test]
    fn baseline_between_zero_and_one_and_many_dominates() {
        let pairs: Vec<(String, String)> = (0..60)
            .map(|i| (format!("p{i}"), format!("g{}", i % 3)))
            .collect();
        let gold = Attribution::from_pairs(pairs);
        let (one, many) = random_baseline(&gold, 4, 100, 3).unwrap();
        assert!(one > 0.0 && one < 1.0);
        assert!(many >= one);
    }

    mod report_tests {
        use super::*;
        use crate::features::{FeatureKinds, WordList};

        fn setup() -> (CandidateTable, ModelParams) {
            let wordlist = WordList::from_entries([
                (
                    "young".to_string(),
                    vec!["young".to_string(), "yong".to_string()],
                ),
                ("do".to_string(), vec!["do".to_string(), "doe".to_string()]),
            ]);
            let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
            let params = ModelParams::uniform(2, 12, table.num_features(), OrthoMode::Loglinear);
            (table, params)
        }

        fn spacing_pages() -> Vec<Page> {
            vec![
                Page {
                    page_id: "a".to_string(),
                    pairs: vec![crate::corpus::AlignedPair::new("young", "yong")],
                    spacings: vec![1, 1],
                },
                Page {
                    page_id: "b".to_string(),
                    pairs: vec![crate::corpus::AlignedPair::new("young", "young")],
                    spacings: vec![9, 10],
                },
            ]
        }

        #[test]
        fn untrained_model_reports_degenerate() {
            let (table, params) = setup();
            let r = report(&params, &table, &spacing_pages(), 5).unwrap();
            assert!(r.degenerate);
            assert!(r.compositors.iter().all(|c| c.top_edit_features.is_empty()));
        }

        #[test]
        fn planted_deletion_feature_surfaces() {
            let (table, mut params) = setup();
            let del = table.registry().lookup("del:u").unwrap();
            params.weights[0][del.index()] = 2.5;
            params.weights[0][table.registry().lookup("ins:e").unwrap().index()] = -1.5;
            let r = report(&params, &table, &spacing_pages(), 3).unwrap();
            assert_eq!(r.compositors[0].top_edit_features[0].0, "del:u");
            assert_eq!(r.compositors[0].bottom_edit_features[0].0, "ins:e");
            assert!(!r.degenerate);
        }

        #[test]
        fn spacing_habits_are_labeled() {
            let (table, mut params) = setup();
            // compositor 0 tight, compositor 1 wide; small floor keeps every
            // page finite under both
            let eps = 0.004;
            params.theta[0] = vec![eps; 13];
            params.theta[0][1] = 1.0 - 12.0 * eps;
            params.theta[1] = vec![eps; 13];
            params.theta[1][9] = 1.0 - 12.0 * eps;
            let r = report(&params, &table, &spacing_pages(), 3).unwrap();
            assert!(!r.compositors[0].spaced_commas);
            assert!(r.compositors[1].spaced_commas);
            assert!(r.compositors[1].spacing_mean > r.compositors[0].spacing_mean);
        }

        #[test]
        fn empty_cluster_is_flagged() {
            let (table, mut params) = setup();
            // make compositor 1 repel every page via the prior
            params.prior = vec![1.0 - 1e-9, 1e-9];
            params.theta[0] = vec![0.1 / 12.0; 13];
            params.theta[0][1] = 0.9;
            let r = report(&params, &table, &spacing_pages(), 3).unwrap();
            assert_eq!(r.empty_clusters, vec![1]);
            let markdown = render_markdown(&r);
            assert!(markdown.contains("Empty clusters"));
            assert!(markdown.contains("unspaced"));
        }
    }
}

//! Accuracy and diversity of a set of top-K lists.
//!
//! All functions take the lists of the evaluated users only (see
//! [`evaluated_users`]) and look at the first `k` entries of each list.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::kernels::RecommendationList;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Distinct items across all lists.
    pub coverage: usize,
    /// One minus the mean intra-list cosine similarity.
    pub intra_diversity: f64,
    /// Mean pairwise Hamming distance between lists.
    pub hamming: f64,
    /// Standard error of `hamming` when it was estimated from sampled pairs.
    pub hamming_std_error: Option<f64>,
    pub evaluated_users: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HammingMode {
    #[default]
    Exact,
    Sampled {
        pairs: usize,
        seed: u64,
    },
}

pub const DEFAULT_SAMPLED_PAIRS: usize = 100_000;

impl FromStr for HammingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(HammingMode::Exact),
            "sampled" => Ok(HammingMode::Sampled {
                pairs: DEFAULT_SAMPLED_PAIRS,
                seed: 0,
            }),
            _ => Err(Error::Config(format!("unknown hamming mode {s:?}"))),
        }
    }
}

impl fmt::Display for HammingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HammingMode::Exact => f.write_str("exact"),
            HammingMode::Sampled { .. } => f.write_str("sampled"),
        }
    }
}

/// Users with at least one training link and at least one probe link.
pub fn evaluated_users(graph: &BipartiteGraph, probe: &[Vec<u32>]) -> Vec<u32> {
    (0..graph.user_count() as u32)
        .filter(|&u| {
            graph.user_degree(u) > 0 && probe.get(u as usize).is_some_and(|p| !p.is_empty())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub users: usize,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean precision (`hits/k`) and recall (`hits/|probe_u|`) over the lists
/// whose target has probe items; F1 is taken from the two means.
pub fn precision_recall_f1(
    lists: &[RecommendationList],
    probe: &[Vec<u32>],
    k: usize,
) -> Result<Accuracy> {
    if k == 0 {
        return Err(Error::Metric("k must be at least 1".into()));
    }
    let (mut p_sum, mut r_sum, mut users) = (0.0, 0.0, 0usize);
    for list in lists {
        let relevant = match probe.get(list.target as usize) {
            Some(p) if !p.is_empty() => p,
            _ => continue,
        };
        let hits = list
            .items
            .iter()
            .take(k)
            .filter(|(i, _)| relevant.binary_search(i).is_ok())
            .count();
        p_sum += hits as f64 / k as f64;
        r_sum += hits as f64 / relevant.len() as f64;
        users += 1;
    }
    if users == 0 {
        return Err(Error::Metric("no user has probe items".into()));
    }
    let precision = p_sum / users as f64;
    let recall = r_sum / users as f64;
    Ok(Accuracy {
        precision,
        recall,
        f1: f1_score(precision, recall),
        users,
    })
}

pub fn coverage(lists: &[RecommendationList], k: usize) -> usize {
    lists
        .iter()
        .flat_map(|l| l.items.iter().take(k).map(|&(i, _)| i))
        .collect::<HashSet<_>>()
        .len()
}

/// `1 - mean_u I_u(k)` where `I_u(k)` averages the training cosine
/// similarity over ordered pairs of distinct items in `u`'s list. A list
/// shorter than `k` is normalized by its own length; lists with fewer than
/// two items are skipped.
pub fn intra_diversity(
    lists: &[RecommendationList],
    graph: &BipartiteGraph,
    k: usize,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::Metric("intra-list diversity needs k >= 2".into()));
    }
    let per_user: Vec<f64> = lists
        .par_iter()
        .filter(|l| l.items.len().min(k) >= 2)
        .map(|l| {
            let items: Vec<u32> = l.item_ids().take(k).collect();
            let n = items.len();
            let mut sum = 0.0;
            for a in 0..n {
                for b in a + 1..n {
                    sum += graph.item_cosine(items[a], items[b]);
                }
            }
            2.0 * sum / (n * (n - 1)) as f64
        })
        .collect();
    if per_user.is_empty() {
        return Err(Error::Metric("no list has two items".into()));
    }
    Ok(1.0 - per_user.iter().sum::<f64>() / per_user.len() as f64)
}

/// Mean of `1 - q_uv/k` over all unordered pairs of lists.
///
/// Uses `Σ_{pairs} q_uv = Σ_items C(c_i, 2)`, where `c_i` counts the lists
/// containing item `i`, so the cost is linear in the total list length.
pub fn hamming_diversity(lists: &[RecommendationList], k: usize) -> Result<f64> {
    let n = lists.len();
    if n < 2 {
        return Err(Error::Metric(
            "hamming diversity needs at least two users".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Metric("k must be at least 1".into()));
    }
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for l in lists {
        for i in l.item_ids().take(k) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let shared: u64 = counts.values().map(|&c| c * (c - 1) / 2).sum();
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok(1.0 - shared as f64 / (k as f64 * pairs as f64))
}

/// `1 - q_uv/k` for one pair.
pub fn pair_hamming(a: &RecommendationList, b: &RecommendationList, k: usize) -> f64 {
    let left: HashSet<u32> = a.item_ids().take(k).collect();
    let common = b.item_ids().take(k).filter(|i| left.contains(i)).count();
    1.0 - common as f64 / k as f64
}

/// Estimate of [`hamming_diversity`] from `pairs` uniformly drawn unordered
/// pairs of distinct lists. Returns `(mean, standard error)`.
pub fn hamming_diversity_sampled(
    lists: &[RecommendationList],
    k: usize,
    pairs: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = lists.len();
    if n < 2 {
        return Err(Error::Metric(
            "hamming diversity needs at least two users".into(),
        ));
    }
    if k == 0 || pairs < 2 {
        return Err(Error::Metric(
            "need k >= 1 and at least two sampled pairs".into(),
        ));
    }
    let sets: Vec<HashSet<u32>> = lists
        .iter()
        .map(|l| l.item_ids().take(k).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..pairs {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let common = lists[b]
            .item_ids()
            .take(k)
            .filter(|i| sets[a].contains(i))
            .count();
        let d = 1.0 - common as f64 / k as f64;
        sum += d;
        sum_sq += d * d;
    }
    let m = pairs as f64;
    let mean = sum / m;
    let variance = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok((mean, (variance / m).sqrt()))
}

/// Every metric for one cutoff `k`. Lists must be at least `k` long where
/// enough candidates exist.
pub fn evaluate(
    lists: &[RecommendationList],
    graph: &BipartiteGraph,
    probe: &[Vec<u32>],
    k: usize,
    hamming_mode: HammingMode,
) -> Result<EvalReport> {
    let acc = precision_recall_f1(lists, probe, k)?;
    let (hamming, hamming_std_error) = match hamming_mode {
        HammingMode::Exact => (hamming_diversity(lists, k)?, None),
        HammingMode::Sampled { pairs, seed } => {
            let (m, se) = hamming_diversity_sampled(lists, k, pairs, seed)?;
            (m, Some(se))
        }
    };
    Ok(EvalReport {
        k,
        precision: acc.precision,
        recall: acc.recall,
        f1: acc.f1,
        coverage: coverage(lists, k),
        intra_diversity: if k >= 2 {
            intra_diversity(lists, graph, k)?
        } else {
            f64::NAN
        },
        hamming,
        hamming_std_error,
        evaluated_users: acc.users,
    })
}

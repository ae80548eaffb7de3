//! Per-user expertise scores computed from the training graph.
//!
//! Every extractor is a pure function of the graph. The similarity-based
//! ones accumulate user co-occurrence counts through the item-side
//! adjacency instead of comparing all user pairs.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::BipartiteGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExpertiseMethod {
    /// Number of collected items.
    Activity,
    /// Mean popularity of collected items.
    El,
    /// Sum of inverse popularities of collected items.
    InvPop,
    /// Gini coefficient of the popularities of collected items.
    Gini,
    /// Sum of cosine similarities to every other user.
    Sim,
    /// Co-occurrence with every other user penalized by the squared degree product.
    Sim2,
    /// All ones.
    Uniform,
}

impl ExpertiseMethod {
    pub const ALL: [ExpertiseMethod; 7] = [
        ExpertiseMethod::Activity,
        ExpertiseMethod::El,
        ExpertiseMethod::InvPop,
        ExpertiseMethod::Gini,
        ExpertiseMethod::Sim,
        ExpertiseMethod::Sim2,
        ExpertiseMethod::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpertiseMethod::Activity => "Activity",
            ExpertiseMethod::El => "EL",
            ExpertiseMethod::InvPop => "InvPop",
            ExpertiseMethod::Gini => "Gini",
            ExpertiseMethod::Sim => "Sim",
            ExpertiseMethod::Sim2 => "Sim2",
            ExpertiseMethod::Uniform => "Uniform",
        }
    }
}

impl fmt::Display for ExpertiseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpertiseMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ExpertiseMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown expertise method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GiniMode {
    /// Population Gini coefficient of the popularity multiset.
    #[default]
    Standard,
    /// Rank-and-tie-count form `2 Σ_k ((n+1-r_k)/(n+1)) (c_k/n)` evaluated
    /// over ascending popularity positions with competition ranks. Equals 1
    /// whenever all popularities differ.
    Literal,
}

impl FromStr for GiniMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(GiniMode::Standard),
            "literal" => Ok(GiniMode::Literal),
            _ => Err(Error::Config(format!("unknown gini mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseVector {
    pub method: ExpertiseMethod,
    pub values: Vec<f64>,
}

impl ExpertiseVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, user: u32) -> f64 {
        self.values[user as usize]
    }
}

pub fn compute(
    graph: &BipartiteGraph,
    method: ExpertiseMethod,
    gini_mode: GiniMode,
) -> ExpertiseVector {
    let values = match method {
        ExpertiseMethod::Activity => activity(graph),
        ExpertiseMethod::El => el(graph),
        ExpertiseMethod::InvPop => inv_pop(graph),
        ExpertiseMethod::Gini => gini(graph, gini_mode),
        ExpertiseMethod::Sim => sim(graph),
        ExpertiseMethod::Sim2 => sim2(graph),
        ExpertiseMethod::Uniform => vec![1.0; graph.user_count()],
    };
    ExpertiseVector { method, values }
}

fn per_user(graph: &BipartiteGraph, f: impl Fn(&[u32]) -> f64) -> Vec<f64> {
    (0..graph.user_count() as u32)
        .map(|u| f(graph.user_items(u)))
        .collect()
}

pub fn activity(graph: &BipartiteGraph) -> Vec<f64> {
    per_user(graph, |items| items.len() as f64)
}

pub fn el(graph: &BipartiteGraph) -> Vec<f64> {
    per_user(graph, |items| {
        if items.is_empty() {
            return 0.0;
        }
        let total: usize = items.iter().map(|&i| graph.item_degree(i)).sum();
        total as f64 / items.len() as f64
    })
}

pub fn inv_pop(graph: &BipartiteGraph) -> Vec<f64> {
    per_user(graph, |items| {
        items
            .iter()
            .map(|&i| 1.0 / graph.item_degree(i) as f64)
            .sum()
    })
}

pub fn gini(graph: &BipartiteGraph, mode: GiniMode) -> Vec<f64> {
    per_user(graph, |items| {
        let mut pops: Vec<usize> = items.iter().map(|&i| graph.item_degree(i)).collect();
        pops.sort_unstable();
        match mode {
            GiniMode::Standard => standard_gini(&pops),
            GiniMode::Literal => literal_gini(&pops),
        }
    })
}

/// Population Gini of an ascending sequence; 0 for fewer than two values.
pub fn standard_gini(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    let total: usize = sorted.iter().sum();
    if n <= 1 || total == 0 {
        return 0.0;
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &p)| (2.0 * (k + 1) as f64 - n as f64 - 1.0) * p as f64)
        .sum();
    weighted / (n as f64 * total as f64)
}

pub fn literal_gini(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut sum = 0.0;
    let mut start = 0;
    while start < n {
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|&&p| p == sorted[start])
                .count();
        let rank = (start + 1) as f64;
        let count = (end - start) as f64;
        // one term per position inside the tie group
        sum += count * ((nf + 1.0 - rank) / (nf + 1.0)) * (count / nf);
        start = end;
    }
    2.0 * sum
}

pub fn sim(graph: &BipartiteGraph) -> Vec<f64> {
    co_occurrence_sum(graph, |ku, kv| 1.0 / ((ku * kv) as f64).sqrt())
}

pub fn sim2(graph: &BipartiteGraph) -> Vec<f64> {
    co_occurrence_sum(graph, |ku, kv| 1.0 / ((ku * kv) as f64).powi(2))
}

/// `Σ_{v≠u} c_uv · weight(k_u, k_v)` where `c_uv` is the number of items
/// shared by `u` and `v`. Terms are added in ascending `v` order.
fn co_occurrence_sum(
    graph: &BipartiteGraph,
    weight: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<f64> {
    let users = graph.user_count();
    (0..users as u32)
        .into_par_iter()
        .map_init(
            || (vec![0u32; users], Vec::<u32>::new()),
            |(counts, touched), u| {
                for &i in graph.user_items(u) {
                    for &v in graph.item_users(i) {
                        if v == u {
                            continue;
                        }
                        let c = &mut counts[v as usize];
                        if *c == 0 {
                            touched.push(v);
                        }
                        *c += 1;
                    }
                }
                touched.sort_unstable();
                let ku = graph.user_degree(u);
                let mut sum = 0.0;
                for &v in touched.iter() {
                    let c = std::mem::take(&mut counts[v as usize]);
                    sum += c as f64 * weight(ku, graph.user_degree(v));
                }
                touched.clear();
                sum
            },
        )
        .collect()
}

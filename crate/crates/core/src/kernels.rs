//! Two-step diffusion kernels and top-K ranking.
//!
//! Every kernel scores the candidates of one target user by spreading a unit
//! of resource from each collected item to its users and from those users
//! back to items. The kernels differ only in how a node splits or averages
//! what it passes on:
//!
//! | kernel | item → user            | user → item                       |
//! |--------|------------------------|-----------------------------------|
//! | MD     | `1/k_j`                | `1/k_u`                           |
//! | HC     | `1`                    | `1/k_u`, receiver scaled `1/k_i`  |
//! | HHP    | `k_j^-λ`               | `1/k_u`, receiver scaled `k_i^(λ-1)` |
//! | BHC    | `1`                    | `1/k_u`, receiver scaled `k_i^-λ` |
//! | ExTrA  | expertise share, see [`ShareNormalization`]                |
//!
//! The item-to-item transfer matrix is never materialized; each target costs
//! two sparse sweeps over its neighborhood.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expertise::{ExpertiseMethod, ExpertiseVector};
use crate::graph::BipartiteGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Md,
    Extra,
    Hc,
    Hhp,
    Bhc,
}

impl Method {
    pub fn uses_lambda(self) -> bool {
        matches!(self, Method::Extra | Method::Hhp | Method::Bhc)
    }
}

/// How an expertise-weighted kernel turns the share
/// `N(u) = (e(u) / Σ_{v∈Γ(x)} e(v))^λ` into a transfer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShareNormalization {
    /// Collected item `j` hands user `u` the share `N_j(u)` (sum over the
    /// neighbors of `j`); each user then spreads evenly over its `k_u`
    /// items. Uniform expertise at λ = 1 gives exactly MD.
    #[serde(rename = "userDegree")]
    UserDegree,
    /// `W_ij = (1/k_j) Σ_u a_ui a_uj N_j(u)` with no per-user division.
    #[serde(rename = "literalEq3")]
    LiteralEq3,
    /// Collected items pass a full unit to each of their users, users
    /// spread evenly over their items, and candidate `i` weighs each
    /// incoming user by `N_i(u)` (sum over the neighbors of `i`):
    /// `W_ij = Σ_u a_ui a_uj N_i(u) / k_u`. Uniform expertise at λ = 1
    /// gives exactly HC. This is the reading that matches the published
    /// MovieLens accuracy/coverage figures, hence the default.
    #[default]
    #[serde(rename = "receiver")]
    Receiver,
}

impl ShareNormalization {
    pub fn name(self) -> &'static str {
        match self {
            ShareNormalization::UserDegree => "userDegree",
            ShareNormalization::LiteralEq3 => "literalEq3",
            ShareNormalization::Receiver => "receiver",
        }
    }
}

impl fmt::Display for ShareNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShareNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ShareNormalization::UserDegree,
            ShareNormalization::LiteralEq3,
            ShareNormalization::Receiver,
        ]
        .into_iter()
        .find(|m| m.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::Config(format!("unknown normalization mode {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub method: Method,
    /// Ignored by MD and HC.
    pub lambda: f64,
    /// Required by ExTrA, must be `None` otherwise.
    pub expertise: Option<ExpertiseMethod>,
    pub normalization: ShareNormalization,
}

impl KernelSpec {
    fn plain(method: Method, lambda: f64) -> Self {
        KernelSpec {
            method,
            lambda,
            expertise: None,
            normalization: ShareNormalization::default(),
        }
    }

    pub fn md() -> Self {
        Self::plain(Method::Md, 1.0)
    }

    pub fn hc() -> Self {
        Self::plain(Method::Hc, 0.0)
    }

    pub fn hhp(lambda: f64) -> Self {
        Self::plain(Method::Hhp, lambda)
    }

    pub fn bhc(lambda: f64) -> Self {
        Self::plain(Method::Bhc, lambda)
    }

    pub fn extra(
        expertise: ExpertiseMethod,
        lambda: f64,
        normalization: ShareNormalization,
    ) -> Self {
        KernelSpec {
            method: Method::Extra,
            lambda,
            expertise: Some(expertise),
            normalization,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Kernel(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        match (self.method, self.expertise) {
            (Method::Extra, None) => Err(Error::Kernel(
                "expert-weighted kernel needs an expertise method".into(),
            )),
            (Method::Extra, Some(_)) | (_, None) => Ok(()),
            (m, Some(e)) => Err(Error::Kernel(format!(
                "{m:?} does not take an expertise method ({e})"
            ))),
        }
    }

    /// Short display name: `MD`, `HC`, `HHP`, `BHC`, or `MD` + expertise
    /// name (`MDEL`, `MDSim2`, ...).
    pub fn label(&self) -> String {
        method_label(self.method, self.expertise)
    }
}

pub fn method_label(method: Method, expertise: Option<ExpertiseMethod>) -> String {
    match (method, expertise) {
        (Method::Md, _) => "MD".into(),
        (Method::Hc, _) => "HC".into(),
        (Method::Hhp, _) => "HHP".into(),
        (Method::Bhc, _) => "BHC".into(),
        (Method::Extra, Some(e)) => format!("MD{}", e.name()),
        (Method::Extra, None) => "MD?".into(),
    }
}

/// Inverse of [`method_label`], case-insensitive.
pub fn parse_method_label(label: &str) -> Result<(Method, Option<ExpertiseMethod>)> {
    let upper = label.to_ascii_uppercase();
    match upper.as_str() {
        "MD" => return Ok((Method::Md, None)),
        "HC" => return Ok((Method::Hc, None)),
        "HHP" => return Ok((Method::Hhp, None)),
        "BHC" => return Ok((Method::Bhc, None)),
        _ => {}
    }
    label
        .get(2..)
        .filter(|_| upper.starts_with("MD"))
        .and_then(|rest| rest.parse::<ExpertiseMethod>().ok())
        .map(|e| (Method::Extra, Some(e)))
        .ok_or_else(|| Error::Config(format!("unknown method {label:?}")))
}

/// Resource per item for one target. Empty for users without training links.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub values: Vec<f64>,
}

impl ScoreVector {
    pub fn is_cold(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, item: u32) -> f64 {
        self.values.get(item as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationList {
    pub target: u32,
    /// `(item, score)` in rank order.
    pub items: Vec<(u32, f64)>,
}

impl RecommendationList {
    pub fn item_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().map(|&(i, _)| i)
    }

    pub fn truncated(&self, k: usize) -> RecommendationList {
        RecommendationList {
            target: self.target,
            items: self.items[..k.min(self.items.len())].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SharePlacement {
    Source,
    SourceUnsplit,
    Receiver,
}

#[derive(Debug, Clone)]
enum Plan {
    Degree {
        source: Vec<f64>,
        receiver: Vec<f64>,
    },
    Shares {
        per_edge: Vec<f64>,
        placement: SharePlacement,
    },
}

/// Scratch buffers reused across targets by one worker.
#[derive(Debug, Default)]
pub struct Scratch {
    user_resource: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

/// A kernel bound to a graph, with per-item or per-edge weights precomputed
/// once so that scoring a target costs only the two sweeps.
#[derive(Debug, Clone)]
pub struct Scorer<'g> {
    graph: &'g BipartiteGraph,
    spec: KernelSpec,
    plan: Plan,
}

fn degree_weights(graph: &BipartiteGraph, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..graph.item_count() as u32)
        .map(|i| match graph.item_degree(i) {
            0 => 0.0,
            k => f(k as f64),
        })
        .collect()
}

/// `(e(u) / Σ_{v∈Γ(x)} e(v))^λ` for every edge in item-view order, falling
/// back to `1/k_x` for items whose neighbors all have zero expertise.
fn expertise_shares(graph: &BipartiteGraph, expertise: &ExpertiseVector, lambda: f64) -> Vec<f64> {
    let mut shares = Vec::with_capacity(graph.link_count());
    for x in 0..graph.item_count() as u32 {
        let users = graph.item_users(x);
        let total: f64 = users.iter().map(|&u| expertise.get(u)).sum();
        if total > 0.0 {
            shares.extend(
                users
                    .iter()
                    .map(|&u| (expertise.get(u) / total).powf(lambda)),
            );
        } else {
            let uniform = 1.0 / users.len() as f64;
            shares.extend(users.iter().map(|_| uniform));
        }
    }
    shares
}

impl<'g> Scorer<'g> {
    /// `expertise` is required for ExTrA and ignored otherwise.
    pub fn new(
        graph: &'g BipartiteGraph,
        spec: KernelSpec,
        expertise: Option<&ExpertiseVector>,
    ) -> Result<Self> {
        spec.validate()?;
        let lambda = spec.lambda;
        let plan = match spec.method {
            Method::Md => Plan::Degree {
                source: degree_weights(graph, |k| 1.0 / k),
                receiver: degree_weights(graph, |_| 1.0),
            },
            Method::Hc => Plan::Degree {
                source: degree_weights(graph, |_| 1.0),
                receiver: degree_weights(graph, |k| 1.0 / k),
            },
            Method::Hhp => Plan::Degree {
                source: degree_weights(graph, |k| k.powf(-lambda)),
                receiver: degree_weights(graph, |k| k.powf(lambda - 1.0)),
            },
            Method::Bhc => Plan::Degree {
                source: degree_weights(graph, |_| 1.0),
                receiver: degree_weights(graph, |k| k.powf(-lambda)),
            },
            Method::Extra => {
                let e =
                    expertise.ok_or_else(|| Error::Kernel("expertise vector missing".into()))?;
                if e.len() != graph.user_count() {
                    return Err(Error::Kernel(format!(
                        "expertise covers {} users, graph has {}",
                        e.len(),
                        graph.user_count()
                    )));
                }
                if spec.expertise.is_some_and(|m| m != e.method) {
                    return Err(Error::Kernel(format!(
                        "kernel expects {} expertise, got {}",
                        spec.expertise.unwrap(),
                        e.method
                    )));
                }
                if let Some(bad) = e.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                    return Err(Error::Kernel(format!(
                        "expertise value {bad} is not finite and non-negative"
                    )));
                }
                Plan::Shares {
                    per_edge: expertise_shares(graph, e, lambda),
                    placement: match spec.normalization {
                        ShareNormalization::UserDegree => SharePlacement::Source,
                        ShareNormalization::LiteralEq3 => SharePlacement::SourceUnsplit,
                        ShareNormalization::Receiver => SharePlacement::Receiver,
                    },
                }
            }
        };
        Ok(Scorer { graph, spec, plan })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn graph(&self) -> &'g BipartiteGraph {
        self.graph
    }

    pub fn scores(&self, target: u32) -> ScoreVector {
        self.scores_with(target, &mut Scratch::default())
    }

    pub fn scores_with(&self, target: u32, scratch: &mut Scratch) -> ScoreVector {
        let g = self.graph;
        let profile = g.user_items(target);
        if profile.is_empty() {
            return ScoreVector { values: Vec::new() };
        }
        scratch.user_resource.clear();
        scratch.user_resource.resize(g.user_count(), 0.0);
        scratch.seen.clear();
        scratch.seen.resize(g.user_count(), false);
        scratch.touched.clear();

        // step 1: collected items -> users
        for &j in profile {
            let base = g.item_offset(j);
            for (pos, &v) in g.item_users(j).iter().enumerate() {
                let amount = match &self.plan {
                    Plan::Degree { source, .. } => source[j as usize],
                    Plan::Shares {
                        per_edge,
                        placement,
                    } => match placement {
                        SharePlacement::Source => per_edge[base + pos],
                        SharePlacement::SourceUnsplit => {
                            per_edge[base + pos] / g.item_degree(j) as f64
                        }
                        SharePlacement::Receiver => 1.0,
                    },
                };
                if !scratch.seen[v as usize] {
                    scratch.seen[v as usize] = true;
                    scratch.touched.push(v);
                }
                scratch.user_resource[v as usize] += amount;
            }
        }
        scratch.touched.sort_unstable();

        // step 2: users -> items
        let mut values = vec![0.0; g.item_count()];
        match &self.plan {
            Plan::Shares {
                per_edge,
                placement: SharePlacement::Receiver,
            } => {
                for &v in &scratch.touched {
                    scratch.user_resource[v as usize] /= g.user_degree(v) as f64;
                }
                for (i, slot) in values.iter_mut().enumerate() {
                    let base = g.item_offset(i as u32);
                    *slot = g
                        .item_users(i as u32)
                        .iter()
                        .enumerate()
                        .map(|(pos, &u)| per_edge[base + pos] * scratch.user_resource[u as usize])
                        .sum();
                }
            }
            plan => {
                let divide = !matches!(
                    plan,
                    Plan::Shares {
                        placement: SharePlacement::SourceUnsplit,
                        ..
                    }
                );
                for &v in &scratch.touched {
                    let mut r = scratch.user_resource[v as usize];
                    if divide {
                        r /= g.user_degree(v) as f64;
                    }
                    for &i in g.user_items(v) {
                        values[i as usize] += r;
                    }
                }
                if let Plan::Degree { receiver, .. } = plan {
                    for (s, w) in values.iter_mut().zip(receiver) {
                        *s *= w;
                    }
                }
            }
        }
        ScoreVector { values }
    }

    pub fn recommend(&self, target: u32, k: usize) -> RecommendationList {
        top_k(&self.scores(target), self.graph, target, k)
    }

    /// Top-`k` lists for `targets`, scored in parallel, in input order.
    pub fn recommend_all(&self, targets: &[u32], k: usize) -> Vec<RecommendationList> {
        targets
            .par_iter()
            .map_init(Scratch::default, |scratch, &t| {
                top_k(&self.scores_with(t, scratch), self.graph, t, k)
            })
            .collect()
    }
}

/// Highest-scoring `k` items outside the target's training profile. Ties,
/// including zero scores, go to the lower item index. Cold targets get an
/// empty list.
pub fn top_k(
    scores: &ScoreVector,
    graph: &BipartiteGraph,
    target: u32,
    k: usize,
) -> RecommendationList {
    let mut list = RecommendationList {
        target,
        items: Vec::new(),
    };
    if scores.is_cold() || k == 0 {
        return list;
    }
    let profile = graph.user_items(target);
    let mut p = 0;
    let mut candidates = Vec::with_capacity(scores.values.len().saturating_sub(profile.len()));
    for (i, &s) in scores.values.iter().enumerate() {
        let i = i as u32;
        if p < profile.len() && profile[p] == i {
            p += 1;
            continue;
        }
        candidates.push((i, s));
    }
    let order = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, order);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(order);
    list.items = candidates;
    list
}

pub fn md_scores(graph: &BipartiteGraph, target: u32) -> ScoreVector {
    Scorer::new(graph, KernelSpec::md(), None)
        .expect("valid")
        .scores(target)
}

pub fn hc_scores(graph: &BipartiteGraph, target: u32) -> ScoreVector {
    Scorer::new(graph, KernelSpec::hc(), None)
        .expect("valid")
        .scores(target)
}

pub fn hhp_scores(graph: &BipartiteGraph, lambda: f64, target: u32) -> Result<ScoreVector> {
    Ok(Scorer::new(graph, KernelSpec::hhp(lambda), None)?.scores(target))
}

pub fn bhc_scores(graph: &BipartiteGraph, lambda: f64, target: u32) -> Result<ScoreVector> {
    Ok(Scorer::new(graph, KernelSpec::bhc(lambda), None)?.scores(target))
}

pub fn extra_scores(
    graph: &BipartiteGraph,
    expertise: &ExpertiseVector,
    lambda: f64,
    normalization: ShareNormalization,
    target: u32,
) -> Result<ScoreVector> {
    let spec = KernelSpec::extra(expertise.method, lambda, normalization);
    Ok(Scorer::new(graph, spec, Some(expertise))?.scores(target))
}

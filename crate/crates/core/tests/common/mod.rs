//! Brute-force references shared by the integration suites. Everything here
//! works on a dense 0/1 matrix and evaluates the transfer formulas
//! entry by entry, independent of the sparse sweeps under test.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use diffrec::expertise::ExpertiseVector;
use diffrec::graph::BipartiteGraph;
use diffrec::kernels::{KernelSpec, Method, ShareNormalization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub a: Vec<Vec<f64>>,
    pub users: usize,
    pub items: usize,
}

impl Dense {
    pub fn from_graph(g: &BipartiteGraph) -> Self {
        let mut a = vec![vec![0.0; g.item_count()]; g.user_count()];
        for u in 0..g.user_count() {
            for i in 0..g.item_count() {
                if g.has_link(u as u32, i as u32) {
                    a[u][i] = 1.0;
                }
            }
        }
        Dense {
            a,
            users: g.user_count(),
            items: g.item_count(),
        }
    }

    pub fn ku(&self, u: usize) -> f64 {
        self.a[u].iter().sum()
    }

    pub fn ki(&self, i: usize) -> f64 {
        (0..self.users).map(|u| self.a[u][i]).sum()
    }

    /// `(e_u / Σ_v a_vx e_v)^λ`, or `1/k_x` when the sum vanishes.
    fn share(&self, e: &[f64], lambda: f64, x: usize, u: usize) -> f64 {
        let total: f64 = (0..self.users).map(|v| self.a[v][x] * e[v]).sum();
        if total > 0.0 {
            (e[u] / total).powf(lambda)
        } else {
            1.0 / self.ki(x)
        }
    }

    /// Item-to-item transfer `W[i][j]` (resource moved from `j` to `i`).
    pub fn transfer(&self, spec: &KernelSpec, e: Option<&[f64]>) -> Vec<Vec<f64>> {
        let l = spec.lambda;
        let mut w = vec![vec![0.0; self.items]; self.items];
        for i in 0..self.items {
            for j in 0..self.items {
                let (ki, kj) = (self.ki(i), self.ki(j));
                if ki == 0.0 || kj == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for u in 0..self.users {
                    if self.a[u][i] == 0.0 || self.a[u][j] == 0.0 {
                        continue;
                    }
                    let ku = self.ku(u);
                    acc += match spec.method {
                        Method::Md => 1.0 / (kj * ku),
                        Method::Hc => 1.0 / (ki * ku),
                        Method::Hhp => 1.0 / (ki.powf(1.0 - l) * kj.powf(l) * ku),
                        Method::Bhc => 1.0 / (ki.powf(l) * ku),
                        Method::Extra => {
                            let e = e.expect("expertise");
                            match spec.normalization {
                                ShareNormalization::UserDegree => self.share(e, l, j, u) / ku,
                                ShareNormalization::LiteralEq3 => self.share(e, l, j, u) / kj,
                                ShareNormalization::Receiver => self.share(e, l, i, u) / ku,
                            }
                        }
                    };
                }
                w[i][j] = acc;
            }
        }
        w
    }

    /// `W · a_t` for every target.
    pub fn scores(&self, spec: &KernelSpec, e: Option<&[f64]>) -> Vec<Vec<f64>> {
        let w = self.transfer(spec, e);
        (0..self.users)
            .map(|t| {
                (0..self.items)
                    .map(|i| (0..self.items).map(|j| w[i][j] * self.a[t][j]).sum())
                    .collect()
            })
            .collect()
    }

    /// Σ_{v≠u} c_uv · weight(k_u, k_v) by an explicit double loop.
    pub fn user_pair_sum(&self, weight: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        (0..self.users)
            .map(|u| {
                let mut sum = 0.0;
                for v in 0..self.users {
                    if v == u {
                        continue;
                    }
                    let c = (0..self.items)
                        .filter(|&i| self.a[u][i] > 0.0 && self.a[v][i] > 0.0)
                        .count();
                    if c > 0 {
                        sum += c as f64 * weight(self.ku(u) as usize, self.ku(v) as usize);
                    }
                }
                sum
            })
            .collect()
    }
}

/// Random graph with 1..=max_users users and 1..=max_items items.
pub fn random_graph(rng: &mut ChaCha8Rng, max_users: usize, max_items: usize) -> BipartiteGraph {
    let users = rng.gen_range(1..=max_users);
    let items = rng.gen_range(1..=max_items);
    let density = rng.gen_range(0.05..0.4);
    let mut links = Vec::new();
    for u in 0..users as u32 {
        for i in 0..items as u32 {
            if rng.gen_bool(density) {
                links.push((u, i));
            }
        }
    }
    BipartiteGraph::from_links(users, items, &links)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random non-negative expertise with some exact zeros.
pub fn random_expertise(rng: &mut ChaCha8Rng, users: usize) -> ExpertiseVector {
    ExpertiseVector {
        method: diffrec::ExpertiseMethod::Uniform,
        values: (0..users)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(0.01..5.0)
                }
            })
            .collect(),
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `MOVIELENS_PATH`, else `data/ml-100k/u.data` under the workspace root.
pub fn movielens_path() -> PathBuf {
    std::env::var_os("MOVIELENS_PATH")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data")
        })
}

/// The five-user example graph: u1:{i1,i2,i3} u2:{i1,i2} u3:{i1,i4}
/// u4:{i3,i4,i5} u5:{i2}, zero-based.
pub fn toy_graph() -> BipartiteGraph {
    BipartiteGraph::from_links(
        5,
        5,
        &[
            (0, 0),
            (0, 1),
            (0, 2),
            (1, 0),
            (1, 1),
            (2, 0),
            (2, 3),
            (3, 2),
            (3, 3),
            (3, 4),
            (4, 1),
        ],
    )
}

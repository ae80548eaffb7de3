//! Compressed user-item adjacency with forward and reverse views.

use std::collections::BTreeMap;

use crate::dataset::SplitDataset;

/// Immutable bipartite graph stored as two offset-indexed adjacency arrays.
///
/// `user_items[user_offsets[u]..user_offsets[u + 1]]` holds the items of
/// user `u` in ascending order, and likewise for the item side. Both views
/// describe the same edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    user_offsets: Vec<usize>,
    user_items: Vec<u32>,
    item_offsets: Vec<usize>,
    item_users: Vec<u32>,
}

impl BipartiteGraph {
    /// Builds the graph from `(user, item)` links. Duplicate links collapse.
    ///
    /// Panics if a link refers to an index outside the given counts.
    pub fn from_links(user_count: usize, item_count: usize, links: &[(u32, u32)]) -> Self {
        let mut links = links.to_vec();
        links.sort_unstable();
        links.dedup();
        for &(u, i) in &links {
            assert!(
                (u as usize) < user_count && (i as usize) < item_count,
                "link ({u}, {i}) out of range"
            );
        }

        let (user_offsets, user_items) = compress(user_count, links.iter().map(|&(u, i)| (u, i)));
        let mut reversed: Vec<(u32, u32)> = links.iter().map(|&(u, i)| (i, u)).collect();
        reversed.sort_unstable();
        let (item_offsets, item_users) = compress(item_count, reversed.into_iter());

        BipartiteGraph {
            user_offsets,
            user_items,
            item_offsets,
            item_users,
        }
    }

    /// Training graph of a split.
    pub fn from_split(split: &SplitDataset) -> Self {
        Self::from_links(split.user_count(), split.item_count(), split.training())
    }

    pub fn user_count(&self) -> usize {
        self.user_offsets.len() - 1
    }

    pub fn item_count(&self) -> usize {
        self.item_offsets.len() - 1
    }

    pub fn link_count(&self) -> usize {
        self.user_items.len()
    }

    #[inline]
    pub fn user_items(&self, user: u32) -> &[u32] {
        let u = user as usize;
        &self.user_items[self.user_offsets[u]..self.user_offsets[u + 1]]
    }

    #[inline]
    pub fn item_users(&self, item: u32) -> &[u32] {
        let i = item as usize;
        &self.item_users[self.item_offsets[i]..self.item_offsets[i + 1]]
    }

    /// Offset of `item`'s first neighbor in the flattened item-side array.
    /// Per-edge data aligned with the item view is indexed from here.
    #[inline]
    pub(crate) fn item_offset(&self, item: u32) -> usize {
        self.item_offsets[item as usize]
    }

    #[inline]
    pub fn user_degree(&self, user: u32) -> usize {
        let u = user as usize;
        self.user_offsets[u + 1] - self.user_offsets[u]
    }

    #[inline]
    pub fn item_degree(&self, item: u32) -> usize {
        let i = item as usize;
        self.item_offsets[i + 1] - self.item_offsets[i]
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        (0..self.user_count() as u32)
            .map(|u| self.user_degree(u))
            .collect()
    }

    pub fn item_degrees(&self) -> Vec<usize> {
        (0..self.item_count() as u32)
            .map(|i| self.item_degree(i))
            .collect()
    }

    pub fn has_link(&self, user: u32, item: u32) -> bool {
        self.user_items(user).binary_search(&item).is_ok()
    }

    /// Cosine similarity of two items over their user sets,
    /// `|U_i ∩ U_j| / sqrt(k_i k_j)`. Identical items give 1, items without
    /// users give 0.
    pub fn item_cosine(&self, i: u32, j: u32) -> f64 {
        if i == j {
            return 1.0;
        }
        let (ki, kj) = (self.item_degree(i), self.item_degree(j));
        if ki == 0 || kj == 0 {
            return 0.0;
        }
        let common = intersection_size(self.item_users(i), self.item_users(j));
        common as f64 / ((ki * kj) as f64).sqrt()
    }

    /// `degree -> number of nodes` for users and items.
    pub fn degree_histograms(&self) -> (BTreeMap<usize, usize>, BTreeMap<usize, usize>) {
        let hist = |degrees: Vec<usize>| {
            let mut h = BTreeMap::new();
            for d in degrees {
                *h.entry(d).or_insert(0) += 1;
            }
            h
        };
        (hist(self.user_degrees()), hist(self.item_degrees()))
    }
}

fn compress(rows: usize, sorted: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; rows + 1];
    let mut targets = Vec::new();
    for (row, col) in sorted {
        offsets[row as usize + 1] += 1;
        targets.push(col);
    }
    for r in 0..rows {
        offsets[r + 1] += offsets[r];
    }
    (offsets, targets)
}

/// Size of the intersection of two ascending, duplicate-free slices.
pub fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut x, mut y, mut n) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                x += 1;
                y += 1;
            }
        }
    }
    n
}

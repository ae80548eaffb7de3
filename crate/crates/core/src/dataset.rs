//! Interaction-log ingestion and seeded train/probe splitting.
//!
//! Ratings and timestamps are carried through parsing but never decide
//! whether a link exists: every distinct (user, item) pair becomes one link.
//! Splits shuffle the link array with a `ChaCha8Rng` seeded from the 64-bit
//! seed and take a prefix, so a fixed (log, fraction, seed) always yields the
//! same partition on every platform.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub rating: Option<i64>,
    pub timestamp: Option<i64>,
}

/// Deduplicated, non-empty list of raw interactions in file order.
#[derive(Debug, Clone)]
pub struct InteractionLog {
    records: Vec<Interaction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogStats {
    pub records: usize,
    pub users: usize,
    pub items: usize,
    pub mean_user_degree: f64,
    pub mean_item_degree: f64,
}

impl InteractionLog {
    /// Keeps the first occurrence of every (user, item) pair.
    pub fn from_records(records: impl IntoIterator<Item = Interaction>) -> Result<Self> {
        let mut seen = HashSet::new();
        let records: Vec<_> = records
            .into_iter()
            .filter(|r| seen.insert((r.user.clone(), r.item.clone())))
            .collect();
        if records.is_empty() {
            return Err(Error::Empty);
        }
        Ok(InteractionLog { records })
    }

    pub fn records(&self) -> &[Interaction] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn user_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| &r.user)
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn item_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| &r.item)
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn stats(&self) -> LogStats {
        let users = self.user_count();
        let items = self.item_count();
        let n = self.records.len();
        LogStats {
            records: n,
            users,
            items,
            mean_user_degree: n as f64 / users as f64,
            mean_item_degree: n as f64 / items as f64,
        }
    }

    /// Drops records rated below `min`. Unrated records are kept.
    pub fn with_min_rating(self, min: i64) -> Result<Self> {
        InteractionLog::from_records(
            self.records
                .into_iter()
                .filter(|r| r.rating.is_none_or(|v| v >= min)),
        )
    }
}

/// Parses MovieLens `u.data`: four integer columns `user item rating timestamp`.
pub fn parse_movielens(path: impl AsRef<Path>) -> Result<InteractionLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_movielens(BufReader::new(file)).map_err(|e| attach_path(e, path))
}

pub fn read_movielens(reader: impl BufRead) -> Result<InteractionLog> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut ints = [0i64; 4];
        for (slot, field) in ints.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("not an integer: {field:?}"),
            })?;
        }
        records.push(Interaction {
            user: ints[0].to_string(),
            item: ints[1].to_string(),
            rating: Some(ints[2]),
            timestamp: Some(ints[3]),
        });
    }
    InteractionLog::from_records(records)
}

/// Parses a generic edge list: `user item [extra columns...]` per line,
/// whitespace separated. Lines starting with `#` or `%` are comments.
pub fn parse_edge_list(path: impl AsRef<Path>) -> Result<InteractionLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(BufReader::new(file)).map_err(|e| attach_path(e, path))
}

pub fn read_edge_list(reader: impl BufRead) -> Result<InteractionLog> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(user), Some(item)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: "expected at least 2 fields".into(),
            });
        };
        records.push(Interaction {
            user: user.to_string(),
            item: item.to_string(),
            rating: None,
            timestamp: None,
        });
    }
    InteractionLog::from_records(records)
}

fn attach_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// A link-level partition of a log into training and probe sets over dense
/// user and item indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    training: Vec<(u32, u32)>,
    probe: Vec<(u32, u32)>,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    seed: u64,
    train_fraction: f64,
}

impl SplitDataset {
    pub fn training(&self) -> &[(u32, u32)] {
        &self.training
    }

    pub fn probe(&self) -> &[(u32, u32)] {
        &self.probe
    }

    pub fn user_count(&self) -> usize {
        self.user_ids.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_ids.len()
    }

    /// Original identifier of each dense user index.
    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    /// Probe items of every user, sorted ascending.
    pub fn probe_sets(&self) -> Vec<Vec<u32>> {
        let mut sets = vec![Vec::new(); self.user_count()];
        for &(u, i) in &self.probe {
            sets[u as usize].push(i);
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        sets
    }
}

/// Number of training links for `links` total links.
pub fn training_size(links: usize, train_fraction: f64) -> usize {
    (train_fraction * links as f64).round() as usize
}

/// Randomly partitions the links of `log`.
///
/// Dense indices follow first appearance in the log and are assigned over
/// all links, so users and items that only occur in the probe set still get
/// a valid index (with training degree zero).
pub fn split(log: &InteractionLog, train_fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::TrainFraction(train_fraction));
    }
    let mut user_index: HashMap<&str, u32> = HashMap::new();
    let mut item_index: HashMap<&str, u32> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut links = Vec::with_capacity(log.len());
    for r in log.records() {
        let u = *user_index.entry(&r.user).or_insert_with(|| {
            user_ids.push(r.user.clone());
            (user_ids.len() - 1) as u32
        });
        let i = *item_index.entry(&r.item).or_insert_with(|| {
            item_ids.push(r.item.clone());
            (item_ids.len() - 1) as u32
        });
        links.push((u, i));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    links.shuffle(&mut rng);
    let cut = training_size(links.len(), train_fraction);
    let mut probe = links.split_off(cut);
    let mut training = links;
    training.sort_unstable();
    probe.sort_unstable();

    Ok(SplitDataset {
        training,
        probe,
        user_ids,
        item_ids,
        seed,
        train_fraction,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestHeader {
    seed: u64,
    train_fraction: f64,
    users: usize,
    items: usize,
    training_links: usize,
    probe_links: usize,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
}

pub const TRAIN_FILE: &str = "train.tsv";
pub const PROBE_FILE: &str = "probe.tsv";
pub const HEADER_FILE: &str = "split.json";

/// Writes `train.tsv`, `probe.tsv` (dense `userIdx<TAB>itemIdx` per line)
/// and `split.json` into `dir`.
pub fn write_manifest(split: &SplitDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_links(&dir.join(TRAIN_FILE), &split.training)?;
    write_links(&dir.join(PROBE_FILE), &split.probe)?;
    let header = ManifestHeader {
        seed: split.seed,
        train_fraction: split.train_fraction,
        users: split.user_count(),
        items: split.item_count(),
        training_links: split.training.len(),
        probe_links: split.probe.len(),
        user_ids: split.user_ids.clone(),
        item_ids: split.item_ids.clone(),
    };
    let path = dir.join(HEADER_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &header)?;
    Ok(())
}

fn write_links(path: &Path, links: &[(u32, u32)]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for &(u, i) in links {
        writeln!(out, "{u}\t{i}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<SplitDataset> {
    let dir = dir.as_ref();
    let path = dir.join(HEADER_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let header: ManifestHeader = serde_json::from_reader(BufReader::new(file))?;
    if header.user_ids.len() != header.users || header.item_ids.len() != header.items {
        return Err(Error::Manifest("id tables disagree with counts".into()));
    }
    let training = read_links(&dir.join(TRAIN_FILE), header.users, header.items)?;
    let probe = read_links(&dir.join(PROBE_FILE), header.users, header.items)?;
    if training.len() != header.training_links || probe.len() != header.probe_links {
        return Err(Error::Manifest("link counts disagree with header".into()));
    }
    Ok(SplitDataset {
        training,
        probe,
        user_ids: header.user_ids,
        item_ids: header.item_ids,
        seed: header.seed,
        train_fraction: header.train_fraction,
    })
}

fn read_links(path: &Path, users: usize, items: usize) -> Result<Vec<(u32, u32)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut links = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse {
            line: idx + 1,
            message: format!("{}: expected two dense indices", path.display()),
        };
        let mut f = line.split_whitespace();
        let u: u32 = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let i: u32 = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if u as usize >= users || i as usize >= items {
            return Err(bad());
        }
        links.push((u, i));
    }
    Ok(links)
}

//! Interaction log parsing and index structures.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::DataError;

/// One implicit-feedback record. Ids are dense internal indices; the rating
/// is retained from the source file but unused by training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub rating: Option<f64>,
}

/// Bidirectional mapping between external file ids and dense indices.
/// Internal indices follow first appearance in the source records.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    users: Vec<u64>,
    items: Vec<u64>,
    user_index: HashMap<u64, usize>,
    item_index: HashMap<u64, usize>,
}

impl IdMap {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_external(&self, internal: usize) -> u64 {
        self.users[internal]
    }

    pub fn item_external(&self, internal: usize) -> u64 {
        self.items[internal]
    }

    pub fn user_internal(&self, external: u64) -> Option<usize> {
        self.user_index.get(&external).copied()
    }

    pub fn item_internal(&self, external: u64) -> Option<usize> {
        self.item_index.get(&external).copied()
    }

    fn intern_user(&mut self, external: u64) -> usize {
        if let Some(&idx) = self.user_index.get(&external) {
            return idx;
        }
        let idx = self.users.len();
        self.users.push(external);
        self.user_index.insert(external, idx);
        idx
    }

    fn intern_item(&mut self, external: u64) -> usize {
        if let Some(&idx) = self.item_index.get(&external) {
            return idx;
        }
        let idx = self.items.len();
        self.items.push(external);
        self.item_index.insert(external, idx);
        idx
    }

    /// SHA-256 over the ordered external id vocabularies. Checkpoints carry
    /// this digest so a model cannot be evaluated against a different log.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.users.len() as u64).to_le_bytes());
        for &u in &self.users {
            hasher.update(u.to_le_bytes());
        }
        hasher.update((self.items.len() as u64).to_le_bytes());
        for &i in &self.items {
            hasher.update(i.to_le_bytes());
        }
        hasher.finalize().into()
    }
}

/// Immutable interaction set with per-user and per-item indices.
#[derive(Debug, Clone)]
pub struct InteractionLog {
    id_map: Arc<IdMap>,
    interactions: Vec<Interaction>,
    by_user: Vec<Vec<usize>>,
    by_item: Vec<Vec<usize>>,
}

impl InteractionLog {
    /// Builds a log from external-id records, deduplicating repeated
    /// (user, item) pairs to the first occurrence.
    pub fn from_records(records: &[(u64, u64, Option<f64>)]) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut id_map = IdMap::default();
        let mut interactions = Vec::with_capacity(records.len());
        let mut seen: HashMap<(usize, usize), ()> = HashMap::with_capacity(records.len());
        for &(u, i, rating) in records {
            let user = id_map.intern_user(u);
            let item = id_map.intern_item(i);
            if seen.insert((user, item), ()).is_none() {
                interactions.push(Interaction { user, item, rating });
            }
        }
        Ok(Self::index(Arc::new(id_map), interactions))
    }

    /// Builds a sub-log (e.g. the train portion of a split) over an existing
    /// vocabulary. Vocabulary sizes are preserved even for absent users.
    pub fn with_id_map(id_map: Arc<IdMap>, interactions: Vec<Interaction>) -> Self {
        Self::index(id_map, interactions)
    }

    fn index(id_map: Arc<IdMap>, interactions: Vec<Interaction>) -> Self {
        let mut by_user = vec![Vec::new(); id_map.n_users()];
        let mut by_item = vec![Vec::new(); id_map.n_items()];
        for rec in &interactions {
            by_user[rec.user].push(rec.item);
            by_item[rec.item].push(rec.user);
        }
        for list in by_user.iter_mut().chain(by_item.iter_mut()) {
            list.sort_unstable();
        }
        Self {
            id_map,
            interactions,
            by_user,
            by_item,
        }
    }

    pub fn id_map(&self) -> &Arc<IdMap> {
        &self.id_map
    }

    pub fn n_users(&self) -> usize {
        self.id_map.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.id_map.n_items()
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    /// Items of one user, ascending.
    pub fn items_of(&self, user: usize) -> &[usize] {
        &self.by_user[user]
    }

    /// Users of one item, ascending.
    pub fn users_of(&self, item: usize) -> &[usize] {
        &self.by_item[item]
    }

    pub fn degree(&self, user: usize) -> usize {
        self.by_user[user].len()
    }

    pub fn has_interacted(&self, user: usize, item: usize) -> bool {
        self.by_user[user].binary_search(&item).is_ok()
    }
}

/// Parses a whitespace-separated `user item [rating]` text file. Empty lines
/// and `#` comments are skipped; duplicate (user, item) pairs collapse to
/// the first record.
pub fn parse_interactions(path: &Path) -> Result<InteractionLog, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let user = parse_id(fields.next(), path, lineno + 1, "user id")?;
        let item = parse_id(fields.next(), path, lineno + 1, "item id")?;
        let rating = match fields.next() {
            None => None,
            Some(raw) => Some(raw.parse::<f64>().map_err(|_| DataError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                reason: format!("invalid rating `{raw}`"),
            })?),
        };
        records.push((user, item, rating));
    }
    InteractionLog::from_records(&records)
}

fn parse_id(field: Option<&str>, path: &Path, line: usize, what: &str) -> Result<u64, DataError> {
    let raw = field.ok_or_else(|| DataError::Parse {
        path: path.display().to_string(),
        line,
        reason: format!("missing {what}"),
    })?;
    raw.parse::<u64>().map_err(|_| DataError::Parse {
        path: path.display().to_string(),
        line,
        reason: format!("invalid {what} `{raw}`"),
    })
}

//! Advantaged / disadvantaged user grouping.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{DataError, InteractionLog};

/// Partition of the user set by activity level.
#[derive(Debug, Clone)]
pub struct UserGrouping {
    advantaged: BTreeSet<usize>,
    disadvantaged: BTreeSet<usize>,
}

impl UserGrouping {
    pub fn new(advantaged: BTreeSet<usize>, disadvantaged: BTreeSet<usize>) -> Self {
        debug_assert!(advantaged.is_disjoint(&disadvantaged));
        Self {
            advantaged,
            disadvantaged,
        }
    }

    pub fn advantaged(&self) -> &BTreeSet<usize> {
        &self.advantaged
    }

    pub fn disadvantaged(&self) -> &BTreeSet<usize> {
        &self.disadvantaged
    }

    pub fn is_advantaged(&self, user: usize) -> bool {
        self.advantaged.contains(&user)
    }

    pub fn n_users(&self) -> usize {
        self.advantaged.len() + self.disadvantaged.len()
    }
}

/// Ranks users by interaction count (descending, ties by ascending id) and
/// marks the top `ceil(fraction * n_users)` as advantaged.
pub fn group_users_by_activity(log: &InteractionLog, fraction: f64) -> UserGrouping {
    assert!(
        fraction > 0.0 && fraction < 1.0,
        "fraction must be in (0,1)"
    );
    let n = log.n_users();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (std::cmp::Reverse(log.degree(u)), u));
    let n_adv = ((fraction * n as f64).ceil() as usize).max(1).min(n);
    let advantaged: BTreeSet<usize> = order[..n_adv].iter().copied().collect();
    let disadvantaged: BTreeSet<usize> = order[n_adv..].iter().copied().collect();
    UserGrouping::new(advantaged, disadvantaged)
}

/// Loads `active_ids.txt` / `inactive_ids.txt` (one external id per line)
/// from `dir` and validates the result against the log's user set.
pub fn load_group_files(dir: &Path, log: &InteractionLog) -> Result<UserGrouping, DataError> {
    let read_ids = |name: &str| -> Result<Vec<u64>, DataError> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| DataError::io(&path, e))?;
        let mut ids = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            ids.push(line.parse::<u64>().map_err(|_| DataError::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                reason: format!("invalid user id `{line}`"),
            })?);
        }
        Ok(ids)
    };
    let active = read_ids("active_ids.txt")?;
    let inactive = read_ids("inactive_ids.txt")?;

    let resolve = |ids: &[u64]| -> Result<BTreeSet<usize>, DataError> {
        ids.iter()
            .map(|&id| {
                log.id_map()
                    .user_internal(id)
                    .ok_or(DataError::UnknownUser { id })
            })
            .collect()
    };
    let advantaged = resolve(&active)?;
    let disadvantaged = resolve(&inactive)?;
    if let Some(&overlap) = advantaged.intersection(&disadvantaged).next() {
        return Err(DataError::Overlap {
            id: log.id_map().user_external(overlap),
        });
    }
    let covered = advantaged.len() + disadvantaged.len();
    if covered != log.n_users() {
        return Err(DataError::IncompleteGrouping {
            missing: log.n_users() - covered,
        });
    }
    Ok(UserGrouping::new(advantaged, disadvantaged))
}

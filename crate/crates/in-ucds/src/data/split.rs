//! Leave-one-out splitting and split-file round-trips.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use super::{parse_interactions, DataError, Interaction, InteractionLog};
use crate::seeding::{rng_for, stream};

/// Leave-one-out split: per eligible user one held-out tune item and one
/// held-out test item, everything else in train.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: InteractionLog,
    pub tune: BTreeMap<usize, usize>,
    pub test: BTreeMap<usize, usize>,
}

impl SplitDataset {
    /// Users that appear in tune/test, ascending.
    pub fn eligible_users(&self) -> Vec<usize> {
        self.test.keys().copied().collect()
    }
}

/// Splits `log` per user: with >= 3 interactions, one uniform pick goes to
/// test, another to tune, the rest to train. Users below the floor are
/// train-only. Deterministic per (seed, user).
pub fn leave_one_out_split(log: &InteractionLog, seed: u64) -> SplitDataset {
    let mut train = Vec::new();
    let mut tune = BTreeMap::new();
    let mut test = BTreeMap::new();
    let mut per_user: Vec<Vec<Interaction>> = vec![Vec::new(); log.n_users()];
    for rec in log.interactions() {
        per_user[rec.user].push(*rec);
    }
    for (user, mut recs) in per_user.into_iter().enumerate() {
        if recs.len() < 3 {
            train.extend(recs);
            continue;
        }
        // Sort by item so the draw depends only on content, not file order.
        recs.sort_by_key(|r| r.item);
        let mut rng = rng_for(seed, stream::SPLIT, user as u64);
        let test_idx = rng.gen_range(0..recs.len());
        let test_rec = recs.swap_remove(test_idx);
        let tune_idx = rng.gen_range(0..recs.len());
        let tune_rec = recs.swap_remove(tune_idx);
        test.insert(user, test_rec.item);
        tune.insert(user, tune_rec.item);
        train.extend(recs);
    }
    SplitDataset {
        train: InteractionLog::with_id_map(log.id_map().clone(), train),
        tune,
        test,
    }
}

/// Writes `<name>_train.txt`, `<name>_tune.txt`, `<name>_test.txt` under
/// `dir` in the source record format, using external ids.
pub fn write_splits(split: &SplitDataset, dir: &Path, name: &str) -> Result<(), DataError> {
    let id_map = split.train.id_map();
    let write = |suffix: &str, records: &[(usize, usize, Option<f64>)]| -> Result<(), DataError> {
        let path = dir.join(format!("{name}_{suffix}.txt"));
        let mut out = String::new();
        for &(user, item, rating) in records {
            let u = id_map.user_external(user);
            let i = id_map.item_external(item);
            match rating {
                Some(r) => out.push_str(&format!("{u} {i} {r}\n")),
                None => out.push_str(&format!("{u} {i}\n")),
            }
        }
        let mut f = fs::File::create(&path).map_err(|e| DataError::io(&path, e))?;
        f.write_all(out.as_bytes())
            .map_err(|e| DataError::io(&path, e))
    };
    let train: Vec<_> = split
        .train
        .interactions()
        .iter()
        .map(|r| (r.user, r.item, r.rating))
        .collect();
    write("train", &train)?;
    let tune: Vec<_> = split.tune.iter().map(|(&u, &i)| (u, i, None)).collect();
    write("tune", &tune)?;
    let test: Vec<_> = split.test.iter().map(|(&u, &i)| (u, i, None)).collect();
    write("test", &test)
}

/// Loads a pre-split dataset (`<name>_train/tune/test.txt`) against the full
/// log's vocabulary.
pub fn load_splits(
    log: &InteractionLog,
    dir: &Path,
    name: &str,
) -> Result<SplitDataset, DataError> {
    let id_map = log.id_map();
    let train_log = parse_interactions(&dir.join(format!("{name}_train.txt")))?;
    let mut train = Vec::new();
    for rec in train_log.interactions() {
        let ext_u = train_log.id_map().user_external(rec.user);
        let ext_i = train_log.id_map().item_external(rec.item);
        let user = id_map
            .user_internal(ext_u)
            .ok_or(DataError::UnknownUser { id: ext_u })?;
        let item = id_map.item_internal(ext_i).ok_or(DataError::Parse {
            path: dir.join(format!("{name}_train.txt")).display().to_string(),
            line: 0,
            reason: format!("item id {ext_i} not in full log"),
        })?;
        train.push(Interaction {
            user,
            item,
            rating: rec.rating,
        });
    }
    let load_heldout = |suffix: &str| -> Result<BTreeMap<usize, usize>, DataError> {
        let held = parse_interactions(&dir.join(format!("{name}_{suffix}.txt")))?;
        let mut map = BTreeMap::new();
        for rec in held.interactions() {
            let ext_u = held.id_map().user_external(rec.user);
            let ext_i = held.id_map().item_external(rec.item);
            let user = id_map
                .user_internal(ext_u)
                .ok_or(DataError::UnknownUser { id: ext_u })?;
            let item = id_map.item_internal(ext_i).ok_or(DataError::Parse {
                path: dir
                    .join(format!("{name}_{suffix}.txt"))
                    .display()
                    .to_string(),
                line: 0,
                reason: format!("item id {ext_i} not in full log"),
            })?;
            map.insert(user, item);
        }
        Ok(map)
    };
    Ok(SplitDataset {
        train: InteractionLog::with_id_map(id_map.clone(), train),
        tune: load_heldout("tune")?,
        test: load_heldout("test")?,
    })
}

//! Leave-one-out ranking evaluation: NDCG@K and F1@K over 1-positive /
//! 99-negative candidate sets, per-group aggregation, and result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::data::{EvalCandidateSet, IdMap, UserGrouping};
use crate::model::BackboneModel;
use crate::par_map;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("positive item not present in the ranked candidate list")]
    PositiveAbsent,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed result file {path} line {line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
}

/// Ranking cut-off. The protocol fixes K = 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EvalConfig {
    pub k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k: 10 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 || self.k > 100 {
            return Err(format!("topk must be in 1..=100, got {}", self.k));
        }
        Ok(())
    }
}

/// One scored candidate, in external ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub user_id: u64,
    pub item_id: u64,
    pub score: f64,
    pub label: u8,
}

/// Group-level aggregate of one metric.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupStats {
    pub overall: f64,
    pub advantaged: Option<f64>,
    pub disadvantaged: Option<f64>,
    /// |advantaged mean - disadvantaged mean|; `None` when a group had no
    /// evaluated users.
    pub m_uof: Option<f64>,
}

/// NDCG and F1 aggregates for one evaluation pass.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    pub ndcg: GroupStats,
    pub f1: GroupStats,
    pub n_evaluated: usize,
}

/// Per-user metric pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerUserMetrics {
    pub ndcg: f64,
    pub f1: f64,
}

/// Sorts candidates by score descending, ties by ascending item id. The
/// output is independent of the input order.
pub fn rank_candidates(
    model: &BackboneModel,
    user: usize,
    candidates: &[usize],
) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&item| (item, model.score(user, item)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    scored
}

/// Single-relevant-item NDCG: 1/log2(rank+1) within the cut-off, else 0.
pub fn ndcg_at_k(ranked: &[usize], positive: usize, k: usize) -> Result<f64, EvalError> {
    let rank = ranked
        .iter()
        .position(|&i| i == positive)
        .ok_or(EvalError::PositiveAbsent)?
        + 1;
    Ok(if rank <= k {
        1.0 / ((rank + 1) as f64).log2()
    } else {
        0.0
    })
}

/// Single-relevant-item F1: a hit in the top K has precision 1/K and recall
/// 1, so F1 = 2/(K+1); a miss is 0.
pub fn f1_at_k(ranked: &[usize], positive: usize, k: usize) -> Result<f64, EvalError> {
    let rank = ranked
        .iter()
        .position(|&i| i == positive)
        .ok_or(EvalError::PositiveAbsent)?
        + 1;
    Ok(if rank <= k {
        2.0 / (k as f64 + 1.0)
    } else {
        0.0
    })
}

/// Group means and fairness gaps over per-user metrics.
pub fn aggregate(
    per_user: &BTreeMap<usize, PerUserMetrics>,
    grouping: &UserGrouping,
) -> MetricReport {
    let stats = |select: &dyn Fn(&PerUserMetrics) -> f64| -> GroupStats {
        let mut all = MeanAcc::default();
        let mut adv = MeanAcc::default();
        let mut dis = MeanAcc::default();
        for (&user, m) in per_user {
            let v = select(m);
            all.push(v);
            if grouping.is_advantaged(user) {
                adv.push(v);
            } else {
                dis.push(v);
            }
        }
        let advantaged = adv.mean();
        let disadvantaged = dis.mean();
        GroupStats {
            overall: all.mean().unwrap_or(0.0),
            advantaged,
            disadvantaged,
            m_uof: match (advantaged, disadvantaged) {
                (Some(a), Some(d)) => Some((a - d).abs()),
                _ => None,
            },
        }
    };
    MetricReport {
        ndcg: stats(&|m| m.ndcg),
        f1: stats(&|m| m.f1),
        n_evaluated: per_user.len(),
    }
}

#[derive(Default)]
struct MeanAcc {
    sum: f64,
    n: usize,
}

impl MeanAcc {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Scores and ranks every user's candidates against a frozen model
/// snapshot. Returns the aggregate report plus one result row per scored
/// candidate (rows in ranked order per user).
pub fn evaluate(
    model: &BackboneModel,
    candidates: &EvalCandidateSet,
    grouping: &UserGrouping,
    id_map: &IdMap,
    config: EvalConfig,
) -> Result<(MetricReport, Vec<ResultRow>), EvalError> {
    let users: Vec<usize> = candidates.per_user.keys().copied().collect();
    let per_user_results = par_map(&users, |&user| {
        let list = &candidates.per_user[&user];
        let ranked = rank_candidates(model, user, &list.all_items());
        let items: Vec<usize> = ranked.iter().map(|&(i, _)| i).collect();
        let ndcg = ndcg_at_k(&items, list.positive, config.k)?;
        let f1 = f1_at_k(&items, list.positive, config.k)?;
        let rows: Vec<ResultRow> = ranked
            .iter()
            .map(|&(item, score)| ResultRow {
                user_id: id_map.user_external(user),
                item_id: id_map.item_external(item),
                score,
                label: u8::from(item == list.positive),
            })
            .collect();
        Ok::<_, EvalError>((user, PerUserMetrics { ndcg, f1 }, rows))
    });

    let mut per_user = BTreeMap::new();
    let mut rows = Vec::new();
    for r in per_user_results {
        let (user, metrics, mut user_rows) = r?;
        per_user.insert(user, metrics);
        rows.append(&mut user_rows);
    }
    Ok((aggregate(&per_user, grouping), rows))
}

/// Writes `user_id,item_id,score,label` rows with six-decimal scores.
pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<(), EvalError> {
    let mut out = String::from("user_id,item_id,score,label\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{}\n",
            r.user_id, r.item_id, r.score, r.label
        ));
    }
    fs::write(path, out).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Parses a result file written by [`write_results`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(EvalError::Malformed {
                path: path.display().to_string(),
                line: lineno + 1,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let parse_err = |reason: String| EvalError::Malformed {
            path: path.display().to_string(),
            line: lineno + 1,
            reason,
        };
        rows.push(ResultRow {
            user_id: fields[0]
                .parse()
                .map_err(|_| parse_err("bad user id".into()))?,
            item_id: fields[1]
                .parse()
                .map_err(|_| parse_err("bad item id".into()))?,
            score: fields[2]
                .parse()
                .map_err(|_| parse_err("bad score".into()))?,
            label: fields[3]
                .parse()
                .map_err(|_| parse_err("bad label".into()))?,
        });
    }
    Ok(rows)
}

/// Recomputes the metric report from emitted rows. Scores serve only to
/// order candidates, so a report is a pure function of rows plus grouping.
pub fn report_from_rows(
    rows: &[ResultRow],
    grouping: &UserGrouping,
    id_map: &IdMap,
    config: EvalConfig,
) -> Result<MetricReport, EvalError> {
    let mut by_user: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let user = id_map
            .user_internal(row.user_id)
            .ok_or(EvalError::PositiveAbsent)?;
        by_user.entry(user).or_default().push(row);
    }
    let mut per_user = BTreeMap::new();
    for (user, mut user_rows) in by_user {
        user_rows.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.item_id.cmp(&b.item_id))
        });
        let ranked: Vec<usize> = user_rows
            .iter()
            .map(|r| id_map.item_internal(r.item_id).unwrap())
            .collect();
        let positive = user_rows
            .iter()
            .find(|r| r.label == 1)
            .map(|r| id_map.item_internal(r.item_id).unwrap())
            .ok_or(EvalError::PositiveAbsent)?;
        per_user.insert(
            user,
            PerUserMetrics {
                ndcg: ndcg_at_k(&ranked, positive, config.k)?,
                f1: f1_at_k(&ranked, positive, config.k)?,
            },
        );
    }
    Ok(aggregate(&per_user, grouping))
}

/// Flat `metric,group,value` dump of a report for machine diffing.
pub fn write_report(report: &MetricReport, path: &Path) -> Result<(), EvalError> {
    let mut out = String::from("metric,group,value\n");
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
    for (name, stats) in [("ndcg", &report.ndcg), ("f1", &report.f1)] {
        out.push_str(&format!("{name},overall,{:.6}\n", stats.overall));
        out.push_str(&format!("{name},advantaged,{}\n", fmt(stats.advantaged)));
        out.push_str(&format!(
            "{name},disadvantaged,{}\n",
            fmt(stats.disadvantaged)
        ));
        out.push_str(&format!("{name},m_uof,{}\n", fmt(stats.m_uof)));
    }
    fs::write(path, out).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndcg_closed_forms() {
        let ranked: Vec<usize> = (0..100).collect();
        assert!((ndcg_at_k(&ranked, 0, 10).unwrap() - 1.0).abs() < 1e-12);
        assert!((ndcg_at_k(&ranked, 1, 10).unwrap() - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert_eq!(ndcg_at_k(&ranked, 10, 10).unwrap(), 0.0);
    }

    #[test]
    fn f1_closed_forms() {
        let ranked: Vec<usize> = (0..100).collect();
        for rank in 0..10 {
            assert!((f1_at_k(&ranked, rank, 10).unwrap() - 2.0 / 11.0).abs() < 1e-12);
        }
        assert_eq!(f1_at_k(&ranked, 50, 10).unwrap(), 0.0);
    }

    #[test]
    fn missing_positive_is_contract_violation() {
        let ranked: Vec<usize> = (0..10).collect();
        assert!(matches!(
            ndcg_at_k(&ranked, 99, 10),
            Err(EvalError::PositiveAbsent)
        ));
    }

    #[test]
    fn aggregate_gap_is_absolute_difference() {
        use std::collections::BTreeSet;
        let grouping = UserGrouping::new(BTreeSet::from([0]), BTreeSet::from([1, 2]));
        let per_user: BTreeMap<usize, PerUserMetrics> = [
            (0, PerUserMetrics { ndcg: 0.5, f1: 0.1 }),
            (1, PerUserMetrics { ndcg: 0.3, f1: 0.1 }),
            (2, PerUserMetrics { ndcg: 0.3, f1: 0.1 }),
        ]
        .into();
        let report = aggregate(&per_user, &grouping);
        assert!((report.ndcg.m_uof.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(report.f1.m_uof.unwrap(), 0.0);
        let overall = report.ndcg.overall;
        assert!(overall > 0.3 && overall < 0.5);
    }

    #[test]
    fn aggregate_weighted_mean_matches_group_sizes() {
        use std::collections::BTreeSet;
        // 5 advantaged at 0.4591, 95 disadvantaged at 0.3766
        let adv: BTreeSet<usize> = (0..5).collect();
        let dis: BTreeSet<usize> = (5..100).collect();
        let grouping = UserGrouping::new(adv, dis);
        let per_user: BTreeMap<usize, PerUserMetrics> = (0..100)
            .map(|u| {
                let v = if u < 5 { 0.4591 } else { 0.3766 };
                (u, PerUserMetrics { ndcg: v, f1: v })
            })
            .collect();
        let report = aggregate(&per_user, &grouping);
        let expected = (5.0 * 0.4591 + 95.0 * 0.3766) / 100.0;
        assert!((report.ndcg.overall - expected).abs() < 1e-12);
        assert!(report.ndcg.overall > 0.3766 && report.ndcg.overall < 0.4591);
    }

    #[test]
    fn empty_group_flags_undefined_gap() {
        use std::collections::BTreeSet;
        let grouping = UserGrouping::new(BTreeSet::from([0]), BTreeSet::from([1]));
        let per_user: BTreeMap<usize, PerUserMetrics> =
            [(1, PerUserMetrics { ndcg: 0.4, f1: 0.1 })].into();
        let report = aggregate(&per_user, &grouping);
        assert!(report.ndcg.advantaged.is_none());
        assert!(report.ndcg.m_uof.is_none());
    }
}

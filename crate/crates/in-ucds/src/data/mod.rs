//! Interaction logs, leave-one-out splits, evaluation candidates, and user
//! grouping.

mod candidates;
mod grouping;
mod log;
mod negatives;
mod split;

pub use candidates::{
    build_candidates_for, build_eval_candidates, CandidateList, EvalCandidateSet,
};
pub use grouping::{group_users_by_activity, load_group_files, UserGrouping};
pub use log::{parse_interactions, IdMap, Interaction, InteractionLog};
pub use negatives::sample_training_negatives;
pub use split::{leave_one_out_split, load_splits, write_splits, SplitDataset};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset contains no valid interaction records")]
    EmptyDataset,
    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("user {user} has fewer than {needed} never-interacted items for negative sampling")]
    InsufficientNegatives { user: u64, needed: usize },
    #[error("user id {id} appears in both group files")]
    Overlap { id: u64 },
    #[error("user id {id} in group files is not present in the interaction log")]
    UnknownUser { id: u64 },
    #[error("group files do not cover {missing} users of the interaction log")]
    IncompleteGrouping { missing: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

//! Fairness-aware recommender training with user-constrained dominant sets.
//!
//! The framework works in two stages. Stage one clusters each disadvantaged
//! user with similar advantaged users by extracting a constrained dominant
//! set from a user-similarity graph ([`ucds`]). Stage two folds a fairness
//! loss over embedding differences into backbone training ([`fairness`],
//! [`train`]), pulling each disadvantaged user's representation toward its
//! matched advantaged users.
//!
//! Supporting pieces: interaction-log parsing and leave-one-out splitting
//! ([`data`]), PMF and NeuMF backbones with hand-written gradients and Adam
//! ([`model`]), and leave-one-out ranking evaluation at a fixed cut-off
//! ([`eval`]).

pub mod data;
pub mod eval;
pub mod fairness;
pub mod model;
pub mod synthetic;
pub mod train;
pub mod ucds;

mod parallel;
mod seeding;

pub use parallel::par_map;
pub use seeding::{mix_seed, rng_for, stream};

//! Monte Carlo engines: walk on spheres, discretised Brownian paths, paths
//! conditioned by rejection on their exit side, and the level-crossing
//! bookkeeping used for excursion statistics.

mod conditioned;
mod estimate;
mod excursion;
mod paths;
mod rng;
mod stats;
mod wos;

pub use conditioned::{conditioned_paths_rejection, markov_consistency, ConditionedRun, MarkovCheck};
pub use estimate::{McAccumulator, McEstimate};
pub use excursion::{excursion_decompose, ExcursionRecord, ExcursionTracker, ExitSide, LevelHit};
pub use paths::{em_path, em_path_collect, PathConfig, PathOutcome};
pub use rng::RngStream;
pub use stats::{ks_two_sample, KsResult};
pub use wos::{occupation_shell_bias, wos_feynman_kac, wos_harmonic, wos_occupation};

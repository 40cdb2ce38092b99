//! Target distributions, microstate membership, Monte Carlo volume and χ
//! estimators, and block maps.

mod block;
mod estimate;
mod member;
mod spec;

pub use block::{block_assemble, block_log_jacobian, block_split, block_split_orthonormal, block_weight};
pub use estimate::{
    chi_prime, estimate_chi, estimate_chi_presence_with, estimate_chi_relative, estimate_chi_relative_with,
    estimate_volume, estimate_volume_union, log_ball_volume, pool_seed, seed_for_k, y_candidates, Candidate,
    ChiEstimate, ChiPrime, ChiRow, Sampler, VolumeEstimate, CHUNK, DEFAULT_POOL, MIN_SAMPLES, POOL_ATTEMPTS,
};
pub use member::{is_microstate, is_relative_microstate, MicrostateParams, WordChecker};
pub use spec::{canonical_word, canonical_words, FreeModel, Generator, Letter, MatrixModel, TargetList, TracialSpec};

//! Outer tree code: parity sections built from modular sums of random
//! GF(2) projections, soft priors through FFT convolution, and list
//! decoding by pruning and stitching.

mod beliefs;
mod code;
mod config;
mod stitch;

pub use beliefs::{
    cyclic_convolve_direct, fold_likelihoods, info_prior, lift, neighbourhood_priors, parity_prior,
    residue_prior, NeighbourhoodPriors, SectionBeliefs,
};
pub(crate) use beliefs::normalize;
pub use code::{
    build_partition_table, encode, message_from_bits, parity_consistent, parity_value, sample_generators,
    BinaryMatrix, CodedMessage, EdgePartition, GeneratorSet, PartitionTable,
};
pub use config::{build_config, TreeCodeConfig, TreeLayout, MAX_SECTION_BITS};
pub use stitch::{prune_and_stitch, Path, PathList};

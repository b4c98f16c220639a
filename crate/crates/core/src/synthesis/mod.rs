//! Constrained random layouts, MoM-labelled datasets, and synthesis of large-array
//! port impedance matrices from two-element predictions.

pub mod constraints;
pub mod dataset;
pub mod packing;
pub mod stage2;

pub use constraints::{sample_spacings, SpacingConstraints};
pub use dataset::{gen_dataset, gen_two_port_dataset, solve_all, Dataset, Sample, SkippedSample};
pub use packing::{pack_upper, packed_csv, packed_len, packed_pairs, unpack_upper};
pub use stage2::{
    assemble_prior, normalized_rms, synthesis_errors, synthesis_history_csv, synthesize_array,
    tokens, train_synthesis, PriorMatrix, SizeLoss, SynthesisConfig, SynthesisEpoch,
    SynthesisModel, SynthesisTraining, SynthesizedMatrix, TOKEN_WIDTH,
};

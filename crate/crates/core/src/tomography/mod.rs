//! Bob-side homodyne tomography: binning, maximum likelihood, Metropolis-Hastings
//! error bars and the resulting distribution of the steering parameter.

mod histogram;
mod maxlik;
mod mh;
mod records;

pub use histogram::{violation_histogram, violation_histogram_resampled, ViolationHistogram};
pub use maxlik::{
    maxlik_reconstruct, maxlik_with_povm, reconstruct_assemblage, ConditionReconstruction, MaxLikOptions, MaxLikResult,
    PovmSet, Reconstruction,
};
pub use mh::{metropolis_accept, mh_sample, mh_sample_with_povm, Chain, ChainOptions};
pub use records::{bin_records, BinEdges, BinnedData, ConditionCounts, ConditionSlice, QuadratureRecord};

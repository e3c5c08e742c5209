//! Fixtures shared by the criterion benches.

use steering_core::assemblage::{compute_assemblage, Assemblage};
use steering_core::fock::DensityMatrix;
use steering_core::photonics::shared_state;
use steering_core::pipeline::simulate_records;
use steering_core::tomography::{bin_records, BinnedData, PovmSet};
use steering_core::ExperimentConfig;

pub fn paper_state() -> DensityMatrix {
    shared_state(&ExperimentConfig::default()).expect("default config builds")
}

pub fn paper_assemblage() -> Assemblage {
    let cfg = ExperimentConfig::default();
    compute_assemblage(&paper_state(), &cfg.alice_phases(), cfg.phase_noise_sigma()).expect("assemblage")
}

/// Binned records and the loss-corrected POVM at `samples_per_phase` events per setting.
pub fn binned(samples_per_phase: usize) -> (BinnedData, PovmSet) {
    let cfg = ExperimentConfig {
        samples_per_phase,
        ..ExperimentConfig::default()
    };
    let records = simulate_records(&cfg).expect("simulate");
    let t = &cfg.tomography;
    let data = bin_records(&records, (t.q_min, t.q_max), t.n_bins).expect("bin");
    let povm = PovmSet::new(t.n_max, cfg.eta_b_det, &data.bins, &data.bob_phases).expect("povm");
    (data, povm)
}

//! Truncated Fock-space states, channels and diagnostics.
//!
//! Quadrature convention: vacuum variance is 1/2. The rotated quadrature
//! eigenstates satisfy `<q_theta|n> = e^{i n theta} psi_n(q)`, so a phase
//! setting `theta` multiplies the coherence `rho_{mn}` by `e^{i theta (m - n)}`
//! in measured distributions. Wigner functions are normalized so that
//! `∬ W dx dp = 1`, with `x = √2 Re α`, `p = √2 Im α`.

mod channels;
mod density;
mod state;
mod wigner;

pub use channels::{loss_channel, loss_channel_adjoint, phase_rotate};
pub use density::{fidelity, negativity, partial_trace, DensityMatrix};
pub use state::{
    cat_state, coherent_state, photon_subtract, squeezed_vacuum, squeezing_parameter, Cutoff,
    Parity, StateVector, DEFAULT_TAIL_TOLERANCE,
};
pub use wigner::{wigner, wigner_grid, WignerPoint};

/// Multi-index helpers for one- and two-mode tensor layouts (row-major, mode 0 slowest).
pub(crate) fn split_index(flat: usize, dims: &[usize]) -> (usize, usize) {
    match dims.len() {
        1 => (flat, 0),
        _ => (flat / dims[1], flat % dims[1]),
    }
}

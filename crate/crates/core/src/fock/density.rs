use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

use super::{split_index, StateVector};

/// Hermitian positive matrix over a one- or two-mode Fock basis. Unnormalized
/// members (trace below one) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub entries: CMat,
    pub mode_dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(entries: CMat, mode_dims: Vec<usize>) -> Result<Self> {
        let dim: usize = mode_dims.iter().product();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "mode_dims {mode_dims:?} vs {}x{} matrix",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if mode_dims.is_empty() || mode_dims.len() > 2 {
            return Err(Error::DimensionMismatch("only one or two modes are supported".into()));
        }
        Ok(DensityMatrix { entries, mode_dims })
    }

    pub fn single_mode(entries: CMat) -> Self {
        let d = entries.nrows();
        DensityMatrix {
            entries,
            mode_dims: vec![d],
        }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = &psi.amplitudes;
        DensityMatrix {
            entries: a * a.adjoint(),
            mode_dims: psi.mode_dims.clone(),
        }
    }

    pub fn fock(n: usize, n_max: usize) -> Self {
        Self::from_pure(&StateVector::fock(n, n_max))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    pub fn scaled(&self, factor: f64) -> DensityMatrix {
        DensityMatrix {
            entries: &self.entries * c(factor, 0.0),
            mode_dims: self.mode_dims.clone(),
        }
    }

    pub fn normalized(&self) -> Result<DensityMatrix> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::NotNormalized(t));
        }
        Ok(self.scaled(1.0 / t))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.mode_dims.clone();
        dims.extend_from_slice(&other.mode_dims);
        DensityMatrix {
            entries: linalg::kron(&self.entries, &other.entries),
            mode_dims: dims,
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product_re(&self.entries, &self.entries)
    }

    /// `<n| rho |n>` populations of a single mode.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// Checks Hermiticity (1e-12), positivity (-1e-10) and the trace bound.
    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_error(&self.entries);
        if herm > 1e-12 {
            return Err(Error::NumericalFailure(format!("not Hermitian: {herm:.2e}")));
        }
        let min = self.eigenvalues()[0];
        if min < -1e-10 {
            return Err(Error::NumericalFailure(format!("negative eigenvalue {min:.2e}")));
        }
        let t = self.trace();
        if !(t > 0.0 && t <= 1.0 + 1e-12) {
            return Err(Error::NotNormalized(t));
        }
        Ok(())
    }

    /// Copy restricted to (or zero-padded up to) `dim` levels of a single mode.
    pub fn resized(&self, dim: usize) -> DensityMatrix {
        let mut m = CMat::zeros(dim, dim);
        let k = dim.min(self.dim());
        m.view_mut((0, 0), (k, k)).copy_from(&self.entries.view((0, 0), (k, k)));
        DensityMatrix::single_mode(m)
    }
}

/// Reduced state on mode `keep` of a two-mode matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    if rho.n_modes() != 2 {
        return Err(Error::DimensionMismatch("partial_trace needs a two-mode state".into()));
    }
    if keep > 1 {
        return Err(Error::BadModeIndex { index: keep, modes: 2 });
    }
    let (da, db) = (rho.mode_dims[0], rho.mode_dims[1]);
    let out = match keep {
        0 => CMat::from_fn(da, da, |i, j| (0..db).map(|b| rho.entries[(i * db + b, j * db + b)]).sum()),
        _ => CMat::from_fn(db, db, |i, j| (0..da).map(|a| rho.entries[(a * db + i, a * db + j)]).sum()),
    };
    Ok(DensityMatrix::single_mode(out))
}

/// Uhlmann fidelity in the squared convention, `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    for t in [rho.trace(), sigma.trace()] {
        if (t - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(t));
        }
    }
    let sr = linalg::psd_sqrt(&rho.entries);
    let inner = &sr * &sigma.entries * &sr;
    let root_trace: f64 = linalg::hermitian_eigenvalues(&inner)
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

fn partial_transpose_first(rho: &DensityMatrix) -> CMat {
    let dims = &rho.mode_dims;
    let db = dims[1];
    let n = rho.dim();
    CMat::from_fn(n, n, |r, col| {
        let (i, b) = split_index(r, dims);
        let (j, bp) = split_index(col, dims);
        rho.entries[(j * db + b, i * db + bp)]
    })
}

/// Negativity `(‖ρ^{T_A}‖₁ − Tr ρ)/2`, i.e. the summed magnitude of the negative
/// eigenvalues of the partial transpose on mode A.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_modes() != 2 {
        return Err(Error::DimensionMismatch("negativity needs a two-mode state".into()));
    }
    let pt = partial_transpose_first(rho);
    let neg: f64 = linalg::hermitian_eigenvalues(&pt)
        .iter()
        .filter(|v| **v < 0.0)
        .map(|v| -v)
        .sum();
    Ok(neg)
}

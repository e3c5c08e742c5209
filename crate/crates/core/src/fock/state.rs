use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, CVec, ZERO};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Fock truncation: highest retained photon number plus the allowed tail weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub n_max: usize,
    pub tail_tolerance: f64,
}

impl Cutoff {
    pub fn new(n_max: usize) -> Self {
        Cutoff {
            n_max,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    fn check(&self, tail: f64) -> Result<()> {
        if tail > self.tail_tolerance {
            Err(Error::CutoffTooSmall {
                tail,
                tolerance: self.tail_tolerance,
            })
        } else {
            Ok(())
        }
    }
}

impl From<usize> for Cutoff {
    fn from(n_max: usize) -> Self {
        Cutoff::new(n_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// A normalized pure state over one or two truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: CVec,
    pub mode_dims: Vec<usize>,
    /// Weight beyond the cutoff before renormalization.
    pub tail_weight: f64,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: CVec, mode_dims: Vec<usize>, tail_weight: f64) -> Result<Self> {
        let dim: usize = mode_dims.iter().product();
        if dim != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "mode_dims {mode_dims:?} vs {} amplitudes",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if norm < 1e-300 {
            return Err(Error::ZeroResult("state vector has zero norm"));
        }
        Ok(StateVector {
            amplitudes: amplitudes / c(norm, 0.0),
            mode_dims,
            tail_weight,
        })
    }

    pub fn single_mode(amplitudes: CVec) -> Result<Self> {
        let n = amplitudes.len();
        Self::new(amplitudes, vec![n], 0.0)
    }

    /// Photon-number state `|n>`.
    pub fn fock(n: usize, n_max: usize) -> Self {
        let mut v = CVec::zeros(n_max + 1);
        v[n] = c(1.0, 0.0);
        StateVector {
            amplitudes: v,
            mode_dims: vec![n_max + 1],
            tail_weight: 0.0,
        }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_max(&self) -> usize {
        self.mode_dims[0] - 1
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum()
    }

    /// Kronecker product; mode dimensions concatenate.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut dims = self.mode_dims.clone();
        dims.extend_from_slice(&other.mode_dims);
        StateVector {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            mode_dims: dims,
            tail_weight: self.tail_weight + other.tail_weight,
        }
    }

    /// Schmidt coefficients across the mode-0 | mode-1 cut, descending.
    pub fn schmidt_coefficients(&self) -> Result<Vec<f64>> {
        if self.mode_dims.len() != 2 {
            return Err(Error::DimensionMismatch("Schmidt decomposition needs two modes".into()));
        }
        let (da, db) = (self.mode_dims[0], self.mode_dims[1]);
        let m = nalgebra::DMatrix::from_fn(da, db, |i, j| self.amplitudes[i * db + j]);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        Ok(sv)
    }

    /// Copy with a different cutoff, padding with zeros or discarding the top levels.
    pub fn resized(&self, n_max: usize) -> StateVector {
        let mut v = CVec::zeros(n_max + 1);
        for (i, a) in self.amplitudes.iter().enumerate().take(n_max + 1) {
            v[i] = *a;
        }
        let lost: f64 = self.amplitudes.iter().skip(n_max + 1).map(|a| a.norm_sqr()).sum();
        let norm = v.norm();
        StateVector {
            amplitudes: v / c(norm, 0.0),
            mode_dims: vec![n_max + 1],
            tail_weight: self.tail_weight + lost,
        }
    }
}

/// Unnormalized Poissonian amplitudes `e^{-|α|²/2} α^n / √n!`.
fn poisson_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut cur = c((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(cur);
    for n in 1..=n_max {
        cur = cur * alpha / (n as f64).sqrt();
        amps.push(cur);
    }
    amps
}

/// Coherent state `|α>`.
pub fn coherent_state(alpha: Complex64, cutoff: impl Into<Cutoff>) -> Result<StateVector> {
    let cutoff = cutoff.into();
    if cutoff.n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let amps = poisson_amplitudes(alpha, cutoff.n_max);
    let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    cutoff.check(tail)?;
    let v = CVec::from_vec(amps);
    StateVector::new(v, vec![cutoff.n_max + 1], tail)
}

/// Cat state `(|α> ± |−α>)/√(2(1 ± e^{−2|α|²}))`, exact zero on the opposite parity.
pub fn cat_state(alpha: Complex64, parity: Parity, cutoff: impl Into<Cutoff>) -> Result<StateVector> {
    let cutoff = cutoff.into();
    if parity == Parity::Odd && alpha.norm() < 1e-6 {
        return Err(Error::DegenerateCat(alpha.norm()));
    }
    if cutoff.n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let amps = poisson_amplitudes(alpha, cutoff.n_max);
    let p = parity.sign();
    let norm_sq = 2.0 * (1.0 + p * (-2.0 * alpha.norm_sqr()).exp());
    let v = CVec::from_iterator(
        cutoff.n_max + 1,
        amps.iter().enumerate().map(|(n, a)| {
            let keep = (n % 2 == 0) == (parity == Parity::Even);
            if keep {
                a * 2.0
            } else {
                ZERO
            }
        }),
    );
    let kept = v.norm_squared() / norm_sq;
    let tail = (1.0 - kept).max(0.0);
    cutoff.check(tail)?;
    StateVector::new(v, vec![cutoff.n_max + 1], tail)
}

/// Squeezing parameter `r` for a variance reduction of `db` decibels.
pub fn squeezing_parameter(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

/// Squeezed vacuum with the reduced variance along the `theta = 0` quadrature.
pub fn squeezed_vacuum(squeezing_db: f64, cutoff: impl Into<Cutoff>) -> Result<StateVector> {
    let cutoff = cutoff.into();
    if !(0.0..=10.0).contains(&squeezing_db) {
        return Err(Error::invalid("squeezing_db", "must lie in [0, 10]"));
    }
    let r = squeezing_parameter(squeezing_db);
    let t = r.tanh();
    let mut v = CVec::zeros(cutoff.n_max + 1);
    let mut amp = 1.0 / r.cosh().sqrt();
    v[0] = c(amp, 0.0);
    let mut kept = amp * amp;
    let mut n = 2;
    while n <= cutoff.n_max {
        amp *= -t * (((n - 1) as f64) / n as f64).sqrt();
        v[n] = c(amp, 0.0);
        kept += amp * amp;
        n += 2;
    }
    let tail = (1.0 - kept).max(0.0);
    cutoff.check(tail)?;
    StateVector::new(v, vec![cutoff.n_max + 1], tail)
}

/// Apply the annihilation operator and renormalize. The result keeps the input
/// dimension (top level zero) and inherits its tail weight.
pub fn photon_subtract(psi: &StateVector) -> Result<StateVector> {
    if psi.mode_dims.len() != 1 {
        return Err(Error::DimensionMismatch("photon_subtract needs a single mode".into()));
    }
    let d = psi.dim();
    let mut v = CVec::zeros(d);
    for n in 0..d - 1 {
        v[n] = psi.amplitudes[n + 1] * ((n + 1) as f64).sqrt();
    }
    if v.norm() < 1e-300 {
        return Err(Error::ZeroResult("photon subtraction from vacuum"));
    }
    StateVector::new(v, psi.mode_dims.clone(), psi.tail_weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    #[test]
    fn coherent_vacuum_and_mean() {
        let v = coherent_state(real(0.0), 10).unwrap();
        assert!((v.amplitudes[0] - real(1.0)).norm() < 1e-15);
        let a = coherent_state(real(1.0), 14).unwrap();
        assert!((a.mean_photon_number() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coherent_first_amplitude_before_renormalization() {
        let amps = poisson_amplitudes(real(1.0), 10);
        assert!((amps[0].re - (-0.5f64).exp()).abs() < 1e-15);
        assert!((amps[0].re - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn tail_check_rejects_small_cutoff() {
        let err = coherent_state(real(2.0), 4).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { .. }));
        let loose = Cutoff::new(4).with_tail_tolerance(0.5);
        assert!(coherent_state(real(2.0), loose).is_ok());
    }

    #[test]
    fn cat_parity_is_exact() {
        let even = cat_state(real(1.0), Parity::Even, 12).unwrap();
        let odd = cat_state(real(1.0), Parity::Odd, 12).unwrap();
        for n in 0..13 {
            if n % 2 == 1 {
                assert_eq!(even.amplitudes[n], ZERO);
            } else {
                assert_eq!(odd.amplitudes[n], ZERO);
            }
        }
        assert!(even.inner(&odd).norm() < 1e-12);
        assert!(matches!(
            cat_state(real(1e-8), Parity::Odd, 10),
            Err(Error::DegenerateCat(_))
        ));
    }

    #[test]
    fn squeezing_parameter_for_three_db() {
        let r = squeezing_parameter(3.0);
        assert!((r - 0.34539).abs() < 1e-5);
        assert!(((-2.0 * r).exp() - 10f64.powf(-0.3)).abs() < 1e-14);
        let v = squeezed_vacuum(0.0, 6).unwrap();
        assert!((v.amplitudes[0] - real(1.0)).norm() < 1e-15);
    }

    #[test]
    fn photon_subtraction_cases() {
        let one = StateVector::fock(1, 5);
        let out = photon_subtract(&one).unwrap();
        assert!((out.amplitudes[0] - real(1.0)).norm() < 1e-15);
        assert!(matches!(
            photon_subtract(&StateVector::vacuum(5)),
            Err(Error::ZeroResult(_))
        ));
        // coherent states are eigenstates of the annihilation operator
        let a = coherent_state(c(0.7, 0.3), 30).unwrap();
        let sub = photon_subtract(&a).unwrap();
        let overlap = a.inner(&sub).norm_sqr();
        assert!((overlap - 1.0).abs() < 1e-10);
    }
}

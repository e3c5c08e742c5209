//! Dense complex matrix helpers shared by the Fock-space, SDP and tomography code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e^{i phi}`
pub fn cis(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

/// `(A + A^dagger) / 2`
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Real part of `Tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)] * b[(j, i)];
            s += x.re;
        }
    }
    s
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error(a: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigenvalues(a)[0]
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_map(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let n = a.nrows();
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let fv = f(*v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    &scaled * vecs.adjoint()
}

/// Positive square root, clipping eigenvalues below zero.
pub fn psd_sqrt(a: &CMat) -> CMat {
    hermitian_map(a, |v| v.max(0.0).sqrt())
}

pub fn trace_norm(a: &CMat) -> f64 {
    hermitian_eigenvalues(a).iter().map(|v| v.abs()).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Number of real coordinates of a `d x d` Hermitian matrix.
pub fn hermitian_coord_len(d: usize) -> usize {
    d * d
}

/// Coordinates in the orthonormal Hermitian basis
/// `{e_ii} ∪ {(e_ij + e_ji)/√2} ∪ {i(e_ij − e_ji)/√2}` (i < j).
pub fn hermitian_coords(a: &CMat) -> Vec<f64> {
    let d = a.nrows();
    let mut out = Vec::with_capacity(d * d);
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        out.push(a[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out.push(s2 * z.re);
            out.push(s2 * z.im);
        }
    }
    out
}

pub fn from_hermitian_coords(coords: &[f64], d: usize) -> CMat {
    assert_eq!(coords.len(), d * d);
    let mut a = CMat::zeros(d, d);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        a[(i, i)] = c(coords[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = c(coords[k] * r2, coords[k + 1] * r2);
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
            k += 2;
        }
    }
    a
}

/// Sparse entries `(row, col, value)` of the basis element with index `p`.
pub fn hermitian_basis_entries(p: usize, d: usize) -> Vec<(usize, usize, Complex64)> {
    if p < d {
        return vec![(p, p, ONE)];
    }
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            if p == k {
                return vec![(i, j, c(r2, 0.0)), (j, i, c(r2, 0.0))];
            }
            if p == k + 1 {
                return vec![(i, j, c(0.0, r2)), (j, i, c(0.0, -r2))];
            }
            k += 2;
        }
    }
    panic!("basis index {p} out of range for dimension {d}");
}

/// Entrywise maximum modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn inner(a: &CVec, b: &CVec) -> Complex64 {
    a.dotc(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(d: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(d, d, |_, _| c(next(), next()));
        hermitian_part(&a)
    }

    #[test]
    fn coords_round_trip_and_inner_product() {
        let a = random_hermitian(5, 3);
        let b = random_hermitian(5, 4);
        let ca = hermitian_coords(&a);
        let back = from_hermitian_coords(&ca, 5);
        assert!(max_abs_diff(&a, &back) < 1e-14);
        let cb = hermitian_coords(&b);
        let dot: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
        assert!((dot - trace_product_re(&a, &b)).abs() < 1e-13);
    }

    #[test]
    fn basis_entries_match_coords() {
        let d = 4;
        for p in 0..d * d {
            let mut e = CMat::zeros(d, d);
            for (r, cc, v) in hermitian_basis_entries(p, d) {
                e[(r, cc)] = v;
            }
            let coords = hermitian_coords(&e);
            for (q, x) in coords.iter().enumerate() {
                let expect = if p == q { 1.0 } else { 0.0 };
                assert!((x - expect).abs() < 1e-14, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn eigen_ordering_and_sqrt() {
        let a = random_hermitian(6, 9);
        let aa = &a * &a;
        let r = psd_sqrt(&aa);
        assert!(max_abs_diff(&(&r * &r), &aa) < 1e-12);
        let vals = hermitian_eigenvalues(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}

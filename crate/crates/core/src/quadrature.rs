//! Gauss-type quadrature rules from the Golub-Welsch eigenvalue construction.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(off_diag: impl Fn(usize) -> f64, n: usize, mu0: f64) -> Rule {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = off_diag(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    golub_welsch(
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        n,
        2.0,
    )
}

/// Gauss–Hermite rule for the weight `exp(-x^2)` on the real line.
pub fn gauss_hermite(n: usize) -> Rule {
    golub_welsch(|k| (k as f64 / 2.0).sqrt(), n, std::f64::consts::PI.sqrt())
}

impl Rule {
    /// Integrate `f` over `[a, b]` split into `panels` equal panels (Legendre rules only).
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * total
    }
}

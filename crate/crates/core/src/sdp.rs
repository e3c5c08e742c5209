//! Primal-dual interior-point solver for block-diagonal Hermitian SDPs.
//!
//! Standard form:
//!
//! ```text
//! primal:  min  Σ_b <C_b, X_b>   s.t.  Σ_b Re Tr(A_ib X_b) = b_i,  X_b ⪰ 0
//! dual:    max  b·y              s.t.  S_b = C_b − Σ_i y_i A_ib ⪰ 0
//! ```
//!
//! Each `A_ib` is a sparse combination of orthonormal Hermitian basis elements
//! (see [`crate::linalg::hermitian_basis_entries`]). Blocks of dimension one carry
//! scalar variables. Search directions are HKM with Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

/// One term `coef · E_basis` of a constraint matrix, living in `block`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub block: usize,
    pub basis: usize,
    pub coef: f64,
}

#[derive(Debug, Clone)]
pub struct BlockSdp {
    pub block_dims: Vec<usize>,
    pub c: Vec<CMat>,
    pub a: Vec<Vec<Term>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-7,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SdpStatus,
    pub x: Vec<CMat>,
    pub y: Vec<f64>,
    pub s: Vec<CMat>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

struct Layout {
    /// per block: (constraint index, basis index, coefficient)
    by_block: Vec<Vec<(usize, usize, f64)>>,
    basis: Vec<Vec<Vec<(usize, usize, num_complex::Complex64)>>>,
}

impl BlockSdp {
    fn check(&self) -> Result<()> {
        let nb = self.block_dims.len();
        if self.c.len() != nb {
            return Err(Error::DimensionMismatch(format!("{} cost blocks for {nb} blocks", self.c.len())));
        }
        if self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch("constraint count differs from rhs length".into()));
        }
        for (cb, &d) in self.c.iter().zip(&self.block_dims) {
            if cb.nrows() != d || cb.ncols() != d {
                return Err(Error::DimensionMismatch("cost block has the wrong size".into()));
            }
        }
        for t in self.a.iter().flatten() {
            if t.block >= nb || t.basis >= self.block_dims[t.block].pow(2) {
                return Err(Error::DimensionMismatch(format!("bad term {t:?}")));
            }
        }
        Ok(())
    }

    fn layout(&self) -> Layout {
        let mut by_block = vec![Vec::new(); self.block_dims.len()];
        for (i, terms) in self.a.iter().enumerate() {
            for t in terms {
                by_block[t.block].push((i, t.basis, t.coef));
            }
        }
        let mut basis_cache: Vec<Vec<Vec<_>>> = Vec::new();
        let mut basis = Vec::with_capacity(self.block_dims.len());
        for &d in &self.block_dims {
            while basis_cache.len() <= d {
                let k = basis_cache.len();
                basis_cache.push((0..k * k).map(|p| linalg::hermitian_basis_entries(p, k)).collect());
            }
            basis.push(basis_cache[d].clone());
        }
        Layout { by_block, basis }
    }

    /// `A(X)_i = Σ_b Re Tr(A_ib X_b)`
    pub fn apply(&self, x: &[CMat]) -> Vec<f64> {
        let coords: Vec<Vec<f64>> = x.iter().map(linalg::hermitian_coords).collect();
        self.a
            .iter()
            .map(|terms| terms.iter().map(|t| t.coef * coords[t.block][t.basis]).sum())
            .collect()
    }

    /// `Aᵀ(y)_b = Σ_i y_i A_ib`
    pub fn adjoint(&self, y: &[f64]) -> Vec<CMat> {
        let mut coords: Vec<Vec<f64>> = self.block_dims.iter().map(|&d| vec![0.0; d * d]).collect();
        for (terms, &yi) in self.a.iter().zip(y) {
            for t in terms {
                coords[t.block][t.basis] += yi * t.coef;
            }
        }
        coords
            .iter()
            .zip(&self.block_dims)
            .map(|(v, &d)| linalg::from_hermitian_coords(v, d))
            .collect()
    }

    pub fn primal_objective(&self, x: &[CMat]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| linalg::trace_product_re(c, x)).sum()
    }

    pub fn dual_slack(&self, y: &[f64]) -> Vec<CMat> {
        self.c.iter().zip(self.adjoint(y)).map(|(c, a)| c - a).collect()
    }
}

fn block_inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| linalg::trace_product_re(x, y)).sum()
}

fn block_norm(a: &[CMat]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest `alpha` with `X + alpha dX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol: &Cholesky<num_complex::Complex64, nalgebra::Dyn>, dx: &CMat) -> f64 {
    let l = chol.l();
    let Some(y) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(z) = l.solve_lower_triangular(&y.adjoint()) else {
        return 0.0;
    };
    let lmin = linalg::min_eigenvalue(&linalg::hermitian_part(&z));
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn step_length(chols: &[Cholesky<num_complex::Complex64, nalgebra::Dyn>], d: &[CMat]) -> f64 {
    chols.iter().zip(d).map(|(ch, dm)| max_step(ch, dm)).fold(f64::INFINITY, f64::min)
}

fn cholesky_all(a: &[CMat]) -> Option<Vec<Cholesky<num_complex::Complex64, nalgebra::Dyn>>> {
    a.iter().map(|m| Cholesky::new(linalg::hermitian_part(m))).collect()
}

/// `K[p][q] = Re Tr(E_p X E_q W)` for one block.
fn block_kernel(basis: &[Vec<(usize, usize, num_complex::Complex64)>], x: &CMat, w: &CMat) -> DMatrix<f64> {
    let n = basis.len();
    let mut k = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let mut acc = c(0.0, 0.0);
            for &(re, ce, ae) in &basis[p] {
                for &(rf, cf, af) in &basis[q] {
                    acc += ae * af * x[(ce, rf)] * w[(cf, re)];
                }
            }
            k[(p, q)] = acc.re;
            k[(q, p)] = acc.re;
        }
    }
    k
}

fn schur(problem: &BlockSdp, layout: &Layout, x: &[CMat], w: &[CMat]) -> DMatrix<f64> {
    let m = problem.b.len();
    let mut out = DMatrix::zeros(m, m);
    for (bi, terms) in layout.by_block.iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        let k = block_kernel(&layout.basis[bi], &x[bi], &w[bi]);
        for &(i, p, ci) in terms {
            for &(j, q, cj) in terms {
                out[(i, j)] += ci * cj * k[(p, q)];
            }
        }
    }
    out
}

struct Direction {
    dx: Vec<CMat>,
    dy: Vec<f64>,
    ds: Vec<CMat>,
}

fn direction(
    problem: &BlockSdp,
    mat: &DMatrix<f64>,
    chol_m: &Cholesky<f64, nalgebra::Dyn>,
    x: &[CMat],
    w: &[CMat],
    rp: &[f64],
    rd: &[CMat],
    g: &[CMat],
) -> Direction {
    let xrw: Vec<CMat> = x.iter().zip(rd).zip(w).map(|((x, r), w)| x * r * w).collect();
    let ag = problem.apply(g);
    let axrw = problem.apply(&xrw);
    let rhs = DVector::from_iterator(rp.len(), (0..rp.len()).map(|i| rp[i] - ag[i] + axrw[i]));
    let mut dy = chol_m.solve(&rhs);
    // one step of iterative refinement; M is ill-conditioned near the optimum
    let r = &rhs - mat * &dy;
    dy += chol_m.solve(&r);
    let dy: Vec<f64> = dy.iter().copied().collect();
    let aty = problem.adjoint(&dy);
    let ds: Vec<CMat> = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
    let dx: Vec<CMat> = g
        .iter()
        .zip(x)
        .zip(ds.iter().zip(w))
        .map(|((g, x), (ds, w))| linalg::hermitian_part(&(g - x * ds * w)))
        .collect();
    Direction { dx, dy, ds }
}

pub fn solve(problem: &BlockSdp, opts: &SolverOptions) -> Result<Solution> {
    problem.check()?;
    let layout = problem.layout();
    let m = problem.b.len();
    let n_total: usize = problem.block_dims.iter().sum();

    let a_norms: Vec<f64> = problem.a.iter().map(|t| t.iter().map(|t| t.coef * t.coef).sum::<f64>().sqrt()).collect();
    let c_norm = block_norm(&problem.c);
    let b_norm = vec_norm(&problem.b);
    let mut x = Vec::with_capacity(problem.block_dims.len());
    let mut s = Vec::with_capacity(problem.block_dims.len());
    for &d in &problem.block_dims {
        let sd = (d as f64).sqrt();
        let xi = (0..m)
            .map(|i| sd * (1.0 + problem.b[i].abs()) / (1.0 + a_norms[i]))
            .fold(10.0f64.max(sd), f64::max);
        let eta = a_norms.iter().copied().fold(10.0f64.max(sd).max(c_norm), f64::max);
        x.push(CMat::identity(d, d) * c(xi, 0.0));
        s.push(CMat::identity(d, d) * c(eta, 0.0));
    }
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::NumericalFailure;
    let mut best: Option<(f64, Solution)> = None;
    for it in 0..=opts.max_iter {
        let ax = problem.apply(&x);
        let rp: Vec<f64> = problem.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = problem.adjoint(&y);
        let rd: Vec<CMat> = problem.c.iter().zip(&s).zip(&aty).map(|((c, s), a)| c - s - a).collect();
        let pobj = problem.primal_objective(&x);
        let dobj: f64 = problem.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let xs = block_inner(&x, &s);
        let gap = (pobj - dobj).abs().max(xs.abs()) / (1.0 + pobj.abs() + dobj.abs());
        let pinf = vec_norm(&rp) / (1.0 + b_norm);
        let dinf = block_norm(&rd) / (1.0 + c_norm);
        let score = (gap / opts.gap_tol).max(pinf / opts.feas_tol).max(dinf / opts.feas_tol);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            let snapshot = Solution {
                status: SdpStatus::NumericalFailure,
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                primal_objective: pobj,
                dual_objective: dobj,
                relative_gap: gap,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                iterations: it,
            };
            best = Some((score, snapshot));
        }
        if score <= 1.0 {
            status = SdpStatus::Optimal;
            break;
        }
        // near the optimum the Schur complement loses accuracy and progress stalls
        if best.as_ref().is_some_and(|(_, b)| it > b.iterations + 20) {
            break;
        }
        let y_norm = vec_norm(&y);
        if pinf < opts.feas_tol && dobj > 1e10 * (1.0 + pobj.abs()) || y_norm > 1e14 {
            status = SdpStatus::Infeasible;
            break;
        }
        if block_norm(&x) > 1e14 {
            status = SdpStatus::Infeasible;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        let mu = xs / n_total as f64;

        let Some(chol_s) = cholesky_all(&s) else { break };
        let Some(chol_x) = cholesky_all(&x) else { break };
        let w: Vec<CMat> = chol_s.iter().map(|ch| linalg::hermitian_part(&ch.inverse())).collect();
        let mut mat = schur(problem, &layout, &x, &w);
        let scale = (0..m).map(|i| mat[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
        let chol_m = match Cholesky::new(mat.clone()) {
            Some(ch) => ch,
            None => {
                for i in 0..m {
                    mat[(i, i)] += 1e-13 * scale;
                }
                match Cholesky::new(mat.clone()) {
                    Some(ch) => ch,
                    None => break,
                }
            }
        };

        // predictor
        let g_aff: Vec<CMat> = x.iter().map(|x| -x).collect();
        let aff = direction(problem, &mat, &chol_m, &x, &w, &rp, &rd, &g_aff);
        let ap = step_length(&chol_x, &aff.dx).min(1.0);
        let ad = step_length(&chol_s, &aff.ds).min(1.0);
        let xs_aff = {
            let xa: Vec<CMat> = x.iter().zip(&aff.dx).map(|(x, d)| x + d * c(ap, 0.0)).collect();
            let sa: Vec<CMat> = s.iter().zip(&aff.ds).map(|(s, d)| s + d * c(ad, 0.0)).collect();
            block_inner(&xa, &sa)
        };
        let sigma = (xs_aff / xs).clamp(0.0, 1.0).powi(3);

        // corrector
        let g: Vec<CMat> = x
            .iter()
            .zip(&w)
            .zip(aff.dx.iter().zip(&aff.ds))
            .map(|((x, w), (dx, ds))| w * c(sigma * mu, 0.0) - x - dx * ds * w)
            .collect();
        let dir = direction(problem, &mat, &chol_m, &x, &w, &rp, &rd, &g);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * step_length(&chol_x, &dir.dx)).min(1.0);
        let ad = (gamma * step_length(&chol_s, &dir.ds)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        for (xb, d) in x.iter_mut().zip(&dir.dx) {
            *xb += d * c(ap, 0.0);
        }
        for (sb, d) in s.iter_mut().zip(&dir.ds) {
            *sb += d * c(ad, 0.0);
        }
        for (yi, d) in y.iter_mut().zip(&dir.dy) {
            *yi += ad * d;
        }
    }
    let (_, mut sol) = best.expect("at least one iterate is scored");
    sol.status = status;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_terms(coefs: &[(usize, f64)]) -> Vec<Term> {
        coefs.iter().map(|&(block, coef)| Term { block, basis: 0, coef }).collect()
    }

    #[test]
    fn linear_program_in_scalar_blocks() {
        // min x0 + 2 x1  s.t.  x0 + x1 = 1,  x >= 0  → x = (1, 0), value 1
        let problem = BlockSdp {
            block_dims: vec![1, 1],
            c: vec![CMat::from_element(1, 1, c(1.0, 0.0)), CMat::from_element(1, 1, c(2.0, 0.0))],
            a: vec![scalar_terms(&[(0, 1.0), (1, 1.0)])],
            b: vec![1.0],
        };
        let sol = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-7);
        assert!((sol.y[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn minimum_eigenvalue_of_hermitian_matrix() {
        // min <C, X> s.t. Tr X = 1, X ⪰ 0 → λ_min(C)
        let cm = CMat::from_row_slice(3, 3, &[
            c(2.0, 0.0), c(0.3, 0.5), c(0.0, -0.2),
            c(0.3, -0.5), c(1.0, 0.0), c(0.7, 0.1),
            c(0.0, 0.2), c(0.7, -0.1), c(-0.5, 0.0),
        ]);
        let problem = BlockSdp {
            block_dims: vec![3],
            c: vec![cm.clone()],
            a: vec![(0..3).map(|p| Term { block: 0, basis: p, coef: 1.0 }).collect()],
            b: vec![1.0],
        };
        let sol = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let lmin = linalg::min_eigenvalue(&cm);
        assert!((sol.primal_objective - lmin).abs() < 1e-7, "{} vs {lmin}", sol.primal_objective);
        assert!((sol.dual_objective - lmin).abs() < 1e-7);
    }

    #[test]
    fn weak_duality_on_solution() {
        let cm = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let problem = BlockSdp {
            block_dims: vec![2, 1],
            c: vec![cm, CMat::from_element(1, 1, c(0.5, 0.0))],
            a: vec![
                vec![Term { block: 0, basis: 0, coef: 1.0 }, Term { block: 1, basis: 0, coef: 1.0 }],
                vec![Term { block: 0, basis: 2, coef: 1.0 }],
            ],
            b: vec![1.0, 0.2],
        };
        let sol = solve(&problem, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let s = problem.dual_slack(&sol.y);
        for sb in &s {
            assert!(linalg::min_eigenvalue(sb) > -1e-7);
        }
        assert!(sol.primal_objective - sol.dual_objective > -1e-7);
        assert!((sol.primal_objective - sol.dual_objective).abs() < 1e-6);
    }

    #[test]
    fn rejects_out_of_range_terms() {
        let problem = BlockSdp {
            block_dims: vec![1],
            c: vec![CMat::zeros(1, 1)],
            a: vec![vec![Term { block: 0, basis: 3, coef: 1.0 }]],
            b: vec![1.0],
        };
        assert!(solve(&problem, &SolverOptions::default()).is_err());
    }
}

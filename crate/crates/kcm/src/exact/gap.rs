//! Spectral gap of the finite-interval generator.
//!
//! The generator 𝓛 is negative semidefinite after conjugation by √π; its
//! largest eigenvalue is 0 with eigenvector √π, and the gap is the
//! negated second-largest eigenvalue. Two paths compute it: dense
//! symmetric eigendecomposition up to [`DENSE_L_MAX`], and Lanczos with
//! the √π direction deflated and full reorthogonalization above that.
//! The two are cross-validated against each other where both run.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::GeneratorMatrix;

/// Largest interval length solved by dense eigendecomposition (2^10 =
/// 1024 states). Above this the dense solve dominates runtime and memory,
/// and the deflated Lanczos iteration takes over.
pub const DENSE_L_MAX: usize = 10;

/// Spectral gap, choosing the dense or iterative path by interval length.
pub fn spectral_gap(g: &GeneratorMatrix) -> Result<f64> {
    if g.l() <= DENSE_L_MAX {
        spectral_gap_dense(g)
    } else {
        spectral_gap_lanczos(g, 1e-9, 400)
    }
}

/// Dense path: materialize the symmetrized generator and take the full
/// spectrum.
pub fn spectral_gap_dense(g: &GeneratorMatrix) -> Result<f64> {
    let n = g.dim();
    if n > (1 << DENSE_L_MAX) {
        return Err(Error::resource(format!(
            "dense eigendecomposition capped at 2^{DENSE_L_MAX} states, got {n}"
        )));
    }
    let spq = (g.params().p * g.params().q).sqrt();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        a[(s, s)] = g.diag()[s];
        for (t, _) in g.row(s) {
            a[(s, t)] = spq;
        }
    }
    let eig = a.symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    if n == 1 {
        return Err(Error::usage("gap undefined for a single state"));
    }
    // ev[0] is the stationary eigenvalue 0 up to roundoff.
    if ev[0].abs() > 1e-9 {
        return Err(Error::check_failed(format!(
            "top eigenvalue should be 0, got {:.3e}",
            ev[0]
        )));
    }
    Ok(-ev[1])
}

/// Iterative path: Lanczos on the symmetrized generator restricted to the
/// orthogonal complement of √π. Full reorthogonalization keeps the basis
/// clean; the √π direction is re-projected out on every step so the known
/// zero eigenvalue cannot resurface. Returns a numerical error carrying
/// the final residual if the top Ritz pair has not converged to `tol`
/// within `max_iter` steps.
pub fn spectral_gap_lanczos(g: &GeneratorMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::usage("gap undefined for a single state"));
    }
    let sqrt_pi: Vec<f64> = g.pi().iter().map(|&x| x.sqrt()).collect();

    // Deterministic start, orthogonal to √π.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6A70_5EED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project_out(&mut v, &sqrt_pi);
    let nv = norm(&v);
    if nv < 1e-12 {
        return Err(Error::numerical("degenerate start vector"));
    }
    scale(&mut v, 1.0 / nv);

    let max_iter = max_iter.min(n - 1);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0f64; n];
    let mut last_theta = f64::NEG_INFINITY;
    let mut last_residual = f64::INFINITY;

    for k in 0..max_iter {
        g.apply_symmetrized(&v, &mut w);
        if k > 0 {
            axpy(&mut w, -beta[k - 1], &basis[k - 1]);
        }
        let a = dot(&w, &v);
        alpha.push(a);
        axpy(&mut w, -a, &v);
        // Full reorthogonalization, √π included, applied twice.
        for _ in 0..2 {
            project_out(&mut w, &sqrt_pi);
            for u in &basis {
                project_out(&mut w, u);
            }
            let c = dot(&w, &v);
            axpy(&mut w, -c, &v);
        }
        let b = norm(&w);
        basis.push(std::mem::take(&mut v));

        // Ritz values of the current tridiagonal block.
        let (theta, last_comp) = top_ritz(&alpha, &beta);
        let residual = b * last_comp.abs();
        last_residual = residual;
        if residual <= tol && (theta - last_theta).abs() <= tol.max(1e-14) {
            return Ok(-theta);
        }
        last_theta = theta;

        if b < 1e-14 {
            // Krylov space exhausted: the Ritz values are exact.
            return Ok(-theta);
        }
        beta.push(b);
        v = w.clone();
        scale(&mut v, 1.0 / b);
    }
    Err(Error::numerical(format!(
        "Lanczos did not converge in {max_iter} iterations (residual {last_residual:.3e}, tol {tol:.1e})"
    )))
}

/// Largest eigenvalue of the tridiagonal (alpha, beta) block and the last
/// component of its eigenvector (for the residual bound).
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    if k == 1 {
        return (alpha[0], 1.0);
    }
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut best = 0usize;
    for i in 1..k {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let vec: DVector<f64> = eig.eigenvectors.column(best).into();
    (eig.eigenvalues[best], vec[k - 1])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], c: f64) {
    for x in a {
        *x *= c;
    }
}

fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn project_out(v: &mut [f64], u: &[f64]) {
    let c = dot(v, u);
    axpy(v, -c, u);
}

//! Lowest eigenstates of an assembled Hamiltonian by restarted Lanczos
//! iteration with full reorthogonalization and locking of converged states.

use crate::error::{CoreError, Result};
use crate::manybody::hamiltonian::{AssembledHamiltonian, HamiltonianSpec};
use crate::manybody::wavefunction::{symmetrize, Symmetry, WaveFunction};
use ndarray::ArrayD;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Residual target for `‖Hψ - Eψ‖`.
    pub tol: f64,
    /// Krylov block size per restart (clamped to the space dimension).
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Seed for the start vectors; fixed by default so initial states are
    /// reproducible run to run.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            krylov_dim: 40,
            max_restarts: 400,
            seed: 0x5eed,
        }
    }
}

/// Lowest `k` eigenpairs of the Hamiltonian restricted to the requested
/// exchange-symmetry sector, in ascending energy with a deterministic
/// tie-break (real part at the first grid node) inside degenerate groups.
pub fn eigenstates(
    spec: &HamiltonianSpec,
    particles: usize,
    symmetry: Symmetry,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<(f64, WaveFunction)>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let h = spec.assemble(particles)?;
    let grid = spec.grid.clone();
    let dims = grid.dims();
    let weight = grid.node_weight().powi(particles as i32);
    let dim: usize = h.potential_tensor().len();
    let sector_dim_bound = dim; // conservative; symmetry sectors are smaller
    if k > sector_dim_bound {
        return Err(CoreError::InvalidArgument(format!(
            "asked for {k} states in a {dim}-dimensional space"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let m = opts.krylov_dim.clamp(4, 80).min(dim);
    let mut locked: Vec<(f64, ArrayD<Complex64>)> = Vec::new();

    let project = |values: &ArrayD<Complex64>| -> Result<ArrayD<Complex64>> {
        symmetrize(values, dims, particles, symmetry)
    };
    let mut fresh_start = |rng: &mut ChaCha8Rng| -> ArrayD<Complex64> {
        ArrayD::from_shape_fn(h.potential_tensor().raw_dim(), |_| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    };

    let mut start = project(&fresh_start(&mut rng))?;
    let mut stagnant_restarts = 0usize;
    let mut last_progress = 0usize;

    for _restart in 0..opts.max_restarts {
        orthogonalize(&mut start, locked.iter().map(|(_, v)| v), weight);
        let nrm = norm(&start, weight);
        if nrm < 1e-12 {
            start = project(&fresh_start(&mut rng))?;
            continue;
        }
        scale(&mut start, 1.0 / nrm);

        // Lanczos with full reorthogonalization against both the basis and
        // the locked states.
        let mut basis: Vec<ArrayD<Complex64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for i in 0..m {
            let mut w = h.apply_tensor(&basis[i])?;
            w = project(&w)?;
            orthogonalize(&mut w, locked.iter().map(|(_, v)| v), weight);
            let alpha = inner(&basis[i], &w, weight).re;
            axpy(&mut w, -alpha, &basis[i]);
            if i > 0 {
                let beta_prev = betas[i - 1];
                axpy(&mut w, -beta_prev, &basis[i - 1]);
            }
            // Full reorthogonalization pass.
            for q in basis.iter() {
                let c = inner(q, &w, weight);
                axpy_c(&mut w, -c, q);
            }
            alphas.push(alpha);
            let beta = norm(&w, weight);
            if i + 1 == m || beta < 1e-13 {
                break;
            }
            betas.push(beta);
            scale(&mut w, 1.0 / beta);
            basis.push(w);
        }

        let (thetas, vecs) = tridiag_eigen(&alphas, &betas);
        // Walk the Ritz values from below, locking only while consecutively
        // converged from the bottom — a converged state above an unconverged
        // one may sit above eigenvalues that have not surfaced yet.
        let mut progressed = false;
        let mut best_unconverged: Option<ArrayD<Complex64>> = None;
        for order in sorted_indices(&thetas) {
            if locked.len() >= k {
                break;
            }
            let theta = thetas[order];
            let mut z: ArrayD<Complex64> = ArrayD::zeros(start.raw_dim());
            for (i, q) in basis.iter().enumerate() {
                axpy(&mut z, vecs[i][order], q);
            }
            let zn = norm(&z, weight);
            if zn < 1e-12 {
                continue;
            }
            scale(&mut z, 1.0 / zn);
            let hz = h.apply_tensor(&z)?;
            let mut r = hz;
            axpy(&mut r, -theta, &z);
            let res = norm(&r, weight);
            if res < opts.tol {
                orthogonalize(&mut z, locked.iter().map(|(_, v)| v), weight);
                let zn = norm(&z, weight);
                if zn > 1e-8 {
                    scale(&mut z, 1.0 / zn);
                    locked.push((theta, z));
                    progressed = true;
                }
            } else {
                best_unconverged = Some(z);
                break;
            }
        }
        if locked.len() >= k {
            break;
        }
        if !progressed {
            stagnant_restarts += 1;
        } else {
            stagnant_restarts = 0;
        }
        if locked.len() == last_progress && stagnant_restarts > 6 {
            // Degenerate partner may be missing from this Krylov history.
            start = project(&fresh_start(&mut rng))?;
            stagnant_restarts = 0;
        } else {
            start = match best_unconverged {
                Some(z) => z,
                None => project(&fresh_start(&mut rng))?,
            };
        }
        last_progress = locked.len();
    }

    if locked.len() < k {
        return Err(CoreError::EigensolveFailed(format!(
            "converged {} of {k} states within {} restarts",
            locked.len(),
            opts.max_restarts
        )));
    }

    // Deterministic ordering and phases.
    locked.truncate(k.max(locked.len()));
    let mut out: Vec<(f64, WaveFunction)> = Vec::with_capacity(k);
    for (e, mut v) in locked.into_iter() {
        fix_phase(&mut v);
        let wf = WaveFunction::new(grid.clone(), particles, symmetry, v)?;
        out.push((e, wf));
    }
    out.sort_by(|(ea, va), (eb, vb)| {
        let scale = 1.0 + ea.abs().max(eb.abs());
        if (ea - eb).abs() < 1e-8 * scale {
            let ra = first_node_re(va);
            let rb = first_node_re(vb);
            ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            ea.partial_cmp(eb).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    out.truncate(k);
    Ok(out)
}

fn first_node_re(wf: &WaveFunction) -> f64 {
    wf.values().iter().next().map(|v| v.re).unwrap_or(0.0)
}

/// Rotate the global phase so the largest-magnitude entry is real positive.
fn fix_phase(v: &mut ArrayD<Complex64>) {
    let mut best = Complex64::new(0.0, 0.0);
    let mut best_norm = 0.0;
    for &z in v.iter() {
        let n = z.norm_sqr();
        if n > best_norm {
            best_norm = n;
            best = z;
        }
    }
    if best_norm > 0.0 {
        let phase = best / best.norm();
        let rot = phase.conj();
        v.mapv_inplace(|z| z * rot);
    }
}

fn sorted_indices(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

fn inner(a: &ArrayD<Complex64>, b: &ArrayD<Complex64>, weight: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc * weight
}

fn norm(a: &ArrayD<Complex64>, weight: f64) -> f64 {
    (a.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight).sqrt()
}

fn scale(a: &mut ArrayD<Complex64>, s: f64) {
    a.mapv_inplace(|v| v * s);
}

fn axpy(y: &mut ArrayD<Complex64>, a: f64, x: &ArrayD<Complex64>) {
    y.zip_mut_with(x, |yv, xv| *yv += a * xv);
}

fn axpy_c(y: &mut ArrayD<Complex64>, a: Complex64, x: &ArrayD<Complex64>) {
    y.zip_mut_with(x, |yv, xv| *yv += a * xv);
}

fn orthogonalize<'a>(
    v: &mut ArrayD<Complex64>,
    against: impl Iterator<Item = &'a ArrayD<Complex64>>,
    weight: f64,
) {
    for q in against {
        let c = inner(q, v, weight);
        axpy_c(v, -c, q);
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by the implicit QL
/// algorithm. Returns eigenvalues and the matrix of eigenvectors as
/// `vecs[row][column]`.
pub(crate) fn tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![vec![0.0; n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if n == 1 {
        return (d, z);
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible off-diagonal element.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 50, "tridiagonal QL did not converge");
            // Wilkinson-style implicit shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    (d, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};
    use crate::manybody::hamiltonian::Interaction;
    use std::f64::consts::PI;

    #[test]
    fn tridiag_2x2_analytic() {
        let (vals, vecs) = tridiag_eigen(&[1.0, 3.0], &[1.0]);
        let mut v = vals.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Eigenvalues of [[1,1],[1,3]]: 2 ± √2
        assert!((v[0] - (2.0 - 2.0f64.sqrt())).abs() < 1e-12);
        assert!((v[1] - (2.0 + 2.0f64.sqrt())).abs() < 1e-12);
        // Residual check A z = λ z
        for j in 0..2 {
            let z = [vecs[0][j], vecs[1][j]];
            let az = [z[0] + z[1], z[0] + 3.0 * z[1]];
            for i in 0..2 {
                assert!((az[i] - vals[j] * z[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tridiag_matches_nalgebra() {
        use nalgebra::DMatrix;
        let n = 12;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + 0.3 * (i as f64).cos()).collect();
        let (mut vals, vecs) = tridiag_eigen(&diag, &off);
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = diag[i];
            if i + 1 < n {
                a[(i, i + 1)] = off[i];
                a[(i + 1, i)] = off[i];
            }
        }
        let mut reference: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        reference.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (v, r) in vals.iter().zip(reference.iter()) {
            assert!((v - r).abs() < 1e-10, "{v} vs {r}");
        }
        // Orthonormal columns.
        for j in 0..n {
            for jj in j..n {
                let dot: f64 = (0..n).map(|i| vecs[i][j] * vecs[i][jj]).sum();
                let want = if j == jj { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn free_ring_spectrum() {
        let g = Grid::new_1d(10.0, 32, Boundary::Periodic).unwrap();
        let spec = HamiltonianSpec::new(g.clone(), Interaction::None, g.zeros_scalar()).unwrap();
        let states = eigenstates(&spec, 1, Symmetry::None, 5, &EigenOptions::default()).unwrap();
        // E_k = (2πk/L)²/2 for k ∈ ℤ: 0, then the ±1 pair, then ±2.
        let e1 = 0.5 * (2.0 * PI / 10.0f64).powi(2);
        let want = [0.0, e1, e1, 4.0 * e1, 4.0 * e1];
        for ((e, psi), w) in states.iter().zip(want.iter()) {
            assert!((e - w).abs() < 1e-9, "energy {e} vs {w}");
            assert!((psi.norm() - 1.0).abs() < 1e-10);
        }
        // Orthonormality of the returned set.
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                let ov = states[i].1.inner(&states[j].1).norm();
                assert!(ov < 1e-9, "overlap {i},{j}: {ov}");
            }
        }
    }

    #[test]
    fn cosine_well_matches_dense_oracle() {
        use nalgebra::DMatrix;
        let g = Grid::new_1d(10.0, 32, Boundary::Periodic).unwrap();
        let v0 = g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos());
        let spec = HamiltonianSpec::new(g.clone(), Interaction::None, v0).unwrap();
        let h = spec.assemble(1).unwrap();
        // Dense H from unit vectors (real symmetric).
        let dim = 32;
        let mut dense = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..dim {
            let mut e = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&[dim]));
            e[j] = Complex64::new(1.0, 0.0);
            let he = h.apply_tensor(&e).unwrap();
            for i in 0..dim {
                dense[(i, j)] = he[i].re;
            }
        }
        let mut reference: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let states = eigenstates(&spec, 1, Symmetry::None, 4, &EigenOptions::default()).unwrap();
        for (i, (e, psi)) in states.iter().enumerate() {
            assert!((e - reference[i]).abs() < 1e-8, "E{i}: {e} vs {}", reference[i]);
            let hpsi = h.apply(psi).unwrap();
            let mut r = hpsi.values().clone();
            r.zip_mut_with(psi.values(), |rv, pv| *rv -= e * pv);
            let res = (r.iter().map(|v| v.norm_sqr()).sum::<f64>() * psi.node_weight()).sqrt();
            assert!(res < 1e-9, "residual {res}");
        }
    }

    #[test]
    fn noninteracting_pair_energies_are_sums() {
        let g = Grid::new_1d(10.0, 16, Boundary::Periodic).unwrap();
        let v0 = g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos());
        let spec = HamiltonianSpec::new(g.clone(), Interaction::None, v0).unwrap();
        let singles = eigenstates(&spec, 1, Symmetry::None, 3, &EigenOptions::default()).unwrap();
        let pair = eigenstates(&spec, 2, Symmetry::Symmetric, 1, &EigenOptions::default()).unwrap();
        let want = 2.0 * singles[0].0;
        assert!(
            (pair[0].0 - want).abs() < 1e-8,
            "pair ground energy {} vs {}",
            pair[0].0,
            want
        );
    }

    #[test]
    fn ground_state_is_hamiltonian_eigenvector() {
        let g = Grid::new_1d(10.0, 32, Boundary::Periodic).unwrap();
        let v0 = g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos());
        let spec =
            HamiltonianSpec::new(g.clone(), Interaction::Cosine { strength: 1.0 }, v0).unwrap();
        let states = eigenstates(&spec, 2, Symmetry::Symmetric, 1, &EigenOptions::default()).unwrap();
        let (e0, psi0) = &states[0];
        let h = spec.assemble(2).unwrap();
        let hpsi = h.apply(psi0).unwrap();
        let mut r = hpsi.values().clone();
        r.zip_mut_with(psi0.values(), |rv, pv| *rv -= e0 * pv);
        let res = (r.iter().map(|v| v.norm_sqr()).sum::<f64>() * psi0.node_weight()).sqrt();
        assert!(res < 1e-9, "interacting ground-state residual {res}");
        assert!(psi0.symmetry_deviation() < 1e-9);
    }
}

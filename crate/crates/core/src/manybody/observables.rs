//! One-body observables of many-body states: density, current, dipole and
//! the internal local-force divergence entering the force-balance equation
//! `-∇·(n∇v) = q - ∂ₜ²n`.

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::grid::{scalar_spectral_derivative, Grid, Parity};
use crate::manybody::hamiltonian::HamiltonianSpec;
use crate::manybody::wavefunction::WaveFunction;
use crate::spectral;
use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;

/// One-electron density `n(r) = ⟨Σᵢ δ(r-rᵢ)⟩`; integrates to the particle
/// number and is non-negative.
pub fn density(psi: &WaveFunction) -> ScalarField {
    let grid = psi.grid();
    let d = grid.dims();
    let abs2 = psi.values().mapv(|v| v.norm_sqr());
    let w = grid.node_weight().powi(psi.particles() as i32 - 1);
    let mut acc: ArrayD<f64> = ArrayD::zeros(IxDyn(&grid.shape()));
    for p in 0..psi.particles() {
        acc += &marginal_block_real(&abs2, d, psi.particles(), p);
    }
    acc.mapv_inplace(|v| v * w);
    ScalarField::new(grid.clone(), acc).expect("density on state's grid")
}

/// Current density `j(r)`; zero for real-valued states.
pub fn current(psi: &WaveFunction) -> VectorField {
    let grid = psi.grid();
    let d = grid.dims();
    let particles = psi.particles();
    let w = grid.node_weight().powi(particles as i32 - 1);
    let mut comps: Vec<ArrayD<f64>> = (0..d).map(|_| ArrayD::zeros(IxDyn(&grid.shape()))).collect();
    for p in 0..particles {
        for a in 0..d {
            let mut dpsi = psi.values().clone();
            let spec = grid.axis_spec(a);
            spectral::derivative_axis(&mut dpsi, p * d + a, &spec, 1);
            // Im(ψ* ∂ψ)
            let mut imfield = dpsi;
            ndarray::Zip::from(&mut imfield)
                .and(psi.values())
                .for_each(|dv, &v| *dv = v.conj() * *dv);
            let im = imfield.mapv(|z| z.im);
            comps[a] += &marginal_block_real(&im, d, particles, p);
        }
    }
    let fields = comps
        .into_iter()
        .map(|mut c| {
            c.mapv_inplace(|v| v * w);
            ScalarField::new(grid.clone(), c).expect("current on state's grid")
        })
        .collect();
    VectorField::new(fields)
}

/// Dipole moment `μ = -⟨Σᵢ rᵢ⟩ = -∫ r n(r) dr`, one component per axis, in
/// box coordinates (a density symmetric about the box center therefore gives
/// `-N·L/2` per axis).
pub fn dipole_moment(psi: &WaveFunction) -> Vec<f64> {
    let n = density(psi);
    dipole_of_density(&n)
}

pub fn dipole_of_density(n: &ScalarField) -> Vec<f64> {
    let grid = n.grid();
    let coords: Vec<Vec<f64>> = (0..grid.dims()).map(|a| grid.coords(a)).collect();
    let w = grid.node_weight();
    let mut mu = vec![0.0; grid.dims()];
    for (idx, &v) in n.values().indexed_iter() {
        for a in 0..grid.dims() {
            mu[a] -= coords[a][idx[a]] * v * w;
        }
    }
    mu
}

/// Total momentum expectation `⟨p̂ₐ⟩ = ∫ jₐ dr` per axis.
pub fn momentum_expectation(psi: &WaveFunction) -> Vec<f64> {
    let j = current(psi);
    let grid = psi.grid();
    j.components()
        .iter()
        .map(|c| c.values().sum() * grid.node_weight())
        .collect()
}

/// Divergence of the internal local-force field,
/// `q(r) = -∇·⟨Q̂(r)⟩` with `Q̂ = -i[ĵ, T̂+Ŵ]`, so that
/// `∂ₜ²n = ∇·(n∇v) + q` along any propagation. For a stationary state
/// `q = -∇·(n∇v)` exactly.
pub fn internal_force_divergence(psi: &WaveFunction, h: &HamiltonianSpec) -> Result<ScalarField> {
    let grid = psi.grid();
    let d = grid.dims();
    let particles = psi.particles();
    let w_marg = grid.node_weight().powi(particles as i32 - 1);

    // Kinetic part: q_T = Σ_ab ∂a∂b M_ab - 1/4 Δ²n with
    // M_ab = Σ_p marginal_p[Re(∂aΨ* ∂bΨ)].
    let mut m_ab: Vec<Vec<ArrayD<f64>>> = (0..d)
        .map(|_| (0..d).map(|_| ArrayD::zeros(IxDyn(&grid.shape()))).collect())
        .collect();
    for p in 0..particles {
        let mut dpsi: Vec<ArrayD<Complex64>> = Vec::with_capacity(d);
        for a in 0..d {
            let mut t = psi.values().clone();
            spectral::derivative_axis(&mut t, p * d + a, &grid.axis_spec(a), 1);
            dpsi.push(t);
        }
        for a in 0..d {
            for b in a..d {
                let mut prod = ArrayD::<f64>::zeros(psi.values().raw_dim());
                ndarray::Zip::from(&mut prod)
                    .and(&dpsi[a])
                    .and(&dpsi[b])
                    .for_each(|o, &da, &db| *o = (da.conj() * db).re);
                let marg = marginal_block_real(&prod, d, particles, p);
                m_ab[a][b] += &marg;
                if b != a {
                    m_ab[b][a] += &marg;
                }
            }
        }
    }
    let mut q = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
    for a in 0..d {
        for b in 0..d {
            let mut t = m_ab[a][b].mapv(|v| Complex64::new(v * w_marg, 0.0));
            // M_ab is built from even factors; mixed derivatives flip parity
            // along the way. Periodic grids ignore the parity tag.
            scalar_spectral_derivative(grid, &mut t, a, 1, Parity::Even);
            scalar_spectral_derivative(grid, &mut t, b, 1, Parity::Odd);
            q += &t.mapv(|z| z.re);
        }
    }
    // -1/4 Δ²n
    let n = density(psi);
    let mut lap = n.to_complex_values();
    let mut lap_acc = ArrayD::<Complex64>::zeros(lap.raw_dim());
    for a in 0..d {
        let mut t = lap.clone();
        scalar_spectral_derivative(grid, &mut t, a, 2, Parity::Even);
        lap_acc += &t;
    }
    lap = lap_acc;
    let mut lap2 = ArrayD::<Complex64>::zeros(lap.raw_dim());
    for a in 0..d {
        let mut t = lap.clone();
        scalar_spectral_derivative(grid, &mut t, a, 2, Parity::Even);
        lap2 += &t;
    }
    q.zip_mut_with(&lap2, |o, z| *o -= 0.25 * z.re);

    // Interaction part: q_W = Σ_a ∂a ∫ ρ₂(r,r') ∂a w(r-r') dr'.
    if let Some(wgrad) = h.interaction.displacement_gradient(grid)? {
        let abs2 = psi.values().mapv(|v| v.norm_sqr());
        let w_pair = grid.node_weight().powi(particles as i32 - 2);
        let points = grid.points().to_vec();
        let shape = grid.shape();
        let mut g: Vec<ArrayD<f64>> = (0..d).map(|_| ArrayD::zeros(IxDyn(&shape))).collect();
        for p in 0..particles {
            for qq in 0..particles {
                if p == qq {
                    continue;
                }
                let rho = pair_marginal_real(&abs2, d, particles, p, qq);
                // g_a(r) += ∫ ρ(r,r') ∂a w(r-r') dr'
                for (idx, &rv) in rho.indexed_iter() {
                    let r: Vec<usize> = (0..d).map(|a| idx[a]).collect();
                    let rp: Vec<usize> = (0..d).map(|a| idx[d + a]).collect();
                    let delta: Vec<usize> = (0..d)
                        .map(|a| (r[a] + points[a] - rp[a]) % points[a])
                        .collect();
                    let rho_v = rv * w_pair;
                    for a in 0..d {
                        g[a][IxDyn(&r)] += rho_v * wgrad[a][IxDyn(&delta)] * grid.node_weight();
                    }
                }
            }
        }
        for a in 0..d {
            let mut t = g[a].mapv(|v| Complex64::new(v, 0.0));
            scalar_spectral_derivative(grid, &mut t, a, 1, Parity::Odd);
            q += &t.mapv(|z| z.re);
        }
    }

    ScalarField::new(grid.clone(), q)
}

/// Sum a real tensor over every axis outside the `block`-th particle's axes.
fn marginal_block_real(
    values: &ArrayD<f64>,
    dims: usize,
    particles: usize,
    block: usize,
) -> ArrayD<f64> {
    let keep: Vec<usize> = (block * dims..(block + 1) * dims).collect();
    let mut out = values.clone();
    for ax in (0..particles * dims).rev() {
        if keep.contains(&ax) {
            continue;
        }
        out = out.sum_axis(Axis(ax));
    }
    out
}

/// Marginal over all but two particle blocks, ordered `(r, r')` for particles
/// `(p, q)`.
fn pair_marginal_real(
    values: &ArrayD<f64>,
    dims: usize,
    particles: usize,
    p: usize,
    q: usize,
) -> ArrayD<f64> {
    debug_assert_ne!(p, q);
    let keep: Vec<usize> = (p * dims..(p + 1) * dims)
        .chain(q * dims..(q + 1) * dims)
        .collect();
    let mut out = values.clone();
    for ax in (0..particles * dims).rev() {
        if keep.contains(&ax) {
            continue;
        }
        out = out.sum_axis(Axis(ax));
    }
    // Remaining axes are in original order; bring p's block first if needed.
    if p > q {
        let axes: Vec<usize> = (dims..2 * dims).chain(0..dims).collect();
        out = out.view().permuted_axes(IxDyn(&axes)).to_owned();
    }
    out
}

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::grid::{Boundary, Grid};
use crate::manybody::wavefunction::WaveFunction;
use crate::spectral::{self, AxisSpec};
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Two-particle interaction, evaluated on the periodic displacement grid.
#[derive(Clone, Debug)]
pub enum Interaction {
    None,
    /// `λ cos(2πΔx/L)` per axis (summed over axes in 2D).
    Cosine { strength: f64 },
    /// `w` sampled over grid displacements, indexed by the wrapped node
    /// offset per axis. Must be exchange-symmetric: `w[Δ] = w[-Δ]`.
    Custom { values: ArrayD<f64> },
}

impl Interaction {
    pub fn is_none(&self) -> bool {
        matches!(self, Interaction::None)
            || matches!(self, Interaction::Cosine { strength } if *strength == 0.0)
    }

    /// Pairwise values over the displacement grid, or `None` for no
    /// interaction.
    pub fn displacement_table(&self, grid: &Grid) -> Result<Option<ArrayD<f64>>> {
        if self.is_none() {
            return Ok(None);
        }
        if grid.boundary() != Boundary::Periodic {
            return Err(CoreError::InvalidArgument(
                "interactions are defined on periodic grids only".into(),
            ));
        }
        let table = match self {
            Interaction::None => unreachable!(),
            Interaction::Cosine { strength } => {
                let shape = grid.shape();
                let lengths: Vec<f64> = grid.lengths().to_vec();
                let spacings: Vec<f64> = (0..grid.dims()).map(|a| grid.spacing(a)).collect();
                let lambda = *strength;
                ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
                    (0..lengths.len())
                        .map(|a| {
                            let dx = idx[a] as f64 * spacings[a];
                            lambda * (2.0 * PI * dx / lengths[a]).cos()
                        })
                        .sum()
                })
            }
            Interaction::Custom { values } => {
                if values.shape() != grid.shape().as_slice() {
                    return Err(CoreError::ShapeMismatch(
                        "custom interaction table does not match the grid".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::InvalidArgument(
                        "custom interaction has non-finite entries".into(),
                    ));
                }
                values.clone()
            }
        };
        // Exchange symmetry: w[Δ] == w[-Δ] with periodic wrap.
        let shape = table.shape().to_vec();
        for (idx, &v) in table.indexed_iter() {
            let mirrored: Vec<usize> = (0..shape.len())
                .map(|a| (shape[a] - idx[a]) % shape[a])
                .collect();
            let m = table[IxDyn(&mirrored)];
            if (v - m).abs() > 1e-10 * (1.0 + v.abs()) {
                return Err(CoreError::InvalidArgument(
                    "interaction is not symmetric under particle exchange".into(),
                ));
            }
        }
        Ok(Some(table))
    }

    /// `∂_a w` over the displacement grid, per axis (spectral derivative).
    pub(crate) fn displacement_gradient(&self, grid: &Grid) -> Result<Option<Vec<ArrayD<f64>>>> {
        let Some(table) = self.displacement_table(grid)? else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(grid.dims());
        for a in 0..grid.dims() {
            let mut c = table.mapv(|v| Complex64::new(v, 0.0));
            let spec = AxisSpec {
                len: grid.points()[a],
                length: grid.lengths()[a],
                boundary: Boundary::Periodic,
            };
            spectral::derivative_axis(&mut c, a, &spec, 1);
            out.push(c.mapv(|v| v.re));
        }
        Ok(Some(out))
    }
}

/// External potential + interaction on a grid; a time slice of Eq.-of-motion
/// input for `N` particles is assembled from this.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub grid: Grid,
    pub interaction: Interaction,
    pub potential: ScalarField,
}

impl HamiltonianSpec {
    pub fn new(grid: Grid, interaction: Interaction, potential: ScalarField) -> Result<Self> {
        if potential.grid() != &grid {
            return Err(CoreError::ShapeMismatch(
                "potential lives on a different grid".into(),
            ));
        }
        Ok(HamiltonianSpec {
            grid,
            interaction,
            potential,
        })
    }

    pub fn assemble(&self, particles: usize) -> Result<AssembledHamiltonian> {
        AssembledHamiltonian::new(self, particles)
    }
}

/// A Hamiltonian bound to a particle count, with the multiplicative part
/// (external potential of every particle plus all pairwise interactions)
/// pre-evaluated on the configuration tensor.
#[derive(Clone)]
pub struct AssembledHamiltonian {
    grid: Grid,
    particles: usize,
    axis_specs: Vec<AxisSpec>,
    total_potential: ArrayD<f64>,
    pair_part: Option<Arc<ArrayD<f64>>>,
}

impl AssembledHamiltonian {
    pub fn new(spec: &HamiltonianSpec, particles: usize) -> Result<Self> {
        let pair_part = build_pair_tensor(&spec.grid, &spec.interaction, particles)?.map(Arc::new);
        let mut h = AssembledHamiltonian {
            axis_specs: spec.grid.tensor_axis_specs(particles),
            grid: spec.grid.clone(),
            particles,
            total_potential: ArrayD::zeros(IxDyn(&tensor_shape(&spec.grid, particles))),
            pair_part,
        };
        h.set_potential(&spec.potential)?;
        Ok(h)
    }

    /// Rebuild for a new external potential, reusing the interaction tensor.
    pub fn replace_potential(&self, potential: &ScalarField) -> Result<Self> {
        let mut out = self.clone();
        out.set_potential(potential)?;
        Ok(out)
    }

    fn set_potential(&mut self, potential: &ScalarField) -> Result<()> {
        if potential.grid() != &self.grid {
            return Err(CoreError::ShapeMismatch(
                "potential lives on a different grid".into(),
            ));
        }
        let d = self.grid.dims();
        let particles = self.particles;
        let v = potential.values();
        let pair = self.pair_part.clone();
        let mut total = ArrayD::zeros(IxDyn(&tensor_shape(&self.grid, particles)));
        for (idx, slot) in total.indexed_iter_mut() {
            let mut acc = 0.0;
            for p in 0..particles {
                let sub: Vec<usize> = (0..d).map(|a| idx[p * d + a]).collect();
                acc += v[IxDyn(&sub)];
            }
            *slot = acc;
        }
        if let Some(pair) = pair {
            total += pair.as_ref();
        }
        self.total_potential = total;
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn potential_tensor(&self) -> &ArrayD<f64> {
        &self.total_potential
    }

    pub(crate) fn axis_specs(&self) -> &[AxisSpec] {
        &self.axis_specs
    }

    /// `(T̂ + Ŵ + V̂)ψ` on a raw tensor.
    pub fn apply_tensor(&self, values: &ArrayD<Complex64>) -> Result<ArrayD<Complex64>> {
        if values.shape() != self.total_potential.shape() {
            return Err(CoreError::ShapeMismatch(format!(
                "state shape {:?} vs hamiltonian shape {:?}",
                values.shape(),
                self.total_potential.shape()
            )));
        }
        let mut kinetic = values.clone();
        for (ax, spec) in self.axis_specs.iter().enumerate() {
            spectral::forward_axis(&mut kinetic, ax, spec);
        }
        spectral::apply_laplacian_symbol(&mut kinetic, &self.axis_specs);
        for (ax, spec) in self.axis_specs.iter().enumerate() {
            spectral::inverse_axis(&mut kinetic, ax, spec);
        }
        // kinetic = -Δψ/2; the symbol pass produced Δψ.
        let mut out = kinetic;
        out.mapv_inplace(|v| v * -0.5);
        ndarray::Zip::from(&mut out)
            .and(values)
            .and(&self.total_potential)
            .for_each(|o, &psi, &v| *o += psi * v);
        Ok(out)
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.particles() != self.particles || psi.grid() != &self.grid {
            return Err(CoreError::ShapeMismatch(
                "wave function does not match the assembled hamiltonian".into(),
            ));
        }
        Ok(psi.with_values(self.apply_tensor(psi.values())?))
    }

    /// `⟨ψ|H|ψ⟩` (real part; the imaginary part vanishes for Hermitian H).
    pub fn energy_expectation(&self, psi: &WaveFunction) -> Result<f64> {
        let h_psi = self.apply(psi)?;
        Ok(psi.inner(&h_psi).re)
    }
}

pub(crate) fn tensor_shape(grid: &Grid, particles: usize) -> Vec<usize> {
    std::iter::repeat(grid.shape())
        .take(particles)
        .flatten()
        .collect()
}

fn build_pair_tensor(
    grid: &Grid,
    interaction: &Interaction,
    particles: usize,
) -> Result<Option<ArrayD<f64>>> {
    let Some(table) = interaction.displacement_table(grid)? else {
        return Ok(None);
    };
    if particles < 2 {
        return Ok(None);
    }
    let d = grid.dims();
    let points = grid.points().to_vec();
    let shape = tensor_shape(grid, particles);
    let mut out = ArrayD::zeros(IxDyn(&shape));
    for (idx, slot) in out.indexed_iter_mut() {
        let mut acc = 0.0;
        for p in 0..particles {
            for q in (p + 1)..particles {
                let delta: Vec<usize> = (0..d)
                    .map(|a| {
                        let ip = idx[p * d + a];
                        let iq = idx[q * d + a];
                        (ip + points[a] - iq) % points[a]
                    })
                    .collect();
                acc += table[IxDyn(&delta)];
            }
        }
        *slot = acc;
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiffScheme;
    use crate::manybody::wavefunction::Symmetry;

    fn ring(points: usize) -> Grid {
        Grid::new_1d(10.0, points, Boundary::Periodic).unwrap()
    }

    #[test]
    fn plane_wave_is_kinetic_eigenstate() {
        let g = ring(32);
        let l = 10.0;
        let k = 2.0 * 2.0 * PI / l;
        let phi = g.complex_from_fn(|x| Complex64::new(0.0, k * x[0]).exp() / l.sqrt());
        let psi = WaveFunction::product(&[phi], Symmetry::None).unwrap();
        let spec = HamiltonianSpec::new(g.clone(), Interaction::None, g.zeros_scalar()).unwrap();
        let h = spec.assemble(1).unwrap();
        let hpsi = h.apply(&psi).unwrap();
        let want = 0.5 * k * k;
        for (a, b) in hpsi.values().iter().zip(psi.values().iter()) {
            assert!((a - want * b).norm() < 1e-10);
        }
    }

    #[test]
    fn symmetric_state_stays_symmetric() {
        let g = ring(16);
        let l = 10.0;
        let phi0 = g.complex_from_fn(|x| {
            Complex64::new(1.0 + 0.3 * (2.0 * PI * x[0] / l).cos(), 0.0)
        });
        let phi1 = g.complex_from_fn(|x| {
            Complex64::new((2.0 * PI * x[0] / l).sin(), 0.2 * (4.0 * PI * x[0] / l).cos())
        });
        let psi = WaveFunction::from_unsymmetrized(
            g.clone(),
            2,
            Symmetry::Symmetric,
            WaveFunction::product(&[phi0, phi1], Symmetry::None)
                .unwrap()
                .values()
                .clone(),
        )
        .unwrap();
        let v0 = g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos());
        let spec =
            HamiltonianSpec::new(g.clone(), Interaction::Cosine { strength: 1.0 }, v0).unwrap();
        let h = spec.assemble(2).unwrap();
        let hpsi = h.apply(&psi).unwrap();
        assert!(hpsi.symmetry_deviation() < 1e-12);
    }

    #[test]
    fn cosine_interaction_matches_direct_formula() {
        let g = ring(16);
        let l = 10.0;
        let spec = HamiltonianSpec::new(
            g.clone(),
            Interaction::Cosine { strength: 0.7 },
            g.zeros_scalar(),
        )
        .unwrap();
        let h = spec.assemble(2).unwrap();
        let coords = g.coords(0);
        for i in 0..16 {
            for j in 0..16 {
                let want = 0.7 * (2.0 * PI * (coords[i] - coords[j]) / l).cos();
                let got = h.potential_tensor()[IxDyn(&[i, j])];
                assert!((want - got).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interaction_requires_periodic_grid() {
        let g = Grid::new_1d(10.0, 16, Boundary::Zero).unwrap();
        let i = Interaction::Cosine { strength: 1.0 };
        assert!(i.displacement_table(&g).is_err());
    }

    #[test]
    fn asymmetric_custom_interaction_rejected() {
        let g = ring(16);
        let mut vals = ArrayD::zeros(IxDyn(&[16]));
        vals[IxDyn(&[1])] = 1.0; // w(+h) != w(-h)
        let i = Interaction::Custom { values: vals };
        assert!(i.displacement_table(&g).is_err());
    }

    #[test]
    fn kinetic_term_matches_grid_laplacian() {
        let g = ring(24);
        let l = 10.0;
        let phi = g.complex_from_fn(|x| {
            Complex64::new(
                (2.0 * PI * x[0] / l).cos(),
                0.4 * (4.0 * PI * x[0] / l).sin(),
            )
        });
        let spec = HamiltonianSpec::new(g.clone(), Interaction::None, g.zeros_scalar()).unwrap();
        let h = spec.assemble(1).unwrap();
        let psi = WaveFunction::new(g.clone(), 1, Symmetry::None, phi.values().clone()).unwrap();
        let hpsi = h.apply(&psi).unwrap();
        let lap = g.laplacian(&phi, DiffScheme::Spectral).unwrap();
        for (a, b) in hpsi.values().iter().zip(lap.values().iter()) {
            assert!((a + 0.5 * b).norm() < 1e-11);
        }
    }
}

use crate::error::{CoreError, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

/// Spatial exchange symmetry of the wave function.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    None,
}

/// An N-particle wave function as a complex tensor over the N-fold product of
/// the one-particle grid, axes in particle-major order.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: Grid,
    particles: usize,
    symmetry: Symmetry,
    values: ArrayD<Complex64>,
}

pub(crate) const SYMMETRY_TOL: f64 = 1e-9;

impl WaveFunction {
    pub fn new(
        grid: Grid,
        particles: usize,
        symmetry: Symmetry,
        values: ArrayD<Complex64>,
    ) -> Result<Self> {
        let max_particles = match grid.dims() {
            1 => 3,
            _ => 2,
        };
        if particles == 0 || particles > max_particles {
            return Err(CoreError::InvalidArgument(format!(
                "{particles} particles on a {}D configuration tensor; supported range is 1..={max_particles}",
                grid.dims()
            )));
        }
        let expected: Vec<usize> = std::iter::repeat(grid.shape())
            .take(particles)
            .flatten()
            .collect();
        if values.shape() != expected.as_slice() {
            return Err(CoreError::ShapeMismatch(format!(
                "tensor shape {:?}, expected {:?}",
                values.shape(),
                expected
            )));
        }
        let wf = WaveFunction {
            grid,
            particles,
            symmetry,
            values,
        };
        let dev = wf.symmetry_deviation();
        if dev > SYMMETRY_TOL {
            return Err(CoreError::InvalidArgument(format!(
                "declared {symmetry:?} exchange symmetry violated by {dev:.3e}"
            )));
        }
        Ok(wf)
    }

    /// Build and normalize, applying the declared symmetrization first.
    pub fn from_unsymmetrized(
        grid: Grid,
        particles: usize,
        symmetry: Symmetry,
        values: ArrayD<Complex64>,
    ) -> Result<Self> {
        let sym = symmetrize(&values, grid.dims(), particles, symmetry)?;
        let mut wf = WaveFunction::new(grid, particles, symmetry, sym)?;
        let n = wf.norm();
        if n < 1e-14 {
            return Err(CoreError::InvalidArgument(
                "state vanishes after symmetrization".into(),
            ));
        }
        wf.scale(1.0 / n);
        Ok(wf)
    }

    /// Product state `φ₁(r₁)·φ₂(r₂)·…`, optionally (anti)symmetrized.
    pub fn product(orbitals: &[ComplexField], symmetry: Symmetry) -> Result<Self> {
        if orbitals.is_empty() {
            return Err(CoreError::InvalidArgument("no orbitals given".into()));
        }
        let grid = orbitals[0].grid().clone();
        for o in orbitals {
            if o.grid() != &grid {
                return Err(CoreError::ShapeMismatch("orbitals on different grids".into()));
            }
        }
        let particles = orbitals.len();
        let d = grid.dims();
        let shape: Vec<usize> = std::iter::repeat(grid.shape())
            .take(particles)
            .flatten()
            .collect();
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            let mut v = Complex64::new(1.0, 0.0);
            for (p, orb) in orbitals.iter().enumerate() {
                let sub: Vec<usize> = (0..d).map(|a| idx[p * d + a]).collect();
                v *= orb.values()[IxDyn(&sub)];
            }
            v
        });
        WaveFunction::from_unsymmetrized(grid, particles, symmetry, values)
    }

    /// Normalized Slater determinant of orthonormal orbitals.
    pub fn slater_determinant(orbitals: &[ComplexField]) -> Result<Self> {
        Self::product(orbitals, Symmetry::Antisymmetric)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.values
    }

    /// Quadrature weight of one configuration-space node.
    pub fn node_weight(&self) -> f64 {
        self.grid.node_weight().powi(self.particles as i32)
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.node_weight()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.mapv_inplace(|v| v * s);
    }

    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        out.scale(1.0 / self.norm());
        out
    }

    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a.conj() * b;
        }
        acc * self.node_weight()
    }

    /// Replace the tensor with new values of the same shape (used by the
    /// propagators, which preserve symmetry and norm by construction).
    pub(crate) fn with_values(&self, values: ArrayD<Complex64>) -> Self {
        debug_assert_eq!(values.shape(), self.values.shape());
        WaveFunction {
            grid: self.grid.clone(),
            particles: self.particles,
            symmetry: self.symmetry,
            values,
        }
    }

    /// Largest relative violation of the declared exchange symmetry over
    /// adjacent particle transpositions.
    pub fn symmetry_deviation(&self) -> f64 {
        let sign = match self.symmetry {
            Symmetry::Symmetric => 1.0,
            Symmetry::Antisymmetric => -1.0,
            Symmetry::None => return 0.0,
        };
        if self.particles < 2 {
            return 0.0;
        }
        let d = self.grid.dims();
        let scale: f64 = self
            .values
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for p in 0..self.particles - 1 {
            let mut axes: Vec<usize> = (0..self.particles * d).collect();
            for a in 0..d {
                axes.swap(p * d + a, (p + 1) * d + a);
            }
            let transposed = self.values.view().permuted_axes(IxDyn(&axes));
            let mut diff2 = 0.0;
            for (a, b) in self.values.iter().zip(transposed.iter()) {
                diff2 += (a - sign * b).norm_sqr();
            }
            worst = worst.max(diff2.sqrt() / scale);
        }
        worst
    }
}

/// Project a tensor onto the requested exchange-symmetry sector.
pub(crate) fn symmetrize(
    values: &ArrayD<Complex64>,
    dims: usize,
    particles: usize,
    symmetry: Symmetry,
) -> Result<ArrayD<Complex64>> {
    if symmetry == Symmetry::None || particles < 2 {
        return Ok(values.clone());
    }
    let perms = permutations(particles);
    let mut acc: ArrayD<Complex64> = ArrayD::zeros(values.raw_dim());
    for perm in &perms {
        let sign = match symmetry {
            Symmetry::Antisymmetric if perm_parity(perm) => -1.0,
            _ => 1.0,
        };
        // Tensor axes of destination particle slot p come from source slot
        // perm[p].
        let mut axes = Vec::with_capacity(particles * dims);
        for &src in perm {
            for a in 0..dims {
                axes.push(src * dims + a);
            }
        }
        let view = values.view().permuted_axes(IxDyn(&axes));
        acc.zip_mut_with(&view, |dst, src| *dst += sign * src);
    }
    let scale = 1.0 / perms.len() as f64;
    acc.mapv_inplace(|v| v * scale);
    Ok(acc)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// True for odd permutations.
fn perm_parity(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

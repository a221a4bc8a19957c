//! Uniform spatial grids with periodic or zero boundary conditions, and the
//! differential operators every other module consumes.
//!
//! Zero-boundary grids store interior nodes only; the boundary amplitude is an
//! implicit zero. Wave functions continue oddly across a zero boundary while
//! potentials and densities continue evenly — violating this convention is
//! exactly what the boundary-aware stencils below protect against.

use crate::error::{CoreError, Result};
use crate::field::{ComplexField, ScalarField, VectorField};
use crate::spectral::{self, AxisSpec};
use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;

/// Boundary condition of a grid, fixing the eigenbasis of the kinetic term:
/// plane waves for [`Boundary::Periodic`], sine modes for [`Boundary::Zero`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Boundary {
    Periodic,
    Zero,
}

/// Differentiation backend.
///
/// `Spectral` is exact on the grid's eigenbasis and is the default for the
/// propagation kinetic term; `Fd7` is a high-order centered stencil used for
/// force-balance style diagnostics.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiffScheme {
    Fd7,
    Spectral,
}

/// Reflection convention at a zero boundary.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Parity {
    /// Wave-function convention: odd continuation, zero at the boundary.
    Odd,
    /// Potential/density convention: even continuation.
    Even,
}

/// A uniform mesh over a 1D or 2D box.
#[derive(Clone, PartialEq, Debug)]
pub struct Grid {
    dims: usize,
    lengths: [f64; 2],
    points: [usize; 2],
    boundary: Boundary,
}

pub const MIN_POINTS: usize = 8;

impl Grid {
    pub fn new_1d(length: f64, points: usize, boundary: Boundary) -> Result<Self> {
        Self::new(&[length], &[points], boundary)
    }

    pub fn new_2d(lengths: [f64; 2], points: [usize; 2], boundary: Boundary) -> Result<Self> {
        Self::new(&lengths, &points, boundary)
    }

    pub fn new(lengths: &[f64], points: &[usize], boundary: Boundary) -> Result<Self> {
        let dims = lengths.len();
        if dims == 0 || dims > 2 || points.len() != dims {
            return Err(CoreError::InvalidGrid(format!(
                "expected 1 or 2 axes, got {} lengths and {} point counts",
                lengths.len(),
                points.len()
            )));
        }
        for (&l, &p) in lengths.iter().zip(points) {
            if !(l > 0.0) || !l.is_finite() {
                return Err(CoreError::InvalidGrid(format!("axis length {l} must be positive")));
            }
            if p < MIN_POINTS {
                return Err(CoreError::InvalidGrid(format!(
                    "{p} points per axis; need at least {MIN_POINTS}"
                )));
            }
        }
        let mut ls = [0.0; 2];
        let mut ps = [1; 2];
        ls[..dims].copy_from_slice(lengths);
        ps[..dims].copy_from_slice(points);
        Ok(Grid {
            dims,
            lengths: ls,
            points: ps,
            boundary,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dims]
    }

    pub fn points(&self) -> &[usize] {
        &self.points[..self.dims]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.points().to_vec()
    }

    /// Mesh spacing along `axis`. Zero-boundary grids exclude the boundary
    /// nodes, so `points + 1` intervals span the box.
    pub fn spacing(&self, axis: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.lengths[axis] / self.points[axis] as f64,
            Boundary::Zero => self.lengths[axis] / (self.points[axis] as f64 + 1.0),
        }
    }

    /// Node coordinates along `axis`.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        let offset = match self.boundary {
            Boundary::Periodic => 0.0,
            Boundary::Zero => h,
        };
        (0..self.points[axis]).map(|j| offset + j as f64 * h).collect()
    }

    /// Quadrature weight of a single node (product of spacings).
    pub fn node_weight(&self) -> f64 {
        (0..self.dims).map(|a| self.spacing(a)).product()
    }

    pub fn node_count(&self) -> usize {
        self.points().iter().product()
    }

    pub(crate) fn axis_spec(&self, axis: usize) -> AxisSpec {
        AxisSpec {
            len: self.points[axis],
            length: self.lengths[axis],
            boundary: self.boundary,
        }
    }

    /// Axis specs for an `n_particles`-fold tensor product of this grid, in
    /// particle-major order.
    pub(crate) fn tensor_axis_specs(&self, n_particles: usize) -> Vec<AxisSpec> {
        let mut specs = Vec::with_capacity(n_particles * self.dims);
        for _ in 0..n_particles {
            for a in 0..self.dims {
                specs.push(self.axis_spec(a));
            }
        }
        specs
    }

    pub fn zeros_scalar(&self) -> ScalarField {
        ScalarField::new(self.clone(), ArrayD::zeros(IxDyn(&self.shape())))
            .expect("zero field matches its own grid")
    }

    pub fn scalar_from_fn(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let coords: Vec<Vec<f64>> = (0..self.dims).map(|a| self.coords(a)).collect();
        let values = ArrayD::from_shape_fn(IxDyn(&self.shape()), |idx| {
            let x: Vec<f64> = (0..self.dims).map(|a| coords[a][idx[a]]).collect();
            f(&x)
        });
        ScalarField::new(self.clone(), values).expect("shape from own grid")
    }

    pub fn complex_from_fn(&self, f: impl Fn(&[f64]) -> Complex64) -> ComplexField {
        let coords: Vec<Vec<f64>> = (0..self.dims).map(|a| self.coords(a)).collect();
        let values = ArrayD::from_shape_fn(IxDyn(&self.shape()), |idx| {
            let x: Vec<f64> = (0..self.dims).map(|a| coords[a][idx[a]]).collect();
            f(&x)
        });
        ComplexField::new(self.clone(), values).expect("shape from own grid")
    }

    /// Second derivative summed over axes (the Laplacian) of a complex field,
    /// under the wave-function (odd) continuation at zero boundaries.
    pub fn laplacian(&self, f: &ComplexField, scheme: DiffScheme) -> Result<ComplexField> {
        self.check_field_grid(f.grid())?;
        let mut values = f.values().clone();
        match scheme {
            DiffScheme::Spectral => {
                let specs: Vec<AxisSpec> = (0..self.dims).map(|a| self.axis_spec(a)).collect();
                for (ax, spec) in specs.iter().enumerate() {
                    spectral::forward_axis(&mut values, ax, spec);
                }
                spectral::apply_laplacian_symbol(&mut values, &specs);
                for (ax, spec) in specs.iter().enumerate() {
                    spectral::inverse_axis(&mut values, ax, spec);
                }
            }
            DiffScheme::Fd7 => {
                let mut acc = ArrayD::zeros(values.raw_dim());
                for ax in 0..self.dims {
                    let mut d = values.clone();
                    fd_derivative_axis(&mut d, ax, self.spacing(ax), self.boundary, Parity::Odd, 2);
                    acc += &d;
                }
                values = acc;
            }
        }
        ComplexField::new(self.clone(), values)
    }

    /// Gradient of a real field (potential/density convention: even
    /// continuation at zero boundaries). Returns one component per axis.
    pub fn gradient(&self, f: &ScalarField, scheme: DiffScheme) -> Result<VectorField> {
        self.check_field_grid(f.grid())?;
        let mut comps = Vec::with_capacity(self.dims);
        for ax in 0..self.dims {
            let mut values = f.to_complex_values();
            match (scheme, self.boundary) {
                (DiffScheme::Spectral, Boundary::Periodic) => {
                    spectral::derivative_axis(&mut values, ax, &self.axis_spec(ax), 1);
                }
                (DiffScheme::Spectral, Boundary::Zero) => {
                    even_spectral_derivative_axis(&mut values, ax, &self.axis_spec(ax), 1);
                }
                (DiffScheme::Fd7, _) => {
                    fd_derivative_axis(
                        &mut values,
                        ax,
                        self.spacing(ax),
                        self.boundary,
                        Parity::Even,
                        1,
                    );
                }
            }
            let re = values.mapv(|v| v.re);
            comps.push(ScalarField::new(self.clone(), re)?);
        }
        Ok(VectorField::new(comps))
    }

    /// Divergence of a vector field (even continuation at zero boundaries for
    /// each component's off-axis behaviour; components themselves are treated
    /// with the parity their construction implies, which for currents is even
    /// along their own axis after the odd wave function is differentiated).
    pub fn divergence(&self, f: &VectorField, scheme: DiffScheme) -> Result<ScalarField> {
        if f.components().len() != self.dims {
            return Err(CoreError::ShapeMismatch(format!(
                "vector field has {} components on a {}D grid",
                f.components().len(),
                self.dims
            )));
        }
        let mut acc = ArrayD::zeros(IxDyn(&self.shape()));
        for (ax, comp) in f.components().iter().enumerate() {
            self.check_field_grid(comp.grid())?;
            let mut values = comp.to_complex_values();
            match (scheme, self.boundary) {
                (DiffScheme::Spectral, Boundary::Periodic) => {
                    spectral::derivative_axis(&mut values, ax, &self.axis_spec(ax), 1);
                }
                (DiffScheme::Spectral, Boundary::Zero) => {
                    // Current components vanish at zero boundaries and continue
                    // oddly along their own axis.
                    spectral::derivative_axis(&mut values, ax, &self.axis_spec(ax), 1);
                }
                (DiffScheme::Fd7, _) => {
                    fd_derivative_axis(
                        &mut values,
                        ax,
                        self.spacing(ax),
                        self.boundary,
                        Parity::Odd,
                        1,
                    );
                }
            }
            acc += &values.mapv(|v| v.re);
        }
        ScalarField::new(self.clone(), acc)
    }

    /// Quadrature over the box. Periodic grids use the rectangle rule (exact
    /// for band-limited integrands); zero-boundary grids use the trapezoid
    /// rule, with the boundary values recovered by even-symmetric
    /// interpolation (densities interpolate to ~0 there, potentials to their
    /// actual wall value, so both integrate correctly).
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        match self.boundary {
            Boundary::Periodic => f.values().sum() * self.node_weight(),
            Boundary::Zero => {
                let mut reduced = f.values().mapv(Complex64::from);
                for ax in (0..self.dims).rev() {
                    reduced = axis_integral_trapezoid(&reduced, ax, self.spacing(ax));
                }
                reduced.iter().next().map(|v| v.re).unwrap_or(0.0)
            }
        }
    }

    pub fn integrate_complex(&self, f: &ComplexField) -> Complex64 {
        match self.boundary {
            Boundary::Periodic => f.values().sum() * self.node_weight(),
            Boundary::Zero => {
                let mut reduced = f.values().clone();
                for ax in (0..self.dims).rev() {
                    reduced = axis_integral_trapezoid(&reduced, ax, self.spacing(ax));
                }
                reduced.iter().next().copied().unwrap_or(Complex64::new(0.0, 0.0))
            }
        }
    }

    /// Grid inner product `⟨f, g⟩` with quadrature weight.
    pub fn inner(&self, f: &ComplexField, g: &ComplexField) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in f.values().iter().zip(g.values().iter()) {
            acc += a.conj() * b;
        }
        acc * self.node_weight()
    }

    /// How far the implicit continuation of `f` across a zero boundary is from
    /// the requested reflection symmetry.
    ///
    /// Ghost values just outside each boundary are produced two ways: by
    /// high-order one-sided extrapolation of the interior samples (the smooth
    /// continuation) and by the odd/even reflection rule. The report is the
    /// largest mismatch, normalized by `max |f|`; a clean sine mode checks out
    /// as odd, a cosine series as even, while e.g. `x(L-x)` carries an even
    /// component that shows up immediately.
    pub fn parity_check(&self, f: &ScalarField, parity: Parity) -> Result<ParityReport> {
        self.check_field_grid(f.grid())?;
        if self.boundary != Boundary::Zero {
            return Err(CoreError::InvalidArgument(
                "parity_check applies to zero-boundary grids".into(),
            ));
        }
        let mut worst: f64 = 0.0;
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        for ax in 0..self.dims {
            let len = self.points[ax];
            for lane in f.values().lanes(Axis(ax)) {
                let samples: Vec<f64> = lane.iter().copied().collect();
                worst = worst.max(boundary_reflection_mismatch(&samples, parity));
                let mut rev: Vec<f64> = samples.clone();
                rev.reverse();
                worst = worst.max(boundary_reflection_mismatch(&rev, parity));
                debug_assert_eq!(samples.len(), len);
            }
        }
        Ok(ParityReport {
            parity,
            deviation: worst / scale,
        })
    }

    pub fn parity_check_complex(&self, f: &ComplexField, parity: Parity) -> Result<ParityReport> {
        let re = ScalarField::new(self.clone(), f.values().mapv(|v| v.re))?;
        let im = ScalarField::new(self.clone(), f.values().mapv(|v| v.im))?;
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        let r1 = self.parity_check(&re, parity)?;
        let r2 = self.parity_check(&im, parity)?;
        let dev = (r1.deviation * re.max_abs().max(f64::MIN_POSITIVE))
            .max(r2.deviation * im.max_abs().max(f64::MIN_POSITIVE));
        Ok(ParityReport {
            parity,
            deviation: dev / scale,
        })
    }

    fn check_field_grid(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(CoreError::ShapeMismatch(
                "field belongs to a different grid".into(),
            ));
        }
        Ok(())
    }
}

/// Result of [`Grid::parity_check`].
#[derive(Clone, Copy, Debug)]
pub struct ParityReport {
    pub parity: Parity,
    /// Relative mismatch between the smooth continuation and the reflection
    /// rule at the boundary; ~0 when the field honors the symmetry.
    pub deviation: f64,
}

/// Mismatch between extrapolated ghost values and the reflection rule at the
/// left boundary of a zero-BC lane.
fn boundary_reflection_mismatch(samples: &[f64], parity: Parity) -> f64 {
    // 8th-order Lagrange extrapolation.
    // For Odd parity the boundary node (value 0) is a known sample; points
    // are at node offsets 0..=7 relative to the boundary, ghost at -m.
    // For Even parity only interior samples (offsets 1..=8) are known.
    // Only the two nearest ghosts are used; further out the extrapolation
    // itself becomes the dominant error.
    let n_ghost = 2;
    let mut worst: f64 = 0.0;
    for m in 1..=n_ghost {
        let target = -(m as f64);
        let extrapolated = match parity {
            Parity::Odd => {
                let mut xs = vec![0.0];
                let mut ys = vec![0.0];
                for j in 0..8.min(samples.len()) {
                    xs.push(j as f64 + 1.0);
                    ys.push(samples[j]);
                }
                lagrange_eval(&xs, &ys, target)
            }
            Parity::Even => {
                let take = 8.min(samples.len());
                let xs: Vec<f64> = (0..take).map(|j| j as f64 + 1.0).collect();
                let ys: Vec<f64> = samples[..take].to_vec();
                lagrange_eval(&xs, &ys, target)
            }
        };
        let reflected = match parity {
            Parity::Odd => -samples[m - 1],
            Parity::Even => samples[m - 1],
        };
        worst = worst.max((extrapolated - reflected).abs());
    }
    worst
}

fn lagrange_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..xs.len() {
        let mut w = 1.0;
        for j in 0..xs.len() {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

// 9-point centered stencils (interior order 8, comfortably past the O(h^7)
// agreement the cross-scheme tests demand).
const FD_D2: [f64; 9] = [
    -1.0 / 560.0,
    8.0 / 315.0,
    -1.0 / 5.0,
    8.0 / 5.0,
    -205.0 / 72.0,
    8.0 / 5.0,
    -1.0 / 5.0,
    8.0 / 315.0,
    -1.0 / 560.0,
];
const FD_D1: [f64; 9] = [
    1.0 / 280.0,
    -4.0 / 105.0,
    1.0 / 5.0,
    -4.0 / 5.0,
    0.0,
    4.0 / 5.0,
    -1.0 / 5.0,
    4.0 / 105.0,
    -1.0 / 280.0,
];

/// Weights interpolating an even function to its reflection point from the
/// first four interior nodes.
pub(crate) const EVEN_BOUNDARY_W: [f64; 4] = [1.6, -0.8, 8.0 / 35.0, -1.0 / 35.0];

/// Trapezoid reduction of one zero-boundary axis, with the two boundary
/// values filled by even-symmetric interpolation.
fn axis_integral_trapezoid(
    values: &ArrayD<Complex64>,
    axis: usize,
    spacing: f64,
) -> ArrayD<Complex64> {
    let shape: Vec<usize> = values
        .shape()
        .iter()
        .enumerate()
        .filter_map(|(a, &s)| if a == axis { None } else { Some(s) })
        .collect();
    let out_shape = if shape.is_empty() { vec![1] } else { shape };
    let mut out = ArrayD::<Complex64>::zeros(IxDyn(&out_shape));
    let mut flat = out.iter_mut();
    for lane in values.lanes(Axis(axis)) {
        let len = lane.len();
        let mut b0 = Complex64::new(0.0, 0.0);
        let mut bl = Complex64::new(0.0, 0.0);
        for (m, &w) in EVEN_BOUNDARY_W.iter().enumerate() {
            b0 += w * lane[m.min(len - 1)];
            bl += w * lane[len - 1 - m.min(len - 1)];
        }
        let sum: Complex64 = lane.iter().sum();
        let slot = flat.next().expect("lane count matches reduced shape");
        *slot = spacing * (0.5 * (b0 + bl) + sum);
    }
    out
}

/// Apply the 9-point FD stencil of the given derivative `order` (1 or 2) along
/// `axis`, honoring the boundary condition and reflection parity.
pub(crate) fn fd_derivative_axis(
    values: &mut ArrayD<Complex64>,
    axis: usize,
    spacing: f64,
    boundary: Boundary,
    parity: Parity,
    order: u32,
) {
    let stencil: &[f64; 9] = match order {
        1 => &FD_D1,
        2 => &FD_D2,
        _ => panic!("fd stencils support orders 1 and 2"),
    };
    let scale = spacing.powi(-(order as i32));
    let len = values.shape()[axis];
    let mut ext = vec![Complex64::new(0.0, 0.0); len + 10];
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for mut lane in values.lanes_mut(Axis(axis)) {
        // Extended lane: 4 ghosts, (boundary node), len interior, (boundary
        // node), 4 ghosts for Zero; wrapped for Periodic.
        match boundary {
            Boundary::Periodic => {
                ext.resize(len + 8, Complex64::new(0.0, 0.0));
                for j in 0..len {
                    ext[j + 4] = lane[j];
                }
                for m in 1..=4 {
                    ext[4 - m] = lane[(len - m % len) % len];
                    ext[len + 3 + m] = lane[(m - 1) % len];
                }
                for j in 0..len {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (s, &w) in stencil.iter().enumerate() {
                        acc += w * ext[j + s];
                    }
                    out[j] = acc * scale;
                }
            }
            Boundary::Zero => {
                ext.resize(len + 10, Complex64::new(0.0, 0.0));
                // Layout: ext[0..4] ghosts, ext[4] boundary node, ext[5..5+len]
                // interior, ext[5+len] boundary node, ext[6+len..] ghosts.
                for j in 0..len {
                    ext[5 + j] = lane[j];
                }
                match parity {
                    Parity::Odd => {
                        ext[4] = Complex64::new(0.0, 0.0);
                        ext[5 + len] = Complex64::new(0.0, 0.0);
                        for m in 1..=4 {
                            ext[4 - m] = -lane[m - 1];
                            ext[5 + len + m] = -lane[len - m];
                        }
                    }
                    Parity::Even => {
                        let mut b_left = Complex64::new(0.0, 0.0);
                        let mut b_right = Complex64::new(0.0, 0.0);
                        for (m, &w) in EVEN_BOUNDARY_W.iter().enumerate() {
                            b_left += w * lane[m.min(len - 1)];
                            b_right += w * lane[len - 1 - m.min(len - 1)];
                        }
                        ext[4] = b_left;
                        ext[5 + len] = b_right;
                        for m in 1..=4 {
                            ext[4 - m] = lane[m - 1];
                            ext[5 + len + m] = lane[len - m];
                        }
                    }
                }
                for j in 0..len {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (s, &w) in stencil.iter().enumerate() {
                        acc += w * ext[j + 1 + s];
                    }
                    out[j] = acc * scale;
                }
            }
        }
        for (dst, src) in lane.iter_mut().zip(out.iter()) {
            *dst = *src;
        }
    }
}

/// Spectral derivative along one axis of a scalar-like tensor, honoring the
/// continuation parity at zero boundaries. Shared by gradients, divergences
/// and the force-balance diagnostics.
pub(crate) fn scalar_spectral_derivative(
    grid: &Grid,
    values: &mut ArrayD<Complex64>,
    axis: usize,
    order: u32,
    parity: Parity,
) {
    let spec = grid.axis_spec(axis);
    match (grid.boundary(), parity) {
        (Boundary::Periodic, _) => spectral::derivative_axis(values, axis, &spec, order),
        (Boundary::Zero, Parity::Odd) => spectral::derivative_axis(values, axis, &spec, order),
        (Boundary::Zero, Parity::Even) => {
            even_spectral_derivative_axis(values, axis, &spec, order)
        }
    }
}

/// Spectral derivative of an even (potential-like) field on a zero-boundary
/// axis: the even extension onto the doubled ring needs the two boundary-node
/// values, which are filled by even-symmetric interpolation.
fn even_spectral_derivative_axis(
    values: &mut ArrayD<Complex64>,
    axis: usize,
    spec: &AxisSpec,
    order: u32,
) {
    let len = spec.len;
    let ring = 2 * (len + 1);
    let ring_spec = AxisSpec {
        len: ring,
        length: 2.0 * spec.length,
        boundary: Boundary::Periodic,
    };
    let shape: Vec<usize> = values
        .shape()
        .iter()
        .enumerate()
        .map(|(a, &s)| if a == axis { ring } else { s })
        .collect();
    let mut extended: ArrayD<Complex64> = ArrayD::zeros(IxDyn(&shape));
    {
        let src_lanes = values.lanes(Axis(axis));
        let dst_lanes = extended.lanes_mut(Axis(axis));
        for (src, mut dst) in src_lanes.into_iter().zip(dst_lanes) {
            let mut b_left = Complex64::new(0.0, 0.0);
            let mut b_right = Complex64::new(0.0, 0.0);
            for (m, &w) in EVEN_BOUNDARY_W.iter().enumerate() {
                b_left += w * src[m.min(len - 1)];
                b_right += w * src[len - 1 - m.min(len - 1)];
            }
            dst[0] = b_left;
            dst[len + 1] = b_right;
            for j in 1..=len {
                dst[j] = src[j - 1];
                dst[ring - j] = src[j - 1];
            }
        }
    }
    spectral::derivative_axis(&mut extended, axis, &ring_spec, order);
    let src_lanes = extended.lanes(Axis(axis));
    let dst_lanes = values.lanes_mut(Axis(axis));
    for (src, mut dst) in src_lanes.into_iter().zip(dst_lanes) {
        for j in 1..=len {
            dst[j - 1] = src[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ring(points: usize) -> Grid {
        Grid::new_1d(10.0, points, Boundary::Periodic).unwrap()
    }

    fn boxg(points: usize) -> Grid {
        Grid::new_1d(10.0, points, Boundary::Zero).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new_1d(0.0, 32, Boundary::Periodic).is_err());
        assert!(Grid::new_1d(10.0, 4, Boundary::Periodic).is_err());
        assert!(Grid::new(&[10.0, 10.0, 10.0], &[8, 8, 8], Boundary::Periodic).is_err());
    }

    #[test]
    fn spacing_conventions() {
        assert!((ring(10).spacing(0) - 1.0).abs() < 1e-15);
        assert!((boxg(9).spacing(0) - 1.0).abs() < 1e-15);
        assert!((boxg(9).coords(0)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_laplacian_fourier_eigenfunction() {
        let g = ring(32);
        let l = 10.0;
        let f = g.complex_from_fn(|x| Complex64::new(0.0, 2.0 * PI * x[0] / l).exp());
        let lap = g.laplacian(&f, DiffScheme::Spectral).unwrap();
        let want = -(2.0 * PI / l).powi(2);
        for (a, b) in lap.values().iter().zip(f.values().iter()) {
            assert!((a - want * b).norm() < 1e-10);
        }
    }

    #[test]
    fn spectral_laplacian_sine_eigenfunction() {
        let g = boxg(31);
        let l = 10.0;
        let f = g.complex_from_fn(|x| Complex64::new((PI * x[0] / l).sin(), 0.0));
        let lap = g.laplacian(&f, DiffScheme::Spectral).unwrap();
        let want = -(PI / l).powi(2);
        for (a, b) in lap.values().iter().zip(f.values().iter()) {
            assert!((a - want * b).norm() < 1e-10);
        }
    }

    #[test]
    fn fd7_matches_spectral_on_smooth_field() {
        let g = ring(128);
        let l = 10.0;
        // Band-limited random-ish smooth field.
        let f = g.complex_from_fn(|x| {
            let t = 2.0 * PI * x[0] / l;
            Complex64::new(
                0.7 * (t).cos() + 0.2 * (2.0 * t).sin() + 0.05 * (3.0 * t).cos(),
                0.3 * (t).sin() - 0.1 * (2.0 * t).cos(),
            )
        });
        let a = g.laplacian(&f, DiffScheme::Spectral).unwrap();
        let b = g.laplacian(&f, DiffScheme::Fd7).unwrap();
        let mut max = 0.0f64;
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            max = max.max((x - y).norm());
        }
        assert!(max < 1e-6, "max fd/spectral difference {max}");
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = ring(32);
        let f = g.scalar_from_fn(|_| 3.25);
        for scheme in [DiffScheme::Spectral, DiffScheme::Fd7] {
            let grad = g.gradient(&f, scheme).unwrap();
            assert!(grad.components()[0].max_abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_cosine() {
        let g = ring(64);
        let l = 10.0;
        let f = g.scalar_from_fn(|x| (2.0 * PI * x[0] / l).cos());
        let grad = g.gradient(&f, DiffScheme::Spectral).unwrap();
        let gv = &grad.components()[0];
        let want = g.scalar_from_fn(|x| -(2.0 * PI / l) * (2.0 * PI * x[0] / l).sin());
        for (a, b) in gv.values().iter().zip(want.values().iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_fd_vs_spectral_cross_check() {
        for boundary in [Boundary::Periodic, Boundary::Zero] {
            let g = Grid::new_1d(10.0, 128, boundary).unwrap();
            let l = 10.0;
            // Smooth under the boundary's own continuation: full harmonics on
            // the ring, half-harmonics (even-extendable) on the box.
            let base = match boundary {
                Boundary::Periodic => 2.0 * PI / l,
                Boundary::Zero => PI / l,
            };
            let f = g.scalar_from_fn(move |x| {
                0.8 * (base * x[0]).cos() + 0.15 * (2.0 * base * x[0]).cos()
            });
            let a = g.gradient(&f, DiffScheme::Spectral).unwrap();
            let b = g.gradient(&f, DiffScheme::Fd7).unwrap();
            let mut max = 0.0f64;
            for (x, y) in a.components()[0]
                .values()
                .iter()
                .zip(b.components()[0].values().iter())
            {
                max = max.max((x - y).abs());
            }
            assert!(max < 1e-6, "{boundary:?}: max difference {max}");
        }
    }

    #[test]
    fn integrate_constant_and_odd() {
        let g = ring(64);
        let one = g.scalar_from_fn(|_| 1.0);
        assert!((g.integrate(&one) - 10.0).abs() < 1e-12);
        let odd = g.scalar_from_fn(|x| (2.0 * PI * x[0] / 10.0).sin());
        assert!(g.integrate(&odd).abs() < 1e-12);
    }

    #[test]
    fn integrate_trig_polynomial_vs_antiderivative() {
        // Analytic antiderivative: ∫₀^L [c₀ + c₁cos(2πx/L) + c₂sin(4πx/L)]
        // = c₀·L; the oscillatory terms integrate to zero exactly.
        let g = ring(64);
        let l = 10.0;
        let f = g.scalar_from_fn(|x| {
            0.37 + 1.4 * (2.0 * PI * x[0] / l).cos() - 0.6 * (4.0 * PI * x[0] / l).sin()
        });
        assert!((g.integrate(&f) - 0.37 * l).abs() < 1e-10);
    }

    #[test]
    fn integrate_zero_bc_boundary_aware() {
        // Constant 1 integrates to the full box length even though the
        // boundary nodes are implicit.
        let g = boxg(64);
        let one = g.scalar_from_fn(|_| 1.0);
        assert!((g.integrate(&one) - 10.0).abs() < 1e-10);
        // Density-like field (vanishing at the walls, even continuation):
        // sin²(πx/L) integrates to L/2 spectrally exactly.
        let l = 10.0;
        let f = g.scalar_from_fn(|x| (PI * x[0] / l).sin().powi(2));
        assert!((g.integrate(&f) - l / 2.0).abs() < 1e-10);
    }

    #[test]
    fn laplacian_self_adjoint() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for boundary in [Boundary::Periodic, Boundary::Zero] {
            let g = Grid::new_1d(10.0, 48, boundary).unwrap();
            // Random fields respecting the BCs: random sine/Fourier series.
            let mut mk = |seeded: &mut rand_chacha::ChaCha8Rng| {
                let coefs: Vec<(f64, f64)> =
                    (1..6).map(|_| (seeded.random::<f64>() - 0.5, seeded.random::<f64>() - 0.5)).collect();
                g.complex_from_fn(|x| {
                    let mut v = Complex64::new(0.0, 0.0);
                    for (m, (a, b)) in coefs.iter().enumerate() {
                        let k = (m + 1) as f64;
                        let t = match boundary {
                            Boundary::Periodic => {
                                Complex64::new(0.0, 2.0 * PI * k * x[0] / 10.0).exp()
                            }
                            Boundary::Zero => {
                                Complex64::new((PI * k * x[0] / 10.0).sin(), 0.0)
                            }
                        };
                        v += Complex64::new(*a, *b) * t;
                    }
                    v
                })
            };
            let f = mk(&mut rng);
            let h = mk(&mut rng);
            let lap_f = g.laplacian(&f, DiffScheme::Spectral).unwrap();
            let lap_h = g.laplacian(&h, DiffScheme::Spectral).unwrap();
            let a = g.inner(&f, &lap_h);
            let b = g.inner(&lap_f, &h);
            assert!((a - b).norm() < 1e-10, "{boundary:?}: {} vs {}", a, b);
        }
    }

    #[test]
    fn spectral_shift_equivariance() {
        let g = ring(32);
        let f = g.complex_from_fn(|x| {
            Complex64::new((2.0 * PI * x[0] / 10.0).cos(), (4.0 * PI * x[0] / 10.0).sin())
                + Complex64::new(0.3, 0.0) * Complex64::new(0.0, 6.0 * PI * x[0] / 10.0).exp()
        });
        let lap = g.laplacian(&f, DiffScheme::Spectral).unwrap();
        // Shift by 5 nodes.
        let shift = |cf: &ComplexField| {
            let v = cf.values();
            let n = v.len();
            let mut out = v.clone();
            for j in 0..n {
                out[j] = v[(j + n - 5) % n];
            }
            ComplexField::new(g.clone(), out).unwrap()
        };
        let a = g.laplacian(&shift(&f), DiffScheme::Spectral).unwrap();
        let b = shift(&lap);
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn convergence_order_fd_vs_spectral() {
        // FD7 (9-point) error against the spectral reference should shrink at
        // order >= 7 across refinements.
        let l = 10.0;
        let field = |g: &Grid| {
            g.complex_from_fn(|x| {
                let t = 2.0 * PI * x[0] / l;
                Complex64::new((3.0 * t).cos(), 0.4 * (2.0 * t).sin())
            })
        };
        let mut errs = Vec::new();
        for points in [32usize, 64, 128] {
            let g = ring(points);
            let f = field(&g);
            let a = g.laplacian(&f, DiffScheme::Spectral).unwrap();
            let b = g.laplacian(&f, DiffScheme::Fd7).unwrap();
            let mut max = 0.0f64;
            for (x, y) in a.values().iter().zip(b.values().iter()) {
                max = max.max((x - y).norm());
            }
            errs.push(max);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 >= 7.0 && order2 >= 7.0, "orders {order1} {order2}");
    }

    #[test]
    fn parity_check_examples() {
        let g = boxg(96);
        let l = 10.0;
        let sine = g.scalar_from_fn(|x| (PI * x[0] / l).sin());
        let dev = g.parity_check(&sine, Parity::Odd).unwrap().deviation;
        assert!(dev < 1e-7, "sine odd deviation {dev}");

        let cosine = g.scalar_from_fn(|x| {
            1.0 - 0.5 * (PI * x[0] / l).cos() + 0.2 * (2.0 * PI * x[0] / l).cos()
        });
        let dev = g.parity_check(&cosine, Parity::Even).unwrap().deviation;
        assert!(dev < 1e-7, "cosine even deviation {dev}");

        let poly = g.scalar_from_fn(|x| x[0] * (l - x[0]));
        let dev = g.parity_check(&poly, Parity::Odd).unwrap().deviation;
        assert!(dev > 1e-4, "x(L-x) should report an even component, got {dev}");
    }

    #[test]
    fn parity_check_rejects_periodic() {
        let g = ring(32);
        let f = g.scalar_from_fn(|_| 1.0);
        assert!(g.parity_check(&f, Parity::Odd).is_err());
    }

    #[test]
    fn laplacian_2d_separable() {
        let g = Grid::new_2d([10.0, 8.0], [32, 24], Boundary::Periodic).unwrap();
        let f = g.complex_from_fn(|x| {
            Complex64::new(0.0, 2.0 * PI * x[0] / 10.0 + 2.0 * PI * 2.0 * x[1] / 8.0).exp()
        });
        let lap = g.laplacian(&f, DiffScheme::Spectral).unwrap();
        let want = -((2.0 * PI / 10.0).powi(2) + (4.0 * PI / 8.0).powi(2));
        for (a, b) in lap.values().iter().zip(f.values().iter()) {
            assert!((a - want * b).norm() < 1e-9);
        }
    }
}

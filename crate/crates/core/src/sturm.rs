//! Inversion of the Sturm-Liouville operator `-∇·(n ∇v) = ζ` with gauge
//! fixing — the kernel of every density-tracking update.
//!
//! For periodic and zero boundary conditions the null space of the operator is
//! the constant function, so after projecting `ζ` onto zero mean the solution
//! is unique up to a gauge constant, fixed here as zero spatial mean.
//!
//! 1D problems are solved by direct double integration (spectrally, so the
//! inverse matches the spectral forward application to roundoff). 2D periodic
//! problems use the flux-conservative FD2 stencil with red-black Gauss-Seidel
//! smoothing inside geometric multigrid V-cycles, wrapped as a conjugate
//! gradient preconditioner so heavily floored densities (which make the
//! coefficient range over many orders of magnitude) still converge. 2D
//! zero-boundary problems are out of scope.

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::grid::Boundary;
use crate::spectral::{self, AxisSpec};
use ndarray::{Array2, ArrayD, Ix2, IxDyn};
use num_complex::Complex64;

/// Default density floor factor relative to `max n`.
pub const DEFAULT_FLOOR_FACTOR: f64 = 1e-8;

/// Largest `|∫ζ|` that is silently projected out; larger means the problem is
/// inconsistent and is rejected.
pub const MEAN_REJECT_THRESHOLD: f64 = 1e-6;

/// Relative residual target of the iterative 2D solver.
pub const SOLVE_TOL: f64 = 1e-10;

/// A `-∇·((n+ε)∇v) = ζ` problem.
#[derive(Clone, Debug)]
pub struct SlProblem {
    density: ScalarField,
    rhs: ScalarField,
    floor: f64,
}

/// Diagnostics of a solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SlReport {
    /// Relative residual of the returned solution in the solver's own
    /// discretization.
    pub residual: f64,
    /// Iterations (CG iterations in 2D; 0 for the direct 1D path).
    pub iterations: usize,
    /// Mean of ζ that had to be projected out.
    pub projected_mean: f64,
}

impl SlProblem {
    /// Build a problem with the default density floor `1e-8 · max n`.
    pub fn new(density: ScalarField, rhs: ScalarField) -> Result<Self> {
        let floor = DEFAULT_FLOOR_FACTOR * density.max().max(f64::MIN_POSITIVE);
        Self::with_floor(density, rhs, floor)
    }

    pub fn with_floor(density: ScalarField, rhs: ScalarField, floor: f64) -> Result<Self> {
        if density.grid() != rhs.grid() {
            return Err(CoreError::ShapeMismatch(
                "density and rhs live on different grids".into(),
            ));
        }
        if !(floor > 0.0) {
            return Err(CoreError::InvalidArgument(
                "density floor must be positive".into(),
            ));
        }
        if density.min() < -floor {
            return Err(CoreError::InvalidArgument(format!(
                "density minimum {} below -floor",
                density.min()
            )));
        }
        Ok(SlProblem {
            density,
            rhs,
            floor,
        })
    }

    pub fn density(&self) -> &ScalarField {
        &self.density
    }

    pub fn rhs(&self) -> &ScalarField {
        &self.rhs
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Floored coefficient `max(n,0) + ε`.
    pub fn coefficient(&self) -> ScalarField {
        let floor = self.floor;
        ScalarField::new(
            self.density.grid().clone(),
            self.density.values().mapv(|v| v.max(0.0) + floor),
        )
        .expect("coefficient on same grid")
    }

    fn checked_rhs(&self) -> Result<(ScalarField, f64)> {
        let grid = self.rhs.grid();
        let integral = grid.integrate(&self.rhs);
        if integral.abs() > MEAN_REJECT_THRESHOLD {
            return Err(CoreError::SturmFailed(format!(
                "rhs integrates to {integral:.3e}, beyond the projection threshold"
            )));
        }
        // Project onto the solvable subspace (constants are the null space).
        let volume: f64 = grid.lengths().iter().product();
        let mut projected = self.rhs.clone();
        let shift = integral / volume;
        projected.values_mut().mapv_inplace(|v| v - shift);
        Ok((projected, integral))
    }
}

/// Solve the problem with the solver matching the grid dimensionality.
pub fn solve(problem: &SlProblem) -> Result<(ScalarField, SlReport)> {
    match problem.density.grid().dims() {
        1 => solve_1d_direct(problem),
        2 => relax_solve_2d(problem),
        d => Err(CoreError::InvalidArgument(format!("no SL solver for {d}D"))),
    }
}

/// Forward application `-∇·(c ∇v)` in the discretization matched to the
/// solver for this grid: spectral in 1D, the FD2 flux stencil in 2D.
pub fn apply_operator(problem: &SlProblem, v: &ScalarField) -> Result<ScalarField> {
    let grid = problem.density.grid();
    if v.grid() != grid {
        return Err(CoreError::ShapeMismatch("v on a different grid".into()));
    }
    let c = problem.coefficient();
    match grid.dims() {
        1 => {
            let spec = axis_spec_1d(grid);
            let mut dv = v.to_complex_values();
            derivative_1d(&mut dv, &spec, grid.boundary(), ExtendAs::Even);
            let mut flux = dv;
            for (f, cv) in flux.iter_mut().zip(c.values().iter()) {
                *f *= cv;
            }
            derivative_1d(&mut flux, &spec, grid.boundary(), ExtendAs::Odd);
            let out = flux.mapv(|z| -z.re);
            ScalarField::new(grid.clone(), out)
        }
        2 => {
            if grid.boundary() != Boundary::Periodic {
                return Err(CoreError::InvalidArgument(
                    "2D Sturm-Liouville operators support periodic boundaries only".into(),
                ));
            }
            let shape = grid.shape();
            let c2 = to_2d(c.values());
            let v2 = to_2d(v.values());
            let mut out = Array2::<f64>::zeros((shape[0], shape[1]));
            stencil_apply(&c2, &v2, grid.spacing(0), grid.spacing(1), &mut out);
            ScalarField::new(grid.clone(), out.into_dyn())
        }
        d => Err(CoreError::InvalidArgument(format!("no SL operator for {d}D"))),
    }
}

/// Direct 1D integration: two spectral antiderivatives with the integration
/// constants fixed by periodicity (or flux parity at zero boundaries) and the
/// zero-mean gauge.
pub fn solve_1d_direct(problem: &SlProblem) -> Result<(ScalarField, SlReport)> {
    let grid = problem.density.grid();
    if grid.dims() != 1 {
        return Err(CoreError::InvalidArgument("solve_1d_direct needs a 1D grid".into()));
    }
    let (zeta, projected_mean) = problem.checked_rhs()?;
    let c = problem.coefficient();
    let spec = axis_spec_1d(grid);

    // Z(x) = ∫₀^x ζ: the flux is -c v' = Z + C₁.
    let mut z = zeta.to_complex_values();
    antiderivative_1d(&mut z, &spec, grid.boundary(), ExtendAs::Even);

    let zv: Vec<f64> = z.iter().map(|v| v.re).collect();
    let cv: Vec<f64> = c.values().iter().copied().collect();
    let c1 = match grid.boundary() {
        Boundary::Periodic => {
            // Periodic v needs ∮ v' = 0.
            let num: f64 = zv.iter().zip(&cv).map(|(z, c)| z / c).sum();
            let den: f64 = cv.iter().map(|c| 1.0 / c).sum();
            -num / den
        }
        // The flux is odd about a zero boundary, so it vanishes there along
        // with Z.
        Boundary::Zero => 0.0,
    };

    let grad: Vec<f64> = zv.iter().zip(&cv).map(|(z, c)| -(z + c1) / c).collect();
    let mut g = ArrayD::from_shape_vec(
        IxDyn(&grid.shape()),
        grad.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    )
    .expect("1d shape");
    antiderivative_1d(&mut g, &spec, grid.boundary(), ExtendAs::Odd);
    let v = ScalarField::new(grid.clone(), g.mapv(|z| z.re))?.with_zero_mean();

    let residual = relative_residual(problem, &v)?;
    Ok((
        v,
        SlReport {
            residual,
            iterations: 0,
            projected_mean,
        },
    ))
}

/// 2D periodic solve: red-black Gauss-Seidel smoothing in geometric multigrid
/// V-cycles, used as the preconditioner of a conjugate-gradient iteration on
/// the zero-mean subspace.
pub fn relax_solve_2d(problem: &SlProblem) -> Result<(ScalarField, SlReport)> {
    let grid = problem.density.grid();
    if grid.dims() != 2 {
        return Err(CoreError::InvalidArgument("relax_solve_2d needs a 2D grid".into()));
    }
    if grid.boundary() != Boundary::Periodic {
        return Err(CoreError::InvalidArgument(
            "2D Sturm-Liouville solves support periodic boundaries only".into(),
        ));
    }
    let (zeta, projected_mean) = problem.checked_rhs()?;
    let c = problem.coefficient();
    let hx = grid.spacing(0);
    let hy = grid.spacing(1);

    let rhs = to_2d(zeta.values());
    let coeff = to_2d(c.values());
    let hierarchy = Hierarchy::build(coeff, hx, hy);

    let rhs_norm = frob(&rhs);
    if rhs_norm == 0.0 {
        let v = grid.zeros_scalar();
        return Ok((
            v,
            SlReport {
                residual: 0.0,
                iterations: 0,
                projected_mean,
            },
        ));
    }

    // Preconditioned CG on the zero-mean subspace.
    let n = rhs.len() as f64;
    let shape = rhs.raw_dim();
    let mut x = Array2::<f64>::zeros(shape);
    let mut r = rhs.clone();
    let mut z = Array2::<f64>::zeros(shape);
    hierarchy.v_cycle(0, &mut z, &r);
    remove_mean(&mut z, n);
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut report = SlReport {
        residual: 1.0,
        iterations: 0,
        projected_mean,
    };
    let max_iter = 200;
    let mut ap = Array2::<f64>::zeros(shape);
    for it in 0..max_iter {
        hierarchy.apply(0, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(CoreError::SturmFailed(format!(
                "lost positive definiteness (pAp = {pap:.3e})"
            )));
        }
        let alpha = rz / pap;
        x.zip_mut_with(&p, |a, b| *a += alpha * b);
        r.zip_mut_with(&ap, |a, b| *a -= alpha * b);
        report.iterations = it + 1;
        let rel = frob(&r) / rhs_norm;
        report.residual = rel;
        if rel < SOLVE_TOL {
            break;
        }
        z.fill(0.0);
        hierarchy.v_cycle(0, &mut z, &r);
        remove_mean(&mut z, n);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.zip_mut_with(&z, |a, b| *a = b + beta * *a);
    }
    if report.residual >= SOLVE_TOL {
        return Err(CoreError::SturmFailed(format!(
            "CG stalled at relative residual {:.3e} after {} iterations",
            report.residual, report.iterations
        )));
    }
    remove_mean(&mut x, n);
    let v = ScalarField::new(grid.clone(), x.into_dyn())?;
    Ok((v, report))
}

fn relative_residual(problem: &SlProblem, v: &ScalarField) -> Result<f64> {
    let applied = apply_operator(problem, v)?;
    let rhs = problem.rhs.with_zero_mean();
    let diff = applied.subbed(&rhs);
    let scale = rhs.max_abs();
    if scale == 0.0 {
        return Ok(diff.max_abs());
    }
    Ok(diff.max_abs() / scale)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ExtendAs {
    /// Potential/density-like: even continuation at zero boundaries.
    Even,
    /// Flux-like: odd continuation, vanishing at zero boundaries.
    Odd,
}

fn axis_spec_1d(grid: &crate::grid::Grid) -> AxisSpec {
    AxisSpec {
        len: grid.points()[0],
        length: grid.lengths()[0],
        boundary: grid.boundary(),
    }
}

/// First derivative for the 1D solver, honoring continuation parity at zero
/// boundaries.
fn derivative_1d(
    values: &mut ArrayD<Complex64>,
    spec: &AxisSpec,
    boundary: Boundary,
    parity: ExtendAs,
) {
    match (boundary, parity) {
        (Boundary::Periodic, _) => spectral::derivative_axis(values, 0, spec, 1),
        (Boundary::Zero, ExtendAs::Odd) => spectral::derivative_axis(values, 0, spec, 1),
        (Boundary::Zero, ExtendAs::Even) => {
            ring_op(values, spec, ExtendAs::Even, |ks, coef| {
                for (c, &k) in coef.iter_mut().zip(ks) {
                    *c *= Complex64::new(0.0, k);
                }
                // No odd derivative of the Nyquist mode.
                let ny = coef.len() / 2;
                coef[ny] = Complex64::new(0.0, 0.0);
            });
        }
    }
}

/// Zero-mean antiderivative for the 1D solver.
fn antiderivative_1d(
    values: &mut ArrayD<Complex64>,
    spec: &AxisSpec,
    boundary: Boundary,
    parity: ExtendAs,
) {
    match boundary {
        Boundary::Periodic => {
            let ks = spectral::fft_wavenumbers(spec.len, spec.length);
            let fwdspec = spec.clone();
            spectral::forward_axis(values, 0, &fwdspec);
            for (v, &k) in values.iter_mut().zip(ks.iter()) {
                if k == 0.0 {
                    *v = Complex64::new(0.0, 0.0);
                } else {
                    *v /= Complex64::new(0.0, k);
                }
            }
            spectral::inverse_axis(values, 0, &fwdspec);
        }
        Boundary::Zero => {
            // Integrate on the doubled ring; anchor so the antiderivative of
            // an even integrand is odd (vanishes at the boundary) and vice
            // versa (the even result is left zero-mean on the ring, then the
            // interior mean gauge is applied by the caller via with_zero_mean).
            let anchor_zero = parity == ExtendAs::Even;
            ring_op_with_anchor(values, spec, parity, anchor_zero);
        }
    }
}

/// Extend a 1D array onto the doubled ring using the given parity, run a
/// coefficient-space operation, read back the interior.
fn ring_op(
    values: &mut ArrayD<Complex64>,
    spec: &AxisSpec,
    parity: ExtendAs,
    op: impl FnOnce(&[f64], &mut [Complex64]),
) {
    let len = spec.len;
    let ring = 2 * (len + 1);
    let ring_spec = AxisSpec {
        len: ring,
        length: 2.0 * spec.length,
        boundary: Boundary::Periodic,
    };
    let mut ext = extend_to_ring(values, len, parity);
    let mut arr = ArrayD::from_shape_vec(IxDyn(&[ring]), ext.clone()).expect("ring shape");
    spectral::forward_axis(&mut arr, 0, &ring_spec);
    {
        let slice = arr.as_slice_mut().expect("contiguous ring");
        let ks = spectral::fft_wavenumbers(ring, 2.0 * spec.length);
        op(&ks, slice);
    }
    spectral::inverse_axis(&mut arr, 0, &ring_spec);
    for j in 1..=len {
        values[j - 1] = arr[j];
    }
    ext.clear();
}

fn ring_op_with_anchor(
    values: &mut ArrayD<Complex64>,
    spec: &AxisSpec,
    parity: ExtendAs,
    anchor_zero: bool,
) {
    let len = spec.len;
    let ring = 2 * (len + 1);
    let ring_spec = AxisSpec {
        len: ring,
        length: 2.0 * spec.length,
        boundary: Boundary::Periodic,
    };
    let ext = extend_to_ring(values, len, parity);
    let mut arr = ArrayD::from_shape_vec(IxDyn(&[ring]), ext).expect("ring shape");
    spectral::forward_axis(&mut arr, 0, &ring_spec);
    {
        let ks = spectral::fft_wavenumbers(ring, 2.0 * spec.length);
        for (v, &k) in arr.iter_mut().zip(ks.iter()) {
            if k == 0.0 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v /= Complex64::new(0.0, k);
            }
        }
    }
    spectral::inverse_axis(&mut arr, 0, &ring_spec);
    let offset = if anchor_zero { arr[0] } else { Complex64::new(0.0, 0.0) };
    for j in 1..=len {
        values[j - 1] = arr[j] - offset;
    }
}

fn extend_to_ring(values: &ArrayD<Complex64>, len: usize, parity: ExtendAs) -> Vec<Complex64> {
    let ring = 2 * (len + 1);
    let mut ext = vec![Complex64::new(0.0, 0.0); ring];
    match parity {
        ExtendAs::Odd => {
            for j in 1..=len {
                ext[j] = values[j - 1];
                ext[ring - j] = -values[j - 1];
            }
        }
        ExtendAs::Even => {
            // Boundary nodes from even-symmetric interpolation.
            let w = [1.6, -0.8, 8.0 / 35.0, -1.0 / 35.0];
            let mut left = Complex64::new(0.0, 0.0);
            let mut right = Complex64::new(0.0, 0.0);
            for (m, &wm) in w.iter().enumerate() {
                left += wm * values[m.min(len - 1)];
                right += wm * values[len - 1 - m.min(len - 1)];
            }
            ext[0] = left;
            ext[len + 1] = right;
            for j in 1..=len {
                ext[j] = values[j - 1];
                ext[ring - j] = values[j - 1];
            }
        }
    }
    ext
}

fn to_2d(values: &ArrayD<f64>) -> Array2<f64> {
    values
        .clone()
        .into_dimensionality::<Ix2>()
        .expect("2D field")
}

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn remove_mean(a: &mut Array2<f64>, n: f64) {
    let m = a.sum() / n;
    a.mapv_inplace(|v| v - m);
}

/// `-∇·(c∇v)` on the periodic FD2 flux stencil.
fn stencil_apply(c: &Array2<f64>, v: &Array2<f64>, hx: f64, hy: f64, out: &mut Array2<f64>) {
    let (nx, ny) = v.dim();
    let ihx2 = 1.0 / (hx * hx);
    let ihy2 = 1.0 / (hy * hy);
    for i in 0..nx {
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        for j in 0..ny {
            let jp = (j + 1) % ny;
            let jm = (j + ny - 1) % ny;
            let ce = 0.5 * (c[(i, j)] + c[(ip, j)]);
            let cw = 0.5 * (c[(i, j)] + c[(im, j)]);
            let cn = 0.5 * (c[(i, j)] + c[(i, jp)]);
            let cs = 0.5 * (c[(i, j)] + c[(i, jm)]);
            out[(i, j)] = ihx2 * (ce * (v[(i, j)] - v[(ip, j)]) + cw * (v[(i, j)] - v[(im, j)]))
                + ihy2 * (cn * (v[(i, j)] - v[(i, jp)]) + cs * (v[(i, j)] - v[(i, jm)]));
        }
    }
}

/// One level of the geometric multigrid hierarchy.
struct Level {
    coeff: Array2<f64>,
    hx: f64,
    hy: f64,
    diag: Array2<f64>,
}

struct Hierarchy {
    levels: Vec<Level>,
}

impl Hierarchy {
    fn build(coeff: Array2<f64>, hx: f64, hy: f64) -> Self {
        let mut levels = Vec::new();
        let mut c = coeff;
        let mut hx = hx;
        let mut hy = hy;
        loop {
            let diag = stencil_diagonal(&c, hx, hy);
            let (nx, ny) = c.dim();
            levels.push(Level {
                coeff: c.clone(),
                hx,
                hy,
                diag,
            });
            if nx % 2 != 0 || ny % 2 != 0 || nx / 2 < 8 || ny / 2 < 8 {
                break;
            }
            c = restrict(&c);
            hx *= 2.0;
            hy *= 2.0;
        }
        Hierarchy { levels }
    }

    fn apply(&self, level: usize, v: &Array2<f64>, out: &mut Array2<f64>) {
        let l = &self.levels[level];
        stencil_apply(&l.coeff, v, l.hx, l.hy, out);
    }

    fn v_cycle(&self, level: usize, x: &mut Array2<f64>, rhs: &Array2<f64>) {
        let last = level + 1 == self.levels.len();
        if last {
            // Coarsest grid: smooth hard. The mean mode is projected by the
            // caller, so plain sweeps are fine.
            for _ in 0..200 {
                self.smooth(level, x, rhs, false);
                self.smooth(level, x, rhs, true);
            }
            return;
        }
        for _ in 0..2 {
            self.smooth(level, x, rhs, false);
        }
        let l = &self.levels[level];
        let mut res = Array2::<f64>::zeros(x.raw_dim());
        stencil_apply(&l.coeff, x, l.hx, l.hy, &mut res);
        res.zip_mut_with(rhs, |a, b| *a = b - *a);
        let coarse_rhs = restrict(&res);
        let mut coarse_x = Array2::<f64>::zeros(coarse_rhs.raw_dim());
        self.v_cycle(level + 1, &mut coarse_x, &coarse_rhs);
        let corr = prolong(&coarse_x, x.dim());
        x.zip_mut_with(&corr, |a, b| *a += b);
        for _ in 0..2 {
            self.smooth(level, x, rhs, true);
        }
    }

    /// Red-black Gauss-Seidel sweep; `reverse` flips the color order so that
    /// pre- and post-smoothing together stay symmetric.
    fn smooth(&self, level: usize, x: &mut Array2<f64>, rhs: &Array2<f64>, reverse: bool) {
        let l = &self.levels[level];
        let (nx, ny) = x.dim();
        let ihx2 = 1.0 / (l.hx * l.hx);
        let ihy2 = 1.0 / (l.hy * l.hy);
        let colors: [usize; 2] = if reverse { [1, 0] } else { [0, 1] };
        for &color in &colors {
            for i in 0..nx {
                let ip = (i + 1) % nx;
                let im = (i + nx - 1) % nx;
                for j in 0..ny {
                    if (i + j) % 2 != color {
                        continue;
                    }
                    let jp = (j + 1) % ny;
                    let jm = (j + ny - 1) % ny;
                    let c = &l.coeff;
                    let ce = 0.5 * (c[(i, j)] + c[(ip, j)]) * ihx2;
                    let cw = 0.5 * (c[(i, j)] + c[(im, j)]) * ihx2;
                    let cn = 0.5 * (c[(i, j)] + c[(i, jp)]) * ihy2;
                    let cs = 0.5 * (c[(i, j)] + c[(i, jm)]) * ihy2;
                    let off = ce * x[(ip, j)] + cw * x[(im, j)] + cn * x[(i, jp)] + cs * x[(i, jm)];
                    x[(i, j)] = (rhs[(i, j)] + off) / l.diag[(i, j)];
                }
            }
        }
    }
}

fn stencil_diagonal(c: &Array2<f64>, hx: f64, hy: f64) -> Array2<f64> {
    let (nx, ny) = c.dim();
    let ihx2 = 1.0 / (hx * hx);
    let ihy2 = 1.0 / (hy * hy);
    Array2::from_shape_fn((nx, ny), |(i, j)| {
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        let jp = (j + 1) % ny;
        let jm = (j + ny - 1) % ny;
        ihx2 * (0.5 * (c[(i, j)] + c[(ip, j)]) + 0.5 * (c[(i, j)] + c[(im, j)]))
            + ihy2 * (0.5 * (c[(i, j)] + c[(i, jp)]) + 0.5 * (c[(i, j)] + c[(i, jm)]))
    })
}

/// Full-weighting restriction to the half-resolution periodic grid.
fn restrict(fine: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = fine.dim();
    let (cx, cy) = (nx / 2, ny / 2);
    Array2::from_shape_fn((cx, cy), |(ci, cj)| {
        let i = 2 * ci;
        let j = 2 * cj;
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        let jp = (j + 1) % ny;
        let jm = (j + ny - 1) % ny;
        0.25 * fine[(i, j)]
            + 0.125 * (fine[(ip, j)] + fine[(im, j)] + fine[(i, jp)] + fine[(i, jm)])
            + 0.0625 * (fine[(ip, jp)] + fine[(ip, jm)] + fine[(im, jp)] + fine[(im, jm)])
    })
}

/// Bilinear periodic prolongation.
fn prolong(coarse: &Array2<f64>, fine_dim: (usize, usize)) -> Array2<f64> {
    let (cx, cy) = coarse.dim();
    let (nx, ny) = fine_dim;
    let mut fine = Array2::<f64>::zeros(fine_dim);
    for i in 0..nx {
        let ci = i / 2;
        let cip = (ci + 1) % cx;
        let on_i = i % 2 == 0;
        for j in 0..ny {
            let cj = j / 2;
            let cjp = (cj + 1) % cy;
            let on_j = j % 2 == 0;
            fine[(i, j)] = match (on_i, on_j) {
                (true, true) => coarse[(ci, cj)],
                (false, true) => 0.5 * (coarse[(ci, cj)] + coarse[(cip, cj)]),
                (true, false) => 0.5 * (coarse[(ci, cj)] + coarse[(ci, cjp)]),
                (false, false) => {
                    0.25 * (coarse[(ci, cj)]
                        + coarse[(cip, cj)]
                        + coarse[(ci, cjp)]
                        + coarse[(cip, cjp)])
                }
            };
        }
    }
    fine
}

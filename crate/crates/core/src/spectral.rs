//! Lane-wise spectral transforms shared by the grid operators, the kinetic
//! term and the split-operator propagator.
//!
//! Periodic axes use the plain FFT; zero-boundary axes use the sine (DST-I)
//! basis, realized through an odd extension onto a ring of twice the box
//! size. Plans are cached process-wide.

use ndarray::{ArrayD, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::grid::Boundary;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

struct PlanCache {
    planner: FftPlanner<f64>,
    plans: HashMap<(usize, bool), Arc<dyn Fft<f64>>>,
}

fn plan(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        Mutex::new(PlanCache {
            planner: FftPlanner::new(),
            plans: HashMap::new(),
        })
    });
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let key = (len, dir == Direction::Forward);
    if let Some(p) = guard.plans.get(&key) {
        return p.clone();
    }
    let p = match dir {
        Direction::Forward => guard.planner.plan_fft_forward(len),
        Direction::Inverse => guard.planner.plan_fft_inverse(len),
    };
    guard.plans.insert(key, p.clone());
    p
}

/// Per-tensor-axis description used by the transform helpers.
#[derive(Clone, Debug)]
pub(crate) struct AxisSpec {
    pub len: usize,
    pub length: f64,
    pub boundary: Boundary,
}

impl AxisSpec {
    /// Squared wavenumbers indexed like the coefficient space of
    /// [`forward_axis`]: FFT ordering for periodic axes, mode `m+1` of the
    /// sine basis at index `m` for zero-boundary axes.
    pub fn k_squared(&self) -> Vec<f64> {
        match self.boundary {
            Boundary::Periodic => fft_wavenumbers(self.len, self.length)
                .into_iter()
                .map(|k| k * k)
                .collect(),
            Boundary::Zero => (0..self.len)
                .map(|m| {
                    let mu = (m as f64 + 1.0) * PI / self.length;
                    mu * mu
                })
                .collect(),
        }
    }
}

/// Wavenumbers in FFT index order for a periodic axis of `len` nodes.
pub(crate) fn fft_wavenumbers(len: usize, length: f64) -> Vec<f64> {
    (0..len)
        .map(|m| {
            let m_signed = if m <= len / 2 {
                m as isize
            } else {
                m as isize - len as isize
            };
            2.0 * PI * m_signed as f64 / length
        })
        .collect()
}

fn for_each_lane(
    values: &mut ArrayD<Complex64>,
    axis: usize,
    scratch_len: usize,
    mut f: impl FnMut(&mut [Complex64], &mut Vec<Complex64>),
) {
    let lane_len = values.shape()[axis];
    let mut lane_buf = vec![Complex64::new(0.0, 0.0); lane_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
    for mut lane in values.lanes_mut(Axis(axis)) {
        for (dst, src) in lane_buf.iter_mut().zip(lane.iter()) {
            *dst = *src;
        }
        f(&mut lane_buf, &mut scratch);
        for (dst, src) in lane.iter_mut().zip(lane_buf.iter()) {
            *dst = *src;
        }
    }
}

/// Transform one tensor axis into coefficient space (FFT or sine series).
///
/// The forward transform produces series coefficients; [`inverse_axis`]
/// returns to node values. Round trips are exact up to roundoff.
pub(crate) fn forward_axis(values: &mut ArrayD<Complex64>, axis: usize, spec: &AxisSpec) {
    match spec.boundary {
        Boundary::Periodic => {
            let fft = plan(spec.len, Direction::Forward);
            let scratch_len = fft.get_inplace_scratch_len();
            for_each_lane(values, axis, scratch_len, |lane, scratch| {
                fft.process_with_scratch(lane, scratch);
            });
        }
        Boundary::Zero => sine_transform(values, axis, spec.len, Direction::Forward),
    }
}

/// Inverse of [`forward_axis`].
pub(crate) fn inverse_axis(values: &mut ArrayD<Complex64>, axis: usize, spec: &AxisSpec) {
    match spec.boundary {
        Boundary::Periodic => {
            let fft = plan(spec.len, Direction::Inverse);
            let scratch_len = fft.get_inplace_scratch_len();
            let norm = 1.0 / spec.len as f64;
            for_each_lane(values, axis, scratch_len, |lane, scratch| {
                fft.process_with_scratch(lane, scratch);
                for v in lane.iter_mut() {
                    *v *= norm;
                }
            });
        }
        Boundary::Zero => sine_transform(values, axis, spec.len, Direction::Inverse),
    }
}

/// DST-I via the odd extension on a ring of 2(M+1) nodes. `Forward` maps node
/// values to sine-series coefficients, `Inverse` evaluates the series.
fn sine_transform(values: &mut ArrayD<Complex64>, axis: usize, len: usize, dir: Direction) {
    let ring = 2 * (len + 1);
    let fft = plan(ring, Direction::Forward);
    let fft_scratch = fft.get_inplace_scratch_len();
    let scale = match dir {
        Direction::Forward => 1.0 / (len + 1) as f64,
        Direction::Inverse => 0.5,
    };
    let mut ext = vec![Complex64::new(0.0, 0.0); ring];
    for_each_lane(values, axis, fft_scratch, |lane, scratch| {
        ext[0] = Complex64::new(0.0, 0.0);
        ext[len + 1] = Complex64::new(0.0, 0.0);
        for j in 1..=len {
            ext[j] = lane[j - 1];
            ext[ring - j] = -lane[j - 1];
        }
        fft.process_with_scratch(&mut ext, scratch);
        for m in 1..=len {
            lane[m - 1] = Complex64::new(0.0, scale) * ext[m];
        }
    });
}

/// In-place spectral derivative of given order along one axis; node values in,
/// node values out.
///
/// On zero-boundary axes the field is treated as odd about the boundaries
/// (wave-function convention); odd-order derivatives of such fields come back
/// even, which is fine since they are plain node values here.
pub(crate) fn derivative_axis(
    values: &mut ArrayD<Complex64>,
    axis: usize,
    spec: &AxisSpec,
    order: u32,
) {
    match spec.boundary {
        Boundary::Periodic => {
            let ks = fft_wavenumbers(spec.len, spec.length);
            let fwd = plan(spec.len, Direction::Forward);
            let inv = plan(spec.len, Direction::Inverse);
            let scratch_len = fwd
                .get_inplace_scratch_len()
                .max(inv.get_inplace_scratch_len());
            let norm = 1.0 / spec.len as f64;
            let mult = derivative_multipliers(&ks, order, spec.len % 2 == 0, spec.len / 2);
            for_each_lane(values, axis, scratch_len, |lane, scratch| {
                fwd.process_with_scratch(lane, scratch);
                for (v, m) in lane.iter_mut().zip(mult.iter()) {
                    *v *= m * norm;
                }
                inv.process_with_scratch(lane, scratch);
            });
        }
        Boundary::Zero => {
            // Odd extension onto the doubled ring, derive there, read back the
            // interior nodes.
            let ring = 2 * (spec.len + 1);
            let ks = fft_wavenumbers(ring, 2.0 * spec.length);
            let fwd = plan(ring, Direction::Forward);
            let inv = plan(ring, Direction::Inverse);
            let scratch_len = fwd
                .get_inplace_scratch_len()
                .max(inv.get_inplace_scratch_len());
            let norm = 1.0 / ring as f64;
            let mult = derivative_multipliers(&ks, order, true, ring / 2);
            let mut ext = vec![Complex64::new(0.0, 0.0); ring];
            let len = spec.len;
            for_each_lane(values, axis, scratch_len, |lane, scratch| {
                ext[0] = Complex64::new(0.0, 0.0);
                ext[len + 1] = Complex64::new(0.0, 0.0);
                for j in 1..=len {
                    ext[j] = lane[j - 1];
                    ext[ring - j] = -lane[j - 1];
                }
                fwd.process_with_scratch(&mut ext, scratch);
                for (v, m) in ext.iter_mut().zip(mult.iter()) {
                    *v *= m * norm;
                }
                inv.process_with_scratch(&mut ext, scratch);
                for j in 1..=len {
                    lane[j - 1] = ext[j];
                }
            });
        }
    }
}

fn derivative_multipliers(
    ks: &[f64],
    order: u32,
    even_len: bool,
    nyquist: usize,
) -> Vec<Complex64> {
    ks.iter()
        .enumerate()
        .map(|(m, &k)| {
            // The Nyquist mode has no well-defined odd derivative on an even
            // grid; drop it there.
            if order % 2 == 1 && even_len && m == nyquist {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, k).powu(order)
        })
        .collect()
}

/// Multiply coefficient-space values by `-Σ_axis k_axis²` (i.e. apply the
/// Laplacian symbol). `specs` must cover every tensor axis in order.
pub(crate) fn apply_laplacian_symbol(values: &mut ArrayD<Complex64>, specs: &[AxisSpec]) {
    let k2: Vec<Vec<f64>> = specs.iter().map(|s| s.k_squared()).collect();
    for (idx, v) in values.indexed_iter_mut() {
        let mut s = 0.0;
        for (ax, k2ax) in k2.iter().enumerate() {
            s += k2ax[idx[ax]];
        }
        *v *= -s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::IxDyn;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn periodic_roundtrip() {
        let spec = AxisSpec {
            len: 16,
            length: 10.0,
            boundary: Boundary::Periodic,
        };
        let mut a = ArrayD::from_shape_fn(IxDyn(&[16]), |i| c((i[0] as f64).sin()));
        let orig = a.clone();
        forward_axis(&mut a, 0, &spec);
        inverse_axis(&mut a, 0, &spec);
        for (x, y) in a.iter().zip(orig.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn sine_roundtrip() {
        let spec = AxisSpec {
            len: 15,
            length: 10.0,
            boundary: Boundary::Zero,
        };
        let mut a =
            ArrayD::from_shape_fn(IxDyn(&[15]), |i| Complex64::new(0.3 * i[0] as f64, -0.1));
        let orig = a.clone();
        forward_axis(&mut a, 0, &spec);
        inverse_axis(&mut a, 0, &spec);
        for (x, y) in a.iter().zip(orig.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn sine_coefficients_pick_out_modes() {
        let len = 12;
        let length = 7.0;
        let spec = AxisSpec {
            len,
            length,
            boundary: Boundary::Zero,
        };
        let h = length / (len + 1) as f64;
        let mut a = ArrayD::from_shape_fn(IxDyn(&[len]), |i| {
            let x = (i[0] as f64 + 1.0) * h;
            c((3.0 * PI * x / length).sin())
        });
        forward_axis(&mut a, 0, &spec);
        for (m, v) in a.iter().enumerate() {
            let want = if m == 2 { 1.0 } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-12, "mode {m}: {v}");
        }
    }

    #[test]
    fn periodic_first_derivative() {
        let len = 32;
        let length = 10.0;
        let spec = AxisSpec {
            len,
            length,
            boundary: Boundary::Periodic,
        };
        let h = length / len as f64;
        let mut a = ArrayD::from_shape_fn(IxDyn(&[len]), |i| {
            c((2.0 * PI * (i[0] as f64) * h / length).cos())
        });
        derivative_axis(&mut a, 0, &spec, 1);
        for (j, v) in a.iter().enumerate() {
            let x = j as f64 * h;
            let want = -(2.0 * PI / length) * (2.0 * PI * x / length).sin();
            assert!((v - c(want)).norm() < 1e-11);
        }
    }
}

//! Time-step operators and time-stepping strategies.
//!
//! Operators approximate one application of `exp(-iH̄Δt)` with the midpoint
//! Hamiltonian `H̄`; strategies decide where that Hamiltonian comes from:
//!
//! * `A` — known potentials, exact midpoint evaluation,
//! * `B` — predictor/corrector for state-dependent Hamiltonians,
//! * `C` — two interleaved chains of double steps using on-point
//!   Hamiltonians from the opposite chain (equidistant grid only),
//! * `D` — per-step fixed-point refinement against a control target; this
//!   lives in [`crate::tracking`] and is rejected here.
//!
//! Crank-Nicolson and the Lanczos exponential share one Krylov reduction; CN
//! applies the Cayley rational function of the tridiagonal matrix (unitary for
//! any truncation), Lanczos the exponential itself with a leakage-based error
//! estimate.

use crate::error::{CoreError, Result};
use crate::field::ScalarField;
use crate::manybody::{AssembledHamiltonian, WaveFunction};
use ndarray::ArrayD;
use num_complex::Complex64;

/// Time-step operator kinds.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum StepOperator {
    CrankNicolson,
    SecondOrderDifferencing,
    SplitOperator,
    Lanczos { krylov_dim: usize },
}

pub const DEFAULT_KRYLOV_DIM: usize = 12;

impl StepOperator {
    pub fn lanczos_default() -> Self {
        StepOperator::Lanczos {
            krylov_dim: DEFAULT_KRYLOV_DIM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepOperator::Lanczos { krylov_dim } = self {
            if !(4..=40).contains(krylov_dim) {
                return Err(CoreError::InvalidArgument(format!(
                    "Krylov dimension {krylov_dim} outside 4..=40"
                )));
            }
        }
        Ok(())
    }

    /// Whether a single application needs only the current state (SOD needs
    /// the previous one and is bound to an equidistant leapfrog).
    pub fn is_single_state(&self) -> bool {
        !matches!(self, StepOperator::SecondOrderDifferencing)
    }

    /// Advisory step-size limit; `None` when within the scheme's comfort
    /// zone. `energy_scale` is the caller's estimate of the highest energy of
    /// interest (split-operator limit).
    pub fn step_limit_warning(
        &self,
        h: &AssembledHamiltonian,
        dt: f64,
        energy_scale: Option<f64>,
    ) -> Option<String> {
        let e_grid = grid_energy_scale(h);
        match self {
            StepOperator::CrankNicolson | StepOperator::SecondOrderDifferencing => {
                let limit = 0.2 / e_grid;
                (dt > limit).then(|| {
                    format!(
                        "dt = {dt:.3e} above the CN/SOD comfort limit {limit:.3e} (|E_grid| = {e_grid:.3e})"
                    )
                })
            }
            StepOperator::SplitOperator => energy_scale.and_then(|e| {
                let limit = 1.0 / e.abs().max(f64::MIN_POSITIVE);
                (dt > limit).then(|| {
                    format!("dt = {dt:.3e} above the split-operator limit 1/|E| = {limit:.3e}")
                })
            }),
            StepOperator::Lanczos { .. } => None,
        }
    }
}

/// Largest grid-representable energy: max kinetic symbol plus potential range.
fn grid_energy_scale(h: &AssembledHamiltonian) -> f64 {
    let mut kmax = 0.0f64;
    for spec in h.axis_specs() {
        let k2 = spec.k_squared();
        kmax += k2.iter().cloned().fold(0.0f64, f64::max);
    }
    let vmax = h
        .potential_tensor()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    0.5 * kmax + vmax
}

/// Outcome of one step.
pub struct StepOutcome {
    pub state: WaveFunction,
    /// A-posteriori local error estimate where the scheme provides one
    /// (Krylov leakage for Lanczos, solver residual for CN), else NaN.
    pub error_estimate: f64,
}

/// A step operator plus the bit of state SOD needs.
pub struct Stepper {
    op: StepOperator,
    previous: Option<WaveFunction>,
}

impl Stepper {
    pub fn new(op: StepOperator) -> Result<Self> {
        op.validate()?;
        Ok(Stepper { op, previous: None })
    }

    pub fn op(&self) -> StepOperator {
        self.op
    }

    /// Prime the leapfrog history (SOD only).
    pub fn seed_previous(&mut self, psi: WaveFunction) {
        self.previous = Some(psi);
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// Advance `psi` by `dt` under the midpoint Hamiltonian `h`.
    pub fn step(
        &mut self,
        psi: &WaveFunction,
        h: &AssembledHamiltonian,
        dt: f64,
    ) -> Result<StepOutcome> {
        let out = match self.op {
            StepOperator::Lanczos { krylov_dim } => {
                let (values, est) =
                    lanczos_expv_tensor(psi.values(), h, dt, krylov_dim, psi.node_weight())?;
                StepOutcome {
                    state: psi.with_values(values),
                    error_estimate: est,
                }
            }
            StepOperator::CrankNicolson => {
                let (values, est) = crank_nicolson_tensor(psi.values(), h, dt, psi.node_weight())?;
                StepOutcome {
                    state: psi.with_values(values),
                    error_estimate: est,
                }
            }
            StepOperator::SplitOperator => StepOutcome {
                state: psi.with_values(split_operator_tensor(psi.values(), h, dt)?),
                error_estimate: f64::NAN,
            },
            StepOperator::SecondOrderDifferencing => {
                let prev = self.previous.take().ok_or_else(|| {
                    CoreError::PropagationFailed(
                        "second-order differencing needs a stored previous state".into(),
                    )
                })?;
                let hpsi = h.apply_tensor(psi.values())?;
                let mut next = prev.values().clone();
                let factor = Complex64::new(0.0, -2.0 * dt);
                next.zip_mut_with(&hpsi, |n, &hp| *n += factor * hp);
                StepOutcome {
                    state: psi.with_values(next),
                    error_estimate: f64::NAN,
                }
            }
        };
        if matches!(self.op, StepOperator::SecondOrderDifferencing) {
            self.previous = Some(psi.clone());
        }
        Ok(out)
    }
}

/// One-shot step for the single-state operators (anything but SOD).
pub fn step(
    psi: &WaveFunction,
    h: &AssembledHamiltonian,
    dt: f64,
    op: StepOperator,
) -> Result<StepOutcome> {
    if !op.is_single_state() {
        return Err(CoreError::PropagationFailed(
            "second-order differencing cannot run as a one-shot step".into(),
        ));
    }
    Stepper::new(op)?.step(psi, h, dt)
}

/// Krylov approximation of `exp(-iHΔt)ψ` in an `m`-dimensional subspace.
/// Returns the propagated state and the leakage error estimate.
pub fn lanczos_expv(
    psi: &WaveFunction,
    h: &AssembledHamiltonian,
    dt: f64,
    m: usize,
) -> Result<(WaveFunction, f64)> {
    let (values, est) = lanczos_expv_tensor(psi.values(), h, dt, m, psi.node_weight())?;
    Ok((psi.with_values(values), est))
}

struct KrylovReduction {
    basis: Vec<ArrayD<Complex64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    /// β coupling to the first vector outside the basis (0 on breakdown: the
    /// subspace is invariant and results there are exact).
    leak_beta: f64,
}

fn krylov_reduce(
    v0: &ArrayD<Complex64>,
    h: &AssembledHamiltonian,
    m: usize,
    weight: f64,
) -> Result<KrylovReduction> {
    let mut basis: Vec<ArrayD<Complex64>> = Vec::with_capacity(m);
    let nrm = wnorm(v0, weight);
    if nrm == 0.0 {
        return Err(CoreError::PropagationFailed("zero state".into()));
    }
    let mut q = v0.mapv(|v| v / nrm);
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);
    let mut leak_beta = 0.0;
    for i in 0..m {
        basis.push(q.clone());
        let mut w = h.apply_tensor(&basis[i])?;
        let alpha = winner(&basis[i], &w, weight).re;
        waxpy(&mut w, Complex64::new(-alpha, 0.0), &basis[i]);
        if i > 0 {
            waxpy(&mut w, Complex64::new(-betas[i - 1], 0.0), &basis[i - 1]);
        }
        // Full reorthogonalization keeps the tridiagonal honest over the
        // short recurrences used here.
        for b in basis.iter() {
            let c = winner(b, &w, weight);
            waxpy(&mut w, -c, b);
        }
        alphas.push(alpha);
        let beta = wnorm(&w, weight);
        if i + 1 == m {
            leak_beta = beta;
            break;
        }
        if beta < 1e-13 {
            leak_beta = 0.0;
            break;
        }
        betas.push(beta);
        q = w.mapv(|v| v / beta);
    }
    Ok(KrylovReduction {
        basis,
        alphas,
        betas,
        leak_beta,
    })
}

fn lanczos_expv_tensor(
    v0: &ArrayD<Complex64>,
    h: &AssembledHamiltonian,
    dt: f64,
    m: usize,
    weight: f64,
) -> Result<(ArrayD<Complex64>, f64)> {
    let nrm = wnorm(v0, weight);
    let red = krylov_reduce(v0, h, m, weight)?;
    let k = red.alphas.len();
    let (thetas, vecs) = crate::manybody::tridiag_eigen_pub(&red.alphas, &red.betas);
    // y(t) = V exp(-iDt) Vᵀ e₁
    let y_at = |t: f64| -> Vec<Complex64> {
        (0..k)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..k {
                    let phase = Complex64::new(0.0, -thetas[j] * t).exp();
                    acc += vecs[i][j] * phase * vecs[0][j];
                }
                acc
            })
            .collect()
    };
    let y = y_at(dt);
    let mut out = ArrayD::zeros(v0.raw_dim());
    for (i, q) in red.basis.iter().enumerate() {
        waxpy(&mut out, y[i] * nrm, q);
    }
    // Leakage estimate: the defect flows through the last basis vector at
    // rate β_m |y_m(t)|; integrate that crudely over the step.
    let mut est = 0.0;
    if red.leak_beta > 0.0 {
        let samples = [0.25 * dt, 0.5 * dt, 0.75 * dt, dt];
        let mean_tail: f64 =
            samples.iter().map(|&t| y_at(t)[k - 1].norm()).sum::<f64>() / samples.len() as f64;
        est = red.leak_beta * dt.abs() * mean_tail;
    }
    Ok((out, est))
}

fn crank_nicolson_tensor(
    v0: &ArrayD<Complex64>,
    h: &AssembledHamiltonian,
    dt: f64,
    weight: f64,
) -> Result<(ArrayD<Complex64>, f64)> {
    // Cayley transform of the Krylov tridiagonal: expand the subspace until
    // the implicit-solve residual (Δt β_m |y_m| / 2) is negligible.
    let nrm = wnorm(v0, weight);
    let dim: usize = v0.len();
    let m_cap = 64usize.min(dim);
    let mut m = 16usize.min(dim);
    loop {
        let red = krylov_reduce(v0, h, m, weight)?;
        let k = red.alphas.len();
        let (thetas, vecs) = crate::manybody::tridiag_eigen_pub(&red.alphas, &red.betas);
        let mut y = vec![Complex64::new(0.0, 0.0); k];
        for j in 0..k {
            let half = Complex64::new(0.0, 0.5 * dt * thetas[j]);
            let r = (Complex64::new(1.0, 0.0) - half) / (Complex64::new(1.0, 0.0) + half);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += vecs[i][j] * r * vecs[0][j];
            }
        }
        let residual = 0.5 * dt.abs() * red.leak_beta * y[k - 1].norm();
        if residual < 1e-13 || k == dim || m >= m_cap {
            let mut out = ArrayD::zeros(v0.raw_dim());
            for (i, q) in red.basis.iter().enumerate() {
                waxpy(&mut out, y[i] * nrm, q);
            }
            return Ok((out, residual));
        }
        m = (m * 2).min(m_cap);
    }
}

fn split_operator_tensor(
    v0: &ArrayD<Complex64>,
    h: &AssembledHamiltonian,
    dt: f64,
) -> Result<ArrayD<Complex64>> {
    let mut out = v0.clone();
    let half = Complex64::new(0.0, -0.5 * dt);
    ndarray::Zip::from(&mut out)
        .and(h.potential_tensor())
        .for_each(|o, &v| *o *= (half * v).exp());
    let specs = h.axis_specs().to_vec();
    for (ax, spec) in specs.iter().enumerate() {
        crate::spectral::forward_axis(&mut out, ax, spec);
    }
    let k2: Vec<Vec<f64>> = specs.iter().map(|s| s.k_squared()).collect();
    for (idx, v) in out.indexed_iter_mut() {
        let mut e = 0.0;
        for (ax, k2ax) in k2.iter().enumerate() {
            e += k2ax[idx[ax]];
        }
        *v *= Complex64::new(0.0, -0.5 * e * dt).exp();
    }
    for (ax, spec) in specs.iter().enumerate() {
        crate::spectral::inverse_axis(&mut out, ax, spec);
    }
    ndarray::Zip::from(&mut out)
        .and(h.potential_tensor())
        .for_each(|o, &v| *o *= (half * v).exp());
    Ok(out)
}

fn winner(a: &ArrayD<Complex64>, b: &ArrayD<Complex64>, weight: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc * weight
}

fn wnorm(a: &ArrayD<Complex64>, weight: f64) -> f64 {
    (a.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight).sqrt()
}

fn waxpy(y: &mut ArrayD<Complex64>, a: Complex64, x: &ArrayD<Complex64>) {
    y.zip_mut_with(x, |yv, xv| *yv += a * xv);
}

/// Time-stepping strategy (paper-figure labels).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Strategy {
    /// Known Hamiltonian, exact midpoint evaluation.
    A,
    /// On-point predictor step, midpoint corrector from the provisional state.
    B,
    /// Interleaved double-step chains with on-point Hamiltonians.
    C,
    /// Target-driven midpoint refinement (handled by the tracking module).
    D,
}

#[derive(Clone, Copy, Debug)]
pub struct StepPlan {
    pub strategy: Strategy,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub adaptive: bool,
    pub adaptive_tol: f64,
    /// Keep every `store_stride`-th state in the trajectory (the final state
    /// is always kept).
    pub store_stride: usize,
    /// Energy scale of interest for the split-operator step-limit check.
    pub energy_scale: Option<f64>,
}

impl StepPlan {
    pub fn new(strategy: Strategy, dt: f64, t_end: f64) -> Result<Self> {
        let plan = StepPlan {
            strategy,
            dt,
            t_start: 0.0,
            t_end,
            adaptive: false,
            adaptive_tol: 1e-9,
            store_stride: 1,
            energy_scale: None,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn adaptive(mut self, tol: f64) -> Result<Self> {
        self.adaptive = true;
        self.adaptive_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.store_stride = stride.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CoreError::InvalidArgument("dt must be positive".into()));
        }
        if self.t_end <= self.t_start {
            return Err(CoreError::InvalidArgument(
                "t_end must exceed t_start".into(),
            ));
        }
        if self.strategy == Strategy::C && self.adaptive {
            return Err(CoreError::InvalidArgument(
                "strategy C requires an equidistant time grid (adaptive = false)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step record.
#[derive(Clone, Copy, Debug)]
pub struct StepDiagnostics {
    pub t: f64,
    pub dt: f64,
    pub error_estimate: f64,
    pub norm: f64,
    /// Dipole x-component, recorded for chain-oscillation diagnostics
    /// (strategy C); NaN elsewhere.
    pub dipole_x: f64,
}

/// Result of a propagation run: strided state snapshots plus per-step
/// diagnostics.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    pub midpoint_potentials: Vec<ScalarField>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
    /// RMS alternation of the dipole between even and odd chains (strategy C
    /// only).
    pub chain_oscillation: Option<f64>,
}

/// Source of Hamiltonians for the stepping strategies.
pub trait HamiltonianProvider {
    /// Hamiltonian at a given time (known-potential mode).
    fn at_time(&mut self, t: f64) -> Result<AssembledHamiltonian>;

    /// Whether the Hamiltonian really depends on the propagated state.
    fn depends_on_state(&self) -> bool {
        false
    }

    /// Hamiltonian reconstructed from a state (strategies B/C). The default
    /// ignores the state.
    fn from_state(&mut self, t: f64, _psi: &WaveFunction) -> Result<AssembledHamiltonian> {
        self.at_time(t)
    }
}

/// Known time-dependent potential with a fixed interaction.
pub struct PotentialProvider<F: Fn(f64) -> ScalarField> {
    template: AssembledHamiltonian,
    potential: F,
}

impl<F: Fn(f64) -> ScalarField> PotentialProvider<F> {
    pub fn new(template: AssembledHamiltonian, potential: F) -> Self {
        PotentialProvider {
            template,
            potential,
        }
    }
}

impl<F: Fn(f64) -> ScalarField> HamiltonianProvider for PotentialProvider<F> {
    fn at_time(&mut self, t: f64) -> Result<AssembledHamiltonian> {
        self.template.replace_potential(&(self.potential)(t))
    }
}

/// State-dependent Hamiltonian defined by a closure building the potential
/// from the instantaneous state.
pub struct StateDependentProvider<F: FnMut(f64, &WaveFunction) -> Result<ScalarField>> {
    template: AssembledHamiltonian,
    builder: F,
}

impl<F: FnMut(f64, &WaveFunction) -> Result<ScalarField>> StateDependentProvider<F> {
    pub fn new(template: AssembledHamiltonian, builder: F) -> Self {
        StateDependentProvider { template, builder }
    }
}

impl<F: FnMut(f64, &WaveFunction) -> Result<ScalarField>> HamiltonianProvider
    for StateDependentProvider<F>
{
    fn at_time(&mut self, t: f64) -> Result<AssembledHamiltonian> {
        Err(CoreError::PropagationFailed(format!(
            "state-dependent Hamiltonian cannot be evaluated from time {t} alone"
        )))
    }

    fn depends_on_state(&self) -> bool {
        true
    }

    fn from_state(&mut self, t: f64, psi: &WaveFunction) -> Result<AssembledHamiltonian> {
        self.template.replace_potential(&(self.builder)(t, psi)?)
    }
}

/// Run a stepping plan. The observer sees every accepted state in order.
pub fn run(
    plan: &StepPlan,
    provider: &mut dyn HamiltonianProvider,
    psi0: &WaveFunction,
    op: StepOperator,
) -> Result<Trajectory> {
    run_with_observer(plan, provider, psi0, op, |_, _, _| {})
}

pub fn run_with_observer(
    plan: &StepPlan,
    provider: &mut dyn HamiltonianProvider,
    psi0: &WaveFunction,
    op: StepOperator,
    mut observer: impl FnMut(usize, f64, &WaveFunction),
) -> Result<Trajectory> {
    plan.validate()?;
    op.validate()?;
    match plan.strategy {
        Strategy::A | Strategy::B => run_sequential(plan, provider, psi0, op, &mut observer),
        Strategy::C => run_interleaved(plan, provider, psi0, op, &mut observer),
        Strategy::D => Err(CoreError::InvalidArgument(
            "strategy D is the tracking inner loop; use tracking::track_density".into(),
        )),
    }
}

fn run_sequential(
    plan: &StepPlan,
    provider: &mut dyn HamiltonianProvider,
    psi0: &WaveFunction,
    op: StepOperator,
    observer: &mut dyn FnMut(usize, f64, &WaveFunction),
) -> Result<Trajectory> {
    if !op.is_single_state() {
        return Err(CoreError::PropagationFailed(
            "second-order differencing runs under strategy C".into(),
        ));
    }
    let mut stepper = Stepper::new(op)?;
    let mut traj = Trajectory {
        times: vec![plan.t_start],
        states: vec![psi0.clone()],
        midpoint_potentials: Vec::new(),
        diagnostics: Vec::new(),
        warnings: Vec::new(),
        chain_oscillation: None,
    };
    let mut psi = psi0.clone();
    let mut t = plan.t_start;
    let mut dt = plan.dt;
    let mut step_index = 0usize;
    let min_dt = plan.dt / 1024.0;
    let mut calm_steps = 0usize;
    while t < plan.t_end - 1e-12 * plan.dt {
        let dt_step = dt.min(plan.t_end - t);
        let t_mid = t + 0.5 * dt_step;
        let h = match plan.strategy {
            Strategy::A => {
                if provider.depends_on_state() {
                    provider.from_state(t_mid, &psi)?
                } else {
                    provider.at_time(t_mid)?
                }
            }
            Strategy::B => {
                // Predictor with the on-point Hamiltonian, corrector from the
                // state averaged across the step.
                let h_on = provider.from_state(t, &psi)?;
                let provisional = stepper.step(&psi, &h_on, dt_step)?.state;
                let mut mid = psi.values().clone();
                mid.zip_mut_with(provisional.values(), |a, b| *a = 0.5 * (*a + b));
                let mid_state = psi.with_values(mid);
                provider.from_state(t_mid, &mid_state)?
            }
            _ => unreachable!(),
        };
        if step_index == 0 {
            if let Some(w) = op.step_limit_warning(&h, dt_step, plan.energy_scale) {
                traj.warnings.push(w);
            }
        }
        let outcome = stepper.step(&psi, &h, dt_step)?;
        let est = outcome.error_estimate;
        if plan.adaptive && est.is_finite() && est > plan.adaptive_tol {
            if dt_step <= min_dt {
                return Err(CoreError::PropagationFailed(format!(
                    "adaptive step control hit dt = {dt_step:.3e} with error {est:.3e}"
                )));
            }
            dt = dt_step / 2.0;
            calm_steps = 0;
            continue;
        }
        psi = outcome.state;
        t += dt_step;
        step_index += 1;
        let norm = psi.norm();
        traj.diagnostics.push(StepDiagnostics {
            t,
            dt: dt_step,
            error_estimate: est,
            norm,
            dipole_x: f64::NAN,
        });
        if plan.adaptive && est.is_finite() && est < 0.01 * plan.adaptive_tol {
            calm_steps += 1;
            if calm_steps >= 4 && dt < plan.dt {
                dt = (dt * 2.0).min(plan.dt);
                calm_steps = 0;
            }
        }
        observer(step_index, t, &psi);
        if step_index % plan.store_stride == 0 || t >= plan.t_end - 1e-12 * plan.dt {
            traj.times.push(t);
            traj.states.push(psi.clone());
            traj.midpoint_potentials.push(potential_slice(&h));
        }
    }
    Ok(traj)
}

fn run_interleaved(
    plan: &StepPlan,
    provider: &mut dyn HamiltonianProvider,
    psi0: &WaveFunction,
    op: StepOperator,
    observer: &mut dyn FnMut(usize, f64, &WaveFunction),
) -> Result<Trajectory> {
    let n_steps = ((plan.t_end - plan.t_start) / plan.dt).round() as usize;
    if n_steps < 2 {
        return Err(CoreError::InvalidArgument(
            "strategy C needs at least two steps".into(),
        ));
    }
    let dt = (plan.t_end - plan.t_start) / n_steps as f64;
    let mut traj = Trajectory {
        times: vec![plan.t_start],
        states: vec![psi0.clone()],
        midpoint_potentials: Vec::new(),
        diagnostics: Vec::new(),
        warnings: Vec::new(),
        chain_oscillation: None,
    };
    // Initialization: both chains descend from ψ₀; the odd-chain state at t₁
    // comes from the on-point Hamiltonian Ĥ(t₁) instead of a midpoint one.
    let t1 = plan.t_start + dt;
    let h1 = if provider.depends_on_state() {
        provider.from_state(t1, psi0)?
    } else {
        provider.at_time(t1)?
    };
    if let Some(w) = op.step_limit_warning(&h1, dt, plan.energy_scale) {
        traj.warnings.push(w);
    }
    let starter_op = if op.is_single_state() {
        op
    } else {
        StepOperator::SplitOperator
    };
    let first = step(psi0, &h1, dt, starter_op)?;
    let mut states: Vec<WaveFunction> = vec![psi0.clone(), first.state];
    let mut dipoles: Vec<f64> = Vec::with_capacity(n_steps + 1);
    dipoles.push(crate::manybody::dipole_moment(&states[0])[0]);
    dipoles.push(crate::manybody::dipole_moment(&states[1])[0]);
    record_c_step(&mut traj, plan, t1, dt, &states[1], &h1, dipoles[1], observer, 1);

    for n in 2..=n_steps {
        let t_n = plan.t_start + n as f64 * dt;
        let t_on = t_n - dt; // on-point time served by the opposite chain
        let h = if provider.depends_on_state() {
            provider.from_state(t_on, &states[n - 1])?
        } else {
            provider.at_time(t_on)?
        };
        let next = match op {
            StepOperator::SecondOrderDifferencing => {
                // Leapfrog: ψ_n = ψ_{n-2} - 2iΔt H ψ_{n-1}.
                let hpsi = h.apply_tensor(states[n - 1].values())?;
                let mut v = states[n - 2].values().clone();
                let factor = Complex64::new(0.0, -2.0 * dt);
                v.zip_mut_with(&hpsi, |a, &b| *a += factor * b);
                StepOutcome {
                    state: states[n - 1].with_values(v),
                    error_estimate: f64::NAN,
                }
            }
            _ => step(&states[n - 2], &h, 2.0 * dt, op)?,
        };
        states.push(next.state);
        dipoles.push(crate::manybody::dipole_moment(&states[n])[0]);
        record_c_step(&mut traj, plan, t_n, dt, &states[n], &h, dipoles[n], observer, n);
    }
    traj.chain_oscillation = Some(alternation_metric(&dipoles));
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn record_c_step(
    traj: &mut Trajectory,
    plan: &StepPlan,
    t: f64,
    dt: f64,
    state: &WaveFunction,
    h: &AssembledHamiltonian,
    dipole_x: f64,
    observer: &mut dyn FnMut(usize, f64, &WaveFunction),
    index: usize,
) {
    traj.diagnostics.push(StepDiagnostics {
        t,
        dt,
        error_estimate: f64::NAN,
        norm: state.norm(),
        dipole_x,
    });
    observer(index, t, state);
    let is_last = t >= plan.t_end - 1e-12 * plan.dt;
    if index % plan.store_stride == 0 || is_last {
        traj.times.push(t);
        traj.states.push(state.clone());
        traj.midpoint_potentials.push(potential_slice(h));
    }
}

/// RMS of the second difference of a series relative to the RMS of its first
/// difference: ~0 for a smooth series, O(1) when even and odd entries follow
/// different curves.
fn alternation_metric(series: &[f64]) -> f64 {
    if series.len() < 3 {
        return 0.0;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for w in series.windows(3) {
        let second = w[2] - 2.0 * w[1] + w[0];
        num += second * second;
    }
    for w in series.windows(2) {
        let first = w[1] - w[0];
        den += first * first;
    }
    (num / series.len() as f64).sqrt() / (den / series.len() as f64).sqrt().max(1e-300)
}

/// One-particle restriction of the assembled potential tensor (other
/// particles pinned to node 0); equals `v + const` for known-potential runs,
/// which is all the gauge freedom allows anyway.
fn potential_slice(h: &AssembledHamiltonian) -> ScalarField {
    let grid = h.grid().clone();
    let d = grid.dims();
    let t = h.potential_tensor();
    let shape = grid.shape();
    let values = ArrayD::from_shape_fn(ndarray::IxDyn(&shape), |idx| {
        let mut full = vec![0usize; d * h.particles()];
        for a in 0..d {
            full[a] = idx[a];
        }
        t[ndarray::IxDyn(&full)]
    });
    ScalarField::new(grid, values).expect("slice on own grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Grid};
    use crate::manybody::{eigenstates, EigenOptions, HamiltonianSpec, Interaction, Symmetry};
    use std::f64::consts::PI;

    fn ring(points: usize) -> Grid {
        Grid::new_1d(10.0, points, Boundary::Periodic).unwrap()
    }

    fn cosine_spec(g: &Grid) -> HamiltonianSpec {
        let v0 = g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos());
        HamiltonianSpec::new(g.clone(), Interaction::None, v0).unwrap()
    }

    #[test]
    fn eigenstate_gets_pure_phase() {
        let g = ring(32);
        let spec = cosine_spec(&g);
        let (e0, psi0) = eigenstates(&spec, 1, Symmetry::None, 1, &EigenOptions::default())
            .unwrap()
            .remove(0);
        let h = spec.assemble(1).unwrap();
        let dt = 1e-3;
        for op in [
            StepOperator::lanczos_default(),
            StepOperator::CrankNicolson,
            StepOperator::SplitOperator,
        ] {
            let out = step(&psi0, &h, dt, op).unwrap();
            let phase = Complex64::new(0.0, -e0 * dt).exp();
            let mut diff = 0.0f64;
            for (a, b) in out.state.values().iter().zip(psi0.values().iter()) {
                diff = diff.max((a - phase * b).norm());
            }
            let tol = match op {
                StepOperator::SplitOperator => 1e-7,
                _ => 1e-10,
            };
            assert!(diff < tol, "{op:?}: phase error {diff}");
        }
    }

    #[test]
    fn spo_exact_for_plane_wave() {
        let g = ring(32);
        let l = 10.0;
        let k = 3.0 * 2.0 * PI / l;
        let phi = g.complex_from_fn(|x| Complex64::new(0.0, k * x[0]).exp() / l.sqrt());
        let psi = WaveFunction::new(g.clone(), 1, Symmetry::None, phi.values().clone()).unwrap();
        let spec = HamiltonianSpec::new(g.clone(), Interaction::None, g.zeros_scalar()).unwrap();
        let h = spec.assemble(1).unwrap();
        let dt = 0.05;
        let out = step(&psi, &h, dt, StepOperator::SplitOperator).unwrap();
        let phase = Complex64::new(0.0, -0.5 * k * k * dt).exp();
        for (a, b) in out.state.values().iter().zip(psi.values().iter()) {
            assert!((a - phase * b).norm() < 1e-12);
        }
    }

    #[test]
    fn unitarity_per_step() {
        let g = ring(32);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let phi = g.complex_from_fn(|x| {
            Complex64::new(
                (2.0 * PI * x[0] / 10.0).cos(),
                (4.0 * PI * x[0] / 10.0).sin(),
            ) + Complex64::new(0.2, 0.1)
        });
        let psi = WaveFunction::new(g.clone(), 1, Symmetry::None, phi.values().clone())
            .unwrap()
            .normalized();
        for op in [StepOperator::CrankNicolson, StepOperator::SplitOperator] {
            let out = step(&psi, &h, 5e-3, op).unwrap();
            assert!(
                (out.state.norm() - 1.0).abs() < 1e-12,
                "{op:?}: norm drift {}",
                out.state.norm() - 1.0
            );
        }
        let out = step(&psi, &h, 5e-3, StepOperator::lanczos_default()).unwrap();
        assert!((out.state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_expv_exact_cases() {
        let g = ring(16);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let (e0, psi0) = eigenstates(&spec, 1, Symmetry::None, 1, &EigenOptions::default())
            .unwrap()
            .remove(0);
        // Eigenstate: exact already in a tiny subspace.
        let (out, _est) = lanczos_expv(&psi0, &h, 0.01, 4).unwrap();
        let phase = Complex64::new(0.0, -e0 * 0.01).exp();
        let mut diff = 0.0f64;
        for (a, b) in out.values().iter().zip(psi0.values().iter()) {
            diff = diff.max((a - phase * b).norm());
        }
        assert!(diff < 1e-9, "eigenstate expv error {diff}");

        // m = dim: exact for arbitrary states.
        let phi = g.complex_from_fn(|x| {
            Complex64::new(
                1.0 + (2.0 * PI * x[0] / 10.0).cos(),
                (6.0 * PI * x[0] / 10.0).sin(),
            )
        });
        let psi = WaveFunction::new(g.clone(), 1, Symmetry::None, phi.values().clone())
            .unwrap()
            .normalized();
        let (full, est) = lanczos_expv(&psi, &h, 0.05, 16).unwrap();
        let (reference, _) = lanczos_expv(&psi, &h, 0.05, 40).unwrap();
        let mut diff = 0.0f64;
        for (a, b) in full.values().iter().zip(reference.values().iter()) {
            diff = diff.max((a - b).norm());
        }
        assert!(diff < 1e-12);
        assert!(est < 1e-12);
    }

    #[test]
    fn lanczos_error_decreases_with_m() {
        let g = ring(32);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let phi = g.complex_from_fn(|x| {
            Complex64::new(
                (-(x[0] - 3.0).powi(2)).exp(),
                0.3 * (-(x[0] - 7.0).powi(2)).exp(),
            ) + Complex64::new(0.1, 0.0)
        });
        let psi = WaveFunction::new(g.clone(), 1, Symmetry::None, phi.values().clone())
            .unwrap()
            .normalized();
        let dt = 0.05;
        let (exact, _) = lanczos_expv(&psi, &h, dt, 32).unwrap();
        let mut prev = f64::INFINITY;
        for m in [4, 6, 8, 10] {
            let (out, _) = lanczos_expv(&psi, &h, dt, m).unwrap();
            let mut diff = 0.0f64;
            for (a, b) in out.values().iter().zip(exact.values().iter()) {
                diff = diff.max((a - b).norm());
            }
            assert!(diff < prev, "error not decreasing at m={m}: {diff} vs {prev}");
            prev = diff;
        }
    }

    #[test]
    fn sod_needs_history() {
        let g = ring(16);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let psi = WaveFunction::new(
            g.clone(),
            1,
            Symmetry::None,
            g.complex_from_fn(|_| Complex64::new(1.0, 0.0)).values().clone(),
        )
        .unwrap()
        .normalized();
        let mut stepper = Stepper::new(StepOperator::SecondOrderDifferencing).unwrap();
        assert!(stepper.step(&psi, &h, 1e-3).is_err());
        stepper.seed_previous(psi.clone());
        assert!(stepper.step(&psi, &h, 1e-3).is_ok());
    }

    #[test]
    fn strategy_a_time_independent_equals_repeated_step() {
        let g = ring(24);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let psi0 = eigenstates(&spec, 1, Symmetry::None, 2, &EigenOptions::default())
            .unwrap()
            .remove(1)
            .1;
        let plan = StepPlan::new(Strategy::A, 0.01, 0.1).unwrap();
        let mut provider = PotentialProvider::new(h.clone(), {
            let g = g.clone();
            move |_t| g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos())
        });
        let traj = run(&plan, &mut provider, &psi0, StepOperator::lanczos_default()).unwrap();
        let mut manual = psi0.clone();
        for _ in 0..10 {
            manual = step(&manual, &h, 0.01, StepOperator::lanczos_default())
                .unwrap()
                .state;
        }
        let last = traj.states.last().unwrap();
        let mut diff = 0.0f64;
        for (a, b) in last.values().iter().zip(manual.values().iter()) {
            diff = diff.max((a - b).norm());
        }
        assert!(diff < 1e-12, "strategy A vs repeated step: {diff}");
    }

    #[test]
    fn time_reversal_round_trip() {
        let g = ring(32);
        let spec = cosine_spec(&g);
        let h0 = spec.assemble(1).unwrap();
        let psi0 = eigenstates(&spec, 1, Symmetry::None, 3, &EigenOptions::default())
            .unwrap()
            .remove(2)
            .1;
        let vt = |t: f64, g: &Grid| {
            g.scalar_from_fn(move |x| {
                -(2.0 * PI * x[0] / 10.0).cos() + 0.3 * t * (2.0 * PI * x[0] / 10.0).sin()
            })
        };
        let dt = 2e-3;
        let steps = 40;
        for op in [StepOperator::CrankNicolson, StepOperator::SplitOperator] {
            let mut psi = psi0.clone();
            for n in 0..steps {
                let tm = (n as f64 + 0.5) * dt;
                let h = h0.replace_potential(&vt(tm, &g)).unwrap();
                psi = step(&psi, &h, dt, op).unwrap().state;
            }
            for n in (0..steps).rev() {
                let tm = (n as f64 + 0.5) * dt;
                let h = h0.replace_potential(&vt(tm, &g)).unwrap();
                psi = step(&psi, &h, -dt, op).unwrap().state;
            }
            let mut diff = 0.0f64;
            for (a, b) in psi.values().iter().zip(psi0.values().iter()) {
                diff = diff.max((a - b).norm());
            }
            assert!(diff < 1e-8, "{op:?} reversal error {diff}");
        }
    }

    #[test]
    fn strategy_c_produces_oscillation_metric() {
        let g = ring(24);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let states = eigenstates(&spec, 1, Symmetry::None, 2, &EigenOptions::default()).unwrap();
        // Superposition gives a moving dipole.
        let mut v = states[0].1.values().clone();
        v.zip_mut_with(states[1].1.values(), |a, b| *a = (*a + b) / 2.0f64.sqrt());
        let psi0 = WaveFunction::new(g.clone(), 1, Symmetry::None, v)
            .unwrap()
            .normalized();
        let plan = StepPlan::new(Strategy::C, 0.02, 1.0).unwrap();
        let mut provider = PotentialProvider::new(h, {
            let g = g.clone();
            move |_t| g.scalar_from_fn(|x| -(2.0 * PI * x[0] / 10.0).cos())
        });
        let traj = run(&plan, &mut provider, &psi0, StepOperator::SplitOperator).unwrap();
        assert!(traj.chain_oscillation.is_some());
        assert_eq!(traj.diagnostics.len(), 50);
    }

    #[test]
    fn strategy_c_rejects_adaptive() {
        let plan = StepPlan::new(Strategy::C, 0.01, 1.0).unwrap().adaptive(1e-9);
        assert!(plan.is_err());
    }

    #[test]
    fn strategy_d_redirects_to_tracking() {
        let g = ring(16);
        let spec = cosine_spec(&g);
        let h = spec.assemble(1).unwrap();
        let psi = WaveFunction::new(
            g.clone(),
            1,
            Symmetry::None,
            g.complex_from_fn(|_| Complex64::new(1.0, 0.0)).values().clone(),
        )
        .unwrap()
        .normalized();
        let plan = StepPlan::new(Strategy::D, 0.01, 1.0).unwrap();
        let mut provider = PotentialProvider::new(h, {
            let g = g.clone();
            move |_t| g.zeros_scalar()
        });
        assert!(run(&plan, &mut provider, &psi, StepOperator::lanczos_default()).is_err());
    }
}

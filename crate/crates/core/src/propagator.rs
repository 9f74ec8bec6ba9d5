//! Fixed-step time evolution with steps aligned to schedule breakpoints.
//!
//! States obey `dψ/dt = -i s H(t) ψ` where `s` is the phase scale of the
//! dynamics (`2π` when energies are in cycles per unit time). Every interval
//! between consecutive breakpoints is split into equal steps no longer than
//! the requested step, so no step straddles a discontinuity. Inside a step the
//! Hamiltonian is evaluated on the linear piece active at the step midpoint.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::ReferenceEigenbasis;
use crate::pulse::{merged_breakpoints, PulseSchedule};
use crate::{linalg, Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Anything that can supply `H(t)` to the integrators.
pub trait Dynamics {
    fn dim(&self) -> usize;

    /// Whether `H(t)` is Hermitian at all times.
    fn is_hermitian(&self) -> bool;

    /// Times where `H(t)` or its slope jumps, ascending.
    fn breakpoints(&self) -> Vec<f64>;

    fn phase_scale(&self) -> f64 {
        1.0
    }

    /// `H(t)` on the piece active at `anchor`, written into `out`.
    fn hamiltonian_into(&self, t: f64, anchor: f64, out: &mut DMatrix<C64>);

    fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        self.hamiltonian_into(t, t, &mut out);
        out
    }
}

/// `H(t) = H0 + Σ_k D_k f_k(t)` with diagonal `D_k` and piecewise-linear `f_k`.
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    base: DMatrix<C64>,
    bias_terms: Vec<(DVector<C64>, PulseSchedule)>,
    hermitian: bool,
    phase_scale: f64,
}

impl TimeDependentHamiltonian {
    /// `hermitian` declares the intended symmetry; a declared-Hermitian base
    /// that is not Hermitian is rejected.
    pub fn new(base: DMatrix<C64>, hermitian: bool) -> Result<Self> {
        if !base.is_square() {
            return Err(Error::Dimension { expected: base.nrows(), got: base.ncols() });
        }
        if hermitian && !linalg::is_hermitian(&base) {
            return Err(Error::Contract(format!(
                "base matrix declared Hermitian deviates by {:.3e}",
                linalg::hermitian_deviation(&base)
            )));
        }
        Ok(Self { base, bias_terms: Vec::new(), hermitian, phase_scale: 1.0 })
    }

    pub fn with_phase_scale(mut self, scale: f64) -> Self {
        self.phase_scale = scale;
        self
    }

    pub fn with_bias(mut self, diagonal: DVector<C64>, schedule: PulseSchedule) -> Result<Self> {
        if diagonal.len() != self.base.nrows() {
            return Err(Error::Dimension { expected: self.base.nrows(), got: diagonal.len() });
        }
        if self.hermitian && diagonal.iter().any(|z| z.im != 0.0) {
            return Err(Error::Contract("complex bias on a Hermitian Hamiltonian".into()));
        }
        self.bias_terms.push((diagonal, schedule));
        Ok(self)
    }

    pub fn base(&self) -> &DMatrix<C64> {
        &self.base
    }

    pub fn schedules(&self) -> impl Iterator<Item = &PulseSchedule> {
        self.bias_terms.iter().map(|(_, s)| s)
    }

    /// `H(t)` in energy units, without the phase scale.
    pub fn energy_matrix(&self, t: f64) -> DMatrix<C64> {
        Dynamics::hamiltonian(self, t)
    }

    /// `H(t⁻)`, the left-hand limit at a discontinuity.
    pub fn energy_matrix_left(&self, t: f64) -> DMatrix<C64> {
        let mut out = self.base.clone();
        for (diag, schedule) in &self.bias_terms {
            let f = schedule.left_limit(t);
            for k in 0..diag.len() {
                out[(k, k)] += diag[k] * f;
            }
        }
        out
    }

    /// Bias values of every term at `t`.
    pub fn bias_values(&self, t: f64) -> Vec<f64> {
        self.bias_terms.iter().map(|(_, s)| s.evaluate(t)).collect()
    }
}

impl Dynamics for TimeDependentHamiltonian {
    fn dim(&self) -> usize {
        self.base.nrows()
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    fn breakpoints(&self) -> Vec<f64> {
        merged_breakpoints(self.schedules())
    }

    fn phase_scale(&self) -> f64 {
        self.phase_scale
    }

    fn hamiltonian_into(&self, t: f64, anchor: f64, out: &mut DMatrix<C64>) {
        out.copy_from(&self.base);
        for (diag, schedule) in &self.bias_terms {
            let f = schedule.evaluate_on_piece(t, anchor);
            if f != 0.0 {
                for k in 0..diag.len() {
                    out[(k, k)] += diag[k] * f;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Fourth-order Magnus expansion with two Gauss points; unitary to
    /// round-off for Hermitian `H`.
    Magnus4,
    /// Classical Runge-Kutta; used for non-Hermitian dynamics.
    Rk4,
}

impl Integrator {
    pub fn default_for(dynamics: &dyn Dynamics) -> Self {
        if dynamics.is_hermitian() {
            Integrator::Magnus4
        } else {
            Integrator::Rk4
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub step: f64,
    /// `None` picks Magnus for Hermitian and RK4 otherwise.
    pub integrator: Option<Integrator>,
    /// Record every `stride`-th step; zero keeps only the endpoints.
    pub record_stride: usize,
    /// Norm growth beyond this factor counts as divergence.
    pub divergence_norm: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { step: 1e-3, integrator: None, record_stride: 0, divergence_norm: 1e6 }
    }
}

impl StepOptions {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    pub fn integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = Some(integrator);
        self
    }

    pub fn record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }
}

/// Recorded samples of an evolution. Each state is a column block with the
/// same shape as the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<C64>>,
    pub integrator: Integrator,
    pub steps_taken: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DMatrix<C64> {
        self.states.last().expect("a trajectory always holds its endpoints")
    }

    pub fn final_vector(&self) -> DVector<C64> {
        self.final_state().column(0).into_owned()
    }

    /// `t,re_c1,im_c1,...` for the first column of every sample.
    pub fn amplitudes_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.nrows());
        let mut out = String::from("t");
        for k in 1..=n {
            let _ = write!(out, ",re_c{k},im_c{k}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.9}");
            for z in s.column(0).iter() {
                let _ = write!(out, ",{:.12e},{:.12e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }

    /// `t,p1,...` with populations on the basis states.
    pub fn site_probabilities_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.nrows());
        let header: Vec<String> = (1..=n).map(|k| format!("p{k}")).collect();
        self.probability_csv(&header, |psi| psi.iter().map(|z| z.norm_sqr()).collect())
    }

    /// `t,p1,...` with populations on the reference eigenbasis.
    pub fn reference_probabilities_csv(&self, basis: &ReferenceEigenbasis) -> String {
        let header: Vec<String> = (1..=basis.len()).map(|k| format!("p{k}")).collect();
        self.probability_csv(&header, |psi| basis.populations(psi))
    }

    fn probability_csv(&self, header: &[String], probs: impl Fn(&DVector<C64>) -> Vec<f64>) -> String {
        let mut out = String::from("t");
        for h in header {
            out.push(',');
            out.push_str(h);
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.9}");
            for p in probs(&s.column(0).into_owned()) {
                let _ = write!(out, ",{p:.12e}");
            }
            out.push('\n');
        }
        out
    }
}

/// Step grid over `[t0, t1]`: interval boundaries including interior
/// breakpoints, with the number of equal steps in each interval.
fn step_plan(breakpoints: &[f64], t0: f64, t1: f64, step: f64) -> Result<Vec<(f64, f64, usize)>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Input(format!("step must be positive, got {step}")));
    }
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Input(format!("invalid time window [{t0}, {t1}]")));
    }
    let gap = breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if step > gap * (1.0 + 1e-12) {
        return Err(Error::Step { step, gap });
    }
    let mut cuts = vec![t0];
    cuts.extend(breakpoints.iter().copied().filter(|&b| b > t0 + 1e-12 && b < t1 - 1e-12));
    cuts.push(t1);
    Ok(cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let n = ((w[1] - w[0]) / step - 1e-9).ceil().max(1.0) as usize;
            (w[0], w[1], n)
        })
        .collect())
}

struct Stepper<'a> {
    dynamics: &'a dyn Dynamics,
    integrator: Integrator,
    scale: f64,
    h1: DMatrix<C64>,
    h2: DMatrix<C64>,
    h3: DMatrix<C64>,
    cached: Option<(f64, DMatrix<C64>, DMatrix<C64>)>,
}

impl<'a> Stepper<'a> {
    fn new(dynamics: &'a dyn Dynamics, integrator: Integrator) -> Self {
        let n = dynamics.dim();
        Self {
            dynamics,
            integrator,
            scale: dynamics.phase_scale(),
            h1: DMatrix::zeros(n, n),
            h2: DMatrix::zeros(n, n),
            h3: DMatrix::zeros(n, n),
            cached: None,
        }
    }

    fn step(&mut self, t: f64, h: f64, psi: &DMatrix<C64>) -> DMatrix<C64> {
        match self.integrator {
            Integrator::Magnus4 => self.magnus(t, h, psi),
            Integrator::Rk4 => self.rk4(t, h, psi),
        }
    }

    fn magnus(&mut self, t: f64, h: f64, psi: &DMatrix<C64>) -> DMatrix<C64> {
        let anchor = t + 0.5 * h;
        let d = 3f64.sqrt() / 6.0;
        self.dynamics.hamiltonian_into(t + (0.5 - d) * h, anchor, &mut self.h1);
        self.dynamics.hamiltonian_into(t + (0.5 + d) * h, anchor, &mut self.h2);
        if let Some((ch, key, u)) = &self.cached {
            if *ch == h && self.h1 == self.h2 && *key == self.h1 {
                return u * psi;
            }
        }
        let mut eff = (&self.h1 + &self.h2) * C64::new(0.5, 0.0);
        let commutator = &self.h2 * &self.h1 - &self.h1 * &self.h2;
        eff -= commutator * (I * (3f64.sqrt() * h * self.scale / 12.0));
        let u = if self.dynamics.is_hermitian() {
            let (vals, vecs) = linalg::eigh(&eff);
            let phases = DVector::from_iterator(vals.len(), vals.iter().map(|&l| (-I * (h * self.scale * l)).exp()));
            let mut scaled = vecs.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= phases[j];
            }
            scaled * vecs.adjoint()
        } else {
            (eff * (-I * (h * self.scale))).exp()
        };
        let out = &u * psi;
        if self.h1 == self.h2 {
            self.cached = Some((h, self.h1.clone(), u));
        }
        out
    }

    fn rk4(&mut self, t: f64, h: f64, psi: &DMatrix<C64>) -> DMatrix<C64> {
        let anchor = t + 0.5 * h;
        let a = -I * self.scale;
        self.dynamics.hamiltonian_into(t, anchor, &mut self.h1);
        self.dynamics.hamiltonian_into(t + 0.5 * h, anchor, &mut self.h2);
        self.dynamics.hamiltonian_into(t + h, anchor, &mut self.h3);
        let half = C64::new(0.5 * h, 0.0);
        let k1 = (&self.h1 * psi) * a;
        let k2 = (&self.h2 * (psi + &k1 * half)) * a;
        let k3 = (&self.h2 * (psi + &k2 * half)) * a;
        let k4 = (&self.h3 * (psi + &k3 * C64::new(h, 0.0))) * a;
        psi + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
    }
}

/// Evolves a state (or a block of states as columns) from `t0` to `t1`.
pub fn evolve(
    dynamics: &dyn Dynamics,
    psi0: &DMatrix<C64>,
    t0: f64,
    t1: f64,
    options: &StepOptions,
) -> Result<Trajectory> {
    if psi0.nrows() != dynamics.dim() {
        return Err(Error::Dimension { expected: dynamics.dim(), got: psi0.nrows() });
    }
    let integrator = options.integrator.unwrap_or_else(|| Integrator::default_for(dynamics));
    let plan = step_plan(&dynamics.breakpoints(), t0, t1, options.step)?;
    let mut stepper = Stepper::new(dynamics, integrator);
    let norm0 = psi0.norm().max(f64::MIN_POSITIVE);
    let limit = norm0 * options.divergence_norm;

    let mut psi = psi0.clone();
    let mut times = vec![t0];
    let mut states = vec![psi.clone()];
    let mut count = 0usize;
    for (a, b, n) in plan {
        let h = (b - a) / n as f64;
        for k in 0..n {
            let t = a + k as f64 * h;
            psi = stepper.step(t, h, &psi);
            count += 1;
            let t_next = if k + 1 == n { b } else { a + (k + 1) as f64 * h };
            let norm = psi.norm();
            if !norm.is_finite() || norm > limit {
                return Err(Error::Divergence { t: t_next });
            }
            if options.record_stride > 0 && count % options.record_stride == 0 {
                times.push(t_next);
                states.push(psi.clone());
            }
        }
    }
    if times.last() != Some(&t1) || states.len() == 1 {
        times.push(t1);
        states.push(psi);
    }
    Ok(Trajectory { times, states, integrator, steps_taken: count })
}

/// Single-vector convenience wrapper around [`evolve`].
pub fn evolve_state(
    dynamics: &dyn Dynamics,
    psi0: &DVector<C64>,
    t0: f64,
    t1: f64,
    options: &StepOptions,
) -> Result<DVector<C64>> {
    let m = DMatrix::from_column_slice(psi0.len(), 1, psi0.as_slice());
    Ok(evolve(dynamics, &m, t0, t1, options)?.final_vector())
}

/// The full propagator `U(t1, t0)`.
pub fn propagator_matrix(dynamics: &dyn Dynamics, t0: f64, t1: f64, options: &StepOptions) -> Result<DMatrix<C64>> {
    let id = DMatrix::identity(dynamics.dim(), dynamics.dim());
    let opts = StepOptions { record_stride: 0, ..*options };
    Ok(evolve(dynamics, &id, t0, t1, &opts)?.final_state().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub step: f64,
    /// `max |ψ_h - ψ_{h/2}|` over final amplitudes.
    pub difference: f64,
    /// `max |ψ_{h/2} - ψ_{h/4}|`, when requested.
    pub difference_refined: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    /// Ratio of successive differences; about `2^p` for an order-`p` method.
    pub fn order_ratio(&self) -> Option<f64> {
        self.difference_refined.map(|d| self.difference / d)
    }
}

pub const CONVERGENCE_THRESHOLD: f64 = 1e-7;

/// Runs at `step` and `step/2` (and `step/4` if `refine`) and compares final
/// amplitudes.
pub fn convergence_check(
    dynamics: &dyn Dynamics,
    psi0: &DMatrix<C64>,
    t0: f64,
    t1: f64,
    options: &StepOptions,
    refine: bool,
) -> Result<ConvergenceReport> {
    let run = |h: f64| -> Result<DMatrix<C64>> {
        let opts = StepOptions { step: h, record_stride: 0, ..*options };
        Ok(evolve(dynamics, psi0, t0, t1, &opts)?.final_state().clone())
    };
    let a = run(options.step)?;
    let b = run(options.step / 2.0)?;
    let difference = linalg::max_abs_diff(&a, &b);
    let difference_refined = if refine { Some(linalg::max_abs_diff(&b, &run(options.step / 4.0)?)) } else { None };
    Ok(ConvergenceReport {
        step: options.step,
        difference,
        difference_refined,
        threshold: CONVERGENCE_THRESHOLD,
        passed: difference <= CONVERGENCE_THRESHOLD,
    })
}

/// Basis vector `e_k` as an `n × 1` block.
pub fn basis_state(n: usize, k: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, 1);
    m[(k, 0)] = C64::new(1.0, 0.0);
    m
}

//! Two three-level atoms in a damped cavity.
//!
//! Ten amplitudes are tracked. The weakly linked triple
//! `{|10>_0, |a>_0, |11>_0}` is decoherence free because every other state
//! couples strongly to the cavity and decays with it. A slow common sweep of
//! the laser detunings swaps `|10>_0` and `|11>_0` (a CNOT) while `|a>_0`
//! stays put.
//!
//! The amplitude equations are tabulated term by term in
//! [`printed_terms`]. Two readings are offered:
//!
//! * [`Convention::Printed`] uses the table literally, `dc/dt = M c`. Some of
//!   its symmetric coupling pairs grow exponentially, so runs diverge.
//! * [`Convention::Schrodinger`] reads each cavity coupling `X` as a
//!   Hamiltonian element `H = X` (`dc/dt = -i H c`), keeps the laser and decay
//!   terms, and completes `H` Hermitian from the first appearance of every
//!   coupled pair in row order. Decay stays a `-iκ` diagonal.

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bloc::{hazard_check, partition, HazardReport, LinkStructure};
use crate::propagator::{evolve, Dynamics, StepOptions, Trajectory};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Basis states in amplitude order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CavityState {
    #[serde(rename = "a0")]
    A0,
    #[serde(rename = "10_0")]
    Ten0,
    #[serde(rename = "11_0")]
    Eleven0,
    #[serde(rename = "s0")]
    S0,
    #[serde(rename = "11_1")]
    Eleven1,
    #[serde(rename = "s1")]
    S1,
    #[serde(rename = "22_0")]
    TwentyTwo0,
    #[serde(rename = "20_0")]
    Twenty0,
    #[serde(rename = "10_1")]
    Ten1,
    #[serde(rename = "11_2")]
    Eleven2,
}

pub const N_STATES: usize = 10;

impl CavityState {
    pub const ALL: [CavityState; N_STATES] = [
        CavityState::A0,
        CavityState::Ten0,
        CavityState::Eleven0,
        CavityState::S0,
        CavityState::Eleven1,
        CavityState::S1,
        CavityState::TwentyTwo0,
        CavityState::Twenty0,
        CavityState::Ten1,
        CavityState::Eleven2,
    ];

    /// The decoherence-free triple.
    pub const DFS: [CavityState; 3] = [CavityState::A0, CavityState::Ten0, CavityState::Eleven0];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            CavityState::A0 => "a0",
            CavityState::Ten0 => "10_0",
            CavityState::Eleven0 => "11_0",
            CavityState::S0 => "s0",
            CavityState::Eleven1 => "11_1",
            CavityState::S1 => "s1",
            CavityState::TwentyTwo0 => "22_0",
            CavityState::Twenty0 => "20_0",
            CavityState::Ten1 => "10_1",
            CavityState::Eleven2 => "11_2",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().trim_start_matches('|').trim_end_matches('>');
        let t = match t {
            "10" => "10_0",
            "11" => "11_0",
            "a" => "a0",
            other => other,
        };
        Self::ALL
            .into_iter()
            .find(|s| s.label() == t)
            .ok_or_else(|| Error::Input(format!("unknown cavity state {text:?}")))
    }

    /// CNOT partner: `10_0 ↔ 11_0`, everything else maps to itself.
    pub fn cnot_target(self) -> Self {
        match self {
            CavityState::Ten0 => CavityState::Eleven0,
            CavityState::Eleven0 => CavityState::Ten0,
            s => s,
        }
    }
}

impl fmt::Display for CavityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `Δ(t) = value0 + slope · t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRamp {
    pub value0: f64,
    pub slope: f64,
}

impl LinearRamp {
    pub fn constant(value: f64) -> Self {
        Self { value0: value, slope: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.value0 + self.slope * t
    }

    /// `∫_0^t Δ`.
    pub fn integral(&self, t: f64) -> f64 {
        self.value0 * t + 0.5 * self.slope * t * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega: f64,
    pub g: f64,
    pub kappa: f64,
    pub delta_a: LinearRamp,
    pub delta_b: LinearRamp,
}

impl CavityParams {
    pub fn new(omega: f64, g: f64, kappa: f64, delta_a: LinearRamp, delta_b: LinearRamp) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Input(format!("omega must be positive, got {omega}")));
        }
        if !(g >= 0.0) || !(kappa >= 0.0) || !g.is_finite() || !kappa.is_finite() {
            return Err(Error::Input("g and kappa must be finite and non-negative".into()));
        }
        for r in [delta_a, delta_b] {
            if !r.value0.is_finite() || !r.slope.is_finite() {
                return Err(Error::Input("detuning ramps must be finite".into()));
            }
        }
        Ok(Self { omega, g, kappa, delta_a, delta_b })
    }

    /// `κ = g = 2000 Ω` with the standard CNOT sweep.
    pub fn cnot_default() -> Self {
        let (a, b) = cnot_schedule(10.0, 0.2).expect("valid default schedule");
        Self { omega: 1.0, g: 2000.0, kappa: 2000.0, delta_a: a, delta_b: b }
    }

    pub fn with_strong(mut self, g: f64, kappa: f64) -> Self {
        self.g = g;
        self.kappa = kappa;
        self
    }
}

/// `Δ_A(t) = Δ_B(t) = delta0 - rate · t`.
pub fn cnot_schedule(delta0: f64, rate: f64) -> Result<(LinearRamp, LinearRamp)> {
    if !(rate > 0.0) || !rate.is_finite() || !delta0.is_finite() {
        return Err(Error::Input(format!("sweep rate must be positive, got {rate}")));
    }
    let r = LinearRamp { value0: delta0, slope: -rate };
    Ok((r, r))
}

/// Time at which the sweep reaches `-delta0`.
pub fn cnot_duration(delta0: f64, rate: f64) -> f64 {
    2.0 * delta0 / rate
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Omega,
    DeltaA,
    DeltaB,
    G,
    Kappa,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Param::Omega => "Omega",
            Param::DeltaA => "Delta_A",
            Param::DeltaB => "Delta_B",
            Param::G => "g",
            Param::Kappa => "kappa",
        })
    }
}

/// `dc_row/dt ∋ coeff · param · c_col`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub row: CavityState,
    pub col: CavityState,
    pub param: Param,
    pub coeff: C64,
}

/// Every term of the amplitude equations, row by row.
pub fn printed_terms() -> Vec<Term> {
    use CavityState::*;
    use Param::*;
    let h = 0.5;
    let t = |row, col, param, re: f64, im: f64| Term { row, col, param, coeff: C64::new(re, im) };
    vec![
        t(A0, Ten0, Omega, 0.0, -h),
        t(A0, Eleven0, Omega, 0.0, h),
        t(A0, TwentyTwo0, Omega, 0.0, -h),
        t(A0, A0, DeltaA, 0.0, -h),
        t(A0, A0, DeltaB, 0.0, h),
        t(Ten0, A0, Omega, 0.0, -h),
        t(Ten0, Twenty0, Omega, 0.0, -h / SQRT_2),
        t(Ten0, S0, Omega, 0.0, -h),
        t(Ten0, Ten0, DeltaA, 0.0, -h),
        t(Ten0, Ten0, DeltaB, 0.0, -h),
        t(Eleven0, A0, Omega, 0.0, -h),
        t(Eleven0, Eleven0, DeltaA, 0.0, h),
        t(Eleven0, Eleven0, DeltaB, 0.0, h),
        t(S0, Ten0, Omega, 0.0, -h),
        t(S0, Eleven1, G, SQRT_2, 0.0),
        t(Eleven1, S0, G, SQRT_2, 0.0),
        t(Eleven1, Eleven1, Kappa, -1.0, 0.0),
        t(S1, TwentyTwo0, G, 1.0, 0.0),
        t(S1, Eleven2, G, -SQRT_2, 0.0),
        t(S1, S1, Kappa, -1.0, 0.0),
        t(TwentyTwo0, A0, Omega, 0.0, h),
        t(TwentyTwo0, Twenty0, Omega, 0.0, -h * SQRT_2),
        t(TwentyTwo0, S1, G, -1.0, 0.0),
        t(Twenty0, Ten0, Omega, 0.0, -h / SQRT_2),
        t(Twenty0, TwentyTwo0, Omega, 0.0, h * SQRT_2),
        t(Twenty0, Ten1, G, -1.0, 0.0),
        t(Ten1, Twenty0, G, 1.0, 0.0),
        t(Ten1, Ten1, Kappa, -1.0, 0.0),
        t(Eleven2, S1, G, SQRT_2, 0.0),
        t(Eleven2, Eleven2, Kappa, -2.0, 0.0),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Printed,
    Schrodinger,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::Printed, Convention::Schrodinger];
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Printed => "printed",
            Convention::Schrodinger => "schrodinger",
        })
    }
}

/// One line of the coefficient audit: the printed term and the Hamiltonian
/// element (per unit parameter) it turns into.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub row: CavityState,
    pub col: CavityState,
    pub param: Param,
    pub printed_re: f64,
    pub printed_im: f64,
    pub h_re: f64,
    pub h_im: f64,
    /// False when Hermitian completion overrode this term.
    pub used: bool,
}

/// Hamiltonian element per unit parameter for a printed term.
fn h_element(term: &Term, convention: Convention) -> C64 {
    match (convention, term.param) {
        (Convention::Schrodinger, Param::G) => term.coeff,
        _ => I * term.coeff,
    }
}

/// Per-unit Hamiltonian contributions `(row, col, param, value)` after the
/// convention is applied, plus the audit.
fn contributions(convention: Convention) -> (Vec<(usize, usize, Param, C64)>, Vec<AuditRow>) {
    let mut out = Vec::new();
    let mut audit = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for term in printed_terms() {
        let (r, c) = (term.row.index(), term.col.index());
        let h = h_element(&term, convention);
        let used = match convention {
            Convention::Printed => {
                out.push((r, c, term.param, h));
                true
            }
            Convention::Schrodinger if r == c => {
                out.push((r, c, term.param, h));
                true
            }
            Convention::Schrodinger => {
                if seen.insert((r.min(c), r.max(c))) {
                    out.push((r, c, term.param, h));
                    out.push((c, r, term.param, h.conj()));
                    true
                } else {
                    let mirror = out.iter().find(|e| e.0 == r && e.1 == c).map(|e| e.3);
                    mirror.is_some_and(|m| (m - h).norm() < 1e-15)
                }
            }
        };
        audit.push(AuditRow {
            row: term.row,
            col: term.col,
            param: term.param,
            printed_re: term.coeff.re,
            printed_im: term.coeff.im,
            h_re: h.re,
            h_im: h.im,
            used,
        });
    }
    (out, audit)
}

pub fn audit_table(convention: Convention) -> Vec<AuditRow> {
    contributions(convention).1
}

/// Audit as CSV: `row,col,param,printed,h,used`.
pub fn audit_csv(convention: Convention) -> String {
    let mut s = String::from("row,col,param,printed_re,printed_im,h_re,h_im,used\n");
    for a in audit_table(convention) {
        s.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
            a.row, a.col, a.param, a.printed_re, a.printed_im, a.h_re, a.h_im, a.used
        ));
    }
    s
}

/// The ten-state system as `H(t) = H_0 + Δ_A(t) D_A + Δ_B(t) D_B`, with
/// `dc/dt = -i H c`.
#[derive(Debug, Clone)]
pub struct CavitySystem {
    pub params: CavityParams,
    pub convention: Convention,
    static_part: DMatrix<C64>,
    diag_a: DVector<C64>,
    diag_b: DVector<C64>,
}

impl CavitySystem {
    /// `H_0` plus detuning diagonals at `t`.
    pub fn matrix_at(&self, t: f64) -> DMatrix<C64> {
        let mut m = self.static_part.clone();
        let (da, db) = (self.params.delta_a.value(t), self.params.delta_b.value(t));
        for k in 0..N_STATES {
            m[(k, k)] += self.diag_a[k] * da + self.diag_b[k] * db;
        }
        m
    }

    /// `M = -i H`, the generator as it appears in `dc/dt = M c`.
    pub fn generator_at(&self, t: f64) -> DMatrix<C64> {
        self.matrix_at(t) * (-I)
    }

    pub fn static_part(&self) -> &DMatrix<C64> {
        &self.static_part
    }
}

impl Dynamics for CavitySystem {
    fn dim(&self) -> usize {
        N_STATES
    }

    fn is_hermitian(&self) -> bool {
        false
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn hamiltonian_into(&self, t: f64, _anchor: f64, out: &mut DMatrix<C64>) {
        out.copy_from(&self.static_part);
        let (da, db) = (self.params.delta_a.value(t), self.params.delta_b.value(t));
        for k in 0..N_STATES {
            out[(k, k)] += self.diag_a[k] * da + self.diag_b[k] * db;
        }
    }
}

pub fn build_full_system(params: &CavityParams, convention: Convention) -> CavitySystem {
    let (terms, _) = contributions(convention);
    let mut static_part = DMatrix::zeros(N_STATES, N_STATES);
    let mut diag_a = DVector::zeros(N_STATES);
    let mut diag_b = DVector::zeros(N_STATES);
    for (r, c, param, v) in terms {
        match param {
            Param::Omega => static_part[(r, c)] += v * params.omega,
            Param::G => static_part[(r, c)] += v * params.g,
            Param::Kappa => static_part[(r, c)] += v * params.kappa,
            Param::DeltaA => diag_a[r] += v,
            Param::DeltaB => diag_b[r] += v,
        }
    }
    CavitySystem { params: *params, convention, static_part, diag_a, diag_b }
}

/// Index of each DFS state in the three-level effective basis
/// `{|10>_0, |a>_0, |11>_0}`.
pub fn effective_index(state: CavityState) -> Option<usize> {
    match state {
        CavityState::Ten0 => Some(0),
        CavityState::A0 => Some(1),
        CavityState::Eleven0 => Some(2),
        _ => None,
    }
}

/// Three-level Hamiltonian over `{|10>_0, |a>_0, |11>_0}` in the rotating
/// frame where the detunings appear on the diagonal.
pub fn effective_hamiltonian(omega: f64, delta_a: f64, delta_b: f64) -> DMatrix<C64> {
    let mut h = DMatrix::zeros(3, 3);
    h[(0, 0)] = C64::new(0.5 * (delta_a + delta_b), 0.0);
    h[(1, 1)] = C64::new(0.5 * (delta_b - delta_a), 0.0);
    h[(2, 2)] = C64::new(-0.5 * (delta_a + delta_b), 0.0);
    h[(0, 1)] = C64::new(0.5 * omega, 0.0);
    h[(1, 0)] = C64::new(0.5 * omega, 0.0);
    h[(1, 2)] = C64::new(-0.5 * omega, 0.0);
    h[(2, 1)] = C64::new(-0.5 * omega, 0.0);
    h
}

/// The effective model with time-dependent detunings.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveSystem {
    pub params: CavityParams,
}

impl Dynamics for EffectiveSystem {
    fn dim(&self) -> usize {
        3
    }

    fn is_hermitian(&self) -> bool {
        true
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn hamiltonian_into(&self, t: f64, _anchor: f64, out: &mut DMatrix<C64>) {
        let p = &self.params;
        out.copy_from(&effective_hamiltonian(p.omega, p.delta_a.value(t), p.delta_b.value(t)));
    }
}

/// The same triple before the frame change: no diagonal, with the detunings
/// carried as phases `exp(i ∫Δ)` on the laser couplings.
#[derive(Debug, Clone, Copy)]
pub struct PhaseFrameSystem {
    pub params: CavityParams,
}

impl Dynamics for PhaseFrameSystem {
    fn dim(&self) -> usize {
        3
    }

    fn is_hermitian(&self) -> bool {
        true
    }

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn hamiltonian_into(&self, t: f64, _anchor: f64, out: &mut DMatrix<C64>) {
        let p = &self.params;
        let half = 0.5 * p.omega;
        let ea = C64::from_polar(half, p.delta_a.integral(t));
        let eb = C64::from_polar(half, p.delta_b.integral(t));
        out.fill(C64::new(0.0, 0.0));
        out[(0, 1)] = ea;
        out[(1, 0)] = ea.conj();
        out[(1, 2)] = -eb;
        out[(2, 1)] = -eb.conj();
    }
}

/// Largest probability outside the DFS triple over the recorded samples.
/// Amplitude lost to decay does not count.
pub fn dfs_leakage(trajectory: &Trajectory, column: usize) -> f64 {
    trajectory
        .states
        .iter()
        .map(|s| {
            CavityState::ALL
                .iter()
                .filter(|st| !CavityState::DFS.contains(st))
                .map(|st| s[(st.index(), column)].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Largest increase of the norm between consecutive samples.
pub fn max_norm_increase(trajectory: &Trajectory, column: usize) -> f64 {
    let norms: Vec<f64> = trajectory.states.iter().map(|s| s.column(column).norm_squared()).collect();
    norms.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CnotReport {
    pub initial: CavityState,
    pub target: CavityState,
    /// Final `|c|²` of `10_0`, `a0`, `11_0`.
    pub final_dfs: [f64; 3],
    pub swap_fidelity: f64,
    pub dominant: CavityState,
    pub dfs_leakage: f64,
    pub final_norm: f64,
    pub max_norm_increase: f64,
}

/// Samples of the three DFS probabilities per initial state.
#[derive(Debug, Clone)]
pub struct CnotRun {
    pub reports: Vec<CnotReport>,
    pub trajectory: Trajectory,
    pub initials: Vec<CavityState>,
}

impl CnotRun {
    /// `t,P_<initial>` survival columns, one per initial state.
    pub fn survival_csv(&self) -> String {
        let mut s = String::from("t");
        for st in &self.initials {
            s.push_str(&format!(",P_{st}"));
        }
        s.push('\n');
        let idx: Vec<usize> = self.initials.iter().map(|st| self.row_of(*st)).collect();
        for (t, m) in self.trajectory.times.iter().zip(&self.trajectory.states) {
            s.push_str(&format!("{t:.6}"));
            for (c, &r) in idx.iter().enumerate() {
                s.push_str(&format!(",{:.10e}", m[(r, c)].norm_sqr()));
            }
            s.push('\n');
        }
        s
    }

    fn row_of(&self, st: CavityState) -> usize {
        if self.trajectory.states.first().map_or(0, |m| m.nrows()) == 3 {
            effective_index(st).expect("DFS state")
        } else {
            st.index()
        }
    }
}

fn block_of_initials(dim: usize, rows: &[usize]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, rows.len());
    for (c, &r) in rows.iter().enumerate() {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    m
}

fn dominant_of(pops: &[(CavityState, f64)]) -> CavityState {
    pops.iter().fold(pops[0], |a, b| if b.1 > a.1 { *b } else { a }).0
}

/// Full ten-state CNOT sweep over `[0, t_end]` from each initial state.
pub fn run_cnot(
    params: &CavityParams,
    convention: Convention,
    initials: &[CavityState],
    t_end: f64,
    options: &StepOptions,
) -> Result<CnotRun> {
    let system = build_full_system(params, convention);
    let rows: Vec<usize> = initials.iter().map(|s| s.index()).collect();
    let traj = evolve(&system, &block_of_initials(N_STATES, &rows), 0.0, t_end, options)?;
    let last = traj.final_state();
    let reports = initials
        .iter()
        .enumerate()
        .map(|(c, &init)| {
            let target = init.cnot_target();
            let pops: Vec<(CavityState, f64)> =
                CavityState::ALL.iter().map(|s| (*s, last[(s.index(), c)].norm_sqr())).collect();
            let p = |s: CavityState| last[(s.index(), c)].norm_sqr();
            CnotReport {
                initial: init,
                target,
                final_dfs: [p(CavityState::Ten0), p(CavityState::A0), p(CavityState::Eleven0)],
                swap_fidelity: p(target),
                dominant: dominant_of(&pops),
                dfs_leakage: dfs_leakage(&traj, c),
                final_norm: last.column(c).norm_squared(),
                max_norm_increase: max_norm_increase(&traj, c),
            }
        })
        .collect();
    Ok(CnotRun { reports, trajectory: traj, initials: initials.to_vec() })
}

/// The same sweep in the three-level effective model.
pub fn run_effective_cnot(params: &CavityParams, initials: &[CavityState], t_end: f64, options: &StepOptions) -> Result<CnotRun> {
    let rows = initials
        .iter()
        .map(|s| effective_index(*s).ok_or_else(|| Error::Input(format!("{s} is outside the decoherence-free triple"))))
        .collect::<Result<Vec<_>>>()?;
    let system = EffectiveSystem { params: *params };
    let traj = evolve(&system, &block_of_initials(3, &rows), 0.0, t_end, options)?;
    let last = traj.final_state();
    let reports = initials
        .iter()
        .enumerate()
        .map(|(c, &init)| {
            let p = |s: CavityState| last[(effective_index(s).expect("DFS state"), c)].norm_sqr();
            let pops: Vec<(CavityState, f64)> = CavityState::DFS.iter().map(|s| (*s, p(*s))).collect();
            let target = init.cnot_target();
            CnotReport {
                initial: init,
                target,
                final_dfs: [p(CavityState::Ten0), p(CavityState::A0), p(CavityState::Eleven0)],
                swap_fidelity: p(target),
                dominant: dominant_of(&pops),
                dfs_leakage: 0.0,
                final_norm: last.column(c).norm_squared(),
                max_norm_increase: max_norm_increase(&traj, c),
            }
        })
        .collect();
    Ok(CnotRun { reports, trajectory: traj, initials: initials.to_vec() })
}

/// Largest difference of basis probabilities between the phase form and the
/// diagonal-detuning form of the triple, over the recorded samples.
pub fn frame_equivalence(params: &CavityParams, psi0: &DVector<C64>, t_end: f64, options: &StepOptions) -> Result<f64> {
    let m0 = DMatrix::from_column_slice(3, 1, psi0.as_slice());
    let a = evolve(&PhaseFrameSystem { params: *params }, &m0, 0.0, t_end, options)?;
    let b = evolve(&EffectiveSystem { params: *params }, &m0, 0.0, t_end, options)?;
    let mut worst = 0.0_f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        for k in 0..3 {
            worst = worst.max((x[(k, 0)].norm_sqr() - y[(k, 0)].norm_sqr()).abs());
        }
    }
    Ok(worst)
}

/// Strong/weak analysis of the ten-state Hamiltonian at zero detuning.
/// The threshold is the geometric mean of `Ω` and `g`.
pub fn strong_block_hazards(params: &CavityParams, convention: Convention) -> Result<Vec<(Vec<String>, HazardReport)>> {
    let mut p = *params;
    p.delta_a = LinearRamp::constant(0.0);
    p.delta_b = LinearRamp::constant(0.0);
    let sys = build_full_system(&p, convention);
    let labels = CavityState::ALL.iter().map(|s| s.label().to_string()).collect();
    let structure = LinkStructure::from_matrix(sys.static_part().clone(), labels);
    let thr = (params.omega * params.g.max(params.omega)).sqrt();
    let part = partition(&structure, thr)?;
    let reports = hazard_check(&part, &structure, thr)?;
    Ok(reports.into_iter().map(|r| (part.blocs[r.bloc].labels.clone(), r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::propagator::Integrator;

    fn quiet(omega: f64, g: f64, kappa: f64) -> CavityParams {
        CavityParams::new(omega, g, kappa, LinearRamp::constant(0.0), LinearRamp::constant(0.0)).unwrap()
    }

    #[test]
    fn term_table_reproduces_the_amplitude_equations() {
        let p = CavityParams::new(1.3, 7.0, 3.0, LinearRamp::constant(0.4), LinearRamp::constant(-0.9)).unwrap();
        let m = build_full_system(&p, Convention::Printed).generator_at(0.0);
        use CavityState::*;
        let at = |r: CavityState, c: CavityState| m[(r.index(), c.index())];
        let close = |z: C64, re: f64, im: f64| (z - C64::new(re, im)).norm() < 1e-12;
        let (w, g, k, da, db) = (1.3, 7.0, 3.0, 0.4, -0.9);
        assert!(close(at(A0, Ten0), 0.0, -w / 2.0));
        assert!(close(at(A0, Eleven0), 0.0, w / 2.0));
        assert!(close(at(A0, A0), 0.0, -(da - db) / 2.0));
        assert!(close(at(Ten0, Twenty0), 0.0, -w / (2.0 * SQRT_2)));
        assert!(close(at(Ten0, Ten0), 0.0, -(da + db) / 2.0));
        assert!(close(at(Eleven0, Eleven0), 0.0, (da + db) / 2.0));
        assert!(close(at(S0, Eleven1), SQRT_2 * g, 0.0));
        assert!(close(at(Eleven1, Eleven1), -k, 0.0));
        assert!(close(at(S1, Eleven2), -SQRT_2 * g, 0.0));
        assert!(close(at(TwentyTwo0, A0), 0.0, w / 2.0));
        assert!(close(at(TwentyTwo0, Twenty0), 0.0, -w * SQRT_2 / 2.0));
        assert!(close(at(TwentyTwo0, S1), -g, 0.0));
        assert!(close(at(Twenty0, TwentyTwo0), 0.0, w * SQRT_2 / 2.0));
        assert!(close(at(Eleven2, Eleven2), -2.0 * k, 0.0));
        assert_eq!(printed_terms().len(), 30);
    }

    #[test]
    fn schrodinger_reading_is_hermitian_up_to_decay() {
        let p = quiet(1.0, 50.0, 0.0);
        let h = build_full_system(&p, Convention::Schrodinger).matrix_at(0.0);
        assert!(linalg::is_hermitian(&h));
        let audit = audit_table(Convention::Schrodinger);
        let overridden: Vec<(CavityState, CavityState)> = audit.iter().filter(|a| !a.used).map(|a| (a.row, a.col)).collect();
        use CavityState::*;
        assert!(overridden.contains(&(Eleven0, A0)));
        assert!(overridden.contains(&(TwentyTwo0, A0)));
        // The effective triple matches the three-level model.
        let idx = [Ten0.index(), A0.index(), Eleven0.index()];
        let sub = DMatrix::from_fn(3, 3, |r, c| h[(idx[r], idx[c])]);
        assert!(linalg::max_abs_diff(&sub, &effective_hamiltonian(1.0, 0.0, 0.0)) < 1e-15);
    }

    #[test]
    fn effective_hamiltonian_spectra() {
        let (vals, _) = linalg::eigh(&effective_hamiltonian(1.0, 0.0, 0.0));
        let r = 1.0 / SQRT_2;
        for (x, y) in vals.iter().zip([-r, 0.0, r]) {
            assert!((x - y).abs() < 1e-12);
        }
        let h = effective_hamiltonian(0.0, 1.5, -0.5);
        assert!((0..3).all(|i| (0..3).all(|j| i == j || h[(i, j)].norm() == 0.0)));
        assert_eq!(h[(0, 0)].re, 0.5);
        assert_eq!(h[(1, 1)].re, -1.0);
        assert_eq!(h[(2, 2)].re, -0.5);
    }

    #[test]
    fn schedule_endpoints() {
        let (a, b) = cnot_schedule(10.0, 0.2).unwrap();
        assert_eq!(a.value(0.0), 10.0);
        assert!(a.value(50.0).abs() < 1e-12);
        assert!((a.value(100.0) + 10.0).abs() < 1e-12);
        assert_eq!(a, b);
        assert_eq!(cnot_duration(10.0, 0.2), 100.0);
        assert!(cnot_schedule(10.0, 0.0).is_err());
    }

    #[test]
    fn isolated_cavity_line_decays_exponentially() {
        let p = CavityParams::new(1.0, 0.0, 3.0, LinearRamp::constant(0.0), LinearRamp::constant(0.0)).unwrap();
        let mut p0 = p;
        p0.omega = f64::MIN_POSITIVE;
        for conv in Convention::ALL {
            let sys = build_full_system(&p0, conv);
            let psi = block_of_initials(N_STATES, &[CavityState::Eleven1.index()]);
            let out = evolve(&sys, &psi, 0.0, 1.0, &StepOptions::with_step(1e-4)).unwrap();
            let c = out.final_state()[(CavityState::Eleven1.index(), 0)];
            assert!((c.re - (-3.0f64).exp()).abs() < 1e-10, "{conv}: {c}");
        }
    }

    #[test]
    fn zero_couplings_freeze_everything() {
        let mut p = quiet(1.0, 0.0, 0.0);
        p.omega = f64::MIN_POSITIVE;
        let sys = build_full_system(&p, Convention::Schrodinger);
        let psi = DMatrix::from_fn(N_STATES, 1, |r, _| C64::new(r as f64 + 1.0, 0.5));
        let out = evolve(&sys, &psi, 0.0, 5.0, &StepOptions::with_step(1e-2)).unwrap();
        assert!(linalg::max_abs_diff(out.final_state(), &psi) < 1e-12);
    }

    #[test]
    fn printed_reading_diverges() {
        let p = CavityParams::cnot_default();
        let err = run_cnot(&p, Convention::Printed, &[CavityState::Ten0], 100.0, &StepOptions::with_step(1e-4)).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn slow_detuning_is_frozen_without_drive() {
        let p = CavityParams::new(1e-9, 2000.0, 2000.0, LinearRamp::constant(10.0), LinearRamp::constant(10.0)).unwrap();
        let r = run_effective_cnot(&p, &[CavityState::Ten0], 100.0, &StepOptions::with_step(1e-2)).unwrap();
        assert!(r.reports[0].final_dfs[0] > 1.0 - 1e-9);
    }

    #[test]
    fn phase_form_matches_diagonal_form() {
        let p = CavityParams::new(1.0, 0.0, 0.0, LinearRamp { value0: 3.0, slope: -0.1 }, LinearRamp { value0: 1.0, slope: 0.05 }).unwrap();
        let psi = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let opts = StepOptions::with_step(1e-3).integrator(Integrator::Magnus4).record_stride(500);
        assert!(frame_equivalence(&p, &psi, 20.0, &opts).unwrap() < 1e-8);
    }

    #[test]
    fn hazard_needs_decay() {
        let p = CavityParams::cnot_default();
        let with = strong_block_hazards(&p, Convention::Schrodinger).unwrap();
        let without = strong_block_hazards(&p.with_strong(2000.0, 0.0), Convention::Schrodinger).unwrap();
        let chain = |v: &[(Vec<String>, HazardReport)]| {
            v.iter().find(|(l, _)| l.contains(&"11_2".to_string())).map(|(l, r)| (l.clone(), r.has_near_zero)).unwrap()
        };
        let (labels, flagged) = chain(&without);
        assert_eq!(labels, vec!["s1", "22_0", "11_2"]);
        assert!(flagged);
        assert!(!chain(&with).1);
    }
}

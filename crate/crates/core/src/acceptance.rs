//! End-to-end acceptance checks. Each criterion runs the real simulations at
//! its stated tolerance and reports what it measured.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bloc::{hazard_check, localization_check, partition, LinkStructure};
use crate::cavity::{self, CavityParams, CavityState, Convention};
use crate::chain::{embed_sector_state, BiasSign, ChainSystem, CouplingGraph, ReferenceEigenbasis, SectorBasis, Site};
use crate::permutation::{closure, compile, compile_with, primitive_table, realized_table, Permutation, PulseSequence, DEFAULT_TOL};
use crate::program::{plan_transfer, run_transfer, verify_sequence, HopOptions};
use crate::propagator::{convergence_check, evolve, StepOptions, Trajectory};
use crate::pulse::{Primitive, DEFAULT_TAU};
use crate::spectral::{predicted_path, track_levels, uniform_grid};
use crate::{linalg, Error, Result, C64};

/// Seed for the randomly chosen compiler targets.
pub const SEED: u64 = 20_240_611;
pub const CHAIN_STEP: f64 = 1e-3;
pub const CAVITY_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    pub values: Vec<(String, f64)>,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {} ({:.1} s)", self.id, self.name, self.summary, self.seconds)
    }
}

pub const CRITERIA: [(usize, &str); 11] = [
    (1, "single-pulse permutations"),
    (2, "compound interchange"),
    (3, "level-diagram consistency"),
    (4, "all 120 permutations"),
    (5, "strong-bloc spectra"),
    (6, "localization scaling"),
    (7, "eight-site transfer"),
    (8, "sector oracle"),
    (9, "cavity CNOT"),
    (10, "frame equivalence"),
    (11, "numerical hygiene"),
];

struct Check {
    passed: bool,
    summary: String,
    values: Vec<(String, f64)>,
}

impl Check {
    fn new(passed: bool, summary: impl Into<String>) -> Self {
        Self { passed, summary: summary.into(), values: Vec::new() }
    }

    fn value(mut self, key: impl Into<String>, v: f64) -> Self {
        self.values.push((key.into(), v));
        self
    }
}

/// Runs criterion `id`. Errors count as failures.
pub fn run(id: usize) -> Outcome {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown criterion");
    let start = Instant::now();
    let result = match id {
        1 => single_pulse_permutations(),
        2 => compound_interchange(),
        3 => level_diagram_consistency(),
        4 => all_permutations(),
        5 => strong_bloc_spectra(),
        6 => localization_scaling(),
        7 => eight_site_transfer(),
        8 => sector_oracle(),
        9 => cavity_cnot(),
        10 => frame_equivalence(),
        11 => numerical_hygiene(),
        _ => Err(Error::Input(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(c) => Outcome { id, name, passed: c.passed, summary: c.summary, values: c.values, seconds },
        Err(e) => Outcome { id, name, passed: false, summary: format!("error: {e}"), values: Vec::new(), seconds },
    }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|c| run(c.0)).collect()
}

fn chain_opts() -> StepOptions {
    StepOptions::with_step(CHAIN_STEP)
}

fn ref_block(basis: &ReferenceEigenbasis, ks: &[usize]) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(basis.len(), ks.len());
    for (c, &k) in ks.iter().enumerate() {
        m.set_column(c, &basis.state(k));
    }
    m
}

fn populations(basis: &ReferenceEigenbasis, m: &DMatrix<C64>, c: usize) -> Vec<f64> {
    basis.populations(&m.column(c).into_owned())
}

fn eq9_sequence() -> PulseSequence {
    PulseSequence::new(vec![Primitive::A, Primitive::B, Primitive::A], DEFAULT_TAU)
}

/// The interchange run: reference states #1, #2, #4, #5 evolved under a,b,a.
fn eq9_trajectory(stride: usize) -> Result<(ReferenceEigenbasis, Trajectory)> {
    let sys = ChainSystem::five_site();
    let basis = sys.reference_basis()?;
    let seq = eq9_sequence();
    let schedule = seq.schedule(Site(3))?.ok_or_else(|| Error::Input("empty sequence".into()))?;
    let h = sys.hamiltonian(&sys.single_bias(schedule))?;
    let traj = evolve(&h, &ref_block(&basis, &[0, 1, 3, 4]), 0.0, seq.total_duration(), &chain_opts().record_stride(stride))?;
    Ok((basis, traj))
}

fn single_pulse_permutations() -> Result<Check> {
    let nominal = primitive_table();
    let mut ok = true;
    let mut realized = Vec::new();
    let mut worst_fid = 1.0_f64;
    let mut worst_res = 0.0_f64;
    let mut slowest = 0.0_f64;
    let mut lowering = Vec::new();
    for p in Primitive::ALL {
        let seq = PulseSequence::new(vec![p], DEFAULT_TAU);
        let t = Instant::now();
        let r = verify_sequence(&seq, &ChainSystem::five_site(), &chain_opts(), DEFAULT_TOL)?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let target = nominal.get(p).expect("complete table");
        ok &= r.matches(target);
        worst_fid = worst_fid.min(r.min_fidelity);
        worst_res = worst_res.max(r.residual);
        let shown = r.permutation.as_ref().map_or("none".to_string(), |x| x.to_string());
        realized.push(format!("{p}={shown}{}", if r.matches(target) { "" } else { "!" }));
        let low = verify_sequence(&seq, &ChainSystem::five_site().with_sign(BiasSign::Lowering), &chain_opts(), DEFAULT_TOL)?;
        let low_ok = low.matches(target);
        lowering.push(format!("{p}{}", if low_ok { "" } else { "!" }));
    }
    ok &= slowest <= 10.0;
    Ok(Check::new(
        ok,
        format!(
            "raising bias: {} (! = differs from the nominal table); lowering bias mismatches: {}; min fidelity {:.4}, max residual {:.4}",
            realized.join(" "),
            lowering.join(" "),
            worst_fid,
            worst_res
        ),
    )
    .value("min_fidelity", worst_fid)
    .value("max_residual", worst_res)
    .value("slowest_pulse_s", slowest))
}

fn compound_interchange() -> Result<Check> {
    let (basis, traj) = eq9_trajectory(10)?;
    let last = traj.final_state();
    let p12 = populations(&basis, last, 0)[1];
    let p21 = populations(&basis, last, 1)[0];
    let mut keep4 = 1.0_f64;
    let mut keep5 = 1.0_f64;
    for m in &traj.states {
        keep4 = keep4.min(populations(&basis, m, 2)[3]);
        keep5 = keep5.min(populations(&basis, m, 3)[4]);
    }
    let ok = p12 > 0.99 && p21 > 0.99 && keep4 > 0.999 && keep5 > 0.999;
    Ok(Check::new(ok, format!("P(1->2) = {p12:.4}, P(2->1) = {p21:.4} (need > 0.99); min survival #4 {keep4:.5}, #5 {keep5:.5} (need > 0.999)"))
        .value("p_1_to_2", p12)
        .value("p_2_to_1", p21)
        .value("min_survival_4", keep4)
        .value("min_survival_5", keep5))
}

fn level_diagram_consistency() -> Result<Check> {
    let sys = ChainSystem::five_site();
    let basis = sys.reference_basis()?;
    let seq = eq9_sequence();
    let schedule = seq.schedule(Site(3))?.ok_or_else(|| Error::Input("empty sequence".into()))?;
    let h = sys.hamiltonian(&sys.single_bias(schedule))?;
    let checkpoints = [0.0, 20.0, 40.0, 60.0];
    let diagram = track_levels(&h, &uniform_grid(0.0, 60.0, 1201))?;
    let path = predicted_path(&diagram, &basis, 0, &checkpoints)?;

    let mut psi = DMatrix::from_column_slice(basis.len(), 1, basis.state(0).as_slice());
    let mut t = 0.0;
    let mut simulated = Vec::new();
    for &tc in &checkpoints {
        if tc > t {
            psi = evolve(&h, &psi, t, tc, &chain_opts())?.final_state().clone();
            t = tc;
        }
        let pops = populations(&basis, &psi, 0);
        let (k, w) = pops.iter().copied().enumerate().fold((0, 0.0), |a, (j, p)| if p > a.1 { (j, p) } else { a });
        simulated.push((tc, k, w));
    }
    let mut ok = !path.is_empty();
    let mut min_weight = 1.0_f64;
    for p in &path {
        let (_, k, w) = simulated.iter().find(|s| (s.0 - p.t).abs() < 1e-9).copied().expect("checkpoint");
        ok &= k == p.reference_state && w > 0.95;
        min_weight = min_weight.min(w);
    }
    let pred: Vec<String> = path.iter().map(|p| format!("#{}", p.reference_state + 1)).collect();
    let sim: Vec<String> = simulated.iter().map(|s| format!("#{}", s.1 + 1)).collect();
    Ok(Check::new(ok, format!("predicted {} at 0, 20-, 20+, 40-, 40+, 60-; simulated {} at 0, 20, 40, 60; min weight {min_weight:.4}", pred.join(" "), sim.join(" ")))
        .value("min_weight", min_weight))
}

fn all_permutations() -> Result<Check> {
    let table = primitive_table();
    let group = closure(&table);
    let mut sound = 0;
    for target in &group {
        let seq = compile(target)?;
        if &table.product(&seq.primitives)? == target {
            sound += 1;
        }
    }
    let mut pool: Vec<&Permutation> = group.iter().filter(|p| !p.is_identity()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    pool.shuffle(&mut rng);
    let realized = realized_table(BiasSign::Raising);
    let mut sim_ok = true;
    let mut worst_res = 0.0_f64;
    let mut picked = Vec::new();
    for target in pool.into_iter().take(5) {
        let seq = compile_with(target, &realized)?;
        let r = verify_sequence(&seq, &ChainSystem::five_site(), &chain_opts(), DEFAULT_TOL)?;
        sim_ok &= r.matches(target);
        worst_res = worst_res.max(r.residual);
        picked.push(format!("{target}:{}", seq.names()));
    }
    let ok = group.len() == 120 && sound == 120 && sim_ok && worst_res <= DEFAULT_TOL;
    Ok(Check::new(
        ok,
        format!(
            "closure {} elements, compile sound for {sound}; simulated (realized table) {} with max residual {worst_res:.4}",
            group.len(),
            picked.join(" ")
        ),
    )
    .value("closure_size", group.len() as f64)
    .value("sound", sound as f64)
    .value("max_residual", worst_res))
}

fn strong_bloc_spectra() -> Result<Check> {
    let s = 7.0;
    let pair = linalg::eigh_real(&DMatrix::from_row_slice(2, 2, &[0.0, s, s, 0.0])).0;
    let pair_err = (pair[0] + s).abs().max((pair[1] - s).abs());

    let (s12, s23) = (3.0, 4.0);
    let chain3 = DMatrix::from_row_slice(3, 3, &[0.0, s12, 0.0, s12, 0.0, s23, 0.0, s23, 0.0]);
    let vals = linalg::eigh_real(&chain3).0;
    let r = (s12 * s12 + s23 * s23).sqrt();
    let chain_err = [(-r), 0.0, r].iter().zip(&vals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let flagged = |st: &LinkStructure| -> Result<bool> {
        let p = partition(st, 1.0)?;
        Ok(hazard_check(&p, st, 0.5)?.iter().any(|h| h.has_near_zero))
    };
    let open = LinkStructure::from_graph(&CouplingGraph::new(3, &[(1, 2, s12), (2, 3, s23)])?);
    let closed = LinkStructure::from_graph(&CouplingGraph::new(3, &[(1, 2, s12), (2, 3, s23), (1, 3, s12)])?);
    let diag = open.clone().with_diagonal(0, C64::new(0.0, -20.0));
    let five = LinkStructure::from_graph(&CouplingGraph::open_chain(&[5.0, 6.0, 7.0, 8.0])?);
    let (f_open, f_closed, f_diag, f_five) = (flagged(&open)?, flagged(&closed)?, flagged(&diag)?, flagged(&five)?);
    let ok = pair_err < 1e-12 && chain_err < 1e-12 && f_open && !f_closed && !f_diag && f_five;
    Ok(Check::new(
        ok,
        format!(
            "pair error {pair_err:.1e}, 3-chain error {chain_err:.1e}; hazard flagged: 3-chain {f_open}, 5-chain {f_five}, with closing link {f_closed}, with strong diagonal {f_diag}"
        ),
    )
    .value("pair_error", pair_err)
    .value("chain_error", chain_err))
}

fn localization_scaling() -> Result<Check> {
    let lambdas = [0.25, 0.5, 1.0, 2.0];
    let five = |l: f64, g1: f64| -> Result<LinkStructure> { Ok(LinkStructure::from_graph(&CouplingGraph::open_chain(&[g1, l, l, 60.0])?)) };
    let mut leak = Vec::new();
    for &l in &lambdas {
        let st = five(l, 30.0)?;
        let r = localization_check(&st, &partition(&st, 10.0)?)?;
        leak.push(r.eigenvectors.iter().map(|e| 1.0 - e.weight).collect::<Vec<_>>());
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slopes: Vec<f64> = (0..leak[0].len())
        .map(|c| {
            let ys: Vec<f64> = leak.iter().map(|w| w[c].ln()).collect();
            let ym = ys.iter().sum::<f64>() / ys.len() as f64;
            xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>() / den
        })
        .collect();
    let worst = slopes.iter().map(|s| (s - 2.0).abs()).fold(0.0, f64::max);
    let eq = five(1.0, 60.0)?;
    let w_eq = localization_check(&eq, &partition(&eq, 10.0)?)?.min_weight;
    let ok = worst <= 0.3 && w_eq < 0.7;
    let shown: Vec<String> = slopes.iter().map(|s| format!("{s:.3}")).collect();
    Ok(Check::new(ok, format!("log-log slopes [{}] (need 2 ± 0.3); equal strong links give min bloc weight {w_eq:.3} (need < 0.7)", shown.join(", ")))
        .value("max_slope_deviation", worst)
        .value("equal_links_min_weight", w_eq))
}

fn eight_site_system() -> ChainSystem {
    ChainSystem::eight_site([30.0, 45.0, 60.0], 1.0)
}

const EIGHT_SITE_ROUTE: [usize; 5] = [0, 2, 3, 5, 6];

fn eight_site_transfer() -> Result<Check> {
    let sys = eight_site_system();
    let hop = HopOptions::default();
    let prog = plan_transfer(&sys, &EIGHT_SITE_ROUTE, &hop)?;
    let r = run_transfer(&sys, &prog, &chain_opts(), hop.gap)?;
    let basis = sys.reference_basis()?;
    let hops: Vec<String> = r
        .hops
        .iter()
        .map(|h| format!("{}->{} {:.4}", basis.labels[h.from], basis.labels[h.to], h.fidelity))
        .collect();
    Ok(Check::new(r.min_fidelity >= 0.9, format!("hops {} (need >= 0.9 each)", hops.join(", "))).value("min_fidelity", r.min_fidelity))
}

fn sector_oracle() -> Result<Check> {
    let sys = ChainSystem::five_site();
    let n = sys.n_sites();
    let seq = eq9_sequence();
    let schedule = seq.schedule(Site(3))?.ok_or_else(|| Error::Input("empty sequence".into()))?;
    let schedules = sys.single_bias(schedule);
    let sector = sys.hamiltonian(&schedules)?;
    let full = sys.full_space_hamiltonian(&schedules)?;
    let psi = DMatrix::<C64>::identity(n, n);
    let mut psi_full = DMatrix::zeros(1 << n, n);
    for c in 0..n {
        psi_full.set_column(c, &embed_sector_state(&psi.column(c).into_owned(), n));
    }
    let stride = 1000;
    let a = evolve(&sector, &psi, 0.0, seq.total_duration(), &chain_opts().record_stride(stride))?;
    let b = evolve(&full, &psi_full, 0.0, seq.total_duration(), &chain_opts().record_stride(stride))?;
    let basis = SectorBasis::new(n);
    let mut worst = 0.0_f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        let projected = DMatrix::from_fn(1 << n, n, |r, c| {
            (0..n).find(|&k| basis.full_space_index(k) == r).map_or(C64::new(0.0, 0.0), |k| x[(k, c)])
        });
        worst = worst.max(linalg::max_abs_diff(&projected, y));
    }
    Ok(Check::new(worst <= 1e-8, format!("max amplitude deviation {worst:.2e} over {} samples of the a,b,a sequence", a.states.len()))
        .value("max_deviation", worst))
}

fn cavity_initials() -> [CavityState; 3] {
    [CavityState::Ten0, CavityState::Eleven0, CavityState::A0]
}

fn cavity_cnot() -> Result<Check> {
    let params = CavityParams::cnot_default();
    let t_end = cavity::cnot_duration(10.0, 0.2);
    let opts = StepOptions::with_step(CAVITY_STEP).record_stride(100);
    let mut parts = Vec::new();
    let mut ok = false;
    let mut check_values = Vec::new();
    for conv in Convention::ALL {
        let t = Instant::now();
        match cavity::run_cnot(&params, conv, &cavity_initials(), t_end, &opts) {
            Err(Error::Divergence { t }) => parts.push(format!("{conv}: diverged at t = {t:.4}")),
            Err(e) => return Err(e),
            Ok(run) => {
                let secs = t.elapsed().as_secs_f64();
                let swap = &run.reports[..2];
                let conv_ok = secs <= 120.0
                    && swap.iter().all(|r| r.dominant == r.target && r.swap_fidelity >= 0.9 && r.dfs_leakage < 0.01 && r.final_norm >= 0.98);
                ok |= conv_ok;
                let a = &run.reports[2];
                parts.push(format!(
                    "{conv}: swap {:.4}/{:.4}, leakage {:.2e}/{:.2e}, norm {:.4}/{:.4} (10->11 / 11->10); a survives {:.4} with norm {:.4}; {secs:.0} s",
                    swap[0].swap_fidelity,
                    swap[1].swap_fidelity,
                    swap[0].dfs_leakage,
                    swap[1].dfs_leakage,
                    swap[0].final_norm,
                    swap[1].final_norm,
                    a.swap_fidelity,
                    a.final_norm
                ));
                check_values.push((format!("{conv}_swap_min"), swap[0].swap_fidelity.min(swap[1].swap_fidelity)));
                check_values.push((format!("{conv}_leakage_max"), swap[0].dfs_leakage.max(swap[1].dfs_leakage)));
                check_values.push((format!("{conv}_norm_min"), swap[0].final_norm.min(swap[1].final_norm)));
            }
        }
    }
    let mut c = Check::new(ok, parts.join("; "));
    c.values = check_values;
    Ok(c)
}

fn frame_deviation(params: &CavityParams, t_end: f64) -> Result<f64> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let states = [
        DVector::from_vec(vec![one, zero, zero]),
        DVector::from_vec(vec![zero, one, zero]),
        DVector::from_vec(vec![zero, zero, one]),
        DVector::from_vec(vec![C64::new(r, 0.0), zero, C64::new(0.0, r)]),
    ];
    let opts = StepOptions::with_step(CHAIN_STEP).record_stride(100);
    let mut worst = 0.0_f64;
    for psi in &states {
        worst = worst.max(cavity::frame_equivalence(params, psi, t_end, &opts)?);
    }
    Ok(worst)
}

fn frame_equivalence() -> Result<Check> {
    let equal = CavityParams::cnot_default();
    let unequal = CavityParams::new(
        1.0,
        2000.0,
        2000.0,
        cavity::LinearRamp { value0: 10.0, slope: -0.2 },
        cavity::LinearRamp { value0: 6.0, slope: -0.15 },
    )?;
    let a = frame_deviation(&equal, 100.0)?;
    let b = frame_deviation(&unequal, 100.0)?;
    let worst = a.max(b);
    Ok(Check::new(worst <= 1e-8, format!("max probability difference {a:.2e} (equal detunings), {b:.2e} (unequal)")).value("max_difference", worst))
}

fn max_norm_error(traj: &Trajectory) -> f64 {
    let mut worst = 0.0_f64;
    for m in &traj.states {
        for c in 0..m.ncols() {
            worst = worst.max((m.column(c).norm() - 1.0).abs());
        }
    }
    worst
}

fn numerical_hygiene() -> Result<Check> {
    let mut notes = Vec::new();
    let mut ok = true;

    // Hermitian norm conservation.
    let (_, eq9) = eq9_trajectory(10)?;
    let sys8 = eight_site_system();
    let prog = plan_transfer(&sys8, &EIGHT_SITE_ROUTE, &HopOptions::default())?;
    let h8 = sys8.hamiltonian(&prog.schedules)?;
    let basis8 = sys8.reference_basis()?;
    let t8 = evolve(&h8, &ref_block(&basis8, &[0]), 0.0, prog.duration, &chain_opts().record_stride(10))?;
    let norm_err = max_norm_error(&eq9).max(max_norm_error(&t8));
    ok &= norm_err <= 1e-8;
    notes.push(format!("Hermitian norm error {norm_err:.1e}"));

    // Dissipative monotonicity.
    let params = CavityParams::cnot_default();
    let t_end = cavity::cnot_duration(10.0, 0.2);
    let run = cavity::run_cnot(&params, Convention::Schrodinger, &cavity_initials(), t_end, &StepOptions::with_step(CAVITY_STEP).record_stride(10))?;
    let growth = run.reports.iter().map(|r| r.max_norm_increase).fold(f64::NEG_INFINITY, f64::max);
    ok &= growth <= 0.0;
    notes.push(format!("largest dissipative norm increase {growth:.1e}"));

    // Half-step convergence.
    let mut conv = Vec::new();
    let five = ChainSystem::five_site();
    let eq9_sched = eq9_sequence().schedule(Site(3))?.expect("non-empty");
    let h9 = five.hamiltonian(&five.single_bias(eq9_sched))?;
    conv.push(("a,b,a".to_string(), convergence_check(&h9, &DMatrix::identity(5, 5), 0.0, 60.0, &chain_opts(), false)?));
    for p in Primitive::ALL {
        let s = PulseSequence::new(vec![p], DEFAULT_TAU).schedule(Site(3))?.expect("non-empty");
        let h = five.hamiltonian(&five.single_bias(s))?;
        conv.push((format!("primitive {p}"), convergence_check(&h, &DMatrix::identity(5, 5), 0.0, DEFAULT_TAU, &chain_opts(), false)?));
    }
    conv.push(("eight-site".to_string(), convergence_check(&h8, &ref_block(&basis8, &[0]), 0.0, prog.duration, &chain_opts(), false)?));
    let full = cavity::build_full_system(&params, Convention::Schrodinger);
    let cav0 = DMatrix::from_fn(cavity::N_STATES, 3, |r, c| {
        if r == cavity_initials()[c].index() {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    conv.push(("cavity".to_string(), convergence_check(&full, &cav0, 0.0, t_end, &StepOptions::with_step(CAVITY_STEP), false)?));
    let eff = cavity::EffectiveSystem { params };
    conv.push(("effective".to_string(), convergence_check(&eff, &DMatrix::identity(3, 3), 0.0, t_end, &chain_opts(), false)?));
    let frame = cavity::PhaseFrameSystem { params };
    conv.push(("phase frame".to_string(), convergence_check(&frame, &DMatrix::identity(3, 3), 0.0, t_end, &chain_opts(), false)?));
    let worst = conv.iter().map(|c| c.1.difference).fold(0.0, f64::max);
    let failing: Vec<String> = conv.iter().filter(|c| !c.1.passed).map(|c| format!("{} {:.1e}", c.0, c.1.difference)).collect();
    ok &= failing.is_empty();
    notes.push(if failing.is_empty() {
        format!("half-step deviation <= {worst:.1e} on {} runs", conv.len())
    } else {
        format!("half-step deviation above 1e-7: {}", failing.join(", "))
    });
    Ok(Check::new(ok, notes.join("; "))
        .value("norm_error", norm_err)
        .value("norm_increase", growth)
        .value("max_half_step_deviation", worst))
}

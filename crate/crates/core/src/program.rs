//! Pulse programs on chains: running primitive sequences, reading off the
//! permutations they perform, and planning multi-hop transfers along longer
//! chains.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chain::{ChainSystem, Site, Symmetry};
use crate::permutation::{extract_permutation, GeneratorTable, PermutationReport, PulseSequence};
use crate::propagator::{evolve, propagator_matrix, StepOptions};
use crate::pulse::{primitive, BiasSchedules, Primitive, PulseSchedule, PulseSegment};
use crate::{Error, Result, C64};

/// Site driven by sequences when none is named: the first bias site.
fn default_site(system: &ChainSystem) -> Result<Site> {
    system
        .bias_sites
        .first()
        .copied()
        .ok_or_else(|| Error::Input("the chain has no bias site".into()))
}

/// Propagator of `seq` on the first bias site of `system`, over the full
/// sequence duration.
pub fn sequence_propagator(seq: &PulseSequence, system: &ChainSystem, options: &StepOptions) -> Result<DMatrix<C64>> {
    let site = default_site(system)?;
    let schedules = match seq.schedule(site)? {
        Some(s) => system.single_bias(s),
        None => BiasSchedules::new(),
    };
    let h = system.hamiltonian(&schedules)?;
    propagator_matrix(&h, 0.0, seq.total_duration(), options)
}

/// Simulates `seq` and extracts the permutation it performs.
pub fn verify_sequence(seq: &PulseSequence, system: &ChainSystem, options: &StepOptions, tol: f64) -> Result<PermutationReport> {
    let u = sequence_propagator(seq, system, options)?;
    extract_permutation(&u, &system.reference_basis()?, tol)
}

/// Simulates each primitive once and records the permutation it performs.
/// Fails if any primitive does not act as a clean permutation within `tol`.
pub fn calibrate_table(system: &ChainSystem, tau: f64, options: &StepOptions, tol: f64) -> Result<GeneratorTable> {
    let mut entries = std::collections::BTreeMap::new();
    for p in Primitive::ALL {
        let r = verify_sequence(&PulseSequence::new(vec![p], tau), system, options, tol)?;
        let perm = r
            .permutation
            .filter(|_| r.passed)
            .ok_or_else(|| Error::Compile(format!("primitive {p} does not act as a permutation (min fidelity {:.4})", r.min_fidelity)))?;
        entries.insert(p, perm);
    }
    GeneratorTable::new(entries)
}

/// Shape of each transfer hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopOptions {
    /// Rate of change of the bias signal during the ramp.
    pub slope: f64,
    /// Ramp half-width as a fraction of the distance from the target level
    /// to the nearest other reference level.
    pub margin_fraction: f64,
    /// Unbiased pause after each hop.
    pub gap: f64,
}

impl Default for HopOptions {
    fn default() -> Self {
        Self { slope: 1.0, margin_fraction: 0.5, gap: 1.0 }
    }
}

/// One adiabatic hop between a lone state on a bias site and a strong-pair
/// state next to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    pub site: Site,
    /// Reference energy of the pair state being crossed.
    pub energy: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopProgram {
    pub hops: Vec<Hop>,
    pub schedules: BiasSchedules,
    pub duration: f64,
}

/// Plans a transfer visiting the reference states in `route` (0-based).
///
/// Each hop jumps the biased site's diagonal to just below the pair energy,
/// ramps it to just above, and switches it off. The state follows its
/// adiabatic level through the avoided crossing in either direction.
pub fn plan_transfer(system: &ChainSystem, route: &[usize], options: &HopOptions) -> Result<HopProgram> {
    let basis = system.reference_basis()?;
    if route.iter().any(|&r| r >= basis.len()) {
        return Err(Error::Input(format!("route entry out of range (have {} reference states)", basis.len())));
    }
    let energies = &basis.energies_at_zero_weak;
    let mut hops = Vec::new();
    let mut segments: std::collections::BTreeMap<Site, Vec<PulseSegment>> = Default::default();
    let mut t = 0.0;
    for w in route.windows(2) {
        let (from, to) = (w[0], w[1]);
        let (lone, pair) = match (basis.labels[from].symmetry, basis.labels[to].symmetry) {
            (Symmetry::Lone, s) if s != Symmetry::Lone => (from, to),
            (s, Symmetry::Lone) if s != Symmetry::Lone => (to, from),
            _ => {
                return Err(Error::Compile(format!(
                    "hop {} -> {} must connect a lone state with a strong-pair state",
                    basis.labels[from], basis.labels[to]
                )))
            }
        };
        let site = basis.labels[lone].sites[0];
        if !system.bias_sites.contains(&site) {
            return Err(Error::Compile(format!("site {} carries no bias", site.0)));
        }
        let pair_sites = &basis.labels[pair].sites;
        let adjacent = system
            .graph
            .links()
            .iter()
            .any(|l| (l.a == site && pair_sites.contains(&l.b)) || (l.b == site && pair_sites.contains(&l.a)));
        if !adjacent {
            return Err(Error::Compile(format!("site {} is not linked to bloc {}", site.0, basis.labels[pair])));
        }
        let e = energies[pair];
        let nearest = energies
            .iter()
            .enumerate()
            .filter(|&(k, &x)| k != pair && k != lone && (x - e).abs() > 1e-12)
            .map(|(_, &x)| (x - e).abs())
            .fold(f64::INFINITY, f64::min);
        if !nearest.is_finite() {
            return Err(Error::Compile("no other level bounds the ramp".into()));
        }
        let delta = options.margin_fraction * nearest;
        let per_unit = system.bias(site).entry(1.0);
        let (d0, d1) = (e - delta, e + delta);
        let (f0, f1) = (d0 / per_unit, d1 / per_unit);
        let slope = options.slope.abs() * (f1 - f0).signum();
        let duration = (f1 - f0) / slope;
        segments.entry(site).or_default().push(PulseSegment::new(t, duration, f0, slope)?);
        hops.push(Hop { from, to, site, energy: e, t_start: t, t_end: t + duration });
        t += duration + options.gap;
    }
    let mut schedules = BiasSchedules::new();
    for (site, segs) in segments {
        schedules.insert(site, PulseSchedule::new(site, segs)?);
    }
    Ok(HopProgram { hops, schedules, duration: t })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopResult {
    pub from: usize,
    pub to: usize,
    pub site: Site,
    /// Population of the hop's target reference state once the bias is off.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub hops: Vec<HopResult>,
    pub min_fidelity: f64,
}

/// Runs `program` from reference state `program.hops[0].from` and records
/// the target population at the end of every hop, inside the unbiased gap.
pub fn run_transfer(system: &ChainSystem, program: &HopProgram, options: &StepOptions, gap: f64) -> Result<TransferReport> {
    let first = program.hops.first().ok_or_else(|| Error::Input("empty transfer program".into()))?;
    let basis = system.reference_basis()?;
    let h = system.hamiltonian(&program.schedules)?;
    let mut psi = DMatrix::from_column_slice(basis.len(), 1, basis.state(first.from).as_slice());
    let mut t = 0.0;
    let mut hops = Vec::new();
    for hop in &program.hops {
        let t_probe = hop.t_end + 0.5 * gap;
        psi = evolve(&h, &psi, t, t_probe, options)?.final_state().clone();
        t = t_probe;
        let pops = basis.populations(&psi.column(0).into_owned());
        hops.push(HopResult { from: hop.from, to: hop.to, site: hop.site, fidelity: pops[hop.to] });
    }
    let min_fidelity = hops.iter().map(|h| h.fidelity).fold(1.0, f64::min);
    Ok(TransferReport { hops, min_fidelity })
}

/// Single primitive pulse on the first bias site, for quick experiments.
pub fn primitive_schedules(system: &ChainSystem, p: Primitive, t0: f64, tau: f64) -> Result<BiasSchedules> {
    Ok(system.single_bias(primitive(p, default_site(system)?, t0, tau)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::BiasSign;
    use crate::permutation::{compile_with, realized_table, Permutation, DEFAULT_TOL};
    use crate::pulse::DEFAULT_TAU;

    fn opts() -> StepOptions {
        StepOptions::with_step(2e-3)
    }

    #[test]
    fn empty_sequence_is_identity() {
        let r = verify_sequence(&PulseSequence::new(vec![], 20.0), &ChainSystem::five_site(), &opts(), DEFAULT_TOL).unwrap();
        assert!(r.passed);
        assert!(r.permutation.unwrap().is_identity());
    }

    #[test]
    fn interchange_of_first_two_states() {
        let seq = PulseSequence::new(vec![Primitive::A, Primitive::B, Primitive::A], 20.0);
        let r = verify_sequence(&seq, &ChainSystem::five_site(), &opts(), DEFAULT_TOL).unwrap();
        assert!(r.matches(&Permutation::parse("(1 2)", 5).unwrap()), "{r:?}");
    }

    #[test]
    fn calibrated_tables_match_the_frozen_ones() {
        for sign in [BiasSign::Raising, BiasSign::Lowering] {
            let sys = ChainSystem::five_site().with_sign(sign);
            let t = calibrate_table(&sys, DEFAULT_TAU, &opts(), DEFAULT_TOL).unwrap();
            assert_eq!(t, realized_table(sign), "{sign:?}");
        }
    }

    #[test]
    fn compiled_with_realized_table_runs_correctly() {
        let table = realized_table(BiasSign::Raising);
        let target = Permutation::parse("(4 5)", 5).unwrap();
        let seq = compile_with(&target, &table).unwrap();
        let r = verify_sequence(&seq, &ChainSystem::five_site(), &opts(), DEFAULT_TOL).unwrap();
        assert!(r.matches(&target), "{} -> {r:?}", seq.names());
    }

    #[test]
    fn eight_site_transfer_plan() {
        let sys = ChainSystem::eight_site([30.0, 45.0, 60.0], 1.0);
        let hop = HopOptions::default();
        let prog = plan_transfer(&sys, &[0, 2, 3, 5, 6], &hop).unwrap();
        assert_eq!(prog.hops.len(), 4);
        assert_eq!(prog.hops.iter().map(|h| h.site.0).collect::<Vec<_>>(), vec![3, 3, 6, 6]);
        assert!(prog.hops.iter().all(|h| (h.t_end - h.t_start - 7.5).abs() < 1e-12));
        let r = run_transfer(&sys, &prog, &opts(), hop.gap).unwrap();
        assert!(r.min_fidelity >= 0.9, "{r:?}");
    }

    #[test]
    fn transfer_rejects_impossible_hops() {
        let sys = ChainSystem::eight_site([30.0, 45.0, 60.0], 1.0);
        assert!(matches!(plan_transfer(&sys, &[0, 3], &HopOptions::default()), Err(Error::Compile(_))));
        assert!(matches!(plan_transfer(&sys, &[2, 6], &HopOptions::default()), Err(Error::Compile(_))));
    }
}

//! Exchange-coupled spin chains restricted to the single-down-spin sector.
//!
//! A chain is described by a [`CouplingGraph`] of sites joined by exchange
//! links `g (σ+σ- + σ-σ+)`. With exactly one spin down the state space has one
//! basis state per site (state `k` = down spin at site `k`), and the exchange
//! term becomes a hopping matrix with entry `g` between linked sites. Biases
//! act diagonally on that basis.
//!
//! The full `2^n` tensor-product Hamiltonian is kept as an oracle for the
//! sector restriction; it is only built for small chains.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::propagator::TimeDependentHamiltonian;
use crate::pulse::{BiasSchedules, PulseSchedule};
use crate::{Error, Result, C64};

/// Largest chain for which the full tensor-product space is built.
pub const FULL_SPACE_MAX_SITES: usize = 12;

/// Diagonal weight of a bias `f` on the biased site: `±2 f`.
pub const BIAS_MAGNITUDE: f64 = 2.0;

/// A 1-based site label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub usize);

impl Site {
    /// Zero-based basis index.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        Site(index + 1)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: Site,
    pub b: Site,
    pub g: f64,
}

/// Sites and weighted exchange links.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    n_sites: usize,
    links: Vec<Link>,
}

impl CouplingGraph {
    /// Builds a graph from 1-based `(i, j, g)` triples.
    pub fn new(n_sites: usize, links: &[(usize, usize, f64)]) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidGraph("a chain needs at least one site".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(links.len());
        for &(i, j, g) in links {
            if i < 1 || i > n_sites || j < 1 || j > n_sites {
                return Err(Error::InvalidGraph(format!(
                    "link ({i}, {j}) has an endpoint outside 1..={n_sites}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("link ({i}, {j}) is a self-link")));
            }
            if !g.is_finite() || g == 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "link ({i}, {j}) has coupling {g}; couplings must be finite and nonzero"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("link ({i}, {j}) is listed twice")));
            }
            out.push(Link { a: Site(i), b: Site(j), g });
        }
        Ok(Self { n_sites, links: out })
    }

    /// Open chain with nearest-neighbour couplings `g_{k,k+1} = couplings[k-1]`.
    pub fn open_chain(couplings: &[f64]) -> Result<Self> {
        let links: Vec<_> = couplings.iter().enumerate().map(|(k, &g)| (k + 1, k + 2, g)).collect();
        Self::new(couplings.len() + 1, &links)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Geometric mean of the smallest and largest `|g|`; splits a two-scale
    /// coupling set without further parameters. Falls back to 1 for a graph
    /// without links.
    pub fn default_threshold(&self) -> f64 {
        let mags = self.links.iter().map(|l| l.g.abs());
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0_f64), |(lo, hi), g| (lo.min(g), hi.max(g)));
        if self.links.is_empty() {
            1.0
        } else {
            (lo * hi).sqrt()
        }
    }

    /// Copy of the graph with every link weaker than `threshold` removed.
    pub fn strong_part(&self, threshold: f64) -> CouplingGraph {
        CouplingGraph {
            n_sites: self.n_sites,
            links: self.links.iter().copied().filter(|l| l.g.abs() >= threshold).collect(),
        }
    }

    /// Copy with every link weaker than `threshold` multiplied by `factor`.
    pub fn with_weak_scaled(&self, threshold: f64, factor: f64) -> Result<CouplingGraph> {
        let links: Vec<_> = self
            .links
            .iter()
            .map(|l| {
                let g = if l.g.abs() < threshold { l.g * factor } else { l.g };
                (l.a.0, l.b.0, g)
            })
            .collect();
        CouplingGraph::new(self.n_sites, &links)
    }
}

/// Chain description as read from JSON: `{"n_sites", "links": [[i, j, g]], "bias_sites"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub links: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub bias_sites: Vec<usize>,
}

impl ChainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn graph(&self) -> Result<CouplingGraph> {
        CouplingGraph::new(self.n_sites, &self.links)
    }

    pub fn bias_sites(&self) -> Result<Vec<Site>> {
        let mut out = Vec::with_capacity(self.bias_sites.len());
        for &s in &self.bias_sites {
            if s < 1 || s > self.n_sites {
                return Err(Error::InvalidGraph(format!("bias site {s} is outside 1..={}", self.n_sites)));
            }
            if out.contains(&Site(s)) {
                return Err(Error::InvalidGraph(format!("bias site {s} is listed twice")));
            }
            out.push(Site(s));
        }
        Ok(out)
    }
}

/// One basis state per site: state `k` has the down spin at site `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
}

impl SectorBasis {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites }
    }

    pub fn dim(&self) -> usize {
        self.n_sites
    }

    /// Site carrying the down spin in basis state `index`.
    pub fn site_of(&self, index: usize) -> Site {
        Site::from_index(index)
    }

    pub fn index_of(&self, site: Site) -> usize {
        site.index()
    }

    /// Index of the single-down state in the full `2^n` space, where bit `k`
    /// set means site `k + 1` is down.
    pub fn full_space_index(&self, index: usize) -> usize {
        1 << index
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n_sites)
            .map(|k| {
                (0..self.n_sites).map(|s| if s == k { '↓' } else { '↑' }).collect::<String>()
            })
            .collect()
    }
}

/// Which way a positive bias moves the biased site's diagonal entry.
///
/// `Lowering` is the literal reading of `f (σz - 1)` with `σz = +1` on an up
/// spin: the biased site's entry is `-2 f`. `Raising` flips it to `+2 f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasSign {
    #[default]
    Raising,
    Lowering,
}

impl BiasSign {
    pub fn factor(self) -> f64 {
        match self {
            BiasSign::Raising => 1.0,
            BiasSign::Lowering => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BiasSign::Raising => BiasSign::Lowering,
            BiasSign::Lowering => BiasSign::Raising,
        }
    }
}

/// How energies in units of the weak coupling turn into phase rates.
///
/// With `Cycles` an energy `E` advances the phase by `2π E` per unit time,
/// i.e. energies are ordinary frequencies. `Angular` uses `E` radians per
/// unit time (`ħ = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyUnits {
    #[default]
    Cycles,
    Angular,
}

impl EnergyUnits {
    pub fn phase_scale(self) -> f64 {
        match self {
            EnergyUnits::Cycles => std::f64::consts::TAU,
            EnergyUnits::Angular => 1.0,
        }
    }
}

/// Diagonal bias `sign · 2 · f(t)` on one site of the sector basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasOperator {
    pub site: Site,
    pub sign: BiasSign,
}

impl BiasOperator {
    pub fn new(site: Site, sign: BiasSign) -> Self {
        Self { site, sign }
    }

    pub fn entry(&self, f: f64) -> f64 {
        self.sign.factor() * BIAS_MAGNITUDE * f
    }

    pub fn diagonal(&self, n_sites: usize) -> DVector<f64> {
        let mut d = DVector::zeros(n_sites);
        d[self.site.index()] = self.entry(1.0);
        d
    }
}

/// Sector Hamiltonian: `g` between linked sites, zero diagonal. The constant
/// offset that zeroes the all-up energy is dropped.
pub fn build_sector_hamiltonian(graph: &CouplingGraph) -> DMatrix<f64> {
    let n = graph.n_sites();
    let mut h = DMatrix::zeros(n, n);
    for l in graph.links() {
        h[(l.a.index(), l.b.index())] = l.g;
        h[(l.b.index(), l.a.index())] = l.g;
    }
    h
}

/// Full tensor-product Hamiltonian `Σ g h^{(i,j)} + sign · f · (1 - σz)` on the
/// biased site, in the basis where bit `k` set means site `k + 1` is down.
pub fn build_full_space_hamiltonian(
    graph: &CouplingGraph,
    bias: &BiasOperator,
    f_value: f64,
) -> Result<DMatrix<f64>> {
    build_full_space_hamiltonian_multi(graph, &[(*bias, f_value)])
}

pub fn build_full_space_hamiltonian_multi(
    graph: &CouplingGraph,
    biases: &[(BiasOperator, f64)],
) -> Result<DMatrix<f64>> {
    let n = graph.n_sites();
    if n > FULL_SPACE_MAX_SITES {
        return Err(Error::TooLarge { n, max: FULL_SPACE_MAX_SITES });
    }
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        for l in graph.links() {
            let (ba, bb) = (1 << l.a.index(), 1 << l.b.index());
            let down_a = state & ba != 0;
            let down_b = state & bb != 0;
            // σ+σ- + σ-σ+ only connects antiparallel pairs, with unit amplitude.
            if down_a != down_b {
                let flipped = state ^ ba ^ bb;
                h[(flipped, state)] += l.g;
            }
        }
        for (bias, f) in biases {
            let sigma_z = if state & (1 << bias.site.index()) != 0 { -1.0 } else { 1.0 };
            h[(state, state)] += bias.sign.factor() * f * (1.0 - sigma_z);
        }
    }
    Ok(h)
}

/// Restricts a full-space operator to the single-down sector.
pub fn restrict_to_sector(full: &DMatrix<f64>, n_sites: usize) -> DMatrix<f64> {
    let basis = SectorBasis::new(n_sites);
    DMatrix::from_fn(n_sites, n_sites, |i, j| {
        full[(basis.full_space_index(i), basis.full_space_index(j))]
    })
}

/// Embeds a sector state into the full space.
pub fn embed_sector_state(state: &DVector<C64>, n_sites: usize) -> DVector<C64> {
    let basis = SectorBasis::new(n_sites);
    let mut out = DVector::zeros(1 << n_sites);
    for (k, amp) in state.iter().enumerate() {
        out[basis.full_space_index(k)] = *amp;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    Lone,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLabel {
    /// Position of the bloc in site order.
    pub bloc: usize,
    pub sites: Vec<Site>,
    pub symmetry: Symmetry,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sites: Vec<String> = self.sites.iter().map(|s| s.0.to_string()).collect();
        let tag = match self.symmetry {
            Symmetry::Symmetric => "+",
            Symmetry::Antisymmetric => "-",
            Symmetry::Lone => "",
        };
        write!(f, "({}){}", sites.join(","), tag)
    }
}

/// Eigenstates of the chain with every weak link removed: lone sites and
/// symmetric/antisymmetric combinations on strong pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEigenbasis {
    pub states: Vec<DVector<f64>>,
    pub labels: Vec<StateLabel>,
    pub energies_at_zero_weak: Vec<f64>,
}

impl ReferenceEigenbasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Columns are the reference states in sector coordinates.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.states.len();
        DMatrix::from_fn(n, n, |i, j| C64::new(self.states[j][i], 0.0))
    }

    pub fn state(&self, k: usize) -> DVector<C64> {
        linalg::to_complex_vec(&self.states[k])
    }

    /// `|<ref_k|psi>|²` for every reference state.
    pub fn populations(&self, psi: &DVector<C64>) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| {
                s.iter().zip(psi.iter()).map(|(a, b)| b * *a).sum::<C64>().norm_sqr()
            })
            .collect()
    }

    /// Index of the reference state localized on the lone site `site`.
    pub fn lone_state(&self, site: Site) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l.symmetry == Symmetry::Lone && l.sites == [site])
    }
}

/// Exact eigenstates of the weak-links-zeroed Hamiltonian, ordered by lowest
/// site then symmetric before antisymmetric. For the five-site chain with
/// strong pairs (1,2) and (4,5) this reproduces the ψ1..ψ5 ordering.
pub fn reference_eigenbasis(graph: &CouplingGraph, sw_threshold: f64) -> Result<ReferenceEigenbasis> {
    let strong = graph.strong_part(sw_threshold);
    let n = graph.n_sites();
    let mut partner: Vec<Option<(usize, f64)>> = vec![None; n];
    for l in strong.links() {
        let (a, b) = (l.a.index(), l.b.index());
        if partner[a].is_some() || partner[b].is_some() {
            return Err(Error::Input(format!(
                "strong component through link ({}, {}) has three or more sites; \
                 its spectrum may contain a zero eigenvalue, run the bloc hazard check",
                l.a.0, l.b.0
            )));
        }
        partner[a] = Some((b, l.g));
        partner[b] = Some((a, l.g));
    }
    let mut states = Vec::new();
    let mut labels = Vec::new();
    let mut energies = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut bloc = 0;
    for k in 0..n {
        match partner[k] {
            None => {
                let mut v = DVector::zeros(n);
                v[k] = 1.0;
                states.push(v);
                labels.push(StateLabel { bloc, sites: vec![Site::from_index(k)], symmetry: Symmetry::Lone });
                energies.push(0.0);
                bloc += 1;
            }
            Some((other, g)) if other > k => {
                let sites = vec![Site::from_index(k), Site::from_index(other)];
                let mut sym = DVector::zeros(n);
                sym[k] = s;
                sym[other] = s;
                let mut anti = DVector::zeros(n);
                anti[k] = s;
                anti[other] = -s;
                states.push(sym);
                labels.push(StateLabel { bloc, sites: sites.clone(), symmetry: Symmetry::Symmetric });
                energies.push(g);
                states.push(anti);
                labels.push(StateLabel { bloc, sites, symmetry: Symmetry::Antisymmetric });
                energies.push(-g);
                bloc += 1;
            }
            Some(_) => {}
        }
    }
    Ok(ReferenceEigenbasis { states, labels, energies_at_zero_weak: energies })
}

/// A chain together with its biased sites and the conventions used to turn
/// bias schedules into a time-dependent Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSystem {
    pub graph: CouplingGraph,
    pub bias_sites: Vec<Site>,
    pub sign: BiasSign,
    pub units: EnergyUnits,
    pub sw_threshold: f64,
}

impl ChainSystem {
    pub fn new(graph: CouplingGraph, bias_sites: Vec<Site>) -> Self {
        let sw_threshold = graph.default_threshold();
        Self { graph, bias_sites, sign: BiasSign::default(), units: EnergyUnits::default(), sw_threshold }
    }

    pub fn from_spec(spec: &ChainSpec) -> Result<Self> {
        Ok(Self::new(spec.graph()?, spec.bias_sites()?))
    }

    /// Five sites with `g1 = 30`, `g2 = 60`, weak links `λ = 1`, bias on site 3.
    pub fn five_site() -> Self {
        Self::five_site_with(30.0, 60.0, 1.0)
    }

    pub fn five_site_with(g1: f64, g2: f64, lambda: f64) -> Self {
        let graph = CouplingGraph::open_chain(&[g1, lambda, lambda, g2]).expect("valid five-site chain");
        let mut sys = Self::new(graph, vec![Site(3)]);
        // Keep the split fixed when the weak link is varied.
        sys.sw_threshold = 10.0;
        sys
    }

    /// Eight sites with the {S, W, W, S, W, W, S} pattern and biases on 3 and 6.
    pub fn eight_site(strong: [f64; 3], weak: f64) -> Self {
        let [s1, s2, s3] = strong;
        let graph = CouplingGraph::open_chain(&[s1, weak, weak, s2, weak, weak, s3]).expect("valid eight-site chain");
        Self::new(graph, vec![Site(3), Site(6)])
    }

    pub fn with_sign(mut self, sign: BiasSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_units(mut self, units: EnergyUnits) -> Self {
        self.units = units;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.graph.n_sites()
    }

    pub fn sector_hamiltonian(&self) -> DMatrix<f64> {
        build_sector_hamiltonian(&self.graph)
    }

    pub fn reference_basis(&self) -> Result<ReferenceEigenbasis> {
        reference_eigenbasis(&self.graph, self.sw_threshold)
    }

    pub fn bias(&self, site: Site) -> BiasOperator {
        BiasOperator::new(site, self.sign)
    }

    /// Sector Hamiltonian with one bias term per scheduled site.
    pub fn hamiltonian(&self, schedules: &BiasSchedules) -> Result<TimeDependentHamiltonian> {
        let n = self.n_sites();
        let base = linalg::to_complex(&self.sector_hamiltonian());
        let mut h = TimeDependentHamiltonian::new(base, true)?.with_phase_scale(self.units.phase_scale());
        for (site, schedule) in schedules.iter() {
            self.check_bias_site(*site)?;
            let diag = linalg::to_complex_vec(&self.bias(*site).diagonal(n));
            h = h.with_bias(diag, schedule.clone())?;
        }
        Ok(h)
    }

    /// The same dynamics in the full `2^n` space.
    pub fn full_space_hamiltonian(&self, schedules: &BiasSchedules) -> Result<TimeDependentHamiltonian> {
        let n = self.n_sites();
        let base = build_full_space_hamiltonian_multi(&self.graph, &[])?;
        let mut h = TimeDependentHamiltonian::new(linalg::to_complex(&base), true)?
            .with_phase_scale(self.units.phase_scale());
        for (site, schedule) in schedules.iter() {
            self.check_bias_site(*site)?;
            let unit = build_full_space_hamiltonian_multi(&CouplingGraph::new(n, &[])?, &[(self.bias(*site), 1.0)])?;
            let diag = DVector::from_iterator(unit.nrows(), unit.diagonal().iter().map(|&x| C64::new(x, 0.0)));
            h = h.with_bias(diag, schedule.clone())?;
        }
        Ok(h)
    }

    fn check_bias_site(&self, site: Site) -> Result<()> {
        if self.bias_sites.contains(&site) {
            Ok(())
        } else {
            Err(Error::Input(format!("site {} is not a bias site of this chain", site.0)))
        }
    }

    /// Single-site schedule map, for the common one-bias case.
    pub fn single_bias(&self, schedule: PulseSchedule) -> BiasSchedules {
        let mut map = BiasSchedules::new();
        map.insert(schedule.site(), schedule);
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> CouplingGraph {
        CouplingGraph::new(5, &[(1, 2, 30.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 60.0)]).unwrap()
    }

    #[test]
    fn five_site_matrix_is_tridiagonal() {
        let h = build_sector_hamiltonian(&five());
        let off: Vec<f64> = (0..4).map(|k| h[(k, k + 1)]).collect();
        assert_eq!(off, vec![30.0, 1.0, 1.0, 60.0]);
        assert_eq!(h, h.transpose());
        assert!(h.diagonal().iter().all(|&d| d == 0.0));
        assert_eq!(h[(0, 2)], 0.0);
    }

    #[test]
    fn two_and_three_site_spectra() {
        let s = 7.5;
        let (vals, _) = linalg::eigh_real(&build_sector_hamiltonian(&CouplingGraph::open_chain(&[s]).unwrap()));
        assert!((vals[0] + s).abs() < 1e-13 && (vals[1] - s).abs() < 1e-13);

        let (s12, s23) = (3.0, 4.0);
        let (vals, _) = linalg::eigh_real(&build_sector_hamiltonian(&CouplingGraph::open_chain(&[s12, s23]).unwrap()));
        let r = (s12 * s12 + s23 * s23).sqrt();
        assert!((vals[0] + r).abs() < 1e-12 && vals[1].abs() < 1e-12 && (vals[2] - r).abs() < 1e-12);
    }

    #[test]
    fn invalid_graphs_name_the_link() {
        let err = CouplingGraph::new(3, &[(1, 4, 1.0)]).unwrap_err().to_string();
        assert!(err.contains("(1, 4)"), "{err}");
        assert!(CouplingGraph::new(3, &[(2, 2, 1.0)]).is_err());
        assert!(CouplingGraph::new(3, &[(1, 2, 1.0), (2, 1, 3.0)]).is_err());
        assert!(CouplingGraph::new(3, &[(1, 2, 0.0)]).is_err());
        assert!(CouplingGraph::new(3, &[(1, 2, f64::NAN)]).is_err());
        assert!(CouplingGraph::new(0, &[]).is_err());
    }

    #[test]
    fn reference_basis_of_five_site_chain() {
        let basis = reference_eigenbasis(&five(), 10.0).unwrap();
        assert_eq!(basis.energies_at_zero_weak, vec![30.0, -30.0, 0.0, 60.0, -60.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(basis.states[0].as_slice(), &[s, s, 0.0, 0.0, 0.0]);
        assert_eq!(basis.states[1].as_slice(), &[s, -s, 0.0, 0.0, 0.0]);
        assert_eq!(basis.states[2].as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(basis.labels[3].symmetry, Symmetry::Symmetric);
        assert_eq!(basis.labels[3].sites, vec![Site(4), Site(5)]);
        let m = basis.matrix();
        assert!(linalg::unitarity_deviation(&m) < 1e-12);

        let strong = build_sector_hamiltonian(&five().strong_part(10.0));
        for (v, e) in basis.states.iter().zip(&basis.energies_at_zero_weak) {
            assert!((&strong * v - v * *e).norm() <= 1e-12);
        }
    }

    #[test]
    fn reference_basis_single_site_and_rejects_triples() {
        let one = CouplingGraph::new(1, &[]).unwrap();
        let basis = reference_eigenbasis(&one, 1.0).unwrap();
        assert_eq!(basis.len(), 1);
        assert_eq!(basis.energies_at_zero_weak, vec![0.0]);

        let triple = CouplingGraph::open_chain(&[30.0, 40.0, 1.0]).unwrap();
        let err = reference_eigenbasis(&triple, 10.0).unwrap_err().to_string();
        assert!(err.contains("hazard"), "{err}");
    }

    #[test]
    fn eight_site_reference_basis_matches_weak_zeroed_diagonalization() {
        let sys = ChainSystem::eight_site([30.0, 45.0, 60.0], 1.0);
        let basis = sys.reference_basis().unwrap();
        let lone: Vec<_> = basis.labels.iter().filter(|l| l.symmetry == Symmetry::Lone).map(|l| l.sites[0]).collect();
        assert_eq!(lone, vec![Site(3), Site(6)]);
        let pairs: Vec<_> = basis
            .labels
            .iter()
            .filter(|l| l.symmetry == Symmetry::Symmetric)
            .map(|l| (l.sites[0].0, l.sites[1].0))
            .collect();
        assert_eq!(pairs, vec![(1, 2), (4, 5), (7, 8)]);

        // Oracle: diagonalize with W = 0 and compare spectra.
        let zeroed = sys.graph.with_weak_scaled(sys.sw_threshold, 1e-300).unwrap();
        let (mut vals, _) = linalg::eigh_real(&build_sector_hamiltonian(&zeroed));
        let mut expected = basis.energies_at_zero_weak.clone();
        vals.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_space_two_site_block() {
        let g = CouplingGraph::open_chain(&[4.0]).unwrap();
        let h = build_full_space_hamiltonian(&g, &BiasOperator::new(Site(1), BiasSign::Raising), 0.0).unwrap();
        assert_eq!(h.nrows(), 4);
        // indices 1 = site 1 down, 2 = site 2 down
        assert_eq!(h[(1, 1)], 0.0);
        assert_eq!(h[(1, 2)], 4.0);
        assert_eq!(h[(2, 1)], 4.0);
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h[(3, 3)], 0.0);
    }

    #[test]
    fn full_space_restriction_matches_sector() {
        let g = five();
        let h = build_full_space_hamiltonian(&g, &BiasOperator::new(Site(3), BiasSign::Raising), 0.0).unwrap();
        let restricted = restrict_to_sector(&h, 5);
        assert!((restricted - build_sector_hamiltonian(&g)).abs().max() <= 1e-14);
    }

    #[test]
    fn bias_acts_on_one_diagonal_entry() {
        for sign in [BiasSign::Raising, BiasSign::Lowering] {
            let h = build_full_space_hamiltonian(&five(), &BiasOperator::new(Site(3), sign), 7.0).unwrap();
            let diff = restrict_to_sector(&h, 5) - build_sector_hamiltonian(&five());
            for i in 0..5 {
                for j in 0..5 {
                    let expected = if i == 2 && j == 2 { sign.factor() * 14.0 } else { 0.0 };
                    assert_eq!(diff[(i, j)], expected);
                }
            }
            assert_eq!(BiasOperator::new(Site(3), sign).diagonal(5)[2], sign.factor() * 2.0);
        }
    }

    #[test]
    fn full_space_size_limit() {
        let g = CouplingGraph::open_chain(&[1.0; 13]).unwrap();
        let err = build_full_space_hamiltonian(&g, &BiasOperator::new(Site(1), BiasSign::Raising), 0.0);
        assert!(matches!(err, Err(Error::TooLarge { n: 14, .. })));
    }

    #[test]
    fn bipartite_chain_spectrum_is_symmetric() {
        let g = CouplingGraph::open_chain(&[3.0, 0.4, 1.7, 5.0, 0.2, 2.2]).unwrap();
        let (vals, _) = linalg::eigh_real(&build_sector_hamiltonian(&g));
        let n = vals.len();
        for k in 0..n {
            assert!((vals[k] + vals[n - 1 - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_spec_round_trip() {
        let text = r#"{"n_sites": 5, "links": [[1,2,30],[2,3,1],[3,4,1],[4,5,60]], "bias_sites": [3]}"#;
        let spec = ChainSpec::from_json(text).unwrap();
        let sys = ChainSystem::from_spec(&spec).unwrap();
        assert_eq!(sys.graph, five());
        assert_eq!(sys.bias_sites, vec![Site(3)]);
        assert!(ChainSpec::from_json(r#"{"n_sites": 2, "links": [], "bias_sites": [4]}"#).unwrap().bias_sites().is_err());
    }
}

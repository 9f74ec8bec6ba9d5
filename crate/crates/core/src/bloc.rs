//! Strong/weak structure of a coupling matrix.
//!
//! Links stronger than a threshold glue sites into strong blocs; the
//! remaining sites are grouped into weak blocs by their weak links. The
//! diagnostics here flag strong blocs whose isolated spectrum comes close to
//! zero, estimate how strongly blocs leak into each other, and measure how
//! well the exact eigenvectors stay on one bloc.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chain::CouplingGraph;
use crate::{linalg, Error, Result, C64};

/// Off-diagonal links and diagonal magnitudes of a square matrix.
#[derive(Debug, Clone)]
pub struct LinkStructure {
    pub labels: Vec<String>,
    pub matrix: DMatrix<C64>,
    /// `(i, j, |g|)` with `i < j`, zero-based.
    links: Vec<(usize, usize, f64)>,
}

impl LinkStructure {
    pub fn from_graph(graph: &CouplingGraph) -> Self {
        let n = graph.n_sites();
        let mut m = DMatrix::zeros(n, n);
        for l in graph.links() {
            m[(l.a.index(), l.b.index())] = C64::new(l.g, 0.0);
            m[(l.b.index(), l.a.index())] = C64::new(l.g, 0.0);
        }
        Self::from_matrix(m, (1..=n).map(|k| k.to_string()).collect())
    }

    /// Any square matrix; a link joins `i` and `j` when either of
    /// `M[i,j]`, `M[j,i]` is nonzero, with the larger magnitude as strength.
    pub fn from_matrix(matrix: DMatrix<C64>, labels: Vec<String>) -> Self {
        let n = matrix.nrows();
        let mut links = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let g = matrix[(i, j)].norm().max(matrix[(j, i)].norm());
                if g > 0.0 {
                    links.push((i, j, g));
                }
            }
        }
        Self { labels, matrix, links }
    }

    pub fn with_diagonal(mut self, index: usize, value: C64) -> Self {
        self.matrix[(index, index)] = value;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn links(&self) -> &[(usize, usize, f64)] {
        &self.links
    }

    fn diagonal_magnitude(&self, k: usize) -> f64 {
        self.matrix[(k, k)].norm()
    }

    /// Geometric mean of the smallest and largest link magnitudes.
    pub fn default_threshold(&self) -> f64 {
        let (lo, hi) = self.links.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), l| (lo.min(l.2), hi.max(l.2)));
        if self.links.is_empty() {
            1.0
        } else {
            (lo * hi).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlocKind {
    Strong,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bloc {
    pub id: usize,
    pub kind: BlocKind,
    /// Zero-based indices, ascending.
    #[serde(skip)]
    pub members: Vec<usize>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlocLinks {
    pub a: usize,
    pub b: usize,
    /// Crossing links as label pairs.
    pub links: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlocPartition {
    pub threshold: f64,
    pub blocs: Vec<Bloc>,
    pub links_between: Vec<BlocLinks>,
    #[serde(skip)]
    pub bloc_of: Vec<usize>,
}

impl BlocPartition {
    pub fn strong_blocs(&self) -> impl Iterator<Item = &Bloc> {
        self.blocs.iter().filter(|b| b.kind == BlocKind::Strong)
    }

    /// Bloc memberships as 1-based index sets, for compact comparisons.
    pub fn member_sets(&self) -> Vec<Vec<usize>> {
        self.blocs.iter().map(|b| b.members.iter().map(|k| k + 1).collect()).collect()
    }

    /// Id of the bloc holding zero-based index `k`.
    pub fn bloc_containing(&self, k: usize) -> usize {
        self.bloc_of[k]
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, k: usize) -> usize {
        let mut r = k;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut k = k;
        while self.0[k] != r {
            let next = self.0[k];
            self.0[k] = r;
            k = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn is_tie(x: f64, threshold: f64) -> bool {
    (x - threshold).abs() <= 1e-12 * threshold.abs().max(1.0)
}

/// Splits the structure into strong and weak blocs.
///
/// A strong bloc is a component of the strong-link subgraph with at least two
/// members, or a single member whose diagonal (a decay rate, say) exceeds the
/// threshold. Blocs are numbered by their smallest member.
pub fn partition(structure: &LinkStructure, threshold: f64) -> Result<BlocPartition> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Input(format!("threshold must be positive, got {threshold}")));
    }
    let n = structure.dim();
    for &(i, j, g) in &structure.links {
        if is_tie(g, threshold) {
            return Err(Error::Input(format!(
                "link ({}, {}) has |g| equal to the threshold {threshold}",
                structure.labels[i], structure.labels[j]
            )));
        }
    }
    let mut strong = DisjointSet::new(n);
    let mut in_strong = vec![false; n];
    for &(i, j, g) in &structure.links {
        if g > threshold {
            strong.union(i, j);
            in_strong[i] = true;
            in_strong[j] = true;
        }
    }
    for k in 0..n {
        let d = structure.diagonal_magnitude(k);
        if is_tie(d, threshold) {
            return Err(Error::Input(format!(
                "diagonal of {} has magnitude equal to the threshold {threshold}",
                structure.labels[k]
            )));
        }
        if d > threshold {
            in_strong[k] = true;
        }
    }
    let mut weak = DisjointSet::new(n);
    for &(i, j, g) in &structure.links {
        if g < threshold && !in_strong[i] && !in_strong[j] {
            weak.union(i, j);
        }
    }

    let mut root_to_bloc = vec![usize::MAX; n];
    let mut bloc_of = vec![0; n];
    let mut blocs: Vec<Bloc> = Vec::new();
    for k in 0..n {
        let (root, kind) = if in_strong[k] { (strong.find(k), BlocKind::Strong) } else { (weak.find(k), BlocKind::Weak) };
        if root_to_bloc[root] == usize::MAX {
            root_to_bloc[root] = blocs.len();
            blocs.push(Bloc { id: blocs.len(), kind, members: Vec::new(), labels: Vec::new() });
        }
        let b = root_to_bloc[root];
        blocs[b].members.push(k);
        blocs[b].labels.push(structure.labels[k].clone());
        bloc_of[k] = b;
    }

    let mut links_between: Vec<BlocLinks> = Vec::new();
    for &(i, j, _) in &structure.links {
        let (a, b) = (bloc_of[i].min(bloc_of[j]), bloc_of[i].max(bloc_of[j]));
        if a == b {
            continue;
        }
        let pair = (structure.labels[i].clone(), structure.labels[j].clone());
        match links_between.iter_mut().find(|l| l.a == a && l.b == b) {
            Some(l) => l.links.push(pair),
            None => links_between.push(BlocLinks { a, b, links: vec![pair] }),
        }
    }
    links_between.sort_by_key(|l| (l.a, l.b));
    Ok(BlocPartition { threshold, blocs, links_between, bloc_of })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardReport {
    pub bloc: usize,
    /// Eigenvalues of the isolated bloc as `(re, im)`.
    pub spectrum: Vec<(f64, f64)>,
    pub min_abs_eigenvalue: f64,
    pub has_near_zero: bool,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remedy: Option<String>,
}

const REMEDY: &str = "close the bloc with an extra strong link between its ends, \
                      or give an end site a strong diagonal term such as a decay rate";

fn sub_matrix(m: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

fn spectrum_of(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if linalg::is_hermitian(m) {
        Ok(linalg::eigh(m).0.into_iter().map(|x| C64::new(x, 0.0)).collect())
    } else {
        linalg::eigenvalues_general(m)
    }
}

/// Diagonalizes every strong bloc in isolation and flags eigenvalues with
/// modulus below `zero_threshold`.
pub fn hazard_check(partition: &BlocPartition, structure: &LinkStructure, zero_threshold: f64) -> Result<Vec<HazardReport>> {
    partition
        .strong_blocs()
        .map(|b| {
            let spectrum = spectrum_of(&sub_matrix(&structure.matrix, &b.members))?;
            let min_abs = spectrum.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            let flagged = min_abs < zero_threshold;
            Ok(HazardReport {
                bloc: b.id,
                spectrum: spectrum.iter().map(|z| (z.re, z.im)).collect(),
                min_abs_eigenvalue: min_abs,
                has_near_zero: flagged,
                threshold: zero_threshold,
                remedy: flagged.then(|| REMEDY.to_string()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageEstimate {
    pub from: usize,
    pub to: usize,
    pub n_weak_links: usize,
    /// `(W/S)^(2n)`; an order of magnitude, not a bound.
    pub order_estimate: f64,
    pub weak: f64,
    pub strong: f64,
}

/// Fewest weak links on any path between two blocs, by 0-1 breadth-first
/// search with strong links free.
pub fn leakage_order(partition: &BlocPartition, structure: &LinkStructure, from: usize, to: usize) -> Result<LeakageEstimate> {
    let nb = partition.blocs.len();
    if from >= nb || to >= nb {
        return Err(Error::Input(format!("bloc index out of range (have {nb} blocs)")));
    }
    if from == to {
        return Ok(LeakageEstimate { from, to, n_weak_links: 0, order_estimate: 1.0, weak: 0.0, strong: 0.0 });
    }
    let n = structure.dim();
    let thr = partition.threshold;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, g) in &structure.links {
        adj[i].push((j, g));
        adj[j].push((i, g));
    }
    let mut dist = vec![usize::MAX; n];
    let mut parent: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut queue = VecDeque::new();
    for &k in &partition.blocs[from].members {
        dist[k] = 0;
        queue.push_back(k);
    }
    while let Some(u) = queue.pop_front() {
        for &(v, g) in &adj[u] {
            let w = usize::from(g < thr);
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                parent[v] = Some((u, g));
                if w == 0 {
                    queue.push_front(v);
                } else {
                    queue.push_back(v);
                }
            }
        }
    }
    let end = partition.blocs[to]
        .members
        .iter()
        .copied()
        .filter(|&k| dist[k] != usize::MAX)
        .min_by_key(|&k| (dist[k], k))
        .ok_or(Error::NoPath { from, to })?;

    let mut path = vec![end];
    let mut weak = 0.0_f64;
    let mut cur = end;
    while let Some((p, g)) = parent[cur] {
        if g < thr {
            weak = weak.max(g);
        }
        path.push(p);
        cur = p;
    }
    let strong = structure
        .links
        .iter()
        .filter(|&&(i, j, g)| g > thr && (path.contains(&i) || path.contains(&j)))
        .map(|l| l.2)
        .fold(f64::INFINITY, f64::min);
    let strong = if strong.is_finite() { strong } else { thr };
    let n_weak = dist[end];
    Ok(LeakageEstimate {
        from,
        to,
        n_weak_links: n_weak,
        order_estimate: (weak / strong).powi(2 * n_weak as i32),
        weak,
        strong,
    })
}

/// Leakage estimates for every ordered pair of distinct connected blocs.
pub fn leakage_matrix(partition: &BlocPartition, structure: &LinkStructure) -> Vec<LeakageEstimate> {
    let nb = partition.blocs.len();
    let mut out = Vec::new();
    for a in 0..nb {
        for b in a + 1..nb {
            if let Ok(e) = leakage_order(partition, structure, a, b) {
                out.push(e);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenLocalization {
    pub energy: f64,
    pub bloc: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub eigenvectors: Vec<EigenLocalization>,
    /// `1 - 4 (W/S)^2` with the largest weak and smallest strong link.
    pub bound: f64,
    pub min_weight: f64,
    pub passed: bool,
}

/// Largest single-bloc weight of every exact eigenvector.
pub fn localization_check(structure: &LinkStructure, partition: &BlocPartition) -> Result<LocalizationReport> {
    if !linalg::is_hermitian(&structure.matrix) {
        return Err(Error::Contract("localization check needs a Hermitian matrix".into()));
    }
    let thr = partition.threshold;
    let weak = structure.links.iter().filter(|l| l.2 < thr).map(|l| l.2).fold(0.0, f64::max);
    let strong = structure.links.iter().filter(|l| l.2 > thr).map(|l| l.2).fold(f64::INFINITY, f64::min);
    let bound = if strong.is_finite() { 1.0 - 4.0 * (weak / strong).powi(2) } else { 0.0 };

    let (vals, vecs) = linalg::eigh(&structure.matrix);
    let nb = partition.blocs.len();
    let eigenvectors: Vec<EigenLocalization> = vals
        .iter()
        .enumerate()
        .map(|(c, &energy)| {
            let mut w = vec![0.0; nb];
            for (k, z) in vecs.column(c).iter().enumerate() {
                w[partition.bloc_of[k]] += z.norm_sqr();
            }
            let (bloc, weight) = w.iter().copied().enumerate().fold((0, 0.0), |a, (b, x)| if x > a.1 { (b, x) } else { a });
            EigenLocalization { energy, bloc, weight }
        })
        .collect();
    let min_weight = eigenvectors.iter().map(|e| e.weight).fold(1.0, f64::min);
    Ok(LocalizationReport { eigenvectors, bound, min_weight, passed: min_weight > bound - 1e-12 })
}

/// Smallest distance between isolated-bloc eigenvalues of two different
/// strong blocs. Small values mean the strong couplings are too regular for
/// the blocs to stay apart.
pub fn min_inter_bloc_energy_difference(partition: &BlocPartition, structure: &LinkStructure) -> Result<Option<f64>> {
    let spectra = partition
        .strong_blocs()
        .map(|b| spectrum_of(&sub_matrix(&structure.matrix, &b.members)))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<f64> = None;
    for a in 0..spectra.len() {
        for b in a + 1..spectra.len() {
            for x in &spectra[a] {
                for y in &spectra[b] {
                    let d = (x - y).norm();
                    best = Some(best.map_or(d, |m: f64| m.min(d)));
                }
            }
        }
    }
    Ok(best)
}

//! Instantaneous spectra and level tracking along a bias schedule.
//!
//! Levels are followed by eigenvector overlap between neighbouring grid
//! samples, never by energy order. Every discontinuity of the Hamiltonian is
//! sampled twice (left limit, then the new value) so that the matching across
//! a sudden jump is explicit.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chain::ReferenceEigenbasis;
use crate::propagator::{Dynamics, TimeDependentHamiltonian};
use crate::{linalg, Error, Result, C64};

/// Consecutive tracked eigenvectors must overlap by more than this.
pub const OVERLAP_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// Competing overlaps closer than this make a match ambiguous.
pub const AMBIGUITY_MARGIN: f64 = 1e-3;
/// Number of interval halvings tried before giving up on a match.
pub const MAX_REFINEMENTS: usize = 4;
pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Eigenvalues (ascending) and eigenvectors of `H(t)`.
pub fn instantaneous_spectrum(h: &TimeDependentHamiltonian, t: f64) -> Result<(Vec<f64>, DMatrix<C64>)> {
    require_hermitian(h)?;
    Ok(linalg::eigh(&h.energy_matrix(t)))
}

fn require_hermitian(h: &TimeDependentHamiltonian) -> Result<()> {
    if h.is_hermitian() {
        Ok(())
    } else {
        Err(Error::Contract("level tracking needs a Hermitian Hamiltonian".into()))
    }
}

/// `n` equally spaced times covering `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Regular,
    /// Left-hand limit at a jump.
    BeforeJump,
    /// Value just after a jump.
    AfterJump,
}

#[derive(Debug, Clone)]
pub struct LevelDiagram {
    pub times: Vec<f64>,
    pub kinds: Vec<SampleKind>,
    /// `energies[k][c]`: energy of curve `c` at sample `k`.
    pub energies: Vec<Vec<f64>>,
    /// Column `c` of `vectors[k]` is the eigenvector of curve `c` at sample `k`.
    pub vectors: Vec<DMatrix<C64>>,
    pub jump_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapMinimum {
    pub pair: (usize, usize),
    pub t: f64,
    pub gap: f64,
}

impl LevelDiagram {
    pub fn n_curves(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn curve(&self, c: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[c]).collect()
    }

    /// `t,E1,...,EN`, columns in tracked-curve order. Jump times appear twice.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in 1..=self.n_curves() {
            let _ = write!(out, ",E{c}");
        }
        out.push('\n');
        for (t, e) in self.times.iter().zip(&self.energies) {
            let _ = write!(out, "{t:.9}");
            for x in e {
                let _ = write!(out, ",{x:.12e}");
            }
            out.push('\n');
        }
        out
    }

    /// Contiguous sample ranges not interrupted by a jump.
    fn pieces(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 0..self.times.len() {
            if self.kinds[k] == SampleKind::BeforeJump {
                out.push(start..k + 1);
                start = k + 1;
            }
        }
        if start < self.times.len() {
            out.push(start..self.times.len());
        }
        out
    }
}

fn greedy_assignment(overlaps: &DMatrix<f64>) -> Vec<usize> {
    let n = overlaps.nrows();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| overlaps[*b].total_cmp(&overlaps[*a]).then(a.cmp(b)));
    let mut row = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (i, j) in pairs {
        if row[i] == usize::MAX && !used[j] {
            row[i] = j;
            used[j] = true;
        }
    }
    row
}

fn overlap_matrix(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<f64> {
    (a.adjoint() * b).map(|z| z.norm())
}

/// Whether the assignment is unambiguous and every overlap is large enough.
fn assignment_is_clean(overlaps: &DMatrix<f64>, assignment: &[usize]) -> bool {
    assignment.iter().enumerate().all(|(i, &j)| {
        let best = overlaps[(i, j)];
        best > OVERLAP_THRESHOLD
            && (0..overlaps.ncols()).all(|k| k == j || overlaps[(i, k)] < best - AMBIGUITY_MARGIN)
    })
}

/// Reorders the columns of `vecs` so that column `c` continues curve `c`.
fn reorder(values: &[f64], vecs: &DMatrix<C64>, assignment: &[usize]) -> (Vec<f64>, DMatrix<C64>) {
    let e = assignment.iter().map(|&j| values[j]).collect();
    let v = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, assignment[c])]);
    (e, v)
}

struct Tracker<'a> {
    h: &'a TimeDependentHamiltonian,
}

impl Tracker<'_> {
    fn eig_on_piece(&self, t: f64, anchor: f64) -> (Vec<f64>, DMatrix<C64>) {
        let n = self.h.dim();
        let mut m = DMatrix::zeros(n, n);
        self.h.hamiltonian_into(t, anchor, &mut m);
        linalg::eigh(&m)
    }

    /// Assignment from the curves in `prev` (already in curve order) to the
    /// eigen-columns of `next`, bisecting `[ta, tb]` if the direct match fails.
    fn match_within_piece(
        &self,
        ta: f64,
        prev: &DMatrix<C64>,
        tb: f64,
        next: &DMatrix<C64>,
        anchor: f64,
        depth: usize,
    ) -> Result<Vec<usize>> {
        let overlaps = overlap_matrix(prev, next);
        let assignment = greedy_assignment(&overlaps);
        if assignment_is_clean(&overlaps, &assignment) {
            return Ok(assignment);
        }
        if depth >= MAX_REFINEMENTS {
            return Err(Error::GridTooCoarse { t: 0.5 * (ta + tb), suggested_spacing: (tb - ta) / 2.0 });
        }
        let tm = 0.5 * (ta + tb);
        let anchor_m = if anchor > ta && anchor < tb { tm } else { anchor };
        let (vals_m, vecs_m) = self.eig_on_piece(tm, anchor_m);
        let first = self.match_within_piece(ta, prev, tm, &vecs_m, anchor_m, depth + 1)?;
        let (_, mid) = reorder(&vals_m, &vecs_m, &first);
        self.match_within_piece(tm, &mid, tb, next, anchor_m, depth + 1)
    }
}

/// Tracks all levels of `h` along `grid`, inserting left and right samples at
/// every jump of the bias inside the grid range.
pub fn track_levels(h: &TimeDependentHamiltonian, grid: &[f64]) -> Result<LevelDiagram> {
    require_hermitian(h)?;
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("level grid must hold at least two strictly increasing times".into()));
    }
    let (t0, t1) = (grid[0], grid[grid.len() - 1]);
    let mut jumps: Vec<f64> = h
        .schedules()
        .flat_map(|s| s.jump_times())
        .filter(|&t| t > t0 && t <= t1)
        .collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut samples: Vec<(f64, SampleKind)> = Vec::new();
    let mut ji = 0;
    for &t in grid {
        while ji < jumps.len() && jumps[ji] <= t + 1e-12 {
            samples.push((jumps[ji], SampleKind::BeforeJump));
            samples.push((jumps[ji], SampleKind::AfterJump));
            ji += 1;
        }
        let duplicate = samples.last().is_some_and(|&(s, _)| (s - t).abs() < 1e-12);
        if !duplicate {
            samples.push((t, SampleKind::Regular));
        }
    }
    // A jump exactly at the end has no right-hand sample to move to.
    if samples.last().map(|s| s.1) == Some(SampleKind::AfterJump) {
        samples.pop();
    }

    let tracker = Tracker { h };
    let mut times = Vec::with_capacity(samples.len());
    let mut kinds = Vec::with_capacity(samples.len());
    let mut energies = Vec::with_capacity(samples.len());
    let mut vectors: Vec<DMatrix<C64>> = Vec::with_capacity(samples.len());

    for (k, &(t, kind)) in samples.iter().enumerate() {
        let (vals, vecs) = match kind {
            SampleKind::BeforeJump => linalg::eigh(&h.energy_matrix_left(t)),
            _ => linalg::eigh(&h.energy_matrix(t)),
        };
        let (e, v) = if k == 0 {
            (vals, vecs)
        } else {
            let prev = &vectors[k - 1];
            let assignment = if kind == SampleKind::AfterJump {
                greedy_assignment(&overlap_matrix(prev, &vecs))
            } else {
                let ta = times[k - 1];
                tracker.match_within_piece(ta, prev, t, &vecs, 0.5 * (ta + t), 0)?
            };
            reorder(&vals, &vecs, &assignment)
        };
        times.push(t);
        kinds.push(kind);
        energies.push(e);
        vectors.push(v);
    }
    Ok(LevelDiagram { times, kinds, energies, vectors, jump_times: jumps })
}

/// Local minima of the separation between curves adjacent in energy.
///
/// A piece on which a gap is constant reports a single minimum at its start.
pub fn min_gaps(diagram: &LevelDiagram) -> Vec<GapMinimum> {
    let n = diagram.n_curves();
    let mut out = Vec::new();
    for piece in diagram.pieces() {
        let idx: Vec<usize> = piece.collect();
        if idx.is_empty() {
            continue;
        }
        for a in 0..n {
            for b in a + 1..n {
                let gaps: Vec<f64> = idx.iter().map(|&k| (diagram.energies[k][a] - diagram.energies[k][b]).abs()).collect();
                let adjacent = |k: usize| {
                    let e = &diagram.energies[idx[k]];
                    let (lo, hi) = if e[a] < e[b] { (e[a], e[b]) } else { (e[b], e[a]) };
                    !e.iter().any(|&x| x > lo && x < hi)
                };
                let (min, max) = gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(m, x), &g| (m.min(g), x.max(g)));
                if max - min <= 1e-9 * (1.0 + max) {
                    if adjacent(0) {
                        out.push(GapMinimum { pair: (a, b), t: diagram.times[idx[0]], gap: gaps[0] });
                    }
                    continue;
                }
                let mut k = 1;
                while k + 1 < gaps.len() {
                    if gaps[k] < gaps[k - 1] {
                        // Walk across a plateau, then require a rise.
                        let mut end = k;
                        while end + 1 < gaps.len() && gaps[end + 1] == gaps[k] {
                            end += 1;
                        }
                        if end + 1 < gaps.len() && gaps[end + 1] > gaps[k] && adjacent(k) {
                            out.push(GapMinimum { pair: (a, b), t: diagram.times[idx[k]], gap: gaps[k] });
                        }
                        k = end + 1;
                    } else {
                        k += 1;
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.pair.cmp(&y.pair)));
    out
}

/// Curve reached from `start_curve` by adiabatic following, re-anchoring at
/// each jump to the post-jump eigenvector of largest overlap.
pub fn adiabatic_prediction(diagram: &LevelDiagram, start_curve: usize) -> Result<usize> {
    let mut c = start_curve;
    for k in 1..diagram.times.len() {
        if diagram.kinds[k] == SampleKind::AfterJump {
            let before = diagram.vectors[k - 1].column(c).into_owned();
            let after = &diagram.vectors[k];
            let overlaps: Vec<f64> = after.column_iter().map(|v| before.dotc(&v).norm()).collect();
            let (best, &ov) = overlaps
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty diagram");
            let second = overlaps.iter().enumerate().filter(|(j, _)| *j != best).map(|(_, &x)| x).fold(0.0, f64::max);
            if ov <= OVERLAP_THRESHOLD || ov - second < AMBIGUITY_MARGIN {
                return Err(Error::AmbiguousJump { t: diagram.times[k] });
            }
            c = best;
        }
    }
    Ok(c)
}

/// One step of a predicted path: the dominant reference state of the
/// followed curve at a segment boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub kind: SampleKind,
    pub curve: usize,
    pub reference_state: usize,
    pub weight: f64,
}

/// Adiabatic path of reference state `start_ref` (0-based), reported at each
/// time in `checkpoints` (and on both sides of jumps that fall on them).
pub fn predicted_path(
    diagram: &LevelDiagram,
    basis: &ReferenceEigenbasis,
    start_ref: usize,
    checkpoints: &[f64],
) -> Result<Vec<PathPoint>> {
    let dominant = |k: usize, c: usize| -> (usize, f64) {
        let pops = basis.populations(&diagram.vectors[k].column(c).into_owned());
        pops.iter().enumerate().fold((0, 0.0), |acc, (j, &p)| if p > acc.1 { (j, p) } else { acc })
    };
    let target = basis.state(start_ref);
    let mut c = diagram.vectors[0]
        .column_iter()
        .map(|v| target.dotc(&v).norm())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j)
        .ok_or_else(|| Error::Input("empty diagram".into()))?;

    let mut out = Vec::new();
    let record = |k: usize, c: usize, out: &mut Vec<PathPoint>| {
        let (r, w) = dominant(k, c);
        out.push(PathPoint { t: diagram.times[k], kind: diagram.kinds[k], curve: c, reference_state: r, weight: w });
    };
    let on_checkpoint = |t: f64| checkpoints.iter().any(|&x| (x - t).abs() < 1e-9);
    if on_checkpoint(diagram.times[0]) {
        record(0, c, &mut out);
    }
    for k in 1..diagram.times.len() {
        if diagram.kinds[k] == SampleKind::AfterJump {
            let sub = LevelDiagram {
                times: diagram.times[k - 1..=k].to_vec(),
                kinds: vec![SampleKind::BeforeJump, SampleKind::AfterJump],
                energies: diagram.energies[k - 1..=k].to_vec(),
                vectors: diagram.vectors[k - 1..=k].to_vec(),
                jump_times: vec![diagram.times[k]],
            };
            c = adiabatic_prediction(&sub, c)?;
        }
        if on_checkpoint(diagram.times[k]) {
            record(k, c, &mut out);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainSystem, Site};
    use crate::linalg::to_complex;
    use crate::pulse::{concat, primitive, PulseSchedule, PulseSegment, Primitive};
    use nalgebra::DVector;

    fn eq9_system() -> (ChainSystem, TimeDependentHamiltonian) {
        let sys = ChainSystem::five_site();
        let s = concat(&[
            primitive(Primitive::A, Site(3), 0.0, 20.0).unwrap(),
            primitive(Primitive::B, Site(3), 20.0, 20.0).unwrap(),
            primitive(Primitive::A, Site(3), 40.0, 20.0).unwrap(),
        ])
        .unwrap();
        let h = sys.hamiltonian(&sys.single_bias(s)).unwrap();
        (sys, h)
    }

    fn landau_zener(delta: f64) -> TimeDependentHamiltonian {
        let base = DMatrix::from_row_slice(2, 2, &[0.0, delta, delta, 0.0]);
        let diag = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let sweep = PulseSchedule::new(Site(1), vec![PulseSegment::new(-10.0, 20.0, -10.0, 1.0).unwrap()]).unwrap();
        TimeDependentHamiltonian::new(to_complex(&base), true).unwrap().with_bias(diag, sweep).unwrap()
    }

    #[test]
    fn static_spectrum_of_five_site_chain() {
        let (_, h) = eq9_system();
        let (vals, vecs) = instantaneous_spectrum(&h, -1.0).unwrap();
        for (v, ideal) in vals.iter().zip([-60.0, -30.0, 0.0, 30.0, 60.0]) {
            assert!((v - ideal).abs() < 0.1, "{v} vs {ideal}");
        }
        let m = h.energy_matrix(-1.0);
        for (k, &e) in vals.iter().enumerate() {
            let v = vecs.column(k);
            assert!((&m * v - v * C64::new(e, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = DMatrix::from_row_slice(1, 1, &[C64::new(0.0, -1.0)]);
        let h = TimeDependentHamiltonian::new(m, false).unwrap();
        assert!(matches!(instantaneous_spectrum(&h, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn one_by_one_spectrum() {
        let m = DMatrix::from_row_slice(1, 1, &[C64::new(2.5, 0.0)]);
        let h = TimeDependentHamiltonian::new(m, true).unwrap();
        assert_eq!(instantaneous_spectrum(&h, 0.0).unwrap().0, vec![2.5]);
    }

    #[test]
    fn landau_zener_minimum_gap() {
        let delta = 0.5;
        let h = landau_zener(delta);
        let d = track_levels(&h, &uniform_grid(-10.0, 9.99, 2001)).unwrap();
        let gaps = min_gaps(&d);
        assert_eq!(gaps.len(), 1, "{gaps:?}");
        assert!((gaps[0].gap - 2.0 * delta).abs() < 1e-4);
        assert!(gaps[0].t.abs() < 0.02);
    }

    #[test]
    fn constant_hamiltonian_gives_flat_curves() {
        let sys = ChainSystem::five_site();
        let h = sys.hamiltonian(&Default::default()).unwrap();
        let d = track_levels(&h, &uniform_grid(0.0, 10.0, 50)).unwrap();
        for c in 0..5 {
            let curve = d.curve(c);
            assert!(curve.iter().all(|&e| (e - curve[0]).abs() < 1e-10));
            assert_eq!(adiabatic_prediction(&d, c).unwrap(), c);
        }
        let gaps = min_gaps(&d);
        assert_eq!(gaps.len(), 4);
        assert!(gaps.iter().all(|g| g.t == 0.0));
    }

    #[test]
    fn eq9_diagram_crossing_pattern() {
        let (sys, h) = eq9_system();
        let basis = sys.reference_basis().unwrap();
        let d = track_levels(&h, &uniform_grid(0.0, 60.0, 1201)).unwrap();
        assert_eq!(d.jump_times, vec![20.0, 40.0, 60.0]);

        // Curve that starts on reference state #1 (+30) comes down to ~0 at τ.
        let path = predicted_path(&d, &basis, 0, &[0.0, 20.0, 40.0, 60.0]).unwrap();
        let states: Vec<usize> = path.iter().map(|p| p.reference_state).collect();
        // 0: #1; 20⁻: lone site (#3); 20⁺: #3; 40⁻: #2; 40⁺: #2; 60⁻: #2.
        assert_eq!(states, vec![0, 2, 2, 1, 1, 1]);

        let start = path[0].curve;
        let end = adiabatic_prediction(&d, start).unwrap();
        let k_end = d.times.len() - 1;
        let pops = basis.populations(&d.vectors[k_end].column(end).into_owned());
        assert!(pops[1] > 0.95);

        // #4 stays on its flat curve near +60.
        let p4 = predicted_path(&d, &basis, 3, &[0.0, 60.0]).unwrap();
        assert!(p4.iter().all(|p| p.reference_state == 3));
        let e4 = d.curve(p4[0].curve);
        assert!(e4.iter().all(|&e| (e - 60.0).abs() < 0.2));
    }

    #[test]
    fn eq9_gaps_are_of_weak_scale() {
        let (_, h) = eq9_system();
        let d = track_levels(&h, &uniform_grid(0.0, 60.0, 1201)).unwrap();
        let gaps = min_gaps(&d);
        let near: Vec<_> = gaps.iter().filter(|g| g.gap < 5.0).collect();
        assert!(near.len() >= 3, "{gaps:?}");
        assert!(near.iter().all(|g| g.gap > 0.3 && g.gap < 3.0));
    }

    #[test]
    fn coarse_grid_is_reported() {
        let h = landau_zener(1e-4);
        // A sample right at the crossing sees an even superposition, which no
        // amount of halving can match to its pure neighbours.
        let err = track_levels(&h, &uniform_grid(-10.0, 10.0, 5)).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }), "{err}");
    }
}

//! Piecewise-linear bias signals.
//!
//! A [`PulseSchedule`] is a list of non-overlapping half-open segments
//! `[start, start + duration)` on one site, each carrying a linear ramp.
//! Outside every segment the bias is zero, so switching a segment on or off
//! is an exact discontinuity. [`PulseSchedule::breakpoints`] reports every
//! time where the value or the slope jumps so that integrators can align
//! steps with them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::Site;
use crate::{Error, Result};

/// Pulse length used throughout the five-site examples.
pub const DEFAULT_TAU: f64 = 20.0;

/// Two times closer than this are treated as the same breakpoint.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    #[serde(rename = "t0")]
    pub t_start: f64,
    #[serde(rename = "dur")]
    pub duration: f64,
    #[serde(rename = "v0")]
    pub value_start: f64,
    pub slope: f64,
}

impl PulseSegment {
    pub fn new(t_start: f64, duration: f64, value_start: f64, slope: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::Input(format!("segment duration must be positive, got {duration}")));
        }
        if !t_start.is_finite() || !value_start.is_finite() || !slope.is_finite() {
            return Err(Error::Input("segment parameters must be finite".into()));
        }
        Ok(Self { t_start, duration, value_start, slope })
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end()
    }

    /// Value of the ramp extended to any `t`.
    pub fn ramp(&self, t: f64) -> f64 {
        self.value_start + self.slope * (t - self.t_start)
    }

    pub fn value_end(&self) -> f64 {
        self.ramp(self.t_end())
    }

    fn shifted(&self, dt: f64) -> Self {
        Self { t_start: self.t_start + dt, ..*self }
    }
}

/// Bias signal on one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    site: Site,
    segments: Vec<PulseSegment>,
}

impl PulseSchedule {
    /// Sorts the segments by start time and rejects overlaps.
    pub fn new(site: Site, mut segments: Vec<PulseSegment>) -> Result<Self> {
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for pair in segments.windows(2) {
            if pair[1].t_start < pair[0].t_end() - TIME_EPS {
                return Err(Error::Composition(format!(
                    "segments starting at {} and {} overlap",
                    pair[0].t_start, pair[1].t_start
                )));
            }
        }
        Ok(Self { site, segments })
    }

    pub fn empty(site: Site) -> Self {
        Self { site, segments: Vec::new() }
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `[first start, last end)`, or `None` for the empty schedule.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.segments.first()?.t_start, self.segments.last()?.t_end()))
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.segments.iter().find(|s| s.contains(t)).map_or(0.0, |s| s.ramp(t))
    }

    /// Value at `t` of the linear piece that is active at `anchor`.
    ///
    /// Integrators pass the midpoint of the current step as `anchor`, so a step
    /// ending exactly on a discontinuity sees the left-hand limit there.
    pub fn evaluate_on_piece(&self, t: f64, anchor: f64) -> f64 {
        self.segments.iter().find(|s| s.contains(anchor)).map_or(0.0, |s| s.ramp(t))
    }

    /// Left-hand limit `f(t⁻)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| t > s.t_start && t <= s.t_end() + TIME_EPS)
            .map_or(0.0, |s| s.ramp(t))
    }

    fn slope_at(&self, t: f64) -> f64 {
        self.segments.iter().find(|s| s.contains(t)).map_or(0.0, |s| s.slope)
    }

    fn left_slope(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| t > s.t_start && t <= s.t_end() + TIME_EPS)
            .map_or(0.0, |s| s.slope)
    }

    /// Every segment boundary where the value or the slope changes, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in &self.segments {
            for t in [s.t_start, s.t_end()] {
                let value_jump = (self.left_limit(t) - self.evaluate(t)).abs() > TIME_EPS;
                let slope_jump = (self.left_slope(t) - self.slope_at(t)).abs() > TIME_EPS;
                if (value_jump || slope_jump) && out.last().map_or(true, |&l| t - l > TIME_EPS) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// Breakpoints where the value itself is discontinuous.
    pub fn jump_times(&self) -> Vec<f64> {
        self.breakpoints()
            .into_iter()
            .filter(|&t| (self.left_limit(t) - self.evaluate(t)).abs() > TIME_EPS)
            .collect()
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self { site: self.site, segments: self.segments.iter().map(|s| s.shifted(dt)).collect() }
    }

    /// Total duration of the support, zero when empty.
    pub fn span(&self) -> f64 {
        self.support().map_or(0.0, |(a, b)| b - a)
    }
}

/// The six primitive bias shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Primitive {
    pub const ALL: [Primitive; 6] = [Primitive::A, Primitive::B, Primitive::C, Primitive::D, Primitive::E, Primitive::F];

    /// `(value at start, slope)` for a pulse of length `tau` starting at zero.
    fn ramp(self, tau: f64) -> (f64, f64) {
        match self {
            Primitive::A => (0.0, 1.0),
            Primitive::B => (0.0, -1.0),
            Primitive::C => (2.0 * tau, -2.0),
            Primitive::D => (-2.0 * tau, 2.0),
            Primitive::E => (-2.0 * tau, 1.0),
            Primitive::F => (2.0 * tau, -1.0),
        }
    }

    pub fn name(self) -> char {
        match self {
            Primitive::A => 'a',
            Primitive::B => 'b',
            Primitive::C => 'c',
            Primitive::D => 'd',
            Primitive::E => 'e',
            Primitive::F => 'f',
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Primitive::A),
            "b" => Ok(Primitive::B),
            "c" => Ok(Primitive::C),
            "d" => Ok(Primitive::D),
            "e" => Ok(Primitive::E),
            "f" => Ok(Primitive::F),
            other => Err(Error::Input(format!("unknown primitive {other:?}; expected one of a-f"))),
        }
    }
}

/// One of the six primitive pulses on `site`, starting at `t0`.
///
/// * `a`: `t - t0`, `b = -a`
/// * `c`: `2 (τ - s)` with `s = t - t0`, `d = -c`
/// * `e`: `-2 (τ - s/2)`, `f = -e`
pub fn primitive(kind: Primitive, site: Site, t0: f64, tau: f64) -> Result<PulseSchedule> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Input(format!("pulse length must be positive, got {tau}")));
    }
    let (v0, slope) = kind.ramp(tau);
    PulseSchedule::new(site, vec![PulseSegment::new(t0, tau, v0, slope)?])
}

/// Serial composition of schedules on the same site with disjoint supports.
pub fn concat(schedules: &[PulseSchedule]) -> Result<PulseSchedule> {
    let first = schedules
        .first()
        .ok_or_else(|| Error::Composition("nothing to concatenate".into()))?;
    let site = first.site;
    let mut segments = Vec::new();
    for s in schedules {
        if s.site != site {
            return Err(Error::Composition(format!(
                "schedules act on different sites ({} and {})",
                site.0, s.site.0
            )));
        }
        segments.extend_from_slice(&s.segments);
    }
    PulseSchedule::new(site, segments)
}

/// Bias schedules keyed by site; sites without an entry are unbiased.
pub type BiasSchedules = BTreeMap<Site, PulseSchedule>;

/// Sorted union of the breakpoints of several schedules.
pub fn merged_breakpoints<'a>(schedules: impl IntoIterator<Item = &'a PulseSchedule>) -> Vec<f64> {
    let mut all: Vec<f64> = schedules.into_iter().flat_map(|s| s.breakpoints()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
    all
}

/// JSON pulse description: either explicit segments or a named primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PulseSpec {
    Segments { site: usize, segments: Vec<PulseSegment> },
    Primitive {
        primitive: String,
        t0: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        site: Option<usize>,
    },
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

impl PulseSpec {
    /// `default_site` is used by the primitive shorthand when it names no site.
    pub fn to_schedule(&self, default_site: Option<Site>) -> Result<PulseSchedule> {
        match self {
            PulseSpec::Segments { site, segments } => {
                let segs = segments
                    .iter()
                    .map(|s| PulseSegment::new(s.t_start, s.duration, s.value_start, s.slope))
                    .collect::<Result<Vec<_>>>()?;
                PulseSchedule::new(Site(*site), segs)
            }
            PulseSpec::Primitive { primitive: name, t0, tau, site } => {
                let site = site
                    .map(Site)
                    .or(default_site)
                    .ok_or_else(|| Error::Input("primitive pulse needs a site".into()))?;
                primitive(name.parse()?, site, *t0, *tau)
            }
        }
    }
}

/// Groups pulse descriptions by site and concatenates each group.
pub fn schedules_from_specs(specs: &[PulseSpec], default_site: Option<Site>) -> Result<BiasSchedules> {
    let mut by_site: BTreeMap<Site, Vec<PulseSchedule>> = BTreeMap::new();
    for spec in specs {
        let s = spec.to_schedule(default_site)?;
        by_site.entry(s.site()).or_default().push(s);
    }
    by_site.into_iter().map(|(site, list)| Ok((site, concat(&list)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S3: Site = Site(3);

    fn eq9(tau: f64) -> PulseSchedule {
        concat(&[
            primitive(Primitive::A, S3, 0.0, tau).unwrap(),
            primitive(Primitive::B, S3, tau, tau).unwrap(),
            primitive(Primitive::A, S3, 2.0 * tau, tau).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn primitive_a_ramps_then_switches_off() {
        let a = primitive(Primitive::A, S3, 0.0, 20.0).unwrap();
        assert_eq!(a.evaluate(10.0), 10.0);
        assert_eq!(a.evaluate(20.0), 0.0);
        assert!((a.left_limit(20.0) - 20.0).abs() < 1e-12);
        assert_eq!(a.evaluate(-5.0), 0.0);
    }

    #[test]
    fn primitives_c_and_e_endpoints() {
        let c = primitive(Primitive::C, S3, 0.0, 20.0).unwrap();
        assert_eq!(c.evaluate(0.0), 40.0);
        assert!(c.left_limit(20.0).abs() < 1e-12);
        let e = primitive(Primitive::E, S3, 0.0, 20.0).unwrap();
        assert_eq!(e.evaluate(0.0), -40.0);
        assert!((e.left_limit(20.0) + 20.0).abs() < 1e-12);
        assert_eq!(e.evaluate(20.0), 0.0);
        assert_eq!(primitive(Primitive::B, S3, 0.0, 20.0).unwrap().evaluate(15.0), -15.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(primitive(Primitive::A, S3, 0.0, 0.0).is_err());
        assert!("g".parse::<Primitive>().is_err());
        assert!(PulseSegment::new(0.0, -1.0, 0.0, 0.0).is_err());
        let overlap = concat(&[
            primitive(Primitive::A, S3, 0.0, 20.0).unwrap(),
            primitive(Primitive::B, S3, 10.0, 20.0).unwrap(),
        ]);
        assert!(matches!(overlap, Err(Error::Composition(_))));
        let other_site = concat(&[
            primitive(Primitive::A, S3, 0.0, 20.0).unwrap(),
            primitive(Primitive::B, Site(6), 20.0, 20.0).unwrap(),
        ]);
        assert!(other_site.is_err());
    }

    #[test]
    fn compound_signal_values_and_breakpoints() {
        let f = eq9(20.0);
        assert_eq!(f.evaluate(30.0), -10.0);
        assert_eq!(f.evaluate(50.0), 10.0);
        assert_eq!(f.breakpoints(), vec![0.0, 20.0, 40.0, 60.0]);
        assert_eq!(f.jump_times(), vec![20.0, 40.0, 60.0]);
        assert_eq!(f.span(), 60.0);
    }

    #[test]
    fn concat_single_and_disjoint() {
        let a = primitive(Primitive::A, S3, 0.0, 20.0).unwrap();
        assert_eq!(concat(&[a.clone()]).unwrap(), a);

        let e = primitive(Primitive::E, S3, 0.0, 20.0).unwrap();
        let f = primitive(Primitive::F, S3, 20.0, 20.0).unwrap();
        let both = concat(&[e.clone(), f.clone()]).unwrap();
        for k in 0..200 {
            let t = -5.0 + 0.25 * k as f64;
            assert_eq!(both.evaluate(t), e.evaluate(t) + f.evaluate(t));
        }
    }

    #[test]
    fn continuous_join_is_not_a_breakpoint() {
        let s = PulseSchedule::new(
            S3,
            vec![PulseSegment::new(0.0, 1.0, 0.0, 2.0).unwrap(), PulseSegment::new(1.0, 1.0, 2.0, 2.0).unwrap()],
        )
        .unwrap();
        assert_eq!(s.breakpoints(), vec![0.0, 2.0]);
    }

    #[test]
    fn piece_evaluation_uses_anchor() {
        let a = primitive(Primitive::A, S3, 0.0, 20.0).unwrap();
        assert_eq!(a.evaluate_on_piece(20.0, 19.9), 20.0);
        assert_eq!(a.evaluate_on_piece(20.0, 20.1), 0.0);
    }

    #[test]
    fn pulse_spec_json_forms() {
        let specs: Vec<PulseSpec> = serde_json::from_str(
            r#"[{"primitive": "a", "t0": 0, "tau": 20},
                {"site": 3, "segments": [{"t0": 20, "dur": 20, "v0": 0, "slope": -1}]},
                {"primitive": "a", "t0": 40}]"#,
        )
        .unwrap();
        let map = schedules_from_specs(&specs, Some(S3)).unwrap();
        assert_eq!(map[&S3], eq9(20.0));
        assert!(PulseSpec::Primitive { primitive: "a".into(), t0: 0.0, tau: 20.0, site: None }
            .to_schedule(None)
            .is_err());
    }

    fn any_primitive() -> impl Strategy<Value = Primitive> {
        prop::sample::select(Primitive::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn negation_pairs_are_exact(t in -10.0f64..50.0, tau in 1.0f64..40.0) {
            use Primitive::*;
            for (p, q) in [(A, B), (C, D), (E, F)] {
                let x = primitive(p, S3, 0.0, tau).unwrap().evaluate(t);
                let y = primitive(q, S3, 0.0, tau).unwrap().evaluate(t);
                prop_assert_eq!(x, -y);
            }
        }

        #[test]
        fn time_shift_covariance(kind in any_primitive(), t in -10.0f64..80.0, t0 in -20.0f64..30.0, tau in 1.0f64..40.0) {
            let shifted = primitive(kind, S3, t0, tau).unwrap().evaluate(t);
            let base = primitive(kind, S3, 0.0, tau).unwrap().evaluate(t - t0);
            prop_assert!((shifted - base).abs() <= 1e-9 * (1.0 + base.abs()));
        }

        #[test]
        fn schedules_are_total_and_compact(kind in any_primitive(), t in -1e6f64..1e6, tau in 1.0f64..40.0) {
            let s = primitive(kind, S3, 0.0, tau).unwrap();
            let v = s.evaluate(t);
            prop_assert!(v.is_finite());
            if t < 0.0 || t >= tau {
                prop_assert_eq!(v, 0.0);
            }
        }
    }
}

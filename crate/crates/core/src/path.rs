//! Exact piecewise representation of real-valued càdlàg paths on a finite
//! horizon `[0, T]`.
//!
//! A path is a list of breakpoints `0 = t_0 < t_1 < … < t_k < T`, one segment
//! per interval `[t_i, t_{i+1})` (with `t_{k+1} = T`) and a terminal value at
//! `T`. Segments are either constant or affine; both families are closed
//! under addition and composition, so the algebra below is exact up to
//! floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Absolute tolerance used when deciding that two adjacent affine pieces
/// continue each other.
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment {
    /// Constant value `v` on the whole interval.
    Constant { v: f64 },
    /// Affine from `v` at the left end to the left limit `w` at the right end.
    Linear { v: f64, w: f64 },
}

impl Segment {
    /// Value at the left end of the segment.
    pub fn start(&self) -> f64 {
        match *self {
            Segment::Constant { v } | Segment::Linear { v, .. } => v,
        }
    }

    /// Left limit at the right end of the segment.
    pub fn end(&self) -> f64 {
        match *self {
            Segment::Constant { v } => v,
            Segment::Linear { w, .. } => w,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Segment::Constant { .. })
    }

    /// Interpolated value at relative position `frac ∈ [0, 1]`. Exact at both ends.
    fn at(&self, frac: f64) -> f64 {
        match *self {
            Segment::Constant { v } => v,
            Segment::Linear { v, w } => {
                if frac <= 0.0 {
                    v
                } else if frac >= 1.0 {
                    w
                } else {
                    v * (1.0 - frac) + w * frac
                }
            }
        }
    }

    fn normalized(self) -> Segment {
        match self {
            Segment::Linear { v, w } if v == w => Segment::Constant { v },
            s => s,
        }
    }

    fn map2(self, other: Segment, f: impl Fn(f64, f64) -> f64) -> Segment {
        match (self, other) {
            (Segment::Constant { v: a }, Segment::Constant { v: b }) => Segment::Constant { v: f(a, b) },
            (x, y) => Segment::Linear {
                v: f(x.start(), y.start()),
                w: f(x.end(), y.end()),
            },
        }
        .normalized()
    }
}

/// Pointwise binary operations supported by [`CadlagPath::combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Sub,
    /// Pointwise product. Representable only where at least one factor is
    /// constant on each merged interval.
    Mul,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    horizon: f64,
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
    terminal_value: f64,
}

/// JSON document layout of a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathDocument {
    pub horizon: f64,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
    pub terminal_value: f64,
}

impl TryFrom<PathDocument> for CadlagPath {
    type Error = Error;

    fn try_from(doc: PathDocument) -> Result<Self> {
        CadlagPath::new(doc.horizon, doc.breakpoints, doc.segments, doc.terminal_value)
    }
}

impl From<CadlagPath> for PathDocument {
    fn from(p: CadlagPath) -> Self {
        PathDocument {
            horizon: p.horizon,
            breakpoints: p.breakpoints,
            segments: p.segments,
            terminal_value: p.terminal_value,
        }
    }
}

impl Serialize for CadlagPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PathDocument::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CadlagPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = PathDocument::deserialize(deserializer)?;
        CadlagPath::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl CadlagPath {
    /// Validates and canonicalizes a path.
    pub fn new(horizon: f64, breakpoints: Vec<f64>, segments: Vec<Segment>, terminal_value: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon < 0.0 {
            return domain(format!("horizon must be finite and non-negative, got {horizon}"));
        }
        if breakpoints.is_empty() || breakpoints.len() != segments.len() {
            return domain("need one segment per breakpoint and at least one breakpoint");
        }
        if breakpoints[0] != 0.0 {
            return domain("first breakpoint must be 0");
        }
        if !terminal_value.is_finite() {
            return domain("terminal value must be finite");
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return domain(format!("breakpoints must be strictly increasing ({} then {})", w[0], w[1]));
            }
        }
        if horizon > 0.0 && *breakpoints.last().unwrap() >= horizon {
            return domain("breakpoints must lie strictly before the horizon");
        }
        if horizon == 0.0 && breakpoints.len() != 1 {
            return domain("a zero-horizon path has a single breakpoint");
        }
        for s in &segments {
            if !s.start().is_finite() || !s.end().is_finite() {
                return domain("segment values must be finite");
            }
        }
        let mut path = CadlagPath {
            horizon,
            breakpoints,
            segments,
            terminal_value,
        };
        path.canonicalize();
        Ok(path)
    }

    pub fn constant(horizon: f64, v: f64) -> Result<Self> {
        Self::new(horizon, vec![0.0], vec![Segment::Constant { v }], v)
    }

    /// Affine path from `v0` at 0 to `v1` at the horizon.
    pub fn linear(horizon: f64, v0: f64, v1: f64) -> Result<Self> {
        if horizon == 0.0 {
            return Self::constant(0.0, v1);
        }
        Self::new(horizon, vec![0.0], vec![Segment::Linear { v: v0, w: v1 }], v1)
    }

    pub fn identity(horizon: f64) -> Result<Self> {
        Self::linear(horizon, 0.0, horizon)
    }

    /// Step path taking `values[i]` on `[times[i], times[i+1])`. `times[0]` must
    /// be 0; a final time equal to the horizon sets the terminal value.
    pub fn staircase(horizon: f64, times: &[f64], values: &[f64]) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return domain("staircase needs matching, non-empty times and values");
        }
        let mut bps = Vec::with_capacity(times.len());
        let mut segs = Vec::with_capacity(times.len());
        let mut terminal = *values.last().unwrap();
        for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
            if t == horizon && i > 0 {
                // jump exactly at the horizon
                terminal = v;
                if i != times.len() - 1 {
                    return domain("staircase times beyond the horizon");
                }
                break;
            }
            bps.push(t);
            segs.push(Segment::Constant { v });
        }
        Self::new(horizon, bps, segs, terminal)
    }

    /// Staircase starting at 0 whose value jumps by `increments[k-1]` at `k/n`.
    pub fn from_grid_increments(grid: &TimeGrid, increments: &[f64]) -> Result<Self> {
        let cells = grid.cells();
        if increments.len() < cells {
            return domain(format!("need {cells} increments, got {}", increments.len()));
        }
        let mut times = Vec::with_capacity(cells + 1);
        let mut values = Vec::with_capacity(cells + 1);
        times.push(0.0);
        values.push(0.0);
        let mut acc = 0.0;
        for (k, inc) in increments.iter().take(cells).enumerate() {
            acc += inc;
            times.push(grid.point(k + 1));
            values.push(acc);
        }
        Self::staircase(grid.horizon, &times, &values)
    }

    /// Continuous polyline through `(times[i], values[i])`; `times` must start
    /// at 0 and end at the horizon.
    pub fn polyline(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return domain("polyline needs at least two matching knots");
        }
        let horizon = *times.last().unwrap();
        let k = times.len() - 1;
        let segs = (0..k)
            .map(|i| Segment::Linear { v: values[i], w: values[i + 1] }.normalized())
            .collect();
        Self::new(horizon, times[..k].to_vec(), segs, values[k])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn terminal_value(&self) -> f64 {
        self.terminal_value
    }

    /// Right end of segment `i`.
    pub fn segment_end(&self, i: usize) -> f64 {
        self.breakpoints.get(i + 1).copied().unwrap_or(self.horizon)
    }

    /// True when every segment is constant.
    pub fn is_step(&self) -> bool {
        self.segments.iter().all(Segment::is_constant)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return domain(format!("time {t} outside [0, {}]", self.horizon));
        }
        Ok(())
    }

    fn frac(&self, i: usize, t: f64) -> f64 {
        let a = self.breakpoints[i];
        let b = self.segment_end(i);
        if b > a {
            (t - a) / (b - a)
        } else {
            0.0
        }
    }

    /// Index of the segment whose half-open interval contains `t` (`t < horizon`).
    fn segment_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t) - 1
    }

    /// `x(t)`, right-continuous at breakpoints.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t >= self.horizon {
            return self.terminal_value;
        }
        let i = self.segment_index(t);
        self.segments[i].at(self.frac(i, t))
    }

    /// `x(t-)`.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return domain("no left limit at the origin");
        }
        self.check_time(t)?;
        Ok(self.left_limit_unchecked(t))
    }

    pub(crate) fn left_limit_unchecked(&self, t: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b < t) - 1;
        self.segments[i].at(self.frac(i, t))
    }

    /// `x(t) - x(t-)`.
    pub fn jump(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)? - self.left_limit(t)?)
    }

    /// Iterator over `(time, jump)` for every breakpoint in `(0, horizon]`,
    /// including the terminal time, whether or not the jump is zero.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let inner = (1..self.segments.len()).map(move |i| {
            let t = self.breakpoints[i];
            (t, self.segments[i].start() - self.segments[i - 1].end())
        });
        let terminal = (self.horizon > 0.0).then(|| {
            (
                self.horizon,
                self.terminal_value - self.segments.last().unwrap().end(),
            )
        });
        inner.chain(terminal)
    }

    /// `J_T(x) = sup_{0 < s ≤ T} |Δx(s)|`.
    pub fn largest_jump(&self, t_end: f64) -> Result<f64> {
        self.check_time(t_end)?;
        Ok(self
            .jumps()
            .take_while(|&(t, _)| t <= t_end)
            .fold(0.0, |m, (_, j)| m.max(j.abs())))
    }

    /// Exact check: all jumps and all affine slopes are non-negative.
    pub fn is_nondecreasing(&self) -> bool {
        self.segments.iter().all(|s| s.end() >= s.start()) && self.jumps().all(|(_, j)| j >= 0.0)
    }

    /// Smallest and largest value attained or approached on `[0, horizon]`.
    pub fn range(&self) -> (f64, f64) {
        self.segments
            .iter()
            .flat_map(|s| [s.start(), s.end()])
            .chain(std::iter::once(self.terminal_value))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Multiplies every value by `c`.
    pub fn scale(&self, c: f64) -> CadlagPath {
        let segs = self
            .segments
            .iter()
            .map(|s| match *s {
                Segment::Constant { v } => Segment::Constant { v: c * v },
                Segment::Linear { v, w } => Segment::Linear { v: c * v, w: c * w },
            })
            .collect();
        CadlagPath::new(self.horizon, self.breakpoints.clone(), segs, c * self.terminal_value)
            .expect("scaling preserves validity")
    }

    /// Restriction of segment `i` to `[a, b]` (both within the segment's closure).
    fn restrict(&self, i: usize, a: f64, b: f64) -> Segment {
        let seg = self.segments[i];
        match seg {
            Segment::Constant { .. } => seg,
            Segment::Linear { .. } => Segment::Linear {
                v: seg.at(self.frac(i, a)),
                w: seg.at(self.frac(i, b)),
            }
            .normalized(),
        }
    }

    /// The path restricted to `[0, t_end]`.
    pub fn truncate(&self, t_end: f64) -> Result<CadlagPath> {
        self.check_time(t_end)?;
        if t_end == self.horizon {
            return Ok(self.clone());
        }
        if t_end == 0.0 {
            return CadlagPath::constant(0.0, self.eval_unchecked(0.0));
        }
        let last = self.breakpoints.partition_point(|&b| b < t_end);
        let mut segs: Vec<Segment> = self.segments[..last].to_vec();
        let i = last - 1;
        segs[i] = self.restrict(i, self.breakpoints[i], t_end);
        CadlagPath::new(
            t_end,
            self.breakpoints[..last].to_vec(),
            segs,
            self.eval_unchecked(t_end),
        )
    }

    /// Pointwise `a op b` on the merged breakpoint structure.
    pub fn combine(&self, other: &CadlagPath, op: CombineOp) -> Result<CadlagPath> {
        let h = self.horizon;
        if (h - other.horizon).abs() > MERGE_TOL * h.max(1.0) {
            return domain(format!("mismatched horizons {} and {}", h, other.horizon));
        }
        let mut merged: Vec<f64> = Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len());
        let (mut i, mut j) = (0, 0);
        while i < self.breakpoints.len() || j < other.breakpoints.len() {
            let a = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            let b = other.breakpoints.get(j).copied().unwrap_or(f64::INFINITY);
            let t = a.min(b);
            if a == t {
                i += 1;
            }
            if b == t {
                j += 1;
            }
            if t < h || merged.is_empty() {
                merged.push(t);
            }
        }
        let f = |x: f64, y: f64| match op {
            CombineOp::Add => x + y,
            CombineOp::Sub => x - y,
            CombineOp::Mul => x * y,
        };
        let mut segs = Vec::with_capacity(merged.len());
        let (mut ia, mut ib) = (0usize, 0usize);
        for (k, &s) in merged.iter().enumerate() {
            let e = merged.get(k + 1).copied().unwrap_or(h);
            while ia + 1 < self.breakpoints.len() && self.breakpoints[ia + 1] <= s {
                ia += 1;
            }
            while ib + 1 < other.breakpoints.len() && other.breakpoints[ib + 1] <= s {
                ib += 1;
            }
            let sa = self.restrict(ia, s, e);
            let sb = other.restrict(ib, s, e.min(other.horizon));
            if op == CombineOp::Mul && !sa.is_constant() && !sb.is_constant() {
                return Err(Error::NotRepresentable(format!(
                    "product of two affine pieces on [{s}, {e})"
                )));
            }
            segs.push(sa.map2(sb, f));
        }
        CadlagPath::new(h, merged, segs, f(self.terminal_value, other.terminal_value))
    }

    pub fn add(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.combine(other, CombineOp::Add)
    }

    pub fn sub(&self, other: &CadlagPath) -> Result<CadlagPath> {
        self.combine(other, CombineOp::Sub)
    }

    /// `x ∘ y` for a non-decreasing inner path `y` with range inside
    /// `[0, x.horizon]`. The result lives on `y`'s horizon.
    pub fn compose(&self, y: &CadlagPath) -> Result<CadlagPath> {
        if !y.is_nondecreasing() {
            return domain("inner path of a composition must be non-decreasing");
        }
        let (lo, hi) = y.range();
        if lo < 0.0 || hi > self.horizon {
            return domain(format!(
                "inner path range [{lo}, {hi}] exceeds outer domain [0, {}]",
                self.horizon
            ));
        }
        let mut ts: Vec<f64> = Vec::with_capacity(y.segments.len() + self.segments.len());
        let mut segs: Vec<Segment> = Vec::with_capacity(ts.capacity());
        let push = |t: f64, seg: Segment, ts: &mut Vec<f64>, segs: &mut Vec<Segment>| {
            if ts.last().is_some_and(|&last| t <= last) {
                return;
            }
            ts.push(t);
            segs.push(seg);
        };
        for (i, yseg) in y.segments.iter().enumerate() {
            let s = y.breakpoints[i];
            let e = y.segment_end(i);
            match *yseg {
                Segment::Constant { v } => {
                    push(s, Segment::Constant { v: self.eval_unchecked(v) }, &mut ts, &mut segs);
                }
                Segment::Linear { v, w } => {
                    // outer breakpoints strictly inside (v, w)
                    let first = self.breakpoints.partition_point(|&b| b <= v);
                    let last = self.breakpoints.partition_point(|&b| b < w);
                    let mut us = Vec::with_capacity(last.saturating_sub(first) + 2);
                    us.push(v);
                    us.extend_from_slice(&self.breakpoints[first..last.max(first)]);
                    us.push(w);
                    for pair in us.windows(2) {
                        let (u0, u1) = (pair[0], pair[1]);
                        let t0 = if u0 == v { s } else { s + (u0 - v) / (w - v) * (e - s) };
                        let k = self.segment_index(u0.min(self.horizon));
                        let k = if u0 >= self.horizon { self.segments.len() - 1 } else { k };
                        push(t0, self.restrict(k, u0, u1), &mut ts, &mut segs);
                    }
                }
            }
        }
        CadlagPath::new(y.horizon, ts, segs, self.eval_unchecked(y.terminal_value))
    }

    fn canonicalize(&mut self) {
        for s in self.segments.iter_mut() {
            *s = s.normalized();
        }
        let mut bps: Vec<f64> = Vec::with_capacity(self.breakpoints.len());
        let mut segs: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for i in 0..self.segments.len() {
            let t = self.breakpoints[i];
            let seg = self.segments[i];
            if let (Some(&prev_t), Some(prev)) = (bps.last(), segs.last_mut()) {
                match (*prev, seg) {
                    (Segment::Constant { v: a }, Segment::Constant { v: b }) if a == b => continue,
                    (Segment::Linear { v: v0, w: w0 }, Segment::Linear { v: v1, w: w1 }) => {
                        let e = self.breakpoints.get(i + 1).copied().unwrap_or(self.horizon);
                        let slope0 = (w0 - v0) / (t - prev_t);
                        let slope1 = (w1 - v1) / (e - t);
                        let scale = 1.0_f64.max(w0.abs()).max(v1.abs());
                        let slope_scale = 1.0_f64.max(slope0.abs());
                        if (w0 - v1).abs() <= MERGE_TOL * scale
                            && (slope0 - slope1).abs() <= MERGE_TOL * slope_scale
                        {
                            *prev = Segment::Linear { v: v0, w: w1 };
                            continue;
                        }
                    }
                    _ => {}
                }
            }
            bps.push(t);
            segs.push(seg);
        }
        self.breakpoints = bps;
        self.segments = segs;
    }
}

/// The uniform grid `k/n`, `k = 0..=⌊nT⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n: u64,
    pub horizon: f64,
}

impl TimeGrid {
    pub fn new(n: u64, horizon: f64) -> Result<Self> {
        if n == 0 {
            return domain("grid resolution n must be at least 1");
        }
        if !horizon.is_finite() || horizon < 0.0 {
            return domain(format!("grid horizon must be finite and non-negative, got {horizon}"));
        }
        Ok(TimeGrid { n, horizon })
    }

    /// `⌊nT⌋`, robust to `nT` landing a few ulps below an integer.
    pub fn cells(&self) -> usize {
        floor_index(self.n, self.horizon)
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells()).map(|k| self.point(k))
    }
}

/// `⌊n t⌋` with a small guard against representation error (`0.7 * 10`).
pub fn floor_index(n: u64, t: f64) -> usize {
    let x = n as f64 * t;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_step() -> CadlagPath {
        CadlagPath::staircase(2.0, &[0.0, 1.0], &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn eval_is_right_continuous() {
        let p = CadlagPath::staircase(2.0, &[0.0, 1.0, 2.0], &[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 1.0);
        assert_eq!(p.eval(0.999).unwrap(), 0.0);
        assert_eq!(p.eval(2.0).unwrap(), 3.0);
        assert_eq!(p.left_limit(2.0).unwrap(), 1.0);
        assert_eq!(p.jump(2.0).unwrap(), 2.0);
    }

    #[test]
    fn out_of_domain_times_are_rejected() {
        let p = unit_step();
        assert!(matches!(p.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(p.eval(2.1), Err(Error::Domain(_))));
        assert!(matches!(p.left_limit(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn left_limit_before_a_jump() {
        let p = unit_step();
        assert_eq!(p.left_limit(1.0).unwrap(), 0.0);
        assert_eq!(p.largest_jump(2.0).unwrap(), 1.0);
        assert_eq!(p.largest_jump(0.5).unwrap(), 0.0);
    }

    #[test]
    fn invalid_breakpoints() {
        let segs = vec![Segment::Constant { v: 0.0 }, Segment::Constant { v: 1.0 }];
        assert!(CadlagPath::new(1.0, vec![0.0, 0.0], segs.clone(), 1.0).is_err());
        assert!(CadlagPath::new(1.0, vec![0.1, 0.5], segs.clone(), 1.0).is_err());
        assert!(CadlagPath::new(1.0, vec![0.0, 1.0], segs, 1.0).is_err());
    }

    #[test]
    fn canonicalization_merges_redundant_breakpoints() {
        let p = CadlagPath::staircase(3.0, &[0.0, 1.0, 2.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 2.0]);
        let q = CadlagPath::polyline(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(q.breakpoints(), &[0.0]);
        assert_eq!(q.eval(1.5).unwrap(), 1.5);
    }

    #[test]
    fn staircase_sum() {
        let a = unit_step();
        let b = CadlagPath::staircase(2.0, &[0.0, 1.5], &[0.0, 1.0]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.eval(0.5).unwrap(), 0.0);
        assert_eq!(s.eval(1.2).unwrap(), 1.0);
        assert_eq!(s.eval(1.7).unwrap(), 2.0);
        let zero = CadlagPath::constant(2.0, 0.0).unwrap();
        assert_eq!(a.add(&zero).unwrap(), a);
    }

    #[test]
    fn mismatched_horizons() {
        let a = unit_step();
        let b = CadlagPath::constant(3.0, 0.0).unwrap();
        assert!(matches!(a.add(&b), Err(Error::Domain(_))));
    }

    #[test]
    fn product_of_affine_pieces_is_not_representable() {
        let a = CadlagPath::identity(1.0).unwrap();
        assert!(matches!(a.combine(&a, CombineOp::Mul), Err(Error::NotRepresentable(_))));
        let c = CadlagPath::constant(1.0, 3.0).unwrap();
        let p = a.combine(&c, CombineOp::Mul).unwrap();
        assert!((p.eval(0.5).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn compose_with_identity() {
        let x = CadlagPath::polyline(&[0.0, 1.0, 1.5, 2.0, 3.0], &[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let id = CadlagPath::identity(3.0).unwrap();
        let c = x.compose(&id).unwrap();
        for k in 0..=300 {
            let t = k as f64 / 100.0;
            assert!((c.eval(t).unwrap() - x.eval(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_rejects_out_of_range_inner_path() {
        let x = CadlagPath::identity(1.0).unwrap();
        let y = CadlagPath::linear(1.0, 0.0, 2.0).unwrap();
        assert!(matches!(x.compose(&y), Err(Error::Domain(_))));
        let dec = CadlagPath::linear(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(x.compose(&dec), Err(Error::Domain(_))));
    }

    #[test]
    fn truncate_keeps_values() {
        let x = CadlagPath::polyline(&[0.0, 1.0, 2.0], &[0.0, 2.0, 0.0]).unwrap();
        let t = x.truncate(1.5).unwrap();
        assert_eq!(t.horizon(), 1.5);
        assert!((t.terminal_value() - 1.0).abs() < 1e-15);
        assert!((t.left_limit(1.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = CadlagPath::staircase(2.0, &[0.0, 1.0, 2.0], &[0.0, 1.0, 3.0]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"kind\":\"constant\""));
        let q: CadlagPath = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bad = r#"{"horizon":1,"breakpoints":[0,0.5,0.2],"segments":[{"kind":"constant","v":0},{"kind":"constant","v":1},{"kind":"constant","v":2}],"terminal_value":2}"#;
        assert!(serde_json::from_str::<CadlagPath>(bad).is_err());
    }

    #[test]
    fn grid_cells_are_robust() {
        assert_eq!(TimeGrid::new(10, 0.7).unwrap().cells(), 7);
        assert_eq!(TimeGrid::new(3, 1.0).unwrap().cells(), 3);
        assert_eq!(floor_index(100, 0.999), 99);
        assert!(TimeGrid::new(0, 1.0).is_err());
    }
}

//! Triple functionals, the moduli `ω_H(x, δ, T)`, the pair oscillation and a
//! decision procedure for continuity of composition at a limit pair.
//!
//! The moduli are suprema over `0 ≤ t1 < t2 < t3 ≤ T` with `t3 - t1 < δ`
//! (strict). They are evaluated over a finite candidate set: every breakpoint
//! approached from the left, hit exactly and approached from the right, the
//! two ends of `[0, T]`, and for affine segments a few interior subdivision
//! points plus the points `b ± δ`. Approach points sit an infinitesimal `ε`
//! away from their anchor, which is how strict inequalities at exactly `δ`
//! are resolved.
//!
//! For step paths the candidate supremum is the true supremum. For the pair
//! oscillation it is exact on piecewise-affine paths too. For `J`/`M` on paths
//! with affine segments it is a lower bound that tightens with the number of
//! subdivisions. Cost is `O(K w²)` for `K` candidates and `w` candidates per
//! `δ`-window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::path::{CadlagPath, Segment};

/// Default number of interior subdivisions per affine segment.
pub const DEFAULT_SUBDIVISIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TripleKind {
    C,
    J,
    M,
}

impl std::fmt::Display for TripleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TripleKind::C => "C",
            TripleKind::J => "J",
            TripleKind::M => "M",
        };
        f.write_str(s)
    }
}

/// `C = |x3 - x1|`, `J = |x2 - x1| ∧ |x2 - x3|`, `M` = distance from `x2` to
/// the segment between `x1` and `x3`.
pub fn triple(kind: TripleKind, x1: f64, x2: f64, x3: f64) -> f64 {
    match kind {
        TripleKind::C => (x3 - x1).abs(),
        TripleKind::J => (x2 - x1).abs().min((x2 - x3).abs()),
        TripleKind::M => 0.0_f64.max(x1.min(x3) - x2).max(x2 - x1.max(x3)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Left,
    Exact,
    Right,
}

impl Side {
    fn offset(self) -> i8 {
        match self {
            Side::Left => -1,
            Side::Exact => 0,
            Side::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    time: f64,
    side: Side,
    anchor: f64,
    shift: i8,
    value: f64,
}

impl Candidate {
    /// `true` when the infinitesimal gap `t3 - t1` is strictly below `delta`.
    fn within(&self, later: &Candidate, delta: f64) -> bool {
        let base = if self.anchor == later.anchor {
            f64::from(later.shift - self.shift) * delta
        } else {
            later.time - self.time
        };
        base < delta || (base == delta && later.side.offset() < self.side.offset())
    }
}

fn check_window(x: &CadlagPath, delta: f64, t_end: f64) -> Result<()> {
    if !(delta > 0.0) {
        return domain(format!("delta must be positive, got {delta}"));
    }
    if !(t_end > 0.0) || t_end > x.horizon() {
        return domain(format!("T must lie in (0, {}], got {t_end}", x.horizon()));
    }
    Ok(())
}

fn candidates(x: &CadlagPath, delta: f64, t_end: f64, subdivisions: usize) -> Vec<Candidate> {
    let mut raw: Vec<(f64, Side, f64, i8)> = Vec::new();
    let mut add = |anchor: f64, shift: i8, side: Side| {
        let time = anchor + f64::from(shift) * delta;
        let ok = match side {
            Side::Left => time > 0.0 && time <= t_end,
            Side::Exact => time >= 0.0 && time <= t_end,
            Side::Right => time >= 0.0 && time < t_end,
        };
        if ok {
            raw.push((time, side, anchor, shift));
        }
    };
    let affine = |i: usize| matches!(x.segments()[i], Segment::Linear { .. });
    let segs = x.segments().len();
    let mut anchors: Vec<(f64, bool)> = Vec::new();
    for i in 0..segs {
        let b = x.breakpoints()[i];
        if b > t_end {
            break;
        }
        let touches_affine = affine(i) || (i > 0 && affine(i - 1));
        anchors.push((b, touches_affine));
        if affine(i) && subdivisions > 1 {
            let e = x.segment_end(i).min(t_end);
            let s = b;
            for k in 1..subdivisions {
                let t = s + (e - s) * k as f64 / subdivisions as f64;
                if t > s && t < e {
                    anchors.push((t, true));
                }
            }
        }
    }
    let last_affine = x
        .breakpoints()
        .partition_point(|&b| b < t_end)
        .checked_sub(1)
        .is_some_and(affine);
    anchors.push((t_end, last_affine));
    for &(b, touches_affine) in &anchors {
        add(b, 0, Side::Left);
        add(b, 0, Side::Exact);
        add(b, 0, Side::Right);
        if touches_affine {
            add(b, 1, Side::Left);
            add(b, 1, Side::Exact);
            add(b, -1, Side::Right);
            add(b, -1, Side::Exact);
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    raw.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    raw.into_iter()
        .map(|(time, side, anchor, shift)| {
            let value = match side {
                Side::Left => x.left_limit_unchecked(time),
                _ => x.eval_unchecked(time),
            };
            Candidate {
                time,
                side,
                anchor,
                shift,
                value,
            }
        })
        .collect()
}

/// Values of `x` within the window, kept sorted for nearest-to-midpoint queries.
fn best_middle_j(sorted: &[f64], x1: f64, x3: f64) -> f64 {
    let g = |v: f64| triple(TripleKind::J, x1, v, x3);
    let mut best = g(sorted[0]).max(g(sorted[sorted.len() - 1]));
    let mid = 0.5 * (x1 + x3);
    let k = sorted.partition_point(|&v| v < mid);
    if k < sorted.len() {
        best = best.max(g(sorted[k]));
    }
    if k > 0 {
        best = best.max(g(sorted[k - 1]));
    }
    best
}

/// `ω_kind(x, δ, T)` with the default subdivision count.
pub fn modulus(x: &CadlagPath, kind: TripleKind, delta: f64, t_end: f64) -> Result<f64> {
    modulus_refined(x, kind, delta, t_end, DEFAULT_SUBDIVISIONS)
}

/// `ω_kind(x, δ, T)` with `subdivisions` interior points per affine segment.
pub fn modulus_refined(x: &CadlagPath, kind: TripleKind, delta: f64, t_end: f64, subdivisions: usize) -> Result<f64> {
    check_window(x, delta, t_end)?;
    let cands = candidates(x, delta, t_end, subdivisions);
    if kind == TripleKind::C {
        return Ok(pair_sup(&cands, delta));
    }
    let mut best = 0.0_f64;
    let mut sorted: Vec<f64> = Vec::new();
    for i in 0..cands.len() {
        let c1 = &cands[i];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        sorted.clear();
        for j in i + 1..cands.len() {
            let c3 = &cands[j];
            if c3.time - c1.time > delta * (1.0 + 1e-9) + 1e-12 {
                break;
            }
            if j > i + 1 && c1.within(c3, delta) {
                let (x1, x3) = (c1.value, c3.value);
                let v = match kind {
                    TripleKind::M => 0.0_f64.max(x1.min(x3) - lo).max(hi - x1.max(x3)),
                    _ => best_middle_j(&sorted, x1, x3),
                };
                best = best.max(v);
            }
            let v = c3.value;
            lo = lo.min(v);
            hi = hi.max(v);
            if kind == TripleKind::J {
                let k = sorted.partition_point(|&s| s < v);
                sorted.insert(k, v);
            }
        }
    }
    Ok(best)
}

fn pair_sup(cands: &[Candidate], delta: f64) -> f64 {
    let mut best = 0.0_f64;
    for (i, c1) in cands.iter().enumerate() {
        for c3 in &cands[i + 1..] {
            if c3.time - c1.time > delta * (1.0 + 1e-9) + 1e-12 {
                break;
            }
            if c1.within(c3, delta) {
                best = best.max((c3.value - c1.value).abs());
            }
        }
    }
    best
}

/// `sup{|x(t) - x(s)| : 0 ≤ s < t ≤ T, t - s < δ}`. This uniform form bounds
/// both printed variants of the `C` triple from above.
pub fn oscillation(x: &CadlagPath, delta: f64, t_end: f64) -> Result<f64> {
    check_window(x, delta, t_end)?;
    Ok(pair_sup(&candidates(x, delta, t_end, DEFAULT_SUBDIVISIONS), delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionVerdict {
    Holds,
    FailsAt(f64),
}

/// Checks that `x` is monotone on `[y(t-), y(t)]` at every jump time `t` of
/// `y`, returning the first jump time where it is not.
pub fn composition_condition(x: &CadlagPath, y: &CadlagPath) -> Result<CompositionVerdict> {
    if !y.is_nondecreasing() {
        return domain("time change must be non-decreasing");
    }
    for (t, size) in y.jumps() {
        if size <= 0.0 {
            continue;
        }
        let a = y.left_limit_unchecked(t);
        let b = y.eval_unchecked(t);
        if a < 0.0 || b > x.horizon() {
            return domain(format!("jump of the time change at {t} leaves the domain of x"));
        }
        if !monotone_on(x, a, b) {
            return Ok(CompositionVerdict::FailsAt(t));
        }
    }
    Ok(CompositionVerdict::Holds)
}

fn monotone_on(x: &CadlagPath, a: f64, b: f64) -> bool {
    let mut seq = vec![x.eval_unchecked(a)];
    for (c, _) in x.jumps() {
        if c > a && c <= b {
            seq.push(x.left_limit_unchecked(c));
            seq.push(x.eval_unchecked(c));
        }
    }
    seq.push(x.eval_unchecked(b));
    let scale = seq.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let up = seq.windows(2).all(|w| w[1] >= w[0] - tol);
    let down = seq.windows(2).all(|w| w[1] <= w[0] + tol);
    up || down
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEntry {
    pub n: u64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub epsilon: f64,
    pub exceed_fraction: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub kind: TripleKind,
    pub entries: Vec<ModulusEntry>,
}

#[derive(Serialize)]
struct ModulusRow {
    kind: String,
    n: u64,
    delta: f64,
    #[serde(rename = "T")]
    t_end: f64,
    epsilon: f64,
    exceed_fraction: f64,
    samples: usize,
}

impl ModulusReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(ModulusRow {
                kind: self.kind.to_string(),
                n: e.n,
                delta: e.delta,
                t_end: e.t_end,
                epsilon: e.epsilon,
                exceed_fraction: e.exceed_fraction,
                samples: e.samples,
            })
            .expect("in-memory csv write");
        }
        if self.entries.is_empty() {
            return "kind,n,delta,T,epsilon,exceed_fraction,samples\n".to_string();
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Exceedance fraction for `(n, delta)`.
    pub fn fraction(&self, n: u64, delta: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.n == n && e.delta == delta)
            .map(|e| e.exceed_fraction)
    }
}

/// For each `n`, samples `samples` paths via `sampler(n, replicate)` and
/// records, for every `δ`, the fraction whose modulus exceeds `epsilon`.
/// Each replicate path is reused across all `δ`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_tightness<F>(
    sampler: F,
    kind: TripleKind,
    n_list: &[u64],
    delta_list: &[f64],
    t_end: f64,
    epsilon: f64,
    samples: usize,
) -> Result<ModulusReport>
where
    F: Fn(u64, u64) -> Result<CadlagPath> + Sync,
{
    if samples == 0 {
        return domain("samples must be at least 1");
    }
    let mut entries = Vec::with_capacity(n_list.len() * delta_list.len());
    for &n in n_list {
        let per_path: Vec<Vec<bool>> = (0..samples as u64)
            .into_par_iter()
            .map(|r| {
                let path = sampler(n, r)?;
                delta_list
                    .iter()
                    .map(|&d| modulus(&path, kind, d, t_end).map(|m| m > epsilon))
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, &delta) in delta_list.iter().enumerate() {
            let hits = per_path.iter().filter(|v| v[k]).count();
            entries.push(ModulusEntry {
                n,
                delta,
                t_end,
                epsilon,
                exceed_fraction: hits as f64 / samples as f64,
                samples,
            });
        }
    }
    Ok(ModulusReport { kind, entries })
}

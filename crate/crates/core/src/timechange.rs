//! First-passage inverses `τ(s) = inf{t ≥ 0 : A(t) > s}` of non-decreasing
//! paths, flat-spot lengths and the algebraic identities linking `A` and `τ`.
//!
//! The inverse is built segment by segment: a rising affine piece of `A`
//! inverts to a rising affine piece of `τ`, a jump of `A` becomes a flat
//! stretch of `τ`, and a flat stretch of `A` becomes a jump of `τ`.

use crate::error::{domain, Error, Result};
use crate::path::{CadlagPath, Segment};

/// Tolerance for the pointwise identities.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct InversePair {
    pub a: CadlagPath,
    pub tau: CadlagPath,
    pub s_max: f64,
}

impl InversePair {
    /// `τ(0) = 0`. Discrete arrays whose clock starts flat never satisfy this.
    pub fn starts_at_zero(&self) -> bool {
        self.tau.eval_unchecked(0.0) == 0.0
    }

    /// `τ(A(t)) - t`, the remaining length of the flat stretch of `A` at `t`.
    pub fn flat_spot(&self, t: f64) -> Result<f64> {
        let level = self.a.eval(t)?;
        if level > self.s_max {
            return domain(format!("A({t}) = {level} exceeds the inverse range {}", self.s_max));
        }
        Ok(self.tau.eval_unchecked(level) - t)
    }

    /// `A(τ(s))`.
    pub fn a_of_tau(&self, s: f64) -> Result<f64> {
        let t = self.tau.eval(s)?;
        self.a.eval(t)
    }
}

/// Exact first-passage inverse of `a` on `[0, s_max]`.
pub fn inverse(a: &CadlagPath, s_max: f64) -> Result<InversePair> {
    if !a.is_nondecreasing() {
        return domain("the clock must be non-decreasing");
    }
    if !(s_max >= 0.0) || !s_max.is_finite() {
        return domain(format!("inverse range must be finite and non-negative, got {s_max}"));
    }
    let a0 = a.eval_unchecked(0.0);
    if a0 < 0.0 {
        return domain(format!("the clock must start non-negative, got {a0}"));
    }
    if a.terminal_value() <= s_max {
        return Err(Error::InsufficientHorizon(format!(
            "A({}) = {} does not exceed {s_max}; extend the horizon",
            a.horizon(),
            a.terminal_value()
        )));
    }

    // Pieces of τ as (level range start, level range end, segment).
    let mut pieces: Vec<(f64, f64, Segment)> = Vec::new();
    let mut push = |lo: f64, hi: f64, seg: Segment| {
        if hi > lo {
            pieces.push((lo, hi, seg));
        }
    };
    push(0.0, a0, Segment::Constant { v: 0.0 });
    let segs = a.segments();
    for (i, seg) in segs.iter().enumerate() {
        let b = a.breakpoints()[i];
        let e = a.segment_end(i);
        if let Segment::Linear { v, w } = *seg {
            push(v, w, Segment::Linear { v: b, w: e });
        }
        let next = segs.get(i + 1).map_or(a.terminal_value(), Segment::start);
        push(seg.end(), next, Segment::Constant { v: e });
    }

    let mut bps = Vec::with_capacity(pieces.len());
    let mut tau_segs = Vec::with_capacity(pieces.len());
    let mut terminal = None;
    for &(lo, hi, seg) in &pieces {
        if lo >= s_max && !bps.is_empty() {
            terminal = Some(seg.start());
            break;
        }
        if s_max < hi {
            let cut = match seg {
                Segment::Constant { .. } => seg,
                Segment::Linear { v, w } => Segment::Linear {
                    v,
                    w: lerp(v, w, (s_max - lo) / (hi - lo)),
                },
            };
            terminal = Some(cut.end());
            bps.push(lo);
            tau_segs.push(cut);
            break;
        }
        bps.push(lo);
        tau_segs.push(seg);
    }
    let terminal = terminal.expect("A(horizon) > s_max guarantees a covering piece");
    let tau = if s_max == 0.0 {
        CadlagPath::constant(0.0, terminal)?
    } else {
        CadlagPath::new(s_max, bps, tau_segs, terminal)?
    };
    Ok(InversePair {
        a: a.clone(),
        tau,
        s_max,
    })
}

fn lerp(v: f64, w: f64, f: f64) -> f64 {
    if f <= 0.0 {
        v
    } else if f >= 1.0 {
        w
    } else {
        v * (1.0 - f) + w * f
    }
}

/// `τ(A(t)) - t` for the inverse of `a` on `[0, s_max]`.
pub fn flat_spot(a: &CadlagPath, t: f64, s_max: f64) -> Result<f64> {
    inverse(a, s_max)?.flat_spot(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseIdentities {
    /// `A ∘ τ ∘ A = A` at every breakpoint `t` of `A` with `A(t) ≤ s_max`.
    pub ataua_holds: bool,
    /// First breakpoint where `A ∘ τ ∘ A ≠ A`.
    pub ataua_witness: Option<f64>,
    /// The inverse of `τ` reproduces `A` on the common domain.
    pub roundtrip_holds: bool,
}

pub fn check_inverse_identities(a: &CadlagPath, s_max: f64) -> Result<InverseIdentities> {
    let pair = inverse(a, s_max)?;
    let mut witness = None;
    for &t in a.breakpoints().iter().chain(std::iter::once(&a.horizon())) {
        let at = a.eval_unchecked(t);
        if at > s_max {
            break;
        }
        let ataua = a.eval_unchecked(pair.tau.eval_unchecked(at));
        if (ataua - at).abs() > IDENTITY_TOL * at.abs().max(1.0) {
            witness = Some(t);
            break;
        }
    }
    Ok(InverseIdentities {
        ataua_holds: witness.is_none(),
        ataua_witness: witness,
        roundtrip_holds: roundtrip(&pair)?,
    })
}

/// Compares `A` with the inverse of `τ` at every breakpoint of either below
/// `τ(s_max)`, both values and left limits.
fn roundtrip(pair: &InversePair) -> Result<bool> {
    let tau = &pair.tau;
    let reach = tau.terminal_value();
    if reach <= 0.0 {
        return Ok(true);
    }
    let last_bp = pair
        .a
        .breakpoints()
        .iter()
        .copied()
        .take_while(|&b| b < reach)
        .last()
        .unwrap_or(0.0);
    let u = 0.5 * (last_bp + reach);
    let rho = inverse(tau, u)?.tau;
    let close = |x: f64, y: f64| (x - y).abs() <= IDENTITY_TOL * x.abs().max(1.0);
    let times = pair
        .a
        .breakpoints()
        .iter()
        .chain(rho.breakpoints())
        .copied()
        .filter(|&t| t <= u)
        .chain(std::iter::once(u));
    for t in times {
        if !close(pair.a.eval_unchecked(t), rho.eval_unchecked(t)) {
            return Ok(false);
        }
        if t > 0.0 && !close(pair.a.left_limit_unchecked(t), rho.left_limit_unchecked(t)) {
            return Ok(false);
        }
    }
    Ok(true)
}

//! A continuous tent `x` and continuous time changes `y_n` converging in M1
//! to a time change `y` with a jump, such that `x ∘ y_n` does not converge.
//!
//! `x(t) = (1 - |2t - 3|)⁺` on `[0, 3]`, `y_n` rises linearly to 1 on
//! `[0, 2 - 1/n]`, then to 2 on `[2 - 1/n, 2]`, then follows the identity.
//! The limit `y` is `t/2` before 2 and `t` from 2 on.

use crate::error::{domain, Result};
use crate::path::CadlagPath;

/// Common horizon of all paths in the family.
pub const HORIZON: f64 = 3.0;

/// The tent `x(t) = (1 - |2t - 3|)⁺`.
pub fn tent() -> CadlagPath {
    CadlagPath::polyline(&[0.0, 1.0, 1.5, 2.0, HORIZON], &[0.0, 0.0, 1.0, 0.0, 0.0])
        .expect("tent knots are valid")
}

/// The continuous time change `y_n` for `n ≥ 1`.
pub fn time_change(n: u32) -> Result<CadlagPath> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let corner = 2.0 - 1.0 / n as f64;
    if n == 1 {
        return CadlagPath::polyline(&[0.0, 1.0, 2.0, HORIZON], &[0.0, 1.0, 2.0, HORIZON]);
    }
    CadlagPath::polyline(&[0.0, corner, 2.0, HORIZON], &[0.0, 1.0, 2.0, HORIZON])
}

/// The discontinuous limit time change `y`, jumping from 1 to 2 at `t = 2`.
pub fn limit_time_change() -> CadlagPath {
    let segs = vec![
        crate::path::Segment::Linear { v: 0.0, w: 1.0 },
        crate::path::Segment::Linear { v: 2.0, w: HORIZON },
    ];
    CadlagPath::new(HORIZON, vec![0.0, 2.0], segs, HORIZON).expect("limit time change is valid")
}

/// `x ∘ y_n`.
pub fn composed(n: u32) -> Result<CadlagPath> {
    tent().compose(&time_change(n)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_values() {
        let x = tent();
        assert_eq!(x.eval(1.5).unwrap(), 1.0);
        assert_eq!(x.largest_jump(2.0).unwrap(), 0.0);
        let y2 = time_change(2).unwrap();
        assert!((y2.eval(1.5).unwrap() - 1.0).abs() < 1e-15);
        let c = composed(2).unwrap();
        assert!((c.eval(1.75).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c.eval(2.0).unwrap(), 0.0);
    }

    #[test]
    fn composition_is_a_narrow_spike() {
        for n in [2u32, 3, 5, 10] {
            let c = composed(n).unwrap();
            let lo = 2.0 - 1.0 / n as f64;
            for k in 0..=300 {
                let t = k as f64 / 100.0;
                let want = if t > lo && t < 2.0 {
                    1.0 - (2.0 * n as f64 * (2.0 - t) - 1.0).abs()
                } else {
                    0.0
                };
                assert!((c.eval(t).unwrap() - want).abs() < 1e-12, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn limit_has_single_jump() {
        let y = limit_time_change();
        assert_eq!(y.jump(2.0).unwrap(), 1.0);
        assert!(y.is_nondecreasing());
        assert!((y.eval(1.0).unwrap() - 0.5).abs() < 1e-15);
    }
}

//! Affine pieces of a quantile function on [0,1) and the loss integrals
//! built from them.
//!
//! Every distribution in this crate exposes its quantile function as a list
//! of `Piece` values covering [0,1) left to right. Evaluators only ever need
//! two primitives on top of that: the integral of the negative part, and the
//! measure of a sublevel set (which recovers the CDF from the quantile).

/// One affine segment of a nondecreasing quantile function.
///
/// The segment lives on the half-open interval `[z0, z1)` and interpolates
/// linearly from `v0` at `z0` to `v1` at `z1`. A constant segment has
/// `v0 == v1`. Invariant: `z0 < z1` and `v0 <= v1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub z0: f64,
    pub z1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.z1 - self.z0
    }

    pub fn slope(&self) -> f64 {
        if self.z1 == self.z0 {
            0.0
        } else {
            (self.v1 - self.v0) / (self.z1 - self.z0)
        }
    }

    pub fn value_at(&self, z: f64) -> f64 {
        self.v0 + self.slope() * (z - self.z0)
    }

    /// Restricts the piece to `[a, b)`. Returns `None` when the overlap is
    /// empty or a single point.
    pub fn clip(&self, a: f64, b: f64) -> Option<Piece> {
        let lo = self.z0.max(a);
        let hi = self.z1.min(b);
        if lo >= hi {
            return None;
        }
        Some(Piece {
            z0: lo,
            z1: hi,
            v0: self.value_at(lo),
            v1: self.value_at(hi),
        })
    }

    /// The sub-piece on which the value is negative, with the value clipped
    /// to zero at the crossing. `None` when the piece is entirely
    /// nonnegative.
    pub fn loss_part(&self) -> Option<Piece> {
        if self.v0 >= 0.0 {
            return None;
        }
        if self.v1 <= 0.0 {
            return Some(*self);
        }
        // v0 < 0 < v1: the crossing splits the piece.
        let zstar = self.z0 + (-self.v0) / (self.v1 - self.v0) * (self.z1 - self.z0);
        Some(Piece {
            z0: self.z0,
            z1: zstar,
            v0: self.v0,
            v1: 0.0,
        })
    }

    /// Trapezoid integral of the piece over its own interval.
    pub fn integral(&self) -> f64 {
        self.len() * (self.v0 + self.v1) / 2.0
    }
}

/// Integral of min(value, 0) over [0,1).
pub fn loss_integral(pieces: &[Piece]) -> f64 {
    pieces
        .iter()
        .filter_map(|p| p.loss_part())
        .map(|p| p.integral())
        .sum()
}

/// Integral of min(value, 0) over [a, b).
pub fn loss_integral_on(pieces: &[Piece], a: f64, b: f64) -> f64 {
    pieces
        .iter()
        .filter_map(|p| p.clip(a, b))
        .filter_map(|p| p.loss_part())
        .map(|p| p.integral())
        .sum()
}

/// Lebesgue measure of { z : value(z) <= x }, or of { z : value(z) < x }
/// when `strict`. With `pieces` a quantile function this is the CDF
/// (non-strict) and the left CDF limit (strict).
pub fn sublevel_measure(pieces: &[Piece], x: f64, strict: bool) -> f64 {
    let mut total = 0.0;
    for p in pieces {
        if p.v0 == p.v1 {
            let inside = if strict { p.v0 < x } else { p.v0 <= x };
            if inside {
                total += p.len();
            }
        } else {
            // Strictly increasing on the piece, so the level set {value == x}
            // is a single point and strictness does not change the measure.
            let t = ((x - p.v0) / p.slope()).clamp(0.0, p.len());
            total += t;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn empirical_pieces(sorted: &[f64]) -> Vec<Piece> {
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(k, &v)| Piece {
                z0: k as f64 / n,
                z1: (k + 1) as f64 / n,
                v0: v,
                v1: v,
            })
            .collect()
    }

    #[test]
    fn clip_disjoint_is_none() {
        let p = Piece { z0: 0.0, z1: 0.5, v0: 1.0, v1: 2.0 };
        assert!(p.clip(0.5, 1.0).is_none());
        assert!(p.clip(0.7, 0.9).is_none());
    }

    #[test]
    fn clip_interpolates_endpoints() {
        let p = Piece { z0: 0.0, z1: 1.0, v0: -2.0, v1: 2.0 };
        let c = p.clip(0.25, 0.75).unwrap();
        assert_relative_eq!(c.v0, -1.0);
        assert_relative_eq!(c.v1, 1.0);
    }

    #[test]
    fn loss_part_splits_at_zero_crossing() {
        let p = Piece { z0: 0.0, z1: 1.0, v0: -2.0, v1: 2.0 };
        let l = p.loss_part().unwrap();
        assert_relative_eq!(l.z1, 0.5);
        assert_eq!(l.v1, 0.0);
        assert_relative_eq!(l.integral(), -0.5);
    }

    #[test]
    fn loss_part_nonnegative_piece_is_none() {
        let p = Piece { z0: 0.0, z1: 1.0, v0: 0.0, v1: 3.0 };
        assert!(p.loss_part().is_none());
    }

    #[test]
    fn loss_integral_matches_put_premium_example() {
        let pieces = empirical_pieces(&[-2.0, 1.0, 3.0]);
        assert_relative_eq!(loss_integral(&pieces), -2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn loss_integral_on_subrange() {
        let pieces = empirical_pieces(&[-4.0, -2.0, 1.0, 3.0]);
        // On [0, 0.5) the values are -4 and -2, each on a quarter.
        assert_relative_eq!(loss_integral_on(&pieces, 0.0, 0.5), -1.5);
        assert_relative_eq!(loss_integral_on(&pieces, 0.25, 0.5), -0.5);
    }

    #[test]
    fn sublevel_measure_recovers_step_cdf() {
        let pieces = empirical_pieces(&[-2.0, 1.0, 3.0]);
        assert_relative_eq!(sublevel_measure(&pieces, -2.0, false), 1.0 / 3.0);
        assert_eq!(sublevel_measure(&pieces, -2.0, true), 0.0);
        assert_relative_eq!(sublevel_measure(&pieces, 1.0, false), 2.0 / 3.0);
        assert_relative_eq!(sublevel_measure(&pieces, 10.0, false), 1.0);
    }

    #[test]
    fn sublevel_measure_linear_piece() {
        let pieces = [Piece { z0: 0.0, z1: 1.0, v0: 0.0, v1: 10.0 }];
        assert_relative_eq!(sublevel_measure(&pieces, 2.5, false), 0.25);
        assert_relative_eq!(sublevel_measure(&pieces, 2.5, true), 0.25);
        assert_eq!(sublevel_measure(&pieces, -1.0, false), 0.0);
        assert_eq!(sublevel_measure(&pieces, 11.0, false), 1.0);
    }
}

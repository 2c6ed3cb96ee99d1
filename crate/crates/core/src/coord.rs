//! Compactifying changes of variable. Every grid in the crate lives in the
//! compact coordinate `y`; `x = to_x(y)` is the model coordinate.

use serde::{Deserialize, Serialize};

/// Map between the model interval `(a, b)` and a bounded interval of `y`.
///
/// * finite `(a, b)`: identity, `y = x`
/// * `[a, ∞)`: `x = a − L·ln(1 − y)`, `y ∈ [0, 1)`
/// * `(−∞, b]`: `x = b + L·ln(y)`, `y ∈ (0, 1]`
/// * `ℝ`: `x = c + L·ln(y / (1 − y))`, `y ∈ (0, 1)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coordinate {
    Identity,
    HalfLineUp { origin: f64, length: f64 },
    HalfLineDown { origin: f64, length: f64 },
    RealLine { center: f64, length: f64 },
}

impl Coordinate {
    /// Pick the map implied by which endpoints are infinite.
    pub fn for_interval(lo: f64, hi: f64, center: f64, length: f64) -> Self {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => Coordinate::Identity,
            (true, false) => Coordinate::HalfLineUp { origin: lo, length },
            (false, true) => Coordinate::HalfLineDown { origin: hi, length },
            (false, false) => Coordinate::RealLine { center, length },
        }
    }

    pub fn to_x(&self, y: f64) -> f64 {
        match *self {
            Coordinate::Identity => y,
            Coordinate::HalfLineUp { origin, length } => {
                if y >= 1.0 {
                    f64::INFINITY
                } else {
                    origin - length * (-y).ln_1p()
                }
            }
            Coordinate::HalfLineDown { origin, length } => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    origin + length * y.ln()
                }
            }
            Coordinate::RealLine { center, length } => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else if y >= 1.0 {
                    f64::INFINITY
                } else {
                    center + length * (y.ln() - (-y).ln_1p())
                }
            }
        }
    }

    pub fn to_y(&self, x: f64) -> f64 {
        match *self {
            Coordinate::Identity => x,
            Coordinate::HalfLineUp { origin, length } => -(-(x - origin) / length).exp_m1(),
            Coordinate::HalfLineDown { origin, length } => ((x - origin) / length).exp(),
            Coordinate::RealLine { center, length } => {
                let t = (x - center) / length;
                if t >= 0.0 {
                    1.0 / (1.0 + (-t).exp())
                } else {
                    let e = t.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// dx/dy.
    pub fn jacobian(&self, y: f64) -> f64 {
        match *self {
            Coordinate::Identity => 1.0,
            Coordinate::HalfLineUp { length, .. } => length / (1.0 - y),
            Coordinate::HalfLineDown { length, .. } => length / y,
            Coordinate::RealLine { length, .. } => length / (y * (1.0 - y)),
        }
    }
}

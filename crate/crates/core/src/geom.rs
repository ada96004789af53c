//! Plane geometry and the deterministic radio model.

use core::fmt;

/// A point on the simulation plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        assert!(x.is_finite() && y.is_finite(), "non-finite coordinates");
        Position { x, y }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        libm::sqrt(dx * dx + dy * dy)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Below this distance the inverse-square law saturates.
pub const MIN_RADIO_DISTANCE: f64 = 1.0;

/// Received signal power at `distance` meters from a transmitter whose
/// gain was calibrated so that the power at `coverage_radius` equals
/// `edge_power` (inverse-square, hard cutoff beyond coverage).
///
/// No fading or shadowing: the power only feeds the ranking score.
pub fn received_power(distance: f64, coverage_radius: f64, edge_power: f64) -> f64 {
    if distance > coverage_radius {
        return 0.0;
    }
    let gain = edge_power * coverage_radius * coverage_radius;
    let d = distance.max(MIN_RADIO_DISTANCE);
    gain / (d * d)
}

//! Load-dependent backhaul RTT model.
//!
//! The real service measures backhaul RTT with active probes; the
//! simulator needs a load-to-RTT curve instead. The curve is flat at
//! `rtt_base` up to a utilization knee, then ramps linearly and saturates
//! at `rtt_max`.

#[derive(Debug, Clone, PartialEq)]
pub struct BackhaulModel {
    /// Wired capacity, bits per second.
    pub capacity: f64,
    /// Uncongested RTT, milliseconds.
    pub rtt_base: f64,
    /// Saturated RTT, milliseconds.
    pub rtt_max: f64,
    /// Utilization where the RTT starts climbing.
    pub util_knee: f64,
    /// Utilization where the RTT saturates.
    pub util_sat: f64,
}

impl BackhaulModel {
    pub fn new(capacity: f64) -> Self {
        let model = BackhaulModel {
            capacity,
            rtt_base: 20.0,
            rtt_max: 300.0,
            util_knee: 0.9,
            util_sat: 1.2,
        };
        model.assert_valid();
        model
    }

    fn assert_valid(&self) {
        assert!(self.capacity > 0.0, "backhaul capacity must be positive");
        assert!(self.rtt_base < self.rtt_max, "rtt_base must be below rtt_max");
        assert!(self.util_knee < self.util_sat, "knee must sit below saturation");
    }
}

/// RTT in milliseconds for a given offered load. Non-decreasing in the
/// load.
pub fn backhaul_rtt(offered_load: f64, model: &BackhaulModel) -> f64 {
    debug_assert!(offered_load >= 0.0, "negative offered load");
    let util = offered_load / model.capacity;
    if util <= model.util_knee {
        return model.rtt_base;
    }
    let ramp = ((util - model.util_knee) / (model.util_sat - model.util_knee)).min(1.0);
    model.rtt_base + (model.rtt_max - model.rtt_base) * ramp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model() -> BackhaulModel {
        BackhaulModel::new(10e6)
    }

    #[test]
    fn below_knee_rtt_is_flat() {
        assert_abs_diff_eq!(backhaul_rtt(5e6, &model()), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn saturation_pins_rtt_max() {
        assert_abs_diff_eq!(backhaul_rtt(12e6, &model()), 300.0, epsilon = 1e-9);
        assert_abs_diff_eq!(backhaul_rtt(50e6, &model()), 300.0, epsilon = 1e-9);
    }

    #[test]
    fn ramp_midpoint() {
        // U = 1.05 sits halfway between knee 0.9 and saturation 1.2.
        assert_abs_diff_eq!(backhaul_rtt(10.5e6, &model()), 160.0, epsilon = 1e-9);
    }

    #[test]
    fn rtt_is_non_decreasing() {
        let m = model();
        let mut prev = 0.0;
        for step in 0..200 {
            let rtt = backhaul_rtt(1e5 * f64::from(step), &m);
            assert!(rtt >= prev);
            prev = rtt;
        }
    }
}

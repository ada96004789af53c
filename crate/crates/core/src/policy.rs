//! The centralized ("Northbound") policy configuration.
//!
//! A policy is a tuple of fitness parameters that keeps every quality
//! metric within `[0, 1]` independently of the access technology being
//! supervised, and that steers admission, ranking and handover decisions
//! at the terminals.

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;

use crate::ids::TechnologyId;

/// How the backhaul quality is scaled when the measured RTT exceeds the
/// congestion threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackhaulQualityMode {
    /// `(rtt_max - rtt) / k_back`, the printed scaling constant. With the
    /// default `(300, 9600)` pair this yields near-zero qualities for
    /// millisecond RTTs; kept behind this switch for fidelity.
    Literal,
    /// `(rtt_max - rtt) / (rtt_max - rtt_base)`, spanning the full `[0, 1]`
    /// range over the plausible RTT interval. Default.
    Normalized,
}

/// Broker classes of service, ordered by how strictly each rules the flow
/// data rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CsClass {
    /// Unconstrained: a flow may take any rate up to the channel capacity.
    Cs0,
    /// Throttled: accumulated rates may not push the NAP quality below the
    /// quality threshold; low-priority flows are token-bucket shaped.
    Cs1,
    /// Contract-capped: a flow never exceeds its contractual rate. Default.
    Cs2,
}

/// All fitness/threshold parameters of the brokerage service.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    /// Maximum expected RTT on a backhaul link, in milliseconds.
    pub rtt_max: f64,
    /// Scaling constant `K` of the literal backhaul-quality formula.
    pub k_back: f64,
    /// RTT at or below which the backhaul quality is always one, in ms.
    pub rtt_congestion_threshold: f64,
    /// Baseline (uncongested) RTT used by the normalized mode, in ms.
    pub rtt_base: f64,
    /// Per-technology load coefficient of the wireless-quality formula.
    pub k1_per_technology: BTreeMap<TechnologyId, f64>,
    /// Weight of the wireless quality in the NAP quality.
    pub w1: f64,
    /// Weight of the backhaul quality in the NAP quality.
    pub w2: f64,
    /// Power-vs-quality mixing weight of the ranking score.
    pub alpha: f64,
    /// Received power threshold, in watts.
    pub pow_thr: f64,
    /// Quality threshold (QT) gating flow admission and NAP eligibility.
    pub qual_thr: f64,
    /// Hysteresis margin: minimum rank-score improvement that justifies a
    /// handover between eligible NAPs.
    pub delta: f64,
    /// Backhaul quality scaling mode.
    pub backhaul_quality_mode: BackhaulQualityMode,
    /// The class of service the broker currently enables.
    pub cs_class: CsClass,
}

impl Default for PolicySet {
    /// The default management policy: `(RTT_MAX, K) = (300, 9600)`,
    /// `(w1, w2) = (0.8, 0.2)`, `alpha = 0.2`, `POW_THR = 7e-9`,
    /// `QT = 0.525`, `delta = 0.33`; `K1` is filled per technology by the
    /// scenario (0.0183 for WiMAX-class, 0.0524 for Wi-Fi-class).
    fn default() -> Self {
        Self {
            rtt_max: 300.0,
            k_back: 9600.0,
            rtt_congestion_threshold: 150.0,
            rtt_base: 20.0,
            k1_per_technology: BTreeMap::new(),
            w1: 0.8,
            w2: 0.2,
            alpha: 0.2,
            pow_thr: 7e-9,
            qual_thr: 0.525,
            delta: 0.33,
            backhaul_quality_mode: BackhaulQualityMode::Normalized,
            cs_class: CsClass::Cs2,
        }
    }
}

/// A policy invariant violation, carrying the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid policy: {}: {}", self.field, self.message)
    }
}

#[cfg(test)]
impl std::error::Error for PolicyError {}

macro_rules! ensure {
    ($cond:expr, $field:expr, $msg:expr) => {
        if !($cond) {
            return Err(PolicyError {
                field: String::from($field),
                message: alloc::format!($msg),
            });
        }
    };
}

impl PolicySet {
    /// Look up the load coefficient for a technology.
    pub fn k1(&self, tech: TechnologyId) -> Option<f64> {
        self.k1_per_technology.get(&tech).copied()
    }

    /// Check every policy invariant, naming the first violated field.
    pub fn validate(&self) -> Result<(), PolicyError> {
        let wsum = self.w1 + self.w2;
        ensure!(
            libm::fabs(wsum - 1.0) <= 1e-9,
            "w1+w2",
            "weights must sum to one, got {wsum}"
        );
        ensure!(self.w1 >= 0.0, "w1", "must be non-negative");
        ensure!(self.w2 >= 0.0, "w2", "must be non-negative");
        ensure!(
            (0.0..=1.0).contains(&self.alpha),
            "alpha",
            "must lie in [0, 1]"
        );
        ensure!(
            self.qual_thr > 0.0 && self.qual_thr < 1.0,
            "qual_thr",
            "must lie in (0, 1)"
        );
        ensure!(self.delta >= 0.0, "delta", "must be non-negative");
        ensure!(self.pow_thr > 0.0, "pow_thr", "must be positive");
        for (tech, k1) in &self.k1_per_technology {
            ensure!(
                *k1 > 0.0,
                "k1_per_technology",
                "coefficient for technology {tech} must be positive"
            );
        }
        ensure!(
            self.rtt_base < self.rtt_congestion_threshold,
            "rtt_base",
            "must be below the congestion threshold"
        );
        ensure!(
            self.rtt_congestion_threshold <= self.rtt_max,
            "rtt_congestion_threshold",
            "must not exceed rtt_max"
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_k1() -> PolicySet {
        let mut p = PolicySet::default();
        p.k1_per_technology.insert(TechnologyId(0), 0.0183);
        p.k1_per_technology.insert(TechnologyId(1), 0.0524);
        p
    }

    #[test]
    fn default_policy_is_valid() {
        assert_eq!(with_k1().validate(), Ok(()));
    }

    #[test]
    fn weight_sum_must_be_one() {
        let mut p = with_k1();
        p.w1 = 0.9;
        let err = p.validate().unwrap_err();
        assert_eq!(err.field, "w1+w2");
    }

    #[test]
    fn qt_must_be_a_proper_fraction() {
        let mut p = with_k1();
        p.qual_thr = 1.0;
        assert!(p.validate().is_err());
        p.qual_thr = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rtt_ordering_enforced() {
        let mut p = with_k1();
        p.rtt_base = 200.0;
        assert_eq!(p.validate().unwrap_err().field, "rtt_base");
        p.rtt_base = 20.0;
        p.rtt_congestion_threshold = 400.0;
        assert_eq!(
            p.validate().unwrap_err().field,
            "rtt_congestion_threshold"
        );
    }

    #[test]
    fn negative_k1_rejected() {
        let mut p = with_k1();
        p.k1_per_technology.insert(TechnologyId(2), -0.1);
        assert!(p.validate().is_err());
    }
}

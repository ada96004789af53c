//! Quality metrics and the NAP ranking score.
//!
//! Every metric here returns a value within `[0, 1]`; the policy's fitness
//! parameters guarantee that independently of the access technology being
//! monitored. The ranking score is the one exception: it combines the
//! normalized distances of received power and NAP quality from their
//! thresholds and may go negative for candidates below threshold.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ids::NapId;
use crate::policy::{BackhaulQualityMode, PolicySet};

/// A dimensionless quality in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Quality(f64);

impl Quality {
    /// Wrap a raw value, clamping it into `[0, 1]`.
    pub fn clamped(value: f64) -> Self {
        Quality(value.clamp(0.0, 1.0))
    }

    /// Construct from a value already known to lie in `[0, 1]`.
    ///
    /// Panics outside the range; use [`Quality::clamped`] for raw formula
    /// outputs.
    pub fn new(value: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&value),
            "quality {value} outside [0, 1]"
        );
        Quality(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

/// A terminal-side ranking score. Finite; within `[-1, 1]` because both
/// normalized terms are clamped to that interval before weighting.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RankScore(f64);

impl RankScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Argument errors raised by the metric evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricError {
    /// A negative RTT was passed to the backhaul quality.
    NegativeRtt(f64),
    /// Reputation was requested for a technology with zero NAPs.
    NoNaps,
    /// A precondition on a named argument failed.
    Argument(String),
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::NegativeRtt(rtt) => write!(f, "negative RTT {rtt} ms"),
            MetricError::NoNaps => {
                write!(f, "a technology with zero NAPs has no reputation")
            }
            MetricError::Argument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for MetricError {}

/// Backhaul quality from a measured RTT (milliseconds).
///
/// While the RTT sits at or below the congestion threshold the backhaul
/// quality is always one. Beyond it the quality falls linearly, scaled
/// according to the policy's [`BackhaulQualityMode`], and is clamped into
/// `[0, 1]`.
pub fn compute_backhaul_quality(rtt: f64, policy: &PolicySet) -> Result<Quality, MetricError> {
    if rtt < 0.0 {
        return Err(MetricError::NegativeRtt(rtt));
    }
    if rtt <= policy.rtt_congestion_threshold {
        return Ok(Quality(1.0));
    }
    let raw = match policy.backhaul_quality_mode {
        BackhaulQualityMode::Literal => (policy.rtt_max - rtt) / policy.k_back,
        BackhaulQualityMode::Normalized => {
            (policy.rtt_max - rtt) / (policy.rtt_max - policy.rtt_base)
        }
    };
    Ok(Quality::clamped(raw))
}

/// Wireless quality of a NAP carrying `n_flow` attached flows:
/// `1 - n_flow * k1`, clamped into `[0, 1]`.
pub fn compute_wireless_quality(n_flow: u32, k1: f64) -> Result<Quality, MetricError> {
    if k1 <= 0.0 {
        return Err(MetricError::Argument(alloc::format!(
            "k1 must be positive, got {k1}"
        )));
    }
    Ok(Quality::clamped(1.0 - f64::from(n_flow) * k1))
}

/// NAP quality: the weighted combination `w1 * wq + w2 * q_back` of the
/// wireless link quality and the backhaul quality. In `[0, 1]` because the
/// weights sum to one.
pub fn compute_nap_quality(wq: Quality, q_back: Quality, policy: &PolicySet) -> Quality {
    Quality::clamped(policy.w1 * wq.value() + policy.w2 * q_back.value())
}

/// Technology quality, i.e. the reputation of the provider owning it: the
/// arithmetic mean over the qualities of all its NAPs.
pub fn compute_reputation(nap_qualities: &[Quality]) -> Result<Quality, MetricError> {
    if nap_qualities.is_empty() {
        return Err(MetricError::NoNaps);
    }
    let sum: f64 = nap_qualities.iter().map(|q| q.value()).sum();
    Ok(Quality::clamped(sum / nap_qualities.len() as f64))
}

/// Ranking score of one candidate NAP at the terminal.
///
/// Combines the received signal power and the NAP quality, each normalized
/// against its threshold and clamped into `[-1, 1]`, weighted by `alpha`,
/// and multiplied by the technology reputation. Between two NAPs with
/// identical power and quality, the one belonging to the technology with
/// the highest reputation scores higher.
pub fn compute_rank_score(
    power: f64,
    q_nap: Quality,
    reputation: Quality,
    policy: &PolicySet,
) -> RankScore {
    let power_term = ((power - policy.pow_thr) / policy.pow_thr).clamp(-1.0, 1.0);
    let quality_term = ((q_nap.value() - policy.qual_thr) / policy.qual_thr).clamp(-1.0, 1.0);
    let score =
        reputation.value() * (policy.alpha * power_term + (1.0 - policy.alpha) * quality_term);
    RankScore(score)
}

/// One candidate entry fed into [`build_ranking`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCandidate {
    pub nap: NapId,
    /// Received signal power at the terminal, watts.
    pub power: f64,
    pub q_nap: Quality,
    pub reputation: Quality,
    /// Technology priority assigned by the broker master; larger numbers
    /// mean better-ranked technologies.
    pub priority: u32,
}

/// Resolution below which two scores count as tied.
const SCORE_TIE_EPS: f64 = 1e-9;

/// Rank candidate NAPs by descending score.
///
/// Scores closer than 1e-9 are treated as tied and broken by the higher
/// technology priority, then by the lower NAP id, so the ordering is
/// deterministic. Tie detection quantizes the score onto the 1e-9 grid,
/// keeping the comparison a total order.
pub fn build_ranking(candidates: &[RankCandidate], policy: &PolicySet) -> Vec<(NapId, RankScore)> {
    let mut ranked: Vec<(RankCandidate, RankScore, i64)> = candidates
        .iter()
        .map(|c| {
            let score = compute_rank_score(c.power, c.q_nap, c.reputation, policy);
            let quantized = libm::round(score.value() / SCORE_TIE_EPS) as i64;
            (*c, score, quantized)
        })
        .collect();
    ranked.sort_by(|(a, _, qa), (b, _, qb)| {
        qb.cmp(qa)
            .then(b.priority.cmp(&a.priority))
            .then(a.nap.cmp(&b.nap))
    });
    ranked.into_iter().map(|(c, s, _)| (c.nap, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::TechnologyId;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-9;

    fn policy() -> PolicySet {
        let mut p = PolicySet::default();
        p.k1_per_technology.insert(TechnologyId(0), 0.0183);
        p.k1_per_technology.insert(TechnologyId(1), 0.0524);
        p
    }

    #[test]
    fn backhaul_quality_is_one_below_threshold() {
        let q = compute_backhaul_quality(50.0, &policy()).unwrap();
        assert_abs_diff_eq!(q.value(), 1.0, epsilon = TOL);
    }

    #[test]
    fn backhaul_quality_zero_at_rtt_max() {
        for mode in [BackhaulQualityMode::Literal, BackhaulQualityMode::Normalized] {
            let mut p = policy();
            p.backhaul_quality_mode = mode;
            let q = compute_backhaul_quality(300.0, &p).unwrap();
            assert_abs_diff_eq!(q.value(), 0.0, epsilon = TOL);
        }
    }

    #[test]
    fn backhaul_quality_normalized_midpoint() {
        // (300 - 160) / (300 - 20) = 0.5
        let q = compute_backhaul_quality(160.0, &policy()).unwrap();
        assert_abs_diff_eq!(q.value(), 0.5, epsilon = TOL);
    }

    #[test]
    fn backhaul_quality_literal_scaling() {
        let mut p = policy();
        p.backhaul_quality_mode = BackhaulQualityMode::Literal;
        let q = compute_backhaul_quality(204.0, &p).unwrap();
        assert_abs_diff_eq!(q.value(), (300.0 - 204.0) / 9600.0, epsilon = TOL);
    }

    #[test]
    fn backhaul_quality_rejects_negative_rtt() {
        assert!(matches!(
            compute_backhaul_quality(-1.0, &policy()),
            Err(MetricError::NegativeRtt(_))
        ));
    }

    #[test]
    fn wireless_quality_empty_nap() {
        let q = compute_wireless_quality(0, 0.0524).unwrap();
        assert_abs_diff_eq!(q.value(), 1.0, epsilon = TOL);
    }

    #[test]
    fn wireless_quality_typical_loads() {
        // 24 clients on a WiMAX-class NAP stay above QT 0.525.
        let q = compute_wireless_quality(24, 0.0183).unwrap();
        assert_abs_diff_eq!(q.value(), 0.5608, epsilon = TOL);
        // 8 clients on a Wi-Fi-class NAP.
        let q = compute_wireless_quality(8, 0.0524).unwrap();
        assert_abs_diff_eq!(q.value(), 0.5808, epsilon = TOL);
    }

    #[test]
    fn wireless_quality_clamps_at_overload() {
        let q = compute_wireless_quality(200, 0.0524).unwrap();
        assert_abs_diff_eq!(q.value(), 0.0, epsilon = TOL);
    }

    #[test]
    fn nap_quality_ideal() {
        let q = compute_nap_quality(Quality::new(1.0), Quality::new(1.0), &policy());
        assert_abs_diff_eq!(q.value(), 1.0, epsilon = TOL);
    }

    #[test]
    fn nap_quality_even_weights() {
        // 0.57 * 0.5 + 1 * 0.5 = 0.785
        let mut p = policy();
        p.w1 = 0.5;
        p.w2 = 0.5;
        let q = compute_nap_quality(Quality::new(0.57), Quality::new(1.0), &p);
        assert_abs_diff_eq!(q.value(), 0.785, epsilon = TOL);
    }

    #[test]
    fn nap_quality_dead_backhaul() {
        let q = compute_nap_quality(Quality::new(0.5), Quality::new(0.0), &policy());
        assert_abs_diff_eq!(q.value(), 0.4, epsilon = TOL);
    }

    #[test]
    fn reputation_is_the_mean() {
        let one = compute_reputation(&[Quality::new(0.7)]).unwrap();
        assert_abs_diff_eq!(one.value(), 0.7, epsilon = TOL);
        let two = compute_reputation(&[Quality::new(0.6), Quality::new(0.8)]).unwrap();
        assert_abs_diff_eq!(two.value(), 0.7, epsilon = TOL);
        let ideal =
            compute_reputation(&[Quality::new(1.0), Quality::new(1.0), Quality::new(1.0)])
                .unwrap();
        assert_abs_diff_eq!(ideal.value(), 1.0, epsilon = TOL);
    }

    #[test]
    fn reputation_needs_at_least_one_nap() {
        assert_eq!(compute_reputation(&[]), Err(MetricError::NoNaps));
    }

    #[test]
    fn rank_score_zero_at_thresholds() {
        let p = policy();
        let s = compute_rank_score(p.pow_thr, Quality::new(p.qual_thr), Quality::new(1.0), &p);
        assert_abs_diff_eq!(s.value(), 0.0, epsilon = TOL);
    }

    #[test]
    fn rank_score_power_term_clamps() {
        let p = policy();
        // Power at twice the threshold clamps the power term to one.
        let s = compute_rank_score(
            2.0 * p.pow_thr,
            Quality::new(p.qual_thr),
            Quality::new(1.0),
            &p,
        );
        assert_abs_diff_eq!(s.value(), 0.2, epsilon = TOL);
    }

    #[test]
    fn rank_score_scales_with_reputation() {
        let p = policy();
        let s = compute_rank_score(
            2.0 * p.pow_thr,
            Quality::new(p.qual_thr),
            Quality::new(0.5),
            &p,
        );
        assert_abs_diff_eq!(s.value(), 0.1, epsilon = TOL);
    }

    #[test]
    fn ranking_empty_input() {
        assert!(build_ranking(&[], &policy()).is_empty());
    }

    #[test]
    fn ranking_prefers_higher_reputation() {
        let p = policy();
        let cands = [
            RankCandidate {
                nap: NapId(1),
                power: 2e-8,
                q_nap: Quality::new(0.8),
                reputation: Quality::new(0.8),
                priority: 1,
            },
            RankCandidate {
                nap: NapId(2),
                power: 2e-8,
                q_nap: Quality::new(0.8),
                reputation: Quality::new(0.9),
                priority: 1,
            },
        ];
        let ranked = build_ranking(&cands, &p);
        assert_eq!(ranked[0].0, NapId(2));
    }

    #[test]
    fn ranking_tie_break_priority_then_id() {
        let p = policy();
        let equal = |nap, priority| RankCandidate {
            nap,
            power: p.pow_thr,
            q_nap: Quality::new(0.6),
            reputation: Quality::new(1.0),
            priority,
        };
        let ranked = build_ranking(&[equal(NapId(1), 1), equal(NapId(2), 2)], &p);
        assert_eq!(ranked[0].0, NapId(2), "higher priority wins the tie");

        let ranked = build_ranking(&[equal(NapId(2), 1), equal(NapId(1), 1)], &p);
        assert_eq!(ranked[0].0, NapId(1), "lower id wins at equal priority");
    }

    #[test]
    fn ranking_is_a_permutation() {
        let p = policy();
        let cands: Vec<RankCandidate> = (0..10)
            .map(|i| RankCandidate {
                nap: NapId(i),
                power: 1e-9 * f64::from(i + 1),
                q_nap: Quality::new(0.1 * f64::from(i % 7)),
                reputation: Quality::new(1.0 - 0.05 * f64::from(i)),
                priority: i % 3,
            })
            .collect();
        let ranked = build_ranking(&cands, &p);
        let mut ids: Vec<u32> = ranked.iter().map(|(n, _)| n.0).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }
}

//! Property suites over the metric formulas, capacity sharing and
//! mobility.

use proptest::prelude::*;

use hetflow_core::geom::Position;
use hetflow_core::ids::{NapId, TechnologyId};
use hetflow_core::metrics::{
    build_ranking, compute_backhaul_quality, compute_nap_quality, compute_rank_score,
    compute_reputation, compute_wireless_quality, Quality, RankCandidate,
};
use hetflow_core::mobility::MobilityPlan;
use hetflow_core::policy::{BackhaulQualityMode, PolicySet};
use hetflow_core::traffic::share_capacity;

fn policy_with(w1: f64, alpha: f64, qual_thr: f64) -> PolicySet {
    let mut p = PolicySet::default();
    p.w1 = w1;
    p.w2 = 1.0 - w1;
    p.alpha = alpha;
    p.qual_thr = qual_thr;
    p.k1_per_technology.insert(TechnologyId(0), 0.0183);
    p
}

proptest! {
    #[test]
    fn quality_outputs_stay_in_range(
        rtt in 0.0..2000.0f64,
        n_flow in 0u32..500,
        k1 in 1e-4..0.5f64,
        wq in 0.0..1.0f64,
        qb in 0.0..1.0f64,
        w1 in 0.0..1.0f64,
        literal in proptest::bool::ANY,
    ) {
        let mut p = policy_with(w1, 0.2, 0.525);
        if literal {
            p.backhaul_quality_mode = BackhaulQualityMode::Literal;
        }
        let q = compute_backhaul_quality(rtt, &p).unwrap().value();
        prop_assert!((0.0..=1.0).contains(&q));
        let q = compute_wireless_quality(n_flow, k1).unwrap().value();
        prop_assert!((0.0..=1.0).contains(&q));
        let q = compute_nap_quality(Quality::new(wq), Quality::new(qb), &p).value();
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn reputation_stays_in_range(values in proptest::collection::vec(0.0..1.0f64, 1..20)) {
        let qualities: Vec<Quality> = values.into_iter().map(Quality::new).collect();
        let rep = compute_reputation(&qualities).unwrap().value();
        prop_assert!((0.0..=1.0).contains(&rep));
    }

    #[test]
    fn rank_score_is_bounded_and_monotone(
        power in 0.0..1e-6f64,
        q_nap in 0.0..1.0f64,
        rep in 0.0..1.0f64,
        alpha in 0.0..1.0f64,
        qual_thr in 0.01..0.99f64,
    ) {
        let p = policy_with(0.8, alpha, qual_thr);
        let score = compute_rank_score(power, Quality::new(q_nap), Quality::new(rep), &p).value();
        prop_assert!((-1.0..=1.0).contains(&score));
        prop_assert!(score.is_finite());

        // Monotone non-decreasing in power and quality.
        let more_power =
            compute_rank_score(power * 1.5 + 1e-12, Quality::new(q_nap), Quality::new(rep), &p)
                .value();
        prop_assert!(more_power >= score - 1e-12);
        let better_q = compute_rank_score(
            power,
            Quality::new((q_nap + 0.05).min(1.0)),
            Quality::new(rep),
            &p,
        )
        .value();
        prop_assert!(better_q >= score - 1e-12);
    }

    #[test]
    fn rank_score_scales_linearly_with_reputation(
        power in 0.0..1e-6f64,
        q_nap in 0.0..1.0f64,
        rep in 0.01..1.0f64,
        c in 0.01..1.0f64,
    ) {
        let p = policy_with(0.8, 0.2, 0.525);
        let base = compute_rank_score(power, Quality::new(q_nap), Quality::new(rep), &p).value();
        let scaled =
            compute_rank_score(power, Quality::new(q_nap), Quality::new(rep * c), &p).value();
        prop_assert!((scaled - base * c).abs() < 1e-12);
    }

    #[test]
    fn backhaul_quality_non_increasing_in_rtt(
        rtt in 0.0..1000.0f64,
        step in 0.0..200.0f64,
        literal in proptest::bool::ANY,
    ) {
        let mut p = policy_with(0.8, 0.2, 0.525);
        if literal {
            p.backhaul_quality_mode = BackhaulQualityMode::Literal;
        }
        let a = compute_backhaul_quality(rtt, &p).unwrap().value();
        let b = compute_backhaul_quality(rtt + step, &p).unwrap().value();
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn wireless_quality_non_increasing_in_load(n in 0u32..200, k1 in 1e-4..0.5f64) {
        let a = compute_wireless_quality(n, k1).unwrap().value();
        let b = compute_wireless_quality(n + 1, k1).unwrap().value();
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn nap_quality_endpoints_for_any_weights(w1 in 0.0..=1.0f64) {
        let p = policy_with(w1, 0.2, 0.525);
        let top = compute_nap_quality(Quality::new(1.0), Quality::new(1.0), &p).value();
        let bottom = compute_nap_quality(Quality::new(0.0), Quality::new(0.0), &p).value();
        prop_assert!((top - 1.0).abs() < 1e-12);
        prop_assert!(bottom.abs() < 1e-12);
    }

    #[test]
    fn ranking_is_a_permutation_and_deterministic(
        entries in proptest::collection::vec(
            (0.0..1e-6f64, 0.0..1.0f64, 0.0..1.0f64, 0u32..4),
            0..12,
        )
    ) {
        let p = policy_with(0.8, 0.2, 0.525);
        let candidates: Vec<RankCandidate> = entries
            .iter()
            .enumerate()
            .map(|(i, (power, q, rep, prio))| RankCandidate {
                nap: NapId(i as u32),
                power: *power,
                q_nap: Quality::new(*q),
                reputation: Quality::new(*rep),
                priority: *prio,
            })
            .collect();
        let first = build_ranking(&candidates, &p);
        let second = build_ranking(&candidates, &p);
        prop_assert_eq!(&first, &second);
        let mut ids: Vec<u32> = first.iter().map(|(n, _)| n.0).collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..entries.len() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn ranking_argmax_invariant_under_uniform_reputation_scaling(
        entries in proptest::collection::vec(
            (0.0..1e-6f64, 0.0..1.0f64, 0.01..1.0f64),
            1..10,
        ),
        scale_exp in -2i32..=1,
    ) {
        // Powers of two scale f64 values exactly, so the order is
        // preserved exactly as well.
        let c = libm::exp2(f64::from(scale_exp));
        let p = policy_with(0.8, 0.2, 0.525);
        let make = |scale: f64| -> Vec<RankCandidate> {
            entries
                .iter()
                .enumerate()
                .map(|(i, (power, q, rep))| RankCandidate {
                    nap: NapId(i as u32),
                    power: *power,
                    q_nap: Quality::new(*q),
                    reputation: Quality::new((rep * scale).min(1.0)),
                    priority: 0,
                })
                .collect()
        };
        // Keep every scaled reputation inside [0, 1].
        prop_assume!(entries.iter().all(|(_, _, rep)| rep * c <= 1.0));
        let base = build_ranking(&make(1.0), &p);
        let scaled = build_ranking(&make(c), &p);
        prop_assert_eq!(base[0].0, scaled[0].0);
    }

    #[test]
    fn capacity_share_is_max_min_fair(
        demands in proptest::collection::vec(0.0..2e6f64, 0..40),
        capacity in 1e3..2e7f64,
    ) {
        let alloc = share_capacity(&demands, capacity);
        prop_assert_eq!(alloc.len(), demands.len());
        let total: f64 = alloc.iter().sum();
        prop_assert!(total <= capacity * (1.0 + 1e-9));
        for (a, d) in alloc.iter().zip(&demands) {
            prop_assert!(*a <= d + 1e-9);
            prop_assert!(*a >= 0.0);
        }
        let demand_total: f64 = demands.iter().sum();
        if demand_total <= capacity {
            for (a, d) in alloc.iter().zip(&demands) {
                prop_assert!((a - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn linear_mobility_matches_the_closed_form(
        sx in -100.0..100.0f64,
        sy in -100.0..100.0f64,
        dx in -100.0..100.0f64,
        dy in -100.0..100.0f64,
        speed in 0.1..30.0f64,
        start in 0.0..50.0f64,
        t in 0.0..500.0f64,
    ) {
        let origin = Position::new(sx, sy);
        let dest = Position::new(dx, dy);
        let plan = MobilityPlan::LinearTo { dest, speed, start_time: start };
        let pos = plan.position_at(origin, t);
        let total = origin.distance(&dest);
        let travelled = (speed * (t - start).max(0.0)).min(total);
        if total > 0.0 {
            let f = travelled / total;
            prop_assert!((pos.x - (sx + (dx - sx) * f)).abs() < 1e-9);
            prop_assert!((pos.y - (sy + (dy - sy) * f)).abs() < 1e-9);
        } else {
            prop_assert_eq!(pos, dest);
        }
        // Never overshoots the destination.
        prop_assert!(origin.distance(&pos) <= total + 1e-9);
    }
}

//! Long-term techno-economic study: a week of hourly demand against two
//! provider deployment strategies, with the brokerage service on or off.
//!
//! Provider A runs the Wi-Fi-class network (3 or 5 APs depending on its
//! strategy), provider B a single broad WiMAX-class base station. Each
//! subscriber pays its provider a fixed tariff per connected hour
//! regardless of the network actually used; moving a client onto the other
//! network costs the home provider a fixed inter-provider tariff, and
//! blocking one costs a churn penalty.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Hours in the study window.
pub const WEEK_HOURS: usize = 168;

/// Wireless provisioning per client-capacity unit, Mbit/s.
pub const MBPS_PER_CLIENT: f64 = 0.32;

/// Provider A's deployment strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// 3 APs at a 0.45 u tariff.
    One,
    /// 5 APs at a 0.70 u tariff.
    Two,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::One, Strategy::Two];

    pub fn number(self) -> u32 {
        match self {
            Strategy::One => 1,
            Strategy::Two => 2,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// All parameters of one planner evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomicScenario {
    pub strategy: Strategy,
    /// Provider A's tariff, money per connection-hour.
    pub p_a: f64,
    /// Provider B's tariff, money per connection-hour.
    pub p_b: f64,
    /// Inter-provider tariff per moved connection-hour.
    pub p_h: f64,
    pub ap_count: u32,
    pub bs_count: u32,
    /// Clients one AP typically serves.
    pub ap_capacity_clients: u32,
    /// Clients one BS typically serves.
    pub bs_capacity_clients: u32,
    /// Yearly cost of one provisioned Mbit/s, Wi-Fi-class.
    pub infra_cost_per_mbps_year_wifi: f64,
    /// Yearly cost of one provisioned Mbit/s, WiMAX-class.
    pub infra_cost_per_mbps_year_wimax: f64,
    /// Money lost per blocked client-hour.
    pub churn_cost_per_block: f64,
    /// Provider A's share of the hourly demand.
    pub market_share: f64,
    pub broker_enabled: bool,
}

impl EconomicScenario {
    /// The study configuration for one strategy/broker combination:
    /// strategy 1 fields (0.45 u, 3 APs) or strategy 2 (0.70 u, 5 APs),
    /// with p_b = 0.90 u, p_h = 0.68 u, one BS, typical capacities 8/24
    /// clients, yearly infrastructure costs 600/1200 u per Mbit/s and a
    /// churn cost of 1.35 u per block.
    pub fn study(strategy: Strategy, broker_enabled: bool) -> Self {
        let (p_a, ap_count) = match strategy {
            Strategy::One => (0.45, 3),
            Strategy::Two => (0.70, 5),
        };
        EconomicScenario {
            strategy,
            p_a,
            p_b: 0.90,
            p_h: 0.68,
            ap_count,
            bs_count: 1,
            ap_capacity_clients: 8,
            bs_capacity_clients: 24,
            infra_cost_per_mbps_year_wifi: 600.0,
            infra_cost_per_mbps_year_wimax: 1200.0,
            churn_cost_per_block: 1.35,
            market_share: 0.5,
            broker_enabled,
        }
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        let ok = self.p_a >= 0.0
            && self.p_b >= 0.0
            && self.p_h >= 0.0
            && self.ap_count >= 1
            && self.bs_count >= 1
            && self.market_share > 0.0
            && self.market_share < 1.0;
        if ok {
            Ok(())
        } else {
            Err(DemandError {
                message: String::from("tariffs must be non-negative, counts at least one, market share in (0, 1)"),
            })
        }
    }

    pub fn capacity_a(&self) -> u32 {
        self.ap_count * self.ap_capacity_clients
    }

    pub fn capacity_b(&self) -> u32 {
        self.bs_count * self.bs_capacity_clients
    }

    /// Weekly infrastructure amortization (annual cost over 52 weeks) for
    /// both providers.
    pub fn weekly_infra_costs(&self) -> (f64, f64) {
        let mbps_a = f64::from(self.capacity_a()) * MBPS_PER_CLIENT;
        let mbps_b = f64::from(self.capacity_b()) * MBPS_PER_CLIENT;
        (
            mbps_a * self.infra_cost_per_mbps_year_wifi / 52.0,
            mbps_b * self.infra_cost_per_mbps_year_wimax / 52.0,
        )
    }
}

/// One week of hourly customer counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    hourly: Vec<u32>,
}

/// A demand profile or economic scenario rejected by validation.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandError {
    pub message: String,
}

impl fmt::Display for DemandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid demand profile: {}", self.message)
    }
}

#[cfg(test)]
impl std::error::Error for DemandError {}

impl DemandProfile {
    /// Wrap validated hourly counts (exactly one week of them).
    pub fn from_hourly(hourly: Vec<u32>) -> Result<Self, DemandError> {
        if hourly.len() != WEEK_HOURS {
            return Err(DemandError {
                message: alloc::format!(
                    "expected {WEEK_HOURS} hourly counts, got {}",
                    hourly.len()
                ),
            });
        }
        Ok(DemandProfile { hourly })
    }

    pub fn hourly(&self) -> &[u32] {
        &self.hourly
    }

    pub fn peak(&self) -> u32 {
        self.hourly.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.hourly.iter().map(|c| f64::from(*c)).sum::<f64>() / WEEK_HOURS as f64
    }

    /// Commuter-shaped synthetic week: weekday double peaks, quiet nights,
    /// a flat weekend. The off-peak hours are scaled so the peak-hour to
    /// weekly-average ratio lands on the observed busy-hour growth factor
    /// of about 3.4.
    pub fn synthetic_week(peak_customers: u32) -> Self {
        const PEAK_TO_MEAN: f64 = 3.4;
        // Raw weekday shape; 1.0 marks the two commuter peaks.
        const WEEKDAY: [f64; 24] = [
            0.05, 0.05, 0.05, 0.05, 0.05, 0.08, 0.30, 0.65, 1.00, 0.50, 0.30, 0.30, 0.30, 0.30,
            0.30, 0.35, 0.55, 1.00, 0.60, 0.35, 0.22, 0.15, 0.10, 0.07,
        ];
        const WEEKEND_LEVEL: f64 = 0.15;

        let mut raw = Vec::with_capacity(WEEK_HOURS);
        for day in 0..7 {
            if day < 5 {
                raw.extend_from_slice(&WEEKDAY);
            } else {
                raw.extend(core::iter::repeat(WEEKEND_LEVEL).take(24));
            }
        }
        let peaks = raw.iter().filter(|f| **f >= 1.0).count() as f64;
        let off_peak_sum: f64 = raw.iter().filter(|f| **f < 1.0).sum();
        // Solve for the off-peak scale that puts the weekly mean at
        // peak / 3.4.
        let target_total = WEEK_HOURS as f64 / PEAK_TO_MEAN;
        let lambda = (target_total - peaks) / off_peak_sum;

        let hourly = raw
            .into_iter()
            .map(|f| {
                let fraction = if f >= 1.0 { 1.0 } else { f * lambda };
                libm::round(fraction * f64::from(peak_customers)) as u32
            })
            .collect();
        DemandProfile { hourly }
    }
}

/// One provider's hour under the business model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProviderHour {
    pub subscribers: u32,
    /// Clients served on the provider's own network.
    pub served_own: u32,
    /// Clients moved onto the other provider's network.
    pub moved_out: u32,
    /// Other-provider clients hosted this hour.
    pub moved_in: u32,
    pub blocked: u32,
    /// Net money this hour, before infrastructure amortization.
    pub revenue: f64,
    /// Service quality of the provider's network in [0, 1].
    pub quality: f64,
}

/// Both providers, one hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyOutcome {
    pub hour: usize,
    pub a: ProviderHour,
    pub b: ProviderHour,
}

/// One provider's week.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProviderWeek {
    pub revenue: f64,
    pub infra_cost: f64,
    pub profit: f64,
    pub mean_quality: f64,
    pub blocked: u32,
    pub moved_out: u32,
    pub moved_in: u32,
}

/// A full planner evaluation of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekOutcome {
    pub hours: Vec<HourlyOutcome>,
    pub a: ProviderWeek,
    pub b: ProviderWeek,
}

fn split_subscribers(demand: u32, share: f64) -> (u32, u32) {
    let a = libm::round(f64::from(demand) * share) as u32;
    (a.min(demand), demand - a.min(demand))
}

fn network_quality(attached: u32, capacity: u32) -> f64 {
    if attached == 0 {
        1.0
    } else {
        (f64::from(capacity) / f64::from(attached)).min(1.0)
    }
}

/// Play one week of demand through the business model.
///
/// Broker on: each provider admits its own subscribers up to capacity;
/// overflow moves onto the other network's spare capacity (the home
/// provider keeps the tariff and pays the host the inter-provider fee);
/// what remains is blocked at a churn cost. Networks never exceed their
/// capacity, so their service quality stays at one.
///
/// Broker off: every subscriber attaches to its own network best-effort;
/// nothing is blocked but an overloaded network's quality degrades as the
/// capacity-to-load ratio.
pub fn simulate_week(scenario: &EconomicScenario, demand: &DemandProfile) -> WeekOutcome {
    let cap_a = scenario.capacity_a();
    let cap_b = scenario.capacity_b();
    let mut hours = Vec::with_capacity(WEEK_HOURS);

    for (hour, &customers) in demand.hourly().iter().enumerate() {
        let (subs_a, subs_b) = split_subscribers(customers, scenario.market_share);
        let (a, b) = if scenario.broker_enabled {
            brokered_hour(scenario, subs_a, subs_b, cap_a, cap_b)
        } else {
            (
                best_effort_hour(subs_a, cap_a, scenario.p_a),
                best_effort_hour(subs_b, cap_b, scenario.p_b),
            )
        };
        debug_assert_eq!(a.served_own + a.moved_out + a.blocked, a.subscribers);
        debug_assert_eq!(b.served_own + b.moved_out + b.blocked, b.subscribers);
        hours.push(HourlyOutcome { hour, a, b });
    }

    let (infra_a, infra_b) = scenario.weekly_infra_costs();
    let a = provider_week(hours.iter().map(|h| &h.a), infra_a);
    let b = provider_week(hours.iter().map(|h| &h.b), infra_b);
    WeekOutcome { hours, a, b }
}

fn brokered_hour(
    scenario: &EconomicScenario,
    subs_a: u32,
    subs_b: u32,
    cap_a: u32,
    cap_b: u32,
) -> (ProviderHour, ProviderHour) {
    let served_a = subs_a.min(cap_a);
    let served_b = subs_b.min(cap_b);
    let overflow_a = subs_a - served_a;
    let overflow_b = subs_b - served_b;
    let spare_a = cap_a - served_a;
    let spare_b = cap_b - served_b;
    let moved_a = overflow_a.min(spare_b);
    let moved_b = overflow_b.min(spare_a);
    let blocked_a = overflow_a - moved_a;
    let blocked_b = overflow_b - moved_b;

    let revenue_a = scenario.p_a * f64::from(served_a + moved_a)
        + scenario.p_h * f64::from(moved_b)
        - scenario.p_h * f64::from(moved_a)
        - scenario.churn_cost_per_block * f64::from(blocked_a);
    let revenue_b = scenario.p_b * f64::from(served_b + moved_b)
        + scenario.p_h * f64::from(moved_a)
        - scenario.p_h * f64::from(moved_b)
        - scenario.churn_cost_per_block * f64::from(blocked_b);

    let a = ProviderHour {
        subscribers: subs_a,
        served_own: served_a,
        moved_out: moved_a,
        moved_in: moved_b,
        blocked: blocked_a,
        revenue: revenue_a,
        quality: network_quality(served_a + moved_b, cap_a),
    };
    let b = ProviderHour {
        subscribers: subs_b,
        served_own: served_b,
        moved_out: moved_b,
        moved_in: moved_a,
        blocked: blocked_b,
        revenue: revenue_b,
        quality: network_quality(served_b + moved_a, cap_b),
    };
    (a, b)
}

fn best_effort_hour(subs: u32, cap: u32, tariff: f64) -> ProviderHour {
    ProviderHour {
        subscribers: subs,
        served_own: subs,
        moved_out: 0,
        moved_in: 0,
        blocked: 0,
        revenue: tariff * f64::from(subs),
        quality: network_quality(subs, cap),
    }
}

fn provider_week<'a, I>(hours: I, infra_cost: f64) -> ProviderWeek
where
    I: Iterator<Item = &'a ProviderHour>,
{
    let mut revenue = 0.0;
    let mut quality_sum = 0.0;
    let mut blocked = 0;
    let mut moved_out = 0;
    let mut moved_in = 0;
    let mut count = 0usize;
    for h in hours {
        revenue += h.revenue;
        quality_sum += h.quality;
        blocked += h.blocked;
        moved_out += h.moved_out;
        moved_in += h.moved_in;
        count += 1;
    }
    ProviderWeek {
        revenue,
        infra_cost,
        profit: revenue - infra_cost,
        mean_quality: quality_sum / count as f64,
        blocked,
        moved_out,
        moved_in,
    }
}

/// Which provider ends up with the larger weekly profit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominant {
    A,
    B,
    Tied,
}

impl fmt::Display for Dominant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dominant::A => write!(f, "A"),
            Dominant::B => write!(f, "B"),
            Dominant::Tied => write!(f, "tied"),
        }
    }
}

/// One row of the strategy comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub broker_enabled: bool,
    pub outcome: WeekOutcome,
    pub dominant: Dominant,
}

/// Evaluate every strategy/broker combination against the demand.
pub fn compare(demand: &DemandProfile) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for strategy in Strategy::ALL {
        for broker_enabled in [false, true] {
            let scenario = EconomicScenario::study(strategy, broker_enabled);
            let outcome = simulate_week(&scenario, demand);
            let dominant = if outcome.a.profit > outcome.b.profit {
                Dominant::A
            } else if outcome.b.profit > outcome.a.profit {
                Dominant::B
            } else {
                Dominant::Tied
            };
            rows.push(ComparisonRow {
                strategy,
                broker_enabled,
                outcome,
                dominant,
            });
        }
    }
    rows
}

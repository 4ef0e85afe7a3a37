//! Closed-form throughput and delay of the helper/user system.
//!
//! The helper S serves a Bernoulli(λ) packet queue towards D, transmitting
//! with probability `q_S` whenever the queue is non-empty. The user U has an
//! external request with probability `q_U` per slot; when S is not
//! transmitting, the request goes to S with probability `q_C`, otherwise (or
//! on a cache miss) to the data center, which is available with probability α.
//!
//! Every delay below is measured in slots and conditions on the helper being
//! busy independently in each slot with probability `q_S · P(Q ≠ 0)`.

use std::fmt;

use crate::error::{check_probability, ModelError, Result};
use crate::phy::LinkProbabilities;

/// Full probability tuple describing one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    /// λ, packets per slot.
    pub arrival_rate: f64,
    /// `q_S`: S transmits to D when its queue is non-empty.
    pub tx_prob: f64,
    /// `q_U`: U requests a file outside its own cache.
    pub external_request_prob: f64,
    /// `q_C`: U asks S when S is available.
    pub helper_assist_prob: f64,
    /// `p_h`: the requested file is cached at S.
    pub helper_hit_prob: f64,
    /// α: DC is available in a slot.
    pub dc_availability: f64,
    pub links: LinkProbabilities,
    /// Use `p_SU/S` instead of `p_SD/S` for the helper-to-user transmission in
    /// the delay formulas. Off by default.
    pub helper_retry_uses_su_link: bool,
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("arrival_rate", self.arrival_rate)?;
        check_probability("tx_prob", self.tx_prob)?;
        check_probability("external_request_prob", self.external_request_prob)?;
        check_probability("helper_assist_prob", self.helper_assist_prob)?;
        check_probability("helper_hit_prob", self.helper_hit_prob)?;
        check_probability("dc_availability", self.dc_availability)?;
        self.links.validate()
    }

    pub fn miss_prob(&self) -> f64 {
        1.0 - self.helper_hit_prob
    }

    /// Success probability of a helper-to-user delivery in the delay model.
    pub fn helper_delivery_link(&self) -> f64 {
        if self.helper_retry_uses_su_link {
            self.links.p_su_s
        } else {
            self.links.p_sd_s
        }
    }

    pub fn with_access(self, tx_prob: f64, helper_assist_prob: f64) -> Self {
        Self {
            tx_prob,
            helper_assist_prob,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Stable,
    Unstable,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Stable => f.write_str("stable"),
            Regime::Unstable => f.write_str("unstable"),
        }
    }
}

/// Mean delay in slots, or a marker that the user is never served.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Finite(f64),
    Unreachable,
}

impl Delay {
    fn from_success_prob(p: f64) -> Self {
        if p > 0.0 {
            Delay::Finite(p.recip())
        } else {
            Delay::Unreachable
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Delay::Finite(d) => Some(d),
            Delay::Unreachable => None,
        }
    }

    /// The delay as a float, `+inf` when unreachable.
    pub fn as_f64(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Finite(d) => write!(f, "{d}"),
            Delay::Unreachable => f.write_str("unreachable"),
        }
    }
}

/// Service rate of S per transmission attempt, i.e. μ at `q_S = 1`.
///
/// This is also the largest arrival rate any `q_S` can stabilise (strictly).
pub fn max_service_rate(p: &ScenarioParams) -> f64 {
    let q_u = p.external_request_prob;
    (1.0 - q_u) * p.links.p_sd_s + q_u * p.dc_availability * p.links.p_sd_s_dc
}

/// μ: mean number of packets S delivers to D per slot with a backlogged queue.
pub fn service_rate(p: &ScenarioParams) -> f64 {
    p.tx_prob * max_service_rate(p)
}

/// Loynes: stable iff λ < μ. The boundary λ = μ counts as unstable.
pub fn is_stable(p: &ScenarioParams) -> bool {
    p.arrival_rate < service_rate(p)
}

pub fn regime(p: &ScenarioParams) -> Regime {
    if is_stable(p) {
        Regime::Stable
    } else {
        Regime::Unstable
    }
}

fn require_stable(p: &ScenarioParams) -> Result<()> {
    if is_stable(p) {
        Ok(())
    } else {
        Err(ModelError::Regime {
            expected: "stable",
            arrival_rate: p.arrival_rate,
            service_rate: service_rate(p),
        })
    }
}

/// `P(Q ≠ 0) = λ / μ` for a stable queue.
pub fn queue_busy_prob(p: &ScenarioParams) -> Result<f64> {
    require_stable(p)?;
    Ok(p.arrival_rate / service_rate(p))
}

/// Busy probability in the given regime; a saturated queue is always busy.
pub fn busy_prob_in(p: &ScenarioParams, regime: Regime) -> Result<f64> {
    match regime {
        Regime::Stable => queue_busy_prob(p),
        Regime::Unstable => Ok(1.0),
    }
}

/// `T_S`: λ when stable, μ otherwise.
pub fn throughput_s(p: &ScenarioParams) -> f64 {
    if is_stable(p) {
        p.arrival_rate
    } else {
        service_rate(p)
    }
}

/// User throughput for an arbitrary busy probability `P(Q ≠ 0)`.
pub fn throughput_u_general(p: &ScenarioParams, busy_prob: f64) -> f64 {
    let l = &p.links;
    let alpha = p.dc_availability;
    let helper_busy = p.tx_prob * busy_prob;
    let hit_served = p.helper_assist_prob * p.helper_hit_prob;
    helper_busy * p.external_request_prob * alpha * l.p_dc_s_dc
        + (1.0 - helper_busy)
            * p.external_request_prob
            * (hit_served * l.p_su_s + (1.0 - hit_served) * alpha * l.p_dc_dc)
}

/// User throughput with a stable helper queue; does not depend on `q_S`.
pub fn throughput_u_stable(p: &ScenarioParams) -> Result<f64> {
    require_stable(p)?;
    let l = &p.links;
    let alpha = p.dc_availability;
    let q_u = p.external_request_prob;
    let lambda = p.arrival_rate;
    let m = max_service_rate(p);
    let a = alpha * l.p_dc_dc + p.helper_assist_prob * p.helper_hit_prob * (l.p_su_s - alpha * l.p_dc_dc);
    Ok(q_u * alpha * lambda * l.p_dc_s_dc / m + (m - lambda) / m * q_u * a)
}

/// User throughput with a saturated helper queue.
pub fn throughput_u_unstable(p: &ScenarioParams) -> f64 {
    let l = &p.links;
    let alpha = p.dc_availability;
    let q_s = p.tx_prob;
    let q_u = p.external_request_prob;
    let hit_served = p.helper_assist_prob * p.helper_hit_prob;
    q_s * q_u * alpha * l.p_dc_s_dc
        + (1.0 - q_s) * q_u * (hit_served * l.p_su_s + (1.0 - hit_served) * alpha * l.p_dc_dc)
}

/// `w T_S + (1 - w) T_U` with the regime's own `T_S` and `T_U`.
pub fn weighted_sum_throughput(p: &ScenarioParams, weight: f64, regime: Regime) -> Result<f64> {
    check_probability("weight", weight)?;
    Ok(match regime {
        Regime::Stable => weight * p.arrival_rate + (1.0 - weight) * throughput_u_stable(p)?,
        Regime::Unstable => weight * service_rate(p) + (1.0 - weight) * throughput_u_unstable(p),
    })
}

/// `D_DC`: mean remaining delay of a request that has to be fetched from DC.
pub fn delay_dc_state(p: &ScenarioParams, busy_prob: f64) -> Delay {
    let b = p.tx_prob * busy_prob;
    let l = &p.links;
    Delay::from_success_prob(p.dc_availability * (b * l.p_dc_s_dc + (1.0 - b) * l.p_dc_dc))
}

/// `D_S`: mean remaining delay of a request for a file cached at the helper.
pub fn delay_helper_state(p: &ScenarioParams, busy_prob: f64) -> Delay {
    let b = p.tx_prob * busy_prob;
    let l = &p.links;
    let alpha = p.dc_availability;
    let q_c = p.helper_assist_prob;
    let free = q_c * p.helper_delivery_link() + (1.0 - q_c) * alpha * l.p_dc_dc;
    Delay::from_success_prob(b * alpha * l.p_dc_s_dc + (1.0 - b) * free)
}

/// Mean delay `D` for a busy probability `P(Q ≠ 0)`.
pub fn delay_for_busy_prob(p: &ScenarioParams, busy_prob: f64) -> Delay {
    let b = p.tx_prob * busy_prob;
    let l = &p.links;
    let alpha = p.dc_availability;
    let q_c = p.helper_assist_prob;
    let p_h = p.helper_hit_prob;
    let d_s = delay_helper_state(p, busy_prob);
    let d_dc = delay_dc_state(p, busy_prob);

    let terms = [
        (p_h * q_c * (1.0 - p.helper_delivery_link()), d_s),
        ((1.0 - p_h) * (1.0 - alpha * l.p_dc_dc), d_dc),
        (p_h * (1.0 - q_c) * (1.0 - alpha * l.p_dc_dc), d_s),
    ];
    let mut f = 0.0;
    for (weight, delay) in terms {
        if weight == 0.0 {
            continue;
        }
        match delay {
            Delay::Finite(d) => f += weight * d,
            Delay::Unreachable => return Delay::Unreachable,
        }
    }
    let denom = 1.0 - b * (1.0 - alpha * l.p_dc_s_dc);
    if denom <= 0.0 {
        return Delay::Unreachable;
    }
    Delay::Finite((1.0 + (1.0 - b) * f) / denom)
}

/// Mean delay `D` from request to reception; the unstable variant uses `P(Q ≠ 0) = 1`.
pub fn delay_total(p: &ScenarioParams, regime: Regime) -> Result<Delay> {
    Ok(delay_for_busy_prob(p, busy_prob_in(p, regime)?))
}

/// Everything the analysis yields for one operating point, in its natural regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisReport {
    pub service_rate: f64,
    pub stable: bool,
    pub queue_busy_prob: f64,
    pub throughput_s: f64,
    pub throughput_u: f64,
    pub weighted_sum: f64,
    pub delay_total: Delay,
    pub delay_helper_state: Delay,
    pub delay_dc_state: Delay,
}

impl AnalysisReport {
    pub fn regime(&self) -> Regime {
        if self.stable {
            Regime::Stable
        } else {
            Regime::Unstable
        }
    }
}

pub fn analyze(p: &ScenarioParams, weight: f64) -> Result<AnalysisReport> {
    p.validate()?;
    let regime = regime(p);
    let busy = busy_prob_in(p, regime)?;
    let throughput_u = match regime {
        Regime::Stable => throughput_u_stable(p)?,
        Regime::Unstable => throughput_u_unstable(p),
    };
    Ok(AnalysisReport {
        service_rate: service_rate(p),
        stable: regime == Regime::Stable,
        queue_busy_prob: busy,
        throughput_s: throughput_s(p),
        throughput_u,
        weighted_sum: weighted_sum_throughput(p, weight, regime)?,
        delay_total: delay_for_busy_prob(p, busy),
        delay_helper_state: delay_helper_state(p, busy),
        delay_dc_state: delay_dc_state(p, busy),
    })
}

//! Slot-level Monte Carlo engine of the helper/user protocol.
//!
//! Each slot runs the same fixed sequence:
//!
//! 1. a packet arrives at S with probability λ; it joins the queue at the end
//!    of the slot, so it can be served no earlier than the next slot;
//! 2. if its queue is non-empty, S transmits to D with probability `q_S`;
//! 3. U's request (if any) goes to DC while S transmits; otherwise it goes to
//!    S with probability `q_C`, and on a cache miss it is redirected to DC in
//!    the same slot;
//! 4. DC is available with probability α whenever it is addressed;
//! 5. every active link succeeds independently with the success probability
//!    of the current transmitter set;
//! 6. a delivered packet leaves the queue and U's state is updated.
//!
//! Two request models are offered. In the memoryless model a fresh request
//! is drawn every slot and dropped at the end of it whatever the outcome;
//! this is the model behind the throughput formulas. In the persistent model
//! a request is drawn only while U is idle and is retried until delivered;
//! this is the model behind the delay formulas. A persistent request learns
//! at creation whether its file is cached at the helper, and keeps that for
//! its whole lifetime.
//!
//! Replication `r` draws from stream `r` of a ChaCha8 generator keyed by the
//! master seed, so any replication can be rerun on its own.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::ScenarioParams;
use crate::error::{ModelError, Result};
use crate::exec::Execution;
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RequestModel {
    Memoryless,
    Persistent,
}

impl fmt::Display for RequestModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestModel::Memoryless => f.write_str("memoryless"),
            RequestModel::Persistent => f.write_str("persistent"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: ScenarioParams,
    /// Slots per replication, warmup included.
    pub num_slots: u64,
    pub num_replications: usize,
    /// Leading slots excluded from every statistic.
    pub warmup_slots: u64,
    pub seed: u64,
    pub request_model: RequestModel,
}

impl SimConfig {
    /// Configuration with the default warmup of 10% of `num_slots`.
    pub fn new(
        params: ScenarioParams,
        num_slots: u64,
        num_replications: usize,
        seed: u64,
        request_model: RequestModel,
    ) -> Self {
        Self {
            params,
            num_slots,
            num_replications,
            warmup_slots: num_slots / 10,
            seed,
            request_model,
        }
    }

    /// Sizes the run so that `measured_slots` remain after a 10% warmup.
    pub fn with_measured_slots(
        params: ScenarioParams,
        measured_slots: u64,
        num_replications: usize,
        seed: u64,
        request_model: RequestModel,
    ) -> Self {
        let warmup = measured_slots / 9;
        Self {
            params,
            num_slots: measured_slots + warmup,
            num_replications,
            warmup_slots: warmup,
            seed,
            request_model,
        }
    }

    pub fn measured_slots(&self) -> u64 {
        self.num_slots - self.warmup_slots
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.num_slots <= self.warmup_slots {
            return Err(ModelError::Domain(format!(
                "num_slots ({}) must exceed warmup_slots ({})",
                self.num_slots, self.warmup_slots
            )));
        }
        if self.num_replications == 0 {
            return Err(ModelError::Domain("at least one replication is required".into()));
        }
        Ok(())
    }
}

/// Where an outstanding persistent request stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserState {
    Idle,
    /// Created and not yet attempted with the helper available.
    Fresh,
    /// The file is cached at the helper and an attempt failed.
    RetryFromHelper,
    /// The file is not cached at the helper and the DC attempt failed.
    RetryFromDc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotState {
    pub queue_len: u64,
    pub user_state: UserState,
    pub pending_file_cached_at_helper: bool,
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotEvents {
    pub slot: u64,
    /// Queue length when S took its decision.
    pub queue_len: u64,
    pub arrival: bool,
    pub user_request: bool,
    pub s_to_d: bool,
    pub s_to_u: bool,
    pub dc_to_u: bool,
    pub d_received: bool,
    pub u_received: bool,
    /// Slots from creation to reception of the request delivered in this slot.
    pub completed_delay: Option<u64>,
}

impl fmt::Display for SlotEvents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} q={}", self.slot, self.queue_len)?;
        let flags = [
            (self.arrival, " arrival"),
            (self.user_request, " request"),
            (self.s_to_d, " S->D"),
            (self.s_to_u, " S->U"),
            (self.dc_to_u, " DC->U"),
            (self.d_received, " D-ok"),
            (self.u_received, " U-ok"),
        ];
        for (set, label) in flags {
            if set {
                f.write_str(label)?;
            }
        }
        if let Some(d) = self.completed_delay {
            write!(f, " delay={d}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    Nobody,
    Helper,
    DataCenter,
}

/// One replication's state machine.
#[derive(Debug, Clone)]
pub struct Engine {
    params: ScenarioParams,
    model: RequestModel,
    saturated: bool,
    rng: ChaCha8Rng,
    state: SlotState,
    slot: u64,
    request_created: u64,
    arrivals: u64,
    departures: u64,
}

impl Engine {
    pub fn new(config: &SimConfig, replication: u64, saturated: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(replication);
        Self {
            params: config.params,
            model: config.request_model,
            saturated,
            rng,
            state: SlotState {
                queue_len: 0,
                user_state: UserState::Idle,
                pending_file_cached_at_helper: false,
            },
            slot: 0,
            request_created: 0,
            arrivals: 0,
            departures: 0,
        }
    }

    pub fn state(&self) -> SlotState {
        self.state
    }

    /// Packets that joined the queue so far.
    pub fn arrivals(&self) -> u64 {
        self.arrivals
    }

    /// Packets delivered to D so far.
    pub fn departures(&self) -> u64 {
        self.departures
    }

    pub fn step(&mut self) -> SlotEvents {
        let p = self.params;
        let links = p.links;
        let mut ev = SlotEvents {
            slot: self.slot,
            queue_len: self.state.queue_len,
            ..SlotEvents::default()
        };

        ev.arrival = !self.saturated && self.rng.random_bool(p.arrival_rate);
        let backlogged = self.saturated || self.state.queue_len > 0;
        ev.s_to_d = backlogged && self.rng.random_bool(p.tx_prob);

        let target = match self.model {
            RequestModel::Memoryless => {
                ev.user_request = self.rng.random_bool(p.external_request_prob);
                if !ev.user_request {
                    Target::Nobody
                } else if ev.s_to_d || !self.rng.random_bool(p.helper_assist_prob) {
                    Target::DataCenter
                } else if self.rng.random_bool(p.helper_hit_prob) {
                    Target::Helper
                } else {
                    Target::DataCenter
                }
            }
            RequestModel::Persistent => {
                if self.state.user_state == UserState::Idle && self.rng.random_bool(p.external_request_prob) {
                    self.state.user_state = UserState::Fresh;
                    self.state.pending_file_cached_at_helper = self.rng.random_bool(p.helper_hit_prob);
                    self.request_created = self.slot;
                    ev.user_request = true;
                }
                let cached = self.state.pending_file_cached_at_helper;
                match self.state.user_state {
                    UserState::Idle => Target::Nobody,
                    _ if ev.s_to_d => Target::DataCenter,
                    UserState::RetryFromDc => Target::DataCenter,
                    UserState::Fresh | UserState::RetryFromHelper => {
                        if self.rng.random_bool(p.helper_assist_prob) && cached {
                            Target::Helper
                        } else {
                            Target::DataCenter
                        }
                    }
                }
            }
        };

        ev.s_to_u = target == Target::Helper;
        ev.dc_to_u = target == Target::DataCenter && self.rng.random_bool(p.dc_availability);

        if ev.s_to_d {
            let link = if ev.dc_to_u { links.p_sd_s_dc } else { links.p_sd_s };
            ev.d_received = self.rng.random_bool(link);
        }
        if ev.s_to_u {
            let link = match self.model {
                RequestModel::Memoryless => links.p_su_s,
                RequestModel::Persistent => p.helper_delivery_link(),
            };
            ev.u_received = self.rng.random_bool(link);
        } else if ev.dc_to_u {
            let link = if ev.s_to_d { links.p_dc_s_dc } else { links.p_dc_dc };
            ev.u_received = self.rng.random_bool(link);
        }

        if ev.d_received && !self.saturated {
            self.state.queue_len -= 1;
        }
        if ev.d_received {
            self.departures += 1;
        }
        if ev.arrival {
            self.state.queue_len += 1;
            self.arrivals += 1;
        }

        if self.model == RequestModel::Persistent && self.state.user_state != UserState::Idle {
            if ev.u_received {
                ev.completed_delay = Some(self.slot - self.request_created + 1);
                self.state.user_state = UserState::Idle;
                self.state.pending_file_cached_at_helper = false;
            } else if !ev.s_to_d && self.state.user_state == UserState::Fresh {
                self.state.user_state = if self.state.pending_file_cached_at_helper {
                    UserState::RetryFromHelper
                } else {
                    UserState::RetryFromDc
                };
            }
        }

        self.slot += 1;
        ev
    }
}

/// Counters of one replication; rates use post-warmup slots only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReplicationStats {
    pub measured_slots: u64,
    pub departures: u64,
    pub deliveries: u64,
    pub busy_slots: u64,
    pub delay_sum: u64,
    pub completed_requests: u64,
    /// Whole-run totals, warmup included.
    pub total_arrivals: u64,
    pub total_departures: u64,
    pub final_queue_len: u64,
}

impl ReplicationStats {
    pub fn throughput_s(&self) -> f64 {
        self.departures as f64 / self.measured_slots as f64
    }

    pub fn throughput_u(&self) -> f64 {
        self.deliveries as f64 / self.measured_slots as f64
    }

    pub fn busy_fraction(&self) -> f64 {
        self.busy_slots as f64 / self.measured_slots as f64
    }

    pub fn mean_delay(&self) -> Option<f64> {
        (self.completed_requests > 0).then(|| self.delay_sum as f64 / self.completed_requests as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub empirical_ts: Estimate,
    pub empirical_tu: Estimate,
    /// Persistent model only.
    pub mean_delay: Option<Estimate>,
    pub busy_fraction: Estimate,
    pub replications: Vec<ReplicationStats>,
}

impl SimulationReport {
    fn from_replications(model: RequestModel, replications: Vec<ReplicationStats>) -> Self {
        let collect = |f: fn(&ReplicationStats) -> f64| -> Vec<f64> { replications.iter().map(f).collect() };
        let mean_delay = match model {
            RequestModel::Memoryless => None,
            RequestModel::Persistent => {
                let delays: Vec<f64> = replications.iter().filter_map(|r| r.mean_delay()).collect();
                Some(Estimate::from_samples(&delays))
            }
        };
        Self {
            empirical_ts: Estimate::from_samples(&collect(ReplicationStats::throughput_s)),
            empirical_tu: Estimate::from_samples(&collect(ReplicationStats::throughput_u)),
            mean_delay,
            busy_fraction: Estimate::from_samples(&collect(ReplicationStats::busy_fraction)),
            replications,
        }
    }

    /// Weighted sum `w T_S + (1 - w) T_U` with its cross-replication standard error.
    pub fn weighted_sum(&self, weight: f64) -> Estimate {
        let xs: Vec<f64> = self
            .replications
            .iter()
            .map(|r| weight * r.throughput_s() + (1.0 - weight) * r.throughput_u())
            .collect();
        Estimate::from_samples(&xs)
    }
}

pub fn run_replication(config: &SimConfig, replication: u64, saturated: bool) -> ReplicationStats {
    let mut engine = Engine::new(config, replication, saturated);
    let mut stats = ReplicationStats {
        measured_slots: config.measured_slots(),
        ..ReplicationStats::default()
    };
    for _ in 0..config.num_slots {
        let measured = engine.slot >= config.warmup_slots;
        let ev = engine.step();
        if !measured {
            continue;
        }
        if ev.queue_len > 0 || saturated {
            stats.busy_slots += 1;
        }
        stats.departures += ev.d_received as u64;
        stats.deliveries += ev.u_received as u64;
        if let Some(delay) = ev.completed_delay {
            let created = ev.slot + 1 - delay;
            if created >= config.warmup_slots {
                stats.delay_sum += delay;
                stats.completed_requests += 1;
            }
        }
    }
    stats.total_arrivals = engine.arrivals;
    stats.total_departures = engine.departures;
    stats.final_queue_len = engine.state.queue_len;
    stats
}

/// Runs `config.num_replications` independent replications of the engine.
pub fn simulate(config: &SimConfig) -> Result<SimulationReport> {
    simulate_with(config, Execution::default())
}

pub fn simulate_with(config: &SimConfig, exec: Execution) -> Result<SimulationReport> {
    run(config, false, exec)
}

/// Same engine with the helper queue pinned non-empty in every slot.
pub fn simulate_saturated(config: &SimConfig) -> Result<SimulationReport> {
    simulate_saturated_with(config, Execution::default())
}

pub fn simulate_saturated_with(config: &SimConfig, exec: Execution) -> Result<SimulationReport> {
    run(config, true, exec)
}

fn run(config: &SimConfig, saturated: bool, exec: Execution) -> Result<SimulationReport> {
    config.validate()?;
    let reps = exec.map_range(config.num_replications, |r| {
        run_replication(config, r as u64, saturated)
    });
    Ok(SimulationReport::from_replications(config.request_model, reps))
}

/// Fraction of measured slots in which S found its queue non-empty.
pub fn queue_busy_estimate(report: &SimulationReport) -> Estimate {
    report.busy_fraction
}

/// Writes one line per slot of a single replication, for debugging.
pub fn trace_replication<W: Write>(
    config: &SimConfig,
    replication: u64,
    saturated: bool,
    slots: u64,
    out: &mut W,
) -> io::Result<()> {
    let mut engine = Engine::new(config, replication, saturated);
    for _ in 0..slots {
        writeln!(out, "{}", engine.step())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{self, Regime};
    use crate::presets::{delay_study_scenario, reference_scenario};

    fn config(params: ScenarioParams, model: RequestModel) -> SimConfig {
        SimConfig::with_measured_slots(params, 50_000, 8, 7, model)
    }

    #[test]
    fn no_traffic_gives_zero_rates() {
        let p = ScenarioParams {
            arrival_rate: 0.0,
            external_request_prob: 0.0,
            ..reference_scenario().with_access(0.9, 0.5)
        };
        let r = simulate(&config(p, RequestModel::Memoryless)).unwrap();
        assert_eq!(r.empirical_ts.mean, 0.0);
        assert_eq!(r.empirical_tu.mean, 0.0);
        assert_eq!(queue_busy_estimate(&r).mean, 0.0);
    }

    #[test]
    fn saturated_helper_silent_when_it_never_transmits() {
        let p = reference_scenario().with_access(0.0, 1.0);
        let r = simulate_saturated(&config(p, RequestModel::Memoryless)).unwrap();
        assert_eq!(r.empirical_ts.mean, 0.0);
        assert_eq!(r.busy_fraction.mean, 1.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = ScenarioParams {
            arrival_rate: 0.2,
            ..reference_scenario().with_access(0.9, 0.5)
        };
        let c = config(p, RequestModel::Persistent);
        let a = simulate_with(&c, Execution::Sequential).unwrap();
        let b = simulate_with(&c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let other = simulate(&SimConfig { seed: 8, ..c }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn replication_is_independent_of_replication_count() {
        let p = ScenarioParams {
            arrival_rate: 0.2,
            ..reference_scenario().with_access(0.9, 0.5)
        };
        let c = config(p, RequestModel::Memoryless);
        let few = simulate(&SimConfig {
            num_replications: 2,
            ..c
        })
        .unwrap();
        let many = simulate(&c).unwrap();
        assert_eq!(few.replications[1], many.replications[1]);
    }

    #[test]
    fn queue_conservation() {
        let p = ScenarioParams {
            arrival_rate: 0.35,
            ..reference_scenario().with_access(0.8, 0.5)
        };
        let r = simulate(&config(p, RequestModel::Memoryless)).unwrap();
        for rep in &r.replications {
            assert_eq!(rep.total_arrivals - rep.total_departures, rep.final_queue_len);
        }
    }

    #[test]
    fn helper_never_serves_both_in_one_slot() {
        for model in [RequestModel::Memoryless, RequestModel::Persistent] {
            let p = ScenarioParams {
                arrival_rate: 0.3,
                ..reference_scenario().with_access(0.6, 0.9)
            };
            let mut engine = Engine::new(&config(p, model), 0, false);
            let mut helper_to_user = 0;
            for _ in 0..100_000 {
                let ev = engine.step();
                assert!(!(ev.s_to_d && ev.s_to_u), "slot {}", ev.slot);
                helper_to_user += ev.s_to_u as u32;
            }
            assert!(helper_to_user > 0);
        }
    }

    #[test]
    fn late_arrival_is_not_served_in_its_own_slot() {
        let p = ScenarioParams {
            arrival_rate: 1.0,
            links: crate::phy::LinkProbabilities::ideal(),
            ..reference_scenario().with_access(1.0, 0.0)
        };
        let mut engine = Engine::new(&config(p, RequestModel::Memoryless), 0, false);
        let first = engine.step();
        assert!(first.arrival && !first.s_to_d);
        assert_eq!(engine.state().queue_len, 1);
        let second = engine.step();
        assert!(second.s_to_d && second.d_received);
        assert_eq!(engine.state().queue_len, 1);
    }

    #[test]
    fn persistent_user_state_follows_protocol() {
        let p = ScenarioParams {
            arrival_rate: 0.3,
            ..delay_study_scenario()
        };
        let mut engine = Engine::new(&config(p, RequestModel::Persistent), 3, false);
        let mut previous = engine.state();
        for _ in 0..200_000 {
            let ev = engine.step();
            let now = engine.state();
            use UserState::*;
            let allowed = match (previous.user_state, now.user_state) {
                (_, Idle) => ev.u_received || (previous.user_state == Idle && !ev.user_request),
                (Idle, Fresh) => ev.user_request && ev.s_to_d,
                (Idle, RetryFromHelper) | (Fresh, RetryFromHelper) => now.pending_file_cached_at_helper && !ev.s_to_d,
                (Idle, RetryFromDc) | (Fresh, RetryFromDc) => !now.pending_file_cached_at_helper && !ev.s_to_d,
                (Fresh, Fresh) => ev.s_to_d,
                (RetryFromHelper, RetryFromHelper) | (RetryFromDc, RetryFromDc) => !ev.u_received,
                _ => false,
            };
            assert!(allowed, "{:?} -> {:?} on {}", previous.user_state, now.user_state, ev);
            previous = now;
        }
    }

    #[test]
    fn trace_lines() {
        let p = ScenarioParams {
            arrival_rate: 0.3,
            ..delay_study_scenario()
        };
        let mut buf = Vec::new();
        trace_replication(&config(p, RequestModel::Persistent), 0, false, 25, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 25);
        assert!(text.starts_with("0 q=0"));
    }

    #[test]
    fn invalid_configs() {
        let p = reference_scenario();
        let mut c = SimConfig::new(p, 100, 2, 1, RequestModel::Memoryless);
        c.warmup_slots = 100;
        assert!(simulate(&c).is_err());
        c.warmup_slots = 0;
        c.num_replications = 0;
        assert!(simulate(&c).is_err());
    }

    /// Service rate of the slot protocol: when DC is addressed but unavailable,
    /// S transmits alone and succeeds with the interference-free probability.
    fn protocol_service_rate(p: &ScenarioParams) -> f64 {
        let l = p.links;
        let q_u = p.external_request_prob;
        let a = p.dc_availability;
        p.tx_prob * ((1.0 - q_u) * l.p_sd_s + q_u * (a * l.p_sd_s_dc + (1.0 - a) * l.p_sd_s))
    }

    #[test]
    fn memoryless_rates_follow_protocol_service_rate() {
        let p = ScenarioParams {
            arrival_rate: 0.2,
            ..reference_scenario().with_access(0.9, 0.5)
        };
        let r = simulate(&config(p, RequestModel::Memoryless)).unwrap();
        let busy = 0.2 / protocol_service_rate(&p);
        assert!(r.busy_fraction.within(busy, 4.0), "{:?} vs {busy}", r.busy_fraction);
        let tu = analysis::throughput_u_general(&p, busy);
        assert!(r.empirical_tu.within(tu, 4.0), "{:?} vs {tu}", r.empirical_tu);
        assert!(r.empirical_ts.within(0.2, 4.0));
    }

    #[test]
    fn overloaded_queue_serves_at_service_rate() {
        let p = ScenarioParams {
            arrival_rate: 0.9,
            ..reference_scenario().with_access(0.7, 0.5)
        };
        let c = config(p, RequestModel::Memoryless);
        let r = simulate(&c).unwrap();
        let mu = protocol_service_rate(&p);
        assert!(r.empirical_ts.within(mu, 4.0), "{:?} vs {mu}", r.empirical_ts);
        let sat = simulate_saturated(&c).unwrap();
        assert!(sat.empirical_ts.within(mu, 4.0), "{:?} vs {mu}", sat.empirical_ts);
    }

    #[test]
    fn nearly_critical_queue_is_mostly_busy() {
        let mut p = reference_scenario().with_access(0.9, 0.5);
        p.arrival_rate = 0.95 * protocol_service_rate(&p);
        let r = simulate(&SimConfig::with_measured_slots(
            p,
            200_000,
            8,
            11,
            RequestModel::Memoryless,
        ))
        .unwrap();
        assert!(r.busy_fraction.mean > 0.9, "{:?}", r.busy_fraction);
    }

    #[test]
    fn saturated_persistent_delay_close_to_analysis() {
        let p = ScenarioParams {
            helper_retry_uses_su_link: true,
            ..delay_study_scenario()
        };
        let r = simulate_saturated(&config(p, RequestModel::Persistent)).unwrap();
        let d = analysis::delay_total(&p, Regime::Unstable).unwrap().as_f64();
        let est = r.mean_delay.unwrap();
        assert!(est.within(d, 4.0), "{est:?} vs {d}");
    }
}

//! Cross-module properties through the public API.

use edgecache::analysis::{self, Regime, ScenarioParams};
use edgecache::optimizer;
use edgecache::presets;
use edgecache::simulator::{self, Engine, RequestModel, SimConfig};
use edgecache::{Execution, Geometry, LinkProbabilities};
use proptest::prelude::*;

fn arb_links() -> impl Strategy<Value = LinkProbabilities> {
    (0.05f64..1.0, 0.0f64..=1.0, 0.05f64..1.0, 0.05f64..1.0, 0.0f64..=1.0).prop_map(|(sd, f1, su, dc, f2)| {
        LinkProbabilities {
            p_sd_s: sd,
            p_sd_s_dc: sd * f1,
            p_su_s: su,
            p_dc_dc: dc,
            p_dc_s_dc: dc * f2,
        }
    })
}

fn arb_params() -> impl Strategy<Value = ScenarioParams> {
    (
        0.0f64..=0.6,
        0.0f64..=1.0,
        0.0f64..=1.0,
        0.0f64..=1.0,
        0.0f64..=1.0,
        0.0f64..=1.0,
        arb_links(),
        any::<bool>(),
    )
        .prop_map(|(lambda, q_s, q_u, q_c, p_h, alpha, links, su)| ScenarioParams {
            arrival_rate: lambda,
            tx_prob: q_s,
            external_request_prob: q_u,
            helper_assist_prob: q_c,
            helper_hit_prob: p_h,
            dc_availability: alpha,
            links,
            helper_retry_uses_su_link: su,
        })
}

fn arb_model() -> impl Strategy<Value = RequestModel> {
    prop_oneof![Just(RequestModel::Memoryless), Just(RequestModel::Persistent)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn execution_paths_agree(p in arb_params(), seed in any::<u64>(), model in arb_model(), saturated in any::<bool>()) {
        let config = SimConfig::new(p, 600, 3, seed, model);
        let run = |exec| if saturated {
            simulator::simulate_saturated_with(&config, exec)
        } else {
            simulator::simulate_with(&config, exec)
        }
        .unwrap();
        // Debug text so that an undefined (NaN) mean delay compares equal to itself
        prop_assert_eq!(format!("{:?}", run(Execution::Sequential)), format!("{:?}", run(Execution::Parallel)));
    }

    #[test]
    fn replications_conserve_packets(p in arb_params(), seed in any::<u64>(), model in arb_model()) {
        let config = SimConfig::new(p, 800, 2, seed, model);
        for r in simulator::simulate(&config).unwrap().replications {
            prop_assert_eq!(r.total_arrivals - r.total_departures, r.final_queue_len);
            prop_assert!(r.departures <= r.measured_slots);
            prop_assert!(r.deliveries <= r.measured_slots);
            prop_assert!(r.busy_slots <= r.measured_slots);
            prop_assert!(r.departures <= r.busy_slots);
        }
    }

    #[test]
    fn slot_events_are_consistent(p in arb_params(), seed in any::<u64>(), model in arb_model()) {
        let config = SimConfig::new(p, 300, 1, seed, model);
        let mut engine = Engine::new(&config, 0, false);
        for _ in 0..300 {
            let before = engine.state().queue_len;
            let ev = engine.step();
            prop_assert_eq!(ev.queue_len, before);
            prop_assert!(!(ev.s_to_d && ev.s_to_u), "helper serves one receiver per slot");
            prop_assert!(!ev.s_to_d || before > 0, "S only sends from a backlog");
            prop_assert!(!ev.d_received || ev.s_to_d);
            prop_assert!(!ev.u_received || ev.s_to_u || ev.dc_to_u);
            prop_assert!(!(ev.s_to_u && ev.dc_to_u));
            let after = before + u64::from(ev.arrival) - u64::from(ev.d_received);
            prop_assert_eq!(engine.state().queue_len, after);
            if let Some(d) = ev.completed_delay {
                prop_assert!(ev.u_received && d >= 1);
            }
        }
    }

    #[test]
    fn saturated_optimum_dominates_every_access_point(
        p in arb_params(),
        w in 0.0f64..=1.0,
        q_s in 0.0f64..=1.0,
        q_c in 0.0f64..=1.0,
    ) {
        let best = optimizer::optimize_unstable(&p, w).unwrap();
        let at = analysis::weighted_sum_throughput(&p.with_access(q_s, q_c), w, Regime::Unstable).unwrap();
        prop_assert!(best.best_value >= at - 1e-12, "{} < {}", best.best_value, at);
    }

    #[test]
    fn stable_optimum_dominates_feasible_points(
        p in arb_params(),
        w in 0.0f64..=1.0,
        q_s in 0.0f64..=1.0,
        q_c in 0.0f64..=1.0,
        load in 0.0f64..0.999,
    ) {
        // place lambda inside the stability region of (q_s, q_c)
        let mut at = p.with_access(q_s, q_c);
        at.arrival_rate = load * analysis::service_rate(&at);
        let p = ScenarioParams { arrival_rate: at.arrival_rate, ..p };
        prop_assume!(analysis::is_stable(&at));
        let best = optimizer::optimize_stable(&p, w).unwrap();
        let value = analysis::weighted_sum_throughput(&at, w, Regime::Stable).unwrap();
        prop_assert!(best.best_value >= value - 1e-12, "{} < {}", best.best_value, value);
        prop_assert!(analysis::is_stable(&p.with_access(1.0, best.best_q_c)));
    }

    #[test]
    fn farther_receivers_never_improve_links(scale in 1.0f64..3.0) {
        let near = presets::reference_geometry();
        let far = Geometry { r_sd: near.r_sd * scale, r_su: near.r_su * scale, ..near };
        let (a, b) = (near.link_probabilities().unwrap(), far.link_probabilities().unwrap());
        prop_assert!(b.p_sd_s <= a.p_sd_s && b.p_su_s <= a.p_su_s);
        prop_assert!(b.p_sd_s_dc <= a.p_sd_s_dc);
    }
}

#[test]
fn reference_pipeline_feeds_the_optimizer() {
    let p = presets::reference_scenario();
    let links = presets::reference_geometry().link_probabilities().unwrap();
    assert_eq!(p.links, links);
    let r = optimizer::optimize_stable(&p, 0.5).unwrap();
    assert!((r.best_q_s - p.arrival_rate / analysis::max_service_rate(&p)).abs() < 1e-12);
}

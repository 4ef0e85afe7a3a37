//! The `analyze`, `optimize` and `simulate` verbs over an optional sweep.
//!
//! Every table starts with the input columns
//! `[user_capacity,] lambda, q_s, q_u, q_c, p_h, alpha, weight, p_sd_s,
//! p_sd_s_dc, p_su_s, p_dc_dc, p_dc_s_dc, helper_retry_uses_su_link`
//! followed by the verb's output columns. Rows follow the sweep order.

use std::io::Write;

use edgecache::analysis::{self, Regime, ScenarioParams};
use edgecache::optimizer;
use edgecache::simulator::{self, RequestModel};
use edgecache::{Estimate, Execution, ModelError};

use crate::config::{Experiment, RegimeChoice, SweepAxis};
use crate::error::CliError;
use crate::table::{self, num, Table};

const INPUT_COLUMNS: [&str; 13] = [
    "lambda",
    "q_s",
    "q_u",
    "q_c",
    "p_h",
    "alpha",
    "weight",
    "p_sd_s",
    "p_sd_s_dc",
    "p_su_s",
    "p_dc_dc",
    "p_dc_s_dc",
    "helper_retry_uses_su_link",
];

pub const ANALYZE_COLUMNS: [&str; 10] = [
    "regime",
    "service_rate",
    "queue_busy_prob",
    "throughput_s",
    "throughput_u",
    "weighted_sum",
    "delay_total",
    "delay_helper_state",
    "delay_dc_state",
    "max_stable_lambda",
];

pub const OPTIMIZE_COLUMNS: [&str; 9] = [
    "regime",
    "q_s_opt",
    "q_c_opt",
    "max_weighted_sum",
    "tie",
    "interior",
    "candidates",
    "grid_max",
    "grid_gap",
];

pub const SIMULATE_COLUMNS: [&str; 26] = [
    "model",
    "saturated",
    "regime",
    "replications",
    "measured_slots",
    "seed",
    "sim_throughput_s",
    "se_throughput_s",
    "throughput_s",
    "z_throughput_s",
    "sim_throughput_u",
    "se_throughput_u",
    "throughput_u",
    "z_throughput_u",
    "sim_busy",
    "se_busy",
    "queue_busy_prob",
    "z_busy",
    "sim_delay",
    "se_delay",
    "delay_total",
    "z_delay",
    "sim_weighted_sum",
    "se_weighted_sum",
    "weighted_sum",
    "z_weighted_sum",
];

fn headers(exp: &Experiment, outputs: &[&str]) -> Vec<String> {
    let mut h = Vec::new();
    if matches!(&exp.sweep, Some(s) if s.axis == SweepAxis::UserCapacity) {
        h.push("user_capacity".to_string());
    }
    h.extend(INPUT_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(outputs.iter().map(|s| s.to_string()));
    h
}

fn input_cells(exp: &Experiment, axis_value: Option<f64>, p: &ScenarioParams, weight: f64) -> Vec<String> {
    let mut row = Vec::new();
    if matches!(&exp.sweep, Some(s) if s.axis == SweepAxis::UserCapacity) {
        row.push(num(axis_value.expect("swept point")));
    }
    let l = p.links;
    row.extend(
        [
            p.arrival_rate,
            p.tx_prob,
            p.external_request_prob,
            p.helper_assist_prob,
            p.helper_hit_prob,
            p.dc_availability,
            weight,
            l.p_sd_s,
            l.p_sd_s_dc,
            l.p_su_s,
            l.p_dc_dc,
            l.p_dc_s_dc,
        ]
        .map(num),
    );
    row.push(table::flag(p.helper_retry_uses_su_link));
    row
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Infeasible { .. } | ModelError::Regime { .. } => CliError::Infeasible(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

/// Evaluates every sweep point concurrently and keeps the sweep order.
fn run_rows<F>(exp: &Experiment, outputs: &[&str], eval: F) -> Result<Table, CliError>
where
    F: Fn(&ScenarioParams, f64) -> Result<Vec<String>, CliError> + Sync,
{
    let points = exp.points()?;
    let rows = Execution::default().map_slice(&points, |(axis, p, w)| {
        eval(p, *w).map(|out| {
            let mut row = input_cells(exp, *axis, p, *w);
            row.extend(out);
            row
        })
    });
    let mut t = Table::new(&headers(exp, outputs));
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

pub fn analyze(exp: &Experiment) -> Result<Table, CliError> {
    run_rows(exp, &ANALYZE_COLUMNS, |p, w| {
        let r = analysis::analyze(p, w).map_err(model_error)?;
        Ok(vec![
            r.regime().to_string(),
            num(r.service_rate),
            num(r.queue_busy_prob),
            num(r.throughput_s),
            num(r.throughput_u),
            num(r.weighted_sum),
            table::delay(r.delay_total),
            table::delay(r.delay_helper_state),
            table::delay(r.delay_dc_state),
            num(analysis::max_service_rate(p)),
        ])
    })
}

fn optimization_regime(choice: RegimeChoice, p: &ScenarioParams) -> Regime {
    match choice {
        RegimeChoice::Stable => Regime::Stable,
        RegimeChoice::Unstable => Regime::Unstable,
        RegimeChoice::Auto => {
            if p.arrival_rate < analysis::max_service_rate(p) {
                Regime::Stable
            } else {
                Regime::Unstable
            }
        }
    }
}

pub fn optimize(exp: &Experiment) -> Result<Table, CliError> {
    run_rows(exp, &OPTIMIZE_COLUMNS, |p, w| {
        let regime = optimization_regime(exp.regime, p);
        let r = match regime {
            Regime::Stable => optimizer::optimize_stable(p, w),
            Regime::Unstable => optimizer::optimize_unstable(p, w),
        }
        .map_err(model_error)?;
        let (grid_max, grid_gap) = if exp.grid_step > 0.0 {
            // the sweep is already parallel; keep the inner grid sequential
            let g = optimizer::grid_oracle(p, w, regime, exp.grid_step, Execution::Sequential).map_err(model_error)?;
            (num(g.best_value), num(r.best_value - g.best_value))
        } else {
            (String::new(), String::new())
        };
        Ok(vec![
            regime.to_string(),
            num(r.best_q_s),
            num(r.best_q_c),
            num(r.best_value),
            table::flag(r.tie),
            table::flag(r.interior),
            r.candidates_evaluated.to_string(),
            grid_max,
            grid_gap,
        ])
    })
}

fn estimate_cells(est: Estimate, expected: Option<f64>) -> [String; 4] {
    match expected {
        Some(e) => [num(est.mean), num(est.std_err), num(e), num(est.z_score(e))],
        None => [num(est.mean), num(est.std_err), String::new(), String::new()],
    }
}

/// Simulated statistics next to their analytical counterparts.
///
/// User throughput and busy fraction are compared only for the memoryless
/// request model, and the delay only for the persistent one, because each
/// formula describes that model.
pub fn simulate(exp: &Experiment) -> Result<Table, CliError> {
    let s = exp.simulation;
    run_rows(exp, &SIMULATE_COLUMNS, |p, w| {
        let config = s.config(*p);
        let report = if s.saturated {
            simulator::simulate_saturated_with(&config, Execution::Sequential)
        } else {
            simulator::simulate_with(&config, Execution::Sequential)
        }
        .map_err(model_error)?;
        let regime = if s.saturated {
            Regime::Unstable
        } else {
            analysis::regime(p)
        };
        let busy = analysis::busy_prob_in(p, regime).map_err(model_error)?;
        let memoryless = s.model == RequestModel::Memoryless;
        let ts = if s.saturated {
            analysis::service_rate(p)
        } else {
            analysis::throughput_s(p)
        };
        let tu = analysis::throughput_u_general(p, busy);
        let delay = analysis::delay_for_busy_prob(p, busy).value();

        let mut row = vec![
            s.model.to_string(),
            table::flag(s.saturated),
            regime.to_string(),
            s.replications.to_string(),
            config.measured_slots().to_string(),
            s.seed.to_string(),
        ];
        row.extend(estimate_cells(report.empirical_ts, Some(ts)));
        row.extend(estimate_cells(report.empirical_tu, memoryless.then_some(tu)));
        row.extend(estimate_cells(report.busy_fraction, memoryless.then_some(busy)));
        match report.mean_delay {
            Some(d) => {
                let cells = estimate_cells(d, delay);
                row.extend(cells);
                if delay.is_none() {
                    let n = row.len();
                    row[n - 2] = "unreachable".into();
                }
            }
            None => row.extend([String::new(), String::new(), String::new(), String::new()]),
        }
        row.extend(estimate_cells(
            report.weighted_sum(w),
            memoryless.then_some(w * ts + (1.0 - w) * tu),
        ));
        Ok(row)
    })
}

/// Per-slot trace of the first replication at the first sweep point.
pub fn trace<W: Write>(exp: &Experiment, slots: u64, out: &mut W) -> Result<(), CliError> {
    let (_, p, _) = exp.points()?[0];
    let config = exp.simulation.config(p);
    simulator::trace_replication(&config, 0, exp.simulation.saturated, slots, out)?;
    Ok(())
}

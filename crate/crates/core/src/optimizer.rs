//! Weighted sum throughput maximisation over `(q_S, q_C)`.
//!
//! With a stable queue the objective `w λ + (1 - w) T_U` is affine in `q_C`
//! and independent of `q_S` inside the stability interval, so the optimum is a
//! `q_C` endpoint. With a saturated queue the objective is bilinear,
//! `f = q_C (1 - q_S) B1 + q_S B2 + const`, and is maximised over the
//! candidate set `{0, 1/2, 1}²`. [`grid_oracle`] checks both by exhaustive
//! evaluation.

use crate::analysis::{self, Regime, ScenarioParams};
use crate::error::{check_probability, ModelError, Result};
use crate::exec::Execution;

const TIE_TOLERANCE: f64 = 1e-12;

/// Default spacing of the verification grid.
pub const DEFAULT_GRID_STEP: f64 = 1.0 / 200.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationResult {
    pub best_q_s: f64,
    pub best_q_c: f64,
    pub best_value: f64,
    pub regime: Regime,
    pub candidates_evaluated: usize,
    /// Another `q_C` attains the optimum within 1e-12 at the reported `q_S`.
    pub tie: bool,
    /// The reported maximiser has a coordinate equal to 1/2.
    pub interior: bool,
}

/// Coefficients of the saturated objective `q_C (1 - q_S) B1 + q_S B2 + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearForm {
    pub b1: f64,
    pub b2: f64,
    pub constant: f64,
}

impl BilinearForm {
    pub fn new(base: &ScenarioParams, weight: f64) -> Self {
        let l = &base.links;
        let a = base.dc_availability;
        let q_u = base.external_request_prob;
        let v = 1.0 - weight;
        Self {
            b1: v * q_u * base.helper_hit_prob * (l.p_su_s - a * l.p_dc_dc),
            b2: a * q_u * v * (l.p_dc_s_dc - l.p_dc_dc)
                + weight * (1.0 - q_u) * l.p_sd_s
                + weight * a * q_u * l.p_sd_s_dc,
            constant: v * q_u * a * l.p_dc_dc,
        }
    }

    pub fn evaluate(&self, q_s: f64, q_c: f64) -> f64 {
        q_c * (1.0 - q_s) * self.b1 + q_s * self.b2 + self.constant
    }
}

/// Maximises `w λ + (1 - w) T_U` subject to a stable helper queue.
///
/// Any `q_S` in the stability interval is optimal; the reported `q_S*` is the
/// interval's left end `λ / μ(q_S = 1)`. Ties in `q_C` resolve to 0 and set `tie`.
pub fn optimize_stable(base: &ScenarioParams, weight: f64) -> Result<OptimizationResult> {
    base.validate()?;
    check_probability("weight", weight)?;
    let per_attempt = analysis::max_service_rate(base);
    let lambda = base.arrival_rate;
    if lambda >= per_attempt {
        return Err(ModelError::Infeasible {
            arrival_rate: lambda,
            max_arrival_rate: per_attempt,
        });
    }
    let l = &base.links;
    let slope = (1.0 - weight) * (per_attempt - lambda) / per_attempt
        * base.external_request_prob
        * base.helper_hit_prob
        * (l.p_su_s - base.dc_availability * l.p_dc_dc);
    let best_q_c = if slope > 0.0 { 1.0 } else { 0.0 };

    // objective does not depend on q_S; evaluate where the queue is surely stable
    let value = analysis::weighted_sum_throughput(&base.with_access(1.0, best_q_c), weight, Regime::Stable)?;
    Ok(OptimizationResult {
        best_q_s: lambda / per_attempt,
        best_q_c,
        best_value: value,
        regime: Regime::Stable,
        candidates_evaluated: 2,
        tie: slope == 0.0,
        interior: false,
    })
}

/// Values of `q_S` and `q_C` examined by [`optimize_unstable`].
pub const KKT_CANDIDATES: [f64; 3] = [0.0, 0.5, 1.0];

/// Maximises `w μ + (1 - w) T_U'` for a saturated helper over `{0, 1/2, 1}²`.
///
/// Ties go to the smaller `q_S`, then the smaller `q_C`.
pub fn optimize_unstable(base: &ScenarioParams, weight: f64) -> Result<OptimizationResult> {
    base.validate()?;
    check_probability("weight", weight)?;
    let mut evaluated = Vec::with_capacity(9);
    for &q_s in &KKT_CANDIDATES {
        for &q_c in &KKT_CANDIDATES {
            let f = analysis::weighted_sum_throughput(&base.with_access(q_s, q_c), weight, Regime::Unstable)?;
            evaluated.push((q_s, q_c, f));
        }
    }
    let (best_q_s, best_q_c, best_value) = pick_best(&evaluated);
    let tie = evaluated
        .iter()
        .any(|&(s, c, f)| s == best_q_s && c != best_q_c && (f - best_value).abs() <= TIE_TOLERANCE);
    Ok(OptimizationResult {
        best_q_s,
        best_q_c,
        best_value,
        regime: Regime::Unstable,
        candidates_evaluated: evaluated.len(),
        tie,
        interior: best_q_s == 0.5 || best_q_c == 0.5,
    })
}

/// First strict maximum in iteration order, which is `(q_S, q_C)` ascending.
fn pick_best(candidates: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.2 > best.2 {
            best = c;
        }
    }
    best
}

/// Grid points `0, step, 2 step, ..., 1`; 1 is always included.
pub fn grid_points(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(ModelError::InvalidParameter {
            name: "grid_step",
            value: step,
            reason: "must lie in (0, 0.5]",
        });
    }
    let inverse = step.recip();
    let n = inverse.round();
    let mut points: Vec<f64> = if (inverse - n).abs() < 1e-9 {
        let n = n as usize;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    } else {
        let k = (inverse + 1e-9).floor() as usize;
        (0..=k).map(|i| i as f64 * step).collect()
    };
    if *points.last().unwrap() < 1.0 {
        points.push(1.0);
    }
    Ok(points)
}

/// Exhaustive evaluation of the weighted objective on a `(q_S, q_C)` grid.
///
/// In the stable regime only grid values of `q_S` that keep the queue stable
/// are examined.
pub fn grid_oracle(
    base: &ScenarioParams,
    weight: f64,
    regime: Regime,
    step: f64,
    exec: Execution,
) -> Result<OptimizationResult> {
    base.validate()?;
    check_probability("weight", weight)?;
    let points = grid_points(step)?;
    let rows: Vec<f64> = match regime {
        Regime::Stable => points
            .iter()
            .copied()
            .filter(|&q_s| analysis::is_stable(&base.with_access(q_s, 0.0)))
            .collect(),
        Regime::Unstable => points.clone(),
    };
    if rows.is_empty() {
        return Err(ModelError::Infeasible {
            arrival_rate: base.arrival_rate,
            max_arrival_rate: analysis::max_service_rate(base),
        });
    }

    let evaluate = |q_s: f64, q_c: f64| {
        analysis::weighted_sum_throughput(&base.with_access(q_s, q_c), weight, regime)
            .expect("grid rows satisfy the regime")
    };
    let row_best: Vec<(f64, f64, f64)> = exec.map_slice(&rows, |&q_s| {
        let row: Vec<(f64, f64, f64)> = points.iter().map(|&q_c| (q_s, q_c, evaluate(q_s, q_c))).collect();
        pick_best(&row)
    });
    let (best_q_s, best_q_c, best_value) = pick_best(&row_best);
    let tie = points
        .iter()
        .any(|&q_c| q_c != best_q_c && (evaluate(best_q_s, q_c) - best_value).abs() <= TIE_TOLERANCE);
    Ok(OptimizationResult {
        best_q_s,
        best_q_c,
        best_value,
        regime,
        candidates_evaluated: rows.len() * points.len(),
        tie,
        interior: best_q_s == 0.5 || best_q_c == 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::LinkProbabilities;
    use crate::presets::{cache_probabilities, reference_scenario};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn at_lambda(lambda: f64) -> ScenarioParams {
        ScenarioParams {
            arrival_rate: lambda,
            ..reference_scenario()
        }
    }

    #[test]
    fn stable_prefers_helper_on_reference_links() {
        for w in [0.0, 0.25, 0.5, 0.75] {
            let r = optimize_stable(&at_lambda(0.2), w).unwrap();
            assert_eq!(r.best_q_c, 1.0, "w = {w}");
            assert!(!r.tie);
        }
    }

    #[test]
    fn stable_minimum_tx_prob() {
        let r = optimize_stable(&at_lambda(0.3), 0.5).unwrap();
        assert_abs_diff_eq!(r.best_q_s, 0.628917, epsilon = 0.005);
        assert_abs_diff_eq!(
            r.best_q_s * analysis::max_service_rate(&at_lambda(0.3)),
            0.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn stable_pure_helper_weight_is_lambda() {
        let r = optimize_stable(&at_lambda(0.3), 1.0).unwrap();
        assert_eq!(r.best_value, 0.3);
        assert!(r.tie);
    }

    #[test]
    fn stable_infeasible_names_limit() {
        let err = optimize_stable(&at_lambda(0.6), 0.5).unwrap_err();
        match err {
            ModelError::Infeasible { max_arrival_rate, .. } => {
                assert_abs_diff_eq!(max_arrival_rate, 0.477, epsilon = 0.005)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stable_tie_when_helper_has_nothing_cached() {
        let base = ScenarioParams {
            helper_hit_prob: 0.0,
            ..at_lambda(0.4)
        };
        let r = optimize_stable(&base, 0.5).unwrap();
        assert!(r.tie);
        assert_eq!(r.best_q_c, 0.0);
    }

    #[test]
    fn stable_value_matches_objective_inside_interval() {
        let r = optimize_stable(&at_lambda(0.2), 0.25).unwrap();
        let inside = at_lambda(0.2).with_access((r.best_q_s + 1.0) / 2.0, r.best_q_c);
        let v = analysis::weighted_sum_throughput(&inside, 0.25, Regime::Stable).unwrap();
        assert_abs_diff_eq!(r.best_value, v, epsilon = 1e-12);
    }

    #[test]
    fn unstable_reference_optima() {
        let base = reference_scenario();
        let cases = [
            (0.25, 0.0, 1.0, 0.496229),
            (0.5, 1.0, 0.0, 0.350238),
            (0.75, 1.0, 0.0, 0.413624),
        ];
        for (w, q_s, q_c, value) in cases {
            let r = optimize_unstable(&base, w).unwrap();
            assert_eq!((r.best_q_s, r.best_q_c), (q_s, q_c), "w = {w}");
            assert_abs_diff_eq!(r.best_value, value, epsilon = 0.005);
            assert_eq!(r.candidates_evaluated, 9);
            assert!(!r.interior);
        }
    }

    #[test]
    fn unstable_small_user_cache_switches_to_helper() {
        let (q_u, p_h) = cache_probabilities(100);
        let base = ScenarioParams {
            external_request_prob: q_u,
            helper_hit_prob: p_h,
            ..reference_scenario()
        };
        let r = optimize_unstable(&base, 0.5).unwrap();
        assert_eq!((r.best_q_s, r.best_q_c), (0.0, 1.0));
    }

    #[test]
    fn full_helper_transmission_makes_q_c_irrelevant() {
        let r = optimize_unstable(&reference_scenario(), 0.75).unwrap();
        assert_eq!(r.best_q_s, 1.0);
        assert!(r.tie);
    }

    #[test]
    fn bilinear_form_matches_objective() {
        let base = reference_scenario();
        for w in [0.0, 0.3, 1.0] {
            let form = BilinearForm::new(&base, w);
            for q_s in [0.0, 0.2, 0.7, 1.0] {
                for q_c in [0.0, 0.45, 1.0] {
                    let direct =
                        analysis::weighted_sum_throughput(&base.with_access(q_s, q_c), w, Regime::Unstable).unwrap();
                    assert_abs_diff_eq!(form.evaluate(q_s, q_c), direct, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn grid_contains_candidates() {
        let pts = grid_points(DEFAULT_GRID_STEP).unwrap();
        assert_eq!(pts.len(), 201);
        for c in KKT_CANDIDATES {
            assert!(pts.contains(&c));
        }
        let odd = grid_points(0.3).unwrap();
        assert_eq!(odd.last(), Some(&1.0));
        assert!(grid_points(0.0).is_err());
        assert!(grid_points(0.6).is_err());
    }

    #[test]
    fn grid_agrees_with_candidates_on_reference() {
        let base = reference_scenario();
        let kkt = optimize_unstable(&base, 0.5).unwrap();
        let grid = grid_oracle(&base, 0.5, Regime::Unstable, DEFAULT_GRID_STEP, Execution::default()).unwrap();
        assert!((kkt.best_value - grid.best_value).abs() <= 1e-9);
        assert!(grid.best_value >= kkt.best_value - 1e-12);
        assert_eq!(grid.candidates_evaluated, 201 * 201);
    }

    #[test]
    fn stable_grid_is_flat_in_tx_prob() {
        let base = at_lambda(0.2);
        let grid = grid_oracle(&base, 0.25, Regime::Stable, DEFAULT_GRID_STEP, Execution::Sequential).unwrap();
        let best = optimize_stable(&base, 0.25).unwrap();
        assert_abs_diff_eq!(grid.best_value, best.best_value, epsilon = 1e-12);
        assert_eq!(grid.best_q_c, 1.0);
        let points = grid_points(DEFAULT_GRID_STEP).unwrap();
        let values: Vec<f64> = points
            .iter()
            .map(|&q_s| base.with_access(q_s, 1.0))
            .filter(analysis::is_stable)
            .map(|p| analysis::weighted_sum_throughput(&p, 0.25, Regime::Stable).unwrap())
            .collect();
        assert!(values.len() > 100);
        for v in values {
            assert_abs_diff_eq!(v, best.best_value, epsilon = 1e-12);
        }
    }

    #[test]
    fn stable_grid_without_feasible_rows() {
        let err = grid_oracle(&at_lambda(0.6), 0.5, Regime::Stable, 0.1, Execution::Sequential).unwrap_err();
        assert!(matches!(err, ModelError::Infeasible { .. }));
    }

    #[test]
    fn sequential_and_parallel_grids_agree() {
        let base = reference_scenario();
        let a = grid_oracle(&base, 0.4, Regime::Unstable, 0.01, Execution::Sequential).unwrap();
        let b = grid_oracle(&base, 0.4, Regime::Unstable, 0.01, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    prop_compose! {
        fn arb_base()(
            sd in 0.05f64..1.0, sdi in 0.0f64..1.0, su in 0.05f64..1.0,
            dc in 0.05f64..1.0, dci in 0.0f64..1.0,
            q_u in 0.01f64..1.0, p_h in 0.01f64..1.0, alpha in 0.0f64..1.0,
            load in 0.0f64..0.99,
        ) -> ScenarioParams {
            let mut p = ScenarioParams {
                arrival_rate: 0.0,
                tx_prob: 0.0,
                external_request_prob: q_u,
                helper_assist_prob: 0.0,
                helper_hit_prob: p_h,
                dc_availability: alpha,
                links: LinkProbabilities {
                    p_sd_s: sd, p_sd_s_dc: sd * sdi, p_su_s: su, p_dc_dc: dc, p_dc_s_dc: dc * dci,
                },
                helper_retry_uses_su_link: false,
            };
            p.arrival_rate = load * analysis::max_service_rate(&p);
            p
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stable_sign_rule(base in arb_base(), w in 0.0f64..0.99) {
            let l = base.links;
            let gap = l.p_su_s - base.dc_availability * l.p_dc_dc;
            prop_assume!(gap != 0.0);
            let r = optimize_stable(&base, w).unwrap();
            prop_assert_eq!(r.best_q_c, if gap > 0.0 { 1.0 } else { 0.0 });
        }

        #[test]
        fn stable_result_is_feasible(base in arb_base(), w in 0.0f64..1.0) {
            let r = optimize_stable(&base, w).unwrap();
            prop_assert!(base.arrival_rate <= r.best_q_s * analysis::max_service_rate(&base) + 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.best_q_s));
        }

        #[test]
        fn unstable_value_is_objective_at_argmax(base in arb_base(), w in 0.0f64..1.0) {
            let r = optimize_unstable(&base, w).unwrap();
            let f = analysis::weighted_sum_throughput(&base.with_access(r.best_q_s, r.best_q_c), w, Regime::Unstable).unwrap();
            prop_assert!((f - r.best_value).abs() <= 1e-12);
        }

        #[test]
        fn coarse_grid_never_beats_candidates(base in arb_base(), w in 0.0f64..1.0) {
            let kkt = optimize_unstable(&base, w).unwrap();
            let grid = grid_oracle(&base, w, Regime::Unstable, 0.05, Execution::Sequential).unwrap();
            prop_assert!((grid.best_value - kkt.best_value).abs() <= 1e-9);
        }
    }
}

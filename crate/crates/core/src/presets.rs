//! The reference deployment used throughout the numerical studies.
//!
//! Noise 1e-11 W at both receivers, 0 dB thresholds, path-loss exponent 4,
//! helper power 1 mW, data center power 10 mW, distances S-D 50 m, S-U 40 m,
//! DC-D 100 m, DC-U 80 m. Library of 10 000 files with Zipf shape 0.5, helper
//! cache 2000 files, user cache 200 files, MPC placement, DC availability 0.7.

use crate::analysis::ScenarioParams;
use crate::catalog::{self, CacheConfig, CachePolicy, ZipfCatalog};
use crate::phy::{db_to_linear, mw_to_watts, Geometry};

pub const LIBRARY_SIZE: u64 = 10_000;
pub const ZIPF_SHAPE: f64 = 0.5;
pub const HELPER_CAPACITY: u64 = 2000;
pub const USER_CAPACITY: u64 = 200;
pub const DC_AVAILABILITY: f64 = 0.7;

/// User cache sizes of the cache-capacity study.
pub const USER_CAPACITY_SWEEP: [u64; 6] = [100, 200, 400, 800, 1600, 2000];

pub fn reference_geometry() -> Geometry {
    Geometry {
        helper_power: mw_to_watts(1.0),
        dc_power: mw_to_watts(10.0),
        r_sd: 50.0,
        r_su: 40.0,
        r_dc_d: 100.0,
        r_dc_u: 80.0,
        pathloss_exponent: 4.0,
        noise_d: 1e-11,
        noise_u: 1e-11,
        threshold_d: db_to_linear(0.0),
        threshold_u: db_to_linear(0.0),
    }
}

pub fn reference_catalog() -> ZipfCatalog {
    ZipfCatalog::new(LIBRARY_SIZE, ZIPF_SHAPE).expect("reference catalog is valid")
}

pub fn reference_cache(user_capacity: u64) -> CacheConfig {
    CacheConfig::new(user_capacity, HELPER_CAPACITY, CachePolicy::Mpc)
}

/// `(q_U, p_h)` of the reference catalog for a given user cache size under MPC.
pub fn cache_probabilities(user_capacity: u64) -> (f64, f64) {
    let cat = reference_catalog();
    let cache = reference_cache(user_capacity);
    (
        catalog::external_request_prob(&cat, &cache).expect("valid cache"),
        catalog::helper_hit_prob(&cat, &cache).expect("valid cache"),
    )
}

/// Reference scenario with `q_U`, `p_h` derived exactly from the catalog.
///
/// `lambda`, `q_S` and `q_C` are left at zero; callers set what they study.
pub fn reference_scenario() -> ScenarioParams {
    let (q_u, p_h) = cache_probabilities(USER_CAPACITY);
    ScenarioParams {
        arrival_rate: 0.0,
        tx_prob: 0.0,
        external_request_prob: q_u,
        helper_assist_prob: 0.0,
        helper_hit_prob: p_h,
        dc_availability: DC_AVAILABILITY,
        links: reference_geometry()
            .link_probabilities()
            .expect("reference geometry is consistent"),
        helper_retry_uses_su_link: false,
    }
}

/// Setting of the delay studies: `q_C = 0.5`, `p_h = 0.31`, `q_U = 0.86`,
/// `q_S = 0.9`, `lambda = 0.2`, with the reference links and availability.
pub fn delay_study_scenario() -> ScenarioParams {
    ScenarioParams {
        arrival_rate: 0.2,
        tx_prob: 0.9,
        external_request_prob: 0.86,
        helper_assist_prob: 0.5,
        helper_hit_prob: 0.31,
        ..reference_scenario()
    }
}

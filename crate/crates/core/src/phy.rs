//! Link success probabilities under Rayleigh fading.
//!
//! With `|h|^2 ~ Exp(1)` the probability that a link clears its SINR
//! threshold has a closed form, so fading is never sampled: the success
//! probabilities below are the per-slot Bernoulli parameters used by the
//! analysis and the simulator.

use crate::error::{check_probability, ModelError, Result};

/// One directed transmitter-to-receiver link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Transmit power in watts.
    pub tx_power: f64,
    /// Transmitter-receiver distance in meters.
    pub distance: f64,
    pub pathloss_exponent: f64,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// Linear SINR threshold at the receiver.
    pub sinr_threshold: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        positive("tx_power", self.tx_power)?;
        positive("distance", self.distance)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        nonnegative("noise_power", self.noise_power)?;
        nonnegative("sinr_threshold", self.sinr_threshold)
    }
}

/// A concurrent transmitter seen by a link's receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererSpec {
    pub tx_power: f64,
    pub distance_to_receiver: f64,
}

impl InterfererSpec {
    pub fn validate(&self) -> Result<()> {
        nonnegative("interferer tx_power", self.tx_power)?;
        positive("interferer distance", self.distance_to_receiver)
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and nonnegative",
        })
    }
}

/// `exp(-θ η r^γ / P)`.
pub fn snr_success(link: &LinkBudget) -> Result<f64> {
    link.validate()?;
    Ok(snr_unchecked(link))
}

fn snr_unchecked(link: &LinkBudget) -> f64 {
    (-link.sinr_threshold * link.noise_power * link.distance.powf(link.pathloss_exponent) / link.tx_power).exp()
}

/// SNR success divided by `1 + θ (P_k / P_i) (r_ij / r_kj)^γ`.
pub fn sinr_success(link: &LinkBudget, interferer: &InterfererSpec) -> Result<f64> {
    link.validate()?;
    interferer.validate()?;
    let ratio = link.distance / interferer.distance_to_receiver;
    let penalty =
        1.0 + link.sinr_threshold * (interferer.tx_power / link.tx_power) * ratio.powf(link.pathloss_exponent);
    Ok(snr_unchecked(link) / penalty)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn mw_to_watts(mw: f64) -> f64 {
    mw * 1e-3
}

/// The five success probabilities the protocol needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProbabilities {
    /// S -> D with S alone on the air.
    pub p_sd_s: f64,
    /// S -> D while DC transmits to U.
    pub p_sd_s_dc: f64,
    /// S -> U with S alone on the air.
    pub p_su_s: f64,
    /// DC -> U with DC alone on the air.
    pub p_dc_dc: f64,
    /// DC -> U while S transmits to D.
    pub p_dc_s_dc: f64,
}

impl LinkProbabilities {
    pub fn ideal() -> Self {
        Self {
            p_sd_s: 1.0,
            p_sd_s_dc: 1.0,
            p_su_s: 1.0,
            p_dc_dc: 1.0,
            p_dc_s_dc: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_sd_s", self.p_sd_s)?;
        check_probability("p_sd_s_dc", self.p_sd_s_dc)?;
        check_probability("p_su_s", self.p_su_s)?;
        check_probability("p_dc_dc", self.p_dc_dc)?;
        check_probability("p_dc_s_dc", self.p_dc_s_dc)?;
        if self.p_sd_s_dc > self.p_sd_s {
            return Err(ModelError::InvalidParameter {
                name: "p_sd_s_dc",
                value: self.p_sd_s_dc,
                reason: "cannot exceed the interference-free p_sd_s",
            });
        }
        if self.p_dc_s_dc > self.p_dc_dc {
            return Err(ModelError::InvalidParameter {
                name: "p_dc_s_dc",
                value: self.p_dc_s_dc,
                reason: "cannot exceed the interference-free p_dc_dc",
            });
        }
        Ok(())
    }
}

/// A link together with the transmitter that may interfere with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferedLink {
    pub link: LinkBudget,
    pub interferer: InterfererSpec,
}

/// Per-link descriptions of the five success probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSet {
    pub s_to_d: LinkBudget,
    pub s_to_d_with_dc: InterferedLink,
    pub s_to_u: LinkBudget,
    pub dc_to_u: LinkBudget,
    pub dc_to_u_with_s: InterferedLink,
}

fn same(what: &str, a: f64, b: f64) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(ModelError::Configuration(format!("{what}: {a} vs {b}")))
    }
}

impl LinkSet {
    /// Checks that the five descriptions agree on shared nodes and receivers.
    pub fn check_consistency(&self) -> Result<()> {
        let sd = &self.s_to_d;
        let sdi = &self.s_to_d_with_dc;
        let su = &self.s_to_u;
        let du = &self.dc_to_u;
        let dui = &self.dc_to_u_with_s;

        if sd != &sdi.link {
            return Err(ModelError::Configuration(
                "S->D link differs between the interference-free and interfered descriptions".into(),
            ));
        }
        if du != &dui.link {
            return Err(ModelError::Configuration(
                "DC->U link differs between the interference-free and interfered descriptions".into(),
            ));
        }
        same("S transmit power (S->D vs S->U)", sd.tx_power, su.tx_power)?;
        // a silent interferer (power 0) stands for "no interferer"
        if dui.interferer.tx_power != 0.0 {
            same(
                "S transmit power as interferer at U",
                sd.tx_power,
                dui.interferer.tx_power,
            )?;
            same(
                "S-U distance (S->U vs interferer at U)",
                su.distance,
                dui.interferer.distance_to_receiver,
            )?;
        }
        if sdi.interferer.tx_power != 0.0 {
            same(
                "DC transmit power as interferer at D",
                du.tx_power,
                sdi.interferer.tx_power,
            )?;
        }
        same("noise power at U", su.noise_power, du.noise_power)?;
        same("SINR threshold at U", su.sinr_threshold, du.sinr_threshold)?;
        same("path-loss exponent", sd.pathloss_exponent, su.pathloss_exponent)?;
        same("path-loss exponent", sd.pathloss_exponent, du.pathloss_exponent)?;
        Ok(())
    }
}

/// Evaluates the five success probabilities after checking the descriptions agree.
pub fn build_link_probabilities(links: &LinkSet) -> Result<LinkProbabilities> {
    links.check_consistency()?;
    let probs = LinkProbabilities {
        p_sd_s: snr_success(&links.s_to_d)?,
        p_sd_s_dc: sinr_success(&links.s_to_d_with_dc.link, &links.s_to_d_with_dc.interferer)?,
        p_su_s: snr_success(&links.s_to_u)?,
        p_dc_dc: snr_success(&links.dc_to_u)?,
        p_dc_s_dc: sinr_success(&links.dc_to_u_with_s.link, &links.dc_to_u_with_s.interferer)?,
    };
    probs.validate()?;
    Ok(probs)
}

/// Node-level description of the four-node topology in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub helper_power: f64,
    pub dc_power: f64,
    pub r_sd: f64,
    pub r_su: f64,
    pub r_dc_d: f64,
    pub r_dc_u: f64,
    pub pathloss_exponent: f64,
    pub noise_d: f64,
    pub noise_u: f64,
    /// Linear threshold at D.
    pub threshold_d: f64,
    /// Linear threshold at U.
    pub threshold_u: f64,
}

impl Geometry {
    pub fn link_set(&self) -> LinkSet {
        let s_to_d = LinkBudget {
            tx_power: self.helper_power,
            distance: self.r_sd,
            pathloss_exponent: self.pathloss_exponent,
            noise_power: self.noise_d,
            sinr_threshold: self.threshold_d,
        };
        let s_to_u = LinkBudget {
            tx_power: self.helper_power,
            distance: self.r_su,
            pathloss_exponent: self.pathloss_exponent,
            noise_power: self.noise_u,
            sinr_threshold: self.threshold_u,
        };
        let dc_to_u = LinkBudget {
            tx_power: self.dc_power,
            distance: self.r_dc_u,
            pathloss_exponent: self.pathloss_exponent,
            noise_power: self.noise_u,
            sinr_threshold: self.threshold_u,
        };
        LinkSet {
            s_to_d,
            s_to_d_with_dc: InterferedLink {
                link: s_to_d,
                interferer: InterfererSpec {
                    tx_power: self.dc_power,
                    distance_to_receiver: self.r_dc_d,
                },
            },
            s_to_u,
            dc_to_u,
            dc_to_u_with_s: InterferedLink {
                link: dc_to_u,
                interferer: InterfererSpec {
                    tx_power: self.helper_power,
                    distance_to_receiver: self.r_su,
                },
            },
        }
    }

    pub fn link_probabilities(&self) -> Result<LinkProbabilities> {
        build_link_probabilities(&self.link_set())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A parameter is outside its admissible range.
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An index or count falls outside the modelled domain.
    #[error("{0}")]
    Domain(String),

    /// A formula that only holds in one queue regime was evaluated in the other.
    #[error("formula requires a {expected} queue, but lambda = {arrival_rate} and mu = {service_rate}")]
    Regime {
        expected: &'static str,
        arrival_rate: f64,
        service_rate: f64,
    },

    /// No transmit probability can stabilise the helper queue.
    #[error("arrival rate {arrival_rate} cannot be stabilised; the largest stabilisable rate is {max_arrival_rate} (strictly below)")]
    Infeasible { arrival_rate: f64, max_arrival_rate: f64 },

    /// Link descriptions disagree about a shared node or receiver.
    #[error("inconsistent link geometry: {0}")]
    Configuration(String),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be a probability in [0, 1]",
        })
    }
}

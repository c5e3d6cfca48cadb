use thiserror::Error;

/// A scenario parameter failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ConfigError {
    /// Config key name of the offending parameter.
    pub field: &'static str,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("water-filling instance has no slots")]
    EmptyInstance,
    #[error("slot {0} needs positive gain and bandwidth and a non-negative cap")]
    InvalidSlot(usize),
    #[error("bit requirement must be positive, got {0}")]
    NonPositiveBits(f64),
    #[error("closed-form multiplier undefined: no slot lies strictly between zero and its cap")]
    NoInteriorSlots,
    #[error("selection count {n} outside 1..={available}")]
    SelectionOutOfRange { n: usize, available: usize },
    #[error("estimated idle-slot count is zero")]
    NoIdleSlots,
    #[error("power budget exceeded at BS {bs}: {total_w} W > {p_max_w} W")]
    PowerBudget { bs: usize, total_w: f64, p_max_w: f64 },
}

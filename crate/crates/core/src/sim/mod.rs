//! Event-driven execution of rate policies and the schedule validator.

mod executor;
mod validate;

pub use executor::{execute, next_event, FlowState, RatePolicy, SimView, EVENT_EPS};
pub use validate::{
    total_weighted_completion, validate, ValidationReport, Violation, ViolationKind, CAPACITY_TOL,
    DEMAND_TOL,
};

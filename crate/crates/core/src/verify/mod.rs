//! Exact oracle for tiny instances, bound checkers and worked-example
//! instances.

mod bounds;
mod fixtures;
mod oracle;

pub use bounds::{
    check_prefix_bound, check_ratio_bound, check_structural_bound, BoundViolation,
    PrefixBoundReport, RatioReport, StructuralReport,
};
pub use fixtures::{counterexample_fixture, diagonal_sized, diagonal_unit, staggered_release};
pub use oracle::{oracle_opt, oracle_opt_with_deadlines, OracleLimits, OracleResult};

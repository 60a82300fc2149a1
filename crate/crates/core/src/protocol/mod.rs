//! Number filtering and the three-well vacancy-filling merge, at the level of
//! exact well configurations and of occupation distributions.

mod filter;
mod merge;
mod vacancy;

pub use filter::filter_sweep;
pub use merge::{
    ancilla_assisted_transfer, ancilla_pulse, conditional_remove_excited, filter_spectator_shifts,
    merge_left, merge_protocol, merge_protocol_noisy, merge_right, merge_spectator_shifts,
    occupancies_of, removal_pulse, sweep_remove_excited, ConditionalPulse, MergeErrorModel,
    MergeOutcome, OutcomeTable, SpectatorShift, ThreeWellState, TraceStep,
    DEFAULT_DISCRIMINATION_U00,
};
pub use vacancy::{vacancy_after_merge, vacancy_recursion, IterationMode};

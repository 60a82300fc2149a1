//! Simulation of entropy removal from thermal Mott insulators in optical
//! lattices by vibrational-state number filtering and three-well merging.
//!
//! The numerical modules are generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, which is what the experiment runner uses.
//!
//! ```
//! use vibfilter::{protocol, thermo};
//!
//! let params = thermo::ThermalParams::with_default_cap(0.5, 0.1).unwrap();
//! let dist = thermo::occupation_distribution(&params);
//! let filtered = protocol::filter_sweep(&dist, 10, 0.0).unwrap();
//! let merged = protocol::vacancy_after_merge(filtered.vacancy());
//! assert!(merged < 1e-4);
//! ```

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lattice;
pub mod num;
pub mod oscillator;
pub mod protocol;
pub mod pulse;
pub mod thermo;
pub mod well;

pub use error::{Error, Result};
pub use num::Real;
pub use protocol::IterationMode;
pub use well::{Atom, Hyperfine, VibLevel, WellConfig};

pub type InteractionMatrix = oscillator::InteractionMatrix<f64>;
pub type ThermalParams = thermo::ThermalParams<f64>;
pub type TrapParams = thermo::TrapParams<f64>;
pub type OccupationDistribution = thermo::OccupationDistribution<f64>;
pub type LatticeField = lattice::LatticeField<f64>;
pub type Schedule = lattice::Schedule<f64>;
pub type ScheduleErrors = lattice::ScheduleErrors<f64>;
pub type PulseSpec = pulse::PulseSpec<f64>;
pub type LossModel = pulse::LossModel<f64>;

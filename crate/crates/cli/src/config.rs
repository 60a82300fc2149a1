//! Run configuration: TOML with one table per concern, every key optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vibfilter::lattice::{MergeAxis, ScheduleErrors};
use vibfilter::protocol::MergeErrorModel;
use vibfilter::pulse::{LossModel, ObjectiveWeights, OperatingPoint};
use vibfilter::thermo::{ThermalParams, TrapParams, ATOMIC_MASS_UNIT, DEFAULT_N_CAP};
use vibfilter::IterationMode;

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub thermal: ThermalSection,
    pub trap: TrapSection,
    pub schedule: ScheduleSection,
    pub errors: ErrorSection,
    pub pulse: PulseSection,
    pub fig4: Fig4Section,
    pub profile: ProfileSection,
    pub fig7: Fig7Section,
    pub mc: McSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Output directory; not part of the provenance hash.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSection {
    pub mu_u: f64,
    pub t_u: f64,
    pub n_cap: usize,
}

impl Default for ThermalSection {
    fn default() -> Self {
        ThermalSection { mu_u: 0.5, t_u: 0.2, n_cap: DEFAULT_N_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub omega_trap_hz: f64,
    pub u_int_hz: f64,
    pub mass_kg: f64,
    pub spacing_um: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection { omega_trap_hz: 80.0, u_int_hz: 1000.0, mass_kg: 87.0 * ATOMIC_MASS_UNIT, spacing_um: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub n_max: usize,
    pub axis: MergeAxis,
    pub mode: IterationMode,
    /// Lower bound on the grid radius; the thermal edge may raise it.
    pub grid_radius_sites: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { n_max: 10, axis: MergeAxis::Auxiliary, mode: IterationMode::Parallel, grid_radius_sites: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorSection {
    pub per_pulse_error: f64,
    pub merge_infidelity: f64,
    pub pulse_failure: f64,
    pub spectator_error: f64,
    pub eps_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub tau_s: f64,
    pub u00_hz: f64,
    pub w_loss: f64,
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub grid_points: usize,
    /// Spectator offsets from the addressed transition, in `U_00`.
    pub detunings_u00: Vec<f64>,
    /// Reported operating points the loss weight is fitted against.
    pub fit_points: Vec<OperatingPoint<f64>>,
}

impl Default for PulseSection {
    fn default() -> Self {
        let w = ObjectiveWeights::<f64>::default();
        PulseSection {
            tau_s: 1.0,
            u00_hz: 1000.0,
            w_loss: w.w_loss,
            t_min_s: w.t_min_s,
            t_max_s: w.t_max_s,
            grid_points: w.grid_points,
            detunings_u00: vec![0.125],
            fit_points: vec![
                OperatingPoint { u00_hz: 1000.0, t_s: 7e-3, eps: 7e-4 },
                OperatingPoint { u00_hz: 20_000.0, t_s: 1e-3, eps: 1e-4 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Section {
    pub t_min_u: f64,
    pub t_max_u: f64,
    pub points: usize,
}

impl Default for Fig4Section {
    fn default() -> Self {
        Fig4Section { t_min_u: 0.02, t_max_u: 0.5, points: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub r_max_um: f64,
    /// Zero means one bin per lattice spacing.
    pub bin_width_um: f64,
    /// Threshold defining the central plateau.
    pub plateau_min_p1: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection { r_max_um: 15.0, bin_width_um: 0.0, plateau_min_p1: 0.999 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig7Section {
    pub mu_values: Vec<f64>,
    pub iterations: Vec<usize>,
    pub eps_floor: f64,
    pub r_max_um: f64,
    pub max_infidelity: f64,
}

impl Default for Fig7Section {
    fn default() -> Self {
        Fig7Section {
            mu_values: vec![0.5, 2.0],
            iterations: vec![0, 1, 2, 3],
            eps_floor: 1e-4,
            r_max_um: 15.0,
            max_infidelity: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub realizations: u64,
    pub vacancies: Vec<f64>,
    pub iterations: usize,
    pub modes: Vec<IterationMode>,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            realizations: 1_000_000,
            vacancies: vec![0.05, 0.1, 0.2],
            iterations: 2,
            modes: vec![IterationMode::Parallel, IterationMode::Serial],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::parse(&source)
    }

    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(source).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate().map_err(|e| e.locate(source))?;
        Ok(cfg)
    }

    /// Canonical TOML of every resolved value.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.thermal_params()?;
        self.trap_params()?;
        self.schedule_errors()?;
        self.loss_model()?;
        self.objective_weights()?;
        if self.run.seed > i64::MAX as u64 {
            return Err(ConfigError::invalid("run.seed", "must fit in a signed 64-bit integer"));
        }
        if self.schedule.n_max < 2 {
            return Err(ConfigError::invalid("schedule.n_max", "must be at least 2"));
        }
        if self.pulse.detunings_u00.is_empty() {
            return Err(ConfigError::invalid("pulse.detunings_u00", "need at least one spectator offset"));
        }
        let f4 = &self.fig4;
        if !(f4.t_min_u > 0.0 && f4.t_max_u >= f4.t_min_u) || f4.points == 0 {
            return Err(ConfigError::invalid("fig4.t_min_u", "need 0 < t_min_u <= t_max_u and points >= 1"));
        }
        if !(self.profile.r_max_um > 0.0) {
            return Err(ConfigError::invalid("profile.r_max_um", "must be positive"));
        }
        if !(self.profile.bin_width_um >= 0.0) {
            return Err(ConfigError::invalid("profile.bin_width_um", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.profile.plateau_min_p1) {
            return Err(ConfigError::invalid("profile.plateau_min_p1", "must lie in [0, 1]"));
        }
        let f7 = &self.fig7;
        if f7.mu_values.is_empty() || f7.iterations.is_empty() {
            return Err(ConfigError::invalid("fig7.mu_values", "fig7 needs at least one curve"));
        }
        for &mu in &f7.mu_values {
            ThermalParams::new(mu, self.thermal.t_u, self.thermal.n_cap)
                .map_err(|e| ConfigError::invalid("fig7.mu_values", e.to_string()))?;
        }
        if !(0.0..=1.0).contains(&f7.eps_floor) {
            return Err(ConfigError::invalid("fig7.eps_floor", "must lie in [0, 1]"));
        }
        if !(f7.r_max_um > 0.0) {
            return Err(ConfigError::invalid("fig7.r_max_um", "must be positive"));
        }
        if !(f7.max_infidelity > 0.0 && f7.max_infidelity <= 1.0) {
            return Err(ConfigError::invalid("fig7.max_infidelity", "must lie in (0, 1]"));
        }
        let mc = &self.mc;
        if mc.realizations == 0 {
            return Err(ConfigError::invalid("mc.realizations", "must be at least 1"));
        }
        if mc.iterations == 0 || mc.modes.is_empty() || mc.vacancies.is_empty() {
            return Err(ConfigError::invalid("mc.iterations", "mc needs iterations >= 1, modes and vacancies"));
        }
        if let Some(v) = mc.vacancies.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ConfigError::invalid("mc.vacancies", format!("{v} is not a probability")));
        }
        Ok(())
    }

    pub fn thermal_params(&self) -> Result<ThermalParams<f64>, ConfigError> {
        let t = &self.thermal;
        Ok(ThermalParams::new(t.mu_u, t.t_u, t.n_cap)?)
    }

    pub fn trap_params(&self) -> Result<TrapParams<f64>, ConfigError> {
        let t = &self.trap;
        Ok(TrapParams::new(t.omega_trap_hz, t.u_int_hz, t.mass_kg, t.spacing_um)?)
    }

    pub fn schedule_errors(&self) -> Result<ScheduleErrors<f64>, ConfigError> {
        let e = &self.errors;
        let merge = MergeErrorModel {
            merge_infidelity: e.merge_infidelity,
            pulse_failure: e.pulse_failure,
            spectator_error: e.spectator_error,
        };
        merge.validate()?;
        if !(0.0..1.0).contains(&e.per_pulse_error) {
            return Err(ConfigError::invalid("errors.per_pulse_error", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&e.eps_floor) {
            return Err(ConfigError::invalid("errors.eps_floor", "must lie in [0, 1]"));
        }
        Ok(ScheduleErrors { per_pulse_error: e.per_pulse_error, merge, eps_floor: e.eps_floor })
    }

    pub fn loss_model(&self) -> Result<LossModel<f64>, ConfigError> {
        Ok(LossModel::new(self.pulse.tau_s, self.pulse.u00_hz)?)
    }

    pub fn objective_weights(&self) -> Result<ObjectiveWeights<f64>, ConfigError> {
        let p = &self.pulse;
        if !(p.w_loss >= 0.0) {
            return Err(ConfigError::invalid("pulse.w_loss", "must be non-negative"));
        }
        if !(p.t_min_s > 0.0 && p.t_max_s >= p.t_min_s) || p.grid_points == 0 {
            return Err(ConfigError::invalid("pulse.t_min_s", "need 0 < t_min_s <= t_max_s and grid_points >= 1"));
        }
        Ok(ObjectiveWeights { w_loss: p.w_loss, t_min_s: p.t_min_s, t_max_s: p.t_max_s, grid_points: p.grid_points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips_through_canonical_form() {
        let cfg = RunConfig::parse("[thermal]\nmu_u = 2.0\n[run]\nseed = 9\n").unwrap();
        assert_eq!(RunConfig::parse(&cfg.canonical()).unwrap(), cfg);
        assert_ne!(cfg.sha256(), RunConfig::default().sha256());
    }

    #[test]
    fn output_dir_does_not_change_hash() {
        let a = RunConfig::parse("[run]\nout = \"a\"\n").unwrap();
        let b = RunConfig::parse("[run]\nout = \"b\"\n").unwrap();
        assert_eq!(a.sha256(), b.sha256());
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("[thermal]\nmu_u = 0.5\ntemperature = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("temperature"), "{msg}");
    }

    #[test]
    fn invalid_value_reports_line() {
        let err = RunConfig::parse("# comment\n[thermal]\nt_u = -1.0\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
        let err = RunConfig::parse("[errors]\n\nper_pulse_error = 1.5\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
    }

    #[test]
    fn invalid_default_has_no_line() {
        let mut cfg = RunConfig::default();
        cfg.mc.vacancies = vec![2.0];
        let err = cfg.validate().unwrap_err().locate("");
        assert!(err.to_string().starts_with("mc.vacancies:"), "{err}");
    }

    #[test]
    fn enums_use_lowercase_names() {
        let cfg = RunConfig::parse("[schedule]\naxis = \"x\"\nmode = \"serial\"\n").unwrap();
        assert_eq!(cfg.schedule.axis, MergeAxis::X);
        assert_eq!(cfg.schedule.mode, IterationMode::Serial);
        assert!(RunConfig::parse("[schedule]\naxis = \"z\"\n").is_err());
    }
}

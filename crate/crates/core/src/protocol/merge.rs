//! Three-well merging state machine.
//!
//! The middle well is the target. The right neighbor's ground state is merged
//! into the first excited level of the target, doubly occupied targets shed
//! their excited atom, then the left neighbor is merged into the second
//! excited level. An atom in `ν = 1` acts as ancilla: its interaction shift
//! makes the `ν = 2 → ν = 0` transfer resonant only when it is present.
//! Finally everything above the ground level is removed.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::oscillator::{transition_detuning, InteractionMatrix};
use crate::well::{Atom, Hyperfine, VibLevel, WellConfig};

/// Minimum interaction-shift separation (in `U_00`) the pulses resolve.
pub const DEFAULT_DISCRIMINATION_U00: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct ThreeWellState {
    pub left: WellConfig,
    pub middle: WellConfig,
    pub right: WellConfig,
}

impl ThreeWellState {
    /// Binary occupancies `(n_l, n_m, n_r)` with every atom in `(alpha, 0)`.
    pub fn from_occupancies(occ: [u8; 3]) -> Result<Self> {
        if occ.iter().any(|&n| n > 1) {
            return Err(Error::Precondition(format!(
                "merging expects filtered occupancies in {{0, 1}}, got {occ:?}"
            )));
        }
        Ok(ThreeWellState {
            left: WellConfig::ground(occ[0] as usize)?,
            middle: WellConfig::ground(occ[1] as usize)?,
            right: WellConfig::ground(occ[2] as usize)?,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.left.len() + self.middle.len() + self.right.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub label: String,
    pub state: ThreeWellState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeOutcome {
    pub middle_final: WellConfig,
    pub ground_occupied: bool,
    pub trace: Vec<TraceStep>,
}

impl MergeOutcome {
    /// Step-by-step snapshots as pretty-printed JSON.
    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Random fault injection for the noisy protocol.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MergeErrorModel {
    /// Probability that a merged atom is lost during the adiabatic merge.
    pub merge_infidelity: f64,
    /// Probability that an addressed conditional pulse does nothing.
    pub pulse_failure: f64,
    /// Probability that a conditional pulse excites (and so loses) the
    /// ground-state atom of an off-resonant configuration.
    pub spectator_error: f64,
}

impl MergeErrorModel {
    pub const IDEAL: MergeErrorModel =
        MergeErrorModel { merge_infidelity: 0.0, pulse_failure: 0.0, spectator_error: 0.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("merge_infidelity", self.merge_infidelity),
            ("pulse_failure", self.pulse_failure),
            ("spectator_error", self.spectator_error),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(crate::error::invalid(name, format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

trait Faults {
    fn strike(&mut self, p: f64) -> bool;
}

struct NoFaults;

impl Faults for NoFaults {
    fn strike(&mut self, _p: f64) -> bool {
        false
    }
}

struct RandomFaults<'a, R>(&'a mut R);

impl<R: Rng> Faults for RandomFaults<'_, R> {
    fn strike(&mut self, p: f64) -> bool {
        p > 0.0 && self.0.random::<f64>() < p
    }
}

/// A Raman pulse tuned to the interaction shift of one addressed
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalPulse<T> {
    pub label: &'static str,
    pub addressed: WellConfig,
    pub from: Atom,
    pub to: Atom,
    /// Interaction shift of the addressed transition, `U_00` units.
    pub resonance: T,
    pub half_width: T,
}

impl<T: Real> ConditionalPulse<T> {
    pub fn new(
        label: &'static str,
        addressed: WellConfig,
        from: Atom,
        to: Atom,
        matrix: &InteractionMatrix<T>,
        discrimination: T,
    ) -> Result<Self> {
        let target = addressed.with_transfer(from, to).ok_or_else(|| {
            Error::Precondition(format!("addressed configuration {addressed} lacks atom {from}"))
        })?;
        let resonance = transition_detuning(&addressed, &target, matrix)?;
        Ok(ConditionalPulse {
            label,
            addressed,
            from,
            to,
            resonance,
            half_width: discrimination / T::lit(2.0),
        })
    }

    /// Sideband shift `δν = to.level − from.level`.
    pub fn delta_nu(&self) -> i16 {
        self.to.level.0 as i16 - self.from.level.0 as i16
    }

    /// Shifts of every transition in `well` driven by this pulse's sideband
    /// (same hyperfine change and `δν`), one per distinct source atom.
    pub fn sideband_detunings(
        &self,
        well: &WellConfig,
        matrix: &InteractionMatrix<T>,
    ) -> Result<Vec<(Atom, T)>> {
        let mut out = Vec::new();
        let mut seen: Option<Atom> = None;
        for &atom in well.atoms() {
            if seen == Some(atom) || atom.hyperfine != self.from.hyperfine {
                continue;
            }
            seen = Some(atom);
            let level = atom.level.0 as i16 + self.delta_nu();
            if level < 0 {
                continue;
            }
            let dest = Atom { hyperfine: self.to.hyperfine, level: VibLevel(level as u8) };
            if dest.level.0 > matrix.nu_max() {
                continue;
            }
            let next = well.with_transfer(atom, dest).expect("atom present");
            out.push((atom, transition_detuning(well, &next, matrix)?));
        }
        Ok(out)
    }

    /// Resulting well if the pulse drives this configuration, else `None`.
    pub fn drive(&self, well: &WellConfig, matrix: &InteractionMatrix<T>) -> Result<Option<WellConfig>> {
        let Some(next) = well.with_transfer(self.from, self.to) else {
            return Ok(None);
        };
        let shift = transition_detuning(well, &next, matrix)?;
        Ok(((shift - self.resonance).abs() <= self.half_width).then_some(next))
    }
}

/// `(alpha,1) -> (beta,2)` upper sideband on `{(alpha,0), (alpha,1)}`.
pub fn removal_pulse<T: Real>(matrix: &InteractionMatrix<T>, discrimination: T) -> Result<ConditionalPulse<T>> {
    ConditionalPulse::new(
        "remove_excited",
        WellConfig::new([Atom::alpha(0), Atom::alpha(1)])?,
        Atom::alpha(1),
        Atom::beta(2),
        matrix,
        discrimination,
    )
}

/// `(alpha,2) -> (beta,0)` two-phonon lower sideband on `{(alpha,1), (alpha,2)}`.
pub fn ancilla_pulse<T: Real>(matrix: &InteractionMatrix<T>, discrimination: T) -> Result<ConditionalPulse<T>> {
    ConditionalPulse::new(
        "ancilla_transfer",
        WellConfig::new([Atom::alpha(1), Atom::alpha(2)])?,
        Atom::alpha(2),
        Atom::beta(0),
        matrix,
        discrimination,
    )
}

fn check_mergeable(side: &WellConfig, which: &str) -> Result<()> {
    if side.atoms().iter().any(|a| a.level != VibLevel::GROUND) {
        return Err(Error::Precondition(format!("{which} well holds excited atoms: {side}")));
    }
    if side.len() > 1 {
        return Err(Error::Precondition(format!(
            "{which} well holds {} atoms; merging expects filtered wells",
            side.len()
        )));
    }
    Ok(())
}

fn merge_into(
    source: &mut WellConfig,
    middle: &mut WellConfig,
    level: u8,
    infidelity: f64,
    faults: &mut dyn Faults,
) {
    for atom in source.drain() {
        if !faults.strike(infidelity) {
            middle.push(Atom::new(atom.hyperfine, level));
        }
    }
}

fn merge_right_with(state: &ThreeWellState, infidelity: f64, faults: &mut dyn Faults) -> Result<ThreeWellState> {
    check_mergeable(&state.right, "right")?;
    if state.middle.atoms().iter().any(|a| a.level.0 == 1) {
        return Err(Error::Precondition("middle well already occupies the first excited level".into()));
    }
    let mut next = state.clone();
    merge_into(&mut next.right, &mut next.middle, 1, infidelity, faults);
    Ok(next)
}

fn merge_left_with(state: &ThreeWellState, infidelity: f64, faults: &mut dyn Faults) -> Result<ThreeWellState> {
    check_mergeable(&state.left, "left")?;
    let mut next = state.clone();
    merge_into(&mut next.left, &mut next.middle, 2, infidelity, faults);
    Ok(next)
}

fn conditional_with<T: Real>(
    state: &ThreeWellState,
    pulse: &ConditionalPulse<T>,
    matrix: &InteractionMatrix<T>,
    remove_beta: bool,
    model: &MergeErrorModel,
    faults: &mut dyn Faults,
) -> Result<ThreeWellState> {
    let mut next = state.clone();
    match pulse.drive(&state.middle, matrix)? {
        Some(driven) => {
            if !faults.strike(model.pulse_failure) {
                next.middle = driven;
            }
        }
        None => {
            if state.middle.contains(Atom::alpha(0)) && faults.strike(model.spectator_error) {
                next.middle.take(Atom::alpha(0));
            }
        }
    }
    if remove_beta {
        next.middle.retain(|a| a.hyperfine != Hyperfine::Beta);
    }
    Ok(next)
}

/// Right neighbor's ground state becomes the target's first excited level.
pub fn merge_right(state: &ThreeWellState) -> Result<ThreeWellState> {
    merge_right_with(state, 0.0, &mut NoFaults)
}

/// Removes the `ν = 1` atom only when a ground-state atom shares the well.
pub fn conditional_remove_excited<T: Real>(
    state: &ThreeWellState,
    matrix: &InteractionMatrix<T>,
    discrimination: T,
) -> Result<ThreeWellState> {
    let pulse = removal_pulse(matrix, discrimination)?;
    conditional_with(state, &pulse, matrix, true, &MergeErrorModel::IDEAL, &mut NoFaults)
}

/// Left neighbor's ground state becomes the target's second excited level.
pub fn merge_left(state: &ThreeWellState) -> Result<ThreeWellState> {
    merge_left_with(state, 0.0, &mut NoFaults)
}

/// Moves the `ν = 2` atom to `(beta, 0)` when the `ν = 1` ancilla is present.
pub fn ancilla_assisted_transfer<T: Real>(
    state: &ThreeWellState,
    matrix: &InteractionMatrix<T>,
) -> Result<ThreeWellState> {
    let pulse = ancilla_pulse(matrix, T::lit(DEFAULT_DISCRIMINATION_U00))?;
    conditional_with(state, &pulse, matrix, false, &MergeErrorModel::IDEAL, &mut NoFaults)
}

fn sweep(state: &ThreeWellState) -> ThreeWellState {
    let mut next = state.clone();
    next.middle.retain(|a| a.level == VibLevel::GROUND);
    // final carrier pulse (beta,0) -> (alpha,0)
    let relabeled: Vec<Atom> = next.middle.drain().into_iter().map(|a| Atom::alpha(a.level.0)).collect();
    next.middle = WellConfig::new(relabeled).expect("no new atoms");
    next
}

fn outcome_of(trace: Vec<TraceStep>) -> MergeOutcome {
    let middle_final = trace.last().map(|s| s.state.middle.clone()).unwrap_or_default();
    let ground_occupied = middle_final.count(Atom::alpha(0)) == 1;
    MergeOutcome { middle_final, ground_occupied, trace }
}

/// Strips every excited atom from the target and returns all survivors to
/// `(alpha, 0)`.
pub fn sweep_remove_excited(state: &ThreeWellState) -> MergeOutcome {
    outcome_of(vec![TraceStep { label: "sweep_remove_excited".into(), state: sweep(state) }])
}

fn run_protocol<T: Real>(
    occ: [u8; 3],
    matrix: &InteractionMatrix<T>,
    model: &MergeErrorModel,
    faults: &mut dyn Faults,
) -> Result<MergeOutcome> {
    let discrimination = T::lit(DEFAULT_DISCRIMINATION_U00);
    let removal = removal_pulse(matrix, discrimination)?;
    let ancilla = ancilla_pulse(matrix, discrimination)?;
    let mut trace = Vec::with_capacity(6);
    let mut push = |label: &str, s: &ThreeWellState| {
        trace.push(TraceStep { label: label.into(), state: s.clone() });
    };

    let s = ThreeWellState::from_occupancies(occ)?;
    push("initial", &s);
    let s = merge_right_with(&s, model.merge_infidelity, faults)?;
    push("merge_right", &s);
    let s = conditional_with(&s, &removal, matrix, true, model, faults)?;
    push("conditional_remove_excited", &s);
    let s = merge_left_with(&s, model.merge_infidelity, faults)?;
    push("merge_left", &s);
    let s = conditional_with(&s, &ancilla, matrix, false, model, faults)?;
    push("ancilla_assisted_transfer", &s);
    let s = sweep(&s);
    push("sweep_remove_excited", &s);
    Ok(outcome_of(trace))
}

/// Ideal protocol on binary occupancies `(n_l, n_m, n_r)`.
pub fn merge_protocol<T: Real>(occ: [u8; 3], matrix: &InteractionMatrix<T>) -> Result<MergeOutcome> {
    run_protocol(occ, matrix, &MergeErrorModel::IDEAL, &mut NoFaults)
}

/// Protocol with Bernoulli faults drawn from `rng`.
pub fn merge_protocol_noisy<T: Real, R: Rng>(
    occ: [u8; 3],
    matrix: &InteractionMatrix<T>,
    model: &MergeErrorModel,
    rng: &mut R,
) -> Result<MergeOutcome> {
    model.validate()?;
    run_protocol(occ, matrix, model, &mut RandomFaults(rng))
}

/// Ideal success flag for each of the eight inputs, indexed by
/// `4 n_l + 2 n_m + n_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OutcomeTable(pub [bool; 8]);

impl OutcomeTable {
    pub fn compute<T: Real>(matrix: &InteractionMatrix<T>) -> Result<Self> {
        let mut table = [false; 8];
        for (idx, slot) in table.iter_mut().enumerate() {
            *slot = merge_protocol(occupancies_of(idx), matrix)?.ground_occupied;
        }
        Ok(OutcomeTable(table))
    }

    pub fn success(&self, occ: [u8; 3]) -> bool {
        self.0[(occ[0] * 4 + occ[1] * 2 + occ[2]) as usize]
    }

    /// Target vacancy after one merge, given independent per-well vacancies.
    pub fn merged_vacancy<T: Real>(&self, v_left: T, v_mid: T, v_right: T) -> T {
        let mut vacant = T::zero();
        for (idx, &ok) in self.0.iter().enumerate() {
            if ok {
                continue;
            }
            let occ = occupancies_of(idx);
            let p = |n: u8, v: T| if n == 1 { T::one() - v } else { v };
            vacant = vacant + p(occ[0], v_left) * p(occ[1], v_mid) * p(occ[2], v_right);
        }
        vacant
    }
}

pub fn occupancies_of(idx: usize) -> [u8; 3] {
    [(idx >> 2 & 1) as u8, (idx >> 1 & 1) as u8, (idx & 1) as u8]
}

/// Spectator check for one conditional pulse against one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectatorShift<T> {
    pub pulse: &'static str,
    pub spectator: WellConfig,
    pub source: Atom,
    pub detuning: T,
    /// `|detuning − resonance|`.
    pub separation: T,
}

/// Every off-resonant transition the protocol's conditional pulses could
/// drive, over all target-well configurations reachable in the ideal
/// protocol from binary inputs.
pub fn merge_spectator_shifts<T: Real>(matrix: &InteractionMatrix<T>) -> Result<Vec<SpectatorShift<T>>> {
    let discrimination = T::lit(DEFAULT_DISCRIMINATION_U00);
    let pulses = [removal_pulse(matrix, discrimination)?, ancilla_pulse(matrix, discrimination)?];
    // trace index of the state each pulse acts on
    let before = [2usize, 4];
    let mut out = Vec::new();
    for (pulse, &at) in pulses.iter().zip(&before) {
        let mut seen: Vec<WellConfig> = Vec::new();
        for idx in 0..8 {
            let outcome = merge_protocol(occupancies_of(idx), matrix)?;
            let middle = outcome.trace[at - 1].state.middle.clone();
            if middle == pulse.addressed || seen.contains(&middle) {
                continue;
            }
            for (source, detuning) in pulse.sideband_detunings(&middle, matrix)? {
                out.push(SpectatorShift {
                    pulse: pulse.label,
                    spectator: middle.clone(),
                    source,
                    detuning,
                    separation: (detuning - pulse.resonance).abs(),
                });
            }
            seen.push(middle);
        }
    }
    Ok(out)
}

/// Same check for the filtering sweep: the pulse addressing `n` atoms against
/// wells holding any other occupation up to `n_max`.
pub fn filter_spectator_shifts<T: Real>(n_max: usize, matrix: &InteractionMatrix<T>) -> Result<Vec<SpectatorShift<T>>> {
    let mut out = Vec::new();
    for n in 2..=n_max {
        let addressed = crate::oscillator::filter_detuning(n, matrix)?;
        for k in (1..=n_max).filter(|&k| k != n) {
            let detuning = crate::oscillator::filter_detuning(k, matrix)?;
            out.push(SpectatorShift {
                pulse: "filter",
                spectator: WellConfig::with_rules(
                    std::iter::repeat_n(Atom::alpha(0), k),
                    crate::well::Statistics::Bosonic,
                    n_max.max(crate::well::DEFAULT_WELL_CAP),
                )?,
                source: Atom::alpha(0),
                detuning,
                separation: (detuning - addressed).abs(),
            });
        }
    }
    Ok(out)
}

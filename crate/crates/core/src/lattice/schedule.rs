use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::num::Real;
use crate::protocol::{IterationMode, MergeErrorModel};

/// Direction along which a merge draws its two neighbor wells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeAxis {
    /// Lattice rows: disjoint in-plane triples, the two neighbors are consumed.
    X,
    /// Lattice columns.
    Y,
    /// Neighbors come from the adjacent planes above and below, at the same
    /// in-plane position; every in-plane site stays a target.
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum Step<T> {
    Filter { n_max: usize },
    Merge { axis: MergeAxis, mode: IterationMode },
    Skim { r_cut_um: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleErrors<T> {
    pub per_pulse_error: T,
    pub merge: MergeErrorModel,
    /// Vacancy floor applied after each merge iteration in the analytic
    /// engine; zero disables it.
    pub eps_floor: T,
}

impl<T: Real> Default for ScheduleErrors<T> {
    fn default() -> Self {
        ScheduleErrors { per_pulse_error: T::zero(), merge: MergeErrorModel::IDEAL, eps_floor: T::zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    steps: Vec<Step<T>>,
    pub errors: ScheduleErrors<T>,
}

impl<T: Real> Schedule<T> {
    pub fn new(steps: Vec<Step<T>>, errors: ScheduleErrors<T>) -> Result<Self> {
        let skims: Vec<usize> = steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Step::Skim { .. }))
            .map(|(i, _)| i)
            .collect();
        if skims.len() > 1 || skims.first().is_some_and(|&i| i + 1 != steps.len()) {
            return Err(Error::Precondition("a schedule may skim once, as its final step".into()));
        }
        for s in &steps {
            match *s {
                Step::Filter { n_max } if n_max < 2 => {
                    return Err(invalid("n_max", format!("must be at least 2, got {n_max}")))
                }
                Step::Skim { r_cut_um } if !(r_cut_um >= T::zero()) => {
                    return Err(invalid("r_cut_um", "must be non-negative"))
                }
                _ => {}
            }
        }
        if !(errors.per_pulse_error >= T::zero() && errors.per_pulse_error < T::one()) {
            return Err(invalid("per_pulse_error", "must lie in [0, 1)"));
        }
        if !(errors.eps_floor >= T::zero() && errors.eps_floor <= T::one()) {
            return Err(invalid("eps_floor", "must lie in [0, 1]"));
        }
        errors.merge.validate()?;
        Ok(Schedule { steps, errors })
    }

    /// Filter followed by `iterations` merges along one axis.
    pub fn filter_and_merge(
        n_max: usize,
        iterations: usize,
        axis: MergeAxis,
        mode: IterationMode,
        errors: ScheduleErrors<T>,
    ) -> Result<Self> {
        let mut steps = vec![Step::Filter { n_max }];
        steps.extend(std::iter::repeat_n(Step::Merge { axis, mode }, iterations));
        Self::new(steps, errors)
    }

    pub fn steps(&self) -> &[Step<T>] {
        &self.steps
    }

    /// Same errors, first `n` steps.
    pub fn prefix(&self, n: usize) -> Self {
        Schedule { steps: self.steps[..n.min(self.steps.len())].to_vec(), errors: self.errors }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skim_only_last() {
        let e = ScheduleErrors::<f64>::default();
        let merge = Step::Merge { axis: MergeAxis::Auxiliary, mode: IterationMode::Parallel };
        assert!(Schedule::new(vec![Step::Filter { n_max: 5 }, Step::Skim { r_cut_um: 2.0 }], e).is_ok());
        assert!(Schedule::new(vec![Step::Skim { r_cut_um: 2.0 }, merge], e).is_err());
        assert!(Schedule::new(vec![Step::Skim { r_cut_um: 2.0 }, Step::Skim { r_cut_um: 1.0 }], e).is_err());
        assert!(Schedule::new(vec![Step::Filter { n_max: 1 }], e).is_err());
    }

    #[test]
    fn rejects_bad_error_config() {
        let e = ScheduleErrors { per_pulse_error: 1.0, ..ScheduleErrors::<f64>::default() };
        assert!(Schedule::new(vec![], e).is_err());
        let e = ScheduleErrors { eps_floor: -1e-4, ..ScheduleErrors::<f64>::default() };
        assert!(Schedule::new(vec![], e).is_err());
    }
}

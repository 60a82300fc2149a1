use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationMode {
    /// All disjoint triples merged at once, every iteration.
    #[default]
    Parallel,
    /// The target is merged with fresh, unpurified neighbor pairs.
    Serial,
}

/// Target vacancy after one merge of three wells with vacancy `eps`:
/// `2ε² − ε³`.
pub fn vacancy_after_merge<T: Real>(eps: T) -> T {
    T::lit(2.0) * eps * eps - eps * eps * eps
}

/// `ε_1, …, ε_steps` for repeated merging starting from `eps0`.
pub fn vacancy_recursion<T: Real>(eps0: T, steps: usize, mode: IterationMode) -> Result<Vec<T>> {
    if steps < 1 {
        return Err(invalid("steps", "need at least one step"));
    }
    if !(eps0 >= T::zero() && eps0 <= T::one()) {
        return Err(invalid("eps0", format!("must lie in [0, 1], got {eps0}")));
    }
    let mut out = Vec::with_capacity(steps);
    let mut eps = vacancy_after_merge(eps0);
    out.push(eps);
    for _ in 1..steps {
        eps = match mode {
            IterationMode::Parallel => vacancy_after_merge(eps),
            IterationMode::Serial => T::lit(2.0) * eps * eps0 - eps * eps0 * eps0,
        };
        out.push(eps);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_merge() {
        assert_abs_diff_eq!(vacancy_after_merge(0.1f64), 0.019, epsilon = 1e-15);
        assert_eq!(vacancy_after_merge(0.0f64), 0.0);
        assert_eq!(vacancy_after_merge(1.0f64), 1.0);
        assert!((vacancy_after_merge(0.0067f64) - 8.95e-5).abs() < 0.01e-5);
    }

    #[test]
    fn two_steps() {
        let p = vacancy_recursion(0.1f64, 2, IterationMode::Parallel).unwrap();
        assert_abs_diff_eq!(p[1], 2.0 * 0.019f64.powi(2) - 0.019f64.powi(3), epsilon = 1e-16);
        assert_abs_diff_eq!(p[1], 7.15141e-4, epsilon = 1e-16);
        let s = vacancy_recursion(0.1f64, 2, IterationMode::Serial).unwrap();
        assert_abs_diff_eq!(s[1], 3.61e-3, epsilon = 1e-15);
        assert_eq!(p[0], s[0]);
    }

    #[test]
    fn zero_stays_zero() {
        for mode in [IterationMode::Parallel, IterationMode::Serial] {
            assert!(vacancy_recursion(0.0f64, 5, mode).unwrap().iter().all(|&e| e == 0.0));
        }
        assert!(vacancy_recursion(0.1f64, 0, IterationMode::Serial).is_err());
    }
}

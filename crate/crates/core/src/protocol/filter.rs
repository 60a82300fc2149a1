use crate::error::{invalid, Result};
use crate::num::Real;
use crate::thermo::OccupationDistribution;

/// Descending sweep of occupation-resolved pulses `n_max, n_max-1, …, 2`,
/// each removing one atom from sites holding exactly that many atoms.
///
/// A failed pulse leaves the site at its current occupation; later pulses in
/// the sweep address lower occupations only, so the site stays stuck.
/// Occupations above `n_max` are never addressed.
pub fn filter_sweep<T: Real>(
    dist: &OccupationDistribution<T>,
    n_max: usize,
    per_pulse_error: T,
) -> Result<OccupationDistribution<T>> {
    if n_max < 2 {
        return Err(invalid("n_max", format!("must be at least 2, got {n_max}")));
    }
    if !(per_pulse_error >= T::zero() && per_pulse_error < T::one()) {
        return Err(invalid("per_pulse_error", format!("must lie in [0, 1), got {per_pulse_error}")));
    }
    let p = dist.probs();
    let mut out = vec![T::zero(); p.len().max(2)];
    out[0] = p[0];
    let ok = T::one() - per_pulse_error;
    for (n, &mass) in p.iter().enumerate().skip(1) {
        if n > n_max {
            out[n] = out[n] + mass;
            continue;
        }
        // pulses at n, n-1, ..., 2; survive k of them then fail or finish
        let mut survive = mass;
        for k in (2..=n).rev() {
            out[k] = out[k] + survive * per_pulse_error;
            survive = survive * ok;
        }
        out[1] = out[1] + survive;
    }
    Ok(OccupationDistribution::from_vec_unchecked(out))
}

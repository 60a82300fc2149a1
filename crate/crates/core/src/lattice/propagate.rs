use rayon::prelude::*;

use super::{LatticeField, MergeAxis, Payload};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::protocol::{filter_sweep, IterationMode, OutcomeTable};
use crate::thermo::OccupationDistribution;

/// Mass on two or more atoms tolerated before a merge rejects a site.
const BINARY_TOL: f64 = 1e-9;

/// Filtering applied to each site independently.
pub fn propagate_filter<T: Real>(field: &LatticeField<T>, n_max: usize, per_pulse_error: T) -> Result<LatticeField<T>> {
    let sites = field
        .analytic()?
        .par_iter()
        .map(|d| filter_sweep(d, n_max, per_pulse_error))
        .collect::<Result<Vec<_>>>()?;
    let reservoir = field.reservoir.clone();
    Ok(LatticeField { payload: Payload::Analytic(sites), reservoir, ..field.clone() })
}

fn binary_vacancies<T: Real>(sites: &[OccupationDistribution<T>]) -> Result<Vec<T>> {
    sites
        .iter()
        .enumerate()
        .map(|(idx, d)| {
            if d.multiple() > T::lit(BINARY_TOL) {
                Err(Error::Precondition(format!(
                    "site {idx} has multiple-occupation probability {}; filter before merging",
                    d.multiple()
                )))
            } else {
                Ok(d.vacancy())
            }
        })
        .collect()
}

fn binary_site<T: Real>(vacancy: T, floor: T) -> OccupationDistribution<T> {
    let v = vacancy.max(floor).min(T::one());
    OccupationDistribution::from_vec_unchecked(vec![v, T::one() - v])
}

/// One merge iteration on a filtered field.
///
/// Each target's new vacancy comes from enumerating the eight binary
/// configurations of (left, target, right) with the neighbors' own
/// vacancies. A positive `eps_floor` keeps every target's vacancy at or
/// above that value.
pub fn propagate_merge<T: Real>(
    field: &LatticeField<T>,
    axis: MergeAxis,
    mode: IterationMode,
    table: &OutcomeTable,
    eps_floor: T,
) -> Result<LatticeField<T>> {
    let vac = binary_vacancies(field.analytic()?)?;
    let reservoir = field.reservoir.clone().unwrap_or_else(|| vac.clone());
    let g = &field.geometry;
    let mut next_geometry = g.clone();

    let new_vac: Vec<T> = match axis {
        MergeAxis::Auxiliary => (0..vac.len())
            .map(|i| match mode {
                IterationMode::Parallel => table.merged_vacancy(vac[i], vac[i], vac[i]),
                IterationMode::Serial => table.merged_vacancy(reservoir[i], vac[i], reservoir[i]),
            })
            .collect(),
        MergeAxis::X | MergeAxis::Y => {
            let dim = if axis == MergeAxis::X { 0 } else { 1 };
            let step = g.stride[dim] as i64;
            if mode == IterationMode::Serial && step != 1 {
                return Err(Error::Precondition(
                    "serial in-plane merging needs the unpurified neighbors a parallel merge consumed".into(),
                ));
            }
            let neighbor = |idx: usize, sign: i64, source: &[T]| -> T {
                let (i, j) = g.coords(idx);
                let (ni, nj) = if dim == 0 { (i + sign * step, j) } else { (i, j + sign * step) };
                g.index(ni, nj).map_or(T::one(), |n| if g.is_active(n) { source[n] } else { T::one() })
            };
            let period = 3 * step;
            (0..vac.len())
                .map(|idx| {
                    if !g.is_active(idx) {
                        return T::one();
                    }
                    let (i, j) = g.coords(idx);
                    let along = if dim == 0 { i } else { j };
                    match mode {
                        IterationMode::Parallel if along.rem_euclid(period) == 0 => table.merged_vacancy(
                            neighbor(idx, -1, &vac),
                            vac[idx],
                            neighbor(idx, 1, &vac),
                        ),
                        IterationMode::Parallel => T::one(),
                        IterationMode::Serial => table.merged_vacancy(
                            neighbor(idx, -1, &reservoir),
                            vac[idx],
                            neighbor(idx, 1, &reservoir),
                        ),
                    }
                })
                .collect()
        }
    };
    if mode == IterationMode::Parallel && axis != MergeAxis::Auxiliary {
        let dim = if axis == MergeAxis::X { 0 } else { 1 };
        next_geometry.stride[dim] *= 3;
    }

    let sites = new_vac
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let floor = if next_geometry.is_active(idx) { eps_floor } else { T::zero() };
            binary_site(v, floor)
        })
        .collect();
    Ok(LatticeField {
        geometry: next_geometry,
        payload: Payload::Analytic(sites),
        reservoir: Some(reservoir),
        merges: field.merges + 1,
    })
}

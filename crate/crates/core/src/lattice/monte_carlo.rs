//! Seeded Monte Carlo realizations of a schedule.
//!
//! Every (site, batch) pair owns its own ChaCha stream, so results do not
//! depend on how rayon splits the work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Geometry, LatticeField, MergeAxis, Schedule, Step};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::oscillator::{InteractionMatrix, DEFAULT_NU_MAX};
use crate::protocol::{merge_protocol_noisy, IterationMode, MergeErrorModel, OutcomeTable};
use crate::thermo::OccupationDistribution;

const BATCH: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub realizations: u64,
    /// Realizations ending with exactly one atom, per site.
    pub unit_counts: Vec<u64>,
    pub p1: Vec<f64>,
    /// Binomial standard error of `p1`.
    pub stderr: Vec<f64>,
    pub mean_occupation: Vec<f64>,
}

fn stream_rng(seed: u64, site: usize, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((site as u64) << 32) | batch);
    rng
}

fn cdf<T: Real>(d: &OccupationDistribution<T>) -> Vec<f64> {
    let mut acc = 0.0;
    d.probs()
        .iter()
        .map(|p| {
            acc += p.as_f64();
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> u32 {
    let total = *cdf.last().expect("non-empty");
    let x = u * total;
    cdf.iter().position(|&c| x < c).unwrap_or(cdf.len() - 1) as u32
}

pub(super) fn sample_sites<T: Real>(sites: &[OccupationDistribution<T>], seed: u64) -> Vec<u32> {
    sites
        .par_iter()
        .enumerate()
        .map(|(i, d)| draw(&cdf(d), stream_rng(seed, i, 0).random()))
        .collect()
}

struct Sampler<'a, T> {
    cdfs: Vec<Vec<f64>>,
    geometry: &'a Geometry<T>,
    steps: &'a [Step<T>],
    stride_before: Vec<[usize; 2]>,
    reservoir_level: Option<usize>,
    per_pulse_error: f64,
    merge_errors: MergeErrorModel,
    table: OutcomeTable,
    matrix: InteractionMatrix<T>,
}

fn active(g: &Geometry<impl Real>, stride: [usize; 2], idx: usize) -> bool {
    let (i, j) = g.coords(idx);
    i.rem_euclid(stride[0] as i64) == 0 && j.rem_euclid(stride[1] as i64) == 0
}

impl<T: Real> Sampler<'_, T> {
    /// Occupation of site `idx` after the first `level` steps.
    fn sample<R: Rng>(&self, idx: usize, level: usize, rng: &mut R) -> Result<u32> {
        if level == 0 {
            return Ok(draw(&self.cdfs[idx], rng.random()));
        }
        match self.steps[level - 1] {
            Step::Filter { n_max } => {
                let n = self.sample(idx, level - 1, rng)?;
                if n < 2 || n as usize > n_max {
                    return Ok(n);
                }
                for k in (2..=n).rev() {
                    if self.per_pulse_error > 0.0 && rng.random::<f64>() < self.per_pulse_error {
                        return Ok(k);
                    }
                }
                Ok(1)
            }
            Step::Skim { r_cut_um } => {
                let limit = r_cut_um + (r_cut_um.abs() + self.geometry.spacing_um) * T::lit(1e-12);
                if self.geometry.radius_um(idx) > limit {
                    Ok(0)
                } else {
                    self.sample(idx, level - 1, rng)
                }
            }
            Step::Merge { axis, mode } => self.sample_merge(idx, level, axis, mode, rng),
        }
    }

    fn sample_merge<R: Rng>(&self, idx: usize, level: usize, axis: MergeAxis, mode: IterationMode, rng: &mut R) -> Result<u32> {
        let prev = level - 1;
        let res = self.reservoir_level.expect("merge present");
        let (l, m, r) = match axis {
            MergeAxis::Auxiliary => {
                let m = self.sample(idx, prev, rng)?;
                let side = if mode == IterationMode::Parallel { prev } else { res };
                (self.sample(idx, side, rng)?, m, self.sample(idx, side, rng)?)
            }
            MergeAxis::X | MergeAxis::Y => {
                let stride = self.stride_before[prev];
                if !active(self.geometry, stride, idx) {
                    return Ok(0);
                }
                let dim = if axis == MergeAxis::X { 0 } else { 1 };
                let step = stride[dim] as i64;
                let (i, j) = self.geometry.coords(idx);
                let along = if dim == 0 { i } else { j };
                if mode == IterationMode::Parallel && along.rem_euclid(3 * step) != 0 {
                    return Ok(0);
                }
                if mode == IterationMode::Serial && step != 1 {
                    return Err(Error::Precondition("serial in-plane merge after a parallel one".into()));
                }
                let side = if mode == IterationMode::Parallel { prev } else { res };
                let neighbor = |sign: i64, rng: &mut R| -> Result<u32> {
                    let (ni, nj) = if dim == 0 { (i + sign * step, j) } else { (i, j + sign * step) };
                    match self.geometry.index(ni, nj) {
                        Some(n) if active(self.geometry, stride, n) => self.sample(n, side, rng),
                        _ => Ok(0),
                    }
                };
                let l = neighbor(-1, rng)?;
                let m = self.sample(idx, prev, rng)?;
                let r = neighbor(1, rng)?;
                (l, m, r)
            }
        };
        if l > 1 || m > 1 || r > 1 {
            return Err(Error::Precondition(format!(
                "merge drew occupations ({l}, {m}, {r}); filter before merging"
            )));
        }
        let occ = [l as u8, m as u8, r as u8];
        if self.merge_errors == MergeErrorModel::IDEAL {
            Ok(self.table.success(occ) as u32)
        } else {
            let out = merge_protocol_noisy(occ, &self.matrix, &self.merge_errors, rng)?;
            Ok(out.middle_final.len() as u32)
        }
    }
}

/// Empirical per-site `P(1)` after running `schedule` on independent
/// realizations drawn from the analytic `field`.
pub fn monte_carlo_run<T: Real>(
    field: &LatticeField<T>,
    schedule: &Schedule<T>,
    seed: u64,
    n_realizations: u64,
) -> Result<MonteCarloReport> {
    if n_realizations == 0 {
        return Err(crate::error::invalid("n_realizations", "need at least one realization"));
    }
    let sites = field.analytic()?;
    let geometry = field.geometry();
    let mut stride = geometry.stride;
    let mut stride_before = Vec::with_capacity(schedule.steps().len());
    let mut reservoir_level = None;
    for (k, step) in schedule.steps().iter().enumerate() {
        stride_before.push(stride);
        if let Step::Merge { axis, mode } = *step {
            reservoir_level.get_or_insert(k);
            if mode == IterationMode::Parallel {
                match axis {
                    MergeAxis::X => stride[0] *= 3,
                    MergeAxis::Y => stride[1] *= 3,
                    MergeAxis::Auxiliary => {}
                }
            }
        }
    }
    let matrix = InteractionMatrix::<T>::compute(DEFAULT_NU_MAX, T::one())?;
    let sampler = Sampler {
        cdfs: sites.iter().map(cdf).collect(),
        geometry,
        steps: schedule.steps(),
        stride_before,
        reservoir_level,
        per_pulse_error: schedule.errors.per_pulse_error.as_f64(),
        merge_errors: schedule.errors.merge,
        table: OutcomeTable::compute(&matrix)?,
        matrix,
    };
    let levels = schedule.steps().len();
    let batches = n_realizations.div_ceil(BATCH);
    let work: Vec<(usize, u64)> = (0..sites.len()).flat_map(|s| (0..batches).map(move |b| (s, b))).collect();
    let partial = work
        .par_iter()
        .map(|&(site, batch)| {
            let mut rng = stream_rng(seed, site, batch);
            let n = BATCH.min(n_realizations - batch * BATCH);
            let (mut units, mut atoms) = (0u64, 0u64);
            for _ in 0..n {
                let occ = sampler.sample(site, levels, &mut rng)?;
                units += (occ == 1) as u64;
                atoms += occ as u64;
            }
            Ok((units, atoms))
        })
        .collect::<Result<Vec<_>>>()?;

    let nf = n_realizations as f64;
    let mut report = MonteCarloReport {
        realizations: n_realizations,
        unit_counts: Vec::with_capacity(sites.len()),
        p1: Vec::with_capacity(sites.len()),
        stderr: Vec::with_capacity(sites.len()),
        mean_occupation: Vec::with_capacity(sites.len()),
    };
    for chunk in partial.chunks(batches as usize) {
        let units: u64 = chunk.iter().map(|c| c.0).sum();
        let atoms: u64 = chunk.iter().map(|c| c.1).sum();
        let p = units as f64 / nf;
        report.unit_counts.push(units);
        report.p1.push(p);
        report.stderr.push((p * (1.0 - p) / nf).sqrt());
        report.mean_occupation.push(atoms as f64 / nf);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ScheduleErrors;

    fn merge_schedule(n: usize, mode: IterationMode) -> Schedule<f64> {
        let step = Step::Merge { axis: MergeAxis::Auxiliary, mode };
        Schedule::new(vec![step; n], ScheduleErrors::default()).unwrap()
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let f = LatticeField::homogeneous(OccupationDistribution::binary(0.2).unwrap(), 0.5, 1);
        let s = merge_schedule(1, IterationMode::Parallel);
        let a = monte_carlo_run(&f, &s, 42, 20_000).unwrap();
        let b = monte_carlo_run(&f, &s, 42, 20_000).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_run(&f, &s, 43, 20_000).unwrap();
        assert_ne!(a.unit_counts, c.unit_counts);
    }

    #[test]
    fn draw_covers_support() {
        let c = cdf(&OccupationDistribution::new(vec![0.25f64, 0.5, 0.25]).unwrap());
        assert_eq!(draw(&c, 0.0), 0);
        assert_eq!(draw(&c, 0.3), 1);
        assert_eq!(draw(&c, 0.9999), 2);
    }

    #[test]
    fn rejects_unfiltered_merge() {
        let f = LatticeField::homogeneous(OccupationDistribution::<f64>::delta(2, 3), 0.5, 0);
        assert!(monte_carlo_run(&f, &merge_schedule(1, IterationMode::Parallel), 1, 10).is_err());
        assert!(monte_carlo_run(&f, &merge_schedule(1, IterationMode::Parallel), 1, 0).is_err());
    }

    #[test]
    fn in_plane_consumed_sites_are_vacant() {
        let f = LatticeField::homogeneous(OccupationDistribution::<f64>::delta(1, 1), 0.5, 2);
        let step = Step::Merge { axis: MergeAxis::X, mode: IterationMode::Parallel };
        let s = Schedule::new(vec![step], ScheduleErrors::default()).unwrap();
        let r = monte_carlo_run(&f, &s, 3, 100).unwrap();
        let g = f.geometry();
        assert_eq!(r.p1[g.index(0, 0).unwrap()], 1.0);
        assert_eq!(r.p1[g.index(1, 0).unwrap()], 0.0);
        assert_eq!(r.p1[g.index(-1, 1).unwrap()], 0.0);
    }
}

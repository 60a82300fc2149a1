//! Inhomogeneous 2D lattice: thermal state in a harmonic trap, propagation of
//! per-site occupation distributions through filtering and merging, seeded
//! Monte Carlo realizations, and radial/overlap diagnostics.
//!
//! Sites sit on a square grid `(i, j) ∈ [-R, R]²` centered on the trap, so the
//! center is always a merge target.

mod monte_carlo;
mod profile;
mod propagate;
mod schedule;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::num::{compensated_sum, Real};
use crate::oscillator::{InteractionMatrix, DEFAULT_NU_MAX};
use crate::protocol::OutcomeTable;
use crate::thermo::{
    local_chemical_potential, occupation_distribution, radius_at_chemical_potential,
    OccupationDistribution, ThermalParams, TrapParams,
};

pub use monte_carlo::{monte_carlo_run, MonteCarloReport};
pub use profile::{
    entropy_peak_radius, infidelity_curve, local_stage, plateau_radius, radial_profile, site_radii, site_stages,
    InfidelityPoint, ProfileQuantity, ProfilePoint,
};
pub use propagate::{propagate_filter, propagate_merge};
pub use schedule::{MergeAxis, Schedule, ScheduleErrors, Step};

/// Shells further out than `μ_loc = −5 T` hold an atom with probability below
/// `e^{-5/T}`, negligible at every temperature used here.
const EDGE_MU_IN_T: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Geometry<T> {
    pub spacing_um: T,
    pub radius_sites: usize,
    /// Spacing, in sites, of the wells still active along x and y after
    /// in-plane merges.
    pub stride: [usize; 2],
}

impl<T: Real> Geometry<T> {
    pub fn new(spacing_um: T, radius_sites: usize) -> Self {
        Geometry { spacing_um, radius_sites, stride: [1, 1] }
    }

    pub fn side(&self) -> usize {
        2 * self.radius_sites + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self, idx: usize) -> (i64, i64) {
        let r = self.radius_sites as i64;
        let side = self.side();
        ((idx / side) as i64 - r, (idx % side) as i64 - r)
    }

    pub fn index(&self, i: i64, j: i64) -> Option<usize> {
        let r = self.radius_sites as i64;
        (i.abs() <= r && j.abs() <= r).then(|| ((i + r) as usize) * self.side() + (j + r) as usize)
    }

    pub fn center(&self) -> usize {
        self.index(0, 0).expect("center in grid")
    }

    pub fn radius_um(&self, idx: usize) -> T {
        let (i, j) = self.coords(idx);
        self.spacing_um * T::from_i64(i * i + j * j).expect("small integer").sqrt()
    }

    /// Whether the site still holds a well that takes part in merges.
    pub fn is_active(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        i.rem_euclid(self.stride[0] as i64) == 0 && j.rem_euclid(self.stride[1] as i64) == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Payload<T> {
    Analytic(Vec<OccupationDistribution<T>>),
    Sampled(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeField<T> {
    geometry: Geometry<T>,
    payload: Payload<T>,
    /// Vacancies of the unpurified wells serial merges draw from.
    reservoir: Option<Vec<T>>,
    merges: usize,
}

/// Smallest grid radius (in sites) covering every shell with `μ_loc > −5 T`.
pub fn required_grid_radius<T: Real>(thermal: &ThermalParams<T>, trap: &TrapParams<T>) -> usize {
    let edge = -T::lit(EDGE_MU_IN_T) * thermal.t_u;
    match radius_at_chemical_potential(edge, thermal.mu_u, trap) {
        Some(r) => (r / trap.spacing_um).ceil().to_usize().unwrap_or(usize::MAX),
        None => 0,
    }
}

/// Thermal state in the local density approximation: each site gets the
/// homogeneous distribution at its local chemical potential.
pub fn build_thermal_lattice<T: Real>(
    thermal: &ThermalParams<T>,
    trap: &TrapParams<T>,
    grid_radius_sites: usize,
) -> Result<LatticeField<T>> {
    let required = required_grid_radius(thermal, trap);
    if grid_radius_sites < required {
        return Err(Error::GridTooSmall { given: grid_radius_sites, required });
    }
    let geometry = Geometry::new(trap.spacing_um, grid_radius_sites);
    let sites = (0..geometry.len())
        .into_par_iter()
        .map(|idx| {
            let mu = local_chemical_potential(geometry.radius_um(idx), thermal.mu_u, trap);
            ThermalParams::new(mu, thermal.t_u, thermal.n_cap).map(|p| occupation_distribution(&p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeField { geometry, payload: Payload::Analytic(sites), reservoir: None, merges: 0 })
}

impl<T: Real> LatticeField<T> {
    /// Every site carries `dist`.
    pub fn homogeneous(dist: OccupationDistribution<T>, spacing_um: T, radius_sites: usize) -> Self {
        let geometry = Geometry::new(spacing_um, radius_sites);
        let sites = vec![dist; geometry.len()];
        LatticeField { geometry, payload: Payload::Analytic(sites), reservoir: None, merges: 0 }
    }

    /// Arbitrary per-site distributions, in site-index order.
    pub fn from_sites(sites: Vec<OccupationDistribution<T>>, spacing_um: T, radius_sites: usize) -> Result<Self> {
        let geometry = Geometry::new(spacing_um, radius_sites);
        if sites.len() != geometry.len() {
            return Err(invalid("sites", format!("expected {} sites, got {}", geometry.len(), sites.len())));
        }
        Ok(LatticeField { geometry, payload: Payload::Analytic(sites), reservoir: None, merges: 0 })
    }

    pub fn geometry(&self) -> &Geometry<T> {
        &self.geometry
    }

    pub fn payload(&self) -> &Payload<T> {
        &self.payload
    }

    pub fn merges(&self) -> usize {
        self.merges
    }

    pub fn len(&self) -> usize {
        self.geometry.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub(crate) fn analytic(&self) -> Result<&[OccupationDistribution<T>]> {
        match &self.payload {
            Payload::Analytic(s) => Ok(s),
            Payload::Sampled(_) => Err(Error::Precondition("operation needs an analytic field".into())),
        }
    }

    pub fn site(&self, idx: usize) -> Result<&OccupationDistribution<T>> {
        Ok(&self.analytic()?[idx])
    }

    pub fn site_at(&self, i: i64, j: i64) -> Option<&OccupationDistribution<T>> {
        let idx = self.geometry.index(i, j)?;
        self.analytic().ok().map(|s| &s[idx])
    }

    /// Per-site `P(1)` (analytic) or unit-occupation indicator (sampled).
    pub fn unit_probabilities(&self) -> Vec<T> {
        match &self.payload {
            Payload::Analytic(s) => s.iter().map(|d| d.unit()).collect(),
            Payload::Sampled(n) => n.iter().map(|&n| if n == 1 { T::one() } else { T::zero() }).collect(),
        }
    }

    /// Expected (analytic) or actual (sampled) atom number.
    pub fn total_atoms(&self) -> T {
        match &self.payload {
            Payload::Analytic(s) => compensated_sum(s.iter().map(|d| d.mean_occupation())),
            Payload::Sampled(n) => T::from_u64(n.iter().map(|&n| n as u64).sum()).expect("count"),
        }
    }

    /// Empties every site strictly beyond `r_cut_um`.
    pub fn skim(&self, r_cut_um: T) -> LatticeField<T> {
        let g = &self.geometry;
        // closed boundary, with slack for the sqrt in the site radius
        let limit = r_cut_um + (r_cut_um.abs() + g.spacing_um) * T::lit(1e-12);
        let keep = |idx: usize| g.radius_um(idx) <= limit;
        let payload = match &self.payload {
            Payload::Analytic(s) => Payload::Analytic(
                s.iter()
                    .enumerate()
                    .map(|(i, d)| if keep(i) { d.clone() } else { OccupationDistribution::delta(0, d.n_cap()) })
                    .collect(),
            ),
            Payload::Sampled(n) => {
                Payload::Sampled(n.iter().enumerate().map(|(i, &n)| if keep(i) { n } else { 0 }).collect())
            }
        };
        LatticeField { payload, ..self.clone() }
    }

    /// One realization with every site drawn independently from its
    /// distribution.
    pub fn sample(&self, seed: u64) -> Result<LatticeField<T>> {
        let sites = self.analytic()?;
        let occ = monte_carlo::sample_sites(sites, seed);
        Ok(LatticeField { payload: Payload::Sampled(occ), ..self.clone() })
    }

    /// Plain-text dump: a `#` header with the geometry, then one line per site
    /// `i j r_um payload...`.
    pub fn snapshot(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        let kind = match self.payload {
            Payload::Analytic(_) => "analytic",
            Payload::Sampled(_) => "sampled",
        };
        let _ = writeln!(out, "# lattice snapshot v1");
        let _ = writeln!(
            out,
            "# mode={kind} spacing_um={:.12e} radius_sites={} stride={},{} merges={}",
            g.spacing_um.as_f64(),
            g.radius_sites,
            g.stride[0],
            g.stride[1],
            self.merges
        );
        match &self.payload {
            Payload::Analytic(s) => {
                let _ = writeln!(out, "# columns: i j r_um p(0) p(1) ... p(n_cap)");
                for (idx, d) in s.iter().enumerate() {
                    let (i, j) = g.coords(idx);
                    let _ = write!(out, "{i} {j} {:.12e}", g.radius_um(idx).as_f64());
                    for p in d.probs() {
                        let _ = write!(out, " {:.12e}", p.as_f64());
                    }
                    out.push('\n');
                }
            }
            Payload::Sampled(n) => {
                let _ = writeln!(out, "# columns: i j r_um n");
                for (idx, n) in n.iter().enumerate() {
                    let (i, j) = g.coords(idx);
                    let _ = writeln!(out, "{i} {j} {:.12e} {n}", g.radius_um(idx).as_f64());
                }
            }
        }
        out
    }

    /// Applies every step in order; returns the field after each step.
    pub fn run(&self, schedule: &Schedule<T>) -> Result<Vec<LatticeField<T>>> {
        let matrix = InteractionMatrix::<T>::compute(DEFAULT_NU_MAX, T::one())?;
        self.run_with(schedule, &OutcomeTable::compute(&matrix)?)
    }

    /// [`run`](Self::run) with a precomputed merge outcome table.
    pub fn run_with(&self, schedule: &Schedule<T>, table: &OutcomeTable) -> Result<Vec<LatticeField<T>>> {
        let mut stages = Vec::with_capacity(schedule.steps().len());
        let mut cur = self.clone();
        for step in schedule.steps() {
            cur = match *step {
                Step::Filter { n_max } => propagate_filter(&cur, n_max, schedule.errors.per_pulse_error)?,
                Step::Merge { axis, mode } => propagate_merge(&cur, axis, mode, table, schedule.errors.eps_floor)?,
                Step::Skim { r_cut_um } => cur.skim(r_cut_um),
            };
            stages.push(cur.clone());
        }
        Ok(stages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_indexing() {
        let g = Geometry::new(0.5f64, 3);
        assert_eq!(g.len(), 49);
        for idx in 0..g.len() {
            let (i, j) = g.coords(idx);
            assert_eq!(g.index(i, j), Some(idx));
        }
        assert_eq!(g.coords(g.center()), (0, 0));
        assert_eq!(g.index(4, 0), None);
        assert_eq!(g.radius_um(g.index(3, 0).unwrap()), 1.5);
    }

    #[test]
    fn grid_too_small_suggests_radius() {
        let th = ThermalParams::with_default_cap(0.5, 0.2).unwrap();
        let trap = TrapParams::rubidium87();
        let need = required_grid_radius(&th, &trap);
        assert!(need > 8);
        assert_eq!(
            build_thermal_lattice(&th, &trap, need - 1),
            Err(Error::GridTooSmall { given: need - 1, required: need })
        );
        assert!(build_thermal_lattice(&th, &trap, need).is_ok());
    }

    #[test]
    fn center_matches_homogeneous() {
        let th = ThermalParams::with_default_cap(0.5, 0.2).unwrap();
        let trap = TrapParams::rubidium87();
        let f = build_thermal_lattice(&th, &trap, 20).unwrap();
        assert_eq!(f.site_at(0, 0).unwrap(), &occupation_distribution(&th));
    }

    #[test]
    fn rotational_symmetry() {
        let th = ThermalParams::with_default_cap(0.5, 0.2).unwrap();
        let f = build_thermal_lattice(&th, &TrapParams::rubidium87(), 20).unwrap();
        let a = f.site_at(3, 4).unwrap();
        for (i, j) in [(4, 3), (-3, 4), (5, 0), (0, -5), (-4, -3)] {
            assert_eq!(f.site_at(i, j).unwrap(), a);
        }
    }

    #[test]
    fn skim_boundaries() {
        let d = OccupationDistribution::<f64>::delta(1, 3);
        let f = LatticeField::homogeneous(d, 0.5, 4);
        let s = f.skim(0.0);
        assert_eq!(s.total_atoms(), 1.0);
        assert_eq!(f.skim(f64::INFINITY), f);
        // (2,0) sits exactly at 1.0 μm and is kept
        let s = f.skim(1.0);
        assert_eq!(s.site_at(2, 0).unwrap().unit(), 1.0);
        assert_eq!(s.site_at(2, 1).unwrap().unit(), 0.0);
        assert_eq!(s.skim(1.0), s);
    }

    #[test]
    fn snapshot_lists_every_site() {
        let f = LatticeField::homogeneous(OccupationDistribution::<f64>::binary(0.25).unwrap(), 0.5, 2);
        let snap = f.snapshot();
        let body: Vec<_> = snap.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 25);
        assert!(body.contains(&"0 0 0.000000000000e0 2.500000000000e-1 7.500000000000e-1"));
        let sampled = f.sample(7).unwrap().snapshot();
        assert!(sampled.contains("mode=sampled"));
    }
}

use serde::Serialize;

use super::{LatticeField, Schedule};
use crate::error::{invalid, Result};
use crate::num::Real;
use crate::protocol::OutcomeTable;
use crate::num::bisect;
use crate::thermo::{
    defect_probability, local_chemical_potential, occupation_distribution, overlap_infidelity, site_entropy,
    EntropyMode, OccupationDistribution, ThermalParams, TrapParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileQuantity {
    P1,
    /// Binary (`n ∈ {0,1}`) entropy in nats.
    Entropy,
    Defect,
}

impl ProfileQuantity {
    pub fn of<T: Real>(self, d: &OccupationDistribution<T>) -> T {
        match self {
            ProfileQuantity::P1 => d.unit(),
            ProfileQuantity::Entropy => site_entropy(d, EntropyMode::Binary),
            ProfileQuantity::Defect => defect_probability(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint<T> {
    /// Mean radius of the sites in the bin.
    pub r_um: T,
    pub value: T,
    pub sites: usize,
}

/// Site average of `quantity` in radial bins `[k w, (k+1) w)`.
pub fn radial_profile<T: Real>(
    field: &LatticeField<T>,
    quantity: ProfileQuantity,
    bin_width_um: T,
) -> Result<Vec<ProfilePoint<T>>> {
    if !(bin_width_um > T::zero()) {
        return Err(invalid("bin_width_um", "must be positive"));
    }
    let sites = field.analytic()?;
    let g = field.geometry();
    let mut bins: Vec<(T, T, usize)> = Vec::new();
    for (idx, d) in sites.iter().enumerate() {
        let r = g.radius_um(idx);
        let k = (r / bin_width_um).floor().to_usize().expect("finite radius");
        if bins.len() <= k {
            bins.resize(k + 1, (T::zero(), T::zero(), 0));
        }
        let b = &mut bins[k];
        b.0 = b.0 + r;
        b.1 = b.1 + quantity.of(d);
        b.2 += 1;
    }
    Ok(bins
        .into_iter()
        .filter(|b| b.2 > 0)
        .map(|(r, v, n)| {
            let nf = T::from_usize_lossy(n);
            ProfilePoint { r_um: r / nf, value: v / nf, sites: n }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfidelityPoint<T> {
    pub r_cut_um: T,
    pub n_sites: usize,
    pub infidelity: T,
}

/// `1 − Π P_i(1)` over the sites within each cut radius (boundary closed).
pub fn infidelity_curve<T: Real>(field: &LatticeField<T>, r_cuts_um: &[T]) -> Result<Vec<InfidelityPoint<T>>> {
    let p1 = field.unit_probabilities();
    let g = field.geometry();
    let radii: Vec<T> = (0..p1.len()).map(|i| g.radius_um(i)).collect();
    r_cuts_um
        .iter()
        .map(|&r_cut| {
            let limit = r_cut + (r_cut.abs() + g.spacing_um) * T::lit(1e-12);
            let (n_sites, infidelity) = overlap_infidelity(&p1, |i| radii[i] <= limit)?;
            Ok(InfidelityPoint { r_cut_um: r_cut, n_sites, infidelity })
        })
        .collect()
}

/// Distinct site radii of the field, ascending.
pub fn site_radii<T: Real>(field: &LatticeField<T>) -> Vec<T> {
    let g = field.geometry();
    let mut sq: Vec<i64> = (0..g.len())
        .map(|i| {
            let (a, b) = g.coords(i);
            a * a + b * b
        })
        .collect();
    sq.sort_unstable();
    sq.dedup();
    sq.into_iter().map(|s| g.spacing_um * T::from_i64(s).expect("small").sqrt()).collect()
}

/// Largest radius such that every site at or inside it has
/// `P(1) ≥ min_p1`; `None` when even the center fails.
pub fn plateau_radius<T: Real>(field: &LatticeField<T>, min_p1: T) -> Option<T> {
    let p1 = field.unit_probabilities();
    let g = field.geometry();
    let mut by_r: Vec<(i64, T)> = (0..p1.len())
        .map(|i| {
            let (a, b) = g.coords(i);
            (a * a + b * b, p1[i])
        })
        .collect();
    by_r.sort_by_key(|&(r2, _)| r2);
    let mut best: Option<i64> = None;
    let mut k = 0;
    while k < by_r.len() {
        let r2 = by_r[k].0;
        let mut shell_ok = true;
        while k < by_r.len() && by_r[k].0 == r2 {
            shell_ok &= by_r[k].1 >= min_p1;
            k += 1;
        }
        if !shell_ok {
            break;
        }
        best = Some(r2);
    }
    best.map(|r2| g.spacing_um * T::from_i64(r2).expect("small").sqrt())
}

/// Stage-by-stage distributions of a single isolated site, i.e. a point of
/// the local-density profile. Equivalent to the lattice engine for
/// auxiliary-axis merges.
pub fn site_stages<T: Real>(
    initial: &OccupationDistribution<T>,
    schedule: &Schedule<T>,
    table: &OutcomeTable,
) -> Result<Vec<OccupationDistribution<T>>> {
    let field = LatticeField::homogeneous(initial.clone(), T::one(), 0);
    field
        .run_with(schedule, table)?
        .into_iter()
        .map(|f| f.site(0).cloned())
        .collect()
}

/// Local-density distribution at radius `r_um` after the first `stage`
/// schedule steps (`0` is the thermal state).
pub fn local_stage<T: Real>(
    r_um: T,
    thermal: &ThermalParams<T>,
    trap: &TrapParams<T>,
    schedule: &Schedule<T>,
    stage: usize,
    table: &OutcomeTable,
) -> Result<OccupationDistribution<T>> {
    let mu = local_chemical_potential(r_um, thermal.mu_u, trap);
    let initial = occupation_distribution(&ThermalParams::new(mu, thermal.t_u, thermal.n_cap)?);
    if stage == 0 {
        return Ok(initial);
    }
    let mut stages = site_stages(&initial, &schedule.prefix(stage), table)?;
    Ok(stages.pop().expect("non-empty prefix"))
}

/// Radius where `p0 = p1` in the continuous local-density profile of one
/// stage, which is where the binary entropy peaks; `None` without a
/// crossing in `[0, r_max_um]`.
pub fn entropy_peak_radius<T: Real>(
    thermal: &ThermalParams<T>,
    trap: &TrapParams<T>,
    schedule: &Schedule<T>,
    stage: usize,
    r_max_um: T,
    table: &OutcomeTable,
) -> Result<Option<T>> {
    let gap = |r: T| -> Result<T> {
        let d = local_stage(r, thermal, trap, schedule, stage, table)?;
        Ok(d.prob(0) - d.prob(1))
    };
    gap(T::zero())?;
    gap(r_max_um)?;
    let f = |r: T| gap(r).unwrap_or_else(|_| T::nan());
    Ok(bisect(f, T::zero(), r_max_um, T::lit(1e-12)))
}

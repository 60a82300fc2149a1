//! Zero-tunneling grand-canonical statistics of a Mott insulator, local
//! density approximation in a harmonic trap, and many-body overlap.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::num::{compensated_sum, Real};

/// Planck constant (J s), exact SI value.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

pub const DEFAULT_N_CAP: usize = 10;
const TAIL_TOL: f64 = 1e-12;
const N_CAP_LIMIT: usize = 4096;

/// Dimensionless chemical potential `μ/U` and temperature `k_B T/U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams<T> {
    pub mu_u: T,
    pub t_u: T,
    pub n_cap: usize,
}

impl<T: Real> ThermalParams<T> {
    /// Validates and raises `n_cap` until the top retained occupation has
    /// probability below `1e-12`.
    pub fn new(mu_u: T, t_u: T, n_cap: usize) -> Result<Self> {
        if !(t_u > T::zero()) || !t_u.is_finite() {
            return Err(invalid("t_u", format!("must be positive and finite, got {t_u}")));
        }
        if !mu_u.is_finite() {
            return Err(invalid("mu_u", "must be finite"));
        }
        if n_cap < 2 {
            return Err(invalid("n_cap", format!("must be at least 2, got {n_cap}")));
        }
        let mut params = ThermalParams { mu_u, t_u, n_cap };
        loop {
            let p = boltzmann_weights(&params);
            if p[params.n_cap] < T::lit(TAIL_TOL) && params.n_cap as f64 > mu_u.as_f64() + 0.5 {
                return Ok(params);
            }
            if params.n_cap >= N_CAP_LIMIT {
                return Err(invalid("mu_u", "occupation does not converge below the n_cap limit"));
            }
            params.n_cap += 1;
        }
    }

    pub fn with_default_cap(mu_u: T, t_u: T) -> Result<Self> {
        Self::new(mu_u, t_u, DEFAULT_N_CAP)
    }
}

/// Probability mass over site occupations `n = 0..=n_cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationDistribution<T> {
    p: Vec<T>,
}

impl<T: Real> OccupationDistribution<T> {
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(invalid("p", "empty distribution"));
        }
        if let Some(bad) = p.iter().find(|&&x| !(x >= T::zero() && x <= T::one())) {
            return Err(invalid("p", format!("entry {bad} outside [0, 1]")));
        }
        let total = compensated_sum(p.iter().copied());
        if (total - T::one()).abs() > T::norm_tol() {
            return Err(invalid("p", format!("sums to {total}")));
        }
        Ok(OccupationDistribution { p })
    }

    pub(crate) fn from_vec_unchecked(p: Vec<T>) -> Self {
        OccupationDistribution { p }
    }

    /// All mass on occupation `n`, retained up to `n_cap`.
    pub fn delta(n: usize, n_cap: usize) -> Self {
        let mut p = vec![T::zero(); n_cap.max(n) + 1];
        p[n] = T::one();
        OccupationDistribution { p }
    }

    /// `{0: vacancy, 1: 1 - vacancy}`.
    pub fn binary(vacancy: T) -> Result<Self> {
        Self::new(vec![vacancy, T::one() - vacancy])
    }

    pub fn probs(&self) -> &[T] {
        &self.p
    }

    pub fn n_cap(&self) -> usize {
        self.p.len() - 1
    }

    pub fn prob(&self, n: usize) -> T {
        self.p.get(n).copied().unwrap_or_else(T::zero)
    }

    pub fn vacancy(&self) -> T {
        self.p[0]
    }

    pub fn unit(&self) -> T {
        self.prob(1)
    }

    /// Mass on occupations above one.
    pub fn multiple(&self) -> T {
        compensated_sum(self.p.iter().skip(2).copied())
    }

    pub fn mean_occupation(&self) -> T {
        compensated_sum(self.p.iter().enumerate().map(|(n, &p)| T::from_usize_lossy(n) * p))
    }

    pub fn total(&self) -> T {
        compensated_sum(self.p.iter().copied())
    }
}

fn exponents<T: Real>(params: &ThermalParams<T>) -> Vec<T> {
    (0..=params.n_cap)
        .map(|n| {
            let nf = T::from_usize_lossy(n);
            (params.mu_u * nf - nf * (nf - T::one()) / T::lit(2.0)) / params.t_u
        })
        .collect()
}

fn boltzmann_weights<T: Real>(params: &ThermalParams<T>) -> Vec<T> {
    let ex = exponents(params);
    let top = ex.iter().copied().fold(T::neg_infinity(), T::max);
    let w: Vec<T> = ex.iter().map(|&e| (e - top).exp()).collect();
    let z = compensated_sum(w.iter().copied());
    w.into_iter().map(|x| x / z).collect()
}

/// Grand-canonical occupation distribution at zero tunneling.
pub fn occupation_distribution<T: Real>(params: &ThermalParams<T>) -> OccupationDistribution<T> {
    OccupationDistribution::from_vec_unchecked(boltzmann_weights(params))
}

/// Probability of anything other than exactly one atom.
pub fn defect_probability<T: Real>(dist: &OccupationDistribution<T>) -> T {
    T::one() - dist.unit()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMode {
    /// `n ∈ {0, 1}` only.
    Binary,
    /// All retained occupations.
    Full,
}

/// Per-site entropy in nats.
pub fn site_entropy<T: Real>(dist: &OccupationDistribution<T>, mode: EntropyMode) -> T {
    let take = match mode {
        EntropyMode::Binary => 2,
        EntropyMode::Full => dist.p.len(),
    };
    -dist
        .p
        .iter()
        .take(take)
        .filter(|&&p| p > T::zero())
        .map(|&p| p * p.ln())
        .sum::<T>()
}

/// Harmonic trap and lattice geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams<T> {
    pub omega_trap_hz: T,
    pub u_int_hz: T,
    pub mass_kg: T,
    pub spacing_um: T,
}

impl<T: Real> TrapParams<T> {
    pub fn new(omega_trap_hz: T, u_int_hz: T, mass_kg: T, spacing_um: T) -> Result<Self> {
        for (name, v) in [
            ("omega_trap_hz", omega_trap_hz),
            ("u_int_hz", u_int_hz),
            ("mass_kg", mass_kg),
            ("spacing_um", spacing_um),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(TrapParams { omega_trap_hz, u_int_hz, mass_kg, spacing_um })
    }

    /// 87Rb in an 80 Hz trap, 1 kHz interaction, 0.5 μm spacing.
    pub fn rubidium87() -> Self {
        TrapParams {
            omega_trap_hz: T::lit(80.0),
            u_int_hz: T::lit(1000.0),
            mass_kg: T::lit(87.0 * ATOMIC_MASS_UNIT),
            spacing_um: T::lit(0.5),
        }
    }

    /// `½ m ω²` per μm², in units of `U_int`.
    pub fn curvature_u_per_um2(&self) -> T {
        let omega = T::lit(2.0) * T::PI() * self.omega_trap_hz;
        let joule_per_um2 = T::lit(0.5) * self.mass_kg * omega * omega * T::lit(1e-12);
        joule_per_um2 / (T::lit(PLANCK) * self.u_int_hz)
    }
}

/// `μ_loc(r)/U_int = μ₀/U_int − V_harm(r)/U_int`.
pub fn local_chemical_potential<T: Real>(r_um: T, mu0_u: T, trap: &TrapParams<T>) -> T {
    mu0_u - trap.curvature_u_per_um2() * r_um * r_um
}

/// Radius (μm) where the local chemical potential equals `mu_target`.
pub fn radius_at_chemical_potential<T: Real>(
    mu_target: T,
    mu0_u: T,
    trap: &TrapParams<T>,
) -> Option<T> {
    let d = mu0_u - mu_target;
    (d >= T::zero()).then(|| (d / trap.curvature_u_per_um2()).sqrt())
}

/// Number of selected sites and `1 − Π P_i(1)` over them, accumulated in log
/// space.
pub fn overlap_infidelity<T: Real, F: Fn(usize) -> bool>(
    p1_by_site: &[T],
    selector: F,
) -> Result<(usize, T)> {
    let mut count = 0;
    let mut log_ol = T::zero();
    let mut zero = false;
    for (i, &p) in p1_by_site.iter().enumerate() {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidParameter { name: "p1_by_site", reason: format!("P(1) = {p} at site {i}") });
        }
        if !selector(i) {
            continue;
        }
        count += 1;
        if p == T::zero() {
            zero = true;
        } else {
            log_ol = log_ol + (p - T::one()).ln_1p();
        }
    }
    let infidelity = if zero { T::one() } else { -log_ol.exp_m1() };
    Ok((count, infidelity))
}

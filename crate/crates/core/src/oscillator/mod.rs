//! Harmonic-oscillator overlaps and the interaction energies of well
//! configurations.
//!
//! All lengths are in units of the oscillator length along the excitation
//! direction. Only that direction is excited, so transverse factors cancel in
//! every ratio to `U_00`.

pub mod exact;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::well::{Atom, Hyperfine, Statistics, VibLevel, WellConfig, DEFAULT_WELL_CAP};

/// Highest vibrational level kept by default.
pub const DEFAULT_NU_MAX: u8 = 4;

const GRID_HALF_WIDTH: f64 = 12.0;
const GRID_INTERVALS: usize = 4000;
const CONVERGENCE_TOL: f64 = 1e-10;

/// Values of the normalized 1D oscillator eigenfunctions `ψ_0..=ψ_nu_max` at `x`.
pub fn wavefunctions<T: Real>(x: T, nu_max: u8) -> Vec<T> {
    let mut out = Vec::with_capacity(nu_max as usize + 1);
    let psi0 = T::PI().powf(T::lit(-0.25)) * (-(x * x) / T::lit(2.0)).exp();
    out.push(psi0);
    if nu_max == 0 {
        return out;
    }
    out.push(T::lit(2.0).sqrt() * x * psi0);
    for n in 1..nu_max as usize {
        let nf = T::from_usize_lossy(n);
        let next = (T::lit(2.0) / (nf + T::one())).sqrt() * x * out[n]
            - (nf / (nf + T::one())).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `|ψ_ν(x)|²` with the default level cap.
pub fn wavefunction_density<T: Real>(nu: VibLevel, x: T) -> Result<T> {
    wavefunction_density_capped(nu, x, DEFAULT_NU_MAX)
}

pub fn wavefunction_density_capped<T: Real>(nu: VibLevel, x: T, nu_max: u8) -> Result<T> {
    if nu.0 > nu_max {
        return Err(Error::LevelOutOfRange { nu: nu.0, nu_max });
    }
    let psi = wavefunctions(x, nu.0)[nu.index()];
    Ok(psi * psi)
}

/// Composite Simpson rule on a fixed symmetric grid.
#[derive(Debug, Clone)]
pub struct QuadratureGrid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn simpson(half_width: T, intervals: usize) -> Self {
        assert!(intervals >= 2 && intervals.is_multiple_of(2), "Simpson needs an even interval count");
        let h = T::lit(2.0) * half_width / T::from_usize_lossy(intervals);
        let third = h / T::lit(3.0);
        let nodes = (0..=intervals).map(|i| -half_width + h * T::from_usize_lossy(i)).collect();
        let weights = (0..=intervals)
            .map(|i| {
                if i == 0 || i == intervals {
                    third
                } else if i % 2 == 1 {
                    third * T::lit(4.0)
                } else {
                    third * T::lit(2.0)
                }
            })
            .collect();
        QuadratureGrid { nodes, weights }
    }

    /// Default grid: `[-12, 12]` with 4000 Simpson intervals.
    pub fn standard() -> Self {
        Self::simpson(T::lit(GRID_HALF_WIDTH), GRID_INTERVALS)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Tabulates `|ψ_n|²` at every node.
    fn densities(&self, nu_max: u8) -> Vec<Vec<T>> {
        let mut table = vec![Vec::with_capacity(self.len()); nu_max as usize + 1];
        for &x in &self.nodes {
            for (n, psi) in wavefunctions(x, nu_max).into_iter().enumerate() {
                table[n].push(psi * psi);
            }
        }
        table
    }

    fn overlap(&self, a: &[T], b: &[T]) -> T {
        a.iter().zip(b).zip(&self.weights).map(|((&p, &q), &w)| w * p * q).sum()
    }
}

fn exchange_factor<T: Real>(nu: usize, mu: usize) -> T {
    if nu == mu {
        T::one()
    } else {
        T::lit(2.0)
    }
}

/// `U_νμ / U_00` by quadrature on the standard grid.
pub fn relative_interaction<T: Real>(nu: VibLevel, mu: VibLevel) -> Result<T> {
    let top = nu.0.max(mu.0);
    if top > DEFAULT_NU_MAX {
        return Err(Error::LevelOutOfRange { nu: top, nu_max: DEFAULT_NU_MAX });
    }
    let m = InteractionMatrix::<T>::compute(top, T::one())?;
    m.get(nu, mu)
}

/// Symmetric table of `U_νμ / U_00`, plus the energy scale `U_00 / h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionMatrix<T> {
    size: usize,
    entries: Vec<T>,
    u00_hz: T,
    /// Multiplier for pairs in different hyperfine states.
    alpha_beta_factor: T,
}

impl<T: Real> InteractionMatrix<T> {
    /// Quadrature on the standard grid, checked against a half-resolution
    /// pass.
    pub fn compute(nu_max: u8, u00_hz: T) -> Result<Self> {
        let fine = QuadratureGrid::<T>::standard();
        let coarse = QuadratureGrid::<T>::simpson(T::lit(GRID_HALF_WIDTH), GRID_INTERVALS / 2);
        let fine_rho = fine.densities(nu_max);
        let coarse_rho = coarse.densities(nu_max);
        let fine_ref = fine.overlap(&fine_rho[0], &fine_rho[0]);
        let coarse_ref = coarse.overlap(&coarse_rho[0], &coarse_rho[0]);

        let size = nu_max as usize + 1;
        let mut entries = vec![T::zero(); size * size];
        let tol = T::lit(CONVERGENCE_TOL).max(T::epsilon() * T::lit(1e3));
        for nu in 0..size {
            for mu in nu..size {
                let x = exchange_factor::<T>(nu, mu);
                let value = x * fine.overlap(&fine_rho[nu], &fine_rho[mu]) / fine_ref;
                let check = x * coarse.overlap(&coarse_rho[nu], &coarse_rho[mu]) / coarse_ref;
                if !value.is_finite() || (value - check).abs() > tol {
                    return Err(Error::Quadrature(format!(
                        "U[{nu}][{mu}] fine {value} vs coarse {check}"
                    )));
                }
                entries[nu * size + mu] = value;
                entries[mu * size + nu] = value;
            }
        }
        Self::from_entries(size, entries, u00_hz)
    }

    /// Same table from the exact rational moments.
    pub fn closed_form(nu_max: u8, u00_hz: T) -> Result<Self> {
        let size = nu_max as usize + 1;
        let mut entries = Vec::with_capacity(size * size);
        for nu in 0..size {
            for mu in 0..size {
                let r = exact::relative_interaction_exact(nu, mu);
                let v = r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap();
                entries.push(T::lit(v));
            }
        }
        Self::from_entries(size, entries, u00_hz)
    }

    fn from_entries(size: usize, entries: Vec<T>, u00_hz: T) -> Result<Self> {
        if !(u00_hz > T::zero()) {
            return Err(crate::error::invalid("u00_hz", "must be positive"));
        }
        let m = InteractionMatrix { size, entries, u00_hz, alpha_beta_factor: T::one() };
        debug_assert!(m.get_idx(0, 0) == T::one());
        Ok(m)
    }

    pub fn with_alpha_beta_factor(mut self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) {
            return Err(crate::error::invalid("alpha_beta_factor", "must be positive"));
        }
        self.alpha_beta_factor = factor;
        Ok(self)
    }

    pub fn nu_max(&self) -> u8 {
        (self.size - 1) as u8
    }

    pub fn u00_hz(&self) -> T {
        self.u00_hz
    }

    pub fn alpha_beta_factor(&self) -> T {
        self.alpha_beta_factor
    }

    fn get_idx(&self, nu: usize, mu: usize) -> T {
        self.entries[nu * self.size + mu]
    }

    pub fn get(&self, nu: VibLevel, mu: VibLevel) -> Result<T> {
        let top = nu.0.max(mu.0);
        if top as usize >= self.size {
            return Err(Error::LevelOutOfRange { nu: top, nu_max: self.nu_max() });
        }
        Ok(self.get_idx(nu.index(), mu.index()))
    }

    /// Interaction of one atom pair in `U_00` units.
    pub fn pair(&self, a: Atom, b: Atom) -> Result<T> {
        let u = self.get(a.level, b.level)?;
        Ok(if a.hyperfine != b.hyperfine { u * self.alpha_beta_factor } else { u })
    }

    /// Rows as nested vectors, for reporting.
    pub fn rows(&self) -> Vec<Vec<T>> {
        self.entries.chunks(self.size).map(|c| c.to_vec()).collect()
    }
}

/// Sum of pair interactions over all unordered atom pairs, in `U_00` units.
pub fn config_energy<T: Real>(config: &WellConfig, matrix: &InteractionMatrix<T>) -> Result<T> {
    let atoms = config.atoms();
    let mut e = T::zero();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            e = e + matrix.pair(atoms[i], atoms[j])?;
        }
    }
    Ok(e)
}

/// Interaction-energy shift of the transition `initial -> final`.
pub fn transition_detuning<T: Real>(
    initial: &WellConfig,
    final_: &WellConfig,
    matrix: &InteractionMatrix<T>,
) -> Result<T> {
    if initial.len() != final_.len() {
        return Err(Error::AtomCountMismatch { initial: initial.len(), final_: final_.len() });
    }
    Ok(config_energy(final_, matrix)? - config_energy(initial, matrix)?)
}

/// Energy shift of the `n`-atom filtering transition
/// `n x (alpha,0) -> (n-1) x (alpha,0) + (beta,2)`.
pub fn filter_detuning<T: Real>(n: usize, matrix: &InteractionMatrix<T>) -> Result<T> {
    let initial = WellConfig::with_rules(
        std::iter::repeat_n(Atom::alpha(0), n),
        Statistics::Bosonic,
        n.max(DEFAULT_WELL_CAP),
    )?;
    let final_ = initial
        .with_transfer(Atom::alpha(0), Atom::new(Hyperfine::Beta, 2))
        .ok_or_else(|| Error::Precondition("filter transition needs at least one atom".into()))?;
    transition_detuning(&initial, &final_, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m() -> InteractionMatrix<f64> {
        InteractionMatrix::compute(DEFAULT_NU_MAX, 1000.0).unwrap()
    }

    fn w(atoms: &[Atom]) -> WellConfig {
        WellConfig::new(atoms.iter().copied()).unwrap()
    }

    #[test]
    fn density_values() {
        let d0: f64 = wavefunction_density(VibLevel(0), 0.0).unwrap();
        assert_abs_diff_eq!(d0, 1.0 / std::f64::consts::PI.sqrt(), epsilon = 1e-15);
        let d1: f64 = wavefunction_density(VibLevel(1), 0.0).unwrap();
        assert_eq!(d1, 0.0);
        assert_eq!(
            wavefunction_density::<f64>(VibLevel(5), 0.0),
            Err(Error::LevelOutOfRange { nu: 5, nu_max: 4 })
        );
    }

    #[test]
    fn densities_are_normalized() {
        let g = QuadratureGrid::<f64>::standard();
        for nu in 0..=DEFAULT_NU_MAX {
            let norm = g.integrate(|x| wavefunction_density(VibLevel(nu), x).unwrap());
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn matrix_entries() {
        let m = m();
        let u = |a, b| m.get(VibLevel(a), VibLevel(b)).unwrap();
        assert_eq!(u(0, 0), 1.0);
        assert_abs_diff_eq!(u(0, 1), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(u(1, 1), 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(u(0, 2), 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(u(1, 2), 0.875, epsilon = 1e-9);
        assert_abs_diff_eq!(u(2, 2), 41.0 / 64.0, epsilon = 1e-9);
        assert!(m.get(VibLevel(5), VibLevel(0)).is_err());
    }

    #[test]
    fn f32_matrix_is_close() {
        let m = InteractionMatrix::<f32>::closed_form(2, 1000.0).unwrap();
        assert!((m.get(VibLevel(2), VibLevel(2)).unwrap() - 0.640625).abs() < 1e-6);
    }

    #[test]
    fn energies() {
        let m = m();
        let e3: f64 = config_energy(&WellConfig::ground(3).unwrap(), &m).unwrap();
        assert_abs_diff_eq!(e3, 3.0, epsilon = 1e-12);
        let mixed = w(&[Atom::alpha(0), Atom::alpha(0), Atom::beta(2)]);
        assert_abs_diff_eq!(config_energy(&mixed, &m).unwrap(), 2.5, epsilon = 1e-9);
        assert_eq!(config_energy(&WellConfig::empty(), &m).unwrap(), 0.0);
    }

    #[test]
    fn detunings() {
        let m = m();
        let d = transition_detuning(
            &w(&[Atom::alpha(0), Atom::alpha(1)]),
            &w(&[Atom::alpha(0), Atom::beta(2)]),
            &m,
        )
        .unwrap();
        assert_abs_diff_eq!(d, -0.25, epsilon = 1e-9);
        let d = transition_detuning(
            &w(&[Atom::alpha(1), Atom::alpha(2)]),
            &w(&[Atom::alpha(1), Atom::beta(0)]),
            &m,
        )
        .unwrap();
        assert_abs_diff_eq!(d, 0.125, epsilon = 1e-9);
        // E_{3,0} - E_{2,1}
        assert_abs_diff_eq!(-filter_detuning(3, &m).unwrap(), 0.5, epsilon = 1e-9);
        let err = transition_detuning(&WellConfig::ground(2).unwrap(), &WellConfig::ground(1).unwrap(), &m);
        assert_eq!(err, Err(Error::AtomCountMismatch { initial: 2, final_: 1 }));
    }

    #[test]
    fn alpha_beta_factor_scales_mixed_pairs_only() {
        let m = m().with_alpha_beta_factor(0.98).unwrap();
        let mixed = w(&[Atom::alpha(0), Atom::beta(0)]);
        assert_abs_diff_eq!(config_energy(&mixed, &m).unwrap(), 0.98, epsilon = 1e-12);
        let same = WellConfig::ground(2).unwrap();
        assert_abs_diff_eq!(config_energy(&same, &m).unwrap(), 1.0, epsilon = 1e-12);
    }
}

//! Atoms and the multiset of atoms sharing one lattice well.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of atoms a single well may hold.
pub const DEFAULT_WELL_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hyperfine {
    Alpha,
    Beta,
}

/// 1D vibrational quantum number along the excitation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VibLevel(pub u8);

impl VibLevel {
    pub const GROUND: VibLevel = VibLevel(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub hyperfine: Hyperfine,
    pub level: VibLevel,
}

impl Atom {
    pub const fn new(hyperfine: Hyperfine, nu: u8) -> Self {
        Atom { hyperfine, level: VibLevel(nu) }
    }

    pub const fn alpha(nu: u8) -> Self {
        Atom::new(Hyperfine::Alpha, nu)
    }

    pub const fn beta(nu: u8) -> Self {
        Atom::new(Hyperfine::Beta, nu)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match self.hyperfine {
            Hyperfine::Alpha => 'a',
            Hyperfine::Beta => 'b',
        };
        write!(f, "{}{}", self.level.0, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Statistics {
    #[default]
    Bosonic,
    Fermionic,
}

/// Multiset of atoms in one well, stored sorted so that equality is
/// multiset equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WellConfig {
    atoms: Vec<Atom>,
}

impl WellConfig {
    pub fn empty() -> Self {
        WellConfig::default()
    }

    /// Bosonic well with the default atom cap.
    pub fn new<I: IntoIterator<Item = Atom>>(atoms: I) -> Result<Self> {
        Self::with_rules(atoms, Statistics::Bosonic, DEFAULT_WELL_CAP)
    }

    pub fn with_rules<I: IntoIterator<Item = Atom>>(
        atoms: I,
        statistics: Statistics,
        cap: usize,
    ) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        if atoms.len() > cap {
            return Err(Error::WellOverfull { len: atoms.len(), cap });
        }
        atoms.sort_unstable();
        if statistics == Statistics::Fermionic && atoms.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::PauliViolation);
        }
        Ok(WellConfig { atoms })
    }

    /// `n` atoms in `(alpha, nu = 0)`.
    pub fn ground(n: usize) -> Result<Self> {
        Self::new(std::iter::repeat_n(Atom::alpha(0), n))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn count(&self, atom: Atom) -> usize {
        self.atoms.iter().filter(|&&a| a == atom).count()
    }

    pub fn contains(&self, atom: Atom) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }

    pub fn max_level(&self) -> Option<VibLevel> {
        self.atoms.iter().map(|a| a.level).max()
    }

    pub(crate) fn push(&mut self, atom: Atom) {
        let pos = self.atoms.partition_point(|a| *a < atom);
        self.atoms.insert(pos, atom);
    }

    /// Removes one copy of `atom`; returns whether one was present.
    pub(crate) fn take(&mut self, atom: Atom) -> bool {
        match self.atoms.binary_search(&atom) {
            Ok(i) => {
                self.atoms.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    /// Copy with one `from` atom replaced by `to`, if a `from` atom is present.
    pub fn with_transfer(&self, from: Atom, to: Atom) -> Option<WellConfig> {
        let mut next = self.clone();
        if next.take(from) {
            next.push(to);
            Some(next)
        } else {
            None
        }
    }

    pub(crate) fn retain<F: FnMut(&Atom) -> bool>(&mut self, f: F) {
        self.atoms.retain(f);
    }

    pub(crate) fn drain(&mut self) -> Vec<Atom> {
        std::mem::take(&mut self.atoms)
    }
}

impl fmt::Display for WellConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::partition::set_partitions;

/// Exponents of `x, x*, y, y*` at one time slot.
pub type Monomial = [u8; 4];

/// Polarization tag of a field position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    X,
    Y,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::X, Pol::Y];
}

/// A symbol factor in a product: its polarization and whether it is conjugated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub pol: Pol,
    pub conj: bool,
}

impl Factor {
    fn exponent_index(self) -> usize {
        match (self.pol, self.conj) {
            (Pol::X, false) => 0,
            (Pol::X, true) => 1,
            (Pol::Y, false) => 2,
            (Pol::Y, true) => 3,
        }
    }
}

/// Time-slot coincidence class: the multiset of per-slot monomials of a
/// product whose slots are pairwise distinct. Stored sorted, so two products
/// with the same statistics map to the same class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternClass(Vec<Monomial>);

impl PatternClass {
    pub fn new(mut slots: Vec<Monomial>) -> Self {
        slots.sort_unstable();
        PatternClass(slots)
    }

    /// Class of a product of `factors`, where `blocks` lists which factors share
    /// a time slot.
    pub fn from_blocks(factors: &[Factor], blocks: &[Vec<usize>]) -> Self {
        let slots = blocks
            .iter()
            .map(|b| {
                let mut m = [0u8; 4];
                for &i in b {
                    m[factors[i].exponent_index()] += 1;
                }
                m
            })
            .collect();
        PatternClass::new(slots)
    }

    pub fn slots(&self) -> &[Monomial] {
        &self.0
    }

    pub fn n_slots(&self) -> usize {
        self.0.len()
    }

    /// True if every slot monomial is a product of squared moduli.
    pub fn is_modulus_only(&self) -> bool {
        self.0.iter().all(|m| m[0] == m[1] && m[2] == m[3])
    }

    pub fn parse(s: &str) -> Result<Self> {
        let slots = s
            .split('.')
            .map(|slot| {
                let mut m = [0u8; 4];
                for ch in slot.chars() {
                    let k = match ch {
                        'x' => 0,
                        'X' => 1,
                        'y' => 2,
                        'Y' => 3,
                        _ => return Err(Error::Contract(format!("bad pattern class `{s}`"))),
                    };
                    m[k] += 1;
                }
                if m == [0; 4] {
                    return Err(Error::Contract(format!("empty slot in pattern class `{s}`")));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PatternClass::new(slots))
    }
}

/// `xX.yY` means `E[x_t x_t* y_s y_s*]` with `t ≠ s`; capitals are conjugates.
impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            for (k, ch) in ['x', 'X', 'y', 'Y'].iter().enumerate() {
                for _ in 0..m[k] {
                    write!(f, "{ch}")?;
                }
            }
        }
        Ok(())
    }
}

/// Every class that a first-order perturbation variance can produce: products
/// of `u` plain and `u` conjugated factors (`u ≤ 3`) of one channel, any
/// polarizations, grouped into slots of at least two factors.
pub fn universe() -> Vec<PatternClass> {
    let mut set = BTreeSet::new();
    for u in 1..=3usize {
        let n = 2 * u;
        let parts = set_partitions(n, 2, |_, _| true);
        for pols in 0..(1u32 << n) {
            let factors: Vec<Factor> = (0..n)
                .map(|i| Factor { pol: if pols >> i & 1 == 0 { Pol::X } else { Pol::Y }, conj: i >= u })
                .collect();
            for p in &parts {
                set.insert(PatternClass::from_blocks(&factors, &p.blocks()));
            }
        }
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_round_trip() {
        for c in universe() {
            assert_eq!(PatternClass::parse(&c.to_string()).unwrap(), c);
        }
        assert!(PatternClass::parse("xq").is_err());
    }

    #[test]
    fn universe_contains_basic_classes() {
        let u = universe();
        for s in ["xX", "xX.yY", "xxXX", "xX.xX.xX", "xxxXXX", "xY"] {
            assert!(u.contains(&PatternClass::parse(s).unwrap()), "{s}");
        }
        assert!(!u.contains(&PatternClass::parse("x.X").unwrap()));
    }

    #[test]
    fn index_grid_is_partitioned_by_classes() {
        // every index tuple over a T-slot grid has exactly one coincidence
        // pattern, so Σ_patterns (T)_blocks = T^positions
        let t = 5u64;
        for n in 1..=6usize {
            let total: u64 = set_partitions(n, 1, |_, _| true)
                .iter()
                .map(|p| (0..p.n_blocks() as u64).map(|k| t - k).product::<u64>())
                .sum();
            assert_eq!(total, t.pow(n as u32));
        }
    }
}

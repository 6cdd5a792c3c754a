//! Truncated emitter + photon basis with closed-form state ranking.
//!
//! States are ordered by emitter (excited block first), then photon number,
//! then colexicographic rank of the sorted mode multiset.

use crate::error::{invalid, Error, Result};

/// Binomial coefficients `C(n, k)` for `n < rows`, `k <= cols`.
#[derive(Debug, Clone)]
struct Binomials {
    cols: usize,
    table: Vec<u64>,
}

impl Binomials {
    fn new(rows: usize, cols: usize) -> Self {
        let mut table = vec![0u64; rows * (cols + 1)];
        for n in 0..rows {
            table[n * (cols + 1)] = 1;
            for k in 1..=cols.min(n) {
                let a = table[(n - 1) * (cols + 1) + k - 1];
                let b = if k < n { table[(n - 1) * (cols + 1) + k] } else { 0 };
                table[n * (cols + 1) + k] = a.saturating_add(b);
            }
        }
        Self { cols, table }
    }

    fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.table[n * (self.cols + 1) + k]
        }
    }
}

/// Exact count of basis states, as a wide integer so caps can be checked first.
pub fn basis_dimension(n_modes: usize, max_excitations: usize) -> u128 {
    let multisets = |n: usize| -> u128 {
        // C(L + n - 1, n)
        let mut c: u128 = 1;
        for i in 0..n {
            c = c * (n_modes + i) as u128 / (i + 1) as u128;
        }
        c
    };
    let ground: u128 = (0..=max_excitations).map(multisets).sum();
    let excited: u128 = (0..max_excitations).map(multisets).sum();
    ground + excited
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    n_modes: usize,
    max_excitations: usize,
    binom: Binomials,
    /// `offsets[e][n]`: first index of emitter state `e` (1 excited) with `n` photons.
    offsets: [Vec<usize>; 2],
    /// Sorted photon modes, `n` entries per state, per sector.
    photons: [Vec<Vec<u16>>; 2],
    dimension: usize,
}

/// Default state-space budget.
pub const DEFAULT_CAP: usize = 5_000_000;

impl FockBasis {
    pub fn build(n_modes: usize, max_excitations: usize, cap: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("L", "need at least one mode"));
        }
        if n_modes > u16::MAX as usize {
            return Err(invalid("L", "too many modes"));
        }
        if max_excitations == 0 {
            return Err(invalid("n_max", "must be at least 1"));
        }
        let dim = basis_dimension(n_modes, max_excitations);
        if dim > cap as u128 {
            return Err(Error::CapacityExceeded { dimension: dim, cap });
        }
        let binom = Binomials::new(n_modes + max_excitations + 1, max_excitations + 1);
        let sector_len = |n: usize| binom.get(n_modes + n - 1, n) as usize;
        let mut offsets = [Vec::new(), Vec::new()];
        let mut photons = [Vec::new(), Vec::new()];
        let mut next = 0usize;
        for (slot, e) in [(1usize, true), (0usize, false)] {
            let top = if e { max_excitations - 1 } else { max_excitations };
            for n in 0..=top {
                offsets[slot].push(next);
                let count = sector_len(n);
                let mut flat = Vec::with_capacity(count * n);
                for r in 0..count {
                    flat.extend(unrank(&binom, r as u64, n));
                }
                photons[slot].push(flat);
                next += count;
            }
        }
        Ok(Self {
            n_modes,
            max_excitations,
            binom,
            offsets,
            photons,
            dimension: next,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_excitations(&self) -> usize {
        self.max_excitations
    }

    /// Number of emitter-excited states; they occupy indices `0..n_excited()`.
    pub fn n_excited(&self) -> usize {
        self.offsets[0][0]
    }

    /// Highest photon number allowed alongside the given emitter state.
    pub fn max_photons(&self, excited: bool) -> usize {
        if excited {
            self.max_excitations - 1
        } else {
            self.max_excitations
        }
    }

    pub fn sector_len(&self, photons: usize) -> usize {
        self.binom.get(self.n_modes + photons - 1, photons) as usize
    }

    pub fn sector_offset(&self, excited: bool, photons: usize) -> usize {
        self.offsets[usize::from(excited)][photons]
    }

    /// Photon modes of sector state `rank`, sorted.
    pub fn sector_photons(&self, excited: bool, photons: usize, rank: usize) -> &[u16] {
        let flat = &self.photons[usize::from(excited)][photons];
        &flat[rank * photons..(rank + 1) * photons]
    }

    pub fn rank(&self, sorted_modes: &[u16]) -> usize {
        sorted_modes
            .iter()
            .enumerate()
            .map(|(i, &k)| self.binom.get(k as usize + i, i + 1))
            .sum::<u64>() as usize
    }

    pub fn index(&self, excited: bool, sorted_modes: &[u16]) -> Option<usize> {
        let n = sorted_modes.len();
        if n > self.max_photons(excited) {
            return None;
        }
        Some(self.sector_offset(excited, n) + self.rank(sorted_modes))
    }

    /// Emitter bit and photon occupation vector of state `i`.
    pub fn state(&self, i: usize) -> (bool, Vec<u32>) {
        let (excited, n, rank) = self.locate(i);
        let mut occ = vec![0u32; self.n_modes];
        for &k in self.sector_photons(excited, n, rank) {
            occ[k as usize] += 1;
        }
        (excited, occ)
    }

    /// `(excited, photon number, rank)` of state `i`.
    pub fn locate(&self, i: usize) -> (bool, usize, usize) {
        assert!(i < self.dimension, "state index out of range");
        let excited = i < self.n_excited();
        let offs = &self.offsets[usize::from(excited)];
        let n = offs.partition_point(|&o| o <= i) - 1;
        (excited, n, i - offs[n])
    }
}

/// Sorted multiset with colex rank `r` among multisets of size `n`.
fn unrank(binom: &Binomials, mut r: u64, n: usize) -> Vec<u16> {
    let mut out = vec![0u16; n];
    for i in (1..=n).rev() {
        // largest c with C(c, i) <= r
        let mut c = i - 1;
        while binom.get(c + 1, i) <= r {
            c += 1;
        }
        r -= binom.get(c, i);
        out[i - 1] = (c - (i - 1)) as u16;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let b = FockBasis::build(1, 1, DEFAULT_CAP).unwrap();
        assert_eq!(b.dimension(), 3);
        assert_eq!(b.state(0), (true, vec![0]));
        assert_eq!(b.state(1), (false, vec![0]));
        assert_eq!(b.state(2), (false, vec![1]));
        assert_eq!(FockBasis::build(2, 1, DEFAULT_CAP).unwrap().dimension(), 4);
    }

    #[test]
    fn dimension_matches_binomial_sum() {
        let b = FockBasis::build(21, 3, DEFAULT_CAP).unwrap();
        // ground: 1 + 21 + 231 + 1771, excited: 1 + 21 + 231
        assert_eq!(b.dimension(), 2024 + 253);
        assert_eq!(basis_dimension(21, 3), 2277);
        assert_eq!(basis_dimension(21, 7), b_count(21, 7));
    }

    fn b_count(l: u128, n_max: u128) -> u128 {
        fn c(n: u128, k: u128) -> u128 {
            if k > n {
                return 0;
            }
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        (0..=n_max)
            .map(|n| c(l + n - 1, n) + if n > 0 { c(l + n - 2, n - 1) } else { 0 })
            .sum()
    }

    #[test]
    fn ranks_round_trip() {
        let b = FockBasis::build(5, 4, DEFAULT_CAP).unwrap();
        for i in 0..b.dimension() {
            let (e, n, r) = b.locate(i);
            let modes = b.sector_photons(e, n, r).to_vec();
            assert!(modes.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(b.index(e, &modes), Some(i));
        }
    }

    #[test]
    fn cap_is_enforced() {
        match FockBasis::build(21, 7, 1000) {
            Err(Error::CapacityExceeded { dimension, cap }) => {
                assert_eq!(cap, 1000);
                assert_eq!(dimension, basis_dimension(21, 7));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! k-subsets of the point set: the public [`Block`] type, the fixed-width
//! bitset encoding used for hashing during orbit expansion, and subset
//! ranking/enumeration.

use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Widest point set supported by the bitset encoding.
pub const MAX_BIT_DEGREE: usize = 512;

/// A k-subset of `0..n` in canonical (strictly ascending) form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    points: Box<[u32]>,
}

impl Block {
    /// Sorts and checks `points`; rejects duplicates and points `>= degree`.
    pub fn new(mut points: Vec<u32>, degree: usize) -> Result<Self> {
        points.sort_unstable();
        if let Some(&p) = points.iter().find(|&&p| p as usize >= degree) {
            return Err(Error::PointOutOfRange {
                point: p as usize,
                degree,
            });
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSelection("repeated point in block".into()));
        }
        Ok(Block {
            points: points.into_boxed_slice(),
        })
    }

    pub(crate) fn from_sorted(points: Vec<u32>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Block {
            points: points.into_boxed_slice(),
        }
    }

    /// Parses 1-based points.
    pub fn from_one_based(points: &[u32], degree: usize) -> Result<Self> {
        let mut zero = Vec::with_capacity(points.len());
        for &p in points {
            if p == 0 || p as usize > degree {
                return Err(Error::PointOutOfRange {
                    point: p as usize,
                    degree,
                });
            }
            zero.push(p - 1);
        }
        Block::new(zero, degree)
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }

    pub fn one_based(&self) -> Vec<u32> {
        self.points.iter().map(|p| p + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, point: usize) -> bool {
        self.points.binary_search(&(point as u32)).is_ok()
    }

    pub fn image(&self, g: &Permutation) -> Block {
        let mut pts: Vec<u32> = self.points.iter().map(|&p| g.apply(p as usize) as u32).collect();
        pts.sort_unstable();
        Block::from_sorted(pts)
    }

    /// `Omega - self` for `Omega = 0..degree`.
    pub fn complement(&self, degree: usize) -> Block {
        let mut out = Vec::with_capacity(degree - self.len());
        let mut it = self.points.iter().peekable();
        for x in 0..degree as u32 {
            if it.peek() == Some(&&x) {
                it.next();
            } else {
                out.push(x);
            }
        }
        Block::from_sorted(out)
    }

    pub fn union(&self, other: &Block) -> Block {
        let mut pts: Vec<u32> = self.points.iter().chain(other.points.iter()).copied().collect();
        pts.sort_unstable();
        pts.dedup();
        Block::from_sorted(pts)
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p + 1)?;
        }
        write!(f, "}}")
    }
}

/// JSON form: list of 1-based points.
impl Serialize for Block {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pts = Vec::<u32>::deserialize(d)?;
        if pts.contains(&0) {
            return Err(serde::de::Error::custom("points are 1-based"));
        }
        let mut zero: Vec<u32> = pts.iter().map(|p| p - 1).collect();
        zero.sort_unstable();
        if zero.windows(2).any(|w| w[0] == w[1]) {
            return Err(serde::de::Error::custom("repeated point in block"));
        }
        Ok(Block::from_sorted(zero))
    }
}

/// Fixed-width bitset over at most `64 * W` points.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub(crate) struct Bits<const W: usize>(pub [u64; W]);

impl<const W: usize> Bits<W> {
    pub fn from_points(points: &[u32]) -> Self {
        let mut w = [0u64; W];
        for &p in points {
            w[(p >> 6) as usize] |= 1 << (p & 63);
        }
        Bits(w)
    }

    pub fn from_block(block: &Block) -> Self {
        Bits::from_points(block.points())
    }

    #[inline]
    pub fn image(&self, images: &[u32]) -> Self {
        let mut out = [0u64; W];
        for (wi, &word) in self.0.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let bit = word.trailing_zeros();
                word &= word - 1;
                let y = images[(wi << 6) | bit as usize];
                out[(y >> 6) as usize] |= 1 << (y & 63);
            }
        }
        Bits(out)
    }

    pub fn to_points(self) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, &word) in self.0.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let bit = word.trailing_zeros();
                word &= word - 1;
                out.push(((wi << 6) as u32) | bit);
            }
        }
        out
    }

    pub fn to_block(self) -> Block {
        Block::from_sorted(self.to_points())
    }

    /// Lexicographic comparison of the sorted point lists.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        // The first differing point decides; the set holding the smaller
        // of the two lowest differing bits comes first.
        for i in 0..W {
            let diff = self.0[i] ^ other.0[i];
            if diff != 0 {
                let bit = diff & diff.wrapping_neg();
                return if self.0[i] & bit != 0 {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                };
            }
        }
        std::cmp::Ordering::Equal
    }

    /// Stable 64-bit mix used to pick a shard.
    #[inline]
    pub fn shard_hash(&self) -> u64 {
        let mut h = 0x9e37_79b9_7f4a_7c15u64;
        for &w in &self.0 {
            h = (h ^ w).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            h ^= h >> 31;
        }
        h
    }

}

/// Runs `$body` with `$w` bound to the narrowest bitset width that holds `$n` points.
macro_rules! with_width {
    ($n:expr, $w:ident => $body:expr) => {{
        let n: usize = $n;
        if n <= 64 {
            const $w: usize = 1;
            $body
        } else if n <= 128 {
            const $w: usize = 2;
            $body
        } else if n <= 256 {
            const $w: usize = 4;
            $body
        } else if n <= $crate::block::MAX_BIT_DEGREE {
            const $w: usize = 8;
            $body
        } else {
            Err($crate::error::Error::UnsupportedDegree {
                degree: n,
                max: $crate::block::MAX_BIT_DEGREE,
            })
        }
    }};
}
pub(crate) use with_width;

/// Binomial coefficients `C(n, k)` for `n <= max_n`, saturating at `u64::MAX`.
#[derive(Debug, Clone)]
pub struct Binomials {
    rows: Vec<Vec<u64>>,
}

impl Binomials {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1].saturating_add(rows[n - 1][k]);
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }
}

/// Exact `C(n, k)` as `u128`; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Colexicographic rank of a strictly ascending subset: `sum C(c_i, i + 1)`.
pub fn colex_rank(binom: &Binomials, subset: &[u32]) -> u64 {
    subset
        .iter()
        .enumerate()
        .map(|(i, &c)| binom.get(c as usize, i + 1))
        .sum()
}

/// Inverse of [`colex_rank`] for subsets of size `k`.
pub fn colex_unrank(binom: &Binomials, mut rank: u64, k: usize) -> Vec<u32> {
    let mut out = vec![0u32; k];
    for i in (1..=k).rev() {
        // largest c with C(c, i) <= rank
        let mut c = i - 1;
        while binom.get(c + 1, i) <= rank {
            c += 1;
        }
        rank -= binom.get(c, i);
        out[i - 1] = c as u32;
    }
    out
}

/// All k-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct LexSubsets {
    n: usize,
    current: Vec<u32>,
    done: bool,
}

impl LexSubsets {
    pub fn new(n: usize, k: usize) -> Self {
        LexSubsets {
            n,
            current: (0..k as u32).collect(),
            done: k > n,
        }
    }
}

impl Iterator for LexSubsets {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if (self.current[i] as usize) < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_is_canonical() {
        let a = Block::new(vec![4, 1, 3], 5).unwrap();
        let b = Block::new(vec![3, 4, 1], 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points(), &[1, 3, 4]);
        assert!(Block::new(vec![1, 1], 5).is_err());
        assert!(Block::new(vec![5], 5).is_err());
        assert_eq!(a.complement(5).points(), &[0, 2]);
    }

    #[test]
    fn bits_round_trip_and_image() {
        let b = Block::new(vec![0, 63, 64, 130], 200).unwrap();
        let bits = Bits::<4>::from_block(&b);
        assert_eq!(bits.to_block(), b);
        let images: Vec<u32> = (0..200u32).map(|x| (x + 1) % 200).collect();
        let g = Permutation::from_images(images.clone()).unwrap();
        assert_eq!(bits.image(&images).to_block(), b.image(&g));
    }

    #[test]
    fn lex_cmp_matches_point_lists() {
        let subsets: Vec<Vec<u32>> = LexSubsets::new(7, 3).collect();
        for w in subsets.windows(2) {
            let a = Bits::<1>::from_points(&w[0]);
            let b = Bits::<1>::from_points(&w[1]);
            assert_eq!(a.lex_cmp(&b), std::cmp::Ordering::Less, "{:?} {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn lex_subsets_count_and_order() {
        let all: Vec<Vec<u32>> = LexSubsets::new(6, 3).collect();
        assert_eq!(all.len(), 20);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[1], vec![0, 1, 3]);
        assert_eq!(all[19], vec![3, 4, 5]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
        assert_eq!(LexSubsets::new(3, 0).count(), 1);
        assert_eq!(LexSubsets::new(3, 4).count(), 0);
    }

    #[test]
    fn binomials_agree() {
        let t = Binomials::new(30);
        for n in 0..=30u64 {
            for k in 0..=n {
                assert_eq!(t.get(n as usize, k as usize) as u128, binomial(n, k).unwrap());
            }
        }
        assert_eq!(binomial(22, 11), Some(705432));
        assert_eq!(binomial(176, 2), Some(15400));
    }

    #[test]
    fn colex_rank_is_a_bijection() {
        let t = Binomials::new(12);
        let mut ranks: Vec<u64> = LexSubsets::new(12, 4).map(|s| colex_rank(&t, &s)).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (0..495).collect::<Vec<u64>>());
        for r in 0..495 {
            assert_eq!(colex_rank(&t, &colex_unrank(&t, r, 4)), r);
        }
    }
}

//! Permutation groups given by generators, with a lazily built stabilizer chain.
//!
//! The chain is computed by deterministic Schreier–Sims. Base points are taken
//! in a fixed order: a requested prefix first, then the smallest point moved by
//! whichever strong generator needs a new base point. Two runs on the same
//! generators therefore produce the same base, transversals and strong
//! generators.

use std::collections::VecDeque;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::perm::Permutation;

const TRANSITIVITY_CAP: usize = 6;

#[derive(Debug, Clone)]
struct Level {
    point: usize,
    gens: Vec<Permutation>,
    orbit: Vec<u32>,
    /// `transversal[x] = u` with `point^u = x`, for `x` in the orbit.
    transversal: Vec<Option<Permutation>>,
    inverse: Vec<Option<Permutation>>,
}

impl Level {
    fn new(degree: usize, point: usize, gens: Vec<Permutation>) -> Self {
        let mut level = Level {
            point,
            gens,
            orbit: Vec::new(),
            transversal: Vec::new(),
            inverse: Vec::new(),
        };
        level.rebuild(degree);
        level
    }

    fn rebuild(&mut self, degree: usize) {
        let mut transversal: Vec<Option<Permutation>> = vec![None; degree];
        transversal[self.point] = Some(Permutation::identity(degree));
        let mut orbit = vec![self.point as u32];
        let mut head = 0;
        while head < orbit.len() {
            let x = orbit[head] as usize;
            head += 1;
            for g in &self.gens {
                let y = g.apply(x);
                if transversal[y].is_none() {
                    let u = transversal[x].as_ref().unwrap().then(g);
                    transversal[y] = Some(u);
                    orbit.push(y as u32);
                }
            }
        }
        self.inverse = transversal
            .iter()
            .map(|u| u.as_ref().map(Permutation::inverse))
            .collect();
        self.transversal = transversal;
        self.orbit = orbit;
    }
}

/// Base and strong generating set: a chain `G = G^(0) >= G^(1) >= ... >= 1`
/// where `G^(i+1)` fixes the first `i+1` base points.
#[derive(Debug, Clone)]
pub struct StabChain {
    degree: usize,
    levels: Vec<Level>,
}

impl StabChain {
    fn build(degree: usize, generators: &[Permutation], prefix: &[usize]) -> StabChain {
        let mut strong: Vec<Permutation> = Vec::new();
        for g in generators {
            if !g.is_identity() && !strong.contains(g) {
                strong.push(g.clone());
            }
        }
        let mut base: Vec<usize> = prefix.to_vec();
        for g in &strong {
            if base.iter().all(|&b| g.apply(b) == b) {
                base.push(g.first_moved().expect("non-identity"));
            }
        }
        let mut levels: Vec<Level> = base
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let gens = strong
                    .iter()
                    .filter(|g| base[..i].iter().all(|&p| g.apply(p) == p))
                    .cloned()
                    .collect();
                Level::new(degree, b, gens)
            })
            .collect();

        let mut chain = StabChain { degree, levels: Vec::new() };
        if levels.is_empty() {
            return chain;
        }
        let mut i = levels.len() as isize - 1;
        while i >= 0 {
            let iu = i as usize;
            let mut jumped = None;
            'scan: for oi in 0..levels[iu].orbit.len() {
                let b = levels[iu].orbit[oi] as usize;
                for si in 0..levels[iu].gens.len() {
                    let s = &levels[iu].gens[si];
                    let bs = s.apply(b);
                    let ub = levels[iu].transversal[b].as_ref().unwrap();
                    let ubs_inv = levels[iu].inverse[bs].as_ref().unwrap();
                    let schreier = ub.then(s).then(ubs_inv);
                    if schreier.is_identity() {
                        continue;
                    }
                    let (h, j) = strip(&levels, schreier, iu + 1);
                    if j < levels.len() || !h.is_identity() {
                        let mut j = j;
                        if j == levels.len() {
                            let p = h.first_moved().expect("non-identity");
                            levels.push(Level::new(degree, p, Vec::new()));
                            j = levels.len() - 1;
                        }
                        for level in levels.iter_mut().take(j + 1).skip(iu + 1) {
                            level.gens.push(h.clone());
                            level.rebuild(degree);
                        }
                        jumped = Some(j);
                        break 'scan;
                    }
                }
            }
            match jumped {
                Some(j) => i = j as isize,
                None => i -= 1,
            }
        }
        chain.levels = levels;
        chain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.point).collect()
    }

    pub fn orbit_lengths(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    pub fn order(&self) -> BigUint {
        self.levels
            .iter()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.orbit.len()))
    }

    /// Strong generators of the stabilizer of the first `depth` base points.
    pub fn strong_generators(&self, depth: usize) -> Vec<Permutation> {
        self.levels
            .get(depth)
            .map(|l| l.gens.clone())
            .unwrap_or_default()
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        if g.degree() != self.degree {
            return false;
        }
        let (h, j) = strip(&self.levels, g.clone(), 0);
        j == self.levels.len() && h.is_identity()
    }

    fn tail(&self, depth: usize) -> StabChain {
        StabChain {
            degree: self.degree,
            levels: self.levels[depth.min(self.levels.len())..].to_vec(),
        }
    }

    /// `g = u_{k-1} ... u_1 u_0` for transversal picks given by `pick(level, orbit_len)`.
    fn element_from(&self, mut pick: impl FnMut(usize, usize) -> usize) -> Permutation {
        let mut g = Permutation::identity(self.degree);
        for (i, level) in self.levels.iter().enumerate().rev() {
            let x = level.orbit[pick(i, level.orbit.len())] as usize;
            g = g.then(level.transversal[x].as_ref().unwrap());
        }
        g
    }
}

fn strip(levels: &[Level], mut h: Permutation, start: usize) -> (Permutation, usize) {
    for (l, level) in levels.iter().enumerate().skip(start) {
        let b = h.apply(level.point);
        match &level.inverse[b] {
            Some(inv) => h = h.then(inv),
            None => return (h, l),
        }
    }
    (h, levels.len())
}

/// Result of [`PermGroup::transitivity_degree`]. `capped` is set when the
/// search stopped at the cap without finding the true maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transitivity {
    pub degree: usize,
    pub capped: bool,
}

/// A permutation group `<generators>` on `0..degree`.
#[derive(Debug)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
    name: Option<String>,
    chain: OnceLock<StabChain>,
}

impl Clone for PermGroup {
    fn clone(&self) -> Self {
        let chain = OnceLock::new();
        if let Some(c) = self.chain.get() {
            let _ = chain.set(c.clone());
        }
        PermGroup {
            degree: self.degree,
            generators: self.generators.clone(),
            name: self.name.clone(),
            chain,
        }
    }
}

impl PermGroup {
    pub fn new(generators: Vec<Permutation>) -> Result<Self> {
        let first = generators.first().ok_or(Error::NoGenerators)?;
        let degree = first.degree();
        if let Some(g) = generators.iter().find(|g| g.degree() != degree) {
            return Err(Error::DegreeMismatch {
                left: degree,
                right: g.degree(),
            });
        }
        Ok(PermGroup {
            degree,
            generators,
            name: None,
            chain: OnceLock::new(),
        })
    }

    pub fn trivial(degree: usize) -> Self {
        PermGroup::new(vec![Permutation::identity(degree)]).expect("one generator")
    }

    /// `S_n` generated by an n-cycle and a transposition.
    pub fn symmetric(degree: usize) -> Self {
        if degree < 2 {
            return PermGroup::trivial(degree);
        }
        let cycle: Vec<u32> = (0..degree as u32).collect();
        let gens = vec![
            Permutation::from_cycles(degree, &[cycle]).unwrap(),
            Permutation::from_cycles(degree, &[vec![0, 1]]).unwrap(),
        ];
        PermGroup::new(gens).unwrap()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// The cached stabilizer chain; built on first use.
    pub fn chain(&self) -> &StabChain {
        self.chain
            .get_or_init(|| StabChain::build(self.degree, &self.generators, &[]))
    }

    /// A fresh chain whose base starts with `prefix`. Not cached.
    pub fn chain_with_base(&self, prefix: &[usize]) -> Result<StabChain> {
        for &p in prefix {
            self.check_point(p)?;
        }
        let gens = self.known_generators();
        Ok(StabChain::build(self.degree, &gens, prefix))
    }

    /// Original generators plus the cached strong generators, when available.
    fn known_generators(&self) -> Vec<Permutation> {
        let mut gens = self.generators.clone();
        if let Some(chain) = self.chain.get() {
            gens.extend(chain.strong_generators(0));
        }
        gens
    }

    pub fn order(&self) -> BigUint {
        self.chain().order()
    }

    /// Order as `u64`, for the sizes used in orbit arithmetic.
    pub fn order_u64(&self) -> Option<u64> {
        self.order().try_into().ok()
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        self.chain().contains(g)
    }

    /// Every generator of `self` lies in `other`. Returns the first failing index.
    pub fn check_subgroup_of(&self, other: &PermGroup) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                left: self.degree,
                right: other.degree,
            });
        }
        match self.generators.iter().position(|g| !other.contains(g)) {
            Some(index) => Err(Error::NotSubgroup { index }),
            None => Ok(()),
        }
    }

    fn check_point(&self, point: usize) -> Result<()> {
        if point >= self.degree {
            return Err(Error::PointOutOfRange {
                point,
                degree: self.degree,
            });
        }
        Ok(())
    }

    /// The orbit of `point`, sorted ascending.
    pub fn point_orbit(&self, point: usize) -> Result<Vec<usize>> {
        self.check_point(point)?;
        let mut seen = vec![false; self.degree];
        seen[point] = true;
        let mut orbit = vec![point];
        let mut head = 0;
        while head < orbit.len() {
            let x = orbit[head];
            head += 1;
            for g in &self.generators {
                let y = g.apply(x);
                if !seen[y] {
                    seen[y] = true;
                    orbit.push(y);
                }
            }
        }
        orbit.sort_unstable();
        Ok(orbit)
    }

    /// All orbits, each sorted, ordered by smallest point.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        orbits_of(self.degree, &self.generators)
    }

    pub fn is_transitive(&self) -> bool {
        self.degree <= 1 || self.point_orbit(0).map(|o| o.len()).ok() == Some(self.degree)
    }

    pub fn point_stabilizer(&self, point: usize) -> Result<PermGroup> {
        let chain = self.chain_with_base(&[point])?;
        Ok(subgroup_from_chain(self.degree, chain, 1))
    }

    /// Pointwise stabilizer of `points`.
    pub fn pointwise_stabilizer(&self, points: &[usize]) -> Result<PermGroup> {
        let chain = self.chain_with_base(points)?;
        Ok(subgroup_from_chain(self.degree, chain, points.len()))
    }

    /// Largest `t` (capped at 6) such that the group is transitive on ordered
    /// `t`-tuples of distinct points.
    pub fn transitivity_degree(&self) -> Transitivity {
        let n = self.degree;
        let limit = n.min(TRANSITIVITY_CAP);
        let prefix: Vec<usize> = (0..limit).collect();
        let chain = StabChain::build(n, &self.known_generators(), &prefix);
        let mut t = 0;
        for (i, level) in chain.levels.iter().take(limit).enumerate() {
            if level.orbit.len() == n - i {
                t += 1;
            } else {
                break;
            }
        }
        Transitivity {
            degree: t,
            capped: t == TRANSITIVITY_CAP && n > TRANSITIVITY_CAP,
        }
    }

    /// True iff transitive and the only invariant partitions are trivial.
    pub fn is_primitive(&self) -> bool {
        if !self.is_transitive() {
            return false;
        }
        if self.degree <= 2 {
            return true;
        }
        let stab = self
            .point_stabilizer(0)
            .expect("degree > 0")
            .generators
            .clone();
        is_primitive_action(self.degree, &self.generators, &stab)
    }

    /// Minimal block system in which `a` and `b` share a block.
    pub fn minimal_block_system(&self, a: usize, b: usize) -> Result<Vec<Vec<usize>>> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(minimal_blocks(self.degree, &self.generators, a, b))
    }

    /// Enumerates every element; only sensible for small groups.
    pub fn elements(&self) -> Vec<Permutation> {
        let chain = self.chain();
        let lengths = chain.orbit_lengths();
        let total: usize = lengths.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; lengths.len()];
        loop {
            out.push(chain.element_from(|level, _| idx[level]));
            let mut l = 0;
            loop {
                if l == idx.len() {
                    return out;
                }
                idx[l] += 1;
                if idx[l] < lengths[l] {
                    break;
                }
                idx[l] = 0;
                l += 1;
            }
        }
    }

    /// Uniformly random element given a source `pick(n)` of indices in `0..n`.
    pub fn random_element(&self, mut pick: impl FnMut(usize) -> usize) -> Permutation {
        self.chain().element_from(|_, len| pick(len))
    }
}

fn subgroup_from_chain(degree: usize, chain: StabChain, depth: usize) -> PermGroup {
    let mut gens = chain.strong_generators(depth);
    if gens.is_empty() {
        gens.push(Permutation::identity(degree));
    }
    let group = PermGroup::new(gens).expect("non-empty");
    let tail = chain.tail(depth);
    let _ = group.chain.set(tail);
    group
}

pub(crate) fn orbits_of(degree: usize, gens: &[Permutation]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; degree];
    let mut out = Vec::new();
    for start in 0..degree {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut orbit = vec![start];
        let mut head = 0;
        while head < orbit.len() {
            let x = orbit[head];
            head += 1;
            for g in gens {
                let y = g.apply(x);
                if !seen[y] {
                    seen[y] = true;
                    orbit.push(y);
                }
            }
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    /// Merges the classes; returns the surviving root if they were distinct.
    fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo as u32;
        Some(lo)
    }
}

/// Atkinson's closure: the finest invariant partition joining `a` and `b`.
fn minimal_blocks_uf(degree: usize, gens: &[Permutation], a: usize, b: usize) -> UnionFind {
    let mut uf = UnionFind::new(degree);
    let mut queue = VecDeque::new();
    if uf.union(a, b).is_some() {
        queue.push_back((a, b));
    }
    while let Some((x, y)) = queue.pop_front() {
        for g in gens {
            let (gx, gy) = (g.apply(x), g.apply(y));
            if uf.union(gx, gy).is_some() {
                queue.push_back((gx, gy));
            }
        }
    }
    uf
}

fn minimal_blocks(degree: usize, gens: &[Permutation], a: usize, b: usize) -> Vec<Vec<usize>> {
    let mut uf = minimal_blocks_uf(degree, gens, a, b);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; degree];
    for x in 0..degree {
        let r = uf.find(x);
        if index[r] == usize::MAX {
            index[r] = classes.len();
            classes.push(Vec::new());
        }
        classes[index[r]].push(x);
    }
    classes
}

/// Primitivity of a transitive action given generators for the group and for
/// the stabilizer of point 0.
pub(crate) fn is_primitive_action(
    degree: usize,
    gens: &[Permutation],
    stabilizer_gens: &[Permutation],
) -> bool {
    if degree <= 2 {
        return true;
    }
    for suborbit in orbits_of(degree, stabilizer_gens) {
        let beta = suborbit[0];
        if beta == 0 {
            continue;
        }
        let mut uf = minimal_blocks_uf(degree, gens, 0, beta);
        let root = uf.find(0);
        if (0..degree).any(|x| uf.find(x) != root) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(n: usize, cycles: &[&[u32]]) -> Permutation {
        let c: Vec<Vec<u32>> = cycles.iter().map(|c| c.to_vec()).collect();
        Permutation::from_cycles(n, &c).unwrap()
    }

    fn group(n: usize, gens: &[&[&[u32]]]) -> PermGroup {
        PermGroup::new(gens.iter().map(|g| cyc(n, g)).collect()).unwrap()
    }

    #[test]
    fn trivial_and_cyclic_orders() {
        assert_eq!(PermGroup::trivial(7).order(), BigUint::one());
        let c5 = group(5, &[&[&[0, 1, 2, 3, 4]]]);
        assert_eq!(c5.order(), BigUint::from(5u32));
        assert_eq!(PermGroup::symmetric(6).order(), BigUint::from(720u32));
    }

    #[test]
    fn orbit_of_double_transposition() {
        let g = group(4, &[&[&[0, 1], &[2, 3]]]);
        assert_eq!(g.point_orbit(0).unwrap(), vec![0, 1]);
        assert_eq!(PermGroup::trivial(4).point_orbit(2).unwrap(), vec![2]);
        assert!(matches!(
            g.point_orbit(4),
            Err(Error::PointOutOfRange { point: 4, degree: 4 })
        ));
    }

    #[test]
    fn stabilizer_of_cyclic_group_is_trivial() {
        let c3 = group(3, &[&[&[0, 1, 2]]]);
        assert_eq!(c3.point_stabilizer(0).unwrap().order(), BigUint::one());
        let s5 = PermGroup::symmetric(5);
        assert_eq!(s5.point_stabilizer(3).unwrap().order(), BigUint::from(24u32));
        let id = PermGroup::trivial(3).point_stabilizer(1).unwrap();
        assert_eq!(id.order(), BigUint::one());
    }

    #[test]
    fn membership_accepts_generators_and_identity() {
        let g = group(6, &[&[&[0, 1, 2]], &[&[3, 4], &[0, 5]]]);
        for s in g.generators() {
            assert!(g.contains(s));
        }
        assert!(g.contains(&Permutation::identity(6)));
        assert!(!PermGroup::trivial(6).contains(&cyc(6, &[&[0, 1]])));
    }

    #[test]
    fn transitivity_degrees() {
        assert_eq!(PermGroup::symmetric(4).transitivity_degree().degree, 4);
        let s8 = PermGroup::symmetric(8).transitivity_degree();
        assert_eq!(s8, Transitivity { degree: 6, capped: true });
        let c5 = group(5, &[&[&[0, 1, 2, 3, 4]]]);
        assert_eq!(c5.transitivity_degree().degree, 1);
        let intransitive = group(4, &[&[&[0, 1]]]);
        assert_eq!(intransitive.transitivity_degree().degree, 0);
    }

    #[test]
    fn cyclic_four_is_imprimitive() {
        let c4 = group(4, &[&[&[0, 1, 2, 3]]]);
        assert!(!c4.is_primitive());
        let blocks = c4.minimal_block_system(0, 2).unwrap();
        assert_eq!(blocks, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn prime_degree_transitive_is_primitive() {
        for p in [2usize, 3, 5, 7, 11, 13] {
            let cycle: Vec<u32> = (0..p as u32).collect();
            let g = PermGroup::new(vec![Permutation::from_cycles(p, &[cycle]).unwrap()]).unwrap();
            assert!(g.is_primitive(), "C_{p}");
        }
        assert!(!group(4, &[&[&[0, 1]]]).is_primitive());
    }

    #[test]
    fn elements_enumerates_the_group() {
        let s4 = PermGroup::symmetric(4);
        let mut els = s4.elements();
        assert_eq!(els.len(), 24);
        els.sort();
        els.dedup();
        assert_eq!(els.len(), 24);
    }

    #[test]
    fn chain_is_deterministic() {
        let g = group(7, &[&[&[0, 1, 2, 3, 4, 5, 6]], &[&[1, 2, 4], &[3, 6, 5]]]);
        let a = g.chain_with_base(&[]).unwrap();
        let b = g.chain_with_base(&[]).unwrap();
        assert_eq!(a.base(), b.base());
        assert_eq!(a.strong_generators(0), b.strong_generators(0));
        assert_eq!(g.order(), BigUint::from(21u32));
    }
}

//! Orbits of a permutation group on k-subsets.
//!
//! Orbit expansion is a level-synchronous BFS over bitset-encoded blocks. The
//! visited set is split into shards keyed by a fixed hash; large frontiers are
//! expanded in fixed-size chunks in parallel and each shard then absorbs its
//! candidates in chunk order. None of this depends on the worker count, so the
//! visited sets, orbit sizes and representatives are identical for any number
//! of threads.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::block::{binomial, with_width, Bits, Block, LexSubsets};
use crate::error::{Error, Result};
use crate::group::PermGroup;
use crate::perm::Permutation;

const SHARD_BITS: u32 = 6;
const SHARDS: usize = 1 << SHARD_BITS;
const CHUNK: usize = 2048;
const PARALLEL_FRONTIER: usize = 4096;

/// Resource caps. Every enumeration checks the relevant cap before or while
/// it runs and fails with [`Error::ResourceLimit`] instead of hanging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest `C(n, k)` that [`sigma_partition`] will sweep.
    pub max_subsets: u64,
    /// Largest single orbit that will be expanded.
    pub max_orbit: u64,
    /// Largest number of coverage increments in t-design verification.
    pub max_work: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_subsets: 100_000_000,
            max_orbit: 10_000_000,
            max_work: 1_000_000_000,
        }
    }
}

/// `B = {Delta^g : g in G}`, with its members when they were materialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOrbit {
    pub size: u64,
    pub representative: Block,
    #[serde(skip)]
    pub members: Option<Vec<Block>>,
}

impl BlockOrbit {
    pub fn k(&self) -> usize {
        self.representative.len()
    }
}

/// `Sigma_k(G|Omega)`: the orbits of `G` on all k-subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitPartition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub degree: usize,
    pub k: usize,
    pub orbits: Vec<BlockOrbit>,
}

impl OrbitPartition {
    pub fn sizes(&self) -> Vec<u64> {
        self.orbits.iter().map(|o| o.size).collect()
    }

    pub fn total(&self) -> u128 {
        self.orbits.iter().map(|o| o.size as u128).sum()
    }

    /// Size multiset in exponent notation, e.g. `462, 3696^2, 18480`.
    pub fn multiset_string(&self) -> String {
        let mut sizes = self.sizes();
        sizes.sort_unstable();
        let mut parts = Vec::new();
        let mut i = 0;
        while i < sizes.len() {
            let mut j = i;
            while j < sizes.len() && sizes[j] == sizes[i] {
                j += 1;
            }
            if j - i == 1 {
                parts.push(sizes[i].to_string());
            } else {
                parts.push(format!("{}^{}", sizes[i], j - i));
            }
            i = j;
        }
        parts.join(", ")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct ShardedSet<const W: usize> {
    shards: Vec<FxHashSet<Bits<W>>>,
}

impl<const W: usize> ShardedSet<W> {
    fn new() -> Self {
        ShardedSet {
            shards: (0..SHARDS).map(|_| FxHashSet::default()).collect(),
        }
    }

    #[inline]
    fn shard_of(b: &Bits<W>) -> usize {
        (b.shard_hash() >> (64 - SHARD_BITS)) as usize
    }

    #[inline]
    fn contains(&self, b: &Bits<W>) -> bool {
        self.shards[Self::shard_of(b)].contains(b)
    }

    #[inline]
    fn insert(&mut self, b: Bits<W>) -> bool {
        self.shards[Self::shard_of(&b)].insert(b)
    }
}

fn image_tables(group: &PermGroup) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    for g in group.generators() {
        if !g.is_identity() && !out.iter().any(|t| t.as_slice() == g.images()) {
            out.push(g.images().to_vec());
        }
    }
    out
}

/// Expands the orbit of `seed` (which must be unvisited) into `visited`.
/// Returns the orbit size and, if `collect`, its members in discovery order.
fn expand<const W: usize>(
    gens: &[Vec<u32>],
    seed: Bits<W>,
    visited: &mut ShardedSet<W>,
    cap: u64,
    collect: bool,
) -> Result<(u64, Vec<Bits<W>>)> {
    visited.insert(seed);
    let mut members = Vec::new();
    if collect {
        members.push(seed);
    }
    let mut count = 1u64;
    let mut frontier = vec![seed];
    while !frontier.is_empty() {
        let next = if frontier.len() < PARALLEL_FRONTIER {
            let mut next = Vec::new();
            for b in &frontier {
                for g in gens {
                    let img = b.image(g);
                    if visited.insert(img) {
                        next.push(img);
                    }
                }
            }
            next
        } else {
            let seen = &*visited;
            let buckets: Vec<Vec<Vec<Bits<W>>>> = frontier
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut local: Vec<Vec<Bits<W>>> = vec![Vec::new(); SHARDS];
                    for b in chunk {
                        for g in gens {
                            let img = b.image(g);
                            if !seen.contains(&img) {
                                local[ShardedSet::shard_of(&img)].push(img);
                            }
                        }
                    }
                    local
                })
                .collect();
            let fresh: Vec<Vec<Bits<W>>> = visited
                .shards
                .par_iter_mut()
                .enumerate()
                .map(|(si, shard)| {
                    let mut fresh = Vec::new();
                    for chunk in &buckets {
                        for &b in &chunk[si] {
                            if shard.insert(b) {
                                fresh.push(b);
                            }
                        }
                    }
                    fresh
                })
                .collect();
            fresh.concat()
        };
        count += next.len() as u64;
        if count > cap {
            return Err(Error::resource(
                "orbit size",
                "--cap-orbit",
                cap,
                format!("more than {count}"),
            ));
        }
        if collect {
            members.extend_from_slice(&next);
        }
        frontier = next;
    }
    Ok((count, members))
}

fn check_block(group: &PermGroup, block: &Block) -> Result<()> {
    if let Some(&p) = block.points().last() {
        if p as usize >= group.degree() {
            return Err(Error::PointOutOfRange {
                point: p as usize,
                degree: group.degree(),
            });
        }
    }
    Ok(())
}

/// The orbit of `block` under `group`, with members materialized and sorted.
pub fn block_orbit(group: &PermGroup, block: &Block, limits: &Limits) -> Result<BlockOrbit> {
    check_block(group, block)?;
    let gens = image_tables(group);
    with_width!(group.degree(), W => {
        let mut visited = ShardedSet::<W>::new();
        let (size, members) = expand(&gens, Bits::<W>::from_block(block), &mut visited, limits.max_orbit, true)?;
        let mut members: Vec<Bits<W>> = members;
        members.par_sort_unstable_by(|a, b| a.lex_cmp(b));
        Ok(BlockOrbit {
            size,
            representative: block.clone(),
            members: Some(members.into_iter().map(Bits::to_block).collect()),
        })
    })
}

/// Orbit size only; nothing is materialized beyond the visited set.
pub fn block_orbit_size(group: &PermGroup, block: &Block, limits: &Limits) -> Result<u64> {
    check_block(group, block)?;
    let gens = image_tables(group);
    with_width!(group.degree(), W => {
        let mut visited = ShardedSet::<W>::new();
        let (size, _) = expand(&gens, Bits::<W>::from_block(block), &mut visited, limits.max_orbit, false)?;
        Ok(size)
    })
}

/// `|G_B| = |G| / |B^G|`, checked for exact divisibility.
pub fn block_stabilizer_order(group: &PermGroup, orbit: &BlockOrbit) -> Result<BigUint> {
    let order = group.order();
    let size = BigUint::from(orbit.size);
    if size.is_zero() {
        return Err(Error::Inconsistent("empty orbit".into()));
    }
    let (q, r) = order.div_rem(&size);
    if !r.is_zero() {
        return Err(Error::Inconsistent(format!(
            "orbit size {} does not divide |G| = {}",
            orbit.size, order
        )));
    }
    Ok(q)
}

/// `Sigma_k(G|Omega)` without materializing orbit members.
pub fn sigma_partition(group: &PermGroup, k: usize, limits: &Limits) -> Result<OrbitPartition> {
    sigma_partition_impl(group, k, limits, false)
}

/// As [`sigma_partition`], keeping every orbit's members (for small cases).
pub fn sigma_partition_materialized(
    group: &PermGroup,
    k: usize,
    limits: &Limits,
) -> Result<OrbitPartition> {
    sigma_partition_impl(group, k, limits, true)
}

fn sigma_partition_impl(
    group: &PermGroup,
    k: usize,
    limits: &Limits,
    collect: bool,
) -> Result<OrbitPartition> {
    let n = group.degree();
    if k > n {
        return Err(Error::InvalidSelection(format!("k = {k} exceeds degree {n}")));
    }
    let total = binomial(n as u64, k as u64).unwrap_or(u128::MAX);
    if total > limits.max_subsets as u128 {
        return Err(Error::resource(
            "number of k-subsets C(n,k)",
            "--cap-subsets",
            limits.max_subsets,
            total,
        ));
    }
    let gens = image_tables(group);
    let mut orbits = with_width!(n, W => {
        let mut visited = ShardedSet::<W>::new();
        let mut orbits = Vec::new();
        // Seeds in lexicographic order: each seed is the lex-least member of its orbit.
        for subset in LexSubsets::new(n, k) {
            let bits = Bits::<W>::from_points(&subset);
            if visited.contains(&bits) {
                continue;
            }
            let (size, members) = expand(&gens, bits, &mut visited, limits.max_orbit, collect)?;
            let members = collect.then(|| {
                let mut m = members;
                m.sort_unstable_by(|a, b| a.lex_cmp(b));
                m.into_iter().map(Bits::to_block).collect()
            });
            orbits.push(BlockOrbit {
                size,
                representative: Block::from_sorted(subset),
                members,
            });
        }
        Ok::<_, Error>(orbits)
    })?;
    orbits.sort_by(|a, b| match a.size.cmp(&b.size) {
        Ordering::Equal => a.representative.cmp(&b.representative),
        other => other,
    });
    let partition = OrbitPartition {
        group: group.name().map(str::to_string),
        degree: n,
        k,
        orbits,
    };
    if partition.total() != total {
        return Err(Error::Inconsistent(format!(
            "orbit sizes sum to {} instead of C({n},{k}) = {total}",
            partition.total()
        )));
    }
    Ok(partition)
}

/// Replaces every orbit by the orbit of complements; order and sizes are kept.
pub fn complement_partition(partition: &OrbitPartition) -> OrbitPartition {
    let n = partition.degree;
    OrbitPartition {
        group: partition.group.clone(),
        degree: n,
        k: n - partition.k,
        orbits: partition
            .orbits
            .iter()
            .map(|o| BlockOrbit {
                size: o.size,
                representative: o.representative.complement(n),
                members: o.members.as_ref().map(|m| {
                    let mut c: Vec<Block> = m.iter().map(|b| b.complement(n)).collect();
                    c.sort_unstable();
                    c
                }),
            })
            .collect(),
    }
}

/// A single orbit covering all `C(n, k)` subsets.
pub fn is_trivial_partition(partition: &OrbitPartition) -> bool {
    partition.orbits.len() == 1
        && binomial(partition.degree as u64, partition.k as u64)
            == Some(partition.orbits[0].size as u128)
}

/// Generators of the setwise stabilizer `G_B`.
///
/// Builds the orbit of `block` with a Schreier tree and sifts Schreier
/// generators into a growing subgroup until it reaches `|G| / |B^G|`.
pub fn set_stabilizer(group: &PermGroup, block: &Block, limits: &Limits) -> Result<PermGroup> {
    check_block(group, block)?;
    let n = group.degree();
    let gens: Vec<Permutation> = group.generators().to_vec();
    let tables: Vec<&[u32]> = gens.iter().map(|g| g.images()).collect();
    let order = group.order();

    with_width!(n, W => {
        let seed = Bits::<W>::from_block(block);
        let mut index: FxHashMap<Bits<W>, u32> = FxHashMap::default();
        let mut nodes: Vec<Bits<W>> = vec![seed];
        // parent[i] = (parent node, generator) with nodes[i] = nodes[parent]^gen
        let mut parent: Vec<(u32, u32)> = vec![(u32::MAX, u32::MAX)];
        index.insert(seed, 0);
        let mut head = 0;
        while head < nodes.len() {
            let b = nodes[head];
            for (gi, t) in tables.iter().enumerate() {
                let img = b.image(t);
                if let Entry::Vacant(e) = index.entry(img) {
                    e.insert(nodes.len() as u32);
                    nodes.push(img);
                    parent.push((head as u32, gi as u32));
                    if nodes.len() as u64 > limits.max_orbit {
                        return Err(Error::resource(
                            "orbit size",
                            "--cap-orbit",
                            limits.max_orbit,
                            format!("more than {}", nodes.len() - 1),
                        ));
                    }
                }
            }
            head += 1;
        }
        let size = BigUint::from(nodes.len());
        let (target, rem) = order.div_rem(&size);
        if !rem.is_zero() {
            return Err(Error::Inconsistent("orbit size does not divide |G|".into()));
        }

        let transversal = |mut i: usize| -> Permutation {
            let mut path = Vec::new();
            while parent[i].0 != u32::MAX {
                path.push(parent[i].1 as usize);
                i = parent[i].0 as usize;
            }
            let mut u = Permutation::identity(n);
            for &g in path.iter().rev() {
                u = u.then(&gens[g]);
            }
            u
        };

        let mut stab_gens: Vec<Permutation> = Vec::new();
        let mut stab = PermGroup::trivial(n);
        'outer: for i in 0..nodes.len() {
            if stab.order() == target {
                break;
            }
            let ui = transversal(i);
            for (gi, g) in gens.iter().enumerate() {
                let j = index[&nodes[i].image(g.images())] as usize;
                if parent[j] == (i as u32, gi as u32) {
                    continue;
                }
                let s = ui.then(g).then(&transversal(j).inverse());
                if s.is_identity() || stab.contains(&s) {
                    continue;
                }
                stab_gens.push(s);
                stab = PermGroup::new(stab_gens.clone())?;
                if stab.order() == target {
                    break 'outer;
                }
            }
        }
        if stab.order() != target {
            return Err(Error::Inconsistent(format!(
                "stabilizer reached order {} instead of {}",
                stab.order(),
                target
            )));
        }
        Ok(stab)
    })
}

/// The action of `group` on an explicit invariant list of blocks, as
/// permutations of block indices.
pub fn block_action(group: &PermGroup, blocks: &[Block]) -> Result<Vec<Permutation>> {
    group
        .generators()
        .iter()
        .map(|g| action_of(g, blocks))
        .collect()
}

pub(crate) fn action_of(g: &Permutation, blocks: &[Block]) -> Result<Permutation> {
    let index: FxHashMap<&Block, u32> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b, i as u32))
        .collect();
    let images = blocks
        .iter()
        .map(|b| {
            index
                .get(&b.image(g))
                .copied()
                .ok_or_else(|| Error::InvalidSelection("block list is not invariant".into()))
        })
        .collect::<Result<Vec<u32>>>()?;
    Permutation::from_images(images)
}

pub(crate) fn to_u64(x: &BigUint) -> Result<u64> {
    x.to_u64()
        .ok_or_else(|| Error::Inconsistent(format!("{x} does not fit in 64 bits")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(n: usize, cycles: &[&[u32]]) -> Permutation {
        let c: Vec<Vec<u32>> = cycles.iter().map(|c| c.to_vec()).collect();
        Permutation::from_cycles(n, &c).unwrap()
    }

    fn c5() -> PermGroup {
        PermGroup::new(vec![cyc(5, &[&[0, 1, 2, 3, 4]])]).unwrap()
    }

    #[test]
    fn pair_orbit_under_c5() {
        let o = block_orbit(&c5(), &Block::new(vec![0, 1], 5).unwrap(), &Limits::default()).unwrap();
        assert_eq!(o.size, 5);
        let members = o.members.unwrap();
        assert!(members.contains(&Block::new(vec![0, 4], 5).unwrap()));
        assert!(!members.contains(&Block::new(vec![0, 2], 5).unwrap()));
    }

    #[test]
    fn identity_group_orbit_is_a_singleton() {
        let g = PermGroup::trivial(6);
        let o = block_orbit(&g, &Block::new(vec![1, 3, 5], 6).unwrap(), &Limits::default()).unwrap();
        assert_eq!(o.size, 1);
    }

    #[test]
    fn sigma_of_c5_on_pairs() {
        let p = sigma_partition(&c5(), 2, &Limits::default()).unwrap();
        assert_eq!(p.sizes(), vec![5, 5]);
        assert_eq!(p.orbits[0].representative.points(), &[0, 1]);
        assert_eq!(p.orbits[1].representative.points(), &[0, 2]);
        assert_eq!(p.multiset_string(), "5^2");
        assert!(!is_trivial_partition(&p));
    }

    #[test]
    fn symmetric_group_partitions_are_trivial() {
        let s6 = PermGroup::symmetric(6);
        for k in 0..=6 {
            let p = sigma_partition(&s6, k, &Limits::default()).unwrap();
            assert!(is_trivial_partition(&p), "k = {k}");
        }
    }

    #[test]
    fn full_block_complements_to_empty() {
        let p = sigma_partition(&c5(), 5, &Limits::default()).unwrap();
        let c = complement_partition(&p);
        assert_eq!(c.k, 0);
        assert_eq!(c.sizes(), vec![1]);
        assert!(c.orbits[0].representative.is_empty());
    }

    #[test]
    fn subset_cap_is_enforced() {
        let limits = Limits {
            max_subsets: 100,
            ..Limits::default()
        };
        let err = sigma_partition(&PermGroup::symmetric(22), 4, &limits).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { limit: 100, .. }), "{err}");
        assert!(err.to_string().contains("7315"));
    }

    #[test]
    fn orbit_cap_is_enforced() {
        let limits = Limits {
            max_orbit: 10,
            ..Limits::default()
        };
        let err = block_orbit(&PermGroup::symmetric(8), &Block::new(vec![0, 1], 8).unwrap(), &limits)
            .unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { limit: 10, .. }));
    }

    #[test]
    fn stabilizer_of_a_pair_in_s5() {
        let s5 = PermGroup::symmetric(5);
        let b = Block::new(vec![1, 3], 5).unwrap();
        let stab = set_stabilizer(&s5, &b, &Limits::default()).unwrap();
        assert_eq!(stab.order(), BigUint::from(12u32));
        for g in stab.generators() {
            assert_eq!(b.image(g), b);
        }
    }

    #[test]
    fn stabilizer_order_divides() {
        let o = block_orbit(&c5(), &Block::new(vec![0, 2], 5).unwrap(), &Limits::default()).unwrap();
        assert_eq!(block_stabilizer_order(&c5(), &o).unwrap(), BigUint::from(1u32));
        let bad = BlockOrbit { size: 3, ..o };
        assert!(matches!(block_stabilizer_order(&c5(), &bad), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn partition_json_is_one_based() {
        let p = sigma_partition(&c5().with_name("C5"), 2, &Limits::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(v["group"], "C5");
        assert_eq!(v["degree"], 5);
        assert_eq!(v["orbits"][0]["representative"], serde_json::json!([1, 2]));
        assert_eq!(OrbitPartition::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
}

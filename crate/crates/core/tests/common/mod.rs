#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use designforge_core::ingest::GroupRegistry;
use designforge_core::{PermGroup, Permutation};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn registry() -> GroupRegistry {
    GroupRegistry::open(&fixtures_dir().join("registry.json")).expect("fixture registry")
}

pub fn load(reg: &GroupRegistry, name: &str) -> Arc<PermGroup> {
    reg.load_group(name).unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

pub fn perm(images: Vec<u32>) -> Permutation {
    Permutation::from_images(images).unwrap()
}

/// PSL(2,7) on the projective line over GF(7), infinity = 7.
pub fn psl27() -> PermGroup {
    let shift: Vec<u32> = (0..8).map(|x| if x == 7 { 7 } else { (x + 1) % 7 }).collect();
    let inv: Vec<u32> = (0..8u32)
        .map(|x| match x {
            7 => 0,
            0 => 7,
            x => {
                let xinv = (1..7).find(|y| (x * y) % 7 == 1).unwrap();
                (7 - xinv) % 7
            }
        })
        .collect();
    PermGroup::new(vec![perm(shift), perm(inv)]).unwrap()
}

/// Every element, by closure under right multiplication by generators.
pub fn elements(gens: &[Permutation]) -> Vec<Vec<u32>> {
    let n = gens[0].degree();
    let id: Vec<u32> = (0..n as u32).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::from([id.clone()]);
    let mut queue = vec![id];
    let mut i = 0;
    while i < queue.len() {
        let x = queue[i].clone();
        i += 1;
        for g in gens {
            let y: Vec<u32> = x.iter().map(|&p| g.images()[p as usize]).collect();
            if seen.insert(y.clone()) {
                queue.push(y);
            }
        }
    }
    queue
}

pub fn image_of(set: &[u32], g: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = set.iter().map(|&p| g[p as usize]).collect();
    out.sort_unstable();
    out
}

/// Orbit sizes of the elements on all k-subsets, sorted.
pub fn brute_sigma(elems: &[Vec<u32>], n: usize, k: usize) -> Vec<u64> {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut sizes = Vec::new();
    for subset in subsets(n, k) {
        if seen.contains(&subset) {
            continue;
        }
        let orbit: BTreeSet<Vec<u32>> = elems.iter().map(|g| image_of(&subset, g)).collect();
        sizes.push(orbit.len() as u64);
        seen.extend(orbit);
    }
    sizes.sort_unstable();
    sizes
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n as u32).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// Primitive: transitive and no subset through 0 of proper size dividing
/// `n` is a block of imprimitivity.
pub fn brute_primitive(elems: &[Vec<u32>], n: usize) -> bool {
    let orbit0: HashSet<u32> = elems.iter().map(|g| g[0]).collect();
    if orbit0.len() != n {
        return false;
    }
    for size in 2..n {
        if !n.is_multiple_of(size) {
            continue;
        }
        for rest in subsets(n - 1, size - 1) {
            let block: Vec<u32> = std::iter::once(0).chain(rest.iter().map(|&p| p + 1)).collect();
            let set: HashSet<u32> = block.iter().copied().collect();
            let is_block = elems.iter().all(|g| {
                let img = image_of(&block, g);
                img == block || img.iter().all(|p| !set.contains(p))
            });
            if is_block {
                return false;
            }
        }
    }
    true
}

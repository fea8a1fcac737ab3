//! Regenerates the Co3 fixtures from the M23 fixture.
//!
//! Puts an M23-invariant regular two-graph on the 23 points and 253 heptads
//! of S(4,7,23), extends M23 by a two-graph automorphism moving a point, and
//! writes generators for Co3 on 276 points together with some of its maximal
//! subgroups, labelled by their position in the list of maximal subgroups
//! ordered by decreasing order.
//!
//! Usage: cargo run --release -p designforge-core --example build_co3 -- <fixtures dir>

use std::path::PathBuf;

use designforge_core::ingest::GeneratorFile;
use designforge_core::orbit::{set_stabilizer, sigma_partition_materialized};
use designforge_core::{Block, Limits, PermGroup, Permutation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 276;
const W: usize = 5;
const CO3_ORDER: u64 = 495_766_656_000;

#[derive(Clone, Copy, PartialEq, Eq)]
struct Set([u64; W]);

impl Set {
    const EMPTY: Set = Set([0; W]);

    fn full() -> Set {
        let mut s = Set([u64::MAX; W]);
        s.0[W - 1] = (1u64 << (N - 64 * (W - 1))) - 1;
        s
    }
    fn has(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn and(self, o: Set) -> Set {
        Set(std::array::from_fn(|i| self.0[i] & o.0[i]))
    }
    fn xor(self, o: Set) -> Set {
        Set(std::array::from_fn(|i| self.0[i] ^ o.0[i]))
    }
    fn not(self) -> Set {
        Set::full().xor(self)
    }
    fn len(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| 64 * i + w.trailing_zeros() as usize)
    }
}

struct TwoGraph {
    adj: Vec<Set>,
}

impl TwoGraph {
    /// `c` such that `{a, b, c}` has an odd number of edges.
    fn row(&self, a: usize, b: usize) -> Set {
        let mut r = self.adj[a].xor(self.adj[b]);
        if self.adj[a].has(b) {
            r = r.not();
        }
        r.remove(a);
        r.remove(b);
        r
    }

    fn descendant_is_srg(&self, x: usize) -> bool {
        let rows: Vec<Set> = (0..N).map(|y| if y == x { Set::EMPTY } else { self.row(x, y) }).collect();
        let degree = rows[(x + 1) % N].len();
        let mut params = None;
        for a in (0..N).filter(|&a| a != x) {
            if rows[a].len() != degree {
                return false;
            }
            for b in (0..N).filter(|&b| b != x && b != a).take(40) {
                let common = rows[a].and(rows[b]).len();
                let key = rows[a].has(b);
                let p = params.get_or_insert([None, None]);
                let slot = &mut p[key as usize];
                match slot {
                    None => *slot = Some(common),
                    Some(c) if *c != common => return false,
                    _ => {}
                }
            }
        }
        eprintln!("descendant: degree {degree}, parameters {params:?}");
        true
    }
}

fn two_graph(heptads: &[Block], pp: bool, ph_in: bool, hh: [bool; 2]) -> TwoGraph {
    let mut adj = vec![Set::EMPTY; N];
    let mut edge = |a: usize, b: usize| {
        adj[a].insert(b);
        adj[b].insert(a);
    };
    for a in 0..23 {
        for b in a + 1..23 {
            if pp {
                edge(a, b);
            }
        }
        for (i, h) in heptads.iter().enumerate() {
            if h.contains(a) == ph_in {
                edge(a, 23 + i);
            }
        }
    }
    for (i, h) in heptads.iter().enumerate() {
        for (j, h2) in heptads.iter().enumerate().skip(i + 1) {
            let meet = h.points().iter().filter(|&&p| h2.contains(p as usize)).count();
            let adjacent = match meet {
                1 => hh[0],
                3 => hh[1],
                m => panic!("heptads meeting in {m} points"),
            };
            if adjacent {
                edge(23 + i, 23 + j);
            }
        }
    }
    TwoGraph { adj }
}

/// M23 acting on points and heptads.
fn lift(g: &Permutation, heptads: &[Block]) -> Permutation {
    let mut images: Vec<u32> = (0..23).map(|p| g.apply(p) as u32).collect();
    for h in heptads {
        images.push(23 + heptads.binary_search(&h.image(g)).unwrap() as u32);
    }
    Permutation::from_images(images).unwrap()
}

/// First two-graph automorphism with the prescribed images.
fn automorphism(tg: &TwoGraph, fixed: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut map = vec![usize::MAX; N];
    let mut cand = vec![Set::full(); N];
    let mut mapped = Vec::new();
    for &(v, w) in fixed {
        if !assign(tg, &mut map, &mut cand, &mut mapped, v, w) {
            return None;
        }
    }
    return rec(tg, &map, &cand, &mapped);

    fn assign(
        tg: &TwoGraph,
        map: &mut [usize],
        cand: &mut [Set],
        mapped: &mut Vec<usize>,
        v: usize,
        w: usize,
    ) -> bool {
        if !cand[v].has(w) {
            return false;
        }
        map[v] = w;
        let rows: Vec<(Set, Set)> = mapped.iter().map(|&u| (tg.row(u, v), tg.row(map[u], w))).collect();
        mapped.push(v);
        for x in 0..N {
            if map[x] != usize::MAX {
                continue;
            }
            let mut c = cand[x];
            c.remove(w);
            for (src, dst) in &rows {
                c = if src.has(x) { c.and(*dst) } else { c.and(dst.not()) };
            }
            if c.is_empty() {
                return false;
            }
            cand[x] = c;
        }
        true
    }

    fn rec(tg: &TwoGraph, map: &[usize], cand: &[Set], mapped: &[usize]) -> Option<Vec<usize>> {
        let next = (0..N)
            .filter(|&u| map[u] == usize::MAX)
            .min_by_key(|&u| cand[u].len());
        let Some(v) = next else {
            return Some(map.to_vec());
        };
        let mut options = cand[v];
        while let Some(w) = options.first() {
            options.remove(w);
            let mut map2 = map.to_vec();
            let mut cand2 = cand.to_vec();
            let mut mapped2 = mapped.to_vec();
            if assign(tg, &mut map2, &mut cand2, &mut mapped2, v, w) {
                if let Some(m) = rec(tg, &map2, &cand2, &mapped2) {
                    return Some(m);
                }
            }
        }
        None
    }
}

fn compact(group: &PermGroup, rng: &mut ChaCha8Rng) -> Vec<Permutation> {
    let order = group.order();
    for size in 2..=4 {
        for _ in 0..200 {
            let gens: Vec<Permutation> = (0..size)
                .map(|_| group.random_element(|n| rng.gen_range(0..n)))
                .collect();
            if PermGroup::new(gens.clone()).unwrap().order() == order {
                return gens;
            }
        }
    }
    group.generators().to_vec()
}

/// Set stabilizer of the `k` fixed points of a prime-order element, when it
/// has the given order.
fn fixed_set_stabilizer(g: &PermGroup, k: usize, order: u64, rng: &mut ChaCha8Rng, limits: &Limits) -> Option<PermGroup> {
    let mut tried = std::collections::HashSet::new();
    for _ in 0..400 {
        let x = g.random_element(|n| rng.gen_range(0..n));
        let ord = x.order();
        for p in [2u64, 3, 5, 7, 11] {
            if !ord.is_multiple_of(p) {
                continue;
            }
            let y = x.pow(ord / p);
            let fix: Vec<u32> = (0..N).filter(|&i| y.apply(i) == i).map(|i| i as u32).collect();
            if fix.len() != k || !tried.insert((p, fix.clone())) || tried.len() > 12 {
                continue;
            }
            let stab = set_stabilizer(g, &Block::new(fix, N).unwrap(), limits).ok()?;
            if stab.order_u64() == Some(order) {
                return Some(stab);
            }
        }
    }
    None
}

/// Set stabilizer of a `k`-point union of `h`-orbits, when it has the given
/// order.
fn union_stabilizer(g: &PermGroup, h: &PermGroup, k: usize, order: u64, limits: &Limits) -> Option<PermGroup> {
    let orbits = h.orbits();
    if orbits.len() > 20 {
        return None;
    }
    for mask in 1u32..(1 << orbits.len()) {
        let pts: Vec<u32> = (0..orbits.len())
            .filter(|i| mask >> i & 1 == 1)
            .flat_map(|i| orbits[i].iter().map(|&p| p as u32))
            .collect();
        if pts.len() != k {
            continue;
        }
        let stab = set_stabilizer(g, &Block::new(pts, N).unwrap(), limits).ok()?;
        if stab.order_u64() == Some(order) {
            return Some(stab);
        }
    }
    None
}

fn main() {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    let limits = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(276);
    let m23 = GeneratorFile::read(&dir.join("m23.gens")).unwrap().to_group().unwrap();
    let heptads = sigma_partition_materialized(&m23, 7, &limits)
        .unwrap()
        .orbits
        .into_iter()
        .find(|o| o.size == 253)
        .unwrap()
        .members
        .unwrap();

    let mut chosen = None;
    'rules: for pp in [false, true] {
        for ph_in in [false, true] {
            for hh in [[false, true], [true, false]] {
                let tg = two_graph(&heptads, pp, ph_in, hh);
                if tg.descendant_is_srg(0) && tg.descendant_is_srg(23) {
                    eprintln!("rule: points adjacent {pp}, incidence {ph_in}, heptads {hh:?}");
                    chosen = Some(tg);
                    break 'rules;
                }
            }
        }
    }
    let tg = chosen.expect("a regular two-graph");

    let lifted: Vec<Permutation> = m23.generators().iter().map(|g| lift(g, &heptads)).collect();
    let tau = automorphism(&tg, &[(0, 23)]).expect("an automorphism moving a point to a heptad");
    let tau = Permutation::from_images(tau.iter().map(|&x| x as u32).collect()).unwrap();
    let mut gens = lifted.clone();
    gens.push(tau);
    let co3 = PermGroup::new(gens).unwrap();
    eprintln!("two-graph group order {}", co3.order());
    assert_eq!(co3.order_u64(), Some(CO3_ORDER));
    assert_eq!(co3.transitivity_degree().degree, 2);

    let m23_276 = PermGroup::new(lifted).unwrap();
    let mut hs_set: Vec<u32> = (0..23).collect();
    hs_set.extend((0..heptads.len()).filter(|&i| heptads[i].contains(0)).map(|i| 23 + i as u32));
    let hs = set_stabilizer(&co3, &Block::new(hs_set, N).unwrap(), &limits).unwrap();
    let pair = set_stabilizer(&co3, &Block::new(vec![0, 1], N).unwrap(), &limits).unwrap();
    let mut extra = Vec::new();
    for (label, structure, order, k) in [
        ("M5", "3^5:(2xM11)", 3_849_120u64, 33usize),
        ("M6", "2.S6(2)", 2_903_040, 36),
        ("M8", "3^(1+4):4S6", 699_840, 6),
    ] {
        let found = fixed_set_stabilizer(&co3, k, order, &mut rng, &limits).or_else(|| {
            // unions of orbits of the M11 fixing an endecad of S(4,7,23)
            let endecad = sigma_partition_materialized(&m23, 11, &limits)
                .unwrap()
                .orbits
                .into_iter()
                .find(|o| o.size == 1288)?
                .representative;
            let m11 = set_stabilizer(&m23, &endecad, &limits).unwrap();
            let m11 = PermGroup::new(m11.generators().iter().map(|g| lift(g, &heptads)).collect()).unwrap();
            union_stabilizer(&co3, &m11, k, order, &limits)
        });
        if let Some(g) = found {
            extra.push((label, structure, order, "stabilizer of the fixed points of an element of prime order", g));
        } else {
            eprintln!("{label} {structure}: not found");
        }
    }
    let subgroups = [
        ("M4", "M23", 10_200_960u64, "the M23 acting on the points and heptads of S(4,7,23)", m23_276),
        ("M2", "HS", 44_352_000, "stabilizer of the 23 points together with the 77 heptads on one point", hs),
        ("M3", "U4(3).2^2", 13_063_680, "stabilizer of a pair of points", pair),
    ];
    let subgroups: Vec<_> = subgroups.into_iter().chain(extra).collect();

    let source = "generated by the build_co3 example from the M23 fixture: automorphism group of the regular two-graph on the 23 points and 253 heptads of S(4,7,23)";
    let co3_gens = compact(&co3, &mut rng);
    let file = GeneratorFile {
        degree: N,
        expected_order: Some(co3.order()),
        name: Some("Co3".into()),
        source: Some(source.into()),
        metadata: vec![],
        permutations: co3_gens,
    };
    std::fs::write(dir.join("co3.gens"), file.to_text()).unwrap();
    let subgroups_len = subgroups.len();
    for (label, structure, order, how, group) in subgroups {
        assert_eq!(group.order_u64(), Some(order), "{structure}");
        group.check_subgroup_of(&co3).unwrap();
        eprintln!("{label} {structure}: orbits {:?}", group.orbits().iter().map(Vec::len).collect::<Vec<_>>());
        let file = GeneratorFile {
            degree: N,
            expected_order: Some(order.into()),
            name: Some(format!("Co3.{label}")),
            source: Some(format!("generated by the build_co3 example: {how}")),
            metadata: vec![("structure".into(), structure.into())],
            permutations: compact(&group, &mut rng),
        };
        std::fs::write(dir.join(format!("co3_{}.gens", label.to_lowercase())), file.to_text()).unwrap();
    }
    eprintln!("wrote co3.gens and {} subgroup files", subgroups_len);
}

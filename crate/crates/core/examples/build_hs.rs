//! Regenerates the HS fixtures from the M22 fixture.
//!
//! Builds the Higman-Sims graph on 100 vertices (a base vertex, the 22
//! points, the 77 hexads), extends M22 by a graph automorphism moving the base
//! vertex, and takes the action on one class of 176 Hoffman-Singleton
//! subgraphs. Maximal subgroups are found as set stabilizers and written out
//! as generator files restricted to the 176-point action.
//!
//! Usage: cargo run --release -p designforge-core --example build_hs -- <fixtures dir>

use std::collections::HashMap;
use std::path::PathBuf;

use designforge_core::ingest::GeneratorFile;
use designforge_core::orbit::{set_stabilizer, sigma_partition_materialized};
use designforge_core::{Block, Limits, PermGroup, Permutation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 100;
const HS_ORDER: u64 = 44_352_000;

type Adj = [u128; N];

fn bit(i: usize) -> u128 {
    1u128 << i
}

struct Graph {
    adj: Adj,
    hexads: Vec<Block>,
}

fn hs_graph(m22: &PermGroup, limits: &Limits) -> Graph {
    let sigma6 = sigma_partition_materialized(m22, 6, limits).unwrap();
    let hexads = sigma6
        .orbits
        .iter()
        .find(|o| o.size == 77)
        .expect("hexad orbit")
        .members
        .clone()
        .unwrap();
    let mut adj = [0u128; N];
    let mut edge = |a: usize, b: usize| {
        adj[a] |= bit(b);
        adj[b] |= bit(a);
    };
    for p in 0..22 {
        edge(0, p + 1);
    }
    for (i, h) in hexads.iter().enumerate() {
        for &p in h.points() {
            edge(p as usize + 1, 23 + i);
        }
        for (j, h2) in hexads.iter().enumerate().skip(i + 1) {
            if h.points().iter().all(|&p| !h2.contains(p as usize)) {
                edge(23 + i, 23 + j);
            }
        }
    }
    for row in &adj {
        assert_eq!(row.count_ones(), 22);
    }
    Graph { adj, hexads }
}

/// M22 acting on the graph vertices.
fn lift(g: &Permutation, hexads: &[Block]) -> Permutation {
    let mut images = vec![0u32; N];
    for p in 0..22 {
        images[p + 1] = g.apply(p) as u32 + 1;
    }
    for (i, h) in hexads.iter().enumerate() {
        let j = hexads.binary_search(&h.image(g)).unwrap();
        images[23 + i] = 23 + j as u32;
    }
    Permutation::from_images(images).unwrap()
}

/// Enumerates automorphisms with prescribed images of some vertices,
/// calling `f` until it returns true. Always branches on the unmapped vertex
/// with the fewest candidates.
fn automorphisms(adj: &Adj, fixed: &[(usize, usize)], f: &mut impl FnMut(&[usize]) -> bool) {
    let all = (1u128 << N) - 1;
    let mut map = vec![usize::MAX; N];
    let mut cand = vec![all; N];
    for &(v, w) in fixed {
        if !assign(adj, &mut map, &mut cand, v, w) {
            return;
        }
    }
    rec(adj, &mut map, &cand, f);

    fn assign(adj: &Adj, map: &mut [usize], cand: &mut [u128], v: usize, w: usize) -> bool {
        if cand[v] & bit(w) == 0 {
            return false;
        }
        map[v] = w;
        for u in 0..N {
            if map[u] != usize::MAX {
                continue;
            }
            cand[u] &= !bit(w);
            if adj[v] & bit(u) != 0 {
                cand[u] &= adj[w];
            } else {
                cand[u] &= !adj[w];
            }
            if cand[u] == 0 {
                return false;
            }
        }
        true
    }

    fn rec(adj: &Adj, map: &mut [usize], cand: &[u128], f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        let next = (0..N)
            .filter(|&u| map[u] == usize::MAX)
            .min_by_key(|&u| cand[u].count_ones());
        let Some(v) = next else {
            return f(map);
        };
        let mut options = cand[v];
        while options != 0 {
            let w = options.trailing_zeros() as usize;
            options &= options - 1;
            let mut map2 = map.to_vec();
            let mut cand2 = cand.to_vec();
            if assign(adj, &mut map2, &mut cand2, v, w) && rec(adj, &mut map2, &cand2, f) {
                return true;
            }
        }
        false
    }
}

fn hs_on_vertices(graph: &Graph, m22: &PermGroup) -> PermGroup {
    let lifted: Vec<Permutation> = m22.generators().iter().map(|g| lift(g, &graph.hexads)).collect();
    let mut found = None;
    let mut tried = 0;
    automorphisms(&graph.adj, &[(0, 1), (1, 0)], &mut |map| {
        tried += 1;
        let sigma = Permutation::from_images(map.iter().map(|&x| x as u32).collect()).unwrap();
        let mut gens = lifted.clone();
        gens.push(sigma);
        let g = PermGroup::new(gens).unwrap();
        if g.order_u64() == Some(HS_ORDER) {
            found = Some(g);
            true
        } else {
            false
        }
    });
    eprintln!("automorphisms tried: {tried}");
    found.expect("an automorphism in HS")
}


/// The part of a vertex partition that contains the base vertex.
fn rooted(s: Block) -> Block {
    if s.contains(0) {
        s
    } else {
        s.complement(N)
    }
}

/// Hoffman-Singleton subgraph on the base vertex, a heptad, and the hexads
/// meeting the heptad in one point.
fn hoffman_singleton(graph: &Graph, heptad: &Block) -> Block {
    let mut v: Vec<u32> = vec![0];
    v.extend(heptad.points().iter().map(|&p| p + 1));
    for (i, h) in graph.hexads.iter().enumerate() {
        if h.points().iter().filter(|&&p| heptad.contains(p as usize)).count() == 1 {
            v.push(23 + i as u32);
        }
    }
    let s = Block::new(v, N).unwrap();
    assert_eq!(s.len(), 50);
    for &a in s.points() {
        let deg = s.points().iter().filter(|&&b| graph.adj[a as usize] & bit(b as usize) != 0).count();
        assert_eq!(deg, 7, "not a Hoffman-Singleton subgraph");
    }
    assert_eq!(s.complement(N).points().iter().filter(|&&a| {
        let a = a as usize;
        s.complement(N).points().iter().filter(|&&b| graph.adj[a] & bit(b as usize) != 0).count() == 7
    }).count(), 50);
    s
}

/// Orbit of `start` under `act`, with an element reaching each member.
fn orbit_with_words(
    gens: &[Permutation],
    start: &Block,
    act: impl Fn(&Block, &Permutation) -> Block,
) -> HashMap<Block, Permutation> {
    let mut seen = HashMap::new();
    seen.insert(start.clone(), Permutation::identity(gens[0].degree()));
    let mut queue = vec![start.clone()];
    while let Some(b) = queue.pop() {
        let w = seen[&b].clone();
        for g in gens {
            let c = act(&b, g);
            if !seen.contains_key(&c) {
                seen.insert(c.clone(), w.then(g));
                queue.push(c);
            }
        }
    }
    seen
}

fn on_points(g: &Permutation, points: &[Block]) -> Permutation {
    let images = points
        .iter()
        .map(|s| points.binary_search(&rooted(s.image(g))).unwrap() as u32)
        .collect();
    Permutation::from_images(images).unwrap()
}

/// A small generating set found from random elements.
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

/// A union of `h`-orbits containing the base vertex, of size `m`, whose
/// stabilizer has the given order.
fn search(hs: &PermGroup, h: &PermGroup, m: usize, order: u64, limits: &Limits) -> Option<PermGroup> {
    let orbits = h.orbits();
    let base = orbits.iter().position(|o| o.contains(&0)).unwrap();
    let others: Vec<usize> = (0..orbits.len()).filter(|&i| i != base).collect();
    let need = m - orbits[base].len();
    for mask in 0u64..(1 << others.len()) {
        let chosen: Vec<usize> = (0..others.len()).filter(|i| mask >> i & 1 == 1).map(|i| others[i]).collect();
        if chosen.iter().map(|&i| orbits[i].len()).sum::<usize>() != need {
            continue;
        }
        let mut pts: Vec<u32> = orbits[base].iter().map(|&p| p as u32).collect();
        for &i in &chosen {
            pts.extend(orbits[i].iter().map(|&p| p as u32));
        }
        let delta = Block::new(pts, N).unwrap();
        let stab = set_stabilizer(hs, &delta, limits).unwrap();
        if stab.order_u64() == Some(order) {
            return Some(stab);
        }
    }
    None
}

fn sets_of(group: &PermGroup, k: usize, size: u64, limits: &Limits) -> Vec<Block> {
    sigma_partition_materialized(group, k, limits)
        .unwrap()
        .orbits
        .into_iter()
        .filter(|o| o.size == size)
        .map(|o| o.representative)
        .collect()
}

/// Fixed points of an element of order `p` with `count` fixed points on the
/// 176 points.
fn fixed_set(hs: &PermGroup, p: u64, count: usize, rng: &mut ChaCha8Rng) -> Block {
    loop {
        let x = hs.random_element(|n| rng.gen_range(0..n));
        let ord = x.order();
        if !ord.is_multiple_of(p) {
            continue;
        }
        let y = x.pow(ord / p);
        let fix: Vec<u32> = (0..hs.degree()).filter(|&i| y.apply(i) == i).map(|i| i as u32).collect();
        if fix.len() == count {
            return Block::new(fix, hs.degree()).unwrap();
        }
    }
}

struct Maximal {
    label: &'static str,
    structure: &'static str,
    order: u64,
    how: &'static str,
    group: PermGroup,
}

fn main() {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    let limits = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(176);
    let m22 = GeneratorFile::read(&dir.join("m22.gens")).unwrap().to_group().unwrap();
    let graph = hs_graph(&m22, &limits);
    let hs100 = hs_on_vertices(&graph, &m22);
    eprintln!("HS on 100 vertices: order {}", hs100.order());

    let heptads = sets_of(&m22, 7, 176, &limits);
    assert_eq!(heptads.len(), 2);
    let hosi: Vec<Block> = heptads.iter().map(|h| hoffman_singleton(&graph, h)).collect();
    let act_rooted = |b: &Block, g: &Permutation| rooted(b.image(g));
    let orbit_a = orbit_with_words(hs100.generators(), &hosi[0], act_rooted);
    let mut points: Vec<Block> = orbit_a.keys().cloned().collect();
    points.sort_unstable();
    assert_eq!(points.len(), 176);
    assert!(!points.contains(&hosi[1]), "heptad classes fused");

    let to176 = |g: &PermGroup| -> PermGroup {
        PermGroup::new(g.generators().iter().map(|x| on_points(x, &points)).collect()).unwrap()
    };
    let hs = to176(&hs100);
    assert_eq!(hs.order_u64(), Some(HS_ORDER));
    assert_eq!(hs.transitivity_degree().degree, 2);

    let mut found: Vec<Maximal> = Vec::new();
    let mut add = |label, structure, order: u64, how, g: PermGroup| {
        let g176 = if g.degree() == N { to176(&g) } else { g };
        assert_eq!(g176.order_u64(), Some(order), "{label} {structure}");
        eprintln!("{label} {structure}: orbits {:?}", g176.orbits().iter().map(Vec::len).collect::<Vec<_>>());
        found.push(Maximal { label, structure, order, how, group: g176 });
    };

    add("M1", "M22", 443_520, "stabilizer of a vertex of the Higman-Sims graph", hs100.point_stabilizer(0).unwrap());

    let b_part = orbit_with_words(hs100.generators(), &hosi[1], |b, g| b.image(g));
    let swap = b_part[&hosi[1].complement(N)].clone();
    let mut gens = set_stabilizer(&hs100, &hosi[1], &limits).unwrap().generators().to_vec();
    gens.push(swap);
    add("M2", "U3(5):2", 252_000, "stabilizer of a partition of the graph into two Hoffman-Singleton subgraphs, second class", PermGroup::new(gens).unwrap());
    let a_index = points.binary_search(&hosi[0]).unwrap();
    add("M3", "U3(5):2", 252_000, "point stabilizer of the 176-point action", hs.point_stabilizer(a_index).unwrap());
    add("M4", "L3(4):2", 40_320, "stabilizer of an edge of the Higman-Sims graph", set_stabilizer(&hs100, &Block::new(vec![0, 1], N).unwrap(), &limits).unwrap());

    let octad = &sets_of(&m22, 8, 330, &limits)[0];
    let octad_stab = set_stabilizer(&m22, octad, &limits).unwrap();
    let lift_group = |g: &PermGroup| PermGroup::new(g.generators().iter().map(|x| lift(x, &graph.hexads)).collect()).unwrap();
    let s8 = search(&hs100, &lift_group(&octad_stab), 30, 40_320, &limits).expect("S8");
    add("M5", "S8", 40_320, "stabilizer of a 30-vertex union of orbits of an octad stabilizer", s8);
    add("M6", "2^4.S6", 11_520, "stabilizer of a non-edge of the Higman-Sims graph", set_stabilizer(&hs100, &Block::new(vec![0, 23], N).unwrap(), &limits).unwrap());
    let m7 = search(&hs100, &lift_group(&octad_stab), 8, 10_752, &limits).expect("4^3:L3(2)");
    add("M7", "4^3:L3(2)", 10_752, "stabilizer of an 8-vertex union of orbits of an octad stabilizer", m7);

    let endecads = sets_of(&m22, 11, 672, &limits);
    assert_eq!(endecads.len(), 2);
    for (label, e) in ["M8", "M9"].into_iter().zip(&endecads) {
        let l211 = lift_group(&set_stabilizer(&m22, e, &limits).unwrap());
        let stab = search(&hs100, &l211, 12, 7_920, &limits).expect("M11");
        add(label, "M11", 7_920, "stabilizer of a 12-vertex union of orbits of an endecad stabilizer", stab);
    }
    let fix2 = fixed_set(&hs, 2, 16, &mut rng);
    add("M10", "4.2^4:S5", 7_680, "stabilizer of the 16 fixed points of an involution", set_stabilizer(&hs, &fix2, &limits).unwrap());
    add("M11", "2xA6.2^2", 2_880, "stabilizer of a pair of points", set_stabilizer(&hs, &Block::new(vec![0, 1], 176).unwrap(), &limits).unwrap());
    let fix5 = fixed_set(&hs, 5, 6, &mut rng);
    add("M12", "5:4xA5", 1_200, "stabilizer of the 6 fixed points of an element of order 5", set_stabilizer(&hs, &fix5, &limits).unwrap());

    // relabel so that point 1 lies in the 50-point orbit of M2
    let j = found[1].group.orbits().into_iter().find(|o| o.len() == 50).unwrap()[0];
    let mut relabel: Vec<u32> = (0..176u32).collect();
    relabel.swap(0, j);
    let relabel = Permutation::from_images(relabel).unwrap();
    let conj = |x: &Permutation| relabel.inverse().then(x).then(&relabel);

    let source = "generated by the build_hs example from the M22 fixture: action of HS on one class of 176 partitions of the Higman-Sims graph into two Hoffman-Singleton subgraphs";
    let hs_gens: Vec<Permutation> = compact(&hs, &mut rng).iter().map(conj).collect();
    let file = GeneratorFile {
        degree: 176,
        expected_order: Some(hs.order()),
        name: Some("HS".into()),
        source: Some(source.into()),
        metadata: vec![],
        permutations: hs_gens.clone(),
    };
    std::fs::write(dir.join("hs.gens"), file.to_text()).unwrap();
    let hs_final = PermGroup::new(hs_gens).unwrap();
    for m in &found {
        let gens: Vec<Permutation> = compact(&m.group, &mut rng).iter().map(conj).collect();
        let g = PermGroup::new(gens.clone()).unwrap();
        g.check_subgroup_of(&hs_final).unwrap();
        let file = GeneratorFile {
            degree: 176,
            expected_order: Some(m.order.into()),
            name: Some(format!("HS.{}", m.label)),
            source: Some(format!("generated by the build_hs example: {}", m.how)),
            metadata: vec![("structure".into(), m.structure.into())],
            permutations: gens,
        };
        std::fs::write(dir.join(format!("hs_{}.gens", m.label.to_lowercase())), file.to_text()).unwrap();
    }
    eprintln!("wrote hs.gens and {} subgroup files", found.len());
}

//! Block-transitive designs built from group orbits, and their verification.
//!
//! Two constructions are provided: the orbit of an arbitrary k-subset
//! ([`design_from_orbit`]) and the orbit of a union of orbits of a maximal
//! subgroup ([`design_from_maximal`], [`merge_orbits`]). The converse
//! direction, recovering the subgroup orbits that make up a block, is
//! [`decompose_block`].

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{binomial, Binomials, Block};
use crate::error::{Error, Result};
use crate::group::{is_primitive_action, PermGroup};
use crate::orbit::{action_of, block_orbit, set_stabilizer, to_u64, BlockOrbit, Limits};

/// Block sets up to this size get their block action checked for primitivity,
/// which certifies maximality of the block stabilizer.
pub const MAXIMALITY_CHECK_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Maximality {
    /// The subgroup's maximality was proved via primitivity of the block action.
    Verified,
    /// Taken on trust from the caller.
    Asserted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockAction {
    Primitive,
    Transitive,
}

/// How a design was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    Orbit {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    Maximal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subgroup: Option<String>,
        subgroup_order: String,
        /// 1-based base point, when the block is the orbit of a point.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<usize>,
        /// Indices into `orbit_sizes` of the merged subgroup orbits.
        merged: Vec<usize>,
        orbit_sizes: Vec<usize>,
        maximality: Maximality,
        block_action: BlockAction,
        /// The block is the whole point set (the 1-(n,n,1) design).
        #[serde(default)]
        degenerate: bool,
    },
    Complement {
        of: Box<Construction>,
    },
    Explicit,
}

/// Coverage of t-subsets by blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TDesignCertificate {
    pub t: usize,
    pub lambda_t: Option<u64>,
    pub verified: bool,
    /// coverage count -> number of t-subsets with that count
    pub coverage_histogram: BTreeMap<u64, u64>,
}

impl TDesignCertificate {
    fn from_histogram(t: usize, coverage_histogram: BTreeMap<u64, u64>) -> Self {
        let lambda_t = match coverage_histogram.len() {
            1 => coverage_histogram.keys().next().copied(),
            _ => None,
        };
        TDesignCertificate {
            t,
            lambda_t,
            verified: lambda_t.is_some(),
            coverage_histogram,
        }
    }
}

/// Non-certifying coverage estimate from random t-subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledCoverage {
    pub t: usize,
    pub samples: usize,
    pub coverage_histogram: BTreeMap<u64, u64>,
    pub certifying: bool,
}

/// A design on `0..v` with a materialized, sorted block list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub v: usize,
    pub k: usize,
    pub b: u64,
    pub r: u64,
    pub representative: Block,
    pub blocks: Vec<Block>,
    pub group: Option<String>,
    pub construction: Construction,
    pub certificate: Option<TDesignCertificate>,
}

impl Design {
    /// Validates an explicit block list: uniform block size, no repeats, and a
    /// constant replication number.
    pub fn from_blocks(v: usize, mut blocks: Vec<Block>, construction: Construction) -> Result<Self> {
        let first = blocks
            .first()
            .cloned()
            .ok_or_else(|| Error::InvalidSelection("a design needs at least one block".into()))?;
        let k = first.len();
        let mut point_count = vec![0u64; v];
        for block in &blocks {
            if block.len() != k {
                return Err(Error::InvalidSelection(format!(
                    "blocks of sizes {k} and {}",
                    block.len()
                )));
            }
            for &p in block.points() {
                let p = p as usize;
                if p >= v {
                    return Err(Error::PointOutOfRange { point: p, degree: v });
                }
                point_count[p] += 1;
            }
        }
        blocks.sort_unstable();
        if blocks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSelection("repeated block".into()));
        }
        let r = point_count[0];
        if point_count.iter().any(|&c| c != r) {
            return Err(Error::InvalidSelection(
                "replication number is not constant (not a 1-design)".into(),
            ));
        }
        Ok(Design {
            v,
            k,
            b: blocks.len() as u64,
            r,
            representative: first,
            blocks,
            group: None,
            construction,
            certificate: None,
        })
    }

    /// `(t, lambda_t)` from the attached certificate, if any.
    pub fn t_lambda(&self) -> Option<(usize, u64)> {
        self.certificate
            .as_ref()
            .and_then(|c| c.lambda_t.map(|l| (c.t, l)))
    }

    pub fn to_document(&self, block_threshold: u64) -> DesignDocument {
        DesignDocument {
            v: self.v,
            b: self.b,
            k: self.k,
            r: self.r,
            t: self.t_lambda().map(|(t, _)| t),
            lambda_t: self.t_lambda().map(|(_, l)| l),
            group: self.group.clone(),
            representative: self.representative.clone(),
            construction: self.construction.clone(),
            certificate: self.certificate.clone(),
            blocks: (self.b <= block_threshold).then(|| self.blocks.clone()),
        }
    }
}

/// JSON form of a design. Blocks are omitted above a size threshold, in
/// which case `group` and `representative` identify the block orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub v: usize,
    pub b: u64,
    pub k: usize,
    pub r: u64,
    pub t: Option<usize>,
    pub lambda_t: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub representative: Block,
    pub construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<TDesignCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Block>>,
}

impl DesignDocument {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rebuilds the design from the stored blocks, or by expanding the
    /// representative under `group` when blocks were omitted. The stored
    /// `b`, `k` and `r` must match what is rebuilt.
    pub fn into_design(self, group: Option<&PermGroup>, limits: &Limits) -> Result<Design> {
        let blocks = match (self.blocks, group) {
            (Some(blocks), _) => blocks,
            (None, Some(g)) => block_orbit(g, &self.representative, limits)?
                .members
                .expect("materialized"),
            (None, None) => {
                return Err(Error::InvalidSelection(
                    "design has no blocks and no group to regenerate them".into(),
                ))
            }
        };
        let mut design = Design::from_blocks(self.v, blocks, self.construction)?;
        if (design.b, design.k, design.r) != (self.b, self.k, self.r) {
            return Err(Error::InvalidSelection(format!(
                "stored parameters (b={}, k={}, r={}) disagree with blocks (b={}, k={}, r={})",
                self.b, self.k, self.r, design.b, design.k, design.r
            )));
        }
        design.representative = self.representative;
        design.group = self.group;
        Ok(design)
    }
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn exact_div(num: &BigUint, den: &BigUint, what: &str) -> Result<BigUint> {
    let (q, r) = num.div_rem(den);
    if !r.is_zero() {
        return Err(Error::Inconsistent(format!("{what}: {num}/{den} is not an integer")));
    }
    Ok(q)
}

/// The orbit of one block under a transitive group, a 1-(n, k, kb/n) design.
pub fn design_from_orbit(group: &PermGroup, orbit: &BlockOrbit) -> Result<Design> {
    let n = group.degree();
    if !group.is_transitive() {
        return Err(Error::NotTransitive { degree: n });
    }
    let members = match &orbit.members {
        Some(m) => m.clone(),
        None => block_orbit(group, &orbit.representative, &Limits::default())?
            .members
            .expect("materialized"),
    };
    let k = orbit.k();
    let b = members.len() as u64;
    if b != orbit.size {
        return Err(Error::Inconsistent(format!(
            "orbit lists {} members but reports size {}",
            b, orbit.size
        )));
    }
    let r = to_u64(&exact_div(&(big(k as u64) * big(b)), &big(n as u64), "replication number")?)?;
    Ok(Design {
        v: n,
        k,
        b,
        r,
        representative: orbit.representative.clone(),
        blocks: members,
        group: group.name().map(str::to_string),
        construction: Construction::Orbit { k, index: None },
        certificate: None,
    })
}

/// Checks the preconditions shared by the maximal-subgroup constructions and
/// returns `|G_alpha|`.
fn check_maximal_inputs(group: &PermGroup, subgroup: &PermGroup) -> Result<BigUint> {
    let n = group.degree();
    subgroup.check_subgroup_of(group)?;
    if !group.is_primitive() {
        return Err(Error::NotPrimitive { degree: n });
    }
    let point_stab = exact_div(&group.order(), &big(n as u64), "point stabilizer order")?;
    if subgroup.order() > point_stab {
        return Err(Error::SubgroupTooLarge {
            subgroup: subgroup.order().to_string(),
            stabilizer: point_stab.to_string(),
        });
    }
    Ok(point_stab)
}

/// Orbits of `subgroup` on the points, ordered by smallest point.
pub fn subgroup_orbits(subgroup: &PermGroup) -> Vec<Vec<usize>> {
    subgroup.orbits()
}

/// `Delta = alpha^M` for a maximal subgroup `M`
/// with `|M| <= |G_alpha|`; blocks are the `G`-images of `Delta`.
pub fn design_from_maximal(
    group: &PermGroup,
    subgroup: &PermGroup,
    alpha: usize,
    limits: &Limits,
) -> Result<Design> {
    if alpha >= group.degree() {
        return Err(Error::PointOutOfRange {
            point: alpha,
            degree: group.degree(),
        });
    }
    let orbits = subgroup_orbits(subgroup);
    let index = orbits
        .iter()
        .position(|o| o.binary_search(&alpha).is_ok())
        .expect("orbits partition the points");
    merge_impl(group, subgroup, &orbits, vec![index], Some(alpha), limits)
}

/// Merged construction: the block is a union of the selected orbits of `M`
/// (indices as in [`subgroup_orbits`]).
pub fn merge_orbits(
    group: &PermGroup,
    subgroup: &PermGroup,
    orbit_indices: &[usize],
    limits: &Limits,
) -> Result<Design> {
    let orbits = subgroup_orbits(subgroup);
    let mut selection = orbit_indices.to_vec();
    selection.sort_unstable();
    selection.dedup();
    if selection.is_empty() {
        return Err(Error::InvalidSelection("no subgroup orbits selected".into()));
    }
    if let Some(&bad) = selection.iter().find(|&&i| i >= orbits.len()) {
        return Err(Error::InvalidSelection(format!(
            "orbit index {bad} out of range (subgroup has {} orbits)",
            orbits.len()
        )));
    }
    merge_impl(group, subgroup, &orbits, selection, None, limits)
}

fn merge_impl(
    group: &PermGroup,
    subgroup: &PermGroup,
    orbits: &[Vec<usize>],
    selection: Vec<usize>,
    alpha: Option<usize>,
    limits: &Limits,
) -> Result<Design> {
    let n = group.degree();
    let point_stab = check_maximal_inputs(group, subgroup)?;
    let m_order = subgroup.order();
    let mut points: Vec<u32> = selection
        .iter()
        .flat_map(|&i| orbits[i].iter().map(|&p| p as u32))
        .collect();
    points.sort_unstable();
    let delta = Block::new(points, n)?;
    let k = delta.len();
    let orbit_sizes: Vec<usize> = orbits.iter().map(Vec::len).collect();
    let provenance = |maximality, block_action, degenerate| Construction::Maximal {
        subgroup: subgroup.name().map(str::to_string),
        subgroup_order: m_order.to_string(),
        alpha: alpha.map(|a| a + 1),
        merged: selection.clone(),
        orbit_sizes: orbit_sizes.clone(),
        maximality,
        block_action,
        degenerate,
    };

    if k == n {
        return Ok(Design {
            v: n,
            k: n,
            b: 1,
            r: 1,
            representative: delta.clone(),
            blocks: vec![delta],
            group: group.name().map(str::to_string),
            construction: provenance(Maximality::Asserted, BlockAction::Primitive, true),
            certificate: None,
        });
    }

    let orbit = block_orbit(group, &delta, limits)?;
    let b = orbit.size;
    let block_stab = exact_div(&group.order(), &big(b), "block stabilizer order")?;
    if block_stab != m_order {
        // M <= G_Delta < G, so M is not maximal
        return Err(Error::NotMaximal {
            subgroup: m_order.to_string(),
            block_stabilizer: block_stab.to_string(),
        });
    }
    let r_subgroup = exact_div(&(&point_stab * big(k as u64)), &m_order, "|G_alpha| k / |M|")?;
    let r_count = exact_div(&(big(k as u64) * big(b)), &big(n as u64), "k b / n")?;
    if r_subgroup != r_count {
        return Err(Error::Inconsistent(format!(
            "replication numbers disagree: |G_alpha| k/|M| = {r_subgroup}, kb/n = {r_count}"
        )));
    }
    let members = orbit.members.expect("materialized");
    let (maximality, block_action) = if b <= MAXIMALITY_CHECK_LIMIT {
        if primitive_on_blocks(group, subgroup, &delta, &members)? {
            (Maximality::Verified, BlockAction::Primitive)
        } else {
            return Err(Error::NotMaximal {
                subgroup: m_order.to_string(),
                block_stabilizer: block_stab.to_string(),
            });
        }
    } else {
        (Maximality::Asserted, BlockAction::Transitive)
    };
    Ok(Design {
        v: n,
        k,
        b,
        r: to_u64(&r_count)?,
        representative: delta,
        blocks: members,
        group: group.name().map(str::to_string),
        construction: provenance(maximality, block_action, false),
        certificate: None,
    })
}

/// Primitivity of `G` on the block orbit of `delta`, given generators of the
/// block stabilizer.
fn primitive_on_blocks(
    group: &PermGroup,
    block_stabilizer: &PermGroup,
    delta: &Block,
    members: &[Block],
) -> Result<bool> {
    // put delta at index 0 so the stabilizer generators fix point 0
    let mut ordered: Vec<Block> = Vec::with_capacity(members.len());
    ordered.push(delta.clone());
    ordered.extend(members.iter().filter(|b| *b != delta).cloned());
    let gens = group
        .generators()
        .iter()
        .map(|g| action_of(g, &ordered))
        .collect::<Result<Vec<_>>>()?;
    let stab = block_stabilizer
        .generators()
        .iter()
        .map(|g| action_of(g, &ordered))
        .collect::<Result<Vec<_>>>()?;
    if stab.iter().any(|s| s.apply(0) != 0) {
        return Err(Error::Inconsistent("stabilizer moves its block".into()));
    }
    Ok(is_primitive_action(ordered.len(), &gens, &stab))
}

/// A block split into orbits of its stabilizer.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub stabilizer: PermGroup,
    /// All orbits of the stabilizer on the points, ordered by smallest point.
    pub orbits: Vec<Vec<usize>>,
    /// Indices into `orbits` whose union is the block.
    pub merged: Vec<usize>,
    /// Primitivity of the block action, when the block orbit is small enough
    /// to check; `Some(false)` means the design is not block-primitive.
    pub block_primitive: Option<bool>,
}

impl Decomposition {
    pub fn merged_sizes(&self) -> Vec<usize> {
        self.merged.iter().map(|&i| self.orbits[i].len()).collect()
    }
}

/// `M = G_B` and `B` written as a union of `M`-orbits.
pub fn decompose_block(group: &PermGroup, design: &Design, limits: &Limits) -> Result<Decomposition> {
    let block = &design.representative;
    let stabilizer = set_stabilizer(group, block, limits)?;
    let orbits = stabilizer.orbits();
    let merged: Vec<usize> = orbits
        .iter()
        .enumerate()
        .filter(|(_, o)| block.contains(o[0]))
        .map(|(i, _)| i)
        .collect();
    let covered: usize = merged.iter().map(|&i| orbits[i].len()).sum();
    if covered != block.len() {
        return Err(Error::Inconsistent("block is not a union of stabilizer orbits".into()));
    }
    let block_primitive = if design.b <= MAXIMALITY_CHECK_LIMIT {
        Some(primitive_on_blocks(group, &stabilizer, block, &design.blocks)?)
    } else {
        None
    };
    Ok(Decomposition {
        stabilizer,
        orbits,
        merged,
        block_primitive,
    })
}

/// Calls `f` with the colex rank of every t-subset of the ascending `points`.
fn for_each_subset_rank(points: &[u32], t: usize, binom: &Binomials, f: &mut impl FnMut(usize)) {
    fn rec(
        points: &[u32],
        t: usize,
        start: usize,
        depth: usize,
        partial: u64,
        binom: &Binomials,
        f: &mut impl FnMut(usize),
    ) {
        if depth == t {
            f(partial as usize);
            return;
        }
        for i in start..=points.len() - (t - depth) {
            let rank = partial + binom.get(points[i] as usize, depth + 1);
            rec(points, t, i + 1, depth + 1, rank, binom, f);
        }
    }
    rec(points, t, 0, 0, 0, binom, f);
}

/// Adds one to the counter of every t-subset of `points`.
fn accumulate(points: &[u32], t: usize, binom: &Binomials, acc: &mut [u64]) {
    match t {
        1 => points.iter().for_each(|&p| acc[p as usize] += 1),
        2 => {
            for (j, &pj) in points.iter().enumerate() {
                let base = binom.get(pj as usize, 2) as usize;
                for &pi in &points[..j] {
                    acc[base + pi as usize] += 1;
                }
            }
        }
        3 => {
            for (l, &pl) in points.iter().enumerate() {
                let c3 = binom.get(pl as usize, 3) as usize;
                for (j, &pj) in points[..l].iter().enumerate() {
                    let base = c3 + binom.get(pj as usize, 2) as usize;
                    for &pi in &points[..j] {
                        acc[base + pi as usize] += 1;
                    }
                }
            }
        }
        _ => for_each_subset_rank(points, t, binom, &mut |r| acc[r] += 1),
    }
}

/// Exact coverage count of every t-subset of the points.
pub fn coverage_counts(design: &Design, t: usize, limits: &Limits) -> Result<Vec<u64>> {
    if t > design.k {
        return Err(Error::InvalidSelection(format!(
            "t = {t} exceeds block size {}",
            design.k
        )));
    }
    let per_block = binomial(design.k as u64, t as u64).unwrap_or(u128::MAX);
    let work = per_block.saturating_mul(design.b as u128);
    if work > limits.max_work as u128 {
        return Err(Error::resource(
            "coverage work b*C(k,t) (use sampled verification for an estimate)",
            "--cap-work",
            limits.max_work,
            work,
        ));
    }
    let cells = binomial(design.v as u64, t as u64).unwrap_or(u128::MAX);
    if cells > limits.max_subsets as u128 {
        return Err(Error::resource(
            "t-subset index C(v,t)",
            "--cap-subsets",
            limits.max_subsets,
            cells,
        ));
    }
    let cells = cells as usize;
    let binom = Binomials::new(design.v);
    let counts = design
        .blocks
        .par_chunks(512)
        .fold(
            || vec![0u64; cells],
            |mut acc, chunk| {
                for block in chunk {
                    accumulate(block.points(), t, &binom, &mut acc);
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

/// Certifies (or refutes) that `design` is a t-design.
pub fn verify_t_design(design: &Design, t: usize, limits: &Limits) -> Result<TDesignCertificate> {
    if t == 0 || t > design.k {
        return Err(Error::InvalidSelection(format!(
            "t must satisfy 1 <= t <= k = {}",
            design.k
        )));
    }
    let counts = coverage_counts(design, t, limits)?;
    let mut histogram = BTreeMap::new();
    for c in counts {
        *histogram.entry(c).or_insert(0u64) += 1;
    }
    Ok(TDesignCertificate::from_histogram(t, histogram))
}

/// Coverage of `samples` random t-subsets. Never certifies.
pub fn verify_t_design_sampled(design: &Design, t: usize, samples: usize, seed: u64) -> Result<SampledCoverage> {
    if t == 0 || t > design.k {
        return Err(Error::InvalidSelection(format!(
            "t must satisfy 1 <= t <= k = {}",
            design.k
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut histogram = BTreeMap::new();
    for _ in 0..samples {
        let subset: Vec<usize> = sample(&mut rng, design.v, t).into_vec();
        let c = design
            .blocks
            .par_iter()
            .filter(|b| subset.iter().all(|&p| b.contains(p)))
            .count() as u64;
        *histogram.entry(c).or_insert(0u64) += 1;
    }
    Ok(SampledCoverage {
        t,
        samples,
        coverage_histogram: histogram,
        certifying: false,
    })
}

/// `lambda_s = lambda_t * C(v-s, t-s) / C(k-s, t-s)`, exact.
pub fn lambda_s(lambda_t: u64, t: usize, s: usize, v: usize, k: usize) -> Result<BigRational> {
    if !(s <= t && t <= k && k <= v) {
        return Err(Error::InvalidSelection(format!(
            "need s <= t <= k <= v, got s={s} t={t} k={k} v={v}"
        )));
    }
    let num = binomial((v - s) as u64, (t - s) as u64)
        .ok_or_else(|| Error::Inconsistent("binomial overflow".into()))?;
    let den = binomial((k - s) as u64, (t - s) as u64)
        .ok_or_else(|| Error::Inconsistent("binomial overflow".into()))?;
    Ok(BigRational::new(
        BigInt::from(lambda_t) * BigInt::from(num),
        BigInt::from(den),
    ))
}

/// Blocks replaced by their complements: `k' = v - k`, `r' = b - r`.
pub fn complement_design(design: &Design) -> Result<Design> {
    if design.k >= design.v {
        return Err(Error::InvalidSelection("complement needs k < v".into()));
    }
    let mut blocks: Vec<Block> = design.blocks.iter().map(|b| b.complement(design.v)).collect();
    blocks.sort_unstable();
    Ok(Design {
        v: design.v,
        k: design.v - design.k,
        b: design.b,
        r: design.b - design.r,
        representative: design.representative.complement(design.v),
        blocks,
        group: design.group.clone(),
        construction: Construction::Complement {
            of: Box::new(design.construction.clone()),
        },
        certificate: None,
    })
}

/// `lambda_t` of the complement of a t-(v,k,lambda_t) design with `b` blocks,
/// by inclusion-exclusion: `sum_i (-1)^i C(t,i) lambda_i`, `lambda_0 = b`.
/// `None` if some `lambda_i` is not integral or the result is negative.
pub fn complement_lambda(b: u64, v: usize, k: usize, t: usize, lambda_t: u64) -> Option<u64> {
    let mut total = BigInt::zero();
    for i in 0..=t {
        let li = lambda_s(lambda_t, t, i, v, k).ok()?;
        if i == 0 && li != BigRational::from_integer(BigInt::from(b)) {
            return None;
        }
        if !li.is_integer() {
            return None;
        }
        let term = li.to_integer() * BigInt::from(binomial(t as u64, i as u64)?);
        if i % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total.to_u64()
}

/// Largest `t <= min(transitivity degree of G, k)` at which the design has
/// constant coverage, searched downward. `t = 0` (with `lambda_0 = b`) if
/// not even a 1-design.
pub fn max_t(group: &PermGroup, design: &Design, limits: &Limits) -> Result<TDesignCertificate> {
    let cap = group.transitivity_degree().degree.min(design.k);
    for t in (1..=cap).rev() {
        let cert = verify_t_design(design, t, limits)?;
        if cert.verified {
            return Ok(cert);
        }
    }
    Ok(TDesignCertificate::from_histogram(0, BTreeMap::from([(design.b, 1)])))
}

/// `lambda_s` as an integer, when it is one.
pub fn lambda_s_integer(lambda_t: u64, t: usize, s: usize, v: usize, k: usize) -> Option<u64> {
    let q = lambda_s(lambda_t, t, s, v, k).ok()?;
    if q.denom().is_one() {
        q.numer().to_u64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutation;

    fn cyc(n: usize, cycles: &[&[u32]]) -> Permutation {
        let c: Vec<Vec<u32>> = cycles.iter().map(|c| c.to_vec()).collect();
        Permutation::from_cycles(n, &c).unwrap()
    }

    /// PSL(2,7) on the projective line F7 + {inf}, inf = point 7.
    fn psl27() -> PermGroup {
        // x -> x + 1 and x -> -1/x
        let shift = cyc(8, &[&[0, 1, 2, 3, 4, 5, 6]]);
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
        PermGroup::new(vec![shift, Permutation::from_images(inv).unwrap()]).unwrap()
    }

    #[test]
    fn psl27_is_primitive_of_order_168() {
        let g = psl27();
        assert_eq!(g.order(), BigUint::from(168u32));
        assert!(g.is_primitive());
        assert_eq!(g.transitivity_degree().degree, 2);
    }

    #[test]
    fn complete_design_replication() {
        let s6 = PermGroup::symmetric(6);
        let o = block_orbit(&s6, &Block::new(vec![0, 1, 2], 6).unwrap(), &Limits::default()).unwrap();
        let d = design_from_orbit(&s6, &o).unwrap();
        assert_eq!((d.b, d.r), (20, 10));
        let cert = verify_t_design(&d, 3, &Limits::default()).unwrap();
        assert!(cert.verified);
        assert_eq!(cert.lambda_t, Some(1));
        let cert2 = verify_t_design(&d, 2, &Limits::default()).unwrap();
        assert_eq!(cert2.lambda_t, Some(4)); // C(4,1)
    }

    #[test]
    fn orbit_design_requires_transitivity() {
        let g = PermGroup::new(vec![cyc(4, &[&[0, 1]])]).unwrap();
        let o = block_orbit(&g, &Block::new(vec![0], 4).unwrap(), &Limits::default()).unwrap();
        assert!(matches!(design_from_orbit(&g, &o), Err(Error::NotTransitive { .. })));
    }

    #[test]
    fn point_stabilizer_gives_the_singleton_design() {
        let g = psl27();
        let m = g.point_stabilizer(7).unwrap();
        let d = design_from_maximal(&g, &m, 7, &Limits::default()).unwrap();
        assert_eq!((d.k, d.b, d.r), (1, 8, 1));
        let d7 = design_from_maximal(&g, &m, 0, &Limits::default()).unwrap();
        assert_eq!((d7.k, d7.b, d7.r), (7, 8, 7));
        match &d7.construction {
            Construction::Maximal { maximality, orbit_sizes, .. } => {
                assert_eq!(*maximality, Maximality::Verified);
                assert_eq!(orbit_sizes, &vec![7, 1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn merging_everything_is_degenerate() {
        let g = psl27();
        let m = g.point_stabilizer(7).unwrap();
        let d = merge_orbits(&g, &m, &[0, 1], &Limits::default()).unwrap();
        assert_eq!((d.v, d.k, d.b, d.r), (8, 8, 1, 1));
        assert!(matches!(d.construction, Construction::Maximal { degenerate: true, .. }));
        assert!(matches!(
            merge_orbits(&g, &m, &[], &Limits::default()),
            Err(Error::InvalidSelection(_))
        ));
        assert!(matches!(
            merge_orbits(&g, &m, &[2], &Limits::default()),
            Err(Error::InvalidSelection(_))
        ));
    }

    #[test]
    fn non_maximal_subgroup_is_rejected() {
        let g = psl27();
        // a subgroup of order 7 lies inside the point stabilizer 7:3
        let c7 = PermGroup::new(vec![cyc(8, &[&[0, 1, 2, 3, 4, 5, 6]])]).unwrap();
        let err = design_from_maximal(&g, &c7, 0, &Limits::default()).unwrap_err();
        assert!(matches!(err, Error::NotMaximal { .. }), "{err}");
    }

    #[test]
    fn subgroup_checks() {
        let g = psl27();
        let outsider = PermGroup::new(vec![cyc(8, &[&[0, 1]])]).unwrap();
        assert!(matches!(
            design_from_maximal(&g, &outsider, 0, &Limits::default()),
            Err(Error::NotSubgroup { index: 0 })
        ));
        let s8 = PermGroup::symmetric(8);
        let c4 = PermGroup::new(vec![cyc(8, &[&[0, 2, 4, 6], &[1, 3, 5, 7]])]).unwrap();
        // imprimitive overgroup
        let imprim = PermGroup::new(vec![cyc(8, &[&[0, 1, 2, 3, 4, 5, 6, 7]])]).unwrap();
        assert!(matches!(
            design_from_maximal(&imprim, &c4, 0, &Limits::default()),
            Err(Error::NotPrimitive { .. })
        ));
        // |M| = |S8| > |S7|
        assert!(matches!(
            design_from_maximal(&s8, &s8, 0, &Limits::default()),
            Err(Error::SubgroupTooLarge { .. })
        ));
    }

    #[test]
    fn lambda_s_arithmetic() {
        assert_eq!(lambda_s_integer(1, 3, 2, 22, 6), Some(5));
        assert_eq!(lambda_s_integer(3, 3, 1, 22, 4), Some(210));
        assert_eq!(lambda_s_integer(7, 3, 3, 22, 9), Some(7));
        // 2-(7,3,1): lambda_1 = 3, lambda_0 = 7
        assert_eq!(lambda_s_integer(1, 2, 1, 7, 3), Some(3));
        assert_eq!(lambda_s_integer(1, 2, 0, 7, 3), Some(7));
        // lambda_1 of a putative 2-(8,3,1) is 7/2
        let q = lambda_s(1, 2, 1, 8, 3).unwrap();
        assert_eq!(q, BigRational::new(BigInt::from(7), BigInt::from(2)));
        assert!(lambda_s(1, 3, 4, 22, 6).is_err());
    }

    #[test]
    fn complement_lambda_of_hexads() {
        // S(3,6,22) complement: 77 - 3*21 + 3*5 - 1 = 28
        assert_eq!(complement_lambda(77, 22, 6, 3, 1), Some(28));
        assert_eq!(complement_lambda(78, 22, 6, 3, 1), None);
    }

    #[test]
    fn fano_plane_from_cyclic_group() {
        // {0,1,3} under x -> x+1 mod 7 is the Fano plane
        let c7 = PermGroup::new(vec![cyc(7, &[&[0, 1, 2, 3, 4, 5, 6]])]).unwrap();
        let o = block_orbit(&c7, &Block::new(vec![0, 1, 3], 7).unwrap(), &Limits::default()).unwrap();
        let d = design_from_orbit(&c7, &o).unwrap();
        assert_eq!((d.b, d.r), (7, 3));
        let cert = verify_t_design(&d, 2, &Limits::default()).unwrap();
        assert_eq!(cert.lambda_t, Some(1));
        // the complement is a 2-(7,4,2) design
        let c = complement_design(&d).unwrap();
        assert_eq!((c.k, c.b, c.r), (4, 7, 4));
        assert_eq!(verify_t_design(&c, 2, &Limits::default()).unwrap().lambda_t, Some(2));
        assert_eq!(complement_design(&c).unwrap().blocks, d.blocks);
        // not a 3-design
        let cert3 = verify_t_design(&d, 3, &Limits::default()).unwrap();
        assert!(!cert3.verified);
        assert_eq!(cert3.coverage_histogram, BTreeMap::from([(0, 28), (1, 7)]));
        // max_t is capped by the group's transitivity (C7 is only 1-transitive)
        assert_eq!(max_t(&c7, &d, &Limits::default()).unwrap().t, 1);
    }

    #[test]
    fn fast_paths_agree_with_generic_enumeration() {
        let binom = Binomials::new(12);
        let points = [0u32, 2, 3, 7, 9, 11];
        for t in 1..=4 {
            let cells = binom.get(12, t) as usize;
            let mut fast = vec![0u64; cells];
            accumulate(&points, t, &binom, &mut fast);
            let mut slow = vec![0u64; cells];
            for_each_subset_rank(&points, t, &binom, &mut |r| slow[r] += 1);
            assert_eq!(fast, slow, "t = {t}");
            assert_eq!(fast.iter().sum::<u64>(), binom.get(6, t));
        }
    }

    #[test]
    fn work_cap_suggests_sampling() {
        let c7 = PermGroup::new(vec![cyc(7, &[&[0, 1, 2, 3, 4, 5, 6]])]).unwrap();
        let o = block_orbit(&c7, &Block::new(vec![0, 1, 3], 7).unwrap(), &Limits::default()).unwrap();
        let d = design_from_orbit(&c7, &o).unwrap();
        let limits = Limits { max_work: 10, ..Limits::default() };
        let err = verify_t_design(&d, 2, &limits).unwrap_err();
        assert!(err.to_string().contains("sampled"), "{err}");
        let est = verify_t_design_sampled(&d, 2, 50, 7).unwrap();
        assert!(!est.certifying);
        assert_eq!(est.coverage_histogram, BTreeMap::from([(1, 50)]));
    }

    #[test]
    fn explicit_blocks_are_validated() {
        let b = |v: &[u32]| Block::new(v.to_vec(), 4).unwrap();
        assert!(Design::from_blocks(4, vec![b(&[0, 1]), b(&[2])], Construction::Explicit).is_err());
        assert!(Design::from_blocks(4, vec![b(&[0, 1]), b(&[0, 2])], Construction::Explicit).is_err());
        let d = Design::from_blocks(4, vec![b(&[0, 1]), b(&[2, 3])], Construction::Explicit).unwrap();
        assert_eq!((d.b, d.k, d.r), (2, 2, 1));
    }

    #[test]
    fn document_round_trip() {
        let c7 = PermGroup::new(vec![cyc(7, &[&[0, 1, 2, 3, 4, 5, 6]])]).unwrap().with_name("C7");
        let o = block_orbit(&c7, &Block::new(vec![0, 1, 3], 7).unwrap(), &Limits::default()).unwrap();
        let mut d = design_from_orbit(&c7, &o).unwrap();
        d.certificate = Some(verify_t_design(&d, 2, &Limits::default()).unwrap());
        let doc = d.to_document(100);
        let json = doc.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["t"], 2);
        assert_eq!(v["lambda_t"], 1);
        assert_eq!(v["construction"]["kind"], "orbit");
        assert_eq!(v["blocks"][0], serde_json::json!([1, 2, 4]));
        let back = DesignDocument::from_json(&json).unwrap().into_design(None, &Limits::default()).unwrap();
        assert_eq!(back.blocks, d.blocks);
        // without blocks the orbit is regenerated from the group
        let slim = d.to_document(0);
        assert!(slim.blocks.is_none());
        let regen = slim.clone().into_design(Some(&c7), &Limits::default()).unwrap();
        assert_eq!(regen.blocks, d.blocks);
        assert!(slim.into_design(None, &Limits::default()).is_err());
    }
}

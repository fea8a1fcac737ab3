//! Generator files and the named group registry.
//!
//! A generator file is plain text:
//!
//! ```text
//! # name: M11
//! # source: where the generators came from
//! degree 11 order 7920
//! (1,2,3,4,5,6,7,8,9,10,11)
//! (3,7,11,8)(4,10,5,6)
//! ```
//!
//! Each permutation line is either cycle notation or a whitespace-separated
//! list of `degree` 1-based images. Lines starting with `#` are comments;
//! `# key: value` comments are kept as metadata.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::PermGroup;
use crate::perm::Permutation;

pub const REGISTRY_ENV: &str = "DESIGNFORGE_REGISTRY";

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parses 1-based cycle notation such as `(1,2)(3,4)`; unnamed points are fixed.
pub fn parse_cycles(text: &str, degree: usize) -> Result<Permutation> {
    parse_cycles_at(text, degree, 1)
}

fn parse_cycles_at(text: &str, degree: usize, line: usize) -> Result<Permutation> {
    let mut images: Vec<u32> = (0..degree as u32).collect();
    let mut used = vec![false; degree];
    let mut cycle: Option<Vec<(u32, usize)>> = None;
    let mut number: Option<(u64, usize)> = None;

    let mut close_number = |number: &mut Option<(u64, usize)>,
                            cycle: &mut Option<Vec<(u32, usize)>>|
     -> Result<()> {
        if let Some((value, col)) = number.take() {
            if value == 0 || value as usize > degree {
                return Err(parse_err(
                    line,
                    col,
                    format!("point {value} out of range 1..{degree}"),
                ));
            }
            let p = (value - 1) as u32;
            if used[p as usize] {
                return Err(parse_err(line, col, format!("point {value} repeated")));
            }
            used[p as usize] = true;
            cycle.as_mut().expect("inside a cycle").push((p, col));
        }
        Ok(())
    };

    for (i, ch) in text.char_indices() {
        let col = i + 1;
        match ch {
            '(' => {
                if cycle.is_some() {
                    return Err(parse_err(line, col, "nested '('"));
                }
                cycle = Some(Vec::new());
            }
            ')' => {
                if cycle.is_none() {
                    return Err(parse_err(line, col, "unbalanced ')'"));
                }
                close_number(&mut number, &mut cycle)?;
                let c = cycle.take().unwrap();
                for (j, &(p, _)) in c.iter().enumerate() {
                    images[p as usize] = c[(j + 1) % c.len()].0;
                }
            }
            '0'..='9' => {
                if cycle.is_none() {
                    return Err(parse_err(line, col, "point outside of a cycle"));
                }
                let d = ch.to_digit(10).unwrap() as u64;
                number = Some(match number {
                    Some((v, c)) => (v.saturating_mul(10).saturating_add(d), c),
                    None => (d, col),
                });
            }
            ',' | ' ' | '\t' => {
                if cycle.is_some() {
                    close_number(&mut number, &mut cycle)?;
                }
            }
            other => return Err(parse_err(line, col, format!("unexpected character {other:?}"))),
        }
    }
    if cycle.is_some() {
        return Err(parse_err(line, text.len() + 1, "unbalanced '(' at end of input"));
    }
    Ok(Permutation::from_images_unchecked(images))
}

/// Parses a whitespace-separated list of 1-based images.
pub fn parse_image_list(text: &str, degree: usize) -> Result<Permutation> {
    parse_image_list_at(text, degree, 1)
}

fn parse_image_list_at(text: &str, degree: usize, line: usize) -> Result<Permutation> {
    let mut images = Vec::with_capacity(degree);
    let mut seen = vec![false; degree];
    let mut col = 1;
    for token in text.split(|c: char| c.is_whitespace() || c == ',') {
        let start = col;
        col += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let value: usize = token
            .parse()
            .map_err(|_| parse_err(line, start, format!("not a point: {token:?}")))?;
        if value == 0 || value > degree {
            return Err(parse_err(line, start, format!("point {value} out of range 1..{degree}")));
        }
        if seen[value - 1] {
            return Err(parse_err(line, start, format!("point {value} repeated")));
        }
        seen[value - 1] = true;
        images.push((value - 1) as u32);
    }
    if images.len() != degree {
        return Err(parse_err(
            line,
            1,
            format!("expected {degree} images, found {}", images.len()),
        ));
    }
    Ok(Permutation::from_images_unchecked(images))
}

fn parse_permutation_at(text: &str, degree: usize, line: usize) -> Result<Permutation> {
    if text.trim_start().starts_with('(') {
        parse_cycles_at(text, degree, line)
    } else {
        parse_image_list_at(text, degree, line)
    }
}

/// Contents of a generator file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorFile {
    pub degree: usize,
    pub expected_order: Option<BigUint>,
    pub name: Option<String>,
    pub source: Option<String>,
    /// Remaining `# key: value` metadata, in file order.
    pub metadata: Vec<(String, String)>,
    pub permutations: Vec<Permutation>,
}

impl GeneratorFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, Option<BigUint>)> = None;
        let mut name = None;
        let mut source = None;
        let mut metadata = Vec::new();
        let mut permutations = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    let (key, value) = (key.trim(), value.trim().to_string());
                    match key {
                        "name" => name = Some(value),
                        "source" => source = Some(value),
                        _ if !key.contains(' ') && !key.is_empty() => {
                            metadata.push((key.to_string(), value))
                        }
                        _ => {}
                    }
                }
                continue;
            }
            match header {
                None => header = Some(parse_header(line, line_no)?),
                Some((degree, _)) => permutations.push(parse_permutation_at(line, degree, line_no)?),
            }
        }
        let (degree, expected_order) =
            header.ok_or_else(|| parse_err(1, 1, "missing `degree N` header"))?;
        if permutations.is_empty() {
            return Err(parse_err(1, 1, "no permutations"));
        }
        Ok(GeneratorFile {
            degree,
            expected_order,
            name,
            source,
            metadata,
            permutations,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        GeneratorFile::parse(&text)
    }

    /// Serializes back to the text format, cycles 1-based.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            out.push_str(&format!("# name: {name}\n"));
        }
        if let Some(source) = &self.source {
            out.push_str(&format!("# source: {source}\n"));
        }
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("degree {}", self.degree));
        if let Some(order) = &self.expected_order {
            out.push_str(&format!(" order {order}"));
        }
        out.push('\n');
        for p in &self.permutations {
            out.push_str(&p.to_cycle_string());
            out.push('\n');
        }
        out
    }

    /// Builds the group and checks the declared order, if any.
    pub fn to_group(&self) -> Result<PermGroup> {
        let mut group = PermGroup::new(self.permutations.clone())?;
        if let Some(name) = &self.name {
            group = group.with_name(name.clone());
        }
        if let Some(expected) = &self.expected_order {
            let actual = group.order();
            if &actual != expected {
                return Err(Error::CorruptFixture {
                    name: self.name.clone().unwrap_or_default(),
                    expected: expected.to_string(),
                    actual: actual.to_string(),
                });
            }
        }
        Ok(group)
    }
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, Option<BigUint>)> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let bad = || parse_err(line_no, 1, "expected `degree N [order Q]`");
    match words.as_slice() {
        ["degree", n] => Ok((n.parse().map_err(|_| bad())?, None)),
        ["degree", n, "order", q] => Ok((
            n.parse().map_err(|_| bad())?,
            Some(BigUint::from_str(q).map_err(|_| bad())?),
        )),
        _ => Err(bad()),
    }
}

fn natural_key(name: &str) -> (String, u64) {
    let digits = name.len() - name.bytes().rev().take_while(u8::is_ascii_digit).count();
    let (stem, number) = name.split_at(digits);
    (stem.to_string(), number.parse().unwrap_or(0))
}

/// Role of a registry entry: a group in its own right, or a (maximal)
/// subgroup of another entry with the same degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Role {
    Group,
    MaximalSubgroupOf(String),
    SubgroupOf(String),
}

impl Role {
    pub fn parent(&self) -> Option<&str> {
        match self {
            Role::Group => None,
            Role::MaximalSubgroupOf(p) | Role::SubgroupOf(p) => Some(p),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Group => f.write_str("group"),
            Role::MaximalSubgroupOf(p) => write!(f, "maximal-subgroup-of:{p}"),
            Role::SubgroupOf(p) => write!(f, "subgroup-of:{p}"),
        }
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "group" {
            Ok(Role::Group)
        } else if let Some(p) = s.strip_prefix("maximal-subgroup-of:") {
            Ok(Role::MaximalSubgroupOf(p.to_string()))
        } else if let Some(p) = s.strip_prefix("subgroup-of:") {
            Ok(Role::SubgroupOf(p.to_string()))
        } else {
            Err(Error::Registry(format!("unknown role {s:?}")))
        }
    }
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    /// Generator file, relative to the registry file.
    pub path: PathBuf,
    pub degree: usize,
    pub role: Role,
    /// Display label for tables (e.g. the subgroup's position in a list).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    groups: BTreeMap<String, RegistryEntry>,
}

/// Named groups and subgroups, loaded on demand and cached.
#[derive(Debug)]
pub struct GroupRegistry {
    root: PathBuf,
    entries: BTreeMap<String, RegistryEntry>,
    cache: Mutex<HashMap<String, Arc<PermGroup>>>,
}

impl GroupRegistry {
    pub fn from_json(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let file: RegistryFile = serde_json::from_str(text)?;
        for (name, entry) in &file.groups {
            if let Some(parent) = entry.role.parent() {
                let p = file.groups.get(parent).ok_or_else(|| {
                    Error::Registry(format!("{name}: parent `{parent}` is not registered"))
                })?;
                if p.degree != entry.degree {
                    return Err(Error::Registry(format!(
                        "{name}: degree {} differs from parent degree {}",
                        entry.degree, p.degree
                    )));
                }
            }
        }
        Ok(GroupRegistry {
            root: root.into(),
            entries: file.groups,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        GroupRegistry::from_json(&text, root)
    }

    /// Opens the registry named by `DESIGNFORGE_REGISTRY`.
    pub fn from_env() -> Result<Self> {
        let path = std::env::var_os(REGISTRY_ENV)
            .ok_or_else(|| Error::Registry(format!("{REGISTRY_ENV} is not set")))?;
        GroupRegistry::open(Path::new(&path))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entry(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::NotFound(name.to_string()))
    }

    /// Registered maximal subgroups of `parent`, in natural name order
    /// (`HS.M2` before `HS.M10`).
    pub fn maximal_subgroups_of(&self, parent: &str) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .entries
            .iter()
            .filter(|(_, e)| matches!(&e.role, Role::MaximalSubgroupOf(p) if p == parent))
            .map(|(n, _)| n.as_str())
            .collect();
        names.sort_by_key(|n| natural_key(n));
        names
    }

    /// Loads, validates and caches a group. Subgroup entries are checked for
    /// membership of every generator in the parent.
    pub fn load_group(&self, name: &str) -> Result<Arc<PermGroup>> {
        if let Some(g) = self.cache.lock().unwrap().get(name) {
            return Ok(g.clone());
        }
        let entry = self.entry(name)?;
        let file = GeneratorFile::read(&self.root.join(&entry.path))?;
        if file.degree != entry.degree {
            return Err(Error::Registry(format!(
                "{name}: file degree {} differs from registry degree {}",
                file.degree, entry.degree
            )));
        }
        let group = file.to_group().map_err(|e| match e {
            Error::CorruptFixture { expected, actual, .. } => Error::CorruptFixture {
                name: name.to_string(),
                expected,
                actual,
            },
            other => other,
        })?;
        let group = group.with_name(name);
        if let Some(parent) = entry.role.parent() {
            let parent_group = self.load_group(parent)?;
            group.check_subgroup_of(&parent_group).map_err(|e| {
                Error::Registry(format!("{name} is not a subgroup of {parent}: {e}"))
            })?;
        }
        let group = Arc::new(group);
        self.cache
            .lock()
            .unwrap()
            .insert(name.to_string(), group.clone());
        Ok(group)
    }
}

//! Parameter tables of block-transitive designs.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::block::binomial;
use crate::design::{design_from_orbit, max_t, merge_orbits, Design};
use crate::error::{Error, Result};
use crate::group::PermGroup;
use crate::orbit::{sigma_partition_materialized, Limits};

/// One line of a design table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TableRow {
    pub max_label: Option<String>,
    pub t: usize,
    pub v: usize,
    pub b: u64,
    pub r: u64,
    pub k: usize,
    pub lambda: u64,
}

impl TableRow {
    fn from_design(design: &Design, group: &PermGroup, label: Option<&str>, limits: &Limits) -> Result<Self> {
        let cert = max_t(group, design, limits)?;
        let lambda = cert.lambda_t.expect("max_t returns a constant coverage");
        let row = TableRow {
            max_label: label.map(str::to_string),
            t: cert.t,
            v: design.v,
            b: design.b,
            r: design.r,
            k: design.k,
            lambda,
        };
        if row.b as u128 * row.k as u128 != row.v as u128 * row.r as u128 {
            return Err(Error::Inconsistent(format!("row violates bk = vr: {row:?}")));
        }
        Ok(row)
    }
}

/// A row that was not produced, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub item: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Table {
    pub rows: Vec<TableRow>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::InvalidSelection(format!("unknown table format `{other}`"))),
        }
    }
}

impl Table {
    pub fn render(&self, format: TableFormat) -> String {
        let with_max = self.rows.iter().any(|r| r.max_label.is_some());
        let mut out = String::new();
        match format {
            TableFormat::Markdown => {
                if with_max {
                    out.push_str("| Max | t | v | b | r | k | lambda |\n|---|---|---|---|---|---|---|\n");
                } else {
                    out.push_str("| t | v | b | r | k | lambda |\n|---|---|---|---|---|---|\n");
                }
                for row in &self.rows {
                    out.push('|');
                    if with_max {
                        let _ = write!(out, " {} |", row.max_label.as_deref().unwrap_or(""));
                    }
                    let _ = writeln!(
                        out,
                        " {} | {} | {} | {} | {} | {} |",
                        row.t, row.v, row.b, row.r, row.k, row.lambda
                    );
                }
            }
            TableFormat::Csv => {
                out.push_str(if with_max { "max,t,v,b,r,k,lambda\n" } else { "t,v,b,r,k,lambda\n" });
                for row in &self.rows {
                    if with_max {
                        let _ = write!(out, "{},", row.max_label.as_deref().unwrap_or(""));
                    }
                    let _ = writeln!(out, "{},{},{},{},{},{}", row.t, row.v, row.b, row.r, row.k, row.lambda);
                }
            }
        }
        out
    }

    /// Skipped items, one per line.
    pub fn render_skipped(&self) -> String {
        self.skipped
            .iter()
            .map(|s| format!("skipped {}: {}\n", s.item, s.reason))
            .collect()
    }
}

fn is_complete(v: usize, k: usize, b: u64) -> bool {
    binomial(v as u64, k as u64) == Some(b as u128)
}

/// One row per distinct parameter set among the orbit designs of `Σ_k` for
/// `k` in `ks`, sorted by `k` then `b`. Orbits of identical parameters share
/// a row; complete designs are skipped.
pub fn orbit_table(group: &PermGroup, ks: RangeInclusive<usize>, limits: &Limits) -> Result<Table> {
    let n = group.degree();
    if !group.is_transitive() {
        return Err(Error::NotTransitive { degree: n });
    }
    let mut table = Table::default();
    for k in ks {
        if k == 0 || k > n {
            table.skipped.push(Skipped {
                item: format!("k={k}"),
                reason: format!("block size outside 1..={n}"),
            });
            continue;
        }
        let partition = sigma_partition_materialized(group, k, limits)?;
        let mut rows = Vec::new();
        for (i, orbit) in partition.orbits.iter().enumerate() {
            if is_complete(n, k, orbit.size) {
                table.skipped.push(Skipped {
                    item: format!("k={k} orbit {i}"),
                    reason: "complete design".into(),
                });
                continue;
            }
            let design = design_from_orbit(group, orbit)?;
            match TableRow::from_design(&design, group, None, limits) {
                Ok(row) => rows.push(row),
                Err(e @ Error::ResourceLimit { .. }) => table.skipped.push(Skipped {
                    item: format!("k={k} orbit {i}"),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        rows.sort_by_key(|r| (r.b, r.r, r.lambda, r.t));
        rows.dedup();
        table.rows.extend(rows);
    }
    Ok(table)
}

/// Rows from the single orbits of each subgroup, taken as maximal subgroups
/// of `group`. Complete and degenerate designs and failed constructions are
/// skipped with a reason.
pub fn maximal_table(group: &PermGroup, subgroups: &[(String, &PermGroup)], limits: &Limits) -> Result<Table> {
    let n = group.degree();
    let mut table = Table::default();
    for (label, m) in subgroups {
        let orbits = m.orbits();
        let mut rows = Vec::new();
        for (i, orbit) in orbits.iter().enumerate() {
            let item = format!("{label} orbit {i} (size {})", orbit.len());
            if orbit.len() == n {
                table.skipped.push(Skipped { item, reason: "orbit is the whole point set".into() });
                continue;
            }
            let design = match merge_orbits(group, m, &[i], limits) {
                Ok(d) => d,
                Err(e) => {
                    table.skipped.push(Skipped { item, reason: e.to_string() });
                    continue;
                }
            };
            if is_complete(n, design.k, design.b) {
                table.skipped.push(Skipped { item, reason: "complete design".into() });
                continue;
            }
            match TableRow::from_design(&design, group, Some(label), limits) {
                Ok(row) => rows.push(row),
                Err(e @ Error::ResourceLimit { .. }) => table.skipped.push(Skipped { item, reason: e.to_string() }),
                Err(e) => return Err(e),
            }
        }
        rows.sort_by_key(|r| (r.k, r.b));
        table.rows.extend(rows);
    }
    Ok(table)
}

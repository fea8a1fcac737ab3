//! `designforge`: orbit partitions, design construction and t-design
//! certificates for permutation groups from a fixture registry.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use designforge_core::design::{
    design_from_maximal, design_from_orbit, max_t, merge_orbits, verify_t_design,
    verify_t_design_sampled, Construction, DesignDocument,
};
use designforge_core::ingest::GroupRegistry;
use designforge_core::orbit::sigma_partition_materialized;
use designforge_core::table::{maximal_table, orbit_table, TableFormat};
use designforge_core::{Error, Limits, PermGroup};

const DEFAULT_REGISTRY: &str = "fixtures/registry.json";

#[derive(Parser)]
#[command(name = "designforge", version, about = "Block-transitive t-designs from permutation groups")]
struct Cli {
    /// Registry JSON mapping group names to generator files.
    #[arg(long, env = "DESIGNFORGE_REGISTRY", global = true)]
    registry: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest number of k-subsets (or t-subset counters) allowed.
    #[arg(long, global = true)]
    cap_subsets: Option<u64>,
    /// Largest single block orbit allowed.
    #[arg(long, global = true)]
    cap_orbit: Option<u64>,
    /// Largest number of coverage increments allowed.
    #[arg(long, global = true)]
    cap_work: Option<u64>,
    /// Append a generation timestamp to the output.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orbits of a group on k-subsets.
    Sigma {
        group: String,
        k: usize,
        /// Emit the partition as JSON.
        #[arg(long, conflicts_with = "text")]
        json: bool,
        /// Emit the size multiset (default).
        #[arg(long)]
        text: bool,
    },
    /// Build a design from an orbit or from a maximal subgroup.
    Design(DesignArgs),
    /// Parameter table of orbit designs or maximal-subgroup designs.
    Table(TableArgs),
    /// Re-certify a design JSON file.
    Verify {
        file: PathBuf,
        /// Strength to check (defaults to the stored t).
        #[arg(long = "t")]
        t: Option<usize>,
        /// Estimate coverage from this many random t-subsets instead.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Order, transitivity, primitivity and point orbits of a group.
    Info { group: String },
}

#[derive(Args)]
struct DesignArgs {
    group: String,
    /// Orbit `K:INDEX` of the k-subset partition (0-based index, orbits by size).
    #[arg(long, conflicts_with = "maximal")]
    orbit: Option<String>,
    /// Registry name of a maximal subgroup.
    #[arg(long)]
    maximal: Option<String>,
    /// Base point (1-based); the block is its subgroup orbit.
    #[arg(long, requires = "maximal", conflicts_with = "merge")]
    alpha: Option<usize>,
    /// Comma-separated subgroup orbit indices (0-based, orbits by smallest point).
    #[arg(long, requires = "maximal", value_delimiter = ',')]
    merge: Option<Vec<usize>>,
    /// Certify the design at this strength.
    #[arg(long)]
    verify_t: Option<usize>,
    /// Certify at the largest strength allowed by the group.
    #[arg(long, conflicts_with = "verify_t")]
    max_t: bool,
    /// Omit the block list above this many blocks.
    #[arg(long, default_value_t = 10_000)]
    block_threshold: u64,
}

#[derive(Args)]
struct TableArgs {
    group: String,
    /// Block sizes `A..B` (inclusive).
    #[arg(long, conflicts_with = "maximals")]
    k_range: Option<String>,
    /// One row per orbit of every registered maximal subgroup.
    #[arg(long)]
    maximals: bool,
    /// md or csv.
    #[arg(long, default_value = "md")]
    format: String,
}

enum Failure {
    Core(Error),
    Input(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::ResourceLimit { .. }) => 2,
            Failure::Verification(_) => 3,
            Failure::Core(Error::Inconsistent(_)) => 1,
            Failure::Core(_) | Failure::Input(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(Error::Inconsistent(m)) => format!("internal error: {m}"),
            Failure::Core(e) => e.to_string(),
            Failure::Input(m) | Failure::Verification(m) => m.clone(),
        }
    }
}

struct Context {
    registry: Option<PathBuf>,
    limits: Limits,
    timestamp: bool,
}

impl Context {
    fn registry(&self) -> Result<GroupRegistry, Failure> {
        let path = match &self.registry {
            Some(p) => p.clone(),
            None if Path::new(DEFAULT_REGISTRY).exists() => PathBuf::from(DEFAULT_REGISTRY),
            None => {
                return Err(Failure::Input(
                    "no registry: pass --registry or set DESIGNFORGE_REGISTRY".into(),
                ))
            }
        };
        Ok(GroupRegistry::open(&path)?)
    }

    fn emit(&self, mut text: String, json: bool) {
        if self.timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            if json {
                let mut value: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
                if let Some(map) = value.as_object_mut() {
                    map.insert("generated_at".into(), secs.into());
                }
                text = serde_json::to_string(&value).expect("serializable");
            } else {
                if !text.ends_with('\n') {
                    text.push('\n');
                }
                text.push_str(&format!("# generated_at: {secs}\n"));
            }
        }
        if !text.ends_with('\n') {
            text.push('\n');
        }
        print!("{text}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(4);
        }
    }
    let defaults = Limits::default();
    let ctx = Context {
        registry: cli.registry,
        limits: Limits {
            max_subsets: cli.cap_subsets.unwrap_or(defaults.max_subsets),
            max_orbit: cli.cap_orbit.unwrap_or(defaults.max_orbit),
            max_work: cli.cap_work.unwrap_or(defaults.max_work),
        },
        timestamp: cli.timestamp,
    };
    let result = match cli.command {
        Command::Sigma { group, k, json, .. } => cmd_sigma(&ctx, &group, k, json),
        Command::Design(args) => cmd_design(&ctx, &args),
        Command::Table(args) => cmd_table(&ctx, &args),
        Command::Verify { file, t, samples, seed } => cmd_verify(&ctx, &file, t, samples, seed),
        Command::Info { group } => cmd_info(&ctx, &group),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn cmd_sigma(ctx: &Context, name: &str, k: usize, json: bool) -> Result<(), Failure> {
    let group = ctx.registry()?.load_group(name)?;
    let partition = sigma_partition_materialized(&group, k, &ctx.limits)?;
    if json {
        ctx.emit(partition.to_json()?, true);
    } else {
        ctx.emit(partition.multiset_string(), false);
    }
    Ok(())
}

fn parse_orbit_selector(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Input(format!("--orbit expects K:INDEX, got `{text}`"));
    let (k, i) = text.split_once(':').ok_or_else(bad)?;
    Ok((k.trim().parse().map_err(|_| bad())?, i.trim().parse().map_err(|_| bad())?))
}

fn cmd_design(ctx: &Context, args: &DesignArgs) -> Result<(), Failure> {
    let registry = ctx.registry()?;
    let group = registry.load_group(&args.group)?;
    let mut design = match (&args.orbit, &args.maximal) {
        (Some(selector), None) => {
            let (k, index) = parse_orbit_selector(selector)?;
            let partition = sigma_partition_materialized(&group, k, &ctx.limits)?;
            let orbit = partition.orbits.get(index).ok_or_else(|| {
                Failure::Input(format!(
                    "orbit index {index} out of range: the partition for k = {k} has {} orbits",
                    partition.orbits.len()
                ))
            })?;
            let mut design = design_from_orbit(&group, orbit)?;
            design.construction = Construction::Orbit { k, index: Some(index) };
            design
        }
        (None, Some(sub)) => {
            let subgroup = registry.load_group(sub)?;
            match (args.alpha, &args.merge) {
                (Some(alpha), None) => {
                    if alpha == 0 {
                        return Err(Failure::Input("--alpha is 1-based".into()));
                    }
                    design_from_maximal(&group, &subgroup, alpha - 1, &ctx.limits)?
                }
                (None, Some(indices)) => merge_orbits(&group, &subgroup, indices, &ctx.limits)?,
                _ => return Err(Failure::Input("--maximal needs exactly one of --alpha or --merge".into())),
            }
        }
        _ => return Err(Failure::Input("give exactly one of --orbit or --maximal".into())),
    };
    let certificate = match (args.verify_t, args.max_t) {
        (Some(t), _) => Some(verify_t_design(&design, t, &ctx.limits)?),
        (None, true) => Some(max_t(&group, &design, &ctx.limits)?),
        (None, false) => None,
    };
    design.certificate = certificate.clone();
    let doc = design.to_document(args.block_threshold);
    ctx.emit(doc.to_json()?, true);
    match certificate {
        Some(c) if !c.verified => Err(Failure::Verification(format!(
            "not a {}-design: coverage histogram {}",
            c.t,
            histogram_string(&c.coverage_histogram)
        ))),
        _ => Ok(()),
    }
}

fn histogram_string(h: &std::collections::BTreeMap<u64, u64>) -> String {
    let parts: Vec<String> = h.iter().map(|(c, n)| format!("{n} subsets covered {c} times")).collect();
    parts.join(", ")
}

fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || Failure::Input(format!("--k-range expects A..B, got `{text}`"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    Ok(a.trim().parse().map_err(|_| bad())?..=b.trim().parse().map_err(|_| bad())?)
}

fn cmd_table(ctx: &Context, args: &TableArgs) -> Result<(), Failure> {
    let format: TableFormat = args.format.parse()?;
    let registry = ctx.registry()?;
    let group = registry.load_group(&args.group)?;
    let table = if args.maximals {
        let names = registry.maximal_subgroups_of(&args.group);
        if names.is_empty() {
            return Err(Failure::Input(format!("no maximal subgroups of {} registered", args.group)));
        }
        let subgroups: Vec<(String, Arc<PermGroup>)> = names
            .iter()
            .map(|n| Ok((short_label(n, &args.group), registry.load_group(n)?)))
            .collect::<Result<_, Error>>()?;
        let refs: Vec<(String, &PermGroup)> = subgroups.iter().map(|(l, g)| (l.clone(), &**g)).collect();
        maximal_table(&group, &refs, &ctx.limits)?
    } else {
        let range = match &args.k_range {
            Some(r) => parse_range(r)?,
            None => 1..=group.degree() / 2,
        };
        orbit_table(&group, range, &ctx.limits)?
    };
    ctx.emit(table.render(format), false);
    eprint!("{}", table.render_skipped());
    Ok(())
}

/// `HS.M2` -> `M2` when the prefix is the parent name.
fn short_label(name: &str, parent: &str) -> String {
    name.strip_prefix(parent)
        .and_then(|s| s.strip_prefix('.'))
        .unwrap_or(name)
        .to_string()
}

fn cmd_verify(ctx: &Context, file: &Path, t: Option<usize>, samples: Option<usize>, seed: u64) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let doc = DesignDocument::from_json(&text)?;
    let stored = doc.t.zip(doc.lambda_t);
    let group = match (&doc.group, doc.blocks.is_none()) {
        (Some(name), true) => Some(ctx.registry()?.load_group(name)?),
        _ => None,
    };
    let design = doc.into_design(group.as_deref(), &ctx.limits)?;
    let t = t
        .or(stored.map(|(t, _)| t))
        .ok_or_else(|| Failure::Input("no strength given and none stored; pass --t".into()))?;
    if let Some(samples) = samples {
        let estimate = verify_t_design_sampled(&design, t, samples, seed)?;
        ctx.emit(serde_json::to_string(&estimate).expect("serializable"), true);
        return Ok(());
    }
    let cert = verify_t_design(&design, t, &ctx.limits)?;
    ctx.emit(serde_json::to_string(&cert).expect("serializable"), true);
    if !cert.verified {
        return Err(Failure::Verification(format!(
            "not a {t}-design: coverage histogram {}",
            histogram_string(&cert.coverage_histogram)
        )));
    }
    match stored {
        Some((st, lambda)) if st == t && cert.lambda_t != Some(lambda) => Err(Failure::Verification(format!(
            "stored lambda_{t} = {lambda} but coverage is {}",
            cert.lambda_t.unwrap_or_default()
        ))),
        _ => Ok(()),
    }
}

fn cmd_info(ctx: &Context, name: &str) -> Result<(), Failure> {
    let group = ctx.registry()?.load_group(name)?;
    let transitivity = group.transitivity_degree();
    let orbits = group.orbits();
    let mut out = String::new();
    out.push_str(&format!("name: {name}\ndegree: {}\norder: {}\n", group.degree(), group.order()));
    out.push_str(&format!(
        "transitivity: {}{}\n",
        transitivity.degree,
        if transitivity.capped { "+" } else { "" }
    ));
    if group.is_transitive() {
        out.push_str(&format!("primitive: {}\n", group.is_primitive()));
    }
    out.push_str("orbits:\n");
    for (i, o) in orbits.iter().enumerate() {
        out.push_str(&format!("  {i}: size {}, smallest point {}\n", o.len(), o[0] + 1));
    }
    ctx.emit(out, false);
    Ok(())
}

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cert::*;
use crate::error::{Error, Result};
use crate::extend::RefineOptions;
use crate::family::FamilySpec;
use crate::graph::{Format, Graph};
use crate::limits::TruncationFamily;
use crate::separation::Separation;

pub const SEED_VAR: &str = "TANGLEFORGE_SEED";

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum InputFormat {
    Edgelist,
    Graph6,
}

#[derive(Parser, Debug)]
#[command(name = "tangleforge", version, about = "Separations, tangles and their dual trees on finite graphs")]
pub struct Cli {
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "edgelist")]
    pub format: InputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug)]
pub struct FamilyArgs {
    #[arg(long)]
    pub k: usize,
    /// tstar, uk, tk or custom.
    #[arg(long)]
    pub family: Option<String>,
    /// Star list for the custom family.
    #[arg(long)]
    pub stars: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the separations of order below k.
    Separations {
        graph: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Find tangles avoiding a family.
    Tangles {
        graph: PathBuf,
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long, default_value_t = 16)]
        limit: usize,
    },
    /// A tangle or an S-tree, whichever exists.
    Duality {
        graph: PathBuf,
        #[command(flatten)]
        fam: FamilyArgs,
    },
    /// Exact treewidth with an optimal decomposition.
    Treewidth { graph: PathBuf },
    /// A bramble of order at least k built from a tangle.
    Bramble {
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        /// Report the four-way equivalence instead.
        #[arg(long)]
        report: bool,
        /// Exhaustive maximum-order bramble (small graphs only).
        #[arg(long, conflicts_with = "report")]
        max: bool,
    },
    /// Refine a tree of tangles, or refine an inessential star.
    Refine {
        graph: PathBuf,
        #[command(flatten)]
        fam: FamilyArgs,
        /// Star of oriented separations to refine.
        #[arg(long)]
        star: Option<PathBuf>,
        /// Work budget for the robustness search.
        #[arg(long, default_value_t = RefineOptions::default().budget)]
        budget: usize,
    },
    /// Proxies on a truncation of an infinite example.
    Limits {
        /// grid, ray, ray_clique, edgeless or example_5_4.
        name: String,
        #[arg(long)]
        n: usize,
        /// Rows for grid, clique size for ray_clique.
        #[arg(long)]
        param: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Re-check a certificate from scratch.
    Verify {
        cert: PathBuf,
        graph: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &PathBuf, format: InputFormat) -> Result<Graph> {
    let f = match format {
        InputFormat::Edgelist => Format::EdgeList,
        InputFormat::Graph6 => Format::Graph6,
    };
    Graph::parse(&read(path)?, f)
}

fn family(args: &FamilyArgs, default: &str) -> Result<FamilySpec> {
    let name = args.family.as_deref().unwrap_or(default);
    if name == "custom" {
        let path = args.stars.as_ref().ok_or_else(|| Error::Argument("custom family needs --stars".into()))?;
        let stars: Vec<Vec<Separation>> =
            serde_json::from_str(&read(path)?).map_err(|e| Error::Argument(format!("bad star list: {e}")))?;
        return Ok(FamilySpec::Explicit { k: args.k, stars });
    }
    FamilySpec::from_name(name, args.k)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Soundness(_) => 3,
        _ => 1,
    }
}

fn error_doc(e: &Error) -> String {
    let kind = match e {
        Error::Parse { .. } => "parse",
        Error::NotASeparation(_) => "not_a_separation",
        Error::Argument(_) => "argument",
        Error::Refusal(_) => "refusal",
        Error::Structure(_) => "structure",
        Error::Verify(_) => "verify",
        Error::Soundness(_) => "soundness",
    };
    serde_json::to_string_pretty(&json!({"version": CERT_VERSION, "error": {"kind": kind, "message": e.to_string()}}))
        .expect("error document serializes")
}

fn execute(cli: &Cli) -> Result<String> {
    let fmt = cli.format;
    let cert = match &cli.command {
        Command::Separations { graph, k } => separations_certificate(&load_graph(graph, fmt)?, *k)?,
        Command::Tangles { graph, fam, limit } => tangles_certificate(&load_graph(graph, fmt)?, &family(fam, "tk")?, *limit)?,
        Command::Duality { graph, fam } => duality_certificate(&load_graph(graph, fmt)?, &family(fam, "tstar")?)?,
        Command::Treewidth { graph } => treewidth_certificate(&load_graph(graph, fmt)?)?,
        Command::Bramble { graph, k, report, max } => {
            let g = load_graph(graph, fmt)?;
            if *report {
                report_certificate(Some(&g), ReportArgs::Theorem4 { k: *k })?
            } else {
                bramble_certificate(&g, *k, *max)?
            }
        }
        Command::Refine { graph, fam, star, budget } => {
            let g = load_graph(graph, fmt)?;
            let spec = family(fam, "tstar")?;
            let args = match star {
                Some(path) => {
                    let sigma: Vec<Separation> = serde_json::from_str(&read(path)?)
                        .map_err(|e| Error::Argument(format!("bad star file: {e}")))?;
                    ReportArgs::RefineStar { k: fam.k, family: spec, sigma, budget: *budget }
                }
                None => ReportArgs::RefineTree { k: fam.k, family: spec },
            };
            report_certificate(Some(&g), args)?
        }
        Command::Limits { name, n, param, k } => {
            let family = TruncationFamily::parse(name, *param)?;
            report_certificate(None, ReportArgs::Limits { family, n: *n, k: *k })?
        }
        Command::Verify { cert, graph } => {
            let c = Certificate::from_json(&read(cert)?)?;
            let g = graph.as_ref().map(|p| load_graph(p, fmt)).transpose()?;
            verify(&c, g.as_ref())?;
            return Ok(serde_json::to_string_pretty(
                &json!({"version": CERT_VERSION, "verified": true, "kind": c.kind, "digest": c.digest}),
            )
            .expect("verdict serializes"));
        }
    };
    Ok(cert.to_json())
}

/// Runs the command line; returns the exit status and the document for standard output.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    if std::env::var_os(SEED_VAR).is_some() {
        return (2, format!("{SEED_VAR} is set, but tangleforge has no randomized behaviour"));
    }
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.render().to_string());
        }
    };
    let result = match cli.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::Argument(format!("cannot start {j} workers: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(doc) => (0, doc),
        Err(e) => (exit_code(&e), error_doc(&e)),
    }
}

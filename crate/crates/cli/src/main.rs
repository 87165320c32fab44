//! `gch`: batch front end for the configuration-space homology engine.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gch_core::asymptotics::{self, GrowthError};
use gch_core::classes::{self, ClassError, Relation, StarSpec};
use gch_core::homology::{self, HomologyError, TableOptions};
use gch_core::{parse_graph, Complex, FieldTag, Graph};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "gch", version, about = "Exact homology of configuration spaces of graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Betti numbers over a rectangle of bidegrees
    Betti(Common),
    /// Ramos number and its maximizing vertex sets
    Ramos {
        #[command(flatten)]
        common: Common,
        /// Number of essential vertices removed
        #[arg(long, short = 'i', default_value_t = 1)]
        degree: usize,
    },
    /// Compare a Betti row with the predicted leading coefficient
    Asym {
        #[command(flatten)]
        common: Common,
        #[arg(long, short = 'i', default_value_t = 1)]
        degree: usize,
    },
    /// Certify relations among loop and star classes
    Certify {
        #[command(flatten)]
        common: Common,
        /// Relations to check; by default every one the graph supports
        #[arg(long = "relation", value_enum)]
        relations: Vec<RelationKind>,
    },
    /// Torsion in integral homology, split by prime
    Torsion(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RelationKind {
    Q,
    Theta,
    UnstableX,
    StableX,
    CombinedX,
    /// Whether the first star class bounds (expected not to)
    Star,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Variant {
    Full,
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Graph file (line format or JSON)
    #[arg(long)]
    graph: Option<PathBuf>,
    /// q, fp:P, or z
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    imin: Option<usize>,
    #[arg(long)]
    imax: Option<usize>,
    #[arg(long)]
    kmin: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for independent cells
    #[arg(long, env = "GCH_WORKERS")]
    workers: Option<usize>,
    /// Largest basis a cell may enumerate; 0 disables the guard
    #[arg(long)]
    cap: Option<usize>,
    /// TOML file with defaults for any of these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    graph: Option<PathBuf>,
    field: Option<String>,
    imin: Option<usize>,
    imax: Option<usize>,
    kmin: Option<usize>,
    kmax: Option<usize>,
    variant: Option<Variant>,
    out: Option<PathBuf>,
    format: Option<Format>,
    workers: Option<usize>,
    cap: Option<usize>,
}

/// Fully resolved job.
struct Job {
    graph: Graph,
    field: FieldTag,
    is: std::ops::Range<usize>,
    ks: std::ops::Range<usize>,
    variant: Variant,
    out: Option<PathBuf>,
    format: Option<Format>,
    opts: TableOptions,
}

enum Failure {
    Input(String),
    Resource(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Output(_) => 1,
            Failure::Input(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Resource(m) | Failure::Output(m) => m,
        }
    }
}

impl From<HomologyError> for Failure {
    fn from(e: HomologyError) -> Self {
        match e {
            HomologyError::ResourceLimit { .. } => {
                Failure::Resource(format!("{e}; raise --cap or shrink the rectangle"))
            }
            HomologyError::Output(m) => Failure::Output(m),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<GrowthError> for Failure {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Homology(h) => h.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<ClassError> for Failure {
    fn from(e: ClassError) -> Self {
        match e {
            ClassError::Homology(h) => h.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl Common {
    fn resolve(self) -> Result<Job, Failure> {
        let config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                toml::from_str::<ConfigFile>(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let path = self.graph.or(config.graph).ok_or_else(|| Failure::Input("no graph given (--graph)".into()))?;
        let graph = load_graph(&path)?;
        let field: FieldTag = self
            .field
            .or(config.field)
            .unwrap_or_else(|| "q".into())
            .parse()
            .map_err(|e| Failure::Input(format!("bad field: {e}")))?;
        let imin = self.imin.or(config.imin).unwrap_or(0);
        let imax = self.imax.or(config.imax).unwrap_or(1);
        let kmin = self.kmin.or(config.kmin).unwrap_or(0);
        let kmax = self.kmax.or(config.kmax).unwrap_or(6);
        let cap = match self.cap.or(config.cap).unwrap_or(200_000) {
            0 => None,
            n => Some(n),
        };
        if let Some(n) = self.workers.or(config.workers) {
            // a second global pool cannot be installed; the first one wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
        Ok(Job {
            graph,
            field,
            is: imin..imax + 1,
            ks: kmin..kmax + 1,
            variant: self.variant.or(config.variant).unwrap_or(Variant::Reduced),
            out: self.out.or(config.out),
            format: self.format.or(config.format),
            opts: TableOptions { cap },
        })
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_graph(&text).map_err(|e| Failure::Input(format!("parse error in {}: {e}", path.display())))
}

impl Job {
    fn complex(&self) -> Complex<'_> {
        match self.variant {
            Variant::Full => Complex::full(&self.graph),
            Variant::Reduced => Complex::reduced(&self.graph),
        }
    }

    fn emit(&self, body: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, body).map_err(|e| Failure::Output(format!("{}: {e}", path.display()))),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn cmd_betti(job: Job) -> Result<(), Failure> {
    let table = homology::betti_table(&job.complex(), job.field, job.is.clone(), job.ks.clone(), job.opts)?;
    let body = match job.format.unwrap_or(Format::Csv) {
        Format::Json => with_newline(table.to_json()?),
        _ => table.to_csv()?,
    };
    job.emit(&body)
}

fn cmd_ramos(job: Job, degree: usize) -> Result<(), Failure> {
    let g = &job.graph;
    let r = g.ramos_number(degree).map_err(|e| Failure::Input(e.to_string()))?;
    let maximizers: Vec<Vec<&str>> = r.maximizers.iter().map(|w| w.names(g)).collect();
    let body = match job.format.unwrap_or(Format::Json) {
        Format::Csv | Format::Text => {
            let mut out = String::from("i,delta,maximizer\n");
            for w in &maximizers {
                out.push_str(&format!("{},{},{}\n", r.i, r.delta, w.join(";")));
            }
            out
        }
        Format::Json => with_newline(
            serde_json::to_string_pretty(&serde_json::json!({
                "graph": g.hash(), "i": r.i, "delta": r.delta, "maximizers": maximizers,
            }))
            .expect("json"),
        ),
    };
    job.emit(&body)
}

fn cmd_asym(job: Job, degree: usize) -> Result<(), Failure> {
    let kmax = job.ks.end - 1;
    let report = asymptotics::verify_growth(&job.graph, job.field, degree, kmax, job.opts)?;
    let body = match job.format.unwrap_or(Format::Text) {
        Format::Json => with_newline(report.to_json()),
        Format::Csv => report.differences_csv(),
        Format::Text => report.to_text(),
    };
    job.emit(&body)
}

fn relation_for(g: &Graph, kind: RelationKind) -> Result<Relation, ClassError> {
    Ok(match kind {
        RelationKind::Q => Relation::default_q(g)?,
        RelationKind::Theta => Relation::default_theta(g)?,
        RelationKind::UnstableX => Relation::UnstableX(Relation::default_x_halves(g)?),
        RelationKind::StableX => Relation::StableX(Relation::default_x_halves(g)?),
        RelationKind::CombinedX => Relation::CombinedX(Relation::default_x_halves(g)?),
        RelationKind::Star => {
            let v = g.essential_vertices().iter().next().ok_or_else(|| {
                ClassError::MissingConfiguration("an essential vertex".into())
            })?;
            Relation::StarBounds(StarSpec::first_at(g, v)?)
        }
    })
}

fn cmd_certify(job: Job, kinds: Vec<RelationKind>) -> Result<(), Failure> {
    let g = &job.graph;
    let field = if job.field.is_field() { job.field } else { FieldTag::Rationals };
    let explicit = !kinds.is_empty();
    let kinds = if explicit { kinds } else { RelationKind::value_variants().to_vec() };
    let cx = job.complex();
    let mut reports = Vec::new();
    for kind in kinds {
        let relation = match relation_for(g, kind) {
            Ok(r) => r,
            Err(e @ ClassError::MissingConfiguration(_)) if !explicit => {
                eprintln!("skipping {kind:?}: {e}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        reports.push(classes::verify_relation(&cx, &relation, field)?);
    }
    let body = match job.format.unwrap_or(Format::Json) {
        Format::Json => with_newline(serde_json::to_string_pretty(&reports).expect("json")),
        _ => {
            let mut out = String::from("kind,parameters,i,k,is_boundary,witness_found\n");
            for r in &reports {
                let params: Vec<String> = r.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
                out.push_str(&format!(
                    "{},\"{}\",{},{},{},{}\n",
                    r.kind,
                    params.join(" "),
                    r.bidegree.0,
                    r.bidegree.1,
                    r.is_boundary,
                    r.witness_found
                ));
            }
            out
        }
    };
    job.emit(&body)
}

fn cmd_torsion(job: Job) -> Result<(), Failure> {
    let kmax = job.ks.end - 1;
    let body = match job.format.unwrap_or(Format::Csv) {
        Format::Json => {
            let mut scans = Vec::new();
            for i in job.is.clone() {
                scans.push(asymptotics::torsion_growth_scan(&job.graph, i, kmax, job.opts)?);
            }
            with_newline(serde_json::to_string_pretty(&scans).expect("json"))
        }
        _ => {
            let table =
                homology::betti_table(&job.complex(), FieldTag::Integers, job.is.clone(), job.ks.clone(), job.opts)?;
            table.to_csv()?
        }
    };
    job.emit(&body)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Betti(common) => cmd_betti(common.resolve()?),
        Command::Ramos { common, degree } => cmd_ramos(common.resolve()?, degree),
        Command::Asym { common, degree } => {
            let mut common = common;
            common.kmax = common.kmax.or(Some(10));
            cmd_asym(common.resolve()?, degree)
        }
        Command::Certify { common, relations } => cmd_certify(common.resolve()?, relations),
        Command::Torsion(common) => cmd_torsion(common.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gch: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

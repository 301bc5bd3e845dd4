use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use graphfeat::graph::{parse_edge_list, VertexId};
use graphfeat::metrics::{format_significant, MetricEngine, MetricValue, PageRankParams};
use graphfeat::pipeline::{install, run_pipeline, write_atomic, Prepared, RunConfig, JOBS_ENV};
use graphfeat::schema::load_schema;
use graphfeat::scheme::{generate_capped, DEFAULT_MAX_SCHEMES};
use graphfeat::toy::ToyParams;

/// Graph-based feature extraction for recommender datasets.
#[derive(Parser)]
#[command(name = "graphfeat", version)]
struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline from a config file
    Run(RunArgs),
    /// Schema utilities
    Schema {
        #[command(subcommand)]
        command: SchemaCommand,
    },
    /// Print the edge list of a fold graph (or the complete graph without --fold)
    BuildGraph {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        fold: Option<usize>,
    },
    /// List the sub-graph schemes of a schema
    EnumerateSchemes {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_SCHEMES)]
        max_schemes: usize,
    },
    /// Print the fold assignment of every predicted instance
    Folds(RunArgs),
    /// Write the feature files of one fold, without a manifest
    Extract {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        fold: usize,
    },
    /// Evaluate one metric on an edge-list graph
    Metric(MetricArgs),
    /// Write a synthetic dataset with schema.json
    Toy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        users: usize,
        #[arg(long, default_value_t = 40)]
        items: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum SchemaCommand {
    /// Check a schema and summarize it
    Validate { schema: PathBuf },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the config and GRAPHFEAT_JOBS
    #[arg(long)]
    jobs: Option<usize>,
    /// Output location; overrides the config output_dir
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_folds: Option<usize>,
    #[arg(long)]
    export_graphs: bool,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(j) = self.jobs {
            c.jobs = Some(j);
        }
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if let Some(n) = self.n_folds {
            c.n_folds = n;
        }
        c.export_graphs |= self.export_graphs;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct MetricArgs {
    /// Tab-separated edge list: type, vertex, vertex, label
    #[arg(long)]
    graph: PathBuf,
    /// Generator name, e.g. pagerank or shortest_path_excluding
    #[arg(long)]
    op: String,
    /// `entity=value`
    #[arg(long)]
    vertex: String,
    #[arg(long)]
    vertex2: Option<String>,
    /// Entity type for shared_neighbors_of_type
    #[arg(long = "type")]
    entity_type: Option<String>,
    /// Edge type treated as the predicted relationship
    #[arg(long)]
    predicted: Option<String>,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cell(v: MetricValue) -> String {
    match v {
        MetricValue::Value(x) => format_significant(x, 12),
        MetricValue::Missing => "missing".into(),
    }
}

fn metric(args: &MetricArgs) -> Result<String> {
    let text = fs::read_to_string(&args.graph).with_context(|| format!("reading {}", args.graph.display()))?;
    let g = parse_edge_list(&text, args.predicted.as_deref())?;
    let params = PageRankParams {
        damping: args.damping,
        ..Default::default()
    };
    params.validate()?;
    let engine = MetricEngine::new(&g.view(), params);
    let v = g.require_vertex(&VertexId::parse(&args.vertex)?)?;
    let second = || -> Result<u32> {
        let id = args
            .vertex2
            .as_deref()
            .ok_or_else(|| graphfeat::Error::Config(format!("--vertex2 is required for {}", args.op)))?;
        Ok(g.require_vertex(&VertexId::parse(id)?)?)
    };
    let value = match args.op.as_str() {
        "degree_centrality" => engine.degree(v)?,
        "avg_neighbor_degree" => engine.avg_neighbor_degree(v)?,
        "pagerank" => engine.pagerank_of(v)?,
        "clustering_coefficient" => engine.clustering_coefficient(v)?,
        "node_redundancy" => engine.node_redundancy(v)?,
        "shortest_path_excluding" => engine.shortest_path(v, second()?)?.into(),
        "shared_neighbors_ratio" => engine.shared_neighbors_ratio(v, second()?)?,
        "shared_neighbors_of_type" => {
            let name = args
                .entity_type
                .as_deref()
                .ok_or_else(|| graphfeat::Error::Config("--type is required for shared_neighbors_of_type".into()))?;
            let x = g
                .entity_type_index(name)
                .ok_or_else(|| graphfeat::Error::UnknownEntityType(name.into()))?;
            engine.shared_neighbors_of_type(v, second()?, x)?
        }
        other => return Err(graphfeat::Error::Config(format!("unknown metric `{other}`")).into()),
    };
    Ok(format!("{}\n", cell(value)))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let manifest = run_pipeline(&cfg)?;
            println!(
                "{} files, {} schemes, manifest at {}",
                manifest.files.len(),
                manifest.schemes.len(),
                cfg.output_dir.join(graphfeat::pipeline::MANIFEST_FILE).display()
            );
        }
        Command::Schema {
            command: SchemaCommand::Validate { schema },
        } => {
            let s = load_schema(&schema)?;
            let m = s.non_predicted_count();
            println!("tables: {}", s.tables.len());
            println!("relationships: {}", s.relationship_names().join(", "));
            println!(
                "predicted: {} ({} -> {})",
                s.predicted().name,
                s.source_entity(),
                s.target_entity()
            );
            println!(
                "entity types: {}",
                s.entity_types().into_iter().collect::<Vec<_>>().join(", ")
            );
            println!("schemes: {}", graphfeat::scheme::expected_scheme_count(m as u32));
        }
        Command::BuildGraph { run, fold } => {
            let cfg = run.load()?;
            let jobs = cfg.effective_jobs()?;
            let text = install(jobs, || {
                let p = Prepared::load(cfg)?;
                match fold {
                    Some(k) => p.fold_graph_export(k),
                    None => Ok(graphfeat::graph::export_edge_list(&p.graph.view())),
                }
            })?;
            emit(run.out.as_deref(), &text)?;
        }
        Command::EnumerateSchemes { schema, max_schemes } => {
            let s = load_schema(&schema)?;
            let masks = generate_capped(&s.relationship_names(), &s.predicted().name, max_schemes)?;
            let mut out = String::from("scheme_id\tremoved\n");
            for m in &masks {
                let removed: Vec<&str> = m.removed_edge_types().iter().map(String::as_str).collect();
                out.push_str(&format!("{}\t{}\n", m.scheme_id(), removed.join(",")));
            }
            print!("{out}");
        }
        Command::Folds(args) => {
            let cfg = args.load()?;
            let p = Prepared::load(cfg)?;
            let mut out = String::from("source,target,fold\n");
            for (inst, fold) in p.instances.iter().zip(&p.plan.assignment) {
                let fold = fold.map(|f| f.to_string()).unwrap_or_default();
                out.push_str(&format!("{},{},{}\n", inst.source.value, inst.target.value, fold));
            }
            emit(args.out.as_deref(), &out)?;
        }
        Command::Extract { run, fold } => {
            let cfg = run.load()?;
            let jobs = cfg.effective_jobs()?;
            let out_dir = cfg.output_dir.clone();
            let files = install(jobs, || Prepared::load(cfg)?.fold_output(fold))?;
            for f in &files {
                write_atomic(&out_dir.join(&f.path), &f.bytes)?;
                println!("{}\t{} rows", f.path, f.rows);
            }
        }
        Command::Metric(args) => print!("{}", metric(&args)?),
        Command::Toy {
            out,
            users,
            items,
            seed,
        } => {
            let params = ToyParams {
                users,
                items,
                seed,
                ..Default::default()
            };
            let paths = params.write(&out)?;
            println!("{}", paths.schema.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<graphfeat::Error>())
        .map_or(3, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    log::debug!("{JOBS_ENV}={:?}", std::env::var(JOBS_ENV).ok());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

mod config;
mod points;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use proxdist::bench::{self, Method, MeshIdentity};
use proxdist::error::MeshError;
use proxdist::index_file::{load_engine, serialize_engine};
use proxdist::interception::QueryLog;
use proxdist::mesh::{load_mesh, TriangleMesh};
use proxdist::voronoi::{query_domain, SiteKind};
use proxdist::{meshgen, Engine, Error};
use serde_json::json;

use crate::config::ConfigArgs;
use crate::points::Format;

#[derive(Parser)]
#[command(name = "proxdist", version, about = "Exact point-to-mesh distance queries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Triangle,
    Tetrahedron,
    Cube,
    Icosphere,
    Blob,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum MethodArg {
    #[default]
    Tables,
    Bvh,
    Brute,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Tables => Method::Tables,
            MethodArg::Bvh => Method::Bvh,
            MethodArg::Brute => Method::Brute,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Preprocess a mesh and write an index file
    Build {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reject meshes that need repair instead of fixing them
        #[arg(long)]
        strict_mesh: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Answer closest-point queries from an index
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        points: PathBuf,
        /// Results file; text results go to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Mesh the index must have been built from
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Build an engine and time a batch of seeded uniform queries
    Bench {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        /// Also write the JSON report here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict_mesh: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Table statistics of an index
    Stats {
        #[arg(long)]
        index: PathBuf,
        /// Seeded uniform queries used for the query-weighted average
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Paired runs without and with augmentation
    Ablate {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict_mesh: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write seeded uniform points from a mesh's query domain
    Sample {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Write a generated test mesh as OFF
    Gen {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long)]
        out: PathBuf,
        /// Subdivision level (icosphere) or grid resolution (blob)
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(io::Error::other(e))
}

fn print_json(v: &serde_json::Value, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v).map_err(json_err)?;
    if let Some(p) = out {
        std::fs::write(p, format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn read_mesh(path: &Path, strict: bool) -> Result<TriangleMesh, Error> {
    let (mesh, report) = load_mesh(path, strict)?;
    if !report.is_empty() {
        for line in report.to_string().lines() {
            eprintln!("mesh repair: {line}");
        }
    }
    Ok(mesh)
}

fn mesh_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn site_counts(e: &Engine) -> serde_json::Value {
    let s = e.sites().sites();
    let count = |f: fn(&SiteKind) -> bool| s.iter().filter(|x| f(&x.kind)).count();
    json!({
        "vertex": count(|k| matches!(k, SiteKind::MeshVertex(_))),
        "auxiliary": count(|k| matches!(k, SiteKind::Auxiliary { .. })),
        "sentinel": count(|k| matches!(k, SiteKind::Sentinel)),
    })
}

fn cmd_build(mesh: &Path, out: &Path, strict: bool, config: &ConfigArgs) -> Result<(), Error> {
    let cfg = config.resolve()?;
    let m = read_mesh(mesh, strict)?;
    let identity = MeshIdentity::of(&m, &mesh_name(mesh));
    let engine = Engine::build(m, cfg)?;
    let bytes = serialize_engine(&engine);
    std::fs::write(out, &bytes)?;
    let t = engine.info().timings;
    eprintln!(
        "voronoi {:.1} ms, augment {:.1} ms, tables {:.1} ms, total {:.1} ms",
        t.voronoi_ms,
        t.augment_ms,
        t.tables_ms,
        t.total_ms()
    );
    print_json(
        &json!({
            "mesh": identity,
            "index": out,
            "index_bytes": bytes.len(),
            "table_entries": engine.index().total_entries(),
            "timings": t,
            "build_total_ms": t.total_ms(),
            "augmentation_rounds": engine.info().rounds,
            "sites": site_counts(&engine),
            "tables": engine.stats(None),
            "config": engine.config(),
        }),
        None,
    )
}

fn cmd_query(index: &Path, pts: &Path, out: Option<&Path>, format: Format, mesh: Option<&Path>) -> Result<(), Error> {
    let expected = mesh.map(|p| read_mesh(p, false)).transpose()?;
    let engine = load_engine(index, expected.as_ref())?;
    let points = match format {
        Format::Text => points::parse_text_points(BufReader::new(File::open(pts)?))?,
        Format::Bin => points::parse_bin_points(&std::fs::read(pts)?)?,
    };
    let batch = engine.batch_query(&points);
    let summary = json!({
        "queries": batch.log.queries,
        "candidates_avg": per_query(batch.log.candidates, batch.log.queries),
        "exact_avg": per_query(batch.log.exact, batch.log.queries),
        "pruned": batch.pruned,
        "fallbacks": batch.fallbacks,
        "locate_ms": batch.locate_secs * 1e3,
        "search_ms": batch.search_secs * 1e3,
    });
    let summary_line = serde_json::to_string(&summary).map_err(json_err)?;
    match (format, out) {
        (Format::Text, out) => {
            let sink: Box<dyn Write> = match out {
                Some(p) => Box::new(File::create(p)?),
                None => Box::new(io::stdout().lock()),
            };
            let mut w = BufWriter::new(sink);
            for r in &batch.results {
                points::write_text_row(&mut w, r)?;
            }
            writeln!(w, "{summary_line}")?;
            w.flush()?;
            if out.is_some() {
                println!("{summary_line}");
            }
        }
        (Format::Bin, Some(p)) => {
            let mut w = BufWriter::new(File::create(p)?);
            for r in &batch.results {
                points::write_bin_row(&mut w, r)?;
            }
            w.flush()?;
            let mut side = p.as_os_str().to_owned();
            side.push(".summary.json");
            std::fs::write(PathBuf::from(side), format!("{summary_line}\n"))?;
            println!("{summary_line}");
        }
        (Format::Bin, None) => return Err(Error::Config("binary output needs --out".into())),
    }
    Ok(())
}

fn per_query(x: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        x as f64 / n as f64
    }
}

fn cmd_stats(index: &Path, n: usize, seed: u64) -> Result<(), Error> {
    let engine = load_engine(index, None)?;
    let log: Option<QueryLog> = (n > 0).then(|| {
        let pts = bench::uniform_points(&engine.sites().domain(), n, seed);
        engine.batch_query(&pts).log
    });
    print_json(
        &json!({
            "mesh": MeshIdentity::of(engine.mesh(), &mesh_name(index)),
            "tables": engine.stats(log.as_ref()),
            "table_entries": engine.index().total_entries(),
            "sites": site_counts(&engine),
            "augmentation_rounds": engine.info().rounds,
            "grid_size": engine.info().tau,
            "config": engine.config(),
        }),
        None,
    )
}

fn gen(shape: Shape, level: u32, seed: u64, out: &Path) -> Result<(), Error> {
    let m = match shape {
        Shape::Triangle => meshgen::single_triangle(),
        Shape::Tetrahedron => meshgen::regular_tetrahedron(1.0),
        Shape::Cube => meshgen::cube(-1.0, 1.0),
        Shape::Icosphere => meshgen::icosphere(level),
        Shape::Blob => meshgen::organic_blob(level as usize, seed),
    };
    m.save_off(out)?;
    eprintln!("{} vertices, {} faces", m.vertex_count(), m.face_count());
    Ok(())
}

fn sample(mesh: &Path, n: usize, seed: u64, out: &Path, format: Format) -> Result<(), Error> {
    let m = read_mesh(mesh, false)?;
    let pts = bench::uniform_points(&query_domain(&m.aabb()), n, seed);
    let mut w = BufWriter::new(File::create(out)?);
    match format {
        Format::Text => {
            for p in &pts {
                writeln!(w, "{:e} {:e} {:e}", p.x, p.y, p.z)?;
            }
        }
        Format::Bin => points::write_bin_points(&mut w, &pts)?,
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Build { mesh, out, strict_mesh, config } => cmd_build(&mesh, &out, strict_mesh, &config),
        Cmd::Query { index, points, out, format, mesh } => {
            cmd_query(&index, &points, out.as_deref(), format, mesh.as_deref())
        }
        Cmd::Bench { mesh, n, seed, method, out, strict_mesh, config } => {
            let cfg = config.resolve()?;
            let m = read_mesh(&mesh, strict_mesh)?;
            let r = bench::run_bench(&m, &mesh_name(&mesh), cfg, n, seed, method.into())?;
            print_json(&serde_json::to_value(&r).map_err(json_err)?, out.as_deref())
        }
        Cmd::Stats { index, n, seed } => cmd_stats(&index, n, seed),
        Cmd::Ablate { mesh, n, seed, out, strict_mesh, config } => {
            let cfg = config.resolve()?;
            let m = read_mesh(&mesh, strict_mesh)?;
            let r = bench::run_ablation(&m, &mesh_name(&mesh), cfg, n, seed)?;
            for (label, row) in [("w/o", &r.without), ("w/", &r.with)] {
                eprintln!(
                    "{label:4} pre {:10.1} ms  query {:10.1} ms  max {:7}  avg {:9.2}  queried {:9.2}",
                    row.pre_ms, row.query_ms, row.max, row.avg, row.queried
                );
            }
            print_json(&serde_json::to_value(&r).map_err(json_err)?, out.as_deref())
        }
        Cmd::Sample { mesh, n, seed, out, format } => sample(&mesh, n, seed, &out, format),
        Cmd::Gen { shape, out, level, seed } => gen(shape, level, seed, &out),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Geometry(_) => "geometry",
        Error::Mesh(MeshError::Io(_)) | Error::Io(_) => "io",
        Error::Mesh(_) => "mesh",
        Error::Voronoi(_) => "voronoi",
        Error::IndexFile(_) => "index",
        Error::Config(_) => "config",
        Error::EmptySiteSet => "sites",
        Error::Oracle(_) => "oracle",
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": error_kind(&e), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}

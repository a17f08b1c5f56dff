//! Benchmark and ablation reports over seeded uniform query points.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bvh::Bvh;
use crate::error::Result;
use crate::geometry::{Aabb, Point3};
use crate::interception::TableStats;
use crate::mesh::TriangleMesh;
use crate::oracle::brute_force_closest;
use crate::query::{BatchResult, BuildTimings, Engine, EngineConfig};
use crate::voronoi::{query_domain, SiteKind};

/// `n` points uniform in `d` from a xoshiro256++ stream seeded with `seed`.
pub fn uniform_points(d: &Aabb, n: usize, seed: u64) -> Vec<Point3> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Point3::new(
                rng.gen_range(d.min.x..=d.max.x),
                rng.gen_range(d.min.y..=d.max.y),
                rng.gen_range(d.min.z..=d.max.z),
            )
        })
        .collect()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over the bit patterns of a distance sequence; equal digests
/// mean bit-identical answers.
pub fn distance_digest(distances: impl IntoIterator<Item = f64>) -> String {
    let mut h = Sha256::new();
    for d in distances {
        h.update(d.to_bits().to_le_bytes());
    }
    hex(&h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Tables,
    Bvh,
    Brute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshIdentity {
    pub name: String,
    pub sha256: String,
    pub vertices: usize,
    pub faces: usize,
    pub bbox_diagonal: f64,
}

impl MeshIdentity {
    pub fn of(mesh: &TriangleMesh, name: &str) -> Self {
        MeshIdentity {
            name: name.to_string(),
            sha256: hex(&mesh.content_hash()),
            vertices: mesh.vertex_count(),
            faces: mesh.face_count(),
            bbox_diagonal: mesh.aabb().diagonal(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SiteCounts {
    pub vertex: usize,
    pub auxiliary: usize,
    pub sentinel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryTimings {
    pub locate_ms: f64,
    pub search_ms: f64,
    pub total_ms: f64,
    pub per_query_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub mesh: MeshIdentity,
    pub method: Method,
    pub config: EngineConfig,
    pub seed: u64,
    pub n: usize,
    pub domain: Aabb,
    /// Empty stages (e.g. tables under `bvh`) report 0.
    pub build: BuildTimings,
    pub build_total_ms: f64,
    pub augmentation_rounds: usize,
    pub sites: SiteCounts,
    /// Only for the table method.
    pub tables: Option<TableStats>,
    pub query: QueryTimings,
    pub fallbacks: u64,
    pub pruned: u64,
    pub distance_digest: String,
}

impl BenchReport {
    /// Copy with timings zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> BenchReport {
        BenchReport { build: BuildTimings::default(), build_total_ms: 0.0, query: QueryTimings::default(), ..self.clone() }
    }
}

fn site_counts(engine: &Engine) -> SiteCounts {
    let mut c = SiteCounts::default();
    for s in engine.sites().sites() {
        match s.kind {
            SiteKind::MeshVertex(_) => c.vertex += 1,
            SiteKind::Auxiliary { .. } => c.auxiliary += 1,
            SiteKind::Sentinel => c.sentinel += 1,
        }
    }
    c
}

/// Table-method benchmark on an already built engine.
pub fn bench_engine(engine: &Engine, name: &str, n: usize, seed: u64) -> BenchReport {
    let domain = engine.sites().domain();
    let points = uniform_points(&domain, n, seed);
    let batch = if n > 0 { engine.batch_query(&points) } else { BatchResult::default() };
    let locate_ms = batch.locate_secs * 1e3;
    let search_ms = batch.search_secs * 1e3;
    let total_ms = locate_ms + search_ms;
    BenchReport {
        mesh: MeshIdentity::of(engine.mesh(), name),
        method: Method::Tables,
        config: *engine.config(),
        seed,
        n,
        domain,
        build: engine.info().timings,
        build_total_ms: engine.info().timings.total_ms(),
        augmentation_rounds: engine.info().rounds,
        sites: site_counts(engine),
        tables: Some(engine.stats(if n > 0 { Some(&batch.log) } else { None })),
        query: QueryTimings { locate_ms, search_ms, total_ms, per_query_us: if n > 0 { total_ms * 1e3 / n as f64 } else { 0.0 } },
        fallbacks: batch.fallbacks,
        pruned: batch.pruned,
        distance_digest: distance_digest(batch.results.iter().map(|r| r.distance)),
    }
}

/// Builds whatever `method` needs, then runs `n` seeded points in the
/// query domain through it.
pub fn run_bench(mesh: &TriangleMesh, name: &str, config: EngineConfig, n: usize, seed: u64, method: Method) -> Result<BenchReport> {
    if method == Method::Tables {
        let engine = Engine::build(mesh.clone(), config)?;
        return Ok(bench_engine(&engine, name, n, seed));
    }
    let domain = query_domain(&mesh.aabb());
    let points = uniform_points(&domain, n, seed);
    let mut build = BuildTimings::default();
    let bvh = if method == Method::Bvh {
        let t = Instant::now();
        let bvh = Bvh::build(mesh);
        build.bvh_ms = t.elapsed().as_secs_f64() * 1e3;
        Some(bvh)
    } else {
        None
    };
    let t = Instant::now();
    let distances: Vec<f64> = match &bvh {
        Some(bvh) => points.par_iter().map(|&q| bvh.closest_point(q).distance).collect(),
        None => points.par_iter().map(|&q| brute_force_closest(mesh, q).distance).collect(),
    };
    let total_ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(BenchReport {
        mesh: MeshIdentity::of(mesh, name),
        method,
        config,
        seed,
        n,
        domain,
        build,
        build_total_ms: build.total_ms(),
        augmentation_rounds: 0,
        sites: SiteCounts::default(),
        tables: None,
        query: QueryTimings {
            locate_ms: 0.0,
            search_ms: total_ms,
            total_ms,
            per_query_us: if n > 0 { total_ms * 1e3 / n as f64 } else { 0.0 },
        },
        fallbacks: 0,
        pruned: 0,
        distance_digest: distance_digest(distances),
    })
}

/// One side of an ablation: preprocessing and query wall time plus table
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub pre_ms: f64,
    pub query_ms: f64,
    pub max: usize,
    pub avg: f64,
    pub queried: f64,
}

impl AblationRow {
    pub fn from_report(r: &BenchReport) -> AblationRow {
        let t = r.tables.unwrap_or(TableStats { max: 0, avg: 0.0, queried_avg: None, exact_avg: None });
        AblationRow {
            pre_ms: r.build_total_ms,
            query_ms: r.query.total_ms,
            max: t.max,
            avg: t.avg,
            queried: t.queried_avg.unwrap_or(0.0),
        }
    }

    /// Equality of the table columns (timings excluded).
    pub fn same_tables(&self, o: &AblationRow) -> bool {
        self.max == o.max && self.avg == o.avg && self.queried == o.queried
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub without: AblationRow,
    pub with: AblationRow,
    pub reports: [BenchReport; 2],
}

/// Two table-method runs differing only in augmentation; `config.augment`
/// is overridden on each side.
pub fn run_ablation(mesh: &TriangleMesh, name: &str, config: EngineConfig, n: usize, seed: u64) -> Result<AblationReport> {
    let off = run_bench(mesh, name, EngineConfig { augment: false, ..config }, n, seed, Method::Tables)?;
    let on = run_bench(mesh, name, EngineConfig { augment: true, ..config }, n, seed, Method::Tables)?;
    Ok(AblationReport { without: AblationRow::from_report(&off), with: AblationRow::from_report(&on), reports: [off, on] })
}

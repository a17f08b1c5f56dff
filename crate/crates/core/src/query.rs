//! The query engine: nearest site, then a bounding-sphere-pruned scan of
//! that site's interception table.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_from_complex, AugmentationConfig};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::interception::{build_all_tables, table_stats, InterceptionIndex, QueryLog, TableStats};
use crate::mesh::TriangleMesh;
use crate::nns::{NearestSiteIndex, NnsStrategy};
use crate::voronoi::{build_delaunay, make_bounded_site_set, query_domain, SiteSet};

/// Relative slack on the pruning bound, so that rounding in the bound can
/// never skip a face whose computed distance would win.
pub const PRUNE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub augment: bool,
    pub augmentation: AugmentationConfig,
    pub nns: NnsStrategy,
    pub prune: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { augment: true, augmentation: AugmentationConfig::default(), nns: NnsStrategy::KdTree, prune: true }
    }
}

/// Wall-clock milliseconds per preprocessing stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BuildTimings {
    pub bvh_ms: f64,
    pub voronoi_ms: f64,
    pub augment_ms: f64,
    pub tables_ms: f64,
    pub nns_ms: f64,
}

impl BuildTimings {
    pub fn total_ms(&self) -> f64 {
        self.bvh_ms + self.voronoi_ms + self.augment_ms + self.tables_ms + self.nns_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BuildInfo {
    pub timings: BuildTimings,
    /// Density analyses performed (0 with augmentation off).
    pub rounds: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub distance: f64,
    pub closest: Point3,
    pub face: u32,
    pub site: u32,
    pub candidates_visited: u32,
    pub exact_evaluations: u32,
    pub pruned: u32,
    /// The nearest site was a sentinel (query outside the domain) and the
    /// answer came from the BVH.
    pub fallback: bool,
}

#[derive(Debug, Clone, Default)]
pub struct BatchResult {
    pub results: Vec<QueryResult>,
    pub log: QueryLog,
    pub pruned: u64,
    pub fallbacks: u64,
    pub locate_secs: f64,
    pub search_secs: f64,
}

pub struct Engine {
    mesh: TriangleMesh,
    bvh: Bvh,
    sites: SiteSet,
    index: InterceptionIndex,
    nns: NearestSiteIndex,
    config: EngineConfig,
    info: BuildInfo,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Engine {
    /// Full preprocessing: BVH, Delaunay, augmentation, tables, site index.
    pub fn build(mesh: TriangleMesh, config: EngineConfig) -> Result<Engine> {
        config.augmentation.validate()?;
        let mut timings = BuildTimings::default();
        let t = Instant::now();
        let bvh = Bvh::build(&mesh);
        timings.bvh_ms = ms(t);

        let t = Instant::now();
        let ss = make_bounded_site_set(mesh.vertices(), query_domain(&mesh.aabb()))?;
        let vc = build_delaunay(&ss)?;
        timings.voronoi_ms = ms(t);

        let t = Instant::now();
        let (ss, vc, rounds, tau) = if config.augment {
            let out = augment_from_complex(ss, vc, &mesh, &bvh, &config.augmentation)?;
            (out.sites, out.complex, out.rounds, out.tau)
        } else {
            (ss, vc, 0, 0.0)
        };
        timings.augment_ms = ms(t);

        let t = Instant::now();
        let index = build_all_tables(&vc, &ss, &bvh, mesh.aabb().diagonal())?;
        timings.tables_ms = ms(t);

        let t = Instant::now();
        let nns = NearestSiteIndex::build(&ss.positions(), config.nns, Some(&vc))?;
        timings.nns_ms = ms(t);

        Ok(Engine { mesh, bvh, sites: ss, index, nns, config, info: BuildInfo { timings, rounds, tau } })
    }

    /// Reassembles an engine from stored sites and tables, rebuilding the
    /// BVH and the nearest-site index.
    pub fn from_parts(
        mesh: TriangleMesh,
        sites: SiteSet,
        index: InterceptionIndex,
        config: EngineConfig,
        info: BuildInfo,
    ) -> Result<Engine> {
        if index.site_count() != sites.len() {
            return Err(Error::Config(format!("{} tables for {} sites", index.site_count(), sites.len())));
        }
        let bvh = Bvh::build(&mesh);
        let nns = match config.nns {
            NnsStrategy::KdTree => NearestSiteIndex::build(&sites.positions(), NnsStrategy::KdTree, None)?,
            NnsStrategy::DelaunayWalk => {
                NearestSiteIndex::build(&sites.positions(), NnsStrategy::DelaunayWalk, Some(&build_delaunay(&sites)?))?
            }
        };
        Ok(Engine { mesh, bvh, sites, index, nns, config, info })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn index(&self) -> &InterceptionIndex {
        &self.index
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn info(&self) -> &BuildInfo {
        &self.info
    }

    /// Toggles bounding-sphere pruning (queries only; tables unaffected).
    pub fn set_prune(&mut self, prune: bool) {
        self.config.prune = prune;
    }

    pub fn stats(&self, log: Option<&QueryLog>) -> TableStats {
        table_stats(&self.index, &self.sites, log)
    }

    /// Nearest site; `hint` carries the walk's warm start between calls.
    pub fn locate(&self, q: Point3, hint: &mut u32) -> u32 {
        self.nns.nearest(q, hint)
    }

    /// Scans the table of `site` for the closest face to `q`.
    pub fn search(&self, q: Point3, site: u32) -> QueryResult {
        let table = self.index.table(site as usize);
        if self.sites.sites()[site as usize].is_sentinel() || table.is_empty() {
            let hit = self.bvh.closest_point(q);
            return QueryResult {
                distance: hit.distance,
                closest: hit.closest,
                face: hit.face,
                site,
                candidates_visited: 0,
                exact_evaluations: 0,
                pruned: 0,
                fallback: true,
            };
        }
        let spheres = self.mesh.spheres();
        let mut best_d2 = f64::INFINITY;
        let mut d_min = f64::INFINITY;
        let mut best_face = u32::MAX;
        let mut closest = q;
        let mut pruned = 0u32;
        for &f in table {
            if self.config.prune {
                let s = &spheres[f as usize];
                let to_center = q.distance(s.center);
                if to_center - s.radius - d_min >= PRUNE_MARGIN * to_center {
                    pruned += 1;
                    continue;
                }
            }
            let c = self.mesh.triangle(f as usize).closest_point(q);
            let d2 = q.distance_squared(c);
            // tables are sorted, so the first face at a given distance has the lowest id
            if d2 < best_d2 {
                best_d2 = d2;
                d_min = d2.sqrt();
                best_face = f;
                closest = c;
            }
        }
        let n = table.len() as u32;
        QueryResult {
            distance: d_min,
            closest,
            face: best_face,
            site,
            candidates_visited: n,
            exact_evaluations: n - pruned,
            pruned,
            fallback: false,
        }
    }

    pub fn query(&self, q: Point3, hint: &mut u32) -> QueryResult {
        let site = self.locate(q, hint);
        self.search(q, site)
    }

    pub fn query_distance(&self, q: Point3) -> QueryResult {
        self.query(q, &mut 0)
    }

    /// Runs a batch in two timed phases (locate, then search), in parallel
    /// chunks with one warm-start hint per chunk.
    pub fn batch_query(&self, points: &[Point3]) -> BatchResult {
        const CHUNK: usize = 1024;
        let t = Instant::now();
        let sites: Vec<u32> = points
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                let mut hint = 0;
                chunk.iter().map(|&q| self.locate(q, &mut hint)).collect::<Vec<_>>()
            })
            .collect();
        let locate_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let results: Vec<QueryResult> =
            points.par_iter().zip(sites.par_iter()).map(|(&q, &s)| self.search(q, s)).collect();
        let search_secs = t.elapsed().as_secs_f64();
        let mut out = BatchResult { locate_secs, search_secs, ..Default::default() };
        for r in &results {
            out.log.queries += 1;
            out.log.candidates += r.candidates_visited as u64;
            out.log.exact += r.exact_evaluations as u64;
            out.pruned += r.pruned as u64;
            out.fallbacks += r.fallback as u64;
        }
        out.results = results;
        out
    }
}

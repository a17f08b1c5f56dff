//! End-to-end properties of the query engine against the brute-force oracle.

use std::sync::OnceLock;

use proptest::prelude::*;
use proxdist::bench::uniform_points;
use proxdist::meshgen;
use proxdist::nns::NnsStrategy;
use proxdist::oracle::brute_force_closest;
use proxdist::predicates::{in_sphere_exact, orient3d, Sign};
use proxdist::voronoi::{build_delaunay, make_bounded_site_set, query_domain};
use proxdist::{Engine, EngineConfig, Point3, TriangleMesh};

struct Fixture {
    mesh: TriangleMesh,
    engine: Engine,
    walk: Engine,
}

fn blob() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = meshgen::organic_blob(10, 21);
        let engine = Engine::build(mesh.clone(), EngineConfig::default()).unwrap();
        let walk =
            Engine::build(mesh.clone(), EngineConfig { nns: NnsStrategy::DelaunayWalk, ..Default::default() }).unwrap();
        Fixture { mesh, engine, walk }
    })
}

fn sphere() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = meshgen::icosphere(3);
        let engine = Engine::build(mesh.clone(), EngineConfig::default()).unwrap();
        let walk =
            Engine::build(mesh.clone(), EngineConfig { nns: NnsStrategy::DelaunayWalk, ..Default::default() }).unwrap();
        Fixture { mesh, engine, walk }
    })
}

fn point_in(f: &Fixture) -> impl Strategy<Value = Point3> {
    let d = f.engine.sites().domain();
    (d.min.x..=d.max.x, d.min.y..=d.max.y, d.min.z..=d.max.z).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn check_query(f: &Fixture, q: Point3) -> Result<(), TestCaseError> {
    let r = f.engine.query_distance(q);
    let o = brute_force_closest(&f.mesh, q);
    let diag = f.mesh.aabb().diagonal();
    prop_assert!((r.distance - o.distance).abs() <= 1e-9 * diag, "{} vs {}", r.distance, o.distance);
    prop_assert!((q.distance(r.closest) - r.distance).abs() <= 1e-12 * diag);
    let on_face = f.mesh.triangle(r.face as usize).closest_point(r.closest);
    prop_assert!(on_face.distance(r.closest) <= 1e-12 * diag);
    prop_assert_eq!(r.exact_evaluations + r.pruned, r.candidates_visited);
    prop_assert_eq!(r.candidates_visited as usize, f.engine.index().table(r.site as usize).len());
    prop_assert_eq!(r.distance.to_bits(), f.walk.query_distance(q).distance.to_bits());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn blob_queries_are_exact(q in point_in(blob())) {
        check_query(blob(), q)?;
    }

    #[test]
    fn sphere_queries_are_exact(q in point_in(sphere())) {
        check_query(sphere(), q)?;
    }

    #[test]
    fn points_near_the_surface_are_exact(v in 0usize..1000, off in prop::array::uniform3(-1e-3f64..1e-3)) {
        let f = blob();
        let p = f.mesh.vertices()[v % f.mesh.vertex_count()] + Point3::from_array(off);
        check_query(f, p)?;
    }

    #[test]
    fn random_point_sets_are_delaunay(
        pts in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 5..60),
    ) {
        let pts: Vec<Point3> = pts.into_iter().map(Point3::from_array).collect();
        let mut keys: Vec<_> = pts.iter().map(|p| p.bits()).collect();
        keys.sort();
        keys.dedup();
        prop_assume!(keys.len() == pts.len());
        let ss = make_bounded_site_set(&pts, query_domain(&proxdist::Aabb::from_points(pts.iter().copied()))).unwrap();
        let vc = build_delaunay(&ss).unwrap();
        let all = vc.positions();
        for t in vc.tets() {
            let [a, b, c, d] = t.map(|i| all[i as usize]);
            prop_assert_eq!(orient3d(a, b, c, d), Sign::Positive);
            for (i, &p) in all.iter().enumerate() {
                if !t.contains(&(i as u32)) {
                    prop_assert_ne!(in_sphere_exact(a, b, c, d, p), Sign::Positive);
                }
            }
        }
    }
}

#[test]
fn superset_over_ten_thousand_queries() {
    // the brute-force closest face of every query is in the table of its nearest site
    for f in [blob(), sphere()] {
        let pts = uniform_points(&f.engine.sites().domain(), 10_000, 77);
        let mut hint = 0;
        for q in pts {
            let site = f.engine.locate(q, &mut hint);
            let face = brute_force_closest(&f.mesh, q).face;
            assert!(f.engine.index().table(site as usize).binary_search(&face).is_ok(), "face {face} missing from site {site}");
        }
    }
}

#[test]
fn pruning_is_distance_neutral() {
    let mesh = meshgen::organic_blob(8, 4);
    let mut e = Engine::build(mesh, EngineConfig::default()).unwrap();
    let pts = uniform_points(&e.sites().domain(), 5000, 1);
    let on = e.batch_query(&pts);
    e.set_prune(false);
    let off = e.batch_query(&pts);
    for (a, b) in on.results.iter().zip(&off.results) {
        assert_eq!(a.distance.to_bits(), b.distance.to_bits());
    }
    assert!(on.log.exact < off.log.exact);
    assert_eq!(on.log.candidates, off.log.candidates);
}

#[test]
fn augmented_sphere_shape() {
    let f = sphere();
    let pts = uniform_points(&f.engine.sites().domain(), 20_000, 2);
    let log = f.engine.batch_query(&pts).log;
    let st = f.engine.stats(Some(&log));
    assert!(f.engine.info().rounds >= 1);
    assert!(f.engine.sites().auxiliary_count() > 0);
    assert!(st.queried_avg.unwrap() < st.avg, "{st:?}");
}

//! On-disk engine index.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "P2MX" | u32 version | u64 body length | body | sha256(everything before)
//! body: mesh hash [32] | domain min,max (6 x f64)
//!       | u64 nv | nv x 3 f64 | u64 nf | nf x 3 u32
//!       | config | u64 rounds | f64 tau
//!       | u64 ns | ns x site | (ns + 1) x u64 table offsets | u32 face ids
//! site: u8 kind (0 vertex, 1 auxiliary, 2 sentinel) | u32 vertex id
//!       | position 3 x f64 | reference 3 x f64
//! ```
//!
//! Build timings are not stored, so identical inputs give identical bytes.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::augment::AugmentationConfig;
use crate::error::{IndexFileError, Result};
use crate::geometry::{Aabb, Point3};
use crate::interception::InterceptionIndex;
use crate::mesh::TriangleMesh;
use crate::nns::NnsStrategy;
use crate::query::{BuildInfo, Engine, EngineConfig};
use crate::voronoi::{Site, SiteKind, SiteSet};

pub const MAGIC: &[u8; 4] = b"P2MX";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const CHECKSUM_LEN: usize = 32;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn point(&mut self, p: Point3) {
        for c in p.to_array() {
            self.f64(c);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexFileError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| IndexFileError::Malformed(format!("unexpected end of body at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, IndexFileError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, IndexFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, IndexFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, IndexFileError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn point(&mut self) -> Result<Point3, IndexFileError> {
        Ok(Point3::new(self.f64()?, self.f64()?, self.f64()?))
    }
    /// A count whose elements take at least `elem` bytes each.
    fn count(&mut self, elem: usize) -> Result<usize, IndexFileError> {
        let n = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(elem as u64) > remaining {
            return Err(IndexFileError::Malformed(format!("count {n} exceeds the remaining {remaining} bytes")));
        }
        Ok(n as usize)
    }
}

fn write_config(w: &mut Writer, c: &EngineConfig) {
    w.u8(c.augment as u8);
    w.f64(c.augmentation.alpha);
    w.u64(c.augmentation.k as u64);
    w.f64(c.augmentation.rho);
    w.u64(c.augmentation.max_rounds as u64);
    w.u8(match c.nns {
        NnsStrategy::KdTree => 0,
        NnsStrategy::DelaunayWalk => 1,
    });
    w.u8(c.prune as u8);
}

fn read_bool(r: &mut Reader) -> Result<bool, IndexFileError> {
    match r.u8()? {
        0 => Ok(false),
        1 => Ok(true),
        b => Err(IndexFileError::Malformed(format!("bad flag byte {b}"))),
    }
}

fn read_config(r: &mut Reader) -> Result<EngineConfig, IndexFileError> {
    let augment = read_bool(r)?;
    let augmentation =
        AugmentationConfig { alpha: r.f64()?, k: r.u64()? as usize, rho: r.f64()?, max_rounds: r.u64()? as usize };
    let nns = match r.u8()? {
        0 => NnsStrategy::KdTree,
        1 => NnsStrategy::DelaunayWalk,
        b => return Err(IndexFileError::Malformed(format!("unknown search strategy {b}"))),
    };
    let prune = read_bool(r)?;
    Ok(EngineConfig { augment, augmentation, nns, prune })
}

/// Serializes an engine to the index format.
pub fn serialize_engine(engine: &Engine) -> Vec<u8> {
    let mesh = engine.mesh();
    let ss = engine.sites();
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(&mesh.content_hash());
    w.point(ss.domain().min);
    w.point(ss.domain().max);
    w.u64(mesh.vertex_count() as u64);
    for &v in mesh.vertices() {
        w.point(v);
    }
    w.u64(mesh.face_count() as u64);
    for f in mesh.faces() {
        for &i in f {
            w.u32(i);
        }
    }
    write_config(&mut w, engine.config());
    w.u64(engine.info().rounds as u64);
    w.f64(engine.info().tau);
    w.u64(ss.len() as u64);
    for s in ss.sites() {
        let (kind, id, reference) = match s.kind {
            SiteKind::MeshVertex(v) => (0, v, s.position),
            SiteKind::Auxiliary { reference } => (1, u32::MAX, reference),
            SiteKind::Sentinel => (2, u32::MAX, s.position),
        };
        w.u8(kind);
        w.u32(id);
        w.point(s.position);
        w.point(reference);
    }
    let mut offset = 0u64;
    w.u64(0);
    for t in engine.index().tables() {
        offset += t.len() as u64;
        w.u64(offset);
    }
    for t in engine.index().tables() {
        for &f in t {
            w.u32(f);
        }
    }
    let body = w.0;

    let mut out = Vec::with_capacity(HEADER_LEN + body.len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    let sum = Sha256::digest(&out);
    out.extend_from_slice(&sum);
    out
}

/// Parses an index. With `expected_mesh`, the stored mesh hash must match it.
pub fn deserialize_engine(bytes: &[u8], expected_mesh: Option<&TriangleMesh>) -> Result<Engine> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        // a file cut inside the magic is reported as truncated
        if bytes.len() < 4 && MAGIC.starts_with(bytes) {
            return Err(IndexFileError::Version(None).into());
        }
        return Err(IndexFileError::BadMagic.into());
    }
    if bytes.len() < 8 {
        return Err(IndexFileError::Version(None).into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION || bytes.len() < HEADER_LEN {
        return Err(IndexFileError::Version(Some(version)).into());
    }
    let body_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected_len = (HEADER_LEN as u64).checked_add(body_len).and_then(|n| n.checked_add(CHECKSUM_LEN as u64));
    match expected_len {
        Some(n) if n == bytes.len() as u64 => {}
        Some(n) if n > bytes.len() as u64 => return Err(IndexFileError::Version(Some(version)).into()),
        _ => return Err(IndexFileError::Malformed("trailing bytes after the checksum".into()).into()),
    }
    let split = bytes.len() - CHECKSUM_LEN;
    if Sha256::digest(&bytes[..split]).as_slice() != &bytes[split..] {
        return Err(IndexFileError::Checksum.into());
    }

    let mut r = Reader { buf: &bytes[HEADER_LEN..split], pos: 0 };
    let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
    if let Some(m) = expected_mesh {
        if m.content_hash() != hash {
            return Err(IndexFileError::MeshMismatch.into());
        }
    }
    let domain = Aabb::new(r.point()?, r.point()?);
    let nv = r.count(24)?;
    let vertices = (0..nv).map(|_| r.point()).collect::<Result<Vec<_>, _>>()?;
    let nf = r.count(12)?;
    let faces = (0..nf).map(|_| Ok([r.u32()?, r.u32()?, r.u32()?])).collect::<Result<Vec<_>, IndexFileError>>()?;
    if faces.iter().flatten().any(|&i| i as usize >= nv) {
        return Err(IndexFileError::Malformed("face references a missing vertex".into()).into());
    }
    let mesh = TriangleMesh::from_parts(vertices, faces);
    if mesh.content_hash() != hash {
        return Err(IndexFileError::MeshMismatch.into());
    }
    let config = read_config(&mut r)?;
    config.augmentation.validate()?;
    let rounds = r.u64()? as usize;
    let tau = r.f64()?;

    let ns = r.count(53)?;
    let mut sites = Vec::with_capacity(ns);
    for _ in 0..ns {
        let kind = r.u8()?;
        let id = r.u32()?;
        let position = r.point()?;
        let reference = r.point()?;
        let kind = match kind {
            0 if (id as usize) < nv && mesh.vertices()[id as usize] == position => SiteKind::MeshVertex(id),
            1 => SiteKind::Auxiliary { reference },
            2 => SiteKind::Sentinel,
            _ => return Err(IndexFileError::Malformed(format!("bad site record {}", sites.len())).into()),
        };
        sites.push(Site { position, kind });
    }
    let sites = SiteSet::from_parts(sites, domain)?;

    let offsets = (0..=ns).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
    if offsets[0] != 0 || offsets.windows(2).any(|w| w[1] < w[0]) {
        return Err(IndexFileError::Malformed("table offsets are not monotone".into()).into());
    }
    let total = offsets[ns];
    if total.checked_mul(4) != Some((r.buf.len() - r.pos) as u64) {
        return Err(IndexFileError::Malformed("face-id array length does not match the offsets".into()).into());
    }
    let mut tables = Vec::with_capacity(ns);
    for (i, w) in offsets.windows(2).enumerate() {
        let t = (w[0]..w[1]).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        if t.windows(2).any(|p| p[0] >= p[1]) || t.last().is_some_and(|&f| f as usize >= nf) {
            return Err(IndexFileError::Malformed(format!("table of site {i} is unsorted or out of range")).into());
        }
        if sites.sites()[i].is_sentinel() && !t.is_empty() {
            return Err(IndexFileError::Malformed(format!("sentinel site {i} has a table")).into());
        }
        tables.push(t);
    }
    let info = BuildInfo { rounds, tau, ..Default::default() };
    Engine::from_parts(mesh, sites, InterceptionIndex::from_tables(tables), config, info)
}

pub fn save_engine(engine: &Engine, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_engine(engine)).map_err(IndexFileError::Io)?;
    Ok(())
}

pub fn load_engine(path: &Path, expected_mesh: Option<&TriangleMesh>) -> Result<Engine> {
    let bytes = std::fs::read(path).map_err(IndexFileError::Io)?;
    deserialize_engine(&bytes, expected_mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::meshgen;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn engine(m: &TriangleMesh) -> Engine {
        Engine::build(m.clone(), EngineConfig::default()).unwrap()
    }

    #[test]
    fn round_trip_preserves_answers() {
        let m = meshgen::organic_blob(6, 9);
        let e = engine(&m);
        let bytes = serialize_engine(&e);
        let back = deserialize_engine(&bytes, Some(&m)).unwrap();
        assert_eq!(back.sites(), e.sites());
        assert_eq!(back.index(), e.index());
        assert_eq!(back.config(), e.config());
        assert_eq!(serialize_engine(&back), bytes);
        let d = e.sites().domain();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for _ in 0..1000 {
            let q = Point3::new(
                rng.gen_range(d.min.x..d.max.x),
                rng.gen_range(d.min.y..d.max.y),
                rng.gen_range(d.min.z..d.max.z),
            );
            assert_eq!(e.query_distance(q).distance.to_bits(), back.query_distance(q).distance.to_bits());
        }
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let m = meshgen::icosphere(2);
        assert_eq!(serialize_engine(&engine(&m)), serialize_engine(&engine(&m)));
    }

    #[test]
    fn truncated_is_a_version_error() {
        let bytes = serialize_engine(&engine(&meshgen::regular_tetrahedron(1.0)));
        for cut in [0, 2, 6, 12, bytes.len() / 2, bytes.len() - 1] {
            let err = deserialize_engine(&bytes[..cut], None).err().unwrap();
            assert!(matches!(err, Error::IndexFile(IndexFileError::Version(_))), "cut {cut}: {err}");
        }
    }

    #[test]
    fn wrong_mesh_is_rejected() {
        let bytes = serialize_engine(&engine(&meshgen::regular_tetrahedron(1.0)));
        let other = meshgen::regular_tetrahedron(2.0);
        let err = deserialize_engine(&bytes, Some(&other)).err().unwrap();
        assert!(matches!(err, Error::IndexFile(IndexFileError::MeshMismatch)));
    }

    #[test]
    fn flipped_byte_fails_the_checksum() {
        let mut bytes = serialize_engine(&engine(&meshgen::regular_tetrahedron(1.0)));
        let i = bytes.len() / 3;
        bytes[i] ^= 0x10;
        let err = deserialize_engine(&bytes, None).err().unwrap();
        assert!(matches!(err, Error::IndexFile(IndexFileError::Checksum)));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = serialize_engine(&engine(&meshgen::single_triangle()));
        bytes[4] = 9;
        assert!(matches!(
            deserialize_engine(&bytes, None).err().unwrap(),
            Error::IndexFile(IndexFileError::Version(Some(9)))
        ));
        bytes[0] = b'X';
        assert!(matches!(deserialize_engine(&bytes, None).err().unwrap(), Error::IndexFile(IndexFileError::BadMagic)));
    }

    #[test]
    fn tetrahedron_index_has_four_vertex_tables() {
        let e = engine(&meshgen::regular_tetrahedron(1.0));
        let back = deserialize_engine(&serialize_engine(&e), None).unwrap();
        let n = back
            .sites()
            .sites()
            .iter()
            .zip(back.index().tables())
            .filter(|(s, t)| matches!(s.kind, SiteKind::MeshVertex(_)) && !t.is_empty())
            .count();
        assert_eq!(n, 4);
    }
}

//! Triangle mesh loading (OFF, ASCII OBJ), validation and summary stats.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::MeshError;
use crate::geometry::{min_sphere_of_triangle, Aabb, Point3, Sphere, Triangle3};

/// Relative area threshold: faces with area below `1e-14 * diag^2` are dropped.
pub const AREA_EPS_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "off" => Ok(MeshFormat::Off),
            "obj" => Ok(MeshFormat::Obj),
            other => Err(MeshError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Validated, immutable triangle mesh with per-face pruning spheres.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[u32; 3]>,
    spheres: Vec<Sphere>,
    aabb: Aabb,
}

impl TriangleMesh {
    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    /// Minimal enclosing sphere of each face.
    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn triangle(&self, f: usize) -> Triangle3 {
        let [a, b, c] = self.faces[f];
        Triangle3::new(
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        )
    }

    /// SHA-256 over the vertex coordinates and face indices.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for c in v.to_array() {
                h.update(c.to_le_bytes());
            }
        }
        h.update((self.faces.len() as u64).to_le_bytes());
        for f in &self.faces {
            for i in f {
                h.update(i.to_le_bytes());
            }
        }
        h.finalize().into()
    }

    /// Faces incident to each vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<u32>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            for &v in tri {
                inc[v as usize].push(f as u32);
            }
        }
        inc
    }

    pub fn write_off<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.faces.len())?;
        for v in &self.vertices {
            // {:?} prints the shortest string that round-trips exactly
            writeln!(w, "{:?} {:?} {:?}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(())
    }

    pub fn save_off(&self, path: &Path) -> std::io::Result<()> {
        let f = fs::File::create(path)?;
        self.write_off(std::io::BufWriter::new(f))
    }
}

/// What loading and validation changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MeshReport {
    /// Input polygons with more than three corners that were fan-split.
    pub fan_split_polygons: usize,
    pub merged_vertices: usize,
    /// Input face indices (after fan splitting) dropped as zero-area.
    pub removed_faces: Vec<usize>,
    pub unreferenced_vertices: usize,
}

impl MeshReport {
    pub fn is_empty(&self) -> bool {
        *self == MeshReport::default()
    }
}

impl fmt::Display for MeshReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fan_split_polygons={}", self.fan_split_polygons)?;
        writeln!(f, "merged_vertices={}", self.merged_vertices)?;
        writeln!(f, "removed_degenerate_faces={}", self.removed_faces.len())?;
        if !self.removed_faces.is_empty() {
            let ids: Vec<String> = self.removed_faces.iter().map(|i| i.to_string()).collect();
            writeln!(f, "removed_face_ids={}", ids.join(","))?;
        }
        write!(f, "unreferenced_vertices={}", self.unreferenced_vertices)
    }
}

/// Unvalidated vertex/face arrays straight from a parser.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
    pub fan_split_polygons: usize,
}

impl RawMesh {
    /// Triangulates a polygon as a fan around its first corner.
    fn push_polygon(&mut self, idx: &[usize]) {
        if idx.len() > 3 {
            self.fan_split_polygons += 1;
        }
        for k in 1..idx.len() - 1 {
            self.faces.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
}

pub fn load_mesh(path: &Path, strict: bool) -> Result<(TriangleMesh, MeshReport), MeshError> {
    let format = MeshFormat::from_path(path)?;
    let text = fs::read_to_string(path)?;
    let raw = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    validate_mesh(raw, strict)
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshError> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, "non-finite coordinate"));
    }
    Ok(v)
}

pub fn parse_off(text: &str) -> Result<RawMesh, MeshError> {
    // tokens with their 1-based line numbers, comments stripped
    let mut tokens = text.lines().enumerate().flat_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        l.split_whitespace().map(move |t| (i + 1, t))
    });
    let (line, head) = tokens.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut next_tok = |what: &str| tokens.next().ok_or_else(|| parse_err(line, format!("unexpected end of file, expected {what}")));
    let first_count = if head == "OFF" {
        None
    } else if let Some(rest) = head.strip_prefix("OFF") {
        return Err(parse_err(line, format!("unsupported OFF variant {rest:?}")));
    } else {
        // header keyword is optional in some writers
        Some(head)
    };
    let nv_tok = match first_count {
        Some(t) => (line, t),
        None => next_tok("vertex count")?,
    };
    let nv: usize = nv_tok.1.parse().map_err(|_| parse_err(nv_tok.0, "bad vertex count"))?;
    let (l, t) = next_tok("face count")?;
    let nf: usize = t.parse().map_err(|_| parse_err(l, "bad face count"))?;
    let (l, t) = next_tok("edge count")?;
    let _: usize = t.parse().map_err(|_| parse_err(l, "bad edge count"))?;

    let mut raw = RawMesh::default();
    raw.vertices.reserve(nv);
    for _ in 0..nv {
        let mut c = [0.0; 3];
        for v in c.iter_mut() {
            let (l, t) = next_tok("vertex coordinate")?;
            *v = parse_f64(t, l)?;
        }
        raw.vertices.push(Point3::from_array(c));
    }
    for _ in 0..nf {
        let (l, t) = next_tok("face size")?;
        let k: usize = t.parse().map_err(|_| parse_err(l, "bad face size"))?;
        if k < 3 {
            return Err(parse_err(l, format!("face with {k} corners")));
        }
        let mut idx = Vec::with_capacity(k);
        for _ in 0..k {
            let (l, t) = next_tok("face index")?;
            idx.push(t.parse().map_err(|_| parse_err(l, format!("bad index {t:?}")))?);
        }
        // TODO: skip optional per-face colour values that follow the indices
        raw.push_polygon(&idx);
    }
    Ok(raw)
}

pub fn parse_obj(text: &str) -> Result<RawMesh, MeshError> {
    let mut raw = RawMesh::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for v in c.iter_mut() {
                    let t = it.next().ok_or_else(|| parse_err(ln, "vertex needs 3 coordinates"))?;
                    *v = parse_f64(t, ln)?;
                }
                raw.vertices.push(Point3::from_array(c));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in it {
                    let first = t.split('/').next().unwrap_or("");
                    let k: i64 = first.parse().map_err(|_| parse_err(ln, format!("bad face index {t:?}")))?;
                    let resolved = if k > 0 {
                        k - 1
                    } else if k < 0 {
                        raw.vertices.len() as i64 + k
                    } else {
                        return Err(parse_err(ln, "OBJ indices are 1-based"));
                    };
                    if resolved < 0 {
                        return Err(parse_err(ln, format!("relative index {k} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(parse_err(ln, "face needs at least 3 corners"));
                }
                raw.push_polygon(&idx);
            }
            _ => {}
        }
    }
    Ok(raw)
}

/// Merges exact-duplicate vertices, drops zero-area faces and unreferenced
/// vertices, and populates the pruning spheres.
pub fn validate_mesh(raw: RawMesh, strict: bool) -> Result<(TriangleMesh, MeshReport), MeshError> {
    let mut report = MeshReport {
        fan_split_polygons: raw.fan_split_polygons,
        ..Default::default()
    };
    if raw.faces.is_empty() {
        return Err(MeshError::Empty);
    }
    for (fi, f) in raw.faces.iter().enumerate() {
        for &i in f {
            if i >= raw.vertices.len() {
                return Err(MeshError::IndexOutOfRange {
                    face: fi,
                    index: i,
                    count: raw.vertices.len(),
                });
            }
        }
    }

    // exact-equality merge, first occurrence wins
    let mut first: HashMap<[u64; 3], u32> = HashMap::with_capacity(raw.vertices.len());
    let mut merged: Vec<Point3> = Vec::with_capacity(raw.vertices.len());
    let mut remap = Vec::with_capacity(raw.vertices.len());
    for &v in &raw.vertices {
        let id = *first.entry(v.bits()).or_insert_with(|| {
            merged.push(v);
            (merged.len() - 1) as u32
        });
        remap.push(id);
    }
    report.merged_vertices = raw.vertices.len() - merged.len();

    let diag = Aabb::from_points(merged.iter().copied()).diagonal();
    let area_eps = AREA_EPS_RATIO * diag * diag;
    let mut faces = Vec::with_capacity(raw.faces.len());
    for (fi, f) in raw.faces.iter().enumerate() {
        let t = [remap[f[0]], remap[f[1]], remap[f[2]]];
        let tri = Triangle3::new(merged[t[0] as usize], merged[t[1] as usize], merged[t[2] as usize]);
        let distinct = t[0] != t[1] && t[1] != t[2] && t[0] != t[2];
        if !distinct || !(tri.area() >= area_eps) || tri.is_degenerate() {
            report.removed_faces.push(fi);
            continue;
        }
        faces.push(t);
    }
    if faces.is_empty() {
        return Err(MeshError::AllDegenerate(raw.faces.len()));
    }
    if strict && !report.removed_faces.is_empty() {
        return Err(MeshError::Strict(format!(
            "{} degenerate faces (first: {})",
            report.removed_faces.len(),
            report.removed_faces[0]
        )));
    }

    // vertices off the surface would break the on-surface site assumption
    let used: HashSet<u32> = faces.iter().flatten().copied().collect();
    let (vertices, faces) = if used.len() < merged.len() {
        report.unreferenced_vertices = merged.len() - used.len();
        let mut compact = vec![u32::MAX; merged.len()];
        let mut kept = Vec::with_capacity(used.len());
        for (i, v) in merged.iter().enumerate() {
            if used.contains(&(i as u32)) {
                compact[i] = kept.len() as u32;
                kept.push(*v);
            }
        }
        let faces = faces
            .into_iter()
            .map(|f| [compact[f[0] as usize], compact[f[1] as usize], compact[f[2] as usize]])
            .collect();
        (kept, faces)
    } else {
        (merged, faces)
    };

    Ok((TriangleMesh::from_parts(vertices, faces), report))
}

impl TriangleMesh {
    /// Builds a mesh from already-clean arrays (generators, deserialization).
    /// Callers that cannot vouch for the input should go through
    /// [`validate_mesh`].
    pub fn from_parts(vertices: Vec<Point3>, faces: Vec<[u32; 3]>) -> TriangleMesh {
        let aabb = Aabb::from_points(vertices.iter().copied());
        let mut mesh = TriangleMesh {
            vertices,
            faces,
            spheres: Vec::new(),
            aabb,
        };
        mesh.spheres = (0..mesh.faces.len())
            .map(|f| min_sphere_of_triangle(&mesh.triangle(f)))
            .collect();
        mesh
    }

    pub fn validated(vertices: Vec<Point3>, faces: Vec<[u32; 3]>) -> Result<(TriangleMesh, MeshReport), MeshError> {
        let raw = RawMesh {
            vertices,
            faces: faces
                .into_iter()
                .map(|f| [f[0] as usize, f[1] as usize, f[2] as usize])
                .collect(),
            fan_split_polygons: 0,
        };
        validate_mesh(raw, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub mean_edge_length: f64,
    pub aabb: Aabb,
    pub face_count: usize,
    pub vertex_count: usize,
}

pub fn mesh_stats(m: &TriangleMesh) -> MeshStats {
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(m.faces.len() * 3);
    for f in &m.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edges.push((a.min(b), a.max(b)));
        }
    }
    // sorted so the floating-point sum is reproducible
    edges.sort_unstable();
    edges.dedup();
    let total: f64 = edges
        .iter()
        .map(|&(a, b)| m.vertices[a as usize].distance(m.vertices[b as usize]))
        .sum();
    MeshStats {
        mean_edge_length: total / edges.len() as f64,
        aabb: m.aabb,
        face_count: m.faces.len(),
        vertex_count: m.vertices.len(),
    }
}

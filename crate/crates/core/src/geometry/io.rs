//! Surface mesh readers (OBJ, OFF, binary STL), an OBJ writer, and the paired
//! `.node`/`.ele` ASCII format for tetrahedral meshes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point3, SurfaceMesh, TetMesh};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
    StlBinary,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            "stl" => Some(MeshFormat::StlBinary),
            _ => None,
        }
    }
}

/// Reads a surface mesh in the declared format. Indices are validated.
pub fn load_surface_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let ctx = path.display().to_string();
    match format {
        MeshFormat::Obj => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_obj(&text, &ctx)
        }
        MeshFormat::Off => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_off(&text, &ctx)
        }
        MeshFormat::StlBinary => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_stl_binary(&bytes, &ctx)
        }
    }
}

/// Infers the format from the file extension.
pub fn load_surface_mesh_auto(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| Error::InvalidArgument(format!("{}: unrecognized mesh extension", path.display())))?;
    load_surface_mesh(path, format)
}

fn parse_f64(tok: Option<&str>, ctx: &str, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(ctx, line, "missing coordinate"))?;
    tok.parse::<f64>().map_err(|_| Error::parse(ctx, line, format!("bad number `{tok}`")))
}

fn triangulate_polygon(poly: &[usize], faces: &mut Vec<[usize; 3]>, ctx: &str, line: usize) -> Result<()> {
    if poly.len() < 3 {
        return Err(Error::parse(ctx, line, "face with fewer than 3 vertices"));
    }
    for i in 1..poly.len() - 1 {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
    Ok(())
}

/// Parses ASCII OBJ: `v` and `f` records, 1-based (or negative relative)
/// indices, `f` entries may carry `/vt/vn` suffixes. Polygons are fanned.
pub fn parse_obj(text: &str, ctx: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = body.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), ctx, line)?;
                let y = parse_f64(toks.next(), ctx, line)?;
                let z = parse_f64(toks.next(), ctx, line)?;
                vertices.push([x, y, z]);
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in toks {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 =
                        head.parse().map_err(|_| Error::parse(ctx, line, format!("bad face index `{tok}`")))?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(Error::parse(ctx, line, "face index 0 is invalid in OBJ"));
                    };
                    if resolved < 0 {
                        return Err(Error::IndexOutOfRange {
                            face: faces.len(),
                            index: idx.unsigned_abs() as usize,
                            count: vertices.len(),
                        });
                    }
                    poly.push(resolved as usize);
                }
                triangulate_polygon(&poly, &mut faces, ctx, line)?;
            }
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, faces)
}

/// Parses ASCII OFF (optionally `COFF`), 0-based indices.
pub fn parse_off(text: &str, ctx: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| Error::parse(ctx, 1, "empty file"))?;
    let rest_of_header = match header.strip_prefix("COFF").or_else(|| header.strip_prefix("OFF")) {
        Some(stripped) => stripped.trim(),
        None => return Err(Error::parse(ctx, ln, "missing OFF header")),
    };
    let (ln, counts) = if rest_of_header.is_empty() {
        lines.next().ok_or_else(|| Error::parse(ctx, ln, "missing counts line"))?
    } else {
        (ln, rest_of_header)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(ctx, ln, "bad counts line"))?;
    if counts.len() < 2 {
        return Err(Error::parse(ctx, ln, "counts line needs vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| Error::parse(ctx, ln, "truncated vertex list"))?;
        let mut toks = l.split_whitespace();
        let x = parse_f64(toks.next(), ctx, ln)?;
        let y = parse_f64(toks.next(), ctx, ln)?;
        let z = parse_f64(toks.next(), ctx, ln)?;
        vertices.push([x, y, z]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| Error::parse(ctx, ln, "truncated face list"))?;
        let nums: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(ctx, ln, "bad face record"))?;
        let n = *nums.first().ok_or_else(|| Error::parse(ctx, ln, "empty face record"))?;
        if nums.len() < n + 1 {
            return Err(Error::parse(ctx, ln, "face record shorter than its vertex count"));
        }
        triangulate_polygon(&nums[1..=n], &mut faces, ctx, ln)?;
    }
    SurfaceMesh::new(vertices, faces)
}

/// Parses binary STL, welding bit-identical vertex positions.
pub fn parse_stl_binary(bytes: &[u8], ctx: &str) -> Result<SurfaceMesh> {
    if bytes.len() < 84 {
        return Err(Error::parse(ctx, 0, "binary STL shorter than its 84-byte header"));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + 50 * n;
    if bytes.len() < expected {
        return Err(Error::parse(ctx, 0, format!("binary STL declares {n} triangles but holds {} bytes", bytes.len())));
    }
    let mut lookup: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices: Vec<Point3> = Vec::new();
    let mut faces = Vec::with_capacity(n);
    for t in 0..n {
        let rec = &bytes[84 + 50 * t..84 + 50 * (t + 1)];
        let mut tri = [0usize; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let mut p = [0.0f64; 3];
            for (a, c) in p.iter_mut().enumerate() {
                let off = 12 + 12 * k + 4 * a;
                *c = f32::from_le_bytes(rec[off..off + 4].try_into().unwrap()) as f64;
            }
            let key = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
            *slot = *lookup.entry(key).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            });
        }
        faces.push(tri);
    }
    SurfaceMesh::new(vertices, faces)
}

/// Serializes binary STL (f32 coordinates).
pub fn stl_binary_bytes(mesh: &SurfaceMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.faces.len() as u32).to_le_bytes());
    for f in 0..mesh.faces.len() {
        let tri = mesh.triangle(f);
        let n = super::cross(super::sub(tri[1], tri[0]), super::sub(tri[2], tri[0]));
        let len = super::norm(n);
        let n = if len > 0.0 { super::scale(n, 1.0 / len) } else { n };
        for c in n {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for p in tri {
            for c in p {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

/// OBJ text with shortest round-trip float formatting.
pub fn obj_string(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_obj(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, obj_string(mesh)).map_err(|e| Error::io(path, e))
}

/// `(node, ele)` file contents: `index x y z` and `index v0 v1 v2 v3` lines,
/// 0-based, no header.
pub fn tet_mesh_strings(mesh: &TetMesh) -> (String, String) {
    let mut node = String::new();
    for (i, p) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(node, "{i} {} {} {}", p[0], p[1], p[2]);
    }
    let mut ele = String::new();
    for (i, t) in mesh.tets.iter().enumerate() {
        let _ = writeln!(ele, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    (node, ele)
}

pub fn write_tet_mesh(mesh: &TetMesh, node_path: impl AsRef<Path>, ele_path: impl AsRef<Path>) -> Result<()> {
    let (node, ele) = tet_mesh_strings(mesh);
    let (np, ep) = (node_path.as_ref(), ele_path.as_ref());
    fs::write(np, node).map_err(|e| Error::io(np, e))?;
    fs::write(ep, ele).map_err(|e| Error::io(ep, e))
}

fn parse_indexed_records<const N: usize, T: std::str::FromStr + Copy + Default>(
    text: &str,
    ctx: &str,
) -> Result<Vec<[T; N]>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let idx: usize =
            toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| Error::parse(ctx, line, "bad record index"))?;
        if idx != out.len() {
            return Err(Error::parse(ctx, line, format!("expected index {}, found {idx}", out.len())));
        }
        let mut rec = [T::default(); N];
        for slot in rec.iter_mut() {
            let tok = toks.next().ok_or_else(|| Error::parse(ctx, line, "truncated record"))?;
            *slot = tok.parse().map_err(|_| Error::parse(ctx, line, format!("bad value `{tok}`")))?;
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn parse_tet_mesh(node: &str, ele: &str, ctx: &str) -> Result<TetMesh> {
    let vertices = parse_indexed_records::<3, f64>(node, &format!("{ctx}.node"))?;
    let tets = parse_indexed_records::<4, usize>(ele, &format!("{ctx}.ele"))?;
    TetMesh::new(vertices, tets)
}

pub fn read_tet_mesh(node_path: impl AsRef<Path>, ele_path: impl AsRef<Path>) -> Result<TetMesh> {
    let (np, ep) = (node_path.as_ref(), ele_path.as_ref());
    let node = fs::read_to_string(np).map_err(|e| Error::io(np, e))?;
    let ele = fs::read_to_string(ep).map_err(|e| Error::io(ep, e))?;
    parse_tet_mesh(&node, &ele, &np.with_extension("").display().to_string())
}

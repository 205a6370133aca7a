//! OBJ and PLY mesh readers.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;
use ply_rs_bw::parser::Parser;
use ply_rs_bw::ply::{DefaultElement, Property};

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Loads an OBJ or PLY mesh. The format is chosen by extension, falling
/// back to sniffing the PLY magic.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("ply") => parse_ply(&mut bytes.as_slice()),
        Some("obj") => parse_obj(&String::from_utf8_lossy(&bytes)),
        _ if bytes.starts_with(b"ply") => parse_ply(&mut bytes.as_slice()),
        _ => parse_obj(&String::from_utf8_lossy(&bytes)),
    }
}

/// Resolves an OBJ face-vertex token (`v`, `v/t`, `v/t/n`, `v//n`), returning
/// zero-based vertex and optional normal indices.
fn obj_corner(
    token: &str,
    n_vertices: usize,
    n_normals: usize,
    line: usize,
) -> Result<(usize, Option<usize>)> {
    let mut parts = token.split('/');
    let resolve = |s: &str, count: usize| -> Result<usize> {
        let i: i64 = s
            .parse()
            .map_err(|_| Error::parse("obj", line, format!("bad index '{s}'")))?;
        let idx = if i > 0 {
            i - 1
        } else if i < 0 {
            count as i64 + i
        } else {
            -1
        };
        if idx < 0 || idx as usize >= count {
            return Err(Error::parse("obj", line, format!("index {i} out of range")));
        }
        Ok(idx as usize)
    };
    let v = resolve(parts.next().unwrap_or(""), n_vertices)?;
    let _tex = parts.next();
    let n = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve(s, n_normals)?),
        _ => None,
    };
    Ok((v, n))
}

/// Parses Wavefront OBJ text. Polygons are fan-triangulated. When every
/// vertex is referenced with one consistent `vn`, those become the vertex
/// normals.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut normals: Vec<Vector3<f64>> = Vec::new();
    let mut faces = Vec::new();
    let mut corner_normals: Vec<(usize, usize)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" | "vn" => {
                let xyz: Vec<f64> = tokens
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::parse("obj", line, format!("bad number '{t}'")))
                    })
                    .collect::<Result<_>>()?;
                if xyz.len() != 3 {
                    return Err(Error::parse("obj", line, "expected 3 coordinates"));
                }
                let v = Vector3::new(xyz[0], xyz[1], xyz[2]);
                if tag == "v" {
                    vertices.push(v);
                } else {
                    normals.push(v);
                }
            }
            "f" => {
                let corners = tokens
                    .map(|t| obj_corner(t, vertices.len(), normals.len(), line))
                    .collect::<Result<Vec<_>>>()?;
                if corners.len() < 3 {
                    return Err(Error::parse("obj", line, "face needs at least 3 vertices"));
                }
                for &(v, n) in &corners {
                    if let Some(n) = n {
                        corner_normals.push((v, n));
                    }
                }
                for k in 1..corners.len() - 1 {
                    faces.push([
                        corners[0].0 as u32,
                        corners[k].0 as u32,
                        corners[k + 1].0 as u32,
                    ]);
                }
            }
            _ => {}
        }
    }

    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let vertex_normals = consistent_vertex_normals(vertices.len(), &normals, &corner_normals, faces.len());
    let mut mesh = TriangleMesh::new(vertices, faces)?;
    mesh.vertex_normals = vertex_normals;
    Ok(mesh)
}

fn consistent_vertex_normals(
    n_vertices: usize,
    normals: &[Vector3<f64>],
    corners: &[(usize, usize)],
    n_faces: usize,
) -> Option<Vec<Vector3<f64>>> {
    if normals.is_empty() || corners.len() < n_faces * 3 {
        return None;
    }
    let mut assigned: Vec<Option<usize>> = vec![None; n_vertices];
    for &(v, n) in corners {
        match assigned[v] {
            None => assigned[v] = Some(n),
            Some(prev) if prev == n || normals[prev] == normals[n] => {}
            Some(_) => return None,
        }
    }
    assigned
        .iter()
        .map(|a| a.and_then(|n| normals[n].try_normalize(1e-12)))
        .collect()
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn index_list(p: &Property) -> Option<Vec<i64>> {
    Some(match p {
        Property::ListChar(v) => v.iter().map(|&x| x as i64).collect(),
        Property::ListUChar(v) => v.iter().map(|&x| x as i64).collect(),
        Property::ListShort(v) => v.iter().map(|&x| x as i64).collect(),
        Property::ListUShort(v) => v.iter().map(|&x| x as i64).collect(),
        Property::ListInt(v) => v.iter().map(|&x| x as i64).collect(),
        Property::ListUInt(v) => v.iter().map(|&x| x as i64).collect(),
        _ => return None,
    })
}

/// Parses an ASCII or binary PLY stream with `vertex` and `face` elements.
pub fn parse_ply(source: &mut impl Read) -> Result<TriangleMesh> {
    let ply = Parser::<DefaultElement>::new()
        .read_ply(source)
        .map_err(|e| Error::parse("ply", 0, e.to_string()))?;

    let vertex_elems = ply
        .payload
        .get("vertex")
        .ok_or_else(|| Error::parse("ply", 0, "missing vertex element"))?;
    let get = |e: &DefaultElement, key: &str, i: usize| -> Result<f64> {
        e.get(key)
            .and_then(scalar)
            .ok_or_else(|| Error::parse("ply", 0, format!("vertex {i} lacks numeric '{key}'")))
    };
    let mut vertices = Vec::with_capacity(vertex_elems.len());
    let mut normals = Vec::with_capacity(vertex_elems.len());
    for (i, e) in vertex_elems.iter().enumerate() {
        vertices.push(Vector3::new(get(e, "x", i)?, get(e, "y", i)?, get(e, "z", i)?));
        if let (Ok(x), Ok(y), Ok(z)) = (get(e, "nx", i), get(e, "ny", i), get(e, "nz", i)) {
            normals.push(Vector3::new(x, y, z));
        }
    }

    let mut faces = Vec::new();
    for (fi, e) in ply.payload.get("face").into_iter().flatten().enumerate() {
        let list = e
            .get("vertex_indices")
            .or_else(|| e.get("vertex_index"))
            .and_then(index_list)
            .ok_or_else(|| Error::parse("ply", 0, format!("face {fi} lacks vertex_indices")))?;
        if list.len() < 3 {
            return Err(Error::parse("ply", 0, format!("face {fi} has fewer than 3 vertices")));
        }
        if list.iter().any(|&i| i < 0) {
            return Err(Error::parse("ply", 0, format!("face {fi} has a negative index")));
        }
        for k in 1..list.len() - 1 {
            faces.push([list[0] as u32, list[k] as u32, list[k + 1] as u32]);
        }
    }
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let has_normals = normals.len() == vertices.len();
    let mut mesh = TriangleMesh::new(vertices, faces)?;
    if has_normals {
        mesh.vertex_normals = normals
            .iter()
            .map(|n| n.try_normalize(1e-12))
            .collect::<Option<Vec<_>>>();
    }
    Ok(mesh)
}

/// Writes `v`/`f` records (1-based indices).
pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

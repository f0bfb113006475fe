//! OBJ and PLY (ASCII / binary little-endian) readers, plus an ASCII PLY writer.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ply_rs::parser::Parser;
use ply_rs::ply::{DefaultElement, Property};

use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};

/// Loads a mesh, dispatching on the file extension (`.obj` or `.ply`).
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    match ext.as_str() {
        "obj" => read_obj(&mut reader),
        "ply" => read_ply(&mut reader),
        other => Err(format!("unsupported mesh extension {other:?}")),
    }
    .map_err(|message| Error::MeshFormat {
        path: path.to_path_buf(),
        message,
    })
}

/// Writes an ASCII PLY with double-precision coordinates. Values use the
/// shortest round-tripping decimal form, so reading back is exact and keeps
/// vertex order.
pub fn write_ply(mesh: &TriMesh, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "ply\nformat ascii 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertex_count())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    if mesh.colors().is_some() {
        writeln!(out, "property float red\nproperty float green\nproperty float blue")?;
    }
    writeln!(out, "element face {}", mesh.face_count())?;
    writeln!(out, "property list uchar uint vertex_indices\nend_header")?;
    for (i, v) in mesh.vertices().iter().enumerate() {
        match mesh.colors() {
            Some(c) => writeln!(out, "{} {} {} {} {} {}", v.x, v.y, v.z, c[i][0], c[i][1], c[i][2])?,
            None => writeln!(out, "{} {} {}", v.x, v.y, v.z)?,
        }
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

pub fn save_ply(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_ply(mesh, &mut file)
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads all groups of an OBJ stream into one triangulated mesh.
pub fn read_obj(reader: &mut impl BufRead) -> std::result::Result<TriMesh, String> {
    let opts = tobj::LoadOptions {
        triangulate: true,
        single_index: false,
        ignore_points: true,
        ignore_lines: true,
    };
    let (models, _) = tobj::load_obj_buf(reader, &opts, |_| Err(tobj::LoadError::OpenFileFailed))
        .map_err(|e| e.to_string())?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut colors: Option<Vec<[f32; 3]>> = None;
    for model in models {
        let m = model.mesh;
        let base = vertices.len() as u32;
        let count = m.positions.len() / 3;
        vertices.extend(
            m.positions
                .chunks_exact(3)
                .map(|p| Vec3::new(p[0], p[1], p[2])),
        );
        if m.vertex_color.len() == m.positions.len() {
            colors.get_or_insert_with(Vec::new).extend(
                m.vertex_color
                    .chunks_exact(3)
                    .map(|c| [c[0] as f32, c[1] as f32, c[2] as f32]),
            );
        } else if let Some(c) = colors.as_mut() {
            c.extend(std::iter::repeat_n([0.7, 0.7, 0.7], count));
        }
        triangles.extend(
            m.indices
                .chunks_exact(3)
                .map(|t| [t[0] + base, t[1] + base, t[2] + base]),
        );
    }
    if colors.as_ref().is_some_and(|c| c.len() != vertices.len()) {
        colors = None;
    }
    finish(vertices, triangles, colors)
}

pub fn read_ply(reader: &mut impl BufRead) -> std::result::Result<TriMesh, String> {
    let parser = Parser::<DefaultElement>::new();
    let ply = parser.read_ply(reader).map_err(|e| e.to_string())?;
    let verts = ply
        .payload
        .get("vertex")
        .ok_or_else(|| "no vertex element".to_string())?;
    let mut vertices = Vec::with_capacity(verts.len());
    let mut colors = Vec::with_capacity(verts.len());
    let mut has_color = true;
    for (i, v) in verts.iter().enumerate() {
        let coord = |k: &str| {
            v.get(k)
                .and_then(scalar)
                .ok_or_else(|| format!("vertex {i} lacks numeric {k}"))
        };
        vertices.push(Vec3::new(coord("x")?, coord("y")?, coord("z")?));
        match (v.get("red"), v.get("green"), v.get("blue")) {
            (Some(r), Some(g), Some(b)) => colors.push([channel(r), channel(g), channel(b)]),
            _ => has_color = false,
        }
    }
    let mut triangles = Vec::new();
    if let Some(faces) = ply.payload.get("face") {
        for (i, f) in faces.iter().enumerate() {
            let idx = f
                .get("vertex_indices")
                .or_else(|| f.get("vertex_index"))
                .and_then(index_list)
                .ok_or_else(|| format!("face {i} lacks a vertex index list"))?;
            if idx.len() < 3 {
                return Err(format!("face {i} has {} vertices", idx.len()));
            }
            for k in 1..idx.len() - 1 {
                triangles.push([idx[0], idx[k], idx[k + 1]]);
            }
        }
    }
    finish(vertices, triangles, has_color.then_some(colors))
}

fn finish(
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    colors: Option<Vec<[f32; 3]>>,
) -> std::result::Result<TriMesh, String> {
    if triangles.is_empty() {
        return Err("mesh has no faces".into());
    }
    TriMesh::with_colors(vertices, triangles, colors).map_err(|e| e.to_string())
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

fn channel(p: &Property) -> f32 {
    match *p {
        Property::UChar(v) => v as f32 / 255.0,
        Property::Float(v) => v,
        Property::Double(v) => v as f32,
        _ => scalar(p).map(|v| v as f32 / 255.0).unwrap_or(0.7),
    }
}

fn index_list(p: &Property) -> Option<Vec<u32>> {
    fn conv<T: Copy + TryInto<u32>>(v: &[T]) -> Option<Vec<u32>> {
        v.iter().map(|&x| x.try_into().ok()).collect()
    }
    match p {
        Property::ListChar(v) => conv(v),
        Property::ListUChar(v) => conv(v),
        Property::ListShort(v) => conv(v),
        Property::ListUShort(v) => conv(v),
        Property::ListInt(v) => conv(v),
        Property::ListUInt(v) => conv(v),
        _ => None,
    }
}

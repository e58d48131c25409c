//! STL / OBJ readers and STL / OBJ / PLY writers.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::mesh::{MeshError, TriangleMesh};
use super::scalar::Real;
use super::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    StlBinary,
    StlAscii,
    Obj,
}

impl MeshFormat {
    /// Guesses the format from the extension and, for STL, the leading bytes.
    pub fn detect(path: &Path, bytes: &[u8]) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "stl" => {
                let head = &bytes[..bytes.len().min(1024)];
                let ascii = head.starts_with(b"solid")
                    && std::str::from_utf8(head).is_ok_and(|s| s.contains("facet"));
                Some(if ascii { Self::StlAscii } else { Self::StlBinary })
            }
            _ => None,
        }
    }
}

/// A freshly loaded mesh plus the number of degenerate faces discarded.
#[derive(Debug, Clone)]
pub struct LoadedMesh<T> {
    pub mesh: TriangleMesh<T>,
    pub dropped_faces: usize,
}

pub fn load_mesh<T: Real>(path: &Path, format: MeshFormat) -> Result<LoadedMesh<T>, MeshError> {
    let bytes = read_file(path)?;
    parse_mesh(&bytes, format)
}

/// Loads a mesh, inferring the format via [`MeshFormat::detect`].
pub fn load_mesh_auto<T: Real>(path: &Path) -> Result<LoadedMesh<T>, MeshError> {
    let bytes = read_file(path)?;
    let format = MeshFormat::detect(path, &bytes).ok_or_else(|| MeshError::Parse {
        offset: 0,
        message: format!("unrecognized mesh extension for {}", path.display()),
    })?;
    parse_mesh(&bytes, format)
}

fn read_file(path: &Path) -> Result<Vec<u8>, MeshError> {
    fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => MeshError::FileNotFound(path.display().to_string()),
        _ => MeshError::Io(e),
    })
}

pub fn parse_mesh<T: Real>(bytes: &[u8], format: MeshFormat) -> Result<LoadedMesh<T>, MeshError> {
    let faces = match format {
        MeshFormat::StlBinary => parse_stl_binary(bytes)?,
        MeshFormat::StlAscii => parse_stl_ascii(bytes)?,
        MeshFormat::Obj => parse_obj(bytes)?,
    };
    let (mesh, dropped_faces) = TriangleMesh::from_vertex_triples(faces)?;
    Ok(LoadedMesh {
        mesh,
        dropped_faces,
    })
}

fn parse_error(offset: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        offset,
        message: message.into(),
    }
}

fn parse_stl_binary<T: Real>(bytes: &[u8]) -> Result<Vec<[Vec3<T>; 3]>, MeshError> {
    if bytes.len() < 84 {
        return Err(parse_error(bytes.len(), "truncated binary STL header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let needed = 84 + count * 50;
    if bytes.len() < needed {
        let complete = (bytes.len() - 84) / 50;
        return Err(parse_error(
            84 + complete * 50,
            format!("binary STL declares {count} facets but holds {complete}"),
        ));
    }
    let read_f32 = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let mut faces = Vec::with_capacity(count);
    for i in 0..count {
        let rec = 84 + i * 50;
        let mut tri = [Vec3::zero(); 3];
        for (k, v) in tri.iter_mut().enumerate() {
            let at = rec + 12 + k * 12;
            let (x, y, z) = (read_f32(at), read_f32(at + 4), read_f32(at + 8));
            if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                return Err(parse_error(at, "non-finite vertex coordinate"));
            }
            *v = Vec3::new(T::lit(x as f64), T::lit(y as f64), T::lit(z as f64));
        }
        faces.push(tri);
    }
    Ok(faces)
}

/// Whitespace tokenizer that remembers byte offsets.
struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.text[self.pos..];
        let skip = rest.len() - rest.trim_start().len();
        let start = self.pos + skip;
        let rest = &self.text[start..];
        if rest.is_empty() {
            self.pos = start;
            return None;
        }
        let len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        self.pos = start + len;
        Some((start, &rest[..len]))
    }

    fn expect(&mut self, word: &str) -> Result<usize, MeshError> {
        match self.next() {
            Some((at, w)) if w.eq_ignore_ascii_case(word) => Ok(at),
            Some((at, w)) => Err(parse_error(at, format!("expected `{word}`, found `{w}`"))),
            None => Err(parse_error(self.pos, format!("expected `{word}`, found end of file"))),
        }
    }

    fn number<T: Real>(&mut self) -> Result<T, MeshError> {
        match self.next() {
            Some((at, w)) => w
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| parse_error(at, format!("invalid number `{w}`"))),
            None => Err(parse_error(self.pos, "expected number, found end of file")),
        }
    }

    fn skip_line(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.find('\n').map_or(rest.len(), |i| i + 1);
    }
}

fn parse_stl_ascii<T: Real>(bytes: &[u8]) -> Result<Vec<[Vec3<T>; 3]>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_error(e.valid_up_to(), "invalid UTF-8"))?;
    let mut tok = Tokens::new(text);
    tok.expect("solid")?;
    // the solid name is free text up to the end of the line
    tok.skip_line();
    let mut faces = Vec::new();
    loop {
        match tok.next() {
            Some((_, w)) if w.eq_ignore_ascii_case("facet") => {
                tok.expect("normal")?;
                for _ in 0..3 {
                    tok.number::<T>()?;
                }
                tok.expect("outer")?;
                tok.expect("loop")?;
                let mut tri = [Vec3::zero(); 3];
                for v in tri.iter_mut() {
                    tok.expect("vertex")?;
                    *v = Vec3::new(tok.number()?, tok.number()?, tok.number()?);
                }
                tok.expect("endloop")?;
                tok.expect("endfacet")?;
                faces.push(tri);
            }
            Some((_, w)) if w.eq_ignore_ascii_case("endsolid") => break,
            Some((at, w)) => return Err(parse_error(at, format!("unexpected token `{w}`"))),
            None => return Err(parse_error(text.len(), "missing `endsolid`")),
        }
    }
    Ok(faces)
}

fn parse_obj<T: Real>(bytes: &[u8]) -> Result<Vec<[Vec3<T>; 3]>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_error(e.valid_up_to(), "invalid UTF-8"))?;
    let mut verts: Vec<Vec3<T>> = Vec::new();
    let mut faces = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let content = line.split('#').next().unwrap_or("");
        let mut tok = Tokens::new(content);
        let Some((_, kind)) = tok.next() else {
            continue;
        };
        match kind {
            "v" => {
                let mut c = [T::zero(); 3];
                for v in c.iter_mut() {
                    *v = tok
                        .number()
                        .map_err(|_| parse_error(line_start, "malformed vertex record"))?;
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                while let Some((at, w)) = tok.next() {
                    let head = w.split('/').next().unwrap_or("");
                    let raw: i64 = head
                        .parse()
                        .map_err(|_| parse_error(line_start + at, format!("invalid face index `{w}`")))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        verts.len() as i64 + raw
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= verts.len() {
                        return Err(parse_error(
                            line_start + at,
                            format!("face index {raw} out of range (have {} vertices)", verts.len()),
                        ));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(parse_error(line_start, "face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([verts[idx[0]], verts[idx[k]], verts[idx[k + 1]]]);
                }
            }
            // normals, texture coordinates, groups and materials are ignored
            _ => {}
        }
    }
    Ok(faces)
}

pub fn write_stl_ascii<T: Real, W: Write>(mesh: &TriangleMesh<T>, mut w: W) -> io::Result<()> {
    writeln!(w, "solid mesh")?;
    for t in mesh.triangles() {
        let n = t.normal;
        writeln!(w, "  facet normal {} {} {}", n.x, n.y, n.z)?;
        writeln!(w, "    outer loop")?;
        for v in &t.vertices {
            writeln!(w, "      vertex {} {} {}", v.x, v.y, v.z)?;
        }
        writeln!(w, "    endloop")?;
        writeln!(w, "  endfacet")?;
    }
    writeln!(w, "endsolid mesh")
}

pub fn write_stl_binary<T: Real, W: Write>(mesh: &TriangleMesh<T>, mut w: W) -> io::Result<()> {
    let mut header = [0u8; 80];
    header[..11].copy_from_slice(b"binary mesh");
    w.write_all(&header)?;
    w.write_all(&(mesh.len() as u32).to_le_bytes())?;
    for t in mesh.triangles() {
        for v in std::iter::once(&t.normal).chain(t.vertices.iter()) {
            for c in [v.x, v.y, v.z] {
                w.write_all(&(c.to_f64_lossy() as f32).to_le_bytes())?;
            }
        }
        w.write_all(&[0, 0])?;
    }
    Ok(())
}

/// Writes an OBJ with one vertex record per face corner (no welding).
pub fn write_obj<T: Real, W: Write>(mesh: &TriangleMesh<T>, mut w: W) -> io::Result<()> {
    for t in mesh.triangles() {
        for v in &t.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
    }
    for i in 0..mesh.len() {
        writeln!(w, "f {} {} {}", 3 * i + 1, 3 * i + 2, 3 * i + 3)?;
    }
    Ok(())
}

/// ASCII PLY dump of the mesh for debugging.
pub fn write_ply<T: Real, W: Write>(mesh: &TriangleMesh<T>, mut w: W) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", 3 * mesh.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "element face {}", mesh.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for t in mesh.triangles() {
        for v in &t.vertices {
            writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
        }
    }
    for i in 0..mesh.len() {
        writeln!(w, "3 {} {} {}", 3 * i, 3 * i + 1, 3 * i + 2)?;
    }
    Ok(())
}

pub fn save_mesh<T: Real>(mesh: &TriangleMesh<T>, path: &Path, format: MeshFormat) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    match format {
        MeshFormat::StlAscii => write_stl_ascii(mesh, &mut f)?,
        MeshFormat::StlBinary => write_stl_binary(mesh, &mut f)?,
        MeshFormat::Obj => write_obj(mesh, &mut f)?,
    }
    f.flush()
}

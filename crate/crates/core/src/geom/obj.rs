//! Wavefront OBJ subset: `v x y z` vertex lines and `f i j k` face lines
//! (1-based indices, polygons fan-triangulated, `vt`/`vn`/materials ignored).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::scalar::Real;

use super::{GeomError, TriMesh, Vec3};

pub fn read_obj<R: Real>(reader: impl Read) -> Result<TriMesh<R>, GeomError> {
    let reader = BufReader::new(reader);
    let mut vertices: Vec<Vec3<R>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [R::zero(); 3];
                for c in coords.iter_mut() {
                    let tok = tokens.next().ok_or_else(|| GeomError::ObjParse {
                        line: lineno,
                        message: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = R::parse_decimal(tok).ok_or_else(|| GeomError::ObjParse {
                        line: lineno,
                        message: format!("bad coordinate `{tok}`"),
                    })?;
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for tok in tokens {
                    // `i`, `i/j`, `i/j/k`, `i//k`: only the vertex index is used
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| GeomError::ObjParse {
                        line: lineno,
                        message: format!("bad face index `{tok}`"),
                    })?;
                    if idx < 1 || idx as usize > vertices.len() {
                        return Err(GeomError::ObjParse {
                            line: lineno,
                            message: format!("face index {idx} out of range"),
                        });
                    }
                    indices.push(idx as usize - 1);
                }
                if indices.len() < 3 {
                    return Err(GeomError::ObjParse {
                        line: lineno,
                        message: "face needs at least 3 vertices".into(),
                    });
                }
                for k in 1..indices.len() - 1 {
                    faces.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            // comments, normals, texcoords, groups, materials: ignored
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn read_obj_file<R: Real>(path: impl AsRef<Path>) -> Result<TriMesh<R>, GeomError> {
    let file = std::fs::File::open(path)?;
    read_obj(file)
}

pub fn write_obj<R: Real>(mesh: &TriMesh<R>, mut writer: impl Write) -> Result<(), GeomError> {
    for v in mesh.vertices() {
        writeln!(writer, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(writer, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn write_obj_file<R: Real>(mesh: &TriMesh<R>, path: impl AsRef<Path>) -> Result<(), GeomError> {
    let file = std::fs::File::create(path)?;
    write_obj(mesh, std::io::BufWriter::new(file))
}

//! Plain-text native mesh format.
//!
//! ```text
//! nv nt nb
//! x_1 y_1 ... x_nv y_nv
//! i1 j1 k1 ...        (nt triples, 1-based)
//! a1 b1 L1 ...        (nb boundary edges, L in {D, N, F})
//! ```
//!
//! Tokens may be separated by any whitespace. Coordinates are written with
//! shortest round-trip formatting, so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BoundaryLabel, Mesh};
use crate::error::{Error, Result};
use crate::Vec2;

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.boundary().len()
    );
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {}", v.x, v.y);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    for b in mesh.boundary() {
        let _ = writeln!(s, "{} {} {}", b.vertices[0] + 1, b.vertices[1] + 1, b.label);
    }
    s
}

pub fn write_mesh_file(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

struct Tokens<'a> {
    inner: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.inner.next().ok_or_else(|| Error::MeshFormat {
            token: String::new(),
            reason: format!("unexpected end of input while reading {what}"),
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.next(what)?;
        tok.parse().map_err(|_| Error::MeshFormat {
            token: tok.to_string(),
            reason: format!("expected {what}"),
        })
    }

    fn index(&mut self, nv: usize) -> Result<usize> {
        let tok = self.next("vertex index")?;
        let i: usize = tok.parse().map_err(|_| Error::MeshFormat {
            token: tok.to_string(),
            reason: "expected a 1-based vertex index".into(),
        })?;
        if i == 0 || i > nv {
            return Err(Error::MeshFormat {
                token: tok.to_string(),
                reason: format!("vertex index out of range 1..={nv}"),
            });
        }
        Ok(i - 1)
    }
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut tok = Tokens {
        inner: text.split_whitespace(),
    };
    let nv: usize = tok.parse("vertex count")?;
    let nt: usize = tok.parse("triangle count")?;
    let nb: usize = tok.parse("boundary edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x: f64 = tok.parse("x coordinate")?;
        let y: f64 = tok.parse("y coordinate")?;
        vertices.push(Vec2::new(x, y));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push([tok.index(nv)?, tok.index(nv)?, tok.index(nv)?]);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let pair = [tok.index(nv)?, tok.index(nv)?];
        let code = tok.next("boundary label")?;
        let label = BoundaryLabel::from_code(code).ok_or_else(|| Error::MeshFormat {
            token: code.to_string(),
            reason: "boundary label must be D, N or F".into(),
        })?;
        boundary.push((pair, label));
    }
    if let Some(extra) = tok.inner.next() {
        return Err(Error::MeshFormat {
            token: extra.to_string(),
            reason: "trailing data after the declared counts".into(),
        });
    }
    Mesh::new(vertices, triangles, boundary)
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_mesh(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_holed_cantilever, GeometryConfig};

    const TRIANGLE: &str = "3 1 3\n0 0\n1 0\n0 1\n1 2 3\n1 2 D\n2 3 F\n3 1 N\n";

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = build_holed_cantilever(&GeometryConfig::six_holes(0.6)).unwrap();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary(), m.boundary());
        assert_eq!(write_mesh(&back), write_mesh(&m));
    }

    #[test]
    fn parses_minimal_file() {
        let m = read_mesh(TRIANGLE).unwrap();
        assert_eq!(m.num_triangles(), 1);
        assert!(m.has_label(BoundaryLabel::Neumann));
    }

    #[test]
    fn rejects_out_of_range_index() {
        let bad = TRIANGLE.replace("1 2 3\n1 2 D", "1 2 4\n1 2 D");
        assert!(matches!(read_mesh(&bad), Err(Error::MeshFormat { .. })));
    }

    #[test]
    fn rejects_unlabeled_boundary_edge() {
        let bad = "3 1 2\n0 0\n1 0\n0 1\n1 2 3\n1 2 D\n2 3 F\n";
        assert!(matches!(read_mesh(bad), Err(Error::Mesh(_))));
    }

    #[test]
    fn rejects_unknown_label_and_bad_counts() {
        let bad = TRIANGLE.replace("3 1 N", "3 1 X");
        assert!(matches!(read_mesh(&bad), Err(Error::MeshFormat { .. })));
        assert!(read_mesh("3 1").is_err());
        assert!(read_mesh("two 1 3").is_err());
    }
}

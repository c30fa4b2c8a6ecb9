//! Legacy ASCII VTK (v2.0) unstructured-grid writer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, Copy)]
pub enum VtkFieldData<'a> {
    PointScalars(&'a [f64]),
    PointVectors(&'a [Vec2]),
    CellScalars(&'a [f64]),
    CellVectors(&'a [Vec2]),
}

#[derive(Debug, Clone, Copy)]
pub struct VtkField<'a> {
    pub name: &'a str,
    pub data: VtkFieldData<'a>,
}

impl<'a> VtkField<'a> {
    pub fn new(name: &'a str, data: VtkFieldData<'a>) -> Self {
        VtkField { name, data }
    }

    fn is_point(&self) -> bool {
        matches!(self.data, VtkFieldData::PointScalars(_) | VtkFieldData::PointVectors(_))
    }

    fn len(&self) -> usize {
        match self.data {
            VtkFieldData::PointScalars(v) | VtkFieldData::CellScalars(v) => v.len(),
            VtkFieldData::PointVectors(v) | VtkFieldData::CellVectors(v) => v.len(),
        }
    }
}

fn write_field(s: &mut String, field: &VtkField<'_>) {
    let name = field.name.replace(char::is_whitespace, "_");
    match field.data {
        VtkFieldData::PointScalars(v) | VtkFieldData::CellScalars(v) => {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v {
                let _ = writeln!(s, "{x:e}");
            }
        }
        VtkFieldData::PointVectors(v) | VtkFieldData::CellVectors(v) => {
            let _ = writeln!(s, "VECTORS {name} double");
            for x in v {
                let _ = writeln!(s, "{:e} {:e} 0", x.x, x.y);
            }
        }
    }
}

/// Renders the mesh and fields; nodal fields go to `POINT_DATA`, per-element
/// fields to `CELL_DATA`.
pub fn write_vtk(mesh: &Mesh, title: &str, fields: &[VtkField<'_>]) -> Result<String> {
    for f in fields {
        let expected = if f.is_point() {
            mesh.num_vertices()
        } else {
            mesh.num_triangles()
        };
        if f.len() != expected {
            return Err(Error::FieldLength {
                name: f.name.to_string(),
                expected,
                got: f.len(),
            });
        }
    }

    let mut s = String::new();
    let title = title.lines().next().unwrap_or("");
    let _ = writeln!(
        s,
        "# vtk DataFile Version 2.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} 0", v.x, v.y);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }

    let (point, cell): (Vec<_>, Vec<_>) = fields.iter().partition(|f| f.is_point());
    if !point.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
        point.iter().for_each(|f| write_field(&mut s, f));
    }
    if !cell.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        cell.iter().for_each(|f| write_field(&mut s, f));
    }
    Ok(s)
}

pub fn write_vtk_file(mesh: &Mesh, title: &str, fields: &[VtkField<'_>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = write_vtk(mesh, title, fields)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_bulky_cantilever, GeometryConfig};

    #[test]
    fn geometry_only_and_sections() {
        let m = build_bulky_cantilever(&GeometryConfig {
            h: 1.0,
            ..Default::default()
        })
        .unwrap();
        let plain = write_vtk(&m, "mesh", &[]).unwrap();
        assert!(plain.starts_with("# vtk DataFile Version 2.0"));
        assert!(!plain.contains("POINT_DATA") && !plain.contains("CELL_DATA"));

        let density = vec![1.0; m.num_triangles()];
        let disp = vec![Vec2::new(1.0, -1.0); m.num_vertices()];
        let text = write_vtk(
            &m,
            "fields",
            &[
                VtkField::new("energy", VtkFieldData::CellScalars(&density)),
                VtkField::new("u", VtkFieldData::PointVectors(&disp)),
            ],
        )
        .unwrap();
        assert!(text.find("POINT_DATA").unwrap() < text.find("CELL_DATA").unwrap());
    }

    #[test]
    fn length_mismatch_rejected() {
        let m = build_bulky_cantilever(&GeometryConfig {
            h: 1.0,
            ..Default::default()
        })
        .unwrap();
        let short = vec![0.0; 3];
        let err = write_vtk(&m, "x", &[VtkField::new("s", VtkFieldData::PointScalars(&short))]);
        assert!(matches!(err, Err(Error::FieldLength { .. })));
    }
}

//! OFF import and legacy ASCII VTK export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Point, SurfaceMesh};
use crate::error::{Error, Result};

/// Read a triangle-only ASCII OFF file as a linear mesh.
pub fn import_off(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let text = fs::read_to_string(path)?;
    parse_off(&text)
}

pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    // (line number, tokens) with comments and blank lines stripped
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l))
    });
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(parse_err(line, format!("expected `OFF` header, found `{header}`")));
    }
    let rest: Vec<&str> = header_tokens.collect();
    let (line, counts) = if rest.is_empty() {
        lines
            .next()
            .map(|(l, s)| (l, s.split_whitespace().collect::<Vec<_>>()))
            .ok_or_else(|| parse_err(line + 1, "missing element counts".into()))?
    } else {
        (line, rest)
    };
    let count = |i: usize| -> Result<usize> {
        counts
            .get(i)
            .ok_or_else(|| parse_err(line, "expected `nv nf ne` counts".into()))?
            .parse()
            .map_err(|e| parse_err(line, format!("bad count: {e}")))
    };
    let (nv, nf) = (count(0)?, count(1)?);

    let mut nodes = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, s) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nv} vertices")))?;
        let c: Vec<f64> = s
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad coordinate: {e}")))?;
        if c.len() < 3 {
            return Err(parse_err(line, "vertex needs three coordinates".into()));
        }
        nodes.push(Point::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, s) = lines
            .next()
            .ok_or_else(|| parse_err(line, format!("expected {nf} faces")))?;
        let ids: Vec<usize> = s
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad face index: {e}")))?;
        if ids.first() != Some(&3) || ids.len() < 4 {
            return Err(parse_err(line, "only triangular faces are supported".into()));
        }
        if ids[1..4].iter().any(|&i| i >= nv) {
            return Err(parse_err(line, format!("face index out of range (nv = {nv})")));
        }
        faces.push(ids[1..4].to_vec());
    }
    SurfaceMesh::new(1, nodes, faces)
}

/// A named per-node field for VTK output.
#[derive(Debug, Clone)]
pub enum NodalField<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [Point]),
}

/// Legacy ASCII VTK unstructured grid. Degree 2 meshes use quadratic triangles (cell type 22),
/// degree 1 meshes linear triangles (type 5); higher degrees write their corner triangles.
pub fn export_vtk(
    mesh: &SurfaceMesh,
    fields: &[NodalField<'_>],
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, vtk_string(mesh, fields)?)?;
    Ok(())
}

pub(crate) fn vtk_string(mesh: &SurfaceMesh, fields: &[NodalField<'_>]) -> Result<String> {
    let n = mesh.num_nodes();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("surfflow surface\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    let (cell_type, per_cell) = match mesh.degree() {
        1 => (5, 3),
        2 => (22, 6),
        _ => (5, 3),
    };
    let ne = mesh.num_elements();
    let _ = writeln!(s, "CELLS {ne} {}", ne * (per_cell + 1));
    for el in mesh.topology().elements() {
        let _ = write!(s, "{per_cell}");
        for i in &el[..per_cell] {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{cell_type}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
    }
    for field in fields {
        match field {
            NodalField::Scalar(name, values) => {
                check_len(values.len(), n)?;
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in values.iter() {
                    let _ = writeln!(s, "{v:.16e}");
                }
            }
            NodalField::Vector(name, values) => {
                check_len(values.len(), n)?;
                let _ = writeln!(s, "VECTORS {name} double");
                for v in values.iter() {
                    let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
                }
            }
        }
    }
    Ok(s)
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Read back the `POINTS` block of a legacy ASCII VTK file.
pub fn read_vtk_points(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (line, n) = loop {
        let (i, l) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: "no POINTS section".into(),
        })?;
        if let Some(rest) = l.strip_prefix("POINTS ") {
            let n = rest
                .split_whitespace()
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: "bad POINTS count".into(),
                })?;
            break (i + 1, n);
        }
    };
    let mut values = Vec::with_capacity(3 * n);
    for (i, l) in lines {
        if values.len() >= 3 * n {
            break;
        }
        for t in l.split_whitespace() {
            values.push(t.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("bad coordinate: {e}"),
            })?);
        }
    }
    if values.len() < 3 * n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} points"),
        });
    }
    Ok(values[..3 * n]
        .chunks_exact(3)
        .map(|c| Point::new(c[0], c[1], c[2]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builtin_sphere;

    const TETRA: &str = "OFF
# regular tetrahedron
4 4 6
1 1 1
1 -1 -1
-1 1 -1
-1 -1 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
";

    #[test]
    fn tetrahedron_from_off() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_elements(), 4);
    }

    #[test]
    fn off_parse_error_reports_line() {
        let bad = TETRA.replace("-1 1 -1", "-1 x -1");
        match parse_off(&bad).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn off_non_manifold_edge_rejected() {
        let open = TETRA.replace("4 4 6", "4 3 6").replace("3 1 3 2\n", "");
        assert!(matches!(
            parse_off(&open).unwrap_err(),
            Error::NonManifoldEdge { .. }
        ));
    }

    #[test]
    fn off_quad_face_rejected() {
        let quad = TETRA.replace("3 1 3 2", "4 1 3 2 0");
        assert!(matches!(parse_off(&quad).unwrap_err(), Error::Parse { line: 11, .. }));
    }

    #[test]
    fn vtk_header_and_cells() {
        let m = builtin_sphere(1.0, 0, 2).unwrap();
        let h: Vec<f64> = vec![2.0; m.num_nodes()];
        let s = vtk_string(&m, &[NodalField::Scalar("H", &h)]).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(s.contains("POINTS 42 double"));
        assert!(s.contains("CELLS 20 140"));
        assert_eq!(s.lines().filter(|l| *l == "22").count(), 20);
        assert_eq!(s.matches("SCALARS").count(), 1);
    }

    #[test]
    fn vtk_field_length_checked() {
        let m = builtin_sphere(1.0, 0, 1).unwrap();
        let short = [1.0, 2.0];
        assert!(vtk_string(&m, &[NodalField::Scalar("bad", &short)]).is_err());
    }
}

use std::fmt::Write;

use crate::mesh::TriMesh;

/// Legacy ASCII VTK (v3.0) unstructured grid with triangle cells, a
/// `region` cell tag and the given point fields.
pub fn vtk_legacy(mesh: &TriMesh, title: &str, point_data: &[(&str, &[f64])]) -> Vec<u8> {
    let mut s = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.node_count()).unwrap();
    for p in &mesh.nodes {
        writeln!(s, "{} {} 0", p[0], p[1]).unwrap();
    }
    let nt = mesh.triangle_count();
    writeln!(s, "CELLS {} {}", nt, 4 * nt).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    writeln!(s, "CELL_DATA {nt}\nSCALARS region int 1\nLOOKUP_TABLE default").unwrap();
    for r in &mesh.regions {
        writeln!(s, "{}", r.tag()).unwrap();
    }
    if !point_data.is_empty() {
        writeln!(s, "POINT_DATA {}", mesh.node_count()).unwrap();
        for (name, values) in point_data {
            assert_eq!(values.len(), mesh.node_count(), "point field `{name}` has the wrong length");
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for v in *values {
                writeln!(s, "{v}").unwrap();
            }
        }
    }
    s.into_bytes()
}

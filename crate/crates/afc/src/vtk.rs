//! Legacy ASCII VTK output of nodal fields on the triangulation.

use std::io::{self, Write};

use afc_core::Mesh;

/// VTK cell type id of a linear triangle.
const VTK_TRIANGLE: u8 = 5;

/// Writes `mesh` as an unstructured grid with the point field `u`.
pub fn write_vtk<W: Write>(mesh: &Mesh, u: &[f64], mut out: W) -> io::Result<()> {
    let n = mesh.num_nodes();
    if u.len() != n {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("field has {} entries, mesh has {n} nodes", u.len()),
        ));
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "afc solution, level {}", mesh.level)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for p in &mesh.vertices {
        writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1])?;
    }
    let cells = mesh.cells.len();
    writeln!(out, "CELLS {cells} {}", 4 * cells)?;
    for c in &mesh.cells {
        writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(out, "CELL_TYPES {cells}")?;
    for _ in 0..cells {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    writeln!(out, "SCALARS u double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in u {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()
}

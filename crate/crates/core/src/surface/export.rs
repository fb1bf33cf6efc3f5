use std::io::Write;

use super::SurfaceGrid;
use crate::error::{PsError, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct ObjOptions {
    /// Omit quads with a degenerate corner (vertices are always written).
    pub drop_degenerate_faces: bool,
}

/// ASCII OBJ: `v`, `vn`, then quads `f a//a b//b c//c d//d` over the lattice.
pub fn write_obj<W: Write>(s: &SurfaceGrid, opts: ObjOptions, mut w: W) -> Result<()> {
    let g = &s.grid;
    writeln!(w, "# pseudospherical surface, lambda = {}, {} x {} nodes", s.lambda, g.nx, g.ny)?;
    for p in &s.points {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for n in &s.normals {
        writeln!(w, "vn {} {} {}", n.x, n.y, n.z)?;
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let quad = [g.idx(i, j), g.idx(i + 1, j), g.idx(i + 1, j + 1), g.idx(i, j + 1)];
            if opts.drop_degenerate_faces && quad.iter().any(|&k| s.degenerate[k]) {
                continue;
            }
            let [a, b, c, d] = quad.map(|k| k + 1);
            writeln!(w, "f {a}//{a} {b}//{b} {c}//{c} {d}//{d}")?;
        }
    }
    Ok(())
}

/// CSV with header `x,y,fx,fy,fz,phi,degenerate`.
pub fn write_csv<W: Write>(s: &SurfaceGrid, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| PsError::Io(std::io::Error::other(e));
    out.write_record(["x", "y", "fx", "fy", "fz", "phi", "degenerate"]).map_err(io)?;
    for k in 0..s.grid.len() {
        let (i, j) = s.grid.ij(k);
        let p = s.points[k];
        out.write_record([
            s.grid.x(i).to_string(),
            s.grid.y(j).to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            s.phi[k].to_string(),
            s.degenerate[k].to_string(),
        ])
        .map_err(io)?;
    }
    out.flush()?;
    Ok(())
}

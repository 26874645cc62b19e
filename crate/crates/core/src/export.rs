//! Writers for surfaces (PLY), tables (CSV) and reports (JSON).
//!
//! Floats are printed with Rust's shortest round-trip formatting, so output
//! is byte-for-byte reproducible.

use std::io::Write;

use serde::Serialize;

use crate::constraints::AdmissibleInterval;
use crate::dimension::DimensionReport;
use crate::energy::{EnergySequence, InteriorField};
use crate::geometry::SGFunction;
use crate::Result;

/// ASCII PLY of the graph of `f` over its level-`M` cells, `z = value · z_scale`.
pub fn write_ply<W: Write>(mut w: W, f: &SGFunction, z_scale: f64) -> Result<()> {
    let graph = f.graph();
    let cells = graph.cells(graph.level());
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment gasketlab level {}", graph.level())?;
    writeln!(w, "element vertex {}", graph.num_vertices())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    writeln!(w, "element face {}", cells.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (p, v) in graph.points().iter().zip(f.values()) {
        writeln!(w, "{} {} {}", p.x, p.y, v * z_scale)?;
    }
    for c in cells {
        writeln!(w, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    Ok(())
}

/// `id,x,y,value,level` where `level` is the level at which the vertex appears.
pub fn write_vertices_csv<W: Write>(w: W, f: &SGFunction) -> Result<()> {
    let graph = f.graph();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "x", "y", "value", "level"])?;
    for (id, (p, v)) in graph.points().iter().zip(f.values()).enumerate() {
        out.write_record([
            id.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            v.to_string(),
            graph.birth_level(id).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `m,E_m,envelope`; the envelope column is empty without Hölder data.
pub fn write_energy_csv<W: Write>(w: W, seq: &EnergySequence) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["m", "E_m", "envelope"])?;
    for (m, e) in seq.values.iter().enumerate() {
        let env = seq
            .envelope
            .as_ref()
            .map(|env| env[m].to_string())
            .unwrap_or_default();
        out.write_record([m.to_string(), e.to_string(), env])?;
    }
    out.flush()?;
    Ok(())
}

/// `id,x,y,value` for interior vertices.
pub fn write_laplacian_csv<W: Write>(w: W, field: &InteriorField) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "x", "y", "value"])?;
    for (id, v) in field.iter() {
        let p = field.graph().point(id);
        out.write_record([
            id.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            v.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `word,lo,hi,feasible`.
pub fn write_intervals_csv<W: Write>(w: W, intervals: &[AdmissibleInterval]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["word", "lo", "hi", "feasible"])?;
    for iv in intervals {
        out.write_record([
            iv.word.to_string(),
            iv.lo.to_string(),
            iv.hi.to_string(),
            iv.feasible.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `n,N_delta,lower_env,upper_env`.
pub fn write_dimension_csv<W: Write>(w: W, report: &DimensionReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "N_delta", "lower_env", "upper_env"])?;
    for r in &report.rows {
        out.write_record([
            r.n.to_string(),
            r.count.to_string(),
            r.lower_env.to_string(),
            r.upper_env.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty JSON with object keys in sorted order.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

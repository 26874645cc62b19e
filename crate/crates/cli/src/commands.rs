use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use gasketlab::approx::{basis_functions, best_chebyshev, best_one_sided_below};
use gasketlab::constraints::{admissible_intervals, compute_extrema, ConstraintError};
use gasketlab::dimension::estimate_dimension;
use gasketlab::energy::{
    graph_energy, graph_laplacian, harmonic_extend, harmonic_on, pointwise_laplacian,
    EnergySequence, LowerHolder,
};
use gasketlab::export;
use gasketlab::expr::{parse, Expression};
use gasketlab::fractal::{
    construct_sampled, error_bound, round_up_level, BaseChoice, FractalSystem, ScalingFamily,
};
use gasketlab::geometry::{cell_count, edge_count, vertex_count};
use gasketlab::{build_level_graph, sample, Point2, Quadrature, SGFunction};
use serde_json::{json, Value};

use crate::args::*;
use crate::reproduce::{reproduce, ReproduceOptions};
use crate::{CliError, CliResult};

pub fn dispatch(cmd: &Command, out: &mut dyn Write) -> CliResult<()> {
    let summary = match cmd {
        Command::Mesh(a) => mesh(a)?,
        Command::Harmonic(a) => harmonic(a)?,
        Command::Energy(a) => energy(a)?,
        Command::Laplacian(a) => laplacian(a)?,
        Command::Fractal(a) => fractal(a)?,
        Command::Constrain(a) => constrain(a)?,
        Command::Approx(a) => approx(a)?,
        Command::Dimension(a) => dimension(a)?,
        Command::Reproduce(a) => {
            let opts = ReproduceOptions {
                out_dir: a.out_dir.clone(),
                seed: a.seed,
                level: a.level,
            };
            serde_json::to_value(reproduce(&opts)?)?
        }
    };
    writeln!(out, "{}", export::to_json(&summary)?)?;
    Ok(())
}

fn expression(src: &str) -> CliResult<Expression> {
    Ok(parse(src)?)
}

pub(crate) fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(path)
        .map_err(|e| CliError::domain("io", format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn write_surface(path: &Path, f: &SGFunction, z_scale: f64) -> CliResult<()> {
    match extension(path).as_str() {
        "ply" => export::write_ply(create(path)?, f, z_scale)?,
        "csv" => export::write_vertices_csv(create(path)?, f)?,
        other => {
            return Err(CliError::usage(
                "unsupported_format",
                format!("cannot write {:?} files, use .ply or .csv", other),
            ))
        }
    }
    Ok(())
}

fn mesh(a: &MeshArgs) -> CliResult<Value> {
    let graph = build_level_graph(a.level)?;
    if let Some(path) = &a.out {
        write_surface(path, &SGFunction::constant(graph.clone(), 0.0), 1.0)?;
    }
    Ok(json!({
        "level": a.level,
        "vertices": vertex_count(a.level),
        "edges": edge_count(a.level),
        "cells": cell_count(a.level),
    }))
}

fn harmonic(a: &HarmonicArgs) -> CliResult<Value> {
    let [p1, p2, p3] = a.boundary[..] else {
        return Err(CliError::usage(
            "usage",
            "--boundary takes exactly three values",
        ));
    };
    let boundary = [p1, p2, p3];
    let h = harmonic_extend(boundary, a.level)?;
    if let Some(path) = &a.out {
        write_surface(path, &h, a.z_scale)?;
    }
    let energies = (0..=a.level)
        .map(|m| graph_energy(&h, m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({
        "level": a.level,
        "boundary": boundary,
        "energies": energies,
        "min": h.min(),
        "max": h.max(),
    }))
}

fn sampled(src: &str, level: usize) -> CliResult<SGFunction> {
    let e = expression(src)?;
    let graph = build_level_graph(level)?;
    Ok(sample(&e, &graph)?)
}

fn energy(a: &EnergyArgs) -> CliResult<Value> {
    let f = sampled(&a.f_expr, a.level)?;
    let holder = a
        .holder_k
        .zip(a.holder_sigma)
        .map(|(k, sigma)| LowerHolder { k, sigma });
    let seq = EnergySequence::from_function(&f, holder)?;
    if let Some(path) = &a.out {
        export::write_energy_csv(create(path)?, &seq)?;
    }
    Ok(serde_json::to_value(&seq)?)
}

fn laplacian(a: &LaplacianArgs) -> CliResult<Value> {
    let f = sampled(&a.f_expr, a.level)?;
    let field = if a.pointwise {
        pointwise_laplacian(&f, a.level)?
    } else {
        graph_laplacian(&f, a.level)?
    };
    if let Some(path) = &a.out {
        export::write_laplacian_csv(create(path)?, &field)?;
    }
    Ok(json!({
        "level": a.level,
        "pointwise": a.pointwise,
        "interior_vertices": field.values().len(),
        "sup_norm": field.sup_norm(),
    }))
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("file_not_found", format!("{}: {e}", path.display())))
}

fn scaling(a: &FractalArgs) -> CliResult<ScalingFamily> {
    if a.n == 0 {
        return Err(CliError::usage("usage", "--N must be at least 1"));
    }
    if let Some(path) = &a.alpha_table {
        let text = read_input(path)?;
        return ScalingFamily::from_table(&text, a.n, a.alpha.unwrap_or(0.0))
            .map_err(|e| CliError::usage("alpha_table", format!("{}: {e}", path.display())));
    }
    if let Some(src) = &a.alpha_expr {
        return Ok(ScalingFamily::expression(a.n, expression(src)?)?);
    }
    match a.alpha {
        Some(v) => Ok(ScalingFamily::uniform(a.n, v)?),
        None => Err(CliError::usage(
            "usage",
            "one of --alpha, --alpha-expr or --alpha-table is required",
        )),
    }
}

fn fractal(a: &FractalArgs) -> CliResult<Value> {
    let alpha = scaling(a)?;
    let level = round_up_level(a.level, a.n);
    let base = match &a.b_expr {
        Some(src) => BaseChoice::Function(Arc::new(expression(src)?)),
        None => BaseChoice::Harmonic,
    };
    let system = FractalSystem {
        f: Arc::new(expression(&a.f_expr)?),
        base,
        alpha,
        level,
    };
    let (f, b) = system.sample()?;
    let result = construct_sampled(&f, &b, &system.alpha)?;
    if let Some(path) = &a.out {
        write_surface(path, &result.values, a.z_scale)?;
    }
    let mut summary = json!({
        "level": level,
        "word_len": a.n,
        "junction_discrepancy": result.junction_discrepancy,
        "sup_distance": result.sup_distance,
        "alpha_norm": result.alpha_norm,
        "error_bound": error_bound(&f, &b, &result),
        "min": result.values.min(),
        "max": result.values.max(),
    });
    if level != a.level {
        summary["requested_level"] = json!(a.level);
        summary["note"] = json!(format!(
            "level {} rounded up to {} (a multiple of N = {})",
            a.level, level, a.n
        ));
    }
    Ok(summary)
}

fn constrain(a: &ConstrainArgs) -> CliResult<Value> {
    if a.n == 0 {
        return Err(CliError::usage("usage", "--N must be at least 1"));
    }
    let f = sampled(&a.f_expr, a.level)?;
    let graph = f.graph().clone();
    let b = match &a.b_expr {
        Some(src) => sample(&expression(src)?, &graph)?,
        None => harmonic_on(&graph, [f.value(0), f.value(1), f.value(2)]),
    };
    let m_tilde = a.m_tilde.unwrap_or_else(|| f.max());
    let report = compute_extrema(&f, &b, a.n)?;
    let intervals = admissible_intervals(&report, m_tilde);
    if let Some(path) = &a.report {
        export::write_intervals_csv(create(path)?, &intervals)?;
    }
    if let Some(bad) = intervals.iter().find(|iv| !iv.feasible) {
        return Err(ConstraintError::Infeasible {
            word: bad.word.to_string(),
            lo: bad.lo,
            hi: bad.hi,
        }
        .into());
    }
    let values: Vec<f64> = match a.alpha {
        Some(v) => {
            if let Some(iv) = intervals.iter().find(|iv| !iv.contains(v)) {
                return Err(CliError::domain(
                    "alpha_outside_interval",
                    format!(
                        "alpha {v} lies outside [{}, {}] for word {}",
                        iv.lo, iv.hi, iv.word
                    ),
                ));
            }
            vec![v; intervals.len()]
        }
        None => intervals.iter().map(|iv| iv.midpoint()).collect(),
    };
    let alpha = ScalingFamily::per_word(a.n, values.clone())?;
    let result = construct_sampled(&f, &b, &alpha)?;
    let (lo, hi) = (result.values.min(), result.values.max());
    Ok(json!({
        "level": a.level,
        "word_len": a.n,
        "Mtilde": m_tilde,
        "extrema": report,
        "intervals": intervals,
        "alpha": values,
        "within_hypotheses": intervals.iter().all(|iv| iv.within_hypotheses),
        "range": { "min": lo, "max": hi },
        "range_holds": lo >= -1e-10 && hi <= m_tilde + 1e-10,
    }))
}

fn approx(a: &ApproxArgs) -> CliResult<Value> {
    if a.n == 0 {
        return Err(CliError::usage("usage", "--N must be at least 1"));
    }
    let alpha = a
        .alpha
        .map(|v| ScalingFamily::uniform(a.n, v))
        .transpose()?;
    let target = expression(&a.f_expr)?;
    let (basis, kind) = basis_functions(a.k, a.m, alpha.as_ref())?;
    let graph = basis[0].graph().clone();
    let f = sample(&target, &graph)?;
    let result = match a.mode {
        Mode::Chebyshev => best_chebyshev(&f, &basis)?,
        Mode::Onesided => best_one_sided_below(&f, &basis, &Quadrature::new(&graph, a.m)?)?,
    };
    let value = json!({
        "mode": match a.mode { Mode::Chebyshev => "chebyshev", Mode::Onesided => "onesided" },
        "basis": kind,
        "coefficients": result.coefficients,
        "error": result.error,
        "active": result.active,
        "m": result.m,
    });
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        writeln!(w, "{}", export::to_json(&value)?)?;
        w.flush()?;
    }
    Ok(value)
}

fn dimension(a: &DimensionArgs) -> CliResult<Value> {
    let report = match (&a.f_expr, a.constant) {
        (Some(src), _) => estimate_dimension(&expression(src)?, a.n_min, a.n_max, a.q)?,
        (None, Some(c)) => estimate_dimension(&move |_: Point2| c, a.n_min, a.n_max, a.q)?,
        (None, None) => unreachable!("clap requires one of --f-expr, --const"),
    };
    if let Some(path) = &a.csv {
        export::write_dimension_csv(create(path)?, &report)?;
    }
    let value = serde_json::to_value(&report)?;
    if let Some(path) = &a.json {
        let mut w = create(path)?;
        writeln!(w, "{}", export::to_json(&value)?)?;
        w.flush()?;
    }
    Ok(value)
}

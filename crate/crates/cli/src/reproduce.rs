//! Regenerates the reference surfaces: the first four iterations of the
//! `α = 0.7` system, the `α ∈ {0.3, 0.4, 0.5, 0.6}` sweep, the sup-distance
//! against the a priori bound over a finer α grid, and a seeded batch of
//! random systems checking the same bound.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use gasketlab::constraints::corner_bump;
use gasketlab::export;
use gasketlab::expr::{figures, parse};
use gasketlab::fractal::{
    construct, construct_sampled, error_bound, BaseChoice, FractalSystem, ScalingFamily,
};
use gasketlab::{build_level_graph, sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::create;
use crate::CliResult;

#[derive(Clone, Debug)]
pub struct ReproduceOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub level: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub sup_error: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub level: usize,
    pub files: Vec<String>,
    pub sweep: Vec<SweepRow>,
    /// Whether the observed sup-distance never decreases along the α grid.
    pub sweep_nondecreasing: bool,
    /// Whether every random system met its bound.
    pub random_bounds_hold: bool,
}

const SWEEP_STEPS: usize = 19;
const RANDOM_SYSTEMS: usize = 10;
const RANDOM_LEVEL: usize = 6;

fn figure_system(alpha: f64, level: usize) -> CliResult<FractalSystem> {
    Ok(FractalSystem {
        f: Arc::new(parse(figures::F)?),
        base: BaseChoice::Function(Arc::new(parse(figures::B)?)),
        alpha: ScalingFamily::uniform(1, alpha)?,
        level,
    })
}

pub fn reproduce(opts: &ReproduceOptions) -> CliResult<Manifest> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut files = Vec::new();
    let mut emit = |name: String| {
        let path = opts.out_dir.join(&name);
        files.push(name);
        path
    };

    for level in 1..=4 {
        let r = construct(&figure_system(figures::ALPHA, level)?)?;
        export::write_ply(
            create(&emit(format!("fig1_iteration_{level}.ply")))?,
            &r.values,
            1.0,
        )?;
    }
    for alpha in figures::ALPHA_SWEEP {
        let r = construct(&figure_system(alpha, opts.level)?)?;
        export::write_ply(
            create(&emit(format!("fig2_alpha_{alpha}.ply")))?,
            &r.values,
            1.0,
        )?;
    }

    let (f, b) = figure_system(0.0, opts.level)?.sample()?;
    let mut sweep = Vec::with_capacity(SWEEP_STEPS + 1);
    for i in 0..=SWEEP_STEPS {
        let alpha = i as f64 / 20.0;
        let r = construct_sampled(&f, &b, &ScalingFamily::uniform(1, alpha)?)?;
        let bound = error_bound(&f, &b, &r);
        sweep.push(SweepRow {
            alpha,
            sup_error: bound.lhs,
            bound: bound.rhs,
        });
    }
    {
        let mut w = csv_writer(&emit("alpha_sweep.csv".into()))?;
        w.write_record(["alpha", "sup_error", "bound"])
            .map_err(io)?;
        for row in &sweep {
            w.write_record([
                row.alpha.to_string(),
                row.sup_error.to_string(),
                row.bound.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let graph = build_level_graph(RANDOM_LEVEL)?;
    let f6 = sample(&parse(figures::F)?, &graph)?;
    let bump = sample(&corner_bump, &graph)?;
    let mut random_bounds_hold = true;
    {
        let mut w = csv_writer(&emit("random_systems.csv".into()))?;
        w.write_record([
            "system",
            "alpha",
            "amplitude",
            "sup_error",
            "bound",
            "holds",
        ])
        .map_err(io)?;
        for i in 0..RANDOM_SYSTEMS {
            let alpha: f64 = rng.gen_range(-0.95..0.95);
            let amplitude: f64 = rng.gen_range(-0.05..0.05);
            let b6 = f6.zip_with(&bump, |fv, w| fv + amplitude * w);
            let r = construct_sampled(&f6, &b6, &ScalingFamily::uniform(1, alpha)?)?;
            let bound = error_bound(&f6, &b6, &r);
            random_bounds_hold &= bound.holds;
            w.write_record([
                i.to_string(),
                alpha.to_string(),
                amplitude.to_string(),
                bound.lhs.to_string(),
                bound.rhs.to_string(),
                bound.holds.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
    }

    let sweep_nondecreasing = sweep.windows(2).all(|p| p[0].sup_error <= p[1].sup_error);
    let manifest_path = emit("manifest.json".into());
    let manifest = Manifest {
        seed: opts.seed,
        level: opts.level,
        files,
        sweep,
        sweep_nondecreasing,
        random_bounds_hold,
    };
    let mut w = create(&manifest_path)?;
    writeln!(w, "{}", export::to_json(&manifest)?)?;
    w.flush()?;
    Ok(manifest)
}

fn csv_writer(path: &std::path::Path) -> CliResult<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn io(e: csv::Error) -> crate::CliError {
    crate::CliError::domain("io", e.to_string())
}

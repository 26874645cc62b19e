use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gasketlab",
    version,
    about = "Numerical analysis on the Sierpiński gasket"
)]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level-M vertex set, edges and cells.
    Mesh(MeshArgs),
    /// Harmonic extension of boundary values.
    Harmonic(HarmonicArgs),
    /// Graph energies E_0..E_M of a function.
    Energy(EnergyArgs),
    /// Graph or pointwise Laplacian at interior vertices.
    Laplacian(LaplacianArgs),
    /// α-fractal function of (f, b, α, N) on V_M.
    Fractal(FractalArgs),
    /// Range-preserving scaling intervals.
    Constrain(ConstrainArgs),
    /// Best uniform or one-sided approximation from H_k or F^α(H_k).
    Approx(ApproxArgs),
    /// Box counts, oscillation envelopes and the fitted dimension.
    Dimension(DimensionArgs),
    /// Regenerates the reference surfaces and tables.
    Reproduce(ReproduceArgs),
}

pub const SUBCOMMANDS: [&str; 9] = [
    "mesh",
    "harmonic",
    "energy",
    "laplacian",
    "fractal",
    "constrain",
    "approx",
    "dimension",
    "reproduce",
];

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long, default_value_t = 3)]
    pub level: usize,
    /// `.ply` or `.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct HarmonicArgs {
    /// Values at p1, p2, p3.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0, 0.0])]
    pub boundary: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub level: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub z_scale: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EnergyArgs {
    #[arg(long)]
    pub f_expr: String,
    #[arg(long, default_value_t = 8)]
    pub level: usize,
    /// Lower Hölder constant; enables the envelope column.
    #[arg(long, requires = "holder_sigma")]
    pub holder_k: Option<f64>,
    #[arg(long, requires = "holder_k")]
    pub holder_sigma: Option<f64>,
    /// CSV with columns m,E_m,envelope.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LaplacianArgs {
    #[arg(long)]
    pub f_expr: String,
    #[arg(long, default_value_t = 5)]
    pub level: usize,
    /// Scale by (3/2)·5^M.
    #[arg(long)]
    pub pointwise: bool,
    /// CSV with columns id,x,y,value.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FractalArgs {
    #[arg(long)]
    pub f_expr: String,
    /// Base function; defaults to the harmonic function with f's corner values.
    #[arg(long)]
    pub b_expr: Option<String>,
    /// Constant scaling, or the default for words missing from --alpha-table.
    #[arg(long, conflicts_with = "alpha_expr")]
    pub alpha: Option<f64>,
    #[arg(long, conflicts_with = "alpha_table")]
    pub alpha_expr: Option<String>,
    /// Lines `word value` with words of length N.
    #[arg(long)]
    pub alpha_table: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    /// Rounded up to a multiple of N.
    #[arg(long, default_value_t = 6)]
    pub level: usize,
    /// `.ply` or `.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub z_scale: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ConstrainArgs {
    #[arg(long)]
    pub f_expr: String,
    #[arg(long)]
    pub b_expr: Option<String>,
    /// Upper end of the range; defaults to max f.
    #[arg(long = "Mtilde")]
    pub m_tilde: Option<f64>,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub level: usize,
    /// Constant scaling to use instead of the interval midpoints.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// CSV with columns word,lo,hi,feasible.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Chebyshev,
    Onesided,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ApproxArgs {
    #[arg(long, value_enum, default_value_t = Mode::Chebyshev)]
    pub mode: Mode,
    #[arg(long)]
    pub f_expr: String,
    /// Order of the multiharmonic space H_k.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Use the fractal basis F^α(H_k) with this constant scaling.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    /// Sample level.
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    /// Also write the JSON result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("function").args(["f_expr", "constant"]).required(true)))]
pub struct DimensionArgs {
    #[arg(long)]
    pub f_expr: Option<String>,
    /// Constant function value.
    #[arg(long = "const")]
    pub constant: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Extra sampling levels below the finest box depth.
    #[arg(long, default_value_t = 3)]
    pub q: usize,
    /// CSV with columns n,N_delta,lower_env,upper_env.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, default_value = "reproduce")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Level of the sweep surfaces.
    #[arg(long, default_value_t = 8)]
    pub level: usize,
}

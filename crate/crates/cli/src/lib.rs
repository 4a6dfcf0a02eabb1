//! The `charentropy` command line: one subcommand per verification or
//! construction, NDJSON reports, CSV grids.
//!
//! Exit codes: 0 when every check passes, 1 when a check reports a
//! violation, 2 for invalid input or configuration.

mod commands;
mod expr;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use expr::Expr;
pub use report::Reporter;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "charentropy", version, about = "Entropy, integrability and conservation-law checks for scalar quasilinear equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Model TOML file or builtin name.
    #[arg(long, default_value = "flat_projective")]
    pub model: String,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate a characteristic curve; CSV `s,x,t,y`.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Start point `x,t,y`.
        #[arg(long, value_parser = triple)]
        from: [f64; 3],
        #[arg(long, allow_negative_numbers = true)]
        span: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Godunov solution of a convex law; CSV `x,t,u`.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Initial data: an expression in `x` or a CSV file with columns `x,u`.
        #[arg(long)]
        u0: String,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long, default_value_t = 200)]
        nx: usize,
        #[arg(long, default_value_t = 0.5)]
        cfl: f64,
        #[arg(long, value_parser = pair, default_value = "-1,1", allow_hyphen_values = true)]
        x_range: [f64; 2],
        #[arg(long, default_value = "outflow")]
        boundary: String,
    },
    /// Sampled exact Riemann solution at time `T`; CSV `x,u`.
    Riemann {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        ul: f64,
        #[arg(long, allow_negative_numbers = true)]
        ur: f64,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long, value_parser = pair, default_value = "-1,1", allow_hyphen_values = true)]
        x_range: [f64; 2],
        #[arg(long, default_value_t = 201)]
        nx: usize,
    },
    /// Weak, entropy and per-jump checks of a section.
    VerifySection {
        #[command(flatten)]
        common: Common,
        /// Section CSV `x,t,u`.
        #[arg(long)]
        section: PathBuf,
        /// Jump descriptor JSON.
        #[arg(long)]
        jumps: Option<PathBuf>,
        /// `auto` or a JSON file `{"base": [...], "total": [...]}` of bumps.
        #[arg(long, default_value = "auto")]
        tests: String,
        /// Absolute tolerance; quadrature error on a grid of spacing `h` is `O(h²)`.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Randomizes the automatic test placement.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Admissibility of a single jump.
    CheckJump {
        #[command(flatten)]
        common: Common,
        /// Jump point `x,t`.
        #[arg(long, value_parser = pair, allow_hyphen_values = true)]
        jump: [f64; 2],
        /// Unit conormal from left to right.
        #[arg(long, value_parser = pair, allow_hyphen_values = true)]
        nu: [f64; 2],
        #[arg(long, allow_negative_numbers = true)]
        ul: f64,
        #[arg(long, allow_negative_numbers = true)]
        ur: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Frame determinant and κ-regime over a box.
    Integrability {
        #[command(flatten)]
        common: Common,
        /// `x0,x1,t0,t1,y0,y1`; the model domain shrunk by 10% when omitted.
        #[arg(long, value_parser = boxed, allow_hyphen_values = true)]
        region: Option<[f64; 6]>,
        #[arg(long, default_value_t = 11)]
        grid: usize,
    },
    /// Conservation law from surface data over the wedge cut.
    BuildClaw {
        #[command(flatten)]
        common: Common,
        /// `characteristic` or `fiber`.
        #[arg(long, default_value = "characteristic")]
        cut1: String,
        #[arg(long, default_value = "fiber")]
        cut2: String,
        /// `burgers` or a TOML file with expressions `dx = "..."`, `dt = "..."`
        /// of a 1-form restricted to the surface.
        #[arg(long, default_value = "burgers")]
        gamma: String,
        #[arg(long, value_parser = boxed, allow_hyphen_values = true, default_value = "0.4,0.7,0.05,0.35,-0.9,0.9")]
        domain: [f64; 6],
        #[arg(long, default_value_t = 0.0375)]
        spacing: f64,
        /// Where to write the coefficient grid CSV.
        #[arg(long)]
        grid_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Whether `f·ρ ⋉ μ` is closed for some base function `f`.
    OrientedTest {
        #[command(flatten)]
        common: Common,
        /// Fiber weight `λ(x, t, y)`.
        #[arg(long, default_value = "1")]
        weight: String,
        /// Field rescaling `c(x, t, y)`.
        #[arg(long, default_value = "1")]
        scale: String,
        /// Base density weight `μ(x, t)`.
        #[arg(long, default_value = "1")]
        mu: String,
        #[arg(long, value_parser = boxed, allow_hyphen_values = true, default_value = "-1,1,-1,1,-1,1")]
        domain: [f64; 6],
        #[arg(long, default_value_t = 6)]
        grid: usize,
        /// Where to write the candidate `f` on a base grid.
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Whether `f = G·H` with `L_X G = 0`, `L_Y H = 0`.
    Separability {
        #[command(flatten)]
        common: Common,
        /// Positive function `f(x, t, y)`.
        #[arg(long)]
        f: String,
        #[arg(long, value_parser = boxed, allow_hyphen_values = true, default_value = "-1,1,-1,1,-1,1")]
        domain: [f64; 6],
        #[arg(long, default_value_t = 7)]
        grid: usize,
    },
    /// Surface/volume identity for one test pair `φ ⊗ θ`.
    Volpert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        section: PathBuf,
        #[arg(long)]
        jumps: Option<PathBuf>,
        /// Base bump `x,t,rx,rt`.
        #[arg(long, value_parser = quad, allow_hyphen_values = true)]
        phi: [f64; 4],
        /// Fiber bump `y,r`.
        #[arg(long, value_parser = pair, allow_hyphen_values = true)]
        theta: [f64; 2],
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn pair(s: &str) -> Result<[f64; 2], String> {
    floats::<2>(s)
}

fn triple(s: &str) -> Result<[f64; 3], String> {
    floats::<3>(s)
}

fn quad(s: &str) -> Result<[f64; 4], String> {
    floats::<4>(s)
}

fn boxed(s: &str) -> Result<[f64; 6], String> {
    floats::<6>(s)
}

/// Configures the worker pool from `CHARENTROPY_THREADS`.
fn init_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("CHARENTROPY_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("CHARENTROPY_THREADS='{v}' is not a count"))?;
        // A pool configured earlier in the same process is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("charentropy: {e}");
        return EXIT_INVALID;
    }
    match commands::dispatch(cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VIOLATION,
        Err(e) => {
            eprintln!("charentropy: {e}");
            EXIT_INVALID
        }
    }
}

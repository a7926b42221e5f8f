#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod ranges;

use clap::{Parser, Subcommand, ValueEnum};
use ranges::{F64List, U32List};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact Weil–Petersson volumes, the volume estimates built on them, and
/// the spectral-gap probability bound.
#[derive(Parser, Debug)]
#[command(name = "wpvol", version)]
pub struct Cli {
    /// Volume cache file; loaded when present and rewritten when new
    /// tables were computed.
    #[arg(long, global = true, env = "WPVOL_CACHE")]
    pub cache: Option<PathBuf>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
    /// Write the main artifact here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Write the JSON summary here.
    #[arg(long, global = true)]
    pub summary: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write a gnuplot script next to `--output`.
    #[arg(long, global = true)]
    pub gnuplot: bool,
    /// Decimal digits for numeric evaluation of exact values.
    #[arg(long, global = true, default_value_t = 30, value_parser = clap::value_parser!(u32).range(15..))]
    pub digits: u32,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// V_{g,n}: exact value in Q[π²] and its numeric value. The volume of
    /// the moduli space of genus-g surfaces with n geodesic boundaries of
    /// length zero (n = 0 for closed surfaces), from Mirzakhani's recursion.
    Volumes {
        #[arg(long)]
        g: u32,
        #[arg(long, default_value_t = 0)]
        n: u32,
        /// Evaluate V_{g,n}(b₁,…,bₙ) at these boundary lengths.
        #[arg(long, value_parser = ranges::f64_list)]
        lengths: Option<F64List>,
        /// Emit every coefficient of V_{g,n}(2L₁,…,2Lₙ) as a polynomial in
        /// the squared half-lengths L_i², as CSV.
        #[arg(long)]
        polynomial: bool,
    },
    /// Intersection number [τ_{d₁}⋯τ_{dₙ}]_{g,n}, the coefficient of
    /// ∏ L_i^{2d_i}/(2d_i+1)! in V_{g,n}(L) up to the multinomial factor.
    Tau {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = ranges::u32_list)]
        d: U32List,
    },
    /// Grid checks of volume inequalities.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Volume of the thin part and averages of length functions.
    #[command(subcommand)]
    Thin(ThinCmd),
    /// Boundary strata of the Deligne–Mumford compactification.
    #[command(subcommand)]
    Strata(StrataCmd),
    /// Counting bounds for geodesic segments and closed geodesics.
    #[command(subcommand)]
    Geodesics(GeoCmd),
    /// Bump test functions, the trace formula terms, and the probability
    /// bound for eigenvalues below 1/4.
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Load, save, merge and re-derive volume caches.
    #[command(subcommand)]
    Cache(CacheCmd),
}

#[derive(Subcommand, Debug)]
pub enum VerifyCmd {
    /// 0 ≤ 1 - [τ_d]_{g,n}/V_{g,n} ≤ 1 with the deficit fitted against
    /// C n|d|²/(2g-3+n).
    Coeff {
        #[arg(long, default_value_t = 10)]
        gmax: u32,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long, default_value_t = 6)]
        dmax: u32,
    },
    /// V_{g,n} ≤ C₀/√g (2g-3+n)! (4π²)^{2g-3+n}, with C₀ fitted.
    Factorial {
        #[arg(long, default_value_t = 10)]
        gmax: u32,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
    },
    /// V_{g,n}(2L)/V_{g,n} ≤ ∏ sinh(L_i)/L_i ≤ exp(ΣL_i) at half-lengths L,
    /// decided at guarded precision.
    Sinh {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
        /// Half-lengths as rationals, e.g. `1,1/2`.
        #[arg(long)]
        half: String,
    },
    /// ∏V_{g_i,n_i}/V_g ≤ (C₁/g)^{q+q'-2} for a decomposition into parts.
    Product {
        #[arg(long)]
        g: u32,
        /// Parts as `g1:n1,g2:n2,…`.
        #[arg(long)]
        parts: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        c1: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ThinCmd {
    /// Truncated inclusion-exclusion bracket for the volume of the locus of
    /// surfaces with a closed geodesic shorter than ε.
    Bracket {
        #[arg(long, value_parser = ranges::u32_list)]
        g: U32List,
        #[arg(long, value_parser = ranges::f64_list, default_value = "0.1")]
        eps: F64List,
        /// Truncation depth; defaults to min(4, 3g-3).
        #[arg(long)]
        nmax: Option<u32>,
    },
    /// Average of F over simple non-separating geodesics on the thick part
    /// against I_F, for F the indicator of [0, support].
    Thick {
        #[arg(long, value_parser = ranges::u32_list)]
        g: U32List,
        #[arg(long, value_parser = ranges::f64_list, default_value = "0.1")]
        eps: F64List,
        #[arg(long, default_value_t = 1.0)]
        support: f64,
    },
    /// Average of F over all primitive closed geodesics on well-behaved
    /// surfaces: the (1 + Δ) I_F bound with every ingredient reported.
    Report {
        #[arg(long, value_parser = ranges::u32_list)]
        g: U32List,
        #[arg(long, default_value_t = 4.0)]
        d: f64,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
        /// Thin-part threshold; defaults to 1/log g.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        support: f64,
        /// Exit 1 unless Δ decreases strictly along the genus list.
        #[arg(long)]
        require_decreasing: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum StrataCmd {
    /// Stratum counts per (g, k, q, q') against 2^{k+q²} g^{q'-1}.
    Census {
        #[arg(long, default_value_t = 6)]
        gmax: u32,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value_t = 5)]
        qmax: usize,
    },
    /// Canonical dual graphs with k edges and q vertices in genus g.
    List {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum GeoCmd {
    /// Lifts of a segment of offset δ in an annulus of core length T that
    /// stay within length ℓ, against the bound 2 + 2ℓ/T.
    Annulus {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        ell: f64,
    },
    /// Closed geodesic count bound (C L₀ log(1/ε)/ε)^{C ℓ/L₀ + 3} on
    /// tangle-free surfaces over a grid.
    Sweep {
        #[arg(long, value_parser = ranges::f64_list)]
        l0: F64List,
        #[arg(long, value_parser = ranges::f64_list)]
        eps: F64List,
        #[arg(long, value_parser = ranges::f64_list)]
        ell: F64List,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Smallest constant absorbing net size times segment pairs into
    /// C' L₀ log(1/ε)/ε over a grid.
    Fit {
        #[arg(long, value_parser = ranges::f64_list)]
        l0: F64List,
        #[arg(long, value_parser = ranges::f64_list)]
        eps: F64List,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum SpectralCmd {
    /// Minimize the trace-formula upper bound over cosh(bL) m in L and fit
    /// the exponent of the probability of an eigenvalue below 1/4 - b².
    Sweep {
        #[arg(long, value_parser = ranges::f64_list)]
        b: F64List,
        #[arg(long, value_parser = ranges::f64_list)]
        kappa: F64List,
        #[arg(long, value_parser = ranges::f64_list)]
        g: F64List,
        #[arg(long, default_value_t = 6.0)]
        d: f64,
        /// Coefficient of the g^{κ-1} f̂(i/2) cosh(L/2) term.
        #[arg(long, default_value_t = 1.0)]
        geo: f64,
        /// Systole; defaults to 1/log g.
        #[arg(long)]
        sys: Option<f64>,
        /// Grid intervals on [-1, 1] for the test function.
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// |I_{F_f} - f̂(i/2)| ≤ 4‖f‖₁ for the test function and its translates,
    /// with the translation identities for f̂.
    Check {
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, value_parser = ranges::f64_list, default_value = "0.5,1.5,3")]
        l: F64List,
        #[arg(long, default_value_t = 1e-8)]
        budget: f64,
    },
    /// Grid and values of the test function (or a translate) as text.
    Profile {
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        l: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CacheCmd {
    /// Write the cache, optionally after tabulating every stable (g, n)
    /// with 1 ≤ n and 2g-2+n ≤ upto.
    Export {
        #[arg(long)]
        upto: Option<u32>,
    },
    /// Load a cache file into the working cache.
    Import { file: PathBuf },
    /// Union of two cache files; equal keys must hold equal values.
    Merge { a: PathBuf, b: PathBuf },
    /// Recompute every table in a cache file and compare.
    Verify { file: Option<PathBuf> },
    /// Pairs and key counts held.
    Stats,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("wpvol: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Runs the oscillatory multiplier verification campaigns and writes one JSON
/// report plus one CSV per data series into the output directory.
#[derive(Debug, Parser)]
#[command(name = "oscm", version, about, after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

const EXIT_CODES: &str = "\
Exit codes: 0 all checks pass, 1 usage or configuration error,
2 at least one check failed, 3 inconclusive fits (residual > 0.5) present.

Configuration precedence: command-line flags > --config file > defaults.";

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON document whose keys override the subcommand defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory for <id>.json and <id>_<series>.csv
    /// [default: $OSCM_OUT_DIR, else ./oscm-out].
    #[arg(long, short, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores [default: 0].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for randomized inputs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only print the summary line.
    #[arg(long, short)]
    pub quiet: bool,
}

/// Flags shared by the kernel campaigns.
#[derive(Debug, Clone, Args)]
pub struct Levels {
    /// Dimension (1 or 2).
    #[arg(long)]
    pub n: Option<usize>,
    /// Order of the phase |ξ|^s.
    #[arg(long)]
    pub s: Option<f64>,
    /// Dyadic levels, `a..b` (inclusive) or a single level.
    #[arg(long, value_name = "A..B")]
    pub j: Option<String>,
    /// Grid half-width L.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Grid points per axis (power of two).
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical order m_s for one or more values of s.
    #[command(after_help = "CSV critical_order: n, s, m_s")]
    CriticalOrder {
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Comma-separated orders.
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// L¹, L² and L∞ norms of the dyadic kernels K_j against j.
    #[command(after_help = "CSV kernel_norms: j, l1, linf, l2, half_width, points, tail_fraction
  tail_fraction = share of the L¹ mass in |x| > L/2")]
    KernelScan {
        #[command(flatten)]
        levels: Levels,
        /// theta_annular, phi_ball, psi_narrow or phi.
        #[arg(long)]
        localizer: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Near, main and far zone structure of annular kernels.
    #[command(after_help = "CSV regime_zones: j, s, main_max, main_min, main_ratio, main_level, near_max,
  predicted_main_max, far_slope, points
  main_level = main_max / 2^{j(n - ns/2)}; predicted_main_max from stationary phase")]
    RegimeCheck {
        #[command(flatten)]
        levels: Levels,
        #[arg(long)]
        localizer: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Shell-wise envelope exponents of ball-localized kernels.
    #[command(after_help = "CSV envelope_shells: j, zone, k, shell_max
CSV envelope_fits: j, zone, slope, residual, calibrated_c
  zone: 0 inner (|x| <= 1), 1 outer, 2 global (s > 1); shell k covers 2^k <= |x| < 2^{k+1}")]
    EnvelopeCheck {
        #[command(flatten)]
        levels: Levels,
        #[arg(long)]
        localizer: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Local L² energy of S_j f on balls of radius A for random bounded f.
    #[command(after_help = "CSV local_energy: trial, A, local_l2_over_sup")]
    LocalEnergy {
        #[command(flatten)]
        levels: Levels,
        #[arg(long)]
        localizer: Option<String>,
        /// Comma-separated radii A.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Blockwise Fourier expansion of the symbol (1+|ξ|²+|η|²)^{m/2}.
    #[command(after_help = "CSV level_sups: j, weighted_sup
CSV window_sups: window, weighted_sup
CSV reconstruction: xi, eta, residual, tail_bound
  weighted_sup = sup |c(a,b)| 2^{-jm} (1+|a|)^N (1+|b|)^N")]
    SymbolExpand {
        /// Symbol order m.
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        #[arg(long)]
        j_max: Option<i32>,
        #[arg(long)]
        n_decay: Option<u32>,
        #[arg(long)]
        a_max: Option<i32>,
        /// Smaller coefficient window for the stability comparison.
        #[arg(long)]
        window: Option<i32>,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Transposition pairing and trilinear form identities on random triples.
    #[command(after_help = "CSV pairing: triple, lhs_re, lhs_im, rhs_re, rhs_im, relative_gap")]
    Trilinear {
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        #[arg(long)]
        triples: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        j: Option<i32>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Largest frequency index of the random inputs.
        #[arg(long)]
        band: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Atomic L¹ decomposition of random functions or of a sample file.
    #[command(after_help = "CSV atoms: function, atoms, remainder_atoms, weight_ratio, relative_error, invalid
  weight_ratio = Σλ / ‖h‖₁; input files: .oscm binary container or .csv with x,re,im (x,y,re,im)")]
    Atoms {
        /// Decompose this sample file instead of random functions.
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long)]
        functions: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Sharpness constructions; the regime is chosen from s.
    #[command(after_help = "CSV sharpness_levels, s < 1: j, q, product_l1, f_sup, g_l1, plateau_error, points
CSV sharpness_levels, 1 < s <= 2: j, value, predicted, relative_gap, f1_sup, f2_sup, f3_l1, plateau_error
CSV sharpness_levels, s > 2: j, value, value_over_2^jn, f_sup, f0_l1, plateau_error, points")]
    Sharpness {
        #[command(flatten)]
        levels: Levels,
        #[command(flatten)]
        common: Common,
    },
    /// Region-by-region L¹ mass of the trilinear product against an atom.
    #[command(after_help = "CSV regions (s < 1): j, near, middle, far, near_normalized, middle_normalized, far_normalized
CSV shells (s > 1): j, k, shell_l1")]
    RegionProbe {
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_name = "A..B")]
        j: Option<String>,
        /// Atom radius.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Constant C of the near region |x| <= C 2^{j(s-1)+2}.
        #[arg(long)]
        c: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Partial sums of the dyadic series for a symbol order m.
    #[command(after_help = "CSV random_inputs: j, m, term, partial_sum, ratio
CSV sharpness_inputs: j, m, term, partial_sum, ratio")]
    Convergence {
        #[arg(long)]
        s: Option<f64>,
        /// Symbol order; m_s - 0.2 when absent.
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        #[arg(long, value_name = "A..B")]
        j: Option<String>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Every campaign with its default configuration.
    All {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::CriticalOrder { common, .. }
            | Command::KernelScan { common, .. }
            | Command::RegimeCheck { common, .. }
            | Command::EnvelopeCheck { common, .. }
            | Command::LocalEnergy { common, .. }
            | Command::SymbolExpand { common, .. }
            | Command::Trilinear { common, .. }
            | Command::Atoms { common, .. }
            | Command::Sharpness { common, .. }
            | Command::RegionProbe { common, .. }
            | Command::Convergence { common, .. }
            | Command::All { common } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::CriticalOrder { .. } => "critical-order",
            Command::KernelScan { .. } => "kernel-scan",
            Command::RegimeCheck { .. } => "regime-check",
            Command::EnvelopeCheck { .. } => "envelope-check",
            Command::LocalEnergy { .. } => "local-energy",
            Command::SymbolExpand { .. } => "symbol-expand",
            Command::Trilinear { .. } => "trilinear",
            Command::Atoms { .. } => "atoms",
            Command::Sharpness { .. } => "sharpness",
            Command::RegionProbe { .. } => "region-probe",
            Command::Convergence { .. } => "convergence",
            Command::All { .. } => "all",
        }
    }
}

//! Batch command-line surface.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure (including
//! non-convergence under `--strict`). Every file is written atomically. A `report.json` is
//! written next to the primary output unless `--report` names another path.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometric::KernelKind;
use crate::io::{self, GraphJson};
use crate::portfolio::{AllocationScheme, CutKind};
use crate::report::RunReport;

mod commands;

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "GRAPHTOPO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "graphtopo", version, about = "Graph topology learning and physical graph systems")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Validate inputs and parameters without computing or writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Also write tidy x,y,series CSV next to the primary output.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,
    /// Run report path (default: report.json next to the primary output).
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Treat non-convergence as a failure (exit code 2).
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate graphs and signals.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Learn a topology from observations.
    #[command(subcommand)]
    Learn(LearnCmd),
    /// Solve a physical system on a graph.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Lattice spectra and subsampling.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Spectral portfolio cuts.
    #[command(subcommand)]
    Portfolio(PortfolioCmd),
    /// Transport-network analysis.
    #[command(subcommand)]
    Metro(MetroCmd),
    /// Run the golden and property suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCmd {
    /// Geodesic kernel graph on random points of a swiss-roll surface.
    SwissRoll {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        #[arg(long, default_value = "gauss_sq")]
        kernel: KernelKind,
        #[arg(long)]
        out: PathBuf,
        /// N×3 point coordinates.
        #[arg(long)]
        coords_out: Option<PathBuf>,
    },
    /// Random snapshots of a signal model on a graph.
    Signal {
        #[arg(long)]
        graph: PathBuf,
        /// sources, dipole, pinned_pair, diffusion, adjacency_shift or bandlimited.
        #[arg(long)]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        p: usize,
        /// Mode parameters as a JSON object, e.g. '{"h":[0.3,0.2,0.5]}'.
        #[arg(long, default_value = "{}")]
        params: String,
        /// Standard deviation of additive white noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lattice graph as the Kronecker sum of paths.
    Lattice {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in example graph: circuit, social or pages.
    Sample {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random connected weighted graph.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LearnOutputs {
    /// Learned weight matrix.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    /// Ground-truth weight matrix; the report gets the weight MSE in dB.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LearnCmd {
    /// Sparse regression y ≈ A x by iterative soft thresholding.
    Lasso {
        /// M×N design matrix.
        #[arg(long)]
        obs: PathBuf,
        /// Length-M target vector.
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sparse precision matrix from a correlation matrix.
    Glasso {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Final covariance estimate.
        #[arg(long)]
        cov_out: Option<PathBuf>,
        #[command(flatten)]
        learn: LearnOutputs,
    },
    /// Precision matrix as the (pseudo-)inverse of a correlation matrix.
    Precision {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        rank_tol: f64,
        /// Write the unit-diagonal normalization instead.
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-vertex sparse regression on the other vertices.
    Regress {
        /// N×P observations, one snapshot per column.
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Zero pairs with a negative coefficient instead of failing.
        #[arg(long)]
        clamp_negative: bool,
        /// Weight pairs by coefficient magnitude, ignoring signs.
        #[arg(long, conflicts_with = "clamp_negative")]
        magnitude: bool,
        /// Laplacian of the symmetrized weights.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Raw coefficient matrix.
        #[arg(long)]
        beta_out: Option<PathBuf>,
        #[command(flatten)]
        learn: LearnOutputs,
    },
    /// Laplacian under which the observations are smooth.
    Smooth {
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 20)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Smoothed signals.
        #[arg(long)]
        signals_out: Option<PathBuf>,
        #[command(flatten)]
        learn: LearnOutputs,
    },
    /// Laplacian from the eigenvectors of the correlation matrix and a polynomial spectral fit.
    Polyfit {
        #[arg(long, required_unless_present = "corr", conflicts_with = "corr")]
        obs: Option<PathBuf>,
        #[arg(long)]
        corr: Option<PathBuf>,
        /// System order M.
        #[arg(long)]
        order: usize,
        /// Grid points per free knot.
        #[arg(long)]
        grid: Option<usize>,
        /// Subtract the per-vertex mean before correlating.
        #[arg(long)]
        center: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        learn: LearnOutputs,
    },
    /// Laplacian from signals and known source injections.
    Sources {
        #[arg(long)]
        obs: PathBuf,
        /// N×P source matrix.
        #[arg(long)]
        sources: PathBuf,
        /// Sparsity penalty for the underdetermined case.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        learn: LearnOutputs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    /// Vertex voltages from pinned voltages and current sources.
    Circuit {
        #[arg(long)]
        graph: PathBuf,
        /// Rows "vertex,voltage".
        #[arg(long)]
        bc: PathBuf,
        /// Length-N injected currents.
        #[arg(long)]
        sources: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Absorption probabilities of a random walk with absorbing vertices.
    Absorb {
        #[arg(long)]
        graph: PathBuf,
        /// Rows "vertex,value".
        #[arg(long)]
        bc: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected hitting times to a target vertex.
    Hitting {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All-pairs commute times.
    Commute {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// All-pairs effective resistances.
        #[arg(long)]
        resistance_out: Option<PathBuf>,
    },
    /// Link-analysis ranking of a directed graph.
    Pagerank {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Use the damped iteration.
        #[arg(long)]
        damped: bool,
        #[arg(long, default_value_t = 0.15, requires = "damped")]
        teleport: f64,
        #[arg(long, default_value_t = 0.85, requires = "damped")]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semi-supervised label propagation.
    Propagate {
        #[arg(long)]
        graph: PathBuf,
        /// Rows "vertex,label".
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Denoise a signal generated by K sparse sources.
    Denoise {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        reference: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady state of a random walk.
    Walk {
        #[arg(long)]
        graph: PathBuf,
        /// vertex_centric, edge_centric or stationary.
        #[arg(long, default_value = "stationary")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LatticeCmd {
    /// Separable Fourier basis of a lattice: eigenvalues and eigenvectors.
    Gdft {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        values_out: Option<PathBuf>,
        #[arg(long)]
        vectors_out: Option<PathBuf>,
    },
    /// Induced subgraph on kept vertices.
    Subsample {
        #[arg(long, value_delimiter = ',', required_unless_present = "graph", conflicts_with = "graph")]
        dims: Vec<usize>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-1 test of a signal on a two-dimensional lattice.
    Separability {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        signal: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct PortfolioArgs {
    /// T×N returns, one asset per column.
    #[arg(long, required_unless_present = "prices", conflicts_with = "prices")]
    pub returns: Option<PathBuf>,
    /// (T+1)×N prices; returns are computed from them.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub cuts: usize,
    #[arg(long, default_value = "cutn")]
    pub kind: CutKind,
    /// Leaf chosen for the next cut: size or volume.
    #[arg(long, default_value = "size")]
    pub select: String,
}

#[derive(Debug, Subcommand)]
pub enum PortfolioCmd {
    /// Cluster labels from repeated spectral cuts of the market graph.
    Cut {
        #[command(flatten)]
        args: PortfolioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asset weights from the cut tree.
    Allocate {
        #[command(flatten)]
        args: PortfolioArgs,
        #[arg(long, default_value = "as1")]
        scheme: AllocationScheme,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Out-of-sample returns of the graph, equal-weight and minimum-variance portfolios.
    Backtest {
        #[command(flatten)]
        args: PortfolioArgs,
        #[arg(long, default_value = "as1")]
        scheme: AllocationScheme,
        /// Training periods (default: first half).
        #[arg(long)]
        train: Option<usize>,
        /// Periods per year for annualized Sharpe ratios.
        #[arg(long)]
        annualize: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MetroCmd {
    /// Betweenness and closeness vitality per station.
    Centrality {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Population estimate from net passenger outflows.
    Population {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        flows: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Monte-Carlo walks for the hitting-time check.
    #[arg(long, default_value_t = 1_000_000)]
    pub walks: usize,
    /// Machine-readable results.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Per-invocation state: global flags, the run report and pending plot rows.
pub(crate) struct Ctx {
    pub dry_run: bool,
    emit_plot: bool,
    strict: bool,
    report_path: Option<PathBuf>,
    pub report: RunReport,
    plot: Vec<(f64, f64, String)>,
    pub(super) primary: Option<PathBuf>,
    start: Instant,
}

impl Ctx {
    fn new(global: &GlobalOpts, command: &str) -> Self {
        Self {
            dry_run: global.dry_run,
            emit_plot: global.emit_plot_data,
            strict: global.strict,
            report_path: global.report.clone(),
            report: RunReport::new(command),
            plot: Vec::new(),
            primary: None,
            start: Instant::now(),
        }
    }

    fn record(&mut self, path: &Path) {
        if self.primary.is_none() {
            self.primary = Some(path.to_path_buf());
        }
        self.report.outputs.push(path.display().to_string());
    }

    /// Writes to `out`, or to stdout when no path is given.
    pub fn emit_matrix(&mut self, out: Option<&Path>, m: &DMatrix<f64>) -> Result<()> {
        match out {
            Some(p) => {
                io::write_matrix_csv(p, m)?;
                self.record(p);
            }
            None => print!("{}", io::format_matrix_csv(m)),
        }
        Ok(())
    }

    pub fn emit_vector(&mut self, out: Option<&Path>, v: &DVector<f64>) -> Result<()> {
        match out {
            Some(p) => {
                io::write_vector_csv(p, v)?;
                self.record(p);
            }
            None => print!("{}", io::format_vector_csv(v)),
        }
        Ok(())
    }

    pub fn emit_graph(&mut self, out: Option<&Path>, g: &GraphJson) -> Result<()> {
        match out {
            Some(p) => {
                io::write_graph_json(p, g)?;
                self.record(p);
            }
            None => print!("{}", io::graph_json_string(g)),
        }
        Ok(())
    }

    /// Optional secondary output; never goes to stdout.
    pub fn emit_matrix_to(&mut self, out: &Option<PathBuf>, m: &DMatrix<f64>) -> Result<()> {
        if let Some(p) = out {
            io::write_matrix_csv(p, m)?;
            self.report.outputs.push(p.display().to_string());
        }
        Ok(())
    }

    /// Adds a series plotted against its index.
    pub fn plot_series<'a>(&mut self, series: &str, ys: impl IntoIterator<Item = &'a f64>) {
        if self.emit_plot {
            self.plot.extend(ys.into_iter().enumerate().map(|(i, &y)| (i as f64, y, series.to_string())));
        }
    }

    fn plot_path(&self) -> PathBuf {
        match &self.primary {
            Some(p) => p.with_extension("plot.csv"),
            None => PathBuf::from("graphtopo.plot.csv"),
        }
    }

    fn report_path(&self) -> Option<PathBuf> {
        self.report_path.clone().or_else(|| {
            self.primary
                .as_ref()
                .map(|p| p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")).join("report.json"))
        })
    }

    fn finish(mut self) -> Result<()> {
        if self.emit_plot && !self.plot.is_empty() {
            let mut s = String::from("x,y,series\n");
            for (x, y, series) in &self.plot {
                s.push_str(&format!("{},{},{}\n", io::fmt_f64(*x), io::fmt_f64(*y), series));
            }
            let path = self.plot_path();
            io::atomic_write(&path, s.as_bytes())?;
            self.report.outputs.push(path.display().to_string());
        }
        self.report.wall_time_s = self.start.elapsed().as_secs_f64();
        if let Some(path) = self.report_path() {
            self.report.write(&path)?;
        }
        if self.strict && !self.report.all_converged() {
            let failed: Vec<&str> =
                self.report.converged.iter().filter(|(_, &c)| !c).map(|(k, _)| k.as_str()).collect();
            let iterations = self.report.metrics.get("iterations").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
            return Err(Error::NoConvergence { what: failed.join(", "), iterations });
        }
        Ok(())
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count")),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

/// Parses `argv` (program name first), runs the command and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(cli.global.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("graphtopo: error: {msg}");
            return 1;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("graphtopo: error: cannot start thread pool: {e}");
            return 2;
        }
    };
    match pool.install(|| commands::run(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("graphtopo: error: {}", single_line(&e));
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn single_line(e: &Error) -> String {
    e.to_string().replace('\n', " ")
}

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use super::{
    Cli, Command, Ctx, GenCmd, LatticeCmd, LearnCmd, LearnOutputs, MetroCmd, PortfolioArgs, PortfolioCmd, SolveCmd,
    VerifyArgs,
};
use crate::error::{Error, Result};
use crate::geometric::{swiss_roll_graph, KernelSpec};
use crate::graph::{laplacian, Graph, Laplacian, LaplacianKind, SourceVector};
use crate::io::{self, GraphJson};
use crate::lattice::{kron_sum_adjacency, separability_check, separable_gdft, subsample, Lattice, SamplingMap};
use crate::learning::{
    correlation_matrix, learn_from_sources, mse_db, neighborhood_regression, polynomial_fit_eigenvalues,
    precision_weights, smooth_learn, symmetrize_geometric, symmetrize_magnitude, ObservationMatrix, PolyFitConfig,
};
use crate::metro::{betweenness, closeness_vitality, fick_population, FlowVector};
use crate::physical::{
    absorbing_probabilities, circuit_solve, hitting_times, label_propagation, pagerank, sparse_source_denoise,
    stationary_distribution, walk_steady_state, BoundaryCondition, Damping, ResistanceMetric, WalkKind,
};
use crate::portfolio::{
    allocate, equal_weights, market_graph, min_variance_weights, portfolio_returns, repeated_cuts, sharpe, LeafSelect,
    RepeatedCuts, ReturnSeries,
};
use crate::report::num;
use crate::samples;
use crate::simulate::{simulate, SimMode, SimSpec, GENERATOR};
use crate::sparse::{glasso, lasso_ista, normalize_precision, precision_matrix, GlassoConfig, LassoConfig};
use crate::verify;

pub(super) fn run(cli: &Cli) -> Result<i32> {
    let name = command_name(&cli.command);
    let mut ctx = Ctx::new(&cli.global, &name);
    let code = match &cli.command {
        Command::Gen(c) => gen(&mut ctx, c).map(|_| 0),
        Command::Learn(c) => learn(&mut ctx, c).map(|_| 0),
        Command::Solve(c) => solve(&mut ctx, c).map(|_| 0),
        Command::Lattice(c) => lattice(&mut ctx, c).map(|_| 0),
        Command::Portfolio(c) => portfolio(&mut ctx, c).map(|_| 0),
        Command::Metro(c) => metro(&mut ctx, c).map(|_| 0),
        Command::Verify(a) => verify_cmd(&mut ctx, a),
    }?;
    if ctx.dry_run {
        eprintln!("graphtopo: dry run: inputs valid");
        return Ok(0);
    }
    ctx.finish()?;
    Ok(code)
}

pub(super) fn command_name(c: &Command) -> String {
    let sub = |d: &dyn std::fmt::Debug| {
        let s = format!("{d:?}");
        let head: String = s.chars().take_while(|c| c.is_alphanumeric()).collect();
        kebab(&head)
    };
    match c {
        Command::Gen(x) => format!("gen {}", sub(x)),
        Command::Learn(x) => format!("learn {}", sub(x)),
        Command::Solve(x) => format!("solve {}", sub(x)),
        Command::Lattice(x) => format!("lattice {}", sub(x)),
        Command::Portfolio(x) => format!("portfolio {}", sub(x)),
        Command::Metro(x) => format!("metro {}", sub(x)),
        Command::Verify(_) => "verify".to_string(),
    }
}

fn kebab(s: &str) -> String {
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if ch.is_uppercase() {
            if i > 0 {
                out.push('-');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

fn read_graph(path: &Path) -> Result<Graph> {
    io::read_graph_json(path)?.to_graph()
}

fn read_obs(path: &Path) -> Result<ObservationMatrix> {
    ObservationMatrix::new(io::read_matrix_csv(path)?)
}

fn combinatorial(g: &Graph) -> Result<Laplacian> {
    laplacian(g, LaplacianKind::Combinatorial)
}

/// Rows "vertex,value" with integer vertex indices below `n`.
fn read_pairs(path: &Path, n: usize) -> Result<BoundaryCondition> {
    let m = io::read_matrix_csv(path)?;
    if m.ncols() != 2 {
        return Err(Error::Dimension(format!(
            "{}: expected 2 columns (vertex,value), got {}",
            path.display(),
            m.ncols()
        )));
    }
    let mut pairs = Vec::with_capacity(m.nrows());
    for r in 0..m.nrows() {
        let v = m[(r, 0)];
        if !(v >= 0.0) || v.fract() != 0.0 || v >= n as f64 {
            return Err(Error::InvalidInput(format!(
                "{}: row {}: {v} is not a vertex of a {n}-vertex graph",
                path.display(),
                r + 1
            )));
        }
        pairs.push((v as usize, m[(r, 1)]));
    }
    BoundaryCondition::from_pairs(pairs)
}

fn check_vertex(v: usize, n: usize, what: &str) -> Result<()> {
    if v >= n {
        return Err(Error::InvalidInput(format!("{what} {v} out of range for {n} vertices")));
    }
    Ok(())
}

fn nums(v: &[f64]) -> Vec<serde_json::Value> {
    v.iter().map(|&x| num(x)).collect()
}

fn gen(ctx: &mut Ctx, cmd: &GenCmd) -> Result<()> {
    match cmd {
        GenCmd::SwissRoll { n, seed, tau, kappa, kernel, out, coords_out } => {
            let spec = KernelSpec::new(*kernel, *tau, *kappa)?;
            if *n < 2 {
                return Err(Error::InvalidInput(format!("swiss roll needs n >= 2, got {n}")));
            }
            ctx.report.param("n", n).param("tau", tau).param("kappa", kappa).param("kernel", kernel);
            ctx.report.seed = Some(*seed);
            ctx.report.generator = Some("rand_chacha 0.9 ChaCha8Rng seed_from_u64(seed), uniform (u, v)".into());
            if ctx.dry_run {
                return Ok(());
            }
            let roll = swiss_roll_graph(*n, *seed, &spec)?;
            ctx.emit_graph(Some(out), &GraphJson::from_graph(&roll.graph))?;
            ctx.emit_matrix_to(coords_out, roll.cloud.coords())?;
            ctx.report.metric("edges", roll.graph.edges().len()).metric("connected", roll.graph.is_connected());
        }
        GenCmd::Signal { graph, mode, seed, p, params, noise, out } => {
            let g = read_graph(graph)?;
            let params: serde_json::Value =
                serde_json::from_str(params).map_err(|e| Error::Parse(format!("--params: {e}")))?;
            let m = SimMode::from_name_and_params(mode, &params)?;
            let spec = SimSpec::new(m, *seed, *p)?.with_noise(*noise)?;
            ctx.report
                .param("graph", graph.display().to_string())
                .param("spec", &spec.mode)
                .param("p", p)
                .param("noise", noise);
            ctx.report.seed = Some(*seed);
            ctx.report.generator = Some(GENERATOR.to_string());
            if ctx.dry_run {
                return Ok(());
            }
            let x = simulate(&g, &spec)?;
            ctx.emit_matrix(out.as_deref(), x.data())?;
        }
        GenCmd::Lattice { dims, out } => {
            let lat = Lattice::new(dims.clone())?;
            ctx.report.param("dims", dims);
            if ctx.dry_run {
                return Ok(());
            }
            let g = kron_sum_adjacency(&lat)?;
            ctx.emit_graph(out.as_deref(), &GraphJson::from_graph(&g))?;
        }
        GenCmd::Sample { name, out } => {
            let g = match name.as_str() {
                "circuit" => GraphJson::from_graph(&samples::circuit_graph()),
                "social" => GraphJson::from_graph(&samples::social_graph()),
                "pages" => GraphJson::from_directed(&samples::page_graph()),
                other => {
                    return Err(Error::InvalidInput(format!("unknown sample {other:?} (circuit, social or pages)")))
                }
            };
            ctx.report.param("name", name);
            if ctx.dry_run {
                return Ok(());
            }
            ctx.emit_graph(out.as_deref(), &g)?;
        }
        GenCmd::Random { n, density, seed, out } => {
            if *n == 0 || !(0.0..=1.0).contains(density) {
                return Err(Error::InvalidInput(format!("need n >= 1 and density in [0, 1], got {n}, {density}")));
            }
            ctx.report.param("n", n).param("density", density);
            ctx.report.seed = Some(*seed);
            ctx.report.generator = Some("rand_chacha 0.9 ChaCha8Rng seed_from_u64(seed)".into());
            if ctx.dry_run {
                return Ok(());
            }
            let g = samples::random_connected_graph(*n, *density, *seed);
            ctx.emit_graph(out.as_deref(), &GraphJson::from_graph(&g))?;
        }
    }
    Ok(())
}

/// Reads the ground truth up front so that a dry run validates it.
fn read_truth(learn: &LearnOutputs) -> Result<Option<DMatrix<f64>>> {
    learn.truth.as_deref().map(io::read_matrix_csv).transpose()
}

fn finish_learn(ctx: &mut Ctx, learn: &LearnOutputs, truth: Option<DMatrix<f64>>, w: &DMatrix<f64>) -> Result<()> {
    ctx.emit_matrix_to(&learn.weights_out, w)?;
    if let Some(t) = truth {
        ctx.report.metric("mse_db", num(mse_db(w, &t)?));
    }
    Ok(())
}

fn learn(ctx: &mut Ctx, cmd: &LearnCmd) -> Result<()> {
    match cmd {
        LearnCmd::Lasso { obs, y, rho, max_iter, tol, out } => {
            let a = io::read_matrix_csv(obs)?;
            let y = io::read_vector_csv(y)?;
            let cfg = LassoConfig::new(*rho).with_max_iter(*max_iter).with_tol(*tol).tracked();
            cfg.validate()?;
            if a.nrows() != y.len() {
                return Err(Error::Dimension(format!("{} rows in A, {} entries in y", a.nrows(), y.len())));
            }
            ctx.report.param("rho", rho).param("max_iter", max_iter).param("tol", tol);
            if ctx.dry_run {
                return Ok(());
            }
            let sol = lasso_ista(&a, &y, &cfg)?;
            ctx.emit_vector(out.as_deref(), &sol.x)?;
            let support = sol.x.iter().filter(|v| **v != 0.0).count();
            ctx.report
                .metric("iterations", sol.iterations)
                .metric("alpha", num(sol.alpha))
                .metric("support_size", support)
                .metric("objective", nums(&sol.objective))
                .convergence("lasso", sol.converged);
            ctx.plot_series("objective", &sol.objective);
        }
        LearnCmd::Glasso { corr, rho, max_sweeps, eps, out, cov_out, learn } => {
            let r = io::read_matrix_csv(corr)?;
            let truth = read_truth(learn)?;
            if !r.is_square() {
                return Err(Error::Dimension(format!("correlation matrix is {}x{}", r.nrows(), r.ncols())));
            }
            let mut cfg = GlassoConfig::new(*rho);
            cfg.max_sweeps = *max_sweeps;
            cfg.eps = *eps;
            cfg.inner.rho = *rho;
            cfg.inner.validate()?;
            ctx.report.param("rho", rho).param("max_sweeps", max_sweeps).param("eps", eps);
            if ctx.dry_run {
                return Ok(());
            }
            let res = glasso(&r, &cfg)?;
            ctx.emit_matrix(out.as_deref(), &res.q)?;
            ctx.emit_matrix_to(cov_out, &res.v)?;
            ctx.report
                .metric("sweeps", res.sweeps)
                .metric("inner_max_iterations", res.inner_max_iterations)
                .convergence("glasso", res.converged);
            if learn.weights_out.is_some() || truth.is_some() {
                let w = precision_weights(&res.q)?;
                finish_learn(ctx, learn, truth, w.weights())?;
            }
        }
        LearnCmd::Precision { corr, rank_tol, normalized, out } => {
            let r = io::read_matrix_csv(corr)?;
            if !(*rank_tol > 0.0) {
                return Err(Error::InvalidInput(format!("rank_tol must be > 0, got {rank_tol}")));
            }
            ctx.report.param("rank_tol", rank_tol).param("normalized", normalized);
            if ctx.dry_run {
                return Ok(());
            }
            let est = precision_matrix(&r, *rank_tol)?;
            let q = if *normalized { normalize_precision(&est.q)? } else { est.q };
            ctx.emit_matrix(out.as_deref(), &q)?;
            ctx.report.metric("rank", est.rank).metric("rank_deficient", est.rank_deficient);
            if est.rank_deficient {
                ctx.report.warnings.push(format!("correlation matrix has rank {}; pseudo-inverse used", est.rank));
            }
        }
        LearnCmd::Regress { obs, rho, max_iter, tol, clamp_negative, magnitude, out, beta_out, learn } => {
            let x = read_obs(obs)?;
            let truth = read_truth(learn)?;
            let cfg = LassoConfig::new(*rho).with_max_iter(*max_iter).with_tol(*tol);
            cfg.validate()?;
            ctx.report
                .param("rho", rho)
                .param("max_iter", max_iter)
                .param("tol", tol)
                .param("clamp_negative", clamp_negative)
                .param("magnitude", magnitude);
            if ctx.dry_run {
                return Ok(());
            }
            let beta = neighborhood_regression(&x, &cfg)?;
            let g =
                if *magnitude { symmetrize_magnitude(&beta) } else { symmetrize_geometric(&beta, *clamp_negative)? };
            let l = combinatorial(&g)?;
            ctx.emit_matrix(out.as_deref(), l.matrix())?;
            ctx.emit_matrix_to(beta_out, beta.matrix())?;
            ctx.report.metric("edges", g.edges().len());
            finish_learn(ctx, learn, truth, g.weights())?;
        }
        LearnCmd::Smooth { obs, alpha, beta, iters, out, signals_out, learn } => {
            let x = read_obs(obs)?;
            let truth = read_truth(learn)?;
            if !(*alpha > 0.0) || !(*beta > 0.0) || *iters == 0 {
                return Err(Error::InvalidInput("alpha and beta must be > 0 and iters >= 1".into()));
            }
            ctx.report.param("alpha", alpha).param("beta", beta).param("iters", iters);
            if ctx.dry_run {
                return Ok(());
            }
            let res = smooth_learn(&x, *alpha, *beta, *iters)?;
            ctx.emit_matrix(out.as_deref(), res.laplacian.matrix())?;
            ctx.emit_matrix_to(signals_out, res.y.data())?;
            ctx.report.metric("objective", nums(&res.objective));
            ctx.plot_series("objective", &res.objective);
            finish_learn(ctx, learn, truth, &res.laplacian.to_weights())?;
        }
        LearnCmd::Polyfit { obs, corr, order, grid, center, out, learn } => {
            let r = match (obs, corr) {
                (Some(o), _) => correlation_matrix(&read_obs(o)?, *center),
                (None, Some(c)) => io::read_matrix_csv(c)?,
                (None, None) => return Err(Error::InvalidInput("--obs or --corr is required".into())),
            };
            let truth = read_truth(learn)?;
            let mut cfg = PolyFitConfig::new(*order);
            if let Some(gp) = grid {
                cfg.grid_points = *gp;
            }
            cfg.validate()?;
            ctx.report.param("order", order).param("grid_points", cfg.grid_points).param("center", center);
            if ctx.dry_run {
                return Ok(());
            }
            let fit = polynomial_fit_eigenvalues(&r, &cfg)?;
            ctx.emit_matrix(out.as_deref(), fit.laplacian.matrix())?;
            ctx.report
                .metric("eigenvalues", nums(fit.eigenvalues.as_slice()))
                .metric("xi", nums(&fit.xi))
                .metric("sparsity", num(fit.sparsity))
                .metric("candidates", fit.candidates)
                .metric("skipped_non_monotone", fit.skipped_non_monotone);
            ctx.plot_series("eigenvalue", fit.eigenvalues.as_slice());
            finish_learn(ctx, learn, truth, &fit.laplacian.to_weights())?;
        }
        LearnCmd::Sources { obs, sources, rho, out, learn } => {
            let x = io::read_matrix_csv(obs)?;
            let j = io::read_matrix_csv(sources)?;
            let truth = read_truth(learn)?;
            if x.shape() != j.shape() {
                return Err(Error::Dimension(format!(
                    "signals are {}x{}, sources {}x{}",
                    x.nrows(),
                    x.ncols(),
                    j.nrows(),
                    j.ncols()
                )));
            }
            ctx.report.param("rho", rho);
            if ctx.dry_run {
                return Ok(());
            }
            let res = learn_from_sources(&x, &j, *rho)?;
            ctx.emit_matrix(out.as_deref(), res.laplacian.matrix())?;
            ctx.report.metric("asymmetry", num(res.asymmetry)).metric("branch", res.branch);
            finish_learn(ctx, learn, truth, &res.laplacian.to_weights())?;
        }
    }
    Ok(())
}

fn solve(ctx: &mut Ctx, cmd: &SolveCmd) -> Result<()> {
    match cmd {
        SolveCmd::Circuit { graph, bc, sources, out } => {
            let g = read_graph(graph)?;
            let bc = read_pairs(bc, g.n())?;
            let src = sources.as_deref().map(|p| io::read_vector_csv(p).and_then(SourceVector::new)).transpose()?;
            ctx.report.param("graph", graph.display().to_string()).param("fixed", bc.len());
            if ctx.dry_run {
                return Ok(());
            }
            let x = circuit_solve(&combinatorial(&g)?, &bc, src.as_ref())?;
            ctx.emit_vector(out.as_deref(), &x)?;
            ctx.plot_series("voltage", x.as_slice());
        }
        SolveCmd::Absorb { graph, bc, out } => {
            let g = read_graph(graph)?;
            let bc = read_pairs(bc, g.n())?;
            ctx.report.param("graph", graph.display().to_string()).param("fixed", bc.len());
            if ctx.dry_run {
                return Ok(());
            }
            let x = absorbing_probabilities(&g, &bc)?;
            ctx.emit_vector(out.as_deref(), &x)?;
            ctx.plot_series("probability", x.as_slice());
        }
        SolveCmd::Hitting { graph, target, out } => {
            let g = read_graph(graph)?;
            check_vertex(*target, g.n(), "target")?;
            ctx.report.param("graph", graph.display().to_string()).param("target", target);
            if ctx.dry_run {
                return Ok(());
            }
            let h = hitting_times(&g, *target)?;
            ctx.emit_vector(out.as_deref(), &h)?;
            ctx.plot_series("hitting_time", h.as_slice());
        }
        SolveCmd::Commute { graph, out, resistance_out } => {
            let g = read_graph(graph)?;
            ctx.report.param("graph", graph.display().to_string());
            if ctx.dry_run {
                return Ok(());
            }
            let metric = ResistanceMetric::new(&g)?;
            let n = g.n();
            let ct = DMatrix::from_fn(n, n, |i, j| metric.commute_time(i, j));
            ctx.emit_matrix(out.as_deref(), &ct)?;
            let r = DMatrix::from_fn(n, n, |i, j| metric.resistance(i, j));
            ctx.emit_matrix_to(resistance_out, &r)?;
            ctx.report.metric("volume", num(metric.volume()));
        }
        SolveCmd::Pagerank { graph, tol, max_iter, damped, teleport, scale, out } => {
            let g = io::read_graph_json(graph)?.to_directed()?;
            if !(*tol > 0.0) || *max_iter == 0 {
                return Err(Error::InvalidInput("tol must be > 0 and max_iter >= 1".into()));
            }
            let damping = damped.then_some(Damping { teleport: *teleport, scale: *scale });
            ctx.report
                .param("graph", graph.display().to_string())
                .param("tol", tol)
                .param("max_iter", max_iter)
                .param("damping", damping);
            if ctx.dry_run {
                return Ok(());
            }
            let pr = pagerank(&g, damping, *tol, *max_iter)?;
            ctx.emit_vector(out.as_deref(), &pr.rank)?;
            ctx.report.metric("iterations", pr.iterations).convergence("pagerank", pr.converged);
            ctx.plot_series("rank", pr.rank.as_slice());
        }
        SolveCmd::Propagate { graph, labels, max_iter, tol, out } => {
            let g = read_graph(graph)?;
            let labels = read_pairs(labels, g.n())?;
            ctx.report.param("graph", graph.display().to_string()).param("max_iter", max_iter).param("tol", tol);
            if ctx.dry_run {
                return Ok(());
            }
            let res = label_propagation(&g, &labels, *max_iter, *tol)?;
            ctx.emit_vector(out.as_deref(), &res.scores)?;
            ctx.report.metric("iterations", res.iterations).convergence("propagation", res.converged);
            ctx.plot_series("score", res.scores.as_slice());
        }
        SolveCmd::Denoise { graph, signal, k, reference, out } => {
            let g = read_graph(graph)?;
            let y = io::read_vector_csv(signal)?;
            check_vertex(*reference, g.n(), "reference")?;
            if y.len() != g.n() {
                return Err(Error::Dimension(format!("{} samples for {} vertices", y.len(), g.n())));
            }
            ctx.report.param("graph", graph.display().to_string()).param("k", k).param("reference", reference);
            if ctx.dry_run {
                return Ok(());
            }
            let x = sparse_source_denoise(&combinatorial(&g)?, &y, *k, *reference)?;
            ctx.emit_vector(out.as_deref(), &x)?;
            ctx.plot_series("noisy", y.as_slice());
            ctx.plot_series("denoised", x.as_slice());
        }
        SolveCmd::Walk { graph, kind, out } => {
            let g = read_graph(graph)?;
            let walk: Option<WalkKind> = match kind.as_str() {
                "stationary" => None,
                other => Some(other.parse()?),
            };
            ctx.report.param("graph", graph.display().to_string()).param("kind", kind);
            if ctx.dry_run {
                return Ok(());
            }
            let x = match walk {
                Some(w) => walk_steady_state(&g, w)?,
                None => stationary_distribution(&g)?,
            };
            ctx.emit_vector(out.as_deref(), &x)?;
        }
    }
    Ok(())
}

fn lattice(ctx: &mut Ctx, cmd: &LatticeCmd) -> Result<()> {
    match cmd {
        LatticeCmd::Gdft { dims, values_out, vectors_out } => {
            let lat = Lattice::new(dims.clone())?;
            ctx.report.param("dims", dims);
            if ctx.dry_run {
                return Ok(());
            }
            let d = separable_gdft(&lat)?;
            if values_out.is_none() && vectors_out.is_none() {
                ctx.emit_vector(None, d.eigenvalues())?;
            } else {
                if let Some(p) = values_out {
                    ctx.emit_vector(Some(p), d.eigenvalues())?;
                }
                if let Some(p) = vectors_out {
                    ctx.emit_matrix(Some(p), d.eigenvectors())?;
                }
            }
            ctx.plot_series("eigenvalue", d.eigenvalues().as_slice());
        }
        LatticeCmd::Subsample { dims, graph, keep, out } => {
            let g = match graph {
                Some(p) => read_graph(p)?,
                None => kron_sum_adjacency(&Lattice::new(dims.clone())?)?,
            };
            let map = SamplingMap::new(keep.clone(), g.n())?;
            ctx.report.param("kept", map.kept());
            if ctx.dry_run {
                return Ok(());
            }
            let sub = subsample(&g, &map)?;
            ctx.emit_graph(out.as_deref(), &GraphJson::from_graph(&sub))?;
        }
        LatticeCmd::Separability { dims, signal } => {
            let lat = Lattice::new(dims.clone())?;
            let x = io::read_vector_csv(signal)?;
            ctx.report.param("dims", dims);
            if ctx.dry_run {
                return Ok(());
            }
            let s = separability_check(&x, &lat)?;
            let summary =
                serde_json::json!({ "is_rank1": s.is_rank1, "degenerate": s.degenerate, "ratio": num(s.ratio) });
            println!("{summary}");
            ctx.report.metric("is_rank1", s.is_rank1).metric("ratio", num(s.ratio));
        }
    }
    Ok(())
}

fn read_returns(args: &PortfolioArgs) -> Result<ReturnSeries> {
    match (&args.returns, &args.prices) {
        (Some(r), _) => ReturnSeries::new(io::read_matrix_csv(r)?),
        (None, Some(p)) => ReturnSeries::from_prices(&io::read_matrix_csv(p)?),
        (None, None) => Err(Error::InvalidInput("--returns or --prices is required".into())),
    }
}

fn leaf_select(s: &str) -> Result<LeafSelect> {
    match s {
        "size" | "largest_size" => Ok(LeafSelect::LargestSize),
        "volume" | "largest_volume" => Ok(LeafSelect::LargestVolume),
        other => Err(Error::InvalidInput(format!("unknown leaf selection {other:?} (size or volume)"))),
    }
}

/// Validates the shared portfolio arguments; returns the series and leaf rule.
fn portfolio_inputs(ctx: &mut Ctx, args: &PortfolioArgs) -> Result<(ReturnSeries, LeafSelect)> {
    let r = read_returns(args)?;
    let select = leaf_select(&args.select)?;
    if args.cuts + 1 > r.assets() {
        return Err(Error::InvalidInput(format!("{} cuts on {} assets (at most N-1)", args.cuts, r.assets())));
    }
    ctx.report.param("cuts", args.cuts).param("kind", args.kind).param("select", select);
    Ok((r, select))
}

fn cut_tree(ctx: &mut Ctx, r: &ReturnSeries, args: &PortfolioArgs, select: LeafSelect) -> Result<RepeatedCuts> {
    let g = market_graph(r)?;
    let cuts = repeated_cuts(&g, args.cuts, args.kind, select)?;
    ctx.report.warnings.extend(cuts.warnings.iter().cloned());
    ctx.report.metric("clusters", cuts.tree.leaf_sets());
    Ok(cuts)
}

fn portfolio(ctx: &mut Ctx, cmd: &PortfolioCmd) -> Result<()> {
    match cmd {
        PortfolioCmd::Cut { args, out } => {
            let (r, select) = portfolio_inputs(ctx, args)?;
            if ctx.dry_run {
                return Ok(());
            }
            let cuts = cut_tree(ctx, &r, args, select)?;
            let labels = DVector::from_iterator(r.assets(), cuts.tree.labels().into_iter().map(|l| l as f64));
            ctx.emit_vector(out.as_deref(), &labels)?;
        }
        PortfolioCmd::Allocate { args, scheme, out } => {
            let (r, select) = portfolio_inputs(ctx, args)?;
            ctx.report.param("scheme", scheme);
            if ctx.dry_run {
                return Ok(());
            }
            let cuts = cut_tree(ctx, &r, args, select)?;
            let w = allocate(&cuts.tree, *scheme)?;
            ctx.emit_vector(out.as_deref(), &w)?;
            ctx.plot_series("weight", w.as_slice());
        }
        PortfolioCmd::Backtest { args, scheme, train, annualize, out } => {
            let (r, select) = portfolio_inputs(ctx, args)?;
            let t = r.periods();
            let train = train.unwrap_or(t / 2);
            if train < 2 || t < train + 2 {
                return Err(Error::InvalidInput(format!(
                    "need at least 2 training and 2 test periods, got {train} of {t}"
                )));
            }
            ctx.report.param("scheme", scheme).param("train", train).param("annualize", annualize);
            if ctx.dry_run {
                return Ok(());
            }
            let fit = r.window(0, train)?;
            let test = r.window(train, t - train)?;
            let cuts = cut_tree(ctx, &fit, args, select)?;
            let n = r.assets();
            let mut strategies: Vec<(&str, DVector<f64>)> =
                vec![("graph", allocate(&cuts.tree, *scheme)?), ("equal", equal_weights(n))];
            match min_variance_weights(&fit.covariance()) {
                Ok(w) => strategies.push(("min_variance", w)),
                Err(e) => ctx.report.warnings.push(format!("minimum-variance portfolio skipped: {e}")),
            }
            let mut cols = Vec::new();
            for (name, w) in &strategies {
                let p = portfolio_returns(&test, w)?;
                let s =
                    sharpe(&test, w, *annualize).map(num).unwrap_or_else(|e| serde_json::Value::String(e.to_string()));
                ctx.report.metric(&format!("sharpe_{name}"), s);
                ctx.plot_series(name, p.as_slice());
                cols.push(p);
            }
            let m = DMatrix::from_columns(&cols);
            ctx.emit_matrix(out.as_deref(), &m)?;
            ctx.report.metric("columns", strategies.iter().map(|(s, _)| *s).collect::<Vec<_>>());
        }
    }
    Ok(())
}

fn metro(ctx: &mut Ctx, cmd: &MetroCmd) -> Result<()> {
    match cmd {
        MetroCmd::Centrality { graph, out } => {
            let g = read_graph(graph)?;
            ctx.report.param("graph", graph.display().to_string());
            if ctx.dry_run {
                return Ok(());
            }
            let b = betweenness(&g);
            let v = closeness_vitality(&g);
            ctx.emit_matrix(out.as_deref(), &DMatrix::from_columns(&[b.clone(), v.clone()]))?;
            ctx.report.metric("columns", ["betweenness", "closeness_vitality"]);
            ctx.plot_series("betweenness", b.as_slice());
            ctx.plot_series("closeness_vitality", v.as_slice());
        }
        MetroCmd::Population { graph, flows, k, out } => {
            let g = read_graph(graph)?;
            let q = FlowVector::new(io::read_vector_csv(flows)?)?;
            if q.len() != g.n() {
                return Err(Error::Dimension(format!("{} flows for {} stations", q.len(), g.n())));
            }
            if !(*k > 0.0) {
                return Err(Error::InvalidInput(format!("k must be > 0, got {k}")));
            }
            ctx.report.param("graph", graph.display().to_string()).param("k", k);
            if ctx.dry_run {
                return Ok(());
            }
            let phi = fick_population(&combinatorial(&g)?, &q, *k)?;
            ctx.emit_vector(out.as_deref(), &phi)?;
            ctx.plot_series("population", phi.as_slice());
        }
    }
    Ok(())
}

fn verify_cmd(ctx: &mut Ctx, args: &VerifyArgs) -> Result<i32> {
    if args.walks < 100 {
        return Err(Error::InvalidInput(format!("walks must be >= 100, got {}", args.walks)));
    }
    ctx.report.param("walks", args.walks);
    if ctx.dry_run {
        return Ok(0);
    }
    let checks = verify::run_all(args.walks);
    for c in &checks {
        println!("{} {}/{} ({:.3}s): {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.seconds, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    ctx.report.metric("checks", checks.len()).metric("failed", failed);
    if let Some(p) = &args.out {
        let body = serde_json::to_string_pretty(&checks).map_err(|e| Error::Parse(e.to_string()))? + "\n";
        io::atomic_write(p, body.as_bytes())?;
        ctx.report.outputs.push(p.display().to_string());
        set_primary(ctx, p);
    }
    Ok(if failed == 0 { 0 } else { 2 })
}

fn set_primary(ctx: &mut Ctx, p: &PathBuf) {
    if ctx.primary.is_none() {
        ctx.primary = Some(p.clone());
    }
}

//! Graph topology learning from vertex signals and solvers for physically defined graphs.
//!
//! Runnable examples (`cargo run --example <name>`):
//!
//! - `circuits`: resistor-network voltages and absorption probabilities
//! - `pagerank`: plain and damped link ranking
//! - `random_walks`: hitting and commute times, effective resistance, steady states
//! - `precision`: precision matrices and the graphical LASSO
//! - `lasso`: sparse recovery by iterative soft thresholding
//! - `topology_learning`: weights from diffusion data by four methods
//! - `signals`: the six random signal models
//! - `lattice`: separable Fourier basis, rank-1 test, subsampling
//! - `portfolio`: spectral cuts, cut-tree allocation, Sharpe ratios
//! - `metro`: station centralities and population from flows
//! - `label_propagation`: semi-supervised labels
//! - `denoise`: sparse-source denoising
//! - `swiss_roll`: kernel and similarity graphs
//!
//! The `graphtopo` binary exposes the same capabilities as file-driven subcommands; see [`cli`].

pub mod cli;
pub mod error;
pub mod geometric;
pub mod graph;
pub mod io;
pub mod lattice;
pub mod learning;
pub mod metro;
pub mod physical;
pub mod portfolio;
pub mod report;
pub mod samples;
pub mod simulate;
pub mod sparse;
pub mod spectral;
pub mod verify;

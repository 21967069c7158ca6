//! Discrete toolkit for Kohn-Nirenberg operators, Gabor channel matrices and
//! diagonal-based symbol reconstruction on periodic grids.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod ofdm;
pub mod psido;
pub mod reconstruction;
pub mod tf;
pub mod uniqueness;

pub use error::{Error, Result};
pub use fourier::{convolve2d, fourier, fourier2d, Direction};
pub use grid::{BandBox, PlaneGrid, SampledSignal, SampledSymbol, SignalDomain, SymbolDomain, TimeGrid};
pub use tf::{rihaczek, star_involution, stft, tf_shift, u_swap, Window, WindowKind};
pub use psido::{apply_spreading, apply_symbol, kn_bilinear, point_scatterer, point_scatterers, synth_bandlimited, ExactShift, KnOperator, Smoothness};
pub use channel::{
    build_lattice, channel_matrix, diag_direct, diag_via_convolution, frame_bounds, gabor_atom, gram_matrix, ChannelMatrix,
    FrameBounds, GaborLattice, Truncation,
};
pub use reconstruction::{
    build_bump, build_kernel, calibrate, evaluate, q_box, q_eps, reconstruct_frequency, reconstruct_time, sinc_lattice,
    BumpFunction, BumpProfile, Evaluation, ReconstructionKernel,
};
pub use uniqueness::{assemble_map, diagonal_obstruction_svd, full_injectivity_svd, invert, Obstruction, SymbolToMatrixMap};
pub use ofdm::{
    demodulate, equalize, estimate_diagonal_from_pilots, modulate, run_pipeline, transmit, Alphabet, Equalizer, PilotLayout,
    ReceiveReport, ReceiveSummary, TransmitFrame,
};
pub use config::{load_config, parse_config, Command, ScenarioConfig};
pub use cli::{resolve_output_dir, run, RunOptions, RunOutcome};

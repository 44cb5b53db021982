//! Feynman chessboard propagator on a 1+1 dimensional lattice, computed
//! exactly and rebuilt stochastically from the entwined loops of chessboard
//! paths and their orthogonal twins.

pub mod analysis;
pub mod cone;
pub mod error;
pub mod kernel;
pub mod montecarlo;
pub mod path;
pub mod twin;

pub use error::{Error, Result};
pub use kernel::{
    complex_kernel, count_paths, enumerate_kernel, kernel_table, phi_components, signed_kernel,
    Convention, KernelCell, KernelParams, KernelTable,
};
pub use montecarlo::{
    deposit, expected_lattice, merge, run, sample_path, ChargeLattice, ExpectedLattice,
    SimConfig, SimMetadata,
};
pub use path::{Direction, Leg, LegSeq, Path, Site};
pub use twin::{
    entwine, extend_even, feynman_color, meeting_points, orthogonal_twin, Channel, EntwinedLoop,
    Move, TimeDir,
};

//! Classical and quantum polarization of two-mode light.
//!
//! States are stored block-diagonally over photon-number layers; each layer
//! of `N = 2S` photons carries a spin-`S` density matrix in the basis
//! `|S, m>`, `m = S, S-1, ..., -S`.

pub mod angular;
pub mod classical;
pub mod degrees;
pub mod error;
pub mod io;
pub mod linalg;
pub mod majorana;
pub mod multipoles;
pub mod optim;
pub mod phase_space;
pub mod states;
pub mod stokes;
pub mod tomography;
pub mod transforms;

pub use angular::{Direction, HalfSpin};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use states::{LayerState, PolarizationSector, SectorLayer};

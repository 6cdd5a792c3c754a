//! Spectra and two-photon interference of a pulse-controlled two-level emitter
//! coupled to a photon continuum.
//!
//! Engines:
//! - [`heisenberg`]: analytic mode-resolved photon numbers on a discretized bath.
//! - [`master`]: Lindblad dynamics with quantum regression, numeric and closed form.
//! - [`oracle`]: exact wavefunction propagation in a truncated Fock basis.

pub mod analysis;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod heisenberg;
pub mod master;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod quadrature;
pub mod tpi;

pub use error::{Error, Result};
pub use model::{
    decompose_interval, discretize_bath, make_cp, make_pdd, make_udd, EmitterParams, EngineTag, FrequencyGrid,
    PhotonBathSpec, PulseIntervalDecomposition, PulseSequence, SequenceKind, Spectrum,
};

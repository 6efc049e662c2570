//! Thermodynamic formalism for topological Markov shifts and the spectra of
//! weighted shift operators.
//!
//! The crate is organised bottom-up:
//!
//! - [`sft`]: transition matrices, state classification, irreducible blocks, sink cycles.
//! - [`potentials`]: locally constant functions on admissible words.
//! - [`perron`] and [`ruelle`]: transfer matrices, Perron roots with Collatz–Wielandt
//!   enclosures, pressure, eigendata and Gibbs measures.
//! - [`measures`]: Markov measures, entropy, the variational search and t-entropy.
//! - [`spectra`]: spectral radius and spectrum shape of weighted shifts on shift spaces.
//! - [`treelab`]: weighted shifts on directed trees, predicted spectra and a
//!   finite-section pseudospectrum lab.

pub mod config;
pub mod error;
pub mod graph;
pub mod measures;
pub mod perron;
pub mod potentials;
pub mod ruelle;
pub mod sft;
pub mod spectra;
pub mod treelab;

pub use error::{Error, Result};
pub use measures::MarkovMeasure;
pub use perron::{PerronData, RadiusEnclosure};
pub use potentials::{CylinderFunction, ValueKind};
pub use ruelle::{BlockPresentation, TransferMatrix};
pub use sft::{TransitionMatrix, Word};
pub use spectra::SpectrumDescription;
pub use treelab::TreeSystem;

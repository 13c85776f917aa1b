//! Clock stability analysis: jitter and Allan deviation from phase-noise
//! spectra, time-domain noise synthesis, an all-digital PLL model and a
//! feasibility evaluator for reference-clock candidates.

pub mod adpll_sim;
pub mod error;
pub mod feasibility;
pub mod noise_synth;
pub mod pn_profile;
mod quadrature;
pub mod spectral_jitter;

pub use error::{Error, Result};
pub use pn_profile::{PnAnchor, PnProfile, PowerLawTerm, Spectrum};

//! Rate-distortion tooling for a two-receiver lossy source coding network
//! with receiver side information: both receivers reproduce one source
//! component losslessly, receiver 1 additionally reproduces the other
//! component to within a distortion budget, and the encoder talks over one
//! common and two private rate-limited links.
//!
//! The crate evaluates the network's single-letter rate bounds for a fixed
//! auxiliary channel ([`region`]), searches channels to trace achievable
//! frontiers ([`search`]), re-derives the achievable region by exact-rational
//! Fourier-Motzkin projection of the coding scheme's constraint system
//! ([`fme`]), and Monte-Carlo simulates the double-binning random coding
//! scheme at finite block length ([`sim`]). [`corpus`] ships the binary
//! examples whose frontiers the claim verifiers reproduce.

pub mod aux;
pub mod corpus;
mod error;
pub mod fme;
pub mod pmf;
pub mod region;
pub mod search;
pub mod sim;
pub mod srcjson;
pub mod testutil;

pub use error::Error;

/// Formats a float with 17 significant digits, enough for a lossless
/// round-trip through text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

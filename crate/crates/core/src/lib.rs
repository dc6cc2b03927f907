//! OTFS-NOMA downlink link simulator with fractional-Doppler inter-Doppler
//! interference.
//!
//! The pipeline is `config` → `channel` (DD channel draws and their
//! eigen-spectra) → `equalizer` (spectral MMSE and detection SNRs) → `noma`
//! (power allocation and rates) → `simkit` (Monte Carlo sweeps). `validate`
//! holds the oracle suite and `cli` the subcommands of `ddlink-sim`.

pub mod channel;
pub mod cli;
pub mod config;
pub mod ddgrid;
pub mod equalizer;
pub mod error;
pub mod noma;
pub mod simkit;
pub mod validate;

pub use config::SystemConfig;
pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;

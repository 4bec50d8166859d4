//! Construction, analysis and CCZ-equivalence classification of APN functions
//! over binary finite fields GF(2^n), 2 <= n <= 16.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] - arithmetic in GF(2^n) with an explicit, validated modulus;
//! * [`vbf`] - vectorial Boolean functions as lookup tables, ANF, EA moves;
//! * [`analysis`] - differential/Walsh spectra, ortho-derivatives, ranks;
//! * [`families`] - generators for the known infinite APN families;
//! * [`equiv`] - exact CCZ-equivalence decisions with replayable witnesses;
//! * [`expr`] - a small expression syntax for functions given on the command line;
//! * [`atlas`] - the classification pipeline, cache, emitters and CLI.

pub mod analysis;
pub mod atlas;
pub mod equiv;
pub mod expr;
pub mod families;
pub mod field;
pub mod vbf;

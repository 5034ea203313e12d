//! Reference oracles: independent implementations of every derived
//! cryptographic value, used to cross-check the production code. Nothing in
//! this tree calls into `ectunnel`'s crypto modules.

pub mod gcm;
pub mod ladder;
pub mod sha256;
pub mod srp;

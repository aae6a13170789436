//! Event networks for exploring open information.
//!
//! A timestamped corpus is cut into time slices and clustered into a two-level
//! tree of document events ([`eventdetect`]). Entity mentions and typed
//! relations are extracted per event ([`extract`]) and merged into frame-based
//! event networks ([`netmodel`]), which the [`analyze`] module filters,
//! tracks through time and queries as social networks.

pub mod analyze;
pub mod corpus;
pub mod eventdetect;
pub mod extract;
pub mod learn;
pub mod netmodel;
pub mod pipeline;
pub mod synth;

pub(crate) mod timefmt;

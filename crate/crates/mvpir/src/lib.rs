//! Matching-vector private information retrieval.
//!
//! A user fetches one symbol of a database replicated across a few
//! non-communicating servers while each server's view stays statistically
//! independent of the queried index. The database lives as a sparse
//! polynomial over the group ring `Z_m[γ]/(γ^m − 1)` with exponents drawn
//! from a matching-vector family; queries are points on a random
//! multiplicative line, and answers are ring evaluations of the polynomial
//! and its derivative-like operators, so the traffic grows with the vector
//! dimension `k`, never with the database length.
//!
//! The crate bundles the exact ring/matrix arithmetic, family generation
//! and validation, the two-server and `2^{r−1}`-server protocol variants, a
//! TCP client/server pair with a bit-exact wire format, an exhaustive
//! privacy audit, and a communication-cost benchmark harness.

pub mod audit;
pub mod baseline;
pub mod bench;
pub mod encode;
pub mod family;
pub mod lambda;
pub mod matrix;
pub mod net;
pub mod poly;
pub mod ring;
pub mod scheme;
pub mod selftest;
pub mod wire;

pub use encode::{AnswerBundle, EncodedDatabase};
pub use family::MvFamily;
pub use matrix::RingMatrix;
pub use net::{retrieve, serve, CostReport, PirServer};
pub use poly::RingPoly;
pub use ring::{RingElem, Zm};
pub use scheme::{Scheme, SchemeConfig, Variant};

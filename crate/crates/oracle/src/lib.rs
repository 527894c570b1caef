//! Naive reference implementations used as independent oracles in tests.
//!
//! Everything here favors the most literal, brute-force formulation over
//! speed, and deliberately shares no code with `gaffe-core`: the point is
//! that two independently written paths agree. Definitional conventions
//! (sampling geometry, bilinear lerp form, plane extraction order) follow
//! the same written definitions as the main crate.

pub mod conv;
pub mod eig;
pub mod fisher;
pub mod lbp;
pub mod phog;
pub mod qp;
pub mod sift;

//! Planar two-zone piecewise-linear Filippov systems near a global center.

pub mod ect;
pub mod error;
pub mod examples;
pub mod flow;
pub mod infinity;
pub mod io;
pub mod linalg;
pub mod melnikov;
pub mod numerics;
pub mod roots;
pub mod sigma;
pub mod simulate;
pub mod sliding;
pub mod svg;
pub mod system;
pub mod verify;

pub use error::{Error, Result, Side};
pub use linalg::{AffineField, Mat2, Vec2};
pub use system::{CanonicalParams, PwlSystem};

//! Touch sensing from wrist-light finger shadows.
//!
//! A low, lateral point light casts finger shadows onto the surface. The
//! on-surface gap between a fingertip and its shadow grows several times
//! faster than the fingertip's hover height, so thresholding that gap
//! resolves contact far better than the fingertip image alone.
//!
//! The crate covers the whole chain: [`geometry`] models the optics,
//! [`synthkit`] simulates traces and frames, [`shadowsense`] extracts
//! per-finger observations from frames, [`touchfsm`] turns them into touch
//! events, [`gesture`] recognizes taps, swipes and pinches, and [`harness`]
//! holds configuration, evaluation and the command line.

pub mod geometry;
pub mod gesture;
pub mod hand;
pub mod harness;
pub mod shadowsense;
pub mod synthkit;
pub mod textio;
pub mod touchfsm;

pub use geometry::{SceneConfig, Vec2, Vec3};
pub use hand::{Direction, FingerId};

//! Desk-scale simulator for semantic delivery of tiled 360-degree video.
//!
//! The server side analyses each field-of-view tile into a static
//! environment frame plus per-frame dynamic objects (behaviors) located by a
//! semantic location graph, sends the environment once and only a subset of
//! behavior frames, and the user side interpolates and stitches the rest.
//! Two baselines are simulated alongside: whole-frame analog delivery with
//! pixel interpolation, and a conventional bit-exact pixel stream over BPSK.
//!
//! Module map:
//! - [`scene`]: procedural ground-truth content, rendering, oracle segmentation.
//! - [`slg`]: semantic location graphs, relations, static/dynamic classification.
//! - [`codec`]: payload types, quantization, frame selection, bit accounting.
//! - [`channel`]: power normalization, AWGN, analog and BPSK links.
//! - [`reconstruct`]: receiver-side interpolation, compositing, FOV assembly.
//! - [`protocol`]: session state machine, knowledge bases, packets, sessions.
//! - [`harness`]: PSNR, time saved, sweeps and report export.

pub mod channel;
pub mod codec;
mod error;
pub mod harness;
pub mod parallel;
pub mod protocol;
pub mod rational;
pub mod reconstruct;
pub mod scene;
pub mod seed;
pub mod slg;
mod wire;

pub use error::{Error, Result};
pub use rational::{Point, Rational};

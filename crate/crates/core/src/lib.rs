//! Collaborative foveated rendering: a client GPU renders the gaze-centred fovea
//! while a server renders and streams the reduced-resolution periphery. This
//! crate models layer sizing, latency prediction, the per-frame workload
//! controller, composition with timewarp, the network, and the frame pipeline.

pub mod channel;
pub mod error;
pub mod foveation;
pub mod liwc;
pub mod perfmodel;
pub mod pipeline;
pub mod uca;

pub use error::{Error, Result};

//! Self-guided quantum generative adversarial learning.
//!
//! A generator prepares a guess state, a fixed Hong-Ou-Mandel measurement
//! reports how similar it is to an unknown true state, and SPSA turns those
//! similarity readings into updates. The same loop learns single-qubit
//! states, characterizes unitary wave-plate processes and estimates many
//! phases at once on frequency-bin entangled photons.

pub mod config;
pub mod error;
pub mod interference;
pub mod learner;
pub mod multiphase;
pub mod process;
pub mod quantum;
pub mod runner;
pub mod spsa;

pub use error::{Error, Result};
pub use interference::{HomMeasurementModel, MeasurementMode};
pub use learner::{learn, StateLearningTask, Trajectory};
pub use multiphase::{estimate, PhaseEstimationTask, PhaseScene, SceneSource};
pub use process::{characterize, BlackBoxProcess, ProcessMap};
pub use quantum::{JonesUnitary, PureState};
pub use spsa::GainSchedule;

//! Directional 28 GHz small-scale fading toolkit.
//!
//! * [`channel`]: tap-delay-line types, antenna patterns, the Rayleigh /
//!   Rician / lognormal envelope laws, the exponential spatial
//!   autocorrelation model, and the bundled environment presets.
//! * [`synthesis`]: seeded generation of omni and directional impulse
//!   responses and of spatially correlated Rician PDP tracks.
//! * [`analysis`]: delay binning, fading-sample extraction, distribution
//!   fitting, spatial autocorrelation estimation and model fitting.
//! * [`persistence`]: track, preset, report, and plot-data file formats.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod persistence;
pub mod rng;
pub mod synthesis;

pub use channel::{
    AngleVector, AntennaPattern, AutocorrModel, ChannelImpulseResponse, CirKind, Environment,
    FadingPreset, LognormalParams, MultipathComponent, Polarization, RayleighParams,
    RicianParams, SpatialTrackPdp, TrackGeometry, TrackLabels,
};
pub use error::{AnalysisError, ChannelError, PersistenceError, SynthesisError};

//! The two evaluation tasks: per-event pitch estimation and gap imputation,
//! plus synthetic excerpts to run them on.

mod gaps;
mod pitch;
pub mod synth;

pub use gaps::{fill_gaps, GapFill, GapFillResult, GapSpec, GapSummary};
pub use pitch::{
    estimate_pitch, estimate_pitch_with, hz_to_midi, EventConfig, PitchEstimate, PitchOptions,
    PitchResult,
};

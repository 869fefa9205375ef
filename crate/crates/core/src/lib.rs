//! Data-driven output-feedback stabilization of continuous-time LTI
//! systems from a single input/output record.
//!
//! The input and output are passed through a Kreisselmeier filter bank;
//! the Gram matrix of the filtered signal separates excited from
//! unexcited directions; a semidefinite feasibility problem over sampled
//! batches of the excited part yields a static gain on the filter state.

pub mod campaign;
pub mod decomposition;
pub mod kfilter;
pub mod linalg;
pub mod lmi;
pub mod plant;
pub mod sdp;
pub mod simulation;
pub mod synthesis;

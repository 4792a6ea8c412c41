//! Rotation-number arithmetic: digit streams, Brjuno profiles, the
//! bi-sequence and good-level sets.

pub mod bisequence;
pub mod profile;
pub mod rotation;

pub use bisequence::{bisequence, bisequence_from_profile, good_levels, BiSequenceTable};
pub use profile::{brjuno_profile, closest_returns, BrjunoProfile, QCheck};
pub use rotation::{expand_cf, guard_band, is_high_type, preset, synthesize_alpha, Digit, DigitRule, HighType, RotationNumber};

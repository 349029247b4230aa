//! Fixtures shared by the benchmarks.

use herald_core::{BsAngle, HeraldSpec, Numerics, SqueezeParam};

/// Squeezing values spanning the default sweep range.
pub const SQUEEZING: [f64; 3] = [0.3, 0.9, 1.5];

pub fn squeezing(r: f64) -> SqueezeParam {
    SqueezeParam::new(r).expect("benchmark squeezing is non-negative")
}

pub fn angle(t: f64) -> BsAngle {
    BsAngle::from_transmittance(t).expect("benchmark transmittance is in [0, 1]")
}

/// Upper-arm single-photon catalysis.
pub fn catalysis(t: f64) -> HeraldSpec {
    HeraldSpec::noop().with_upper(1, 1, angle(t))
}

/// Premixed single-photon addition with both arms at `t`.
pub fn premixed_addition(t: f64) -> HeraldSpec {
    HeraldSpec::premixed_addition(angle(t))
}

pub fn numerics() -> Numerics {
    Numerics::default()
}

//! Canonical parameter sets used by the examples, docs and tests.

use crate::model::{CloudParams, DiffusionParams};
use crate::scalar::Real;

/// Pattern-forming 1D setup: quadratic accretion, strong cloud-water
/// diffusion (`c = 5`, `a1 = a2 = 1`, `d = 0.1`, `D1 = 1000`, `D2 = 0.1`),
/// domain length 50.
pub fn pattern_1d<T: Real>() -> (CloudParams<T>, DiffusionParams<T>) {
    (
        CloudParams::new(
            T::of(5.0),
            T::of(1.0),
            T::of(1.0),
            T::of(1.0),
            T::of(2.0),
            T::of(2.0),
            T::of(1.0),
            T::of(0.1),
            T::zero(),
        )
        .expect("preset is valid"),
        DiffusionParams::new(T::of(1000.0), T::of(0.1)).expect("preset is valid"),
    )
}

/// Pattern-forming 2D setup: as [`pattern_1d`] with `d = 0.13`,
/// `D1 = 100`, `D2 = 0.025`.
pub fn pattern_2d<T: Real>() -> (CloudParams<T>, DiffusionParams<T>) {
    (
        CloudParams::new(
            T::of(5.0),
            T::of(1.0),
            T::of(1.0),
            T::of(1.0),
            T::of(2.0),
            T::of(2.0),
            T::of(1.0),
            T::of(0.13),
            T::zero(),
        )
        .expect("preset is valid"),
        DiffusionParams::new(T::of(100.0), T::of(0.025)).expect("preset is valid"),
    )
}

/// A scheme from the linear-collision class (`gamma = beta_c = 1`,
/// `beta_r <= zeta`), which has a stable non-trivial equilibrium that no
/// diffusion pair can destabilize.
pub fn linear_collision<T: Real>() -> (CloudParams<T>, DiffusionParams<T>) {
    (
        CloudParams::new(
            T::of(5.0),
            T::of(1.0),
            T::of(1.0),
            T::of(1.0),
            T::of(1.0),
            T::of(0.875),
            T::of(1.125),
            T::of(0.1),
            T::zero(),
        )
        .expect("preset is valid"),
        DiffusionParams::new(T::of(1000.0), T::of(0.1)).expect("preset is valid"),
    )
}

//! Exact real arithmetic on the interval [-1, 1].
//!
//! A real number is represented as an infinite stream of digits `L`, `R`, `M`,
//! each standing for a contractive Möbius map on [-1, 1]. Composing the first
//! `k` digit maps and taking the image of [-1, 1] yields a shrinking rational
//! enclosure of the represented value; the enclosure width is at most
//! `2/(k+1)`, so every finite prefix is a certified approximation.
//!
//! Arithmetic is performed lazily on these streams:
//!
//! * [`homographic`] applies a Möbius map `x ↦ (ax+b)/(cx+d)` to a stream,
//! * [`quadratic`] applies a two-argument map `(x,y) ↦ (axy+bx+cy+d)/(exy+fx+gy+h)`
//!   to a pair of streams, which covers the field operations.
//!
//! Both transformers work on exact rational coefficients, absorb input digits
//! until the current map provably fits inside a digit's range, and then emit
//! that digit. Emission is governed by a [`FuelPolicy`]: either a hard cap on
//! absorptions per emitted digit, or an analytic per-map bound that is valid
//! whenever the map keeps [-1, 1] inside itself.
//!
//! The crate is `no_std` (with `alloc`); the companion CLI crate carries the
//! expression parser and text output.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod digits;
pub mod homographic;
pub mod lft;
pub mod qarith;
pub mod quadratic;
pub mod reals;
pub mod stream;

pub use digits::{redundancy, select_digit, Digit, OutOfUnitInterval};
pub use homographic::{
    homographic, homographic_instrumented, EmitStep, FuelMode, FuelPolicy, Instrumentation,
    RunStats,
};
pub use lft::{LftError, Mobius, Tensor};
pub use qarith::{Interval, Rational};
pub use quadratic::{quadratic, quadratic_instrumented, FieldOp, QEmitStep};
pub use reals::{
    bounds_at, compare_to_eps, decode_approx, decode_to_eps, encode, Approximation, StreamOrder,
};
pub use stream::{DigitStream, NonProductive, Stalled, StreamParseError};

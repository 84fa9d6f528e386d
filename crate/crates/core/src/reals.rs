//! Reading values out of digit streams and writing rationals into them.
//!
//! A digit stream denotes the single point in the nested intersection of
//! its prefix images. Truncating after `k` digits and applying the composed
//! prefix map to `[-1, 1]` yields a certified enclosure of width at most
//! `2 / (k + 1)` — decoding is choosing `k` from a precision target.
//! Encoding runs the other way: repeatedly pick a digit whose image holds
//! the rational and peel it off with the digit's inverse.

use alloc::boxed::Box;

use num_bigint::BigInt;

use crate::digits::{select_digit, Digit, OutOfUnitInterval};
use crate::lft::ZMobius;
use crate::qarith::{Interval, Rational};
use crate::stream::{DigitStream, Generator, NonProductive};

/// A certified enclosure read from a stream prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approximation {
    pub bounds: Interval,
    /// Number of digits consumed to obtain `bounds`.
    pub depth: usize,
}

impl Approximation {
    pub fn midpoint(&self) -> Rational {
        self.bounds.midpoint()
    }

    /// Half the enclosure width: the worst-case error of `midpoint()`.
    pub fn half_width(&self) -> Rational {
        self.bounds.width() / Rational::from(2)
    }

    /// The guarantee every decode must deliver: the enclosure sits inside
    /// `[-1, 1]` and is no wider than `2 / (depth + 1)`.
    pub fn is_certified(&self) -> bool {
        let budget = Rational::new(BigInt::from(2), BigInt::from(self.depth) + 1);
        self.bounds.is_subset_of(&Interval::unit()) && self.bounds.width() <= budget
    }
}

/// The image of `[-1, 1]` under the first `depth` digits of `stream`:
/// hard bounds on the stream's value. Depth zero yields `[-1, 1]`.
pub fn bounds_at(stream: &DigitStream, depth: usize) -> Result<Interval, NonProductive> {
    let mut acc = ZMobius::identity();
    let mut cur = stream.clone();
    for _ in 0..depth {
        let (digit, rest) = cur.next()?;
        acc = acc.absorb(digit);
        acc.shrink();
        cur = rest;
    }
    Ok(acc.image())
}

pub fn decode_approx(stream: &DigitStream, depth: usize) -> Result<Approximation, NonProductive> {
    Ok(Approximation {
        bounds: bounds_at(stream, depth)?,
        depth,
    })
}

/// The smallest depth whose width guarantee `2 / (depth + 1)` is at most
/// `eps`. Panics on a non-positive `eps`; saturates at `usize::MAX` for
/// astronomically small ones.
pub fn depth_for_eps(eps: &Rational) -> usize {
    assert!(eps.is_positive(), "precision target must be positive");
    let digits = (Rational::from(2) / eps.clone()).ceil_int() - BigInt::from(1);
    if digits.sign() == num_bigint::Sign::Minus {
        return 0;
    }
    usize::try_from(&digits).unwrap_or(usize::MAX)
}

/// Decode with an enclosure of width at most `eps`.
pub fn decode_to_eps(stream: &DigitStream, eps: &Rational) -> Result<Approximation, NonProductive> {
    decode_approx(stream, depth_for_eps(eps))
}

struct EncodeGen {
    value: Rational,
}

impl Generator for EncodeGen {
    fn step(&self) -> Result<(Digit, DigitStream), NonProductive> {
        let digit = select_digit(&self.value).expect("encoder state stays inside [-1, 1]");
        let value = digit
            .inverse_matrix()
            .apply(&self.value)
            .expect("digit inverses have no pole on the digit's own image");
        Ok((digit, DigitStream::from_generator(Box::new(EncodeGen { value }))))
    }
}

/// The digit stream of a rational in `[-1, 1]`.
///
/// Digit choice is deterministic (ties go to `M`), so equal rationals get
/// identical streams: `0` becomes `(M)*`, `-1` becomes `(L)*`, `1/3`
/// becomes `M(R)*`.
pub fn encode(value: &Rational) -> Result<DigitStream, OutOfUnitInterval> {
    select_digit(value)?;
    Ok(DigitStream::from_generator(Box::new(EncodeGen {
        value: value.clone(),
    })))
}

/// Verdict of an approximate comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamOrder {
    Less,
    Greater,
    /// The `eps`-enclosures intersect: the values are within roughly `eps`
    /// of each other, and equality is not decidable from streams.
    Overlapping,
}

/// Compare two stream values to tolerance `eps`: decode both to width
/// `eps / 2` and order the enclosures if they are disjoint.
pub fn compare_to_eps(
    a: &DigitStream,
    b: &DigitStream,
    eps: &Rational,
) -> Result<StreamOrder, NonProductive> {
    let half = eps.clone() / Rational::from(2);
    let ia = decode_to_eps(a, &half)?.bounds;
    let ib = decode_to_eps(b, &half)?.bounds;
    if ia.hi() < ib.lo() {
        Ok(StreamOrder::Less)
    } else if ib.hi() < ia.lo() {
        Ok(StreamOrder::Greater)
    } else {
        Ok(StreamOrder::Overlapping)
    }
}

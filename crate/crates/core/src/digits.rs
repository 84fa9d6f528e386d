//! The digit alphabet.
//!
//! A digit names one of three Möbius maps on [-1, 1]:
//!
//! ```text
//! L(x) = (x-1)/(x+3)   image [-1, 0]
//! R(x) = (x+1)/(3-x)   image [0, 1]
//! M(x) = x/3           image [-1/3, 1/3]
//! ```
//!
//! The three images cover [-1, 1] and pairwise overlap; the smallest gap
//! between distinct endpoints of different digit images is 1/3 (see
//! [`redundancy`]), which is what lets a stream transformer commit to an
//! output digit after absorbing only finitely many input digits.

use core::fmt;

use crate::lft::Mobius;
use crate::qarith::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Digit {
    L,
    R,
    M,
}

impl Digit {
    pub const ALL: [Digit; 3] = [Digit::L, Digit::R, Digit::M];

    /// The Möbius map this digit stands for, with exact coefficients.
    pub fn matrix(self) -> Mobius {
        let h = |n: i64| Rational::new(n, 2);
        match self {
            Digit::L => Mobius::new(h(1), h(-1), h(1), h(3)),
            Digit::R => Mobius::new(h(1), h(1), h(-1), h(3)),
            Digit::M => Mobius::new(
                Rational::one(),
                Rational::zero(),
                Rational::zero(),
                Rational::integer(3),
            ),
        }
    }

    /// Adjugate-based inverse of [`Digit::matrix`]; used to peel a digit off
    /// the front of a stream.
    pub fn inverse_matrix(self) -> Mobius {
        self.matrix()
            .inverse()
            .expect("digit matrices have nonzero determinant")
    }

    pub fn as_char(self) -> char {
        match self {
            Digit::L => 'L',
            Digit::R => 'R',
            Digit::M => 'M',
        }
    }

    pub fn from_char(c: char) -> Option<Digit> {
        match c {
            'L' => Some(Digit::L),
            'R' => Some(Digit::R),
            'M' => Some(Digit::M),
            _ => None,
        }
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A rational that was asked to play the role of a value in [-1, 1] but lies
/// outside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutOfUnitInterval(pub Rational);

impl fmt::Display for OutOfUnitInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} lies outside [-1, 1]", self.0)
    }
}

/// Smallest distance between distinct endpoints of different digit images,
/// computed by enumerating all ordered digit pairs. The overlap this measures
/// is the slack available to the emission test.
pub fn redundancy() -> Rational {
    let minus_one = Rational::integer(-1);
    let one = Rational::integer(1);
    let mut best: Option<Rational> = None;
    for i in Digit::ALL {
        for j in Digit::ALL {
            let left = i
                .matrix()
                .apply(&minus_one)
                .expect("digit maps are defined on all of [-1, 1]");
            let right = j
                .matrix()
                .apply(&one)
                .expect("digit maps are defined on all of [-1, 1]");
            if left != right {
                let gap = (left - right).abs();
                best = Some(match best {
                    Some(b) => b.min(gap),
                    None => gap,
                });
            }
        }
    }
    best.expect("digit endpoints are not all equal")
}

/// Picks a digit whose image contains `q`. Ties at |q| = 1/3 go to `M`, so
/// encoding 0 yields the all-`M` stream.
pub fn select_digit(q: &Rational) -> Result<Digit, OutOfUnitInterval> {
    let third = Rational::new(1, 3);
    if q.abs() > Rational::one() {
        Err(OutOfUnitInterval(q.clone()))
    } else if q.abs() <= third {
        Ok(Digit::M)
    } else if q.is_negative() {
        Ok(Digit::L)
    } else {
        Ok(Digit::R)
    }
}

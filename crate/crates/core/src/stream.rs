//! Lazy, possibly-infinite streams of digits.
//!
//! A [`DigitStream`] is a pull interface: `next()` yields the head digit and
//! the tail stream. Streams are immutable values; cloning shares structure.
//! Three node kinds exist: an explicit cons cell, an eventually-periodic
//! literal (`prefix` + nonempty repeating `cycle`), and a generator — a
//! deferred computation (an encoder or a stream transformer) whose single
//! step is memoized the first time it is forced.
//!
//! Pulling can fail: a transformer may exhaust its absorption budget without
//! being able to emit, reported as [`NonProductive`]. The failure is memoized
//! like a digit would be, so re-pulling the same node is deterministic.
//!
//! Concurrency: streams are `Send + Sync`. The memo cell is a lock-free
//! once-cell; racing pulls may duplicate a (pure) step computation but all
//! observers see the single stored result. Absorption statistics are exact
//! under single-threaded pulling and best-effort under races.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use once_cell::race::OnceBox;

use crate::digits::Digit;
use crate::lft::{Mobius, Tensor};

/// A stream transformer ran out of absorption budget without emitting.
///
/// Carries the state the search stalled on: the number of absorptions
/// performed in the failing step and the current coefficient matrix (an
/// integer-scaled representative). `label`, when present, names the
/// subexpression that built the transformer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonProductive {
    pub absorbed: usize,
    pub stalled: Stalled,
    pub label: Option<Arc<str>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stalled {
    Homographic(Mobius),
    Quadratic(Tensor),
}

impl fmt::Display for NonProductive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no digit emitted after {} absorptions", self.absorbed)?;
        if let Some(label) = &self.label {
            write!(f, " in {}", label)?;
        }
        match &self.stalled {
            Stalled::Homographic(m) => write!(f, "; stalled at {}", m),
            Stalled::Quadratic(t) => write!(f, "; stalled at {}", t),
        }
    }
}

type StepResult = Result<(Digit, DigitStream), NonProductive>;

/// A deferred stream computation: one step produces the head digit and the
/// tail stream.
pub(crate) trait Generator: Send + Sync {
    fn step(&self) -> StepResult;
}

enum State {
    Cons(Digit, DigitStream),
    Literal {
        prefix: Arc<[Digit]>,
        cycle: Arc<[Digit]>,
        pos: usize,
    },
    Gen(Box<dyn Generator>),
    /// Emptied during teardown; never observed by `next()`.
    Hollow,
}

struct Node {
    state: State,
    memo: OnceBox<StepResult>,
}

impl Node {
    /// Detach and return this node's owned successor, leaving the node
    /// inert so dropping it cannot recurse.
    fn unlink(&mut self) -> Option<DigitStream> {
        let memo_tail = self
            .memo
            .get()
            .and_then(|step| step.as_ref().ok())
            .map(|(_, tail)| tail.clone());
        // Free the memo box now; the clone above keeps the tail alive.
        self.memo = OnceBox::new();
        match core::mem::replace(&mut self.state, State::Hollow) {
            // A cons cell links through its state and never sets its memo.
            State::Cons(_, tail) => Some(tail),
            _ => memo_tail,
        }
    }
}

/// A pulled stream is a long singly-linked chain of memoized nodes; the
/// default recursive drop would overflow the stack on chains a few thousand
/// nodes deep. Tear the chain down iteratively instead, stopping at the
/// first node someone else still holds.
impl Drop for Node {
    fn drop(&mut self) {
        let mut next = self.unlink();
        while let Some(stream) = next {
            match Arc::try_unwrap(stream.node) {
                Ok(mut node) => next = node.unlink(),
                Err(_) => break,
            }
        }
    }
}

#[derive(Clone)]
pub struct DigitStream {
    node: Arc<Node>,
}

impl DigitStream {
    fn from_state(state: State) -> Self {
        DigitStream {
            node: Arc::new(Node {
                state,
                memo: OnceBox::new(),
            }),
        }
    }

    pub fn cons(digit: Digit, rest: DigitStream) -> Self {
        Self::from_state(State::Cons(digit, rest))
    }

    pub fn repeat(digit: Digit) -> Self {
        Self::from_parts(Vec::new(), alloc::vec![digit])
    }

    /// The eventually-periodic stream `prefix` then `cycle` forever.
    /// Panics on an empty cycle: a digit stream has no finite form.
    pub fn from_parts(prefix: Vec<Digit>, cycle: Vec<Digit>) -> Self {
        assert!(!cycle.is_empty(), "literal stream needs a nonempty cycle");
        Self::from_state(State::Literal {
            prefix: prefix.into(),
            cycle: cycle.into(),
            pos: 0,
        })
    }

    pub(crate) fn from_generator(gen: Box<dyn Generator>) -> Self {
        Self::from_state(State::Gen(gen))
    }

    /// Head digit and tail stream. Deterministic: repeated calls on the same
    /// stream value return the same digits (and the same error, if any).
    pub fn next(&self) -> StepResult {
        match &self.node.state {
            State::Cons(d, rest) => Ok((*d, rest.clone())),
            State::Literal { prefix, cycle, pos } => {
                let (digit, next_pos) = if *pos < prefix.len() {
                    (prefix[*pos], pos + 1)
                } else {
                    let i = pos - prefix.len();
                    (cycle[i], prefix.len() + (i + 1) % cycle.len())
                };
                Ok((
                    digit,
                    Self::from_state(State::Literal {
                        prefix: prefix.clone(),
                        cycle: cycle.clone(),
                        pos: next_pos,
                    }),
                ))
            }
            State::Gen(gen) => self.node.memo.get_or_init(|| Box::new(gen.step())).clone(),
            State::Hollow => unreachable!("hollow nodes exist only during teardown"),
        }
    }

    pub fn head(&self) -> Result<Digit, NonProductive> {
        Ok(self.next()?.0)
    }

    pub fn tail(&self) -> Result<DigitStream, NonProductive> {
        Ok(self.next()?.1)
    }

    /// The first `k` digits.
    pub fn take(&self, k: usize) -> Result<Vec<Digit>, NonProductive> {
        let mut out = Vec::with_capacity(k);
        let mut cur = self.clone();
        for _ in 0..k {
            let (d, rest) = cur.next()?;
            out.push(d);
            cur = rest;
        }
        Ok(out)
    }

    /// The stream with its first `k` digits removed.
    pub fn skip(&self, k: usize) -> Result<DigitStream, NonProductive> {
        let mut cur = self.clone();
        for _ in 0..k {
            cur = cur.tail()?;
        }
        Ok(cur)
    }

    /// Digit-for-digit agreement to depth `k` — the decidable stand-in for
    /// stream equality. Errors from either side propagate.
    pub fn bisim_upto(&self, other: &DigitStream, k: usize) -> Result<bool, NonProductive> {
        let mut a = self.clone();
        let mut b = other.clone();
        for _ in 0..k {
            let (da, ta) = a.next()?;
            let (db, tb) = b.next()?;
            if da != db {
                return Ok(false);
            }
            a = ta;
            b = tb;
        }
        Ok(true)
    }
}

impl fmt::Debug for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node.state {
            State::Cons(d, _) => write!(f, "DigitStream(cons {})", d),
            State::Literal { prefix, cycle, pos } => write!(
                f,
                "DigitStream(literal prefix={:?} cycle={:?} pos={})",
                prefix, cycle, pos
            ),
            State::Gen(_) => write!(f, "DigitStream(generator)"),
            State::Hollow => write!(f, "DigitStream(hollow)"),
        }
    }
}

const _: () = {
    const fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<DigitStream>();
    assert_send_sync::<NonProductive>();
};

/// Parse failure for a stream literal; `offset` is the byte position of the
/// first unusable character (or the input length, if input ended early).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamParseError {
    pub offset: usize,
    pub expected: &'static str,
}

impl fmt::Display for StreamParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expected {} at offset {}", self.expected, self.offset)
    }
}

impl FromStr for DigitStream {
    type Err = StreamParseError;

    /// Grammar: `PREFIX '(' CYCLE ')*'` over the alphabet `L R M`, e.g.
    /// `LR(M)*`. The prefix may be empty; the cycle may not — a stream is
    /// infinite, so the periodic part is mandatory.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let mut i = 0;
        let read_digits = |i: &mut usize| {
            let mut out = Vec::new();
            while *i < bytes.len() {
                match Digit::from_char(bytes[*i] as char) {
                    Some(d) => {
                        out.push(d);
                        *i += 1;
                    }
                    None => break,
                }
            }
            out
        };

        let prefix = read_digits(&mut i);
        if i == bytes.len() {
            return Err(StreamParseError {
                offset: i,
                expected: "'(' starting the cycle (a literal stream must be infinite)",
            });
        }
        if bytes[i] != b'(' {
            return Err(StreamParseError {
                offset: i,
                expected: "a digit (L, R, M) or '('",
            });
        }
        i += 1;
        let cycle = read_digits(&mut i);
        if cycle.is_empty() {
            return Err(StreamParseError {
                offset: i,
                expected: "a digit (L, R, M) in the cycle",
            });
        }
        if i == bytes.len() || bytes[i] != b')' {
            return Err(StreamParseError {
                offset: i,
                expected: "a digit (L, R, M) or ')'",
            });
        }
        i += 1;
        if i == bytes.len() || bytes[i] != b'*' {
            return Err(StreamParseError {
                offset: i,
                expected: "'*' after the cycle",
            });
        }
        i += 1;
        if i != bytes.len() {
            return Err(StreamParseError {
                offset: i,
                expected: "end of input",
            });
        }
        Ok(DigitStream::from_parts(prefix, cycle))
    }
}

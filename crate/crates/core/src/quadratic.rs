//! Two-argument stream transformer: apply a bilinear fractional form to a
//! pair of digit streams. The four exact field operations on `[-1, 1]` —
//! multiplication, addition, division, and averaging — are instances.
//!
//! The step rule mirrors the one-argument transformer: search the fixed
//! order `L`, `R`, `M` for a digit whose image covers the state's image over
//! the unit square, emit it and fold in its inverse; otherwise absorb one
//! digit from *each* input (the absorption count is in pairs) and retry.
//! Addition and division can leave `[-1, 1]` — their transformers are
//! partial, and the [`FuelPolicy`] converts the resulting livelock into a
//! [`NonProductive`] report.

use alloc::boxed::Box;

use crate::digits::Digit;
use crate::homographic::{FuelMode, FuelPolicy, Instrumentation};
use crate::lft::{LftError, Tensor, ZTensor};
use crate::stream::{DigitStream, Generator, NonProductive, Stalled};

/// Default absorption budget (in input pairs) per emitted digit for
/// two-argument runs. Lower than the one-argument default: each absorption
/// costs two input digits and a larger state update.
pub const DEFAULT_QUADRATIC_CAP: usize = 10_000;

/// Outcome of a single productive two-argument step.
#[derive(Clone, Debug)]
pub struct QEmitStep {
    pub emitted: Digit,
    /// State after emission, as an integer-scaled projective representative.
    pub next_tensor: Tensor,
    pub rest_left: DigitStream,
    pub rest_right: DigitStream,
    /// Number of digit *pairs* absorbed before the emission test succeeded.
    pub absorbed: usize,
}

/// The four exact field operations, as tensors on the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldOp {
    /// `x * y`; total on the square.
    Mul,
    /// `x + y`; partial (the sum can leave `[-1, 1]`).
    Add,
    /// `x / y`; partial (pole at `y = 0`, quotient can leave `[-1, 1]`).
    Div,
    /// `(x + y) / 2`; total on the square.
    Avg,
}

impl FieldOp {
    pub const ALL: [FieldOp; 4] = [FieldOp::Mul, FieldOp::Add, FieldOp::Div, FieldOp::Avg];

    pub fn tensor(self) -> Tensor {
        match self {
            FieldOp::Mul => Tensor::from_integers(1, 0, 0, 0, 0, 0, 0, 1),
            FieldOp::Add => Tensor::from_integers(0, 1, 1, 0, 0, 0, 0, 1),
            FieldOp::Div => Tensor::from_integers(0, 1, 0, 0, 0, 0, 1, 0),
            FieldOp::Avg => Tensor::from_integers(0, 1, 1, 0, 0, 0, 0, 2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldOp::Mul => "mul",
            FieldOp::Add => "add",
            FieldOp::Div => "div",
            FieldOp::Avg => "avg",
        }
    }

    pub fn from_name(name: &str) -> Option<FieldOp> {
        FieldOp::ALL.into_iter().find(|op| op.name() == name)
    }
}

/// Absorption-pair bound for a bounded tensor, the two-argument analogue of
/// the one-argument fuel bound. `Err(NotBounded)` when the denominator
/// vanishes somewhere on the closed unit square.
pub fn fuel_bound(tensor: &Tensor) -> Result<usize, LftError> {
    ZTensor::from_tensor(tensor)
        .fuel_bound()
        .ok_or(LftError::NotBounded)
}

fn step_fuel(state: &ZTensor, policy: FuelPolicy) -> usize {
    match policy.mode {
        FuelMode::Capped => policy.cap,
        FuelMode::Analytic => state
            .fuel_bound()
            .map_or(policy.cap, |bound| bound.min(policy.cap)),
    }
}

fn z_step(
    state: &ZTensor,
    left: &DigitStream,
    right: &DigitStream,
    policy: FuelPolicy,
    instr: &Instrumentation,
) -> Result<(Digit, ZTensor, DigitStream, DigitStream, usize), NonProductive> {
    let fuel = step_fuel(state, policy);
    let mut cur = state.clone();
    let mut rest_left = left.clone();
    let mut rest_right = right.clone();
    let mut absorbed = 0usize;
    loop {
        if let Some(digit) = cur.emission_digit() {
            instr.record(absorbed);
            let mut next = cur.emit(digit);
            next.shrink();
            return Ok((digit, next, rest_left, rest_right, absorbed));
        }
        if absorbed == fuel {
            instr.record(absorbed);
            return Err(NonProductive {
                absorbed,
                stalled: Stalled::Quadratic(cur.to_tensor()),
                label: instr.label.clone(),
            });
        }
        let (dl, tl) = rest_left.next()?;
        let (dr, tr) = rest_right.next()?;
        cur = cur.absorb_left(dl);
        cur = cur.absorb_right(dr);
        cur.shrink();
        rest_left = tl;
        rest_right = tr;
        absorbed += 1;
    }
}

/// Run one two-argument step. Exposed for inspection and tests;
/// [`quadratic`] iterates this to build the full output stream.
pub fn step(
    tensor: &Tensor,
    left: &DigitStream,
    right: &DigitStream,
    policy: FuelPolicy,
) -> Result<QEmitStep, NonProductive> {
    let z = ZTensor::from_tensor(tensor);
    let (emitted, next, rest_left, rest_right, absorbed) =
        z_step(&z, left, right, policy, &Instrumentation::default())?;
    Ok(QEmitStep {
        emitted,
        next_tensor: next.to_tensor(),
        rest_left,
        rest_right,
        absorbed,
    })
}

struct QuadGen {
    state: ZTensor,
    left: DigitStream,
    right: DigitStream,
    policy: FuelPolicy,
    instr: Instrumentation,
}

impl Generator for QuadGen {
    fn step(&self) -> Result<(Digit, DigitStream), NonProductive> {
        let (digit, state, left, right, _) =
            z_step(&self.state, &self.left, &self.right, self.policy, &self.instr)?;
        let rest = DigitStream::from_generator(Box::new(QuadGen {
            state,
            left,
            right,
            policy: self.policy,
            instr: self.instr.clone(),
        }));
        Ok((digit, rest))
    }
}

/// The stream representing `tensor` applied to the pair of values of
/// `left` and `right`.
pub fn quadratic(
    tensor: &Tensor,
    left: &DigitStream,
    right: &DigitStream,
    policy: FuelPolicy,
) -> DigitStream {
    quadratic_instrumented(tensor, left, right, policy, Instrumentation::default())
}

/// [`quadratic`] with shared counters and an error label attached.
pub fn quadratic_instrumented(
    tensor: &Tensor,
    left: &DigitStream,
    right: &DigitStream,
    policy: FuelPolicy,
    instr: Instrumentation,
) -> DigitStream {
    DigitStream::from_generator(Box::new(QuadGen {
        state: ZTensor::from_tensor(tensor),
        left: left.clone(),
        right: right.clone(),
        policy,
        instr,
    }))
}

/// Check the defining equation of the two-argument transformer to finite
/// depth: the output agrees with whichever unfolding applies — emit a
/// coverable digit now, or absorb one digit from each input first.
pub fn cofixed_check(
    tensor: &Tensor,
    left: &DigitStream,
    right: &DigitStream,
    policy: FuelPolicy,
    depth: usize,
) -> Result<bool, NonProductive> {
    let lhs = quadratic(tensor, left, right, policy);
    let emit_now = Digit::ALL.into_iter().find(|d| tensor.incl(&d.matrix()));
    let rhs = match emit_now {
        Some(digit) => {
            let peeled = tensor.compose_output(&digit.inverse_matrix());
            DigitStream::cons(digit, quadratic(&peeled, left, right, policy))
        }
        None => {
            let (dl, tl) = left.next()?;
            let (dr, tr) = right.next()?;
            let fed = tensor
                .compose_left(&dl.matrix())
                .compose_right(&dr.matrix());
            quadratic(&fed, &tl, &tr, policy)
        }
    };
    lhs.bisim_upto(&rhs, depth)
}

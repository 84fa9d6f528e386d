//! One-argument stream transformer: apply a Möbius map to a digit stream.
//!
//! The transformer keeps a coefficient matrix as its state. Each output step
//! searches for the first digit (in the fixed order `L`, `R`, `M`) whose
//! image covers the state's image; if one is found it is emitted and its
//! inverse is folded into the state, otherwise the head digit of the input is
//! absorbed into the state and the search repeats. Absorption refines the
//! state's image, so for a bounded map the search terminates — but not for
//! every map (a map sending the stream's value outside `[-1, 1]` can absorb
//! forever). A [`FuelPolicy`] bounds the absorptions per emission and turns
//! that silent divergence into a reported [`NonProductive`] error.
//!
//! Internally the state is held with integer coefficients (a positive
//! rescaling, invisible to every predicate); the `next_map` reported in an
//! [`EmitStep`] is therefore one representative of the projective class.

use alloc::boxed::Box;
use alloc::sync::Arc;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::digits::Digit;
use crate::lft::{LftError, Mobius, ZMobius};
use crate::stream::{DigitStream, Generator, NonProductive, Stalled};

/// Default absorption budget per emitted digit for one-argument runs.
pub const DEFAULT_HOMOGRAPHIC_CAP: usize = 1_000_000;

/// How the per-emission absorption budget is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuelMode {
    /// Use the a-priori bound computed from the state entering the step
    /// (capped by `cap`); fall back to `cap` when the state is unbounded.
    Analytic,
    /// Always use `cap`.
    Capped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FuelPolicy {
    pub mode: FuelMode,
    pub cap: usize,
}

impl FuelPolicy {
    pub fn capped(cap: usize) -> Self {
        assert!(cap >= 1, "fuel cap must be at least 1");
        FuelPolicy {
            mode: FuelMode::Capped,
            cap,
        }
    }

    /// Analytic mode still needs a hard ceiling: the bound is recomputed
    /// from each new state, but an unbounded state has none.
    pub fn analytic(hard_cap: usize) -> Self {
        assert!(hard_cap >= 1, "fuel cap must be at least 1");
        FuelPolicy {
            mode: FuelMode::Analytic,
            cap: hard_cap,
        }
    }

    pub fn default_homographic() -> Self {
        Self::capped(DEFAULT_HOMOGRAPHIC_CAP)
    }

    pub fn default_quadratic() -> Self {
        Self::capped(crate::quadratic::DEFAULT_QUADRATIC_CAP)
    }
}

/// Absorption counters for a run, shared across the emitted stream's nodes.
/// Exact when the stream is pulled from one thread; racing pulls may skip
/// updates for steps whose result loses the memoization race.
#[derive(Debug, Default)]
pub struct RunStats {
    total: AtomicU64,
    max_per_emission: AtomicU64,
}

impl RunStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total digits absorbed over all emissions so far.
    pub fn total_absorbed(&self) -> u64 {
        self.total.load(Ordering::Relaxed)
    }

    /// Largest number of absorptions any single emission needed.
    pub fn max_per_emission(&self) -> u64 {
        self.max_per_emission.load(Ordering::Relaxed)
    }

    pub(crate) fn record(&self, absorbed: u64) {
        self.total.fetch_add(absorbed, Ordering::Relaxed);
        self.max_per_emission.fetch_max(absorbed, Ordering::Relaxed);
    }
}

/// Optional observability for a transformer: shared counters and a label
/// naming the transformer in [`NonProductive`] reports.
#[derive(Clone, Debug, Default)]
pub struct Instrumentation {
    pub stats: Option<Arc<RunStats>>,
    pub label: Option<Arc<str>>,
}

impl Instrumentation {
    pub(crate) fn record(&self, absorbed: usize) {
        if let Some(stats) = &self.stats {
            stats.record(absorbed as u64);
        }
    }
}

/// Outcome of a single productive step.
#[derive(Clone, Debug)]
pub struct EmitStep {
    pub emitted: Digit,
    /// State after emission, as an integer-scaled projective representative.
    pub next_map: Mobius,
    /// Input remaining after the absorptions this step performed.
    pub rest: DigitStream,
    /// Number of digits absorbed before the emission test succeeded.
    pub absorbed: usize,
}

/// The largest number of absorptions a bounded map can need before it emits:
/// ceil(6 |det| / min(|d+c|, |d-c|)^2), invariant under rescaling.
/// `Err(NotBounded)` when the denominator vanishes on `[-1, 1]`.
pub fn fuel_bound(map: &Mobius) -> Result<usize, LftError> {
    ZMobius::from_mobius(map)
        .fuel_bound()
        .ok_or(LftError::NotBounded)
}

fn step_fuel(map: &ZMobius, policy: FuelPolicy) -> usize {
    match policy.mode {
        FuelMode::Capped => policy.cap,
        FuelMode::Analytic => map
            .fuel_bound()
            .map_or(policy.cap, |bound| bound.min(policy.cap)),
    }
}

/// Core step on integer-scaled state. The budget is fixed on entry; the
/// emission test runs before each absorption, so a budget of `fuel` admits
/// states reached by `0..=fuel` absorptions.
fn z_step(
    map: &ZMobius,
    input: &DigitStream,
    policy: FuelPolicy,
    instr: &Instrumentation,
) -> Result<(Digit, ZMobius, DigitStream, usize), NonProductive> {
    let fuel = step_fuel(map, policy);
    let mut cur = map.clone();
    let mut rest = input.clone();
    let mut absorbed = 0usize;
    loop {
        if let Some(digit) = cur.emission_digit() {
            instr.record(absorbed);
            let mut next = cur.emit(digit);
            next.shrink();
            return Ok((digit, next, rest, absorbed));
        }
        if absorbed == fuel {
            instr.record(absorbed);
            return Err(NonProductive {
                absorbed,
                stalled: Stalled::Homographic(cur.to_mobius()),
                label: instr.label.clone(),
            });
        }
        let (digit, tail) = rest.next()?;
        cur = cur.absorb(digit);
        cur.shrink();
        rest = tail;
        absorbed += 1;
    }
}

/// Run one step: absorb until some digit's image covers the state's image,
/// then emit it. Exposed for inspection and tests; [`homographic`] iterates
/// this to build the full output stream.
pub fn step(
    map: &Mobius,
    input: &DigitStream,
    policy: FuelPolicy,
) -> Result<EmitStep, NonProductive> {
    let z = ZMobius::from_mobius(map);
    let (emitted, next, rest, absorbed) = z_step(&z, input, policy, &Instrumentation::default())?;
    Ok(EmitStep {
        emitted,
        next_map: next.to_mobius(),
        rest,
        absorbed,
    })
}

struct HomGen {
    map: ZMobius,
    input: DigitStream,
    policy: FuelPolicy,
    instr: Instrumentation,
}

impl Generator for HomGen {
    fn step(&self) -> Result<(Digit, DigitStream), NonProductive> {
        let (digit, map, input, _) = z_step(&self.map, &self.input, self.policy, &self.instr)?;
        let rest = DigitStream::from_generator(Box::new(HomGen {
            map,
            input,
            policy: self.policy,
            instr: self.instr.clone(),
        }));
        Ok((digit, rest))
    }
}

/// The stream representing `map` applied to the value of `input`.
///
/// Construction is free; digits materialize as the result is pulled. When
/// `map` is refining the output never stalls; in general a pull can return
/// [`NonProductive`] once the step budget is exhausted.
pub fn homographic(map: &Mobius, input: &DigitStream, policy: FuelPolicy) -> DigitStream {
    homographic_instrumented(map, input, policy, Instrumentation::default())
}

/// [`homographic`] with shared counters and an error label attached.
pub fn homographic_instrumented(
    map: &Mobius,
    input: &DigitStream,
    policy: FuelPolicy,
    instr: Instrumentation,
) -> DigitStream {
    DigitStream::from_generator(Box::new(HomGen {
        map: ZMobius::from_mobius(map),
        input: input.clone(),
        policy,
        instr,
    }))
}

/// Check the defining equation of the transformer to finite depth: the
/// output stream agrees with whichever of the two unfoldings applies —
/// emit a coverable digit now, or absorb the input's head first.
pub fn cofixed_check(
    map: &Mobius,
    input: &DigitStream,
    policy: FuelPolicy,
    depth: usize,
) -> Result<bool, NonProductive> {
    let lhs = homographic(map, input, policy);
    let emit_now = Digit::ALL.into_iter().find(|d| map.incl(&d.matrix()));
    let rhs = match emit_now {
        Some(digit) => {
            let peeled = digit.inverse_matrix().compose(map);
            DigitStream::cons(digit, homographic(&peeled, input, policy))
        }
        None => {
            let (head, tail) = input.next()?;
            homographic(&map.compose(&head.matrix()), &tail, policy)
        }
    };
    lhs.bisim_upto(&rhs, depth)
}

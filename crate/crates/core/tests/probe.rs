use std::sync::Arc;
use std::time::Instant;
use mobius_reals::homographic::{self, FuelPolicy};
use mobius_reals::{decode_approx, encode, Instrumentation, Mobius, Rational, RunStats};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn q(n: i64, d: i64) -> Rational { Rational::new(n, d) }

fn refining_mobius(rng: &mut StdRng, g: i64) -> Mobius {
    let sign = if rng.gen::<bool>() { 1 } else { -1 };
    let e1 = Rational::integer(sign * rng.gen_range(1..=g));
    let e2 = Rational::integer(sign * rng.gen_range(1..=g));
    let v1 = q(rng.gen_range(-g..=g), g);
    let v2 = q(rng.gen_range(-g..=g), g);
    let half = q(1, 2);
    let n1 = v1 * e1.clone();
    let n2 = v2 * e2.clone();
    Mobius::new(
        (n2.clone() - n1.clone()) * half.clone(),
        (n2 + n1) * half.clone(),
        (e2.clone() - e1.clone()) * half.clone(),
        (e2 + e1) * half,
    )
}

#[test]
fn probe_c6_cost() {
    for grid in [8i64, 16] {
        let mut rng = StdRng::seed_from_u64(0x06);
        let started = Instant::now();
        let mut worst = 0u64;
        let mut total = 0u64;
        for i in 0..500 {
            let m = refining_mobius(&mut rng, grid);
            let d = rng.gen_range(1..=grid);
            let x = q(rng.gen_range(-d..=d), d);
            let expected = m.apply(&x).unwrap();
            let stats = Arc::new(RunStats::new());
            let instr = Instrumentation { stats: Some(stats.clone()), label: None };
            let run = homographic::homographic_instrumented(
                &m, &encode(&x).unwrap(), FuelPolicy::analytic(50_000_000), instr);
            match decode_approx(&run, 60) {
                Ok(a) => assert!(a.bounds.contains(&expected), "miss at {i}"),
                Err(e) => panic!("case {i} stalled: absorbed {}", e.absorbed),
            }
            worst = worst.max(stats.max_per_emission());
            total += stats.total_absorbed();
            if started.elapsed().as_secs() > 100 { println!("grid {grid}: ABORT at case {i}, too slow"); break; }
        }
        println!("grid {grid}: {:?} total_absorbed {total} worst_step {worst}", started.elapsed());
    }
}

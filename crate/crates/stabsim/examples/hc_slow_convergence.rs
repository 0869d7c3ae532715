//! The parent-chasing variant can be slow even on three nodes.
//!
//! On the line `root — a — b` with distance cap `2k`, a scripted unfair
//! daemon drives the chasing variant through `2k` steps spread over `k + 1`
//! rounds: the two non-root processes leapfrog each other's distance values
//! all the way up to the cap before snapping to the true tree. The round
//! count therefore grows with the cap, not with the diameter — the price
//! the chasing rule pays for never touching its parent pointer while
//! chasing.
//!
//! Run with `cargo run --example hc_slow_convergence`.

use stabsim::scenarios::{run_scenario, scenario_hc_slow};

fn main() {
    println!("cap 2k  rounds (k+1)  steps (2k)");
    for k in 1..=8 {
        let sc = scenario_hc_slow(k).unwrap();
        let run = run_scenario(&sc, sc.suggested_budget())
            .unwrap_or_else(|e| panic!("k={k}: {e}"));
        let (rounds, steps) = (run.trace.round_count, run.trace.step_count);
        println!("{:>6}  {rounds:>12}  {steps:>10}", 2 * k);
        assert_eq!(rounds, u64::from(k) + 1);
        assert_eq!(steps, 2 * u64::from(k));
    }

    // Watch one run in detail: every move, with the round it lands in.
    let k = 3;
    let sc = scenario_hc_slow(k).unwrap();
    let run = run_scenario(&sc, sc.suggested_budget()).unwrap();
    let trace = &run.trace;
    println!("\nstep-by-step for cap {} (diameter 2):", 2 * k);
    println!("  start: d = {:?}", trace.initial.d);
    for step in 0..trace.step_count {
        let mv = &trace.moves_of(step)[0];
        let wr = &trace.writes_of(step)[0];
        println!(
            "  step {:>2} (round {}): {} writes d={}",
            step + 1,
            trace.round_of_step(step),
            mv,
            wr.d,
        );
    }
    println!("  end:   d = {:?}", trace.final_config.d);
    println!("\nthe distance values climb to the cap before settling");
}

//! Without a distance cap, step counts are unbounded even on five nodes.
//!
//! On the line `r — w1 — a — b — w2`, start the two inner processes at
//! distance 1 and the two walls at a huge value `x`. A scripted daemon then
//! lets `a` and `b` alternately "improve" their distance against each
//! other's stale value: each fires the update rule and climbs by one,
//! `x + 1` times in total, while the walls — enabled the whole time — are
//! starved, so not a single round closes. The step count is a function of
//! the corrupted *values*, not of the topology; no function of `n` bounds
//! it.
//!
//! Once the daemon gives up (schedule exhausted), a synchronous tail
//! stabilizes the very same configuration in at most 4 rounds.
//!
//! Run with `cargo run --example unbounded_line`.

use stabsim::scenarios::{run_scenario, scenario_unbounded_line};

fn main() {
    let x: u32 = 1_000_000;
    let sc = scenario_unbounded_line(x).unwrap();
    println!(
        "line of {} nodes, walls poisoned at d = {x}",
        sc.graph.node_count()
    );

    let run = run_scenario(&sc, sc.suggested_budget()).unwrap_or_else(|e| panic!("{e}"));
    let steps = run.trace.step_count;
    let rounds = run.trace.round_count;
    println!("scripted prefix: {steps} steps, {rounds} closed rounds");
    assert!(steps >= u64::from(x), "at least x steps on five nodes");
    assert_eq!(rounds, 0, "the walls never get to move, so no round closes");

    let tail = run.tail.as_ref().expect("the scenario asks for a synchronous tail");
    println!(
        "synchronous tail: {} steps, {} rounds -> d = {:?}",
        tail.step_count, tail.round_count, tail.final_config.d
    );
    assert!(tail.round_count <= 4, "recovery is diameter-bounded");
    assert_eq!(tail.final_config.d, vec![0, 1, 2, 3, 4]);

    println!("\nunbounded prefix + fast recovery reproduced");
}

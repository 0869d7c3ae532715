//! An unfair daemon can force exponentially many steps out of the
//! parent-chasing variant — using only its repoint rule.
//!
//! The layered graph family `G_k` (4k + 2 nodes) carries a k-digit binary
//! counter encoded in distance values. A scripted daemon ticks the counter
//! through all its values, and each tick costs real steps: the schedule for
//! level `k` replays the level `k - 1` schedule twice. Total length:
//!
//!   total(k) = 2 · total(k - 1) + 2k + boundary(k)  =  (2k + 2)(2^k - 1)
//!
//! Every scheduled move fires the repoint rule, no round ever closes (a
//! starved process stays enabled throughout), and the same schedule mapped
//! rule-for-rule onto the plain bounded variant replays violation-free —
//! the blowup comes from scheduling freedom, not from a quirk of one rule
//! set.
//!
//! Run with `cargo run --example exponential_steps`.

use stabsim::algorithms::RuleId;
use stabsim::scenarios::{replay_schedule_as_b, run_scenario, scenario_exponential};

fn closed_form(k: u32) -> u64 {
    u64::from(2 * k + 2) * ((1u64 << k) - 1)
}

fn main() {
    println!("k   nodes  steps  (2k+2)(2^k-1)");
    for k in 1..=8 {
        let sc = scenario_exponential(k, 2 * k + 3).unwrap();
        let run = run_scenario(&sc, sc.suggested_budget())
            .unwrap_or_else(|e| panic!("k={k}: {e}"));
        let steps = run.trace.step_count;
        println!(
            "{k}  {:>6}  {steps:>5}  {:>13}",
            sc.graph.node_count(),
            closed_form(k)
        );
        assert_eq!(steps, closed_form(k), "schedule length matches the closed form");
        assert_eq!(run.trace.round_count, 0, "no round ever closes");
    }

    // Every move of the k = 3 run is the repoint rule.
    let sc = scenario_exponential(3, 9).unwrap();
    let run = run_scenario(&sc, sc.suggested_budget()).unwrap();
    let repoints = (0..run.trace.step_count)
        .flat_map(|s| run.trace.moves_of(s))
        .filter(|m| m.rule == RuleId::HC2)
        .count() as u64;
    let total: u64 = (0..run.trace.step_count)
        .map(|s| run.trace.moves_of(s).len() as u64)
        .sum();
    println!("\nk=3: {repoints} of {total} scheduled moves are the repoint rule");
    assert_eq!(repoints, total);

    // The same schedule, move-for-move, on the plain bounded variant.
    let b_trace = replay_schedule_as_b(&sc).unwrap();
    println!(
        "same schedule replayed on the plain bounded variant: {} steps, outcome {:?}",
        b_trace.step_count, b_trace.outcome
    );
    assert_eq!(b_trace.step_count, run.trace.step_count);

    println!("\nexponential step counts reproduced for k = 1..=8");
}

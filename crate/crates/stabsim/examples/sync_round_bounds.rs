//! Tight synchronous round counts for three worst-case families.
//!
//! Each algorithm variant comes with a family of start configurations that
//! makes the synchronous daemon pay its full round bound:
//!
//! * unbounded variant on a line of diameter 𝒟 — exactly 𝒟 rounds,
//! * bounded variant on a lollipop of diameter 𝒟 — exactly 𝒟 rounds,
//!   independent of the distance cap,
//! * fast parent-chasing variant on the same lollipop — exactly 𝒟 + 1
//!   rounds (the one extra round is inherent to its rule shape).
//!
//! Run with `cargo run --example sync_round_bounds`.

use stabsim::scenarios::{
    run_scenario, scenario_sync_b_lollipop, scenario_sync_fhc_lollipop, scenario_sync_u_line,
    Scenario,
};

fn measure(sc: &Scenario) -> u64 {
    let run = run_scenario(sc, sc.suggested_budget())
        .unwrap_or_else(|e| panic!("scenario `{}` failed: {e}", sc.name));
    run.trace.round_count
}

fn main() {
    println!("diam  U-line  B-lollipop  B-lollipop(D=diam+3)  FHC-lollipop");
    for diam in 2..=8 {
        let u = measure(&scenario_sync_u_line(diam).unwrap());
        let b = measure(&scenario_sync_b_lollipop(diam, diam).unwrap());
        // The bound does not improve when the cap has slack.
        let b_slack = measure(&scenario_sync_b_lollipop(diam, diam + 3).unwrap());
        let fhc = measure(&scenario_sync_fhc_lollipop(diam).unwrap());
        println!("{diam:>4}  {u:>6}  {b:>10}  {b_slack:>20}  {fhc:>12}");
        assert_eq!(u, u64::from(diam), "U takes exactly diam rounds");
        assert_eq!(b, u64::from(diam), "B takes exactly diam rounds");
        assert_eq!(b_slack, u64::from(diam), "cap slack changes nothing");
        assert_eq!(fhc, u64::from(diam) + 1, "FHC takes exactly diam+1 rounds");
    }
    println!("\nall synchronous round counts match the tight bounds");
}

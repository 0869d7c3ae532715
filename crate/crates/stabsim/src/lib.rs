//! Simulation and verification workbench for silent self-stabilizing BFS
//! spanning-tree construction under the composite atomicity model.
//!
//! Four rule systems are implemented over rooted connected graphs: an
//! unbounded-distance variant (`U`), a bounded variant with a cap repair rule
//! (`B(D)`), a parent-chasing bounded variant (`HC(D)`) and its fast
//! refinement (`FHC(D)`). The crate provides:
//!
//! * [`topology`] — rooted graphs, worst-case graph families, distance oracle,
//!   edge-list text format;
//! * [`algorithms`] — per-process guards and actions, enabledness, random
//!   configurations;
//! * [`scheduler`] — daemon strategies (synchronous, central/distributed
//!   random, scripted, priority);
//! * [`engine`] — step/round execution with delta traces and replay;
//! * [`verifier`] — legitimacy, tree extraction, attractor indexes,
//!   configuration-class membership for the exponential family;
//! * [`scenarios`] — reproducible worst-case executions (slow HC, synchronous
//!   lower bounds, unbounded prefix, exponential HC2-only schedule);
//! * [`explorer`] — exhaustive state-space enumeration and transition-graph
//!   checks on small instances;
//! * [`cli`] — the `stabsim` command line (`run`, `replay`, `table`,
//!   `explore`, `scenario-dump`).
//!
//! The fastest way to explore the crate is through the runnable examples:
//!
//! ```text
//! cargo run --example sync_round_bounds     # tight round bounds, three families
//! cargo run --example hc_slow_convergence   # k+1 rounds / 2k steps slow HC run
//! cargo run --example exponential_steps     # HC2-only schedule vs. (2k+2)(2^k-1)
//! cargo run --example unbounded_line        # million-step prefix on five nodes
//! cargo run --example explore_exhaustive    # n<=4 exhaustive checks + mutations
//! cargo run --example random_campaign       # random runs + attractor progress
//! cargo run --example trace_replay          # JSONL traces, tampering detection
//! ```

pub mod algorithms;
pub mod cli;
pub mod engine;
pub mod explorer;
pub mod scenarios;
pub mod scheduler;
pub mod topology;
pub mod verifier;

pub use algorithms::{AlgorithmSpec, Configuration, RuleId, TiePolicy, Variant};
pub use engine::{ExecutionTrace, Outcome};
pub use scheduler::{DaemonStrategy, Move, RulePref};
pub use topology::{Graph, NodeId};

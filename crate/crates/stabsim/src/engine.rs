//! The execution engine: drives a configuration forward under a daemon
//! strategy, recording every step so runs can be measured and replayed.
//!
//! A step is applied with composite atomicity: every activated process
//! evaluates its guards and computes its write against the *pre-step*
//! configuration, then all writes land at once. Rounds are tracked with the
//! usual pending-set bookkeeping: when a round opens, the processes enabled
//! at that moment become pending, and the round closes once each of them has
//! either executed or been neutralized (observed disabled after some step).
//! An unfair daemon may keep a process enabled but unselected forever, in
//! which case the round simply never closes — the engine counts only
//! completed rounds.
//!
//! Traces store per-step deltas (moves plus the writes they landed) with a
//! configuration snapshot every [`SNAPSHOT_EVERY`] steps, so random access
//! via [`ExecutionTrace::config_at`] costs at most one snapshot plus a short
//! replay, while long runs stay cheap to hold in memory.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};
use thiserror::Error;

use crate::algorithms::{
    enabled_rules, rule_write, AlgorithmSpec, Configuration, ProcessWrite,
};
use crate::scheduler::{choose, ChooseError, DaemonStrategy, Move};
use crate::topology::{Graph, NodeId};
use crate::algorithms::RuleId;

/// Distance between stored configuration snapshots, in steps.
pub const SNAPSHOT_EVERY: u64 = 64;

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    /// No process is enabled: the run reached a terminal configuration.
    Terminal,
    /// The step budget ran out with processes still enabled.
    StepBudgetExceeded,
    /// The daemon proposed an invalid step (counted from 0).
    ScheduleViolation { step: u64, kind: ViolationKind },
    /// A scripted schedule ran out of entries with processes still enabled.
    ScheduleExhausted { step: u64 },
}

impl Outcome {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Outcome::Terminal)
    }
}

/// How a proposed step broke the move-set contract.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum ViolationKind {
    #[error("rule {rule} is not enabled at process {process}")]
    NotEnabled { process: NodeId, rule: RuleId },
    #[error("process {process} appears twice in one step")]
    DuplicateProcess { process: NodeId },
    #[error("a step must activate at least one process")]
    EmptyMoveSet,
}

/// A finished (or cut-off) run: inputs, per-step deltas, and totals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub spec: AlgorithmSpec,
    pub graph: Graph,
    pub strategy: DaemonStrategy,
    pub initial: Configuration,
    /// Moves of every step, flattened; step `i` owns
    /// `moves[step_offsets[i]..step_offsets[i + 1]]`.
    moves: Vec<Move>,
    /// The write each move landed, parallel to `moves`.
    writes: Vec<ProcessWrite>,
    /// Prefix offsets into `moves`/`writes`; length `step_count + 1`.
    step_offsets: Vec<usize>,
    /// `snapshots[k]` is the configuration after `(k + 1) * SNAPSHOT_EVERY`
    /// steps; the configuration after 0 steps is `initial`.
    snapshots: Vec<Configuration>,
    pub final_config: Configuration,
    pub step_count: u64,
    /// Completed rounds only; a round cut off mid-way is not counted.
    pub round_count: u64,
    /// `round_boundaries[r - 1]` is the number of steps executed when round
    /// `r` closed.
    pub round_boundaries: Vec<u64>,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    /// Moves of step `step` (counted from 0).
    pub fn moves_of(&self, step: u64) -> &[Move] {
        let (lo, hi) = self.span(step);
        &self.moves[lo..hi]
    }

    /// Writes landed by step `step`, parallel to [`Self::moves_of`].
    pub fn writes_of(&self, step: u64) -> &[ProcessWrite] {
        let (lo, hi) = self.span(step);
        &self.writes[lo..hi]
    }

    fn span(&self, step: u64) -> (usize, usize) {
        let i = step as usize;
        (self.step_offsets[i], self.step_offsets[i + 1])
    }

    /// The configuration after `step` steps (`0` = initial). Costs at most
    /// one snapshot clone plus `SNAPSHOT_EVERY` delta applications.
    pub fn config_at(&self, step: u64) -> Configuration {
        assert!(step <= self.step_count, "step {step} out of range");
        if step == self.step_count {
            return self.final_config.clone();
        }
        let k = step / SNAPSHOT_EVERY;
        let mut conf = if k == 0 {
            self.initial.clone()
        } else {
            self.snapshots[k as usize - 1].clone()
        };
        for s in (k * SNAPSHOT_EVERY)..step {
            self.apply_recorded(&mut conf, s);
        }
        conf
    }

    fn apply_recorded(&self, conf: &mut Configuration, step: u64) {
        let (lo, hi) = self.span(step);
        for (mv, w) in self.moves[lo..hi].iter().zip(&self.writes[lo..hi]) {
            conf.d[mv.process.index()] = w.d;
            conf.par[mv.process.index()] = Some(w.par);
        }
    }

    /// 1-based number of the round that step `step` (0-based) belongs to.
    /// Steps of a round that never closed still get the next round number.
    pub fn round_of_step(&self, step: u64) -> u64 {
        1 + self.round_boundaries.partition_point(|&b| b <= step) as u64
    }

    /// One-line human summary, used by examples and the CLI.
    pub fn summary(&self) -> String {
        let outcome = match &self.outcome {
            Outcome::Terminal => "terminal".to_string(),
            Outcome::StepBudgetExceeded => "step budget exceeded".to_string(),
            Outcome::ScheduleViolation { step, kind } => {
                format!("schedule violation at step {step}: {kind}")
            }
            Outcome::ScheduleExhausted { step } => {
                format!("schedule exhausted at step {step}")
            }
        };
        format!(
            "{} on {} nodes ({}): {} after {} steps / {} rounds",
            self.spec.tag(),
            self.graph.node_count(),
            self.strategy.name(),
            outcome,
            self.step_count,
            self.round_count,
        )
    }
}

/// Applies one step with composite atomicity: validates the move set,
/// computes every write from the pre-step configuration, then lands all
/// writes at once. Returns the next configuration and the landed writes.
pub fn apply_step(
    spec: &AlgorithmSpec,
    g: &Graph,
    conf: &Configuration,
    moves: &[Move],
) -> Result<(Configuration, Vec<ProcessWrite>), ViolationKind> {
    if moves.is_empty() {
        return Err(ViolationKind::EmptyMoveSet);
    }
    let mut seen = BTreeSet::new();
    for mv in moves {
        if !seen.insert(mv.process) {
            return Err(ViolationKind::DuplicateProcess {
                process: mv.process,
            });
        }
        if !enabled_rules(spec, g, conf, mv.process).contains(mv.rule) {
            return Err(ViolationKind::NotEnabled {
                process: mv.process,
                rule: mv.rule,
            });
        }
    }
    let writes: Vec<ProcessWrite> = moves
        .iter()
        .map(|mv| rule_write(spec, g, conf, mv.process, mv.rule))
        .collect();
    let mut next = conf.clone();
    for (mv, w) in moves.iter().zip(&writes) {
        next.d[mv.process.index()] = w.d;
        next.par[mv.process.index()] = Some(w.par);
    }
    Ok((next, writes))
}

/// Runs `strategy` from `init` until the configuration is terminal, the
/// budget of `max_steps` runs out, or the daemon fails to produce a valid
/// step. The initial configuration is not validated here; pair with
/// [`Configuration::validate`] when the input is untrusted.
pub fn run(
    spec: &AlgorithmSpec,
    g: &Graph,
    strategy: &DaemonStrategy,
    init: &Configuration,
    max_steps: u64,
) -> ExecutionTrace {
    let mut conf = init.clone();
    let mut moves_flat = Vec::new();
    let mut writes_flat = Vec::new();
    let mut step_offsets = vec![0usize];
    let mut snapshots = Vec::new();
    let mut round_boundaries: Vec<u64> = Vec::new();
    let mut steps: u64 = 0;
    let mut pending: BTreeSet<NodeId> = BTreeSet::new();

    let outcome = loop {
        let enabled_now: Vec<NodeId> = g
            .processes()
            .filter(|&p| !enabled_rules(spec, g, &conf, p).is_empty())
            .collect();
        if enabled_now.is_empty() {
            break Outcome::Terminal;
        }
        if steps >= max_steps {
            break Outcome::StepBudgetExceeded;
        }
        if pending.is_empty() {
            // A new round opens over exactly the processes enabled now.
            pending.extend(enabled_now);
        }
        let moves = match choose(strategy, spec, g, &conf, steps) {
            Ok(moves) => moves,
            Err(ChooseError::Exhausted { step }) => break Outcome::ScheduleExhausted { step },
        };
        let (next, writes) = match apply_step(spec, g, &conf, &moves) {
            Ok(result) => result,
            Err(kind) => break Outcome::ScheduleViolation { step: steps, kind },
        };
        moves_flat.extend_from_slice(&moves);
        writes_flat.extend(writes);
        step_offsets.push(moves_flat.len());
        steps += 1;
        for mv in &moves {
            pending.remove(&mv.process);
        }
        pending.retain(|&p| !enabled_rules(spec, g, &next, p).is_empty());
        if pending.is_empty() {
            round_boundaries.push(steps);
        }
        conf = next;
        if steps.is_multiple_of(SNAPSHOT_EVERY) {
            snapshots.push(conf.clone());
        }
    };

    ExecutionTrace {
        spec: *spec,
        graph: g.clone(),
        strategy: strategy.clone(),
        initial: init.clone(),
        moves: moves_flat,
        writes: writes_flat,
        step_offsets,
        snapshots,
        final_config: conf,
        step_count: steps,
        round_count: round_boundaries.len() as u64,
        round_boundaries,
        outcome,
    }
}

/// Replay failures: the recorded run no longer matches what the rules do.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("step {step} is no longer valid: {kind}")]
    Step { step: u64, kind: ViolationKind },
    #[error(
        "step {step} diverges at process {process}: recorded {recorded:?}, recomputed {recomputed:?}"
    )]
    WriteMismatch {
        step: u64,
        process: NodeId,
        recorded: ProcessWrite,
        recomputed: ProcessWrite,
    },
    #[error("replayed final configuration differs from the recorded one")]
    FinalMismatch,
}

/// Re-executes a recorded run against the current rule implementations:
/// every recorded move must still be enabled, and every recomputed write
/// must equal the recorded one. Catches semantic drift — for example, a
/// trace recorded under one tie-breaking policy replayed under another.
pub fn replay(trace: &ExecutionTrace) -> Result<(), ReplayError> {
    let mut conf = trace.initial.clone();
    for step in 0..trace.step_count {
        let moves = trace.moves_of(step);
        let recorded = trace.writes_of(step);
        let (next, writes) = apply_step(&trace.spec, &trace.graph, &conf, moves)
            .map_err(|kind| ReplayError::Step { step, kind })?;
        for (i, mv) in moves.iter().enumerate() {
            if writes[i] != recorded[i] {
                return Err(ReplayError::WriteMismatch {
                    step,
                    process: mv.process,
                    recorded: recorded[i],
                    recomputed: writes[i],
                });
            }
        }
        conf = next;
    }
    if conf != trace.final_config {
        return Err(ReplayError::FinalMismatch);
    }
    Ok(())
}

// --- JSON Lines persistence ---------------------------------------------
//
// A trace file is one JSON object per line: a header (inputs), one record
// per step with 1-based step and round numbers, and a footer (totals). The
// format is line-oriented so partial files are still useful and huge runs
// can be streamed.

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: AlgorithmSpec,
    graph: Graph,
    strategy: DaemonStrategy,
    init: Configuration,
}

#[derive(Serialize, Deserialize)]
struct StepLine {
    step: u64,
    round: u64,
    moves: Vec<Move>,
    writes: Vec<ProcessWrite>,
}

#[derive(Serialize, Deserialize)]
struct FooterLine {
    footer: Footer,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    outcome: Outcome,
    steps: u64,
    rounds: u64,
    #[serde(rename = "final")]
    final_config: Configuration,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyLine {
    Header(HeaderLine),
    Step(StepLine),
    Footer(FooterLine),
}

/// Writes a trace as JSON Lines: header, step records, footer.
pub fn write_jsonl<W: Write>(trace: &ExecutionTrace, mut w: W) -> io::Result<()> {
    let header = HeaderLine {
        header: Header {
            spec: trace.spec,
            graph: trace.graph.clone(),
            strategy: trace.strategy.clone(),
            init: trace.initial.clone(),
        },
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for step in 0..trace.step_count {
        let line = StepLine {
            step: step + 1,
            round: trace.round_of_step(step),
            moves: trace.moves_of(step).to_vec(),
            writes: trace.writes_of(step).to_vec(),
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    let footer = FooterLine {
        footer: Footer {
            outcome: trace.outcome.clone(),
            steps: trace.step_count,
            rounds: trace.round_count,
            final_config: trace.final_config.clone(),
        },
    };
    serde_json::to_writer(&mut w, &footer)?;
    writeln!(w)?;
    Ok(())
}

/// Problems reading a trace file back.
#[derive(Debug, Error)]
pub enum TraceReadError {
    #[error("i/o error reading trace: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: not a valid trace record: {msg}")]
    Json { line: usize, msg: String },
    #[error("trace file has no header line")]
    MissingHeader,
    #[error("trace file has no footer line")]
    MissingFooter,
    #[error("trace is inconsistent: {0}")]
    Inconsistent(String),
}

/// Reads a JSON Lines trace back into an [`ExecutionTrace`], rebuilding
/// snapshots and cross-checking the footer totals against the step records.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<ExecutionTrace, TraceReadError> {
    let mut header: Option<Header> = None;
    let mut steps: Vec<StepLine> = Vec::new();
    let mut footer: Option<Footer> = None;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if footer.is_some() {
            return Err(TraceReadError::Inconsistent(format!(
                "line {}: content after the footer",
                idx + 1
            )));
        }
        let parsed: AnyLine =
            serde_json::from_str(&line).map_err(|e| TraceReadError::Json {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        match parsed {
            AnyLine::Header(h) => {
                if header.is_some() {
                    return Err(TraceReadError::Inconsistent(format!(
                        "line {}: second header",
                        idx + 1
                    )));
                }
                header = Some(h.header);
            }
            AnyLine::Step(s) => {
                if header.is_none() {
                    return Err(TraceReadError::MissingHeader);
                }
                steps.push(s);
            }
            AnyLine::Footer(f) => footer = Some(f.footer),
        }
    }
    let header = header.ok_or(TraceReadError::MissingHeader)?;
    let footer = footer.ok_or(TraceReadError::MissingFooter)?;

    if footer.steps != steps.len() as u64 {
        return Err(TraceReadError::Inconsistent(format!(
            "footer counts {} steps but {} records are present",
            footer.steps,
            steps.len()
        )));
    }
    let mut moves_flat = Vec::new();
    let mut writes_flat = Vec::new();
    let mut step_offsets = vec![0usize];
    let mut snapshots = Vec::new();
    let mut conf = header.init.clone();
    let mut last_round = 1u64;
    for (i, s) in steps.iter().enumerate() {
        if s.step != i as u64 + 1 {
            return Err(TraceReadError::Inconsistent(format!(
                "step records out of order: expected step {}, found {}",
                i + 1,
                s.step
            )));
        }
        if s.moves.len() != s.writes.len() {
            return Err(TraceReadError::Inconsistent(format!(
                "step {}: {} moves but {} writes",
                s.step,
                s.moves.len(),
                s.writes.len()
            )));
        }
        if s.round < last_round {
            return Err(TraceReadError::Inconsistent(format!(
                "step {}: round number decreased",
                s.step
            )));
        }
        last_round = s.round;
        for (mv, w) in s.moves.iter().zip(&s.writes) {
            if mv.process.index() >= conf.d.len() {
                return Err(TraceReadError::Inconsistent(format!(
                    "step {}: process {} out of range",
                    s.step, mv.process
                )));
            }
            conf.d[mv.process.index()] = w.d;
            conf.par[mv.process.index()] = Some(w.par);
            moves_flat.push(*mv);
            writes_flat.push(*w);
        }
        step_offsets.push(moves_flat.len());
        if (i as u64 + 1).is_multiple_of(SNAPSHOT_EVERY) {
            snapshots.push(conf.clone());
        }
    }
    if conf != footer.final_config {
        return Err(TraceReadError::Inconsistent(
            "replaying the step records does not reach the recorded final configuration".into(),
        ));
    }
    // Round r closed after the last step labelled r, provided a later round
    // started; the footer says how many rounds actually completed.
    let round_boundaries: Vec<u64> = (1..=footer.rounds)
        .map(|r| steps.iter().filter(|s| s.round <= r).count() as u64)
        .collect();
    if !round_boundaries.windows(2).all(|w| w[0] < w[1]) {
        return Err(TraceReadError::Inconsistent(
            "round boundaries are not strictly increasing".into(),
        ));
    }
    Ok(ExecutionTrace {
        spec: header.spec,
        graph: header.graph,
        strategy: header.strategy,
        initial: header.init,
        moves: moves_flat,
        writes: writes_flat,
        step_offsets,
        snapshots,
        final_config: footer.final_config,
        step_count: footer.steps,
        round_count: footer.rounds,
        round_boundaries,
        outcome: footer.outcome,
    })
}

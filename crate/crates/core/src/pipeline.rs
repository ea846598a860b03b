//! Desk-scale computational profiling and quasi-real-time scheduling:
//! profile stages, plan a per-stage timing table (action time and action
//! period), execute with wall-clock releases and post-hoc deadline-miss
//! reporting. No hard guarantees — misses are recorded and the next cycle
//! proceeds.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Failure surfaced by a stage's work function.
#[derive(Debug, Clone, Error)]
#[error("{0}")]
pub struct StageError(pub String);

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("profiling requires at least 3 runs, got {0}")]
    TooFewRuns(usize),
    #[error("profiling aborted: stage failure: {0}")]
    StageFailure(String),
    #[error("duplicate stage id: {0}")]
    DuplicateStage(String),
    #[error("unknown stage in dependencies: {0}")]
    UnknownStage(String),
    #[error("dependency cycle")]
    DependencyCycle,
    #[error("period overflow by {0} s")]
    PeriodOverflow(f64),
    #[error("invalid plan input: {0}")]
    BadPlanInput(String),
    #[error("timing table missing stage: {0}")]
    TableMissingStage(String),
    #[error("stage hang: {0}")]
    StageHang(String),
}

/// Measured runtime statistics for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageProfile {
    pub stage_id: String,
    pub median_runtime_s: f64,
    pub p95_runtime_s: f64,
    pub runs: usize,
}

/// Run a stage `runs` times (after one discarded warmup) and report median
/// and p95 wall-clock runtime.
pub fn profile_stage<F>(
    stage_id: &str,
    mut stage: F,
    runs: usize,
) -> Result<StageProfile, PipelineError>
where
    F: FnMut() -> Result<(), StageError>,
{
    if runs < 3 {
        return Err(PipelineError::TooFewRuns(runs));
    }
    let fail = |e: StageError| PipelineError::StageFailure(format!("{stage_id}: {e}"));
    stage().map_err(fail)?; // warmup, discarded
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let t = Instant::now();
        stage().map_err(fail)?;
        times.push(t.elapsed().as_secs_f64().max(1e-9));
    }
    times.sort_by(f64::total_cmp);
    let median = if runs % 2 == 1 {
        times[runs / 2]
    } else {
        (times[runs / 2 - 1] + times[runs / 2]) / 2.0
    };
    let p95 = times[(runs as f64 * 0.95).ceil() as usize - 1].max(median);
    Ok(StageProfile {
        stage_id: stage_id.to_string(),
        median_runtime_s: median,
        p95_runtime_s: p95,
        runs,
    })
}

/// One scheduled stage: start offset within the period, the period itself,
/// and the execution budget that defines its deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub stage_id: String,
    pub action_time_s: f64,
    pub action_period_s: f64,
    pub budget_s: f64,
}

/// The planned schedule, one entry per stage in execution order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingTable {
    pub entries: Vec<TimingEntry>,
}

impl TimingTable {
    pub fn entry(&self, stage_id: &str) -> Option<&TimingEntry> {
        self.entries.iter().find(|e| e.stage_id == stage_id)
    }
}

/// Greedy sequential packing in dependency order: each stage starts when the
/// budgets (budget_factor x p95) of everything before it have elapsed.
/// Feasible iff the budget total fits the period.
pub fn plan_schedule(
    profiles: &[StageProfile],
    dependencies: &[(String, String)],
    period_s: f64,
    budget_factor: f64,
) -> Result<TimingTable, PipelineError> {
    if !(period_s > 0.0) || !period_s.is_finite() {
        return Err(PipelineError::BadPlanInput("period must be positive".into()));
    }
    if !(budget_factor > 0.0) || !budget_factor.is_finite() {
        return Err(PipelineError::BadPlanInput(
            "budget factor must be positive".into(),
        ));
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, p) in profiles.iter().enumerate() {
        if index.insert(p.stage_id.as_str(), i).is_some() {
            return Err(PipelineError::DuplicateStage(p.stage_id.clone()));
        }
    }
    let n = profiles.len();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_degree = vec![0usize; n];
    for (from, to) in dependencies {
        let &f = index
            .get(from.as_str())
            .ok_or_else(|| PipelineError::UnknownStage(from.clone()))?;
        let &t = index
            .get(to.as_str())
            .ok_or_else(|| PipelineError::UnknownStage(to.clone()))?;
        successors[f].push(t);
        in_degree[t] += 1;
    }
    // Kahn's algorithm; ready stages release in profile order so the plan is
    // deterministic.
    let mut ready: Vec<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&next) = ready.iter().min() {
        ready.retain(|&i| i != next);
        order.push(next);
        for &succ in &successors[next] {
            in_degree[succ] -= 1;
            if in_degree[succ] == 0 {
                ready.push(succ);
            }
        }
    }
    if order.len() != n {
        return Err(PipelineError::DependencyCycle);
    }
    let mut entries = Vec::with_capacity(n);
    let mut cursor = 0.0f64;
    for &i in &order {
        let budget = budget_factor * profiles[i].p95_runtime_s;
        entries.push(TimingEntry {
            stage_id: profiles[i].stage_id.clone(),
            action_time_s: cursor,
            action_period_s: period_s,
            budget_s: budget,
        });
        cursor += budget;
    }
    if cursor > period_s {
        return Err(PipelineError::PeriodOverflow(cursor - period_s));
    }
    Ok(TimingTable { entries })
}

/// An executable stage. The work function receives the cycle index; data
/// exchange between stages goes through whatever channels the closures
/// capture.
pub struct PipelineStage {
    pub id: String,
    pub work: Box<dyn FnMut(u64) -> Result<(), StageError> + Send>,
}

impl PipelineStage {
    pub fn new<F>(id: &str, work: F) -> Self
    where
        F: FnMut(u64) -> Result<(), StageError> + Send + 'static,
    {
        Self {
            id: id.to_string(),
            work: Box::new(work),
        }
    }
}

/// One executed release of one stage. Timestamps are seconds from run start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage_id: String,
    pub cycle: u64,
    pub start_ts: f64,
    pub end_ts: f64,
    pub deadline_met: bool,
}

/// The executed schedule.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub records: Vec<StageRecord>,
    pub miss_count: usize,
}

impl ScheduleReport {
    pub fn misses_for(&self, stage_id: &str) -> usize {
        self.records
            .iter()
            .filter(|r| r.stage_id == stage_id && !r.deadline_met)
            .count()
    }
}

fn sleep_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let remaining = deadline - now;
        if remaining > Duration::from_micros(500) {
            thread::sleep(remaining - Duration::from_micros(300));
        } else {
            std::hint::spin_loop();
        }
    }
}

/// Execute `cycles` periods of the table. Each stage runs on its own thread,
/// released at its action time each cycle; a stage that outruns its budget is
/// recorded as a miss and the schedule keeps going. A stage silent for ten
/// periods aborts the run with a hang error.
pub fn run_pipeline(
    stages: Vec<PipelineStage>,
    table: &TimingTable,
    cycles: u64,
) -> Result<ScheduleReport, PipelineError> {
    for stage in &stages {
        if table.entry(&stage.id).is_none() {
            return Err(PipelineError::TableMissingStage(stage.id.clone()));
        }
    }
    if stages.is_empty() || cycles == 0 {
        return Ok(ScheduleReport::default());
    }
    let period = table.entries[0].action_period_s;
    let n_stages = stages.len();
    let (tx, rx) = mpsc::channel::<StageRecord>();
    // small grace so thread spawn cost cannot eat into cycle 0
    let t0 = Instant::now() + Duration::from_millis(10);

    for mut stage in stages {
        let entry = table.entry(&stage.id).expect("checked above").clone();
        let tx = tx.clone();
        thread::spawn(move || {
            for cycle in 0..cycles {
                let cycle_start = entry.action_period_s * cycle as f64;
                let release = t0 + Duration::from_secs_f64(cycle_start + entry.action_time_s);
                sleep_until(release);
                let started = Instant::now();
                let ok = (stage.work)(cycle).is_ok();
                let ended = Instant::now();
                let end_ts = ended.duration_since(t0).as_secs_f64();
                let deadline = cycle_start + entry.action_time_s + entry.budget_s;
                let record = StageRecord {
                    stage_id: stage.id.clone(),
                    cycle,
                    start_ts: started.duration_since(t0).as_secs_f64(),
                    end_ts,
                    deadline_met: ok && end_ts <= deadline,
                };
                if tx.send(record).is_err() {
                    return; // coordinator gone (hang abort)
                }
            }
        });
    }
    drop(tx);

    let expected = cycles as usize * n_stages;
    let hang_timeout = Duration::from_secs_f64((10.0 * period).max(1.0));
    let mut records = Vec::with_capacity(expected);
    while records.len() < expected {
        match rx.recv_timeout(hang_timeout) {
            Ok(r) => records.push(r),
            Err(_) => {
                let mut seen: HashMap<&str, usize> = HashMap::new();
                for r in &records {
                    *seen.entry(r.stage_id.as_str()).or_default() += 1;
                }
                let laggard = table
                    .entries
                    .iter()
                    .min_by_key(|e| seen.get(e.stage_id.as_str()).copied().unwrap_or(0))
                    .map(|e| e.stage_id.clone())
                    .unwrap_or_default();
                return Err(PipelineError::StageHang(laggard));
            }
        }
    }
    records.sort_by(|a, b| (a.cycle, &a.stage_id).cmp(&(b.cycle, &b.stage_id)));
    let miss_count = records.iter().filter(|r| !r.deadline_met).count();
    Ok(ScheduleReport {
        records,
        miss_count,
    })
}

//! Line-delimited trace format.
//!
//! One iteration per line with a stable field order:
//!
//! ```text
//! # r2b2-trace v1
//! # digest=<hex> experiment_seed=<u64> draw=<n> init=<n> game_seed=<u64> run_seed=<u64>
//! # agents=<m> horizon=<T> fmax=<f>,<f>,...
//! # init,<idx0>,...,<idx{m-1}>,y,<y0>,...,<y{m-1}>      (one per seeded observation)
//! t,a0,...,a{m-1},y0,...,y{m-1},f0,...,f{m-1}
//! 1,<a>,...,<y>,...,<f>,...
//! #R,<t>,<agent>,<level>:<agent>:<action>|...            (reasoning chains, audit)
//! ```
//!
//! `a*` are action indices, `y*` noisy observed payoffs, `f*` true table
//! payoffs. Floats carry 17 significant digits and round-trip exactly;
//! lines starting with `#` are metadata or audit records.

use std::fmt::Write as _;

use crate::game::{GameError, GameTrace, InitObservation, TraceMeta};
use crate::reasoning::{ReasoningTrace, TraceStep};

pub const TRACE_HEADER: &str = "# r2b2-trace v1";

/// 17-significant-digit float formatting; exact f64 round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_string(trace: &GameTrace) -> String {
    let m = trace.num_agents();
    let mut out = String::new();
    let meta = &trace.meta;
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let _ = writeln!(
        out,
        "# digest={} experiment_seed={} draw={} init={} game_seed={} run_seed={}",
        meta.config_digest, meta.experiment_seed, meta.draw, meta.init, meta.game_seed, meta.run_seed
    );
    let fmax: Vec<String> = meta.fmax.iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(
        out,
        "# agents={} horizon={} fmax={}",
        m,
        trace.horizon(),
        fmax.join(",")
    );
    for obs in &trace.init {
        let idx: Vec<String> = obs.joint_indices.iter().map(|i| i.to_string()).collect();
        let ys: Vec<String> = obs.noisy_payoffs.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "# init,{},y,{}", idx.join(","), ys.join(","));
    }
    // Column header.
    let mut cols = vec!["t".to_string()];
    cols.extend((0..m).map(|i| format!("a{i}")));
    cols.extend((0..m).map(|i| format!("y{i}")));
    cols.extend((0..m).map(|i| format!("f{i}")));
    out.push_str(&cols.join(","));
    out.push('\n');
    for t in 0..trace.horizon() {
        let mut fields = vec![(t + 1).to_string()];
        fields.extend(trace.actions[t].iter().map(|a| a.to_string()));
        fields.extend(trace.noisy_payoffs[t].iter().map(|&v| fmt_f64(v)));
        fields.extend(trace.true_payoffs[t].iter().map(|&v| fmt_f64(v)));
        out.push_str(&fields.join(","));
        out.push('\n');
        for (agent, chain) in trace.reasoning[t].iter().enumerate() {
            if let Some(chain) = chain {
                let steps: Vec<String> = chain
                    .steps
                    .iter()
                    .map(|s| format!("{}:{}:{}", s.level, s.agent, s.action))
                    .collect();
                let _ = writeln!(out, "#R,{},{},{}", t + 1, agent, steps.join("|"));
            }
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> GameError {
    GameError::Trace(msg.into())
}

fn parse_kv(line: &str) -> Vec<(&str, &str)> {
    line.split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .collect()
}

pub fn parse(text: &str) -> Result<GameTrace, GameError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(bad("missing trace header"));
    }
    let id_line = lines.next().ok_or_else(|| bad("missing identity line"))?;
    let mut meta = TraceMeta::default();
    for (k, v) in parse_kv(id_line.trim_start_matches('#')) {
        match k {
            "digest" => meta.config_digest = v.to_string(),
            "experiment_seed" => meta.experiment_seed = v.parse().map_err(|_| bad("bad experiment_seed"))?,
            "draw" => meta.draw = v.parse().map_err(|_| bad("bad draw"))?,
            "init" => meta.init = v.parse().map_err(|_| bad("bad init"))?,
            "game_seed" => meta.game_seed = v.parse().map_err(|_| bad("bad game_seed"))?,
            "run_seed" => meta.run_seed = v.parse().map_err(|_| bad("bad run_seed"))?,
            _ => {}
        }
    }
    let shape_line = lines.next().ok_or_else(|| bad("missing shape line"))?;
    let mut agents = 0usize;
    let mut horizon = 0usize;
    for (k, v) in parse_kv(shape_line.trim_start_matches('#')) {
        match k {
            "agents" => agents = v.parse().map_err(|_| bad("bad agents"))?,
            "horizon" => horizon = v.parse().map_err(|_| bad("bad horizon"))?,
            "fmax" => {
                meta.fmax = v
                    .split(',')
                    .map(|s| s.parse::<f64>().map_err(|_| bad("bad fmax")))
                    .collect::<Result<_, _>>()?;
            }
            _ => {}
        }
    }
    if agents == 0 || meta.fmax.len() != agents {
        return Err(bad("inconsistent agent count"));
    }

    let mut init = Vec::new();
    let mut trace = GameTrace {
        meta,
        init: Vec::new(),
        actions: Vec::with_capacity(horizon),
        noisy_payoffs: Vec::with_capacity(horizon),
        true_payoffs: Vec::with_capacity(horizon),
        instantaneous_gaps: Vec::with_capacity(horizon),
        reasoning: Vec::with_capacity(horizon),
    };
    let mut saw_columns = false;
    for line in lines {
        if let Some(rest) = line.strip_prefix("# init,") {
            let (idx_part, y_part) = rest.split_once(",y,").ok_or_else(|| bad("bad init line"))?;
            let joint_indices: Vec<usize> = idx_part
                .split(',')
                .map(|s| s.parse().map_err(|_| bad("bad init index")))
                .collect::<Result<_, _>>()?;
            let noisy_payoffs: Vec<f64> = y_part
                .split(',')
                .map(|s| s.parse().map_err(|_| bad("bad init payoff")))
                .collect::<Result<_, _>>()?;
            init.push(InitObservation {
                joint_indices,
                noisy_payoffs,
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("#R,") {
            let mut parts = rest.splitn(3, ',');
            let t: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad reasoning t"))?;
            let agent: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad reasoning agent"))?;
            let chain = parts.next().ok_or_else(|| bad("bad reasoning chain"))?;
            let steps: Vec<TraceStep> = chain
                .split('|')
                .map(|s| {
                    let mut f = s.splitn(3, ':');
                    Some(TraceStep {
                        level: f.next()?.parse().ok()?,
                        agent: f.next()?.parse().ok()?,
                        action: f.next()?.parse().ok()?,
                    })
                })
                .collect::<Option<_>>()
                .ok_or_else(|| bad("bad reasoning step"))?;
            let row = trace
                .reasoning
                .get_mut(t - 1)
                .ok_or_else(|| bad("reasoning row out of range"))?;
            row[agent] = Some(ReasoningTrace { steps });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !saw_columns {
            // Column header line.
            saw_columns = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + 3 * agents {
            return Err(bad(format!(
                "row has {} fields, expected {}",
                fields.len(),
                1 + 3 * agents
            )));
        }
        let actions: Vec<usize> = fields[1..1 + agents]
            .iter()
            .map(|s| s.parse().map_err(|_| bad("bad action index")))
            .collect::<Result<_, _>>()?;
        let noisy: Vec<f64> = fields[1 + agents..1 + 2 * agents]
            .iter()
            .map(|s| s.parse().map_err(|_| bad("bad noisy payoff")))
            .collect::<Result<_, _>>()?;
        let truth: Vec<f64> = fields[1 + 2 * agents..1 + 3 * agents]
            .iter()
            .map(|s| s.parse().map_err(|_| bad("bad true payoff")))
            .collect::<Result<_, _>>()?;
        let gaps: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, &f)| trace.meta.fmax[i] - f)
            .collect();
        trace.actions.push(actions);
        trace.noisy_payoffs.push(noisy);
        trace.true_payoffs.push(truth);
        trace.instantaneous_gaps.push(gaps);
        trace.reasoning.push(vec![None; agents]);
    }
    trace.init = init;
    if trace.horizon() != horizon {
        return Err(bad(format!(
            "trace has {} rows, header says {horizon}",
            trace.horizon()
        )));
    }
    Ok(trace)
}

//! Event logs to sessions, cumulative attention flow networks, growth
//! curves and community exponents.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::attention_flow::{AttentionFlowNetwork, Metrics, SiteLabel};
use crate::error::{Error, Result};
use crate::scaling::{fit_growth_rows, ExponentSet, GrowthRow};
use crate::simulation::SessionResult;

pub const DEFAULT_SESSION_GAP: f64 = 1800.0;
const HEADER: [&str; 3] = ["user_id", "timestamp", "resource_id"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub user_id: String,
    pub timestamp: f64,
    pub resource_id: String,
}

/// Reads a `user_id,timestamp,resource_id` CSV and returns the events
/// sorted by timestamp (stable for equal timestamps).
pub fn parse_events<R: Read>(input: R) -> Result<Vec<Event>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = rdr.records();
    match records.next() {
        None => return Ok(Vec::new()),
        Some(header) => {
            let header = header?;
            if header.iter().ne(HEADER) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "expected header `{}`, got `{}`",
                        HEADER.join(","),
                        header.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
        }
    }
    let mut events = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { line, message };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", rec.len())));
        }
        let timestamp: f64 = rec[1]
            .parse()
            .map_err(|_| bad(format!("invalid timestamp `{}`", &rec[1])))?;
        if !timestamp.is_finite() {
            return Err(bad(format!("timestamp `{}` is not finite", &rec[1])));
        }
        if rec[0].is_empty() || rec[2].is_empty() {
            return Err(bad("user_id and resource_id must be non-empty".to_owned()));
        }
        events.push(Event {
            user_id: rec[0].to_owned(),
            timestamp,
            resource_id: rec[2].to_owned(),
        });
    }
    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(events)
}

pub fn write_events_csv<W: Write>(events: &[Event], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for e in events {
        w.write_record([e.user_id.as_str(), &e.timestamp.to_string(), &e.resource_id])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub user_id: String,
    pub resources: Vec<String>,
    pub start_time: f64,
}

impl Session {
    /// Collapses consecutive repeats of the same resource.
    pub fn without_self_loops(mut self) -> Self {
        self.resources.dedup();
        self
    }
}

/// Splits each user's events wherever consecutive timestamps are more than
/// `gap` seconds apart. Sessions come back ordered by start time; sessions
/// starting together keep the order of their first event in `events`.
pub fn sessionize(events: &[Event], gap: f64) -> Result<Vec<Session>> {
    if !(gap > 0.0) {
        return Err(Error::param(format!("session gap must be positive, got {gap}")));
    }
    // (first event position, session)
    let mut done: Vec<(usize, Session)> = Vec::new();
    let mut open: HashMap<&str, (usize, f64, Session)> = HashMap::new();
    let mut ordered: Vec<&Event> = events.iter().collect();
    ordered.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    for (pos, ev) in ordered.into_iter().enumerate() {
        match open.get_mut(ev.user_id.as_str()) {
            Some((_, last, sess)) if ev.timestamp - *last <= gap => {
                sess.resources.push(ev.resource_id.clone());
                *last = ev.timestamp;
            }
            _ => {
                let fresh = Session {
                    user_id: ev.user_id.clone(),
                    resources: vec![ev.resource_id.clone()],
                    start_time: ev.timestamp,
                };
                if let Some((first, _, prev)) =
                    open.insert(ev.user_id.as_str(), (pos, ev.timestamp, fresh))
                {
                    done.push((first, prev));
                }
            }
        }
    }
    done.extend(open.into_values().map(|(first, _, s)| (first, s)));
    done.sort_by_key(|&(first, _)| first);
    Ok(done.into_iter().map(|(_, s)| s).collect())
}

/// Cumulative `(N, A, D, E)` snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub checkpoints: Vec<Metrics>,
}

impl GrowthCurve {
    /// `N,A,D,E` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "A", "D", "E"])?;
        for m in &self.checkpoints {
            w.serialize((m.n_walkers, m.activity, m.diversity, m.edges))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Powers of two up to `total_users`.
pub fn default_checkpoints(total_users: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |&n| n.checked_mul(2))
        .take_while(|&n| n <= total_users)
        .collect()
}

pub fn distinct_users(sessions: &[Session]) -> usize {
    sessions
        .iter()
        .map(|s| s.user_id.as_str())
        .collect::<HashSet<_>>()
        .len()
}

/// Replays sessions in start-time order into one cumulative network and
/// records its metrics when the distinct-user count first reaches each
/// checkpoint. Checkpoints beyond the total user count are skipped.
pub fn growth_curve(sessions: &[Session], checkpoints: &[usize]) -> Result<GrowthCurve> {
    growth_curve_with_network(sessions, checkpoints).map(|(curve, _)| curve)
}

/// Like [`growth_curve`], also returning the final cumulative network.
pub fn growth_curve_with_network(
    sessions: &[Session],
    checkpoints: &[usize],
) -> Result<(GrowthCurve, AttentionFlowNetwork<String>)> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("checkpoints must be strictly increasing"));
    }
    let mut order: Vec<&Session> = sessions.iter().collect();
    order.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));

    let mut net = AttentionFlowNetwork::new();
    let mut users: HashSet<&str> = HashSet::new();
    let mut pending = checkpoints.iter().copied().filter(|&c| c > 0).peekable();
    let mut out = Vec::new();
    for s in order {
        users.insert(s.user_id.as_str());
        net.add_walk(&s.resources);
        while let Some(&c) = pending.peek() {
            if users.len() < c {
                break;
            }
            out.push(net.metrics(users.len()));
            pending.next();
        }
    }
    let skipped: Vec<usize> = pending.collect();
    if !skipped.is_empty() {
        log::warn!(
            "checkpoints {skipped:?} exceed the {} distinct users and were omitted",
            users.len()
        );
    }
    Ok((GrowthCurve { checkpoints: out }, net))
}

/// Fits `α, β, γ, θ` from a growth curve. Needs at least 4 checkpoints
/// spanning at least a decade in `N`.
pub fn community_exponents(curve: &GrowthCurve) -> Result<ExponentSet> {
    let rows: Vec<GrowthRow> = curve.checkpoints.iter().map(GrowthRow::from).collect();
    exponents_from_rows(&rows)
}

/// [`community_exponents`] on real-valued rows.
pub fn exponents_from_rows(rows: &[GrowthRow]) -> Result<ExponentSet> {
    if rows.len() < 4 {
        return Err(Error::fit(format!(
            "insufficient span: need at least 4 checkpoints, got {}",
            rows.len()
        )));
    }
    let lo = rows.iter().map(|r| r.n).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.n).fold(0.0, f64::max);
    if !(lo > 0.0 && hi >= 10.0 * lo) {
        return Err(Error::fit(format!(
            "insufficient span: N covers {lo}..{hi}, less than one decade"
        )));
    }
    fit_growth_rows(rows)
}

/// Event log with one session per walker: walker `i` becomes user
/// `walker<i>`, visiting its sites one second apart, and walkers start
/// `spacing` seconds apart.
pub fn session_to_events(result: &SessionResult, spacing: f64) -> Vec<Event> {
    let mut events = Vec::new();
    for (i, traj) in result.trajectories.iter().enumerate() {
        let start = i as f64 * spacing;
        for (k, site) in traj.sites().iter().enumerate() {
            events.push(Event {
                user_id: format!("walker{i}"),
                timestamp: start + k as f64,
                resource_id: site.label(),
            });
        }
    }
    events
}

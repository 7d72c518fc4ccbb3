use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;
use parking_lot::{Mutex, RwLock};
use serde::Serialize;

use super::log::{read_events, Event, EventLog};
use super::{now_ms, ServiceConfig, ServiceError};
use crate::error::Error;
use crate::multileaver::{gom_multileave, tdm_multileave, GomConfig, Method, MultileaveOutcome};
use crate::ranking::{CreditFunction, InputRankingSet, ItemId, Ranking};
use crate::seed::derive_seed;
use crate::stats::{aggregate_click, pairwise_differences, ClickEvent, CreditVector};

type Res<T> = std::result::Result<T, ServiceError>;

/// Request to open a comparison session.
#[derive(Debug, Clone)]
pub struct NewSession {
    pub ranker_names: Vec<String>,
    pub rankings: Vec<Vec<String>>,
    pub method: Option<Method>,
    pub credit: Option<CreditFunction>,
    /// Defaults to every distinct item.
    pub length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub ranking: Vec<RankedItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedItem {
    pub position: usize,
    pub item: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClickAck {
    pub session_id: String,
    pub ranker_names: Vec<String>,
    pub credits: Vec<f64>,
    pub clicks: usize,
    /// True when the idempotency key had already been applied.
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub experiment_id: String,
    pub ranker_names: Vec<String>,
    pub method: Method,
    pub credit: CreditFunction,
    pub ranking: Vec<RankedItem>,
    pub credits: Vec<f64>,
    pub clicks: usize,
    pub created_ms: u64,
}

/// Experiment totals joined by ranker name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResults {
    pub experiment_id: String,
    pub rankers: Vec<String>,
    pub totals: Vec<f64>,
    /// Sessions each ranker took part in.
    pub sessions_per_ranker: Vec<usize>,
    pub sessions: usize,
    pub clicks: usize,
    /// `pairwise[i][j] = totals[i] - totals[j]`.
    pub pairwise: Vec<Vec<f64>>,
}

#[derive(Debug)]
struct Session {
    experiment_id: String,
    ranker_names: Vec<String>,
    items: Vec<String>,
    inputs: InputRankingSet,
    outcome: MultileaveOutcome,
    credit: CreditFunction,
    acc: CreditVector,
    clicks: usize,
    keys: HashSet<String>,
    created_ms: u64,
    last_ms: u64,
}

impl Session {
    fn ranking(&self) -> Vec<RankedItem> {
        self.outcome
            .output
            .items()
            .iter()
            .enumerate()
            .map(|(i, id)| RankedItem { position: i + 1, item: self.items[id.0 as usize].clone() })
            .collect()
    }
}

#[derive(Debug, Default)]
struct Experiment {
    /// Live member sessions in creation order.
    members: Vec<String>,
    /// Folded credit of evicted sessions, by ranker name.
    retired: IndexMap<String, (f64, usize)>,
    sessions: usize,
    retired_clicks: usize,
}

/// Sessions, experiments and the event log behind them.
#[derive(Debug)]
pub struct Store {
    config: ServiceConfig,
    log: Option<EventLog>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    experiments: RwLock<IndexMap<String, Arc<Mutex<Experiment>>>>,
    counter: AtomicU64,
    nonce: u64,
}

/// Interns item strings in first-seen order and validates each ranking.
fn intern(rankings: &[Vec<String>]) -> Res<(Vec<String>, Vec<Ranking>)> {
    let mut index: HashMap<&str, u64> = HashMap::new();
    let mut items = Vec::new();
    let mut out = Vec::with_capacity(rankings.len());
    for (j, r) in rankings.iter().enumerate() {
        if r.is_empty() {
            return Err(ServiceError::field(format!("rankings[{j}]"), "ranking is empty"));
        }
        let mut seen = HashSet::with_capacity(r.len());
        let mut ids = Vec::with_capacity(r.len());
        for s in r {
            if !seen.insert(s.as_str()) {
                return Err(ServiceError::field(format!("rankings[{j}]"), format!("duplicate item {s:?}")));
            }
            let id = *index.entry(s.as_str()).or_insert_with(|| {
                items.push(s.clone());
                items.len() as u64 - 1
            });
            ids.push(ItemId(id));
        }
        out.push(Ranking::from_distinct(ids));
    }
    Ok((items, out))
}

impl Store {
    /// Opens the store, replaying the configured log if present.
    pub fn open(config: ServiceConfig) -> crate::Result<Self> {
        let events = match &config.log_path {
            Some(p) => read_events(p)?,
            None => Vec::new(),
        };
        let log = config.log_path.as_deref().map(EventLog::open).transpose()?;
        let mut store = Store {
            config,
            log: None,
            sessions: RwLock::default(),
            experiments: RwLock::default(),
            counter: AtomicU64::new(0),
            nonce: rand::random(),
        };
        for event in &events {
            store.apply(event)?;
        }
        store.log = log;
        Ok(store)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_ref().map(EventLog::path)
    }

    fn append(&self, event: &Event) -> Res<()> {
        if let Some(log) = &self.log {
            log.append(event).map_err(ServiceError::internal)?;
        }
        Ok(())
    }

    pub fn flush(&self) -> crate::Result<()> {
        self.log.as_ref().map_or(Ok(()), EventLog::sync)
    }

    fn apply(&self, event: &Event) -> crate::Result<()> {
        let replay_err = |e: ServiceError| Error::InvalidConfig(format!("log replay failed: {}", e.message));
        match event {
            Event::ExperimentCreated { experiment_id } => {
                self.experiment(experiment_id);
            }
            Event::SessionCreated {
                session_id,
                experiment_id,
                ranker_names,
                rankings,
                method,
                credit,
                output,
                teams,
                created_ms,
            } => {
                let (items, rankings) = intern(rankings).map_err(replay_err)?;
                let index: HashMap<&str, u64> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i as u64)).collect();
                let ids = output
                    .iter()
                    .map(|s| index.get(s.as_str()).map(|&i| ItemId(i)))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InvalidConfig(format!("session {session_id} shows an unknown item")))?;
                let outcome = MultileaveOutcome {
                    output: Ranking::new(ids)?,
                    method: *method,
                    teams: teams.clone(),
                    objective_value: None,
                    candidates_evaluated: None,
                };
                let session = Session {
                    experiment_id: experiment_id.clone(),
                    ranker_names: ranker_names.clone(),
                    items,
                    inputs: InputRankingSet::new(rankings)?,
                    outcome,
                    credit: *credit,
                    acc: CreditVector::zeros(ranker_names.len()),
                    clicks: 0,
                    keys: HashSet::new(),
                    created_ms: *created_ms,
                    last_ms: *created_ms,
                };
                self.insert(session_id.clone(), session);
                self.counter.fetch_add(1, Ordering::Relaxed);
            }
            Event::Click { session_id, position, idempotency_key, ts_ms } => {
                self.click_inner(session_id, *position, idempotency_key.as_deref(), *ts_ms, false)
                    .map_err(replay_err)?;
            }
            Event::SessionEvicted { session_id, .. } => {
                self.evict(session_id);
            }
        }
        Ok(())
    }

    fn experiment(&self, id: &str) -> Arc<Mutex<Experiment>> {
        if let Some(e) = self.experiments.read().get(id) {
            return e.clone();
        }
        self.experiments.write().entry(id.to_string()).or_default().clone()
    }

    fn insert(&self, id: String, session: Session) {
        let exp = self.experiment(&session.experiment_id);
        let mut exp = exp.lock();
        self.sessions.write().insert(id.clone(), Arc::new(Mutex::new(session)));
        exp.members.push(id);
        exp.sessions += 1;
    }

    /// Registers an experiment with no sessions. Idempotent.
    pub fn create_experiment(&self, experiment_id: &str) -> Res<()> {
        if self.experiments.read().contains_key(experiment_id) {
            return Ok(());
        }
        self.append(&Event::ExperimentCreated { experiment_id: experiment_id.to_string() })?;
        self.experiment(experiment_id);
        Ok(())
    }

    pub fn create_session(&self, experiment_id: &str, req: NewSession) -> Res<CreatedSession> {
        let n = req.rankings.len();
        if n < 2 {
            return Err(ServiceError::field("rankings", format!("at least two rankings are needed, got {n}")));
        }
        if req.ranker_names.len() != n {
            return Err(ServiceError::field(
                "ranker_names",
                format!("expected {n} names, one per ranking, got {}", req.ranker_names.len()),
            ));
        }
        let mut names = HashSet::new();
        if let Some(dup) = req.ranker_names.iter().find(|s| !names.insert(s.as_str())) {
            return Err(ServiceError::field("ranker_names", format!("duplicate ranker name {dup:?}")));
        }
        let (items, rankings) = intern(&req.rankings)?;
        let inputs = InputRankingSet::new(rankings).map_err(|e| ServiceError::field("rankings", e.to_string()))?;
        let length = req.length.unwrap_or(items.len());
        let method = req.method.unwrap_or(self.config.default_method);
        let credit = req.credit.unwrap_or(self.config.default_credit);

        let seq = self.counter.fetch_add(1, Ordering::Relaxed);
        let seed = derive_seed(self.nonce, &[seq]);
        let outcome = match method {
            Method::Tdm => tdm_multileave(&inputs, length, seed),
            Method::Gom => gom_multileave(
                &inputs,
                &GomConfig {
                    candidate_count: self.config.candidates,
                    alpha: self.config.alpha,
                    credit,
                    output_length: length,
                    rng_seed: seed,
                    ..GomConfig::default()
                },
            ),
        }
        .map_err(|e| ServiceError::field("length", e.to_string()))?;

        let session_id = format!("{:016x}-{seq}", self.nonce);
        let created_ms = now_ms();
        let session = Session {
            experiment_id: experiment_id.to_string(),
            ranker_names: req.ranker_names.clone(),
            items,
            inputs,
            outcome,
            credit,
            acc: CreditVector::zeros(n),
            clicks: 0,
            keys: HashSet::new(),
            created_ms,
            last_ms: created_ms,
        };
        let ranking = session.ranking();
        self.append(&Event::SessionCreated {
            session_id: session_id.clone(),
            experiment_id: experiment_id.to_string(),
            ranker_names: req.ranker_names,
            rankings: req.rankings,
            method,
            credit,
            output: ranking.iter().map(|r| r.item.clone()).collect(),
            teams: session.outcome.teams.clone(),
            created_ms,
        })?;
        self.insert(session_id.clone(), session);
        Ok(CreatedSession { session_id, ranking })
    }

    fn session(&self, id: &str) -> Res<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(format!("unknown session {id:?}")))
    }

    /// Records a click at 1-based `position`. Replaying a seen idempotency
    /// key acknowledges without counting again.
    pub fn record_click(&self, session_id: &str, position: usize, idempotency_key: Option<&str>) -> Res<ClickAck> {
        self.click_inner(session_id, position, idempotency_key, now_ms(), true)
    }

    fn click_inner(&self, id: &str, position: usize, key: Option<&str>, ts_ms: u64, log: bool) -> Res<ClickAck> {
        let handle = self.session(id)?;
        let mut s = handle.lock();
        let ack = |s: &Session, duplicate| ClickAck {
            session_id: id.to_string(),
            ranker_names: s.ranker_names.clone(),
            credits: s.acc.0.clone(),
            clicks: s.clicks,
            duplicate,
        };
        if key.is_some_and(|k| s.keys.contains(k)) {
            return Ok(ack(&s, true));
        }
        let len = s.outcome.output.len();
        if position == 0 || position > len {
            return Err(ServiceError::field("position", format!("position must be between 1 and {len}, got {position}")));
        }
        let mut acc = s.acc.clone();
        aggregate_click(&s.outcome, &s.inputs, s.credit, &ClickEvent::at(position), &mut acc)
            .map_err(|e| ServiceError::field("position", e.to_string()))?;
        if log {
            self.append(&Event::Click {
                session_id: id.to_string(),
                position,
                idempotency_key: key.map(str::to_string),
                ts_ms,
            })?;
        }
        s.acc = acc;
        s.clicks += 1;
        s.last_ms = s.last_ms.max(ts_ms);
        if let Some(k) = key {
            s.keys.insert(k.to_string());
        }
        Ok(ack(&s, false))
    }

    pub fn get_session(&self, id: &str) -> Res<SessionView> {
        let handle = self.session(id)?;
        let s = handle.lock();
        Ok(SessionView {
            session_id: id.to_string(),
            experiment_id: s.experiment_id.clone(),
            ranker_names: s.ranker_names.clone(),
            method: s.outcome.method,
            credit: s.credit,
            ranking: s.ranking(),
            credits: s.acc.0.clone(),
            clicks: s.clicks,
            created_ms: s.created_ms,
        })
    }

    /// Totals per ranker name: evicted sessions first, then live sessions in
    /// creation order. The fixed order keeps results identical after replay.
    pub fn results(&self, experiment_id: &str) -> Res<ExperimentResults> {
        let exp = self
            .experiments
            .read()
            .get(experiment_id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(format!("unknown experiment {experiment_id:?}")))?;
        let exp = exp.lock();
        let mut totals = exp.retired.clone();
        let mut clicks = exp.retired_clicks;
        let sessions = self.sessions.read();
        for id in &exp.members {
            let s = sessions[id].lock();
            for (name, c) in s.ranker_names.iter().zip(&s.acc.0) {
                let slot = totals.entry(name.clone()).or_insert((0.0, 0));
                slot.0 += c;
                slot.1 += 1;
            }
            clicks += s.clicks;
        }
        let values = CreditVector(totals.values().map(|t| t.0).collect());
        let table = pairwise_differences(&values);
        let k = values.len();
        Ok(ExperimentResults {
            experiment_id: experiment_id.to_string(),
            rankers: totals.keys().cloned().collect(),
            totals: values.0.clone(),
            sessions_per_ranker: totals.values().map(|t| t.1).collect(),
            sessions: exp.sessions,
            clicks,
            pairwise: (0..k).map(|i| (0..k).map(|j| table.get(i, j)).collect()).collect(),
        })
    }

    /// Folds sessions idle since before `now_ms - ttl` into their experiments.
    pub fn evict_idle(&self, now_ms: u64) -> Res<usize> {
        let ttl = self.config.session_ttl.as_millis() as u64;
        let stale: Vec<String> = self
            .sessions
            .read()
            .iter()
            .filter(|(_, s)| s.lock().last_ms.saturating_add(ttl) <= now_ms)
            .map(|(id, _)| id.clone())
            .collect();
        let mut count = 0;
        for id in stale {
            self.append(&Event::SessionEvicted { session_id: id.clone(), ts_ms: now_ms })?;
            count += usize::from(self.evict(&id));
        }
        Ok(count)
    }

    fn evict(&self, id: &str) -> bool {
        let Some(exp_id) = self.sessions.read().get(id).map(|s| s.lock().experiment_id.clone()) else {
            return false;
        };
        let exp = self.experiment(&exp_id);
        let mut exp = exp.lock();
        let Some(handle) = self.sessions.write().remove(id) else {
            return false;
        };
        let s = handle.lock();
        for (name, c) in s.ranker_names.iter().zip(&s.acc.0) {
            let slot = exp.retired.entry(name.clone()).or_insert((0.0, 0));
            slot.0 += c;
            slot.1 += 1;
        }
        exp.retired_clicks += s.clicks;
        exp.members.retain(|m| m != id);
        true
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().len()
    }
}

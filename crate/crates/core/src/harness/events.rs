use std::io::Write;

use rand::Rng;

use super::config::{Config, ScenarioSpec};
use super::pipeline::{run_pipeline, PipelineError, RunResults};
use crate::dynamics::{DynamicsError, EntrySpec, Event, EventRecord, LiveState};
use crate::topology::room_slot_positions;

#[derive(Clone, Debug)]
pub struct EventsOutcome {
    pub records: Vec<EventRecord>,
    /// Adjacent UEs sharing time in a color after some event: `(event, u, v, color)`.
    pub clashes: Vec<(usize, usize, usize, usize)>,
    /// Holdings outside their color's share after some event.
    pub conservation_failures: Vec<usize>,
    /// Incumbents that fell below `min(previous accounted, rmin)`: `(event, ue, before, after)`.
    pub safety_violations: Vec<(usize, usize, f64, f64)>,
    pub final_state: LiveState,
}

impl EventsOutcome {
    /// Smallest post-event interference-aware throughput of a guaranteed incumbent.
    pub fn worst_incumbent(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.worst_incumbent_actual)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the live state from the first objective's shares of a finished run.
pub fn live_state(results: &RunResults) -> Result<LiveState, DynamicsError> {
    let first = results
        .objectives
        .first()
        .expect("run has at least one objective");
    LiveState::new(
        results.scenario.clone(),
        results.graph.clone(),
        results.config.graph.dth,
        results.classes(),
        &first.gamma,
        &results.rates,
    )
}

/// Replays `events` against `state`, checking the invariants after each.
pub fn replay(mut state: LiveState, events: &[Event]) -> Result<EventsOutcome, DynamicsError> {
    let mut clashes = Vec::new();
    let mut conservation_failures = Vec::new();
    let mut safety_violations = Vec::new();
    for (e, event) in events.iter().enumerate() {
        let before: Vec<f64> = (0..state.active.len()).map(|i| state.accounted(i)).collect();
        let was_active = state.active.clone();
        state.apply(event)?;
        for (i, &b) in before.iter().enumerate() {
            if !(was_active[i] && state.active[i]) {
                continue;
            }
            let floor = b.min(state.scenario.rmin[i]) - 1e-9;
            let after = state.accounted(i);
            if after < floor {
                safety_violations.push((e, i, b, after));
            }
        }
        if let Some((u, v, c)) = state.find_clash() {
            clashes.push((e, u, v, c));
        }
        if !state.conserves_shares() {
            conservation_failures.push(e);
        }
    }
    Ok(EventsOutcome {
        records: state.log.clone(),
        clashes,
        conservation_failures,
        safety_violations,
        final_state: state,
    })
}

/// Runs the pipeline on `config`, then the event script.
pub fn run_events(config: &Config, events: &[Event]) -> Result<EventsOutcome, PipelineError> {
    let results = run_pipeline(config)?;
    let state = live_state(&results).map_err(|e| PipelineError::Config(e.to_string()))?;
    replay(state, events).map_err(|e| PipelineError::Config(format!("events: {e}")))
}

/// Random single-UE churn in a rooms layout: UEs leave at random and new
/// ones appear in free slots of the room grid. Starts from a full building.
pub fn random_churn<R: Rng + ?Sized>(config: &Config, count: usize, rng: &mut R) -> Result<Vec<Event>, PipelineError> {
    let ScenarioSpec::Rooms {
        rooms,
        ues_per_room,
        room_length,
        ..
    } = config.scenario
    else {
        return Err(PipelineError::Config("random churn needs a rooms scenario".into()));
    };
    let link = config
        .link
        .ok_or_else(|| PipelineError::Config("random churn needs a [link] table".into()))?;
    // occupant[slot] = UE index present in that slot.
    let slots = rooms * ues_per_room;
    let mut occupant: Vec<Option<usize>> = (0..slots).map(Some).collect();
    let mut next = slots;
    let mut events = Vec::with_capacity(count);
    for _ in 0..count {
        let present: Vec<usize> = (0..slots).filter(|&s| occupant[s].is_some()).collect();
        let free: Vec<usize> = (0..slots).filter(|&s| occupant[s].is_none()).collect();
        let leave = free.is_empty() || (!present.is_empty() && rng.random_bool(0.5));
        if leave {
            let s = present[rng.random_range(0..present.len())];
            events.push(Event::Exit(occupant[s].take().expect("slot occupied")));
        } else {
            let s = free[rng.random_range(0..free.len())];
            let room = s / ues_per_room;
            let position = room_slot_positions(room, ues_per_room, room_length)[s % ues_per_room];
            events.push(Event::Enter(EntrySpec {
                sbs: room,
                rmin: link.rmin,
                pmax: link.pmax,
                position,
            }));
            occupant[s] = Some(next);
            next += 1;
        }
    }
    Ok(events)
}

/// `event,kind,ue,satisfied,achieved,worst_incumbent_accounted,worst_incumbent_actual`.
pub fn write_events_csv<W: Write>(records: &[EventRecord], out: W) -> Result<(), PipelineError> {
    let err = |e: csv::Error| PipelineError::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "event",
        "kind",
        "ue",
        "satisfied",
        "achieved",
        "worst_incumbent_accounted",
        "worst_incumbent_actual",
    ])
    .map_err(err)?;
    for r in records {
        let kind = match r.event {
            Event::Enter(_) => "enter",
            Event::Exit(_) => "exit",
        };
        w.write_record([
            r.index.to_string(),
            kind.to_string(),
            r.ue.to_string(),
            r.satisfied.map_or(String::new(), |s| s.to_string()),
            r.achieved.to_string(),
            r.worst_incumbent_accounted.to_string(),
            r.worst_incumbent_actual.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

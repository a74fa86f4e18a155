use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::{MarkSet, PairTable};

use super::config::{apply_event, snap, ParticleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "create-")]
    CreateLeft,
    #[serde(rename = "create+")]
    CreateRight,
    #[serde(rename = "frag")]
    Fragmentation,
    #[serde(rename = "coag")]
    Coagulation,
    #[serde(rename = "exit")]
    Exit,
}

impl EventKind {
    pub fn is_stochastic(self) -> bool {
        matches!(self, EventKind::CreateLeft | EventKind::CreateRight | EventKind::Fragmentation)
    }
}

/// One logged event.
///
/// `index` is the particle index before the event (for creations, the insertion
/// slot). `marks` lists atom indices left to right:
/// creation `[ρ⁻, ρ⁺]` of the new particle, fragmentation and coagulation
/// `[ρ⁻, ρ*, ρ⁺]`, exit `[ρ⁻, ρ⁺]` of the leaving particle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub z: f64,
    pub index: usize,
    pub marks: Vec<usize>,
}

impl Event {
    pub fn new(t: f64, kind: EventKind, z: f64, index: usize, marks: Vec<usize>) -> Self {
        Self { t, kind, z, index, marks }
    }
}

/// A straight piece of one particle path in the `(x, t)` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub minus: usize,
    pub plus: usize,
    pub start: [f64; 2],
    pub end: [f64; 2],
}

/// Full history of one run: initial state, event log and final state.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub marks: MarkSet,
    pub v_inf: f64,
    pub window: [f64; 2],
    pub horizon: [f64; 2],
    pub initial: ParticleConfig,
    pub events: Vec<Event>,
    pub final_config: ParticleConfig,
    /// Contacts where three or more particles met at one point.
    pub triple_collisions: usize,
}

impl Trajectory {
    /// Assembles a trajectory from an event log, replaying it to obtain the final state.
    pub fn from_events(
        marks: MarkSet,
        v_inf: f64,
        window: [f64; 2],
        horizon: [f64; 2],
        initial: ParticleConfig,
        events: Vec<Event>,
    ) -> Result<Self> {
        if !(window[0] < window[1] && horizon[0] <= horizon[1]) {
            return Err(Error::Domain("empty window or horizon".into()));
        }
        if initial.t != horizon[0] {
            return Err(Error::Corruption("initial state is not at the start of the horizon".into()));
        }
        if initial.labels.iter().any(|&l| l >= marks.len()) || events.iter().any(|e| e.marks.iter().any(|&l| l >= marks.len())) {
            return Err(Error::Corruption("label outside the mark set".into()));
        }
        if initial.z.iter().any(|z| *z < window[0] || *z > window[1]) {
            return Err(Error::Corruption("initial particle outside the window".into()));
        }
        if events.iter().any(|e| !(e.t.is_finite() && e.z.is_finite()) || e.t > horizon[1]) {
            return Err(Error::Corruption("event outside the horizon".into()));
        }
        let mut traj = Self {
            marks,
            v_inf,
            window,
            horizon,
            final_config: initial.clone(),
            initial,
            events,
            triple_collisions: 0,
        };
        traj.final_config = traj.replay(|_, _, _| {})?;
        Ok(traj)
    }

    pub fn pairs(&self) -> Result<PairTable> {
        PairTable::new(&self.marks, self.v_inf)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Number of stochastic jumps.
    pub fn jumps(&self) -> usize {
        self.events.iter().filter(|e| e.kind.is_stochastic()).count()
    }

    /// Replays the log, calling `visit` with the state just before and just after each event.
    pub fn replay(&self, mut visit: impl FnMut(&ParticleConfig, &Event, &ParticleConfig)) -> Result<ParticleConfig> {
        let pairs = self.pairs()?;
        let mut q = self.initial.clone();
        for ev in &self.events {
            if ev.t < q.t {
                return Err(Error::Corruption(format!("event at t = {} precedes state time {}", ev.t, q.t)));
            }
            if ev.t != q.t {
                q.advance(&pairs, ev.t);
                if !ev.kind.is_stochastic() {
                    snap(&mut q, &pairs, self.window);
                }
            }
            check_event(&q, ev)?;
            let before = q.clone();
            apply_event(&mut q, ev, self.window);
            visit(&before, ev, &q);
        }
        q.advance(&pairs, self.horizon[1]);
        Ok(q)
    }

    /// State at time `t` (right-continuous in `t`).
    pub fn config_at(&self, t: f64) -> Result<ParticleConfig> {
        if t < self.horizon[0] || t > self.horizon[1] {
            return Err(Error::Range(format!("t = {t} outside the horizon")));
        }
        let pairs = self.pairs()?;
        let mut q = self.initial.clone();
        for ev in self.events.iter().take_while(|e| e.t <= t) {
            if ev.t != q.t {
                q.advance(&pairs, ev.t);
                if !ev.kind.is_stochastic() {
                    snap(&mut q, &pairs, self.window);
                }
            }
            apply_event(&mut q, ev, self.window);
        }
        q.advance(&pairs, t);
        Ok(q)
    }

    /// Particle paths as maximal straight segments.
    pub fn segments(&self) -> Result<Vec<Segment>> {
        let mut open: Vec<[f64; 2]> = self.initial.z.iter().map(|z| [*z, self.initial.t]).collect();
        let mut out = Vec::new();
        let close = |out: &mut Vec<Segment>, q: &ParticleConfig, k: usize, start: [f64; 2]| {
            out.push(Segment { minus: q.labels[k], plus: q.labels[k + 1], start, end: [q.z[k], q.t] });
        };
        let last = self.replay(|before, ev, after| {
            let k = ev.index;
            let at = [ev.z, ev.t];
            match ev.kind {
                EventKind::Exit => {
                    let mut b = before.clone();
                    b.z[k] = ev.z;
                    close(&mut out, &b, k, open.remove(k));
                }
                EventKind::Coagulation => {
                    close(&mut out, before, k, open[k]);
                    close(&mut out, before, k + 1, open[k + 1]);
                    open.remove(k + 1);
                    open[k] = [after.z[k], ev.t];
                }
                EventKind::Fragmentation => {
                    close(&mut out, before, k, open[k]);
                    open[k] = at;
                    open.insert(k, at);
                }
                EventKind::CreateLeft => open.insert(0, at),
                EventKind::CreateRight => open.push(at),
            }
        })?;
        for (k, start) in open.into_iter().enumerate() {
            close(&mut out, &last, k, start);
        }
        Ok(out.into_iter().filter(|s| s.start != s.end).collect())
    }
}

fn check_event(q: &ParticleConfig, ev: &Event) -> Result<()> {
    let n = q.n();
    let k = ev.index;
    let bad = |msg: &str| Err(Error::Corruption(format!("{:?} at t = {}: {msg}", ev.kind, ev.t)));
    let want = match ev.kind {
        EventKind::CreateLeft | EventKind::CreateRight | EventKind::Exit => 2,
        EventKind::Fragmentation | EventKind::Coagulation => 3,
    };
    if ev.marks.len() != want {
        return bad("wrong number of marks");
    }
    let m = &ev.marks;
    let ok = match ev.kind {
        EventKind::CreateLeft => k == 0 && m[1] == q.labels[0] && m[0] < m[1],
        EventKind::CreateRight => k == n && m[0] == q.labels[n] && m[0] < m[1],
        EventKind::Fragmentation => {
            k < n && m[0] == q.labels[k] && m[2] == q.labels[k + 1] && m[0] < m[1] && m[1] < m[2]
        }
        EventKind::Coagulation => k + 1 < n && m[..] == q.labels[k..k + 3],
        EventKind::Exit => (k == 0 || k + 1 == n) && n > 0 && m[..] == q.labels[k..k + 2],
    };
    if !ok {
        return bad("labels do not match the state");
    }
    Ok(())
}

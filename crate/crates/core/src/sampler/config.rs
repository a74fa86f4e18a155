use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::{MarkSet, PairTable};

use super::trajectory::{Event, EventKind};

/// Positions within this distance are treated as one contact.
pub const CONTACT_TOL: f64 = 1e-12;

/// A particle system on `[a⁻, a⁺]`: `n` positions and `n + 1` atom labels.
///
/// Particle `k` sits at `z[k]` between cells `labels[k]` and `labels[k + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub t: f64,
    pub z: Vec<f64>,
    pub labels: Vec<usize>,
}

impl ParticleConfig {
    pub fn new(t: f64, z: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != z.len() + 1 {
            return Err(Error::Shape(format!("{} positions need {} labels, got {}", z.len(), z.len() + 1, labels.len())));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("labels must be strictly increasing".into()));
        }
        if z.windows(2).any(|w| w[0] > w[1]) || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("positions must be finite and sorted".into()));
        }
        Ok(Self { t, z, labels })
    }

    /// The single-cell configuration.
    pub fn empty(t: f64, label: usize) -> Self {
        Self { t, z: Vec::new(), labels: vec![label] }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Velocity `−[ρᵏ, ρᵏ⁺¹]` of particle `k`.
    pub fn velocity(&self, pairs: &PairTable, k: usize) -> f64 {
        -pairs.alpha_ij(self.labels[k], self.labels[k + 1])
    }

    pub fn velocities(&self, pairs: &PairTable) -> Vec<f64> {
        (0..self.n()).map(|k| self.velocity(pairs, k)).collect()
    }

    /// Right-continuous label at `x`.
    pub fn label_at(&self, x: f64) -> usize {
        let k = self.z.partition_point(|z| *z <= x);
        self.labels[k]
    }

    /// Positions after free motion to time `t`; no contact handling.
    pub fn positions_at(&self, pairs: &PairTable, t: f64) -> Vec<f64> {
        let dt = t - self.t;
        (0..self.n()).map(|k| self.z[k] + self.velocity(pairs, k) * dt).collect()
    }

    /// Free motion to time `t` in place.
    pub(crate) fn advance(&mut self, pairs: &PairTable, t: f64) {
        let dt = t - self.t;
        if dt != 0.0 {
            for k in 0..self.n() {
                let v = -pairs.alpha_ij(self.labels[k], self.labels[k + 1]);
                self.z[k] += v * dt;
            }
        }
        self.t = t;
    }

    /// Checks ordering, the window, and the sticky condition for co-located particles.
    pub fn validate(&self, set: &MarkSet, window: [f64; 2], tol: f64) -> Result<()> {
        if self.labels.iter().any(|l| *l >= set.len()) {
            return Err(Error::Invalid("label outside the mark set".into()));
        }
        if self.labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("labels not strictly increasing".into()));
        }
        if self.z.windows(2).any(|w| w[0] > w[1] + tol) {
            return Err(Error::Invalid("positions out of order".into()));
        }
        if self.z.iter().any(|z| *z < window[0] - tol || *z > window[1] + tol) {
            return Err(Error::Invalid("particle outside the window".into()));
        }
        for k in 0..self.n().saturating_sub(1) {
            if (self.z[k + 1] - self.z[k]).abs() <= tol {
                let s = crate::marks::sigma_triple(
                    &set.atom(self.labels[k]),
                    &set.atom(self.labels[k + 1]),
                    &set.atom(self.labels[k + 2]),
                )?;
                if s < 0.0 {
                    continue;
                }
                return Err(Error::Invalid(format!("co-located particles {k}, {} with σ = {s} ≥ 0", k + 1)));
            }
        }
        Ok(())
    }
}

/// Time until the next collision or wall exit under free motion, if any.
pub(crate) fn next_contact(q: &ParticleConfig, pairs: &PairTable, window: [f64; 2]) -> Option<f64> {
    let n = q.n();
    if n == 0 {
        return None;
    }
    let v = q.velocities(pairs);
    let mut best = f64::INFINITY;
    if v[0] < 0.0 {
        best = best.min(((q.z[0] - window[0]) / -v[0]).max(0.0));
    }
    if v[n - 1] > 0.0 {
        best = best.min(((window[1] - q.z[n - 1]) / v[n - 1]).max(0.0));
    }
    for k in 0..n - 1 {
        let closing = v[k] - v[k + 1];
        if closing > 0.0 {
            best = best.min(((q.z[k + 1] - q.z[k]) / closing).max(0.0));
        }
    }
    best.is_finite().then_some(best)
}

/// Applies every wall exit and merge that is due at the current time.
///
/// Boundary exits go first, then contacts left to right; a contact merges iff its
/// triple bracket is nonnegative. Returns the events and the number of instants
/// where three or more particles met.
pub(crate) fn resolve_contacts(q: &mut ParticleConfig, pairs: &PairTable, window: [f64; 2]) -> (Vec<Event>, usize) {
    let mut events = Vec::new();
    let mut triples = 0;
    loop {
        let n = q.n();
        if n == 0 {
            break;
        }
        if q.z[0] <= window[0] + CONTACT_TOL && q.velocity(pairs, 0) < 0.0 {
            let ev = Event::new(q.t, EventKind::Exit, window[0], 0, vec![q.labels[0], q.labels[1]]);
            apply_event(q, &ev, window);
            events.push(ev);
            continue;
        }
        if q.z[n - 1] >= window[1] - CONTACT_TOL && q.velocity(pairs, n - 1) > 0.0 {
            let ev = Event::new(q.t, EventKind::Exit, window[1], n - 1, vec![q.labels[n - 1], q.labels[n]]);
            apply_event(q, &ev, window);
            events.push(ev);
            continue;
        }
        break;
    }
    let mut k = 0;
    while k + 1 < q.n() {
        if (q.z[k + 1] - q.z[k]).abs() > CONTACT_TOL {
            k += 1;
            continue;
        }
        let (a, m, b) = (q.labels[k], q.labels[k + 1], q.labels[k + 2]);
        let s = pairs.alpha_ij(m, b) - pairs.alpha_ij(a, m);
        if s < 0.0 {
            k += 1;
            continue;
        }
        if k + 2 < q.n() && (q.z[k + 2] - q.z[k]).abs() <= CONTACT_TOL {
            triples += 1;
        }
        let ev = Event::new(q.t, EventKind::Coagulation, q.z[k], k, vec![a, m, b]);
        apply_event(q, &ev, window);
        events.push(ev);
        k = k.saturating_sub(1);
    }
    (events, triples)
}

/// Applies a logged event to a configuration sitting at the event time.
///
/// Exits are sided by position: an exit at `window[1]` removes the top label.
pub(crate) fn apply_event(q: &mut ParticleConfig, ev: &Event, window: [f64; 2]) {
    let k = ev.index;
    match ev.kind {
        EventKind::Exit => {
            q.z.remove(k);
            if ev.z >= window[1] {
                q.labels.remove(k + 1);
            } else {
                q.labels.remove(k);
            }
        }
        EventKind::Coagulation => {
            q.z.remove(k + 1);
            q.labels.remove(k + 1);
        }
        EventKind::Fragmentation => {
            q.z.insert(k, ev.z);
            q.labels.insert(k + 1, ev.marks[1]);
        }
        EventKind::CreateLeft => {
            q.z.insert(0, ev.z);
            q.labels.insert(0, ev.marks[0]);
        }
        EventKind::CreateRight => {
            q.z.push(ev.z);
            q.labels.push(ev.marks[1]);
        }
    }
}

/// Deterministic flow over `dt`: free motion, wall exits and sticky merges.
pub fn flow_deterministic(
    q: &ParticleConfig,
    pairs: &PairTable,
    window: [f64; 2],
    dt: f64,
) -> Result<(ParticleConfig, Vec<Event>)> {
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!("dt = {dt} must be nonnegative")));
    }
    let mut q = q.clone();
    let end = q.t + dt;
    let (mut events, _) = resolve_contacts(&mut q, pairs, window);
    loop {
        match next_contact(&q, pairs, window) {
            Some(h) if q.t + h < end => {
                let t = q.t + h;
                q.advance(pairs, t);
                snap(&mut q, pairs, window);
                let (ev, _) = resolve_contacts(&mut q, pairs, window);
                events.extend(ev);
            }
            _ => {
                q.advance(pairs, end);
                break;
            }
        }
    }
    Ok((q, events))
}

/// Removes rounding at a contact instant: clamps to the window and equalizes
/// closing neighbours that are within tolerance.
pub(crate) fn snap(q: &mut ParticleConfig, pairs: &PairTable, window: [f64; 2]) {
    let n = q.n();
    for z in q.z.iter_mut() {
        *z = z.clamp(window[0], window[1]);
    }
    let tol = 1e-9 * (1.0 + (window[1] - window[0]).abs());
    for k in 0..n.saturating_sub(1) {
        let closing = q.velocity(pairs, k) > q.velocity(pairs, k + 1);
        if closing && q.z[k + 1] - q.z[k] <= tol {
            q.z[k + 1] = q.z[k];
        }
    }
    if n > 0 {
        if q.velocity(pairs, 0) < 0.0 && q.z[0] - window[0] <= tol {
            q.z[0] = window[0];
        }
        if q.velocity(pairs, n - 1) > 0.0 && window[1] - q.z[n - 1] <= tol {
            q.z[n - 1] = window[1];
        }
    }
}

//! Online policies (MG, EDF_alpha, Greedy) and the discrete-time engine.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{canonical_cmp, validate_instance, Instance, Packet, TimeBound};
use crate::provisional::{
    greedy_cmp, optimal_provisional_schedule, select_e_h, ProvisionalSchedule,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Mg,
    EdfAlpha,
    Greedy,
}

impl PolicyKind {
    pub fn tag(self) -> &'static str {
        match self {
            PolicyKind::Mg => "mg",
            PolicyKind::EdfAlpha => "edf",
            PolicyKind::Greedy => "greedy",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mg" => Ok(PolicyKind::Mg),
            "edf" | "edf-alpha" | "edf_alpha" => Ok(PolicyKind::EdfAlpha),
            "greedy" => Ok(PolicyKind::Greedy),
            other => Err(format!("unknown policy '{other}'")),
        }
    }
}

/// Policy selector with its `(alpha, beta)` thresholds.
///
/// An unbounded `alpha` is represented by positive infinity, which makes
/// `v_h / alpha` evaluate to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams<V> {
    pub kind: PolicyKind,
    pub alpha: V,
    pub beta: V,
}

impl<V: Scalar> PolicyParams<V> {
    pub fn new(kind: PolicyKind, alpha: V, beta: V) -> Result<Self> {
        let p = PolicyParams { kind, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn mg(alpha: V, beta: V) -> Result<Self> {
        Self::new(PolicyKind::Mg, alpha, beta)
    }

    pub fn mg_unbounded() -> Self {
        PolicyParams {
            kind: PolicyKind::Mg,
            alpha: V::infinity(),
            beta: V::one(),
        }
    }

    pub fn edf_alpha(alpha: V) -> Result<Self> {
        Self::new(PolicyKind::EdfAlpha, alpha, V::one())
    }

    pub fn greedy() -> Self {
        PolicyParams {
            kind: PolicyKind::Greedy,
            alpha: V::one(),
            beta: V::one(),
        }
    }

    pub fn alpha_is_unbounded(&self) -> bool {
        self.alpha.is_infinite()
    }

    pub fn validate(&self) -> Result<()> {
        let one = V::one();
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.alpha.is_nan() || self.alpha < one {
            return bad(format!(
                "alpha must be >= 1 or unbounded, got {}",
                self.alpha
            ));
        }
        if !self.beta.is_finite() || self.beta < one {
            return bad(format!("beta must be finite and >= 1, got {}", self.beta));
        }
        match self.kind {
            PolicyKind::Mg if self.beta > self.alpha => bad(format!(
                "MG requires beta <= alpha ({} > {})",
                self.beta, self.alpha
            )),
            PolicyKind::Greedy if self.alpha != one || self.beta != one => {
                bad("greedy is MG with alpha = beta = 1".into())
            }
            _ => Ok(()),
        }
    }
}

impl<V: Scalar> fmt::Display for PolicyParams<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind)?;
        if self.alpha_is_unbounded() {
            f.write_str("inf")?;
        } else {
            write!(f, "{}", self.alpha)?;
        }
        write!(f, ",{})", self.beta)
    }
}

/// MG's choice from an optimal provisional schedule.
///
/// Sends `e` when `v_e >= v_h / alpha`; otherwise the first entry whose value
/// reaches `max(v_h / alpha, beta * v_e)`.
pub fn mg_select<'a, V: Scalar>(
    s: &'a ProvisionalSchedule<V>,
    params: &PolicyParams<V>,
) -> Result<&'a Packet<V>> {
    let (e, h) = select_e_h(s)?;
    let floor = h.value / params.alpha;
    if e.value >= floor {
        return Ok(e);
    }
    let threshold = floor.max(params.beta * e.value);
    Ok(s.packets().find(|p| p.value >= threshold).unwrap_or(h))
}

/// EDF_alpha: earliest-deadline pending packet worth at least `max / alpha`.
pub fn edf_alpha_select<V: Scalar>(pending: &[Packet<V>], t: i64, alpha: V) -> Result<&Packet<V>> {
    let top = pending
        .iter()
        .filter(|p| p.is_pending_at(t))
        .map(|p| p.value)
        .fold(None, |m: Option<V>, v| Some(m.map_or(v, |m| m.max(v))))
        .ok_or(Error::EmptyBuffer)?;
    let threshold = top / alpha;
    pending
        .iter()
        .filter(|p| p.is_pending_at(t) && p.value >= threshold)
        .min_by(|a, b| canonical_cmp(a, b))
        .ok_or(Error::EmptyBuffer)
}

/// Highest-value pending packet; ties go to the earlier deadline, then the smaller id.
pub fn greedy_select<V: Scalar>(pending: &[Packet<V>], t: i64) -> Result<&Packet<V>> {
    pending
        .iter()
        .filter(|p| p.is_pending_at(t))
        .min_by(|a, b| greedy_cmp(a, b))
        .ok_or(Error::EmptyBuffer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<V> {
    pub t: i64,
    pub sent: Option<u64>,
    pub sent_value: V,
    /// Buffer occupancy after arrivals and expiry, before the send.
    pub buffer_size: usize,
    pub schedule_value: V,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<V> {
    pub steps: Vec<StepRecord<V>>,
    pub total_value: V,
    pub dropped_expired: Vec<u64>,
}

impl<V: Scalar> SimulationTrace<V> {
    pub fn sent_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.steps.iter().filter_map(|s| s.sent)
    }

    pub fn sent_count(&self) -> usize {
        self.steps.iter().filter(|s| s.sent.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Fail if any step's provisional schedule has a packet with an earlier
    /// deadline and a strictly smaller value than a later entry.
    pub check_slack_order: bool,
}

/// Runs `params` over `inst` for steps `1..=inst.horizon()`.
pub fn simulate<V: Scalar>(
    inst: &Instance<V>,
    params: &PolicyParams<V>,
) -> Result<SimulationTrace<V>> {
    simulate_with(inst, params, SimOptions::default())
}

pub fn simulate_with<V: Scalar>(
    inst: &Instance<V>,
    params: &PolicyParams<V>,
    opts: SimOptions,
) -> Result<SimulationTrace<V>> {
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    params.validate()?;

    let mut arrivals: Vec<Packet<V>> = inst.packets.clone();
    arrivals.sort_by_key(|p| (p.release, p.id));
    let mut next = 0;

    let horizon = inst.horizon();
    let mut pending: Vec<Packet<V>> = Vec::new();
    let mut steps = Vec::with_capacity(horizon.max(0) as usize);
    let mut dropped = Vec::new();
    let mut total = V::zero();

    for t in 1..=horizon {
        while next < arrivals.len() && arrivals[next].release == t {
            pending.push(arrivals[next]);
            next += 1;
        }
        pending.retain(|p| {
            let alive = p.deadline.admits(t);
            if !alive {
                dropped.push(p.id);
            }
            alive
        });

        let mut record = StepRecord {
            t,
            sent: None,
            sent_value: V::zero(),
            buffer_size: pending.len(),
            schedule_value: V::zero(),
        };
        if !pending.is_empty() {
            let schedule = optimal_provisional_schedule(&pending, t);
            record.schedule_value = schedule.total_value;
            if opts.check_slack_order {
                check_slack_order(&schedule)?;
            }
            let chosen = match params.kind {
                PolicyKind::Mg => mg_select(&schedule, params)?,
                PolicyKind::EdfAlpha => edf_alpha_select(&pending, t, params.alpha)?,
                PolicyKind::Greedy => greedy_select(&pending, t)?,
            };
            debug_assert!(chosen.is_pending_at(t));
            let (id, value) = (chosen.id, chosen.value);
            record.sent = Some(id);
            record.sent_value = value;
            total = total + value;
            let pos = pending
                .iter()
                .position(|p| p.id == id)
                .expect("sent packet is pending");
            pending.swap_remove(pos);
        }
        steps.push(record);
    }
    dropped.extend(pending.iter().map(|p| p.id));

    Ok(SimulationTrace {
        steps,
        total_value: total,
        dropped_expired: dropped,
    })
}

fn check_slack_order<V: Scalar>(s: &ProvisionalSchedule<V>) -> Result<()> {
    // entries are sorted by deadline; track the minimum value over strictly
    // earlier deadlines
    let mut min_before: Option<V> = None;
    let mut group_min: Option<V> = None;
    let mut group_deadline = TimeBound::At(i64::MIN);
    for e in &s.entries {
        let p = &e.packet;
        if p.deadline != group_deadline {
            if let Some(g) = group_min {
                min_before = Some(min_before.map_or(g, |m| m.min(g)));
            }
            group_min = None;
            group_deadline = p.deadline;
        }
        if let Some(m) = min_before {
            if m < p.value {
                return Err(Error::SlackOrder {
                    time: s.time,
                    detail: format!(
                        "packet {} (deadline {}, value {}) follows a smaller value {}",
                        p.id, p.deadline, p.value, m
                    ),
                });
            }
        }
        group_min = Some(group_min.map_or(p.value, |g| g.min(p.value)));
    }
    Ok(())
}

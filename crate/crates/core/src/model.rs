//! Packets, instances, validation and variant classification.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::{cmp_scalar, Scalar};

/// A point in discrete time that may also be unbounded.
///
/// `Unbounded` compares greater than every finite time, so sorting by
/// deadline puts unbounded packets last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeBound {
    At(i64),
    Unbounded,
}

impl TimeBound {
    pub fn is_unbounded(self) -> bool {
        matches!(self, TimeBound::Unbounded)
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            TimeBound::At(t) => Some(t),
            TimeBound::Unbounded => None,
        }
    }

    /// True if a packet with this deadline may still be sent at time `t`.
    pub fn admits(self, t: i64) -> bool {
        match self {
            TimeBound::At(d) => t <= d,
            TimeBound::Unbounded => true,
        }
    }
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBound::At(t) => write!(f, "{t}"),
            TimeBound::Unbounded => f.write_str("inf"),
        }
    }
}

/// A unit-length packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet<V> {
    pub id: u64,
    pub release: i64,
    pub deadline: TimeBound,
    pub value: V,
}

impl<V: Scalar> Packet<V> {
    pub fn new(id: u64, release: i64, deadline: i64, value: V) -> Self {
        Packet {
            id,
            release,
            deadline: TimeBound::At(deadline),
            value,
        }
    }

    pub fn unbounded(id: u64, release: i64, value: V) -> Self {
        Packet {
            id,
            release,
            deadline: TimeBound::Unbounded,
            value,
        }
    }

    /// Slack time `deadline - release`; unbounded when the deadline is.
    pub fn slack(&self) -> TimeBound {
        match self.deadline {
            TimeBound::At(d) => TimeBound::At(d - self.release),
            TimeBound::Unbounded => TimeBound::Unbounded,
        }
    }

    /// Alive at `t`: released and not expired.
    pub fn is_pending_at(&self, t: i64) -> bool {
        self.release <= t && self.deadline.admits(t)
    }
}

/// Canonical order: increasing deadline, then decreasing value, then increasing id.
pub fn canonical_cmp<V: Scalar>(a: &Packet<V>, b: &Packet<V>) -> Ordering {
    a.deadline
        .cmp(&b.deadline)
        .then_with(|| cmp_scalar(b.value, a.value))
        .then_with(|| a.id.cmp(&b.id))
}

/// Generator descriptor carried in the first line of an instance file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slack: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_span: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<V> {
    pub packets: Vec<Packet<V>>,
    pub meta: Option<InstanceMeta>,
}

impl<V> Default for Instance<V> {
    fn default() -> Self {
        Instance {
            packets: Vec::new(),
            meta: None,
        }
    }
}

impl<V: Scalar> Instance<V> {
    pub fn new(packets: Vec<Packet<V>>) -> Self {
        Instance {
            packets,
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: InstanceMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn max_release(&self) -> Option<i64> {
        self.packets.iter().map(|p| p.release).max()
    }

    /// Last slot an unbounded packet is ever considered for: `max(release) + n`.
    pub fn unbounded_cap(&self) -> i64 {
        self.max_release().unwrap_or(0) + self.packets.len() as i64
    }

    /// Last time step of the simulation and of the offline slot range.
    pub fn horizon(&self) -> i64 {
        let mut h = self.max_release().unwrap_or(0);
        for p in &self.packets {
            match p.deadline {
                TimeBound::At(d) => h = h.max(d),
                TimeBound::Unbounded => h = h.max(self.unbounded_cap()),
            }
        }
        h
    }

    /// Effective last slot for `p`, with unbounded deadlines capped.
    pub fn last_slot(&self, p: &Packet<V>) -> i64 {
        p.deadline.finite().unwrap_or_else(|| self.unbounded_cap())
    }

    pub fn total_value(&self) -> V {
        self.packets.iter().map(|p| p.value).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    ReleaseBeforeOne,
    DeadlineBeforeRelease,
    NonPositiveValue,
    NonFiniteValue,
    DuplicateId,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::ReleaseBeforeOne => "release must be >= 1",
            Rule::DeadlineBeforeRelease => "deadline before release",
            Rule::NonPositiveValue => "non-positive value",
            Rule::NonFiniteValue => "non-finite value",
            Rule::DuplicateId => "duplicate id",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub id: u64,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "packet {}: {}", self.id, self.rule)
    }
}

/// Checks every packet and instance invariant. An empty result means valid.
pub fn validate_instance<V: Scalar>(inst: &Instance<V>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::with_capacity(inst.packets.len());
    for p in &inst.packets {
        let mut push = |rule| out.push(Violation { id: p.id, rule });
        if !seen.insert(p.id) {
            push(Rule::DuplicateId);
        }
        if p.release < 1 {
            push(Rule::ReleaseBeforeOne);
        }
        if let TimeBound::At(d) = p.deadline {
            if d < p.release {
                push(Rule::DeadlineBeforeRelease);
            }
        }
        if !p.value.is_finite() {
            push(Rule::NonFiniteValue);
        } else if p.value <= V::zero() {
            push(Rule::NonPositiveValue);
        }
    }
    out
}

/// The general model and the eight pairwise-constrained settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    General,
    AgreeableDeadline,
    AntiAgreeableDeadline,
    AgreeableValue,
    AntiAgreeableValue,
    AgreeableDeadlineValue,
    AntiAgreeableDeadlineValue,
    AgreeableSlackValue,
    AntiAgreeableSlackValue,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::General,
        Variant::AgreeableDeadline,
        Variant::AntiAgreeableDeadline,
        Variant::AgreeableValue,
        Variant::AntiAgreeableValue,
        Variant::AgreeableDeadlineValue,
        Variant::AntiAgreeableDeadlineValue,
        Variant::AgreeableSlackValue,
        Variant::AntiAgreeableSlackValue,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::AgreeableDeadline => "agreeable-deadline",
            Variant::AntiAgreeableDeadline => "anti-agreeable-deadline",
            Variant::AgreeableValue => "agreeable-value",
            Variant::AntiAgreeableValue => "anti-agreeable-value",
            Variant::AgreeableDeadlineValue => "agreeable-deadline-value",
            Variant::AntiAgreeableDeadlineValue => "anti-agreeable-deadline-value",
            Variant::AgreeableSlackValue => "agreeable-slack-value",
            Variant::AntiAgreeableSlackValue => "anti-agreeable-slack-value",
        }
    }

    /// Row label used in the human-readable summary table.
    pub fn label(self) -> &'static str {
        match self {
            Variant::General => "general",
            Variant::AgreeableDeadline => "agreeable deadline",
            Variant::AntiAgreeableDeadline => "anti-agreeable deadline",
            Variant::AgreeableValue => "agreeable value",
            Variant::AntiAgreeableValue => "anti-agreeable value",
            Variant::AgreeableDeadlineValue => "agreeable deadline/value",
            Variant::AntiAgreeableDeadlineValue => "anti-agreeable deadline/value",
            Variant::AgreeableSlackValue => "agreeable slack-time/value",
            Variant::AntiAgreeableSlackValue => "anti-agreeable slack-time/value",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '/'], "-");
        let norm = norm.replace("slack-time", "slack");
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.tag() == norm)
            .ok_or_else(|| format!("unknown variant '{s}'"))
    }
}

/// One flag per pairwise-constrained setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VariantClass {
    pub agreeable_deadline: bool,
    pub anti_agreeable_deadline: bool,
    pub agreeable_value: bool,
    pub anti_agreeable_value: bool,
    pub agreeable_deadline_value: bool,
    pub anti_agreeable_deadline_value: bool,
    pub agreeable_slack_value: bool,
    pub anti_agreeable_slack_value: bool,
}

impl VariantClass {
    /// Flag for `v`; `General` is always satisfied.
    pub fn satisfies(&self, v: Variant) -> bool {
        match v {
            Variant::General => true,
            Variant::AgreeableDeadline => self.agreeable_deadline,
            Variant::AntiAgreeableDeadline => self.anti_agreeable_deadline,
            Variant::AgreeableValue => self.agreeable_value,
            Variant::AntiAgreeableValue => self.anti_agreeable_value,
            Variant::AgreeableDeadlineValue => self.agreeable_deadline_value,
            Variant::AntiAgreeableDeadlineValue => self.anti_agreeable_deadline_value,
            Variant::AgreeableSlackValue => self.agreeable_slack_value,
            Variant::AntiAgreeableSlackValue => self.anti_agreeable_slack_value,
        }
    }

    pub fn flags(&self) -> [(Variant, bool); 8] {
        let mut out = [(Variant::General, true); 8];
        for (slot, v) in out.iter_mut().zip(&Variant::ALL[1..]) {
            *slot = (*v, self.satisfies(*v));
        }
        out
    }
}

/// Decides "for every p, q with key(p) <= key(q): val(p) <= val(q)" (or `>=`
/// when `increasing` is false) in O(n log n).
///
/// Equal keys force equal values, and the per-key value must be monotone
/// across increasing keys.
fn pairwise_monotone<K: Ord + Copy, T: Copy>(
    mut items: Vec<(K, T)>,
    cmp: impl Fn(T, T) -> Ordering,
    increasing: bool,
) -> bool {
    items.sort_by_key(|a| a.0);
    let mut prev: Option<T> = None;
    let mut i = 0;
    while i < items.len() {
        let key = items[i].0;
        let val = items[i].1;
        let mut j = i + 1;
        while j < items.len() && items[j].0 == key {
            if cmp(items[j].1, val) != Ordering::Equal {
                return false;
            }
            j += 1;
        }
        if let Some(p) = prev {
            let ord = cmp(p, val);
            let ok = if increasing {
                ord != Ordering::Greater
            } else {
                ord != Ordering::Less
            };
            if !ok {
                return false;
            }
        }
        prev = Some(val);
        i = j;
    }
    true
}

/// Evaluates all eight pairwise conditions.
pub fn classify_variants<V: Scalar>(inst: &Instance<V>) -> VariantClass {
    let ps = &inst.packets;
    let rel_dl: Vec<_> = ps.iter().map(|p| (p.release, p.deadline)).collect();
    let rel_val: Vec<_> = ps.iter().map(|p| (p.release, p.value)).collect();
    let dl_val: Vec<_> = ps.iter().map(|p| (p.deadline, p.value)).collect();
    let slack_val: Vec<_> = ps.iter().map(|p| (p.slack(), p.value)).collect();
    let ord = |a: TimeBound, b: TimeBound| a.cmp(&b);
    VariantClass {
        agreeable_deadline: pairwise_monotone(rel_dl.clone(), ord, true),
        anti_agreeable_deadline: pairwise_monotone(rel_dl, ord, false),
        agreeable_value: pairwise_monotone(rel_val.clone(), cmp_scalar, true),
        anti_agreeable_value: pairwise_monotone(rel_val, cmp_scalar, false),
        agreeable_deadline_value: pairwise_monotone(dl_val.clone(), cmp_scalar, true),
        anti_agreeable_deadline_value: pairwise_monotone(dl_val, cmp_scalar, false),
        agreeable_slack_value: pairwise_monotone(slack_val.clone(), cmp_scalar, true),
        anti_agreeable_slack_value: pairwise_monotone(slack_val, cmp_scalar, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(id: u64, r: i64, d: i64, v: f64) -> Packet<f64> {
        Packet::new(id, r, d, v)
    }

    /// Direct O(n^2) evaluation of the quantified conditions.
    fn brute_classify(inst: &Instance<f64>) -> VariantClass {
        let ps = &inst.packets;
        let all = |f: &dyn Fn(&Packet<f64>, &Packet<f64>) -> bool| {
            ps.iter().all(|a| ps.iter().all(|b| f(a, b)))
        };
        VariantClass {
            agreeable_deadline: all(&|a, b| a.release > b.release || a.deadline <= b.deadline),
            anti_agreeable_deadline: all(&|a, b| a.release > b.release || a.deadline >= b.deadline),
            agreeable_value: all(&|a, b| a.release > b.release || a.value <= b.value),
            anti_agreeable_value: all(&|a, b| a.release > b.release || a.value >= b.value),
            agreeable_deadline_value: all(&|a, b| a.deadline > b.deadline || a.value <= b.value),
            anti_agreeable_deadline_value: all(&|a, b| {
                a.deadline > b.deadline || a.value >= b.value
            }),
            agreeable_slack_value: all(&|a, b| a.slack() > b.slack() || a.value <= b.value),
            anti_agreeable_slack_value: all(&|a, b| a.slack() > b.slack() || a.value >= b.value),
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = Instance::new(vec![p(0, 1, 1, 1.0)]);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn deadline_before_release_is_reported() {
        let inst = Instance::new(vec![p(3, 1, 0, 1.0)]);
        assert_eq!(
            validate_instance(&inst),
            vec![Violation {
                id: 3,
                rule: Rule::DeadlineBeforeRelease
            }]
        );
    }

    #[test]
    fn zero_value_is_reported() {
        let inst = Instance::new(vec![p(1, 1, 1, 0.0)]);
        assert_eq!(validate_instance(&inst)[0].rule, Rule::NonPositiveValue);
    }

    #[test]
    fn other_violations() {
        let inst = Instance::new(vec![
            p(1, 0, 2, 1.0),
            p(1, 1, 2, f64::INFINITY),
            Packet::unbounded(2, 5, 1.0),
        ]);
        let rules: Vec<_> = validate_instance(&inst)
            .into_iter()
            .map(|v| v.rule)
            .collect();
        assert_eq!(
            rules,
            vec![
                Rule::ReleaseBeforeOne,
                Rule::DuplicateId,
                Rule::NonFiniteValue
            ]
        );
    }

    #[test]
    fn classify_two_packets() {
        let inst = Instance::new(vec![p(0, 1, 1, 5.0), p(1, 2, 3, 1.0)]);
        let c = classify_variants(&inst);
        assert!(c.agreeable_deadline);
        assert!(c.anti_agreeable_value);
        assert!(!c.agreeable_value);
        assert_eq!(c, brute_classify(&inst));
    }

    #[test]
    fn classify_empty_is_all_true() {
        let c = classify_variants(&Instance::<f64>::default());
        assert!(c.flags().iter().all(|(_, f)| *f));
    }

    #[test]
    fn classify_ties_satisfy_both() {
        let inst = Instance::new(vec![p(0, 1, 2, 1.0), p(1, 2, 2, 1.0)]);
        let c = classify_variants(&inst);
        assert!(c.flags().iter().all(|(_, f)| *f), "{c:?}");
    }

    #[test]
    fn unbounded_deadline_sorts_last() {
        assert!(TimeBound::At(i64::MAX) < TimeBound::Unbounded);
        let inst = Instance::new(vec![Packet::unbounded(0, 1, 9.0), p(1, 1, 1_000_000, 1.0)]);
        let c = classify_variants(&inst);
        assert!(c.agreeable_deadline_value);
        assert!(!c.anti_agreeable_deadline_value);
        assert!(!c.anti_agreeable_slack_value);
    }

    #[test]
    fn horizon_caps_unbounded() {
        let inst = Instance::new(vec![Packet::unbounded(0, 3, 1.0), p(1, 1, 2, 1.0)]);
        assert_eq!(inst.unbounded_cap(), 5);
        assert_eq!(inst.horizon(), 5);
        assert_eq!(Instance::<f64>::default().horizon(), 0);
    }

    #[test]
    fn variant_tags_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.tag().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(
            "agreeable-slack-time/value".parse::<Variant>().unwrap(),
            Variant::AgreeableSlackValue
        );
    }

    fn arb_instance() -> impl Strategy<Value = Instance<f64>> {
        prop::collection::vec((1i64..6, 0i64..4, 1u32..5, prop::bool::weighted(0.1)), 0..9)
            .prop_map(|raw| {
                Instance::new(
                    raw.into_iter()
                        .enumerate()
                        .map(|(i, (r, s, v, unb))| {
                            if unb {
                                Packet::unbounded(i as u64, r, v as f64)
                            } else {
                                Packet::new(i as u64, r, r + s, v as f64)
                            }
                        })
                        .collect(),
                )
            })
    }

    proptest! {
        #[test]
        fn classify_matches_pairwise(inst in arb_instance()) {
            prop_assert_eq!(classify_variants(&inst), brute_classify(&inst));
        }

        #[test]
        fn classify_monotone_under_removal(inst in arb_instance(), idx in 0usize..9) {
            prop_assume!(!inst.is_empty());
            let before = classify_variants(&inst);
            let mut smaller = inst.clone();
            smaller.packets.remove(idx % inst.len());
            let after = classify_variants(&smaller);
            for ((_, b), (_, a)) in before.flags().iter().zip(after.flags().iter()) {
                prop_assert!(!b || *a);
            }
        }

        #[test]
        fn reversing_values_flips_agreeable_value(inst in arb_instance()) {
            let c = classify_variants(&inst);
            prop_assume!(c.agreeable_value);
            let max = inst.packets.iter().map(|p| p.value).fold(0.0, f64::max);
            let mut flipped = inst.clone();
            for p in &mut flipped.packets {
                p.value = max + 1.0 - p.value;
            }
            prop_assert!(classify_variants(&flipped).anti_agreeable_value);
        }

        #[test]
        fn both_deadline_flags_force_equal_deadlines_per_release(inst in arb_instance()) {
            let c = classify_variants(&inst);
            prop_assume!(c.agreeable_deadline && c.anti_agreeable_deadline);
            for a in &inst.packets {
                for b in &inst.packets {
                    if a.release == b.release {
                        prop_assert_eq!(a.deadline, b.deadline);
                    }
                }
            }
        }
    }
}

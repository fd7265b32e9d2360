//! Optimal provisional schedules over the pending buffer.
//!
//! A provisional schedule at time `t` assigns pending packets to the slots
//! `t, t + 1, ...` assuming nothing else arrives. The optimal one is found by
//! the matroid greedy: scan packets by decreasing value and keep each one that
//! still fits, where "fits" is decided by placing it in the latest free slot no
//! later than its deadline (a union-find over slots).

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{canonical_cmp, Packet, TimeBound};
use crate::scalar::{cmp_scalar, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry<V> {
    pub packet: Packet<V>,
    pub slot: i64,
}

/// Pending packets chosen for transmission, in canonical order, with the
/// `i`-th entry occupying slot `time + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvisionalSchedule<V> {
    pub time: i64,
    pub entries: Vec<Entry<V>>,
    pub total_value: V,
}

impl<V: Scalar> ProvisionalSchedule<V> {
    pub fn empty(time: i64) -> Self {
        ProvisionalSchedule {
            time,
            entries: Vec::new(),
            total_value: V::zero(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet<V>> {
        self.entries.iter().map(|e| &e.packet)
    }

    pub fn contains(&self, id: u64) -> bool {
        self.entries.iter().any(|e| e.packet.id == id)
    }
}

/// Slot-counting feasibility: sorted by deadline, the `i`-th packet (0-based)
/// must have a deadline no earlier than `t + i`.
pub fn feasible<V: Scalar>(packets: &[Packet<V>], t: i64) -> bool {
    let mut dls: Vec<TimeBound> = packets.iter().map(|p| p.deadline).collect();
    dls.sort();
    dls.iter().enumerate().all(|(i, d)| d.admits(t + i as i64))
}

/// Order in which the greedy considers packets: decreasing value, then
/// earlier deadline, then smaller id.
pub(crate) fn greedy_cmp<V: Scalar>(a: &Packet<V>, b: &Packet<V>) -> Ordering {
    cmp_scalar(b.value, a.value)
        .then_with(|| a.deadline.cmp(&b.deadline))
        .then_with(|| a.id.cmp(&b.id))
}

/// Latest-free-slot finder over slots `0..n`, indices shifted by one so that
/// `0` means "no free slot".
struct SlotFinder {
    parent: Vec<usize>,
}

impl SlotFinder {
    fn new(n: usize) -> Self {
        SlotFinder {
            parent: (0..=n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Claims the latest free slot `<= cap` (0-based), if any.
    fn claim(&mut self, cap: usize) -> Option<usize> {
        let s = self.find(cap + 1);
        if s == 0 {
            return None;
        }
        self.parent[s] = s - 1;
        Some(s - 1)
    }
}

/// Computes the canonical maximum-value provisional schedule at time `t`.
///
/// Every packet in `pending` must be released by `t` and not yet expired.
pub fn optimal_provisional_schedule<V: Scalar>(
    pending: &[Packet<V>],
    t: i64,
) -> ProvisionalSchedule<V> {
    let n = pending.len();
    if n == 0 {
        return ProvisionalSchedule::empty(t);
    }
    debug_assert!(pending.iter().all(|p| p.is_pending_at(t)));

    let mut order: Vec<&Packet<V>> = pending.iter().collect();
    order.sort_by(|a, b| greedy_cmp(a, b));

    let mut slots = SlotFinder::new(n);
    let mut chosen: Vec<Packet<V>> = Vec::with_capacity(n);
    for p in order {
        let cap = match p.deadline {
            TimeBound::At(d) if d < t => continue,
            TimeBound::At(d) => ((d - t) as usize).min(n - 1),
            TimeBound::Unbounded => n - 1,
        };
        if slots.claim(cap).is_some() {
            chosen.push(*p);
        }
    }

    chosen.sort_by(canonical_cmp);
    let total_value = chosen.iter().map(|p| p.value).sum();
    let entries = chosen
        .into_iter()
        .enumerate()
        .map(|(i, packet)| Entry {
            packet,
            slot: t + i as i64,
        })
        .collect();
    ProvisionalSchedule {
        time: t,
        entries,
        total_value,
    }
}

/// Returns `(e, h)`: the first entry and the first maximum-value entry.
pub fn select_e_h<V: Scalar>(s: &ProvisionalSchedule<V>) -> Result<(&Packet<V>, &Packet<V>)> {
    let e = &s.entries.first().ok_or(Error::EmptySchedule)?.packet;
    let mut h = e;
    for entry in &s.entries[1..] {
        if entry.packet.value > h.value {
            h = &entry.packet;
        }
    }
    Ok((e, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(id: u64, d: i64, v: f64) -> Packet<f64> {
        Packet::new(id, 1, d, v)
    }

    /// Exhaustive maximum over all subsets that pass the slot-counting test.
    fn brute_force_value(pending: &[Packet<f64>], t: i64) -> f64 {
        let n = pending.len();
        let mut best = 0.0;
        for mask in 0u32..(1 << n) {
            let subset: Vec<_> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| pending[i])
                .collect();
            if feasible(&subset, t) {
                let v: f64 = subset.iter().map(|p| p.value).sum();
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    fn ids(s: &ProvisionalSchedule<f64>) -> Vec<(u64, i64)> {
        s.entries.iter().map(|e| (e.packet.id, e.slot)).collect()
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasible::<f64>(&[], 7));
        assert!(!feasible(&[p(0, 1, 1.0), p(1, 1, 1.0)], 1));
        assert!(!feasible(&[p(0, 1, 1.0), p(1, 2, 1.0), p(2, 2, 1.0)], 1));
        assert!(feasible(&[p(0, 1, 1.0), p(1, 2, 1.0), p(2, 3, 1.0)], 1));
    }

    #[test]
    fn drops_the_smaller_expiring_packet() {
        let pending = [p(0, 1, 3.0), p(1, 1, 1.0), p(2, 2, 2.0)];
        let s = optimal_provisional_schedule(&pending, 1);
        assert_eq!(ids(&s), vec![(0, 1), (2, 2)]);
        assert_eq!(s.total_value, 5.0);
        assert_eq!(brute_force_value(&pending, 1), 5.0);
    }

    #[test]
    fn deadline_ties_broken_by_value() {
        let pending = [p(10, 1, 1.0), p(11, 2, 5.0), p(12, 2, 4.0)];
        let s = optimal_provisional_schedule(&pending, 1);
        assert_eq!(ids(&s), vec![(11, 1), (12, 2)]);
        assert_eq!(s.total_value, 9.0);
        assert_eq!(brute_force_value(&pending, 1), 9.0);
    }

    #[test]
    fn empty_pending() {
        let s = optimal_provisional_schedule::<f64>(&[], 4);
        assert!(s.is_empty());
        assert_eq!(s.total_value, 0.0);
        assert!(matches!(select_e_h(&s), Err(Error::EmptySchedule)));
    }

    #[test]
    fn unbounded_sorted_last_by_value() {
        let pending = [
            Packet::unbounded(0, 1, 2.0),
            Packet::unbounded(1, 1, 3.0),
            p(2, 9, 1.0),
        ];
        let s = optimal_provisional_schedule(&pending, 1);
        assert_eq!(ids(&s), vec![(2, 1), (1, 2), (0, 3)]);
    }

    #[test]
    fn e_and_h_selection() {
        let s = optimal_provisional_schedule(&[p(0, 2, 1.0), p(1, 3, 7.0), p(2, 9, 7.0)], 1);
        let (e, h) = select_e_h(&s).unwrap();
        assert_eq!((e.id, h.id), (0, 1));

        let single = optimal_provisional_schedule(&[p(5, 3, 2.0)], 1);
        let (e, h) = select_e_h(&single).unwrap();
        assert_eq!((e.id, h.id), (5, 5));

        let flat = optimal_provisional_schedule(&[p(0, 2, 1.0), p(1, 3, 1.0), p(2, 4, 1.0)], 1);
        let (e, h) = select_e_h(&flat).unwrap();
        assert_eq!(e.id, h.id);
    }

    #[test]
    fn generic_over_f32() {
        let pending = [Packet::new(0, 1, 1, 3.0f32), Packet::new(1, 1, 1, 1.0f32)];
        let s = optimal_provisional_schedule(&pending, 1);
        assert_eq!(s.total_value, 3.0f32);
    }

    fn arb_pending() -> impl Strategy<Value = (Vec<Packet<f64>>, i64)> {
        (1i64..5).prop_flat_map(|t| {
            (
                prop::collection::vec((0i64..5, 1u32..8, prop::bool::weighted(0.15)), 0..=8)
                    .prop_map(move |raw| {
                        raw.into_iter()
                            .enumerate()
                            .map(|(i, (dd, v, unb))| {
                                if unb {
                                    Packet::unbounded(i as u64, 1, v as f64)
                                } else {
                                    Packet::new(i as u64, 1, t + dd, v as f64)
                                }
                            })
                            .collect::<Vec<_>>()
                    }),
                Just(t),
            )
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((pending, t) in arb_pending()) {
            let s = optimal_provisional_schedule(&pending, t);
            prop_assert_eq!(s.total_value, brute_force_value(&pending, t));
        }

        #[test]
        fn canonical_and_slot_feasible((pending, t) in arb_pending()) {
            let s = optimal_provisional_schedule(&pending, t);
            for (i, e) in s.entries.iter().enumerate() {
                prop_assert_eq!(e.slot, t + i as i64);
                prop_assert!(e.packet.deadline.admits(e.slot));
            }
            for w in s.entries.windows(2) {
                prop_assert_eq!(canonical_cmp(&w[0].packet, &w[1].packet), Ordering::Less);
            }
            let sum: f64 = s.packets().map(|p| p.value).sum();
            prop_assert_eq!(sum, s.total_value);
        }

        #[test]
        fn holds_the_highest_value_packet((pending, t) in arb_pending()) {
            prop_assume!(!pending.is_empty());
            let best = pending.iter().map(|p| p.value).fold(0.0, f64::max);
            let s = optimal_provisional_schedule(&pending, t);
            prop_assert!(s.packets().any(|p| p.value == best));
        }

        #[test]
        fn adding_a_packet_never_lowers_value((pending, t) in arb_pending(), d in 0i64..5, v in 1u32..8) {
            let before = optimal_provisional_schedule(&pending, t).total_value;
            let mut more = pending.clone();
            more.push(Packet::new(99, 1, t + d, v as f64));
            prop_assert!(optimal_provisional_schedule(&more, t).total_value >= before);
        }
    }
}

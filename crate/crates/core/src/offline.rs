//! Offline optimum as a maximum-weight bipartite matching between packets
//! and time slots, plus an exhaustive oracle for small instances.
//!
//! Weights sit on the packet side only, so the matchable packet sets form a
//! transversal matroid: inserting packets by decreasing value and keeping each
//! one for which an augmenting path exists yields a maximum-weight matching.
//! Each packet's admissible slots form an interval, so the augmenting search
//! visits every slot at most once (a "next unvisited slot" union-find).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{validate_instance, Instance, Packet, TimeBound};
use crate::policies::{simulate, PolicyParams};
use crate::provisional::greedy_cmp;
use crate::scalar::Scalar;

/// Largest instance accepted by [`brute_force_optimal`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OffSchedule<V> {
    /// `(packet id, slot)` sorted by slot.
    pub assignments: Vec<(u64, i64)>,
    pub total_value: V,
}

fn check_valid<V: Scalar>(inst: &Instance<V>) -> Result<()> {
    let v = validate_instance(inst);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(v))
    }
}

/// Compressed slot axis: the union of all live windows, in increasing time.
struct SlotAxis {
    times: Vec<i64>,
}

impl SlotAxis {
    fn new(windows: &[(i64, i64)]) -> Self {
        let mut ws: Vec<(i64, i64)> = windows.iter().copied().filter(|(a, b)| a <= b).collect();
        ws.sort_unstable();
        let mut times = Vec::new();
        let mut covered_to = i64::MIN;
        for (a, b) in ws {
            let start = a.max(covered_to.saturating_add(1));
            for t in start..=b {
                times.push(t);
            }
            covered_to = covered_to.max(b);
        }
        SlotAxis { times }
    }

    /// Index range `[lo, hi)` of slots inside `[a, b]`.
    fn range(&self, a: i64, b: i64) -> (usize, usize) {
        let lo = self.times.partition_point(|&t| t < a);
        let hi = self.times.partition_point(|&t| t <= b);
        (lo, hi)
    }
}

/// Next-unvisited-slot structure, reset per search.
struct Unvisited {
    next: Vec<usize>,
}

impl Unvisited {
    fn reset(&mut self) {
        for (i, x) in self.next.iter_mut().enumerate() {
            *x = i;
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.next[root] != root {
            root = self.next[root];
        }
        while self.next[x] != root {
            let n = self.next[x];
            self.next[x] = root;
            x = n;
        }
        root
    }

    fn visit(&mut self, x: usize) {
        self.next[x] = x + 1;
    }
}

/// Maximum-value assignment of packets to slots `release..=deadline`, with
/// unbounded deadlines capped at `max(release) + n`.
pub fn offline_optimal<V: Scalar>(inst: &Instance<V>) -> Result<OffSchedule<V>> {
    check_valid(inst)?;
    Ok(matching_with_cap(inst, inst.unbounded_cap()))
}

/// Same matching, with an explicit cap for unbounded deadlines.
pub fn offline_optimal_with_cap<V: Scalar>(inst: &Instance<V>, cap: i64) -> Result<OffSchedule<V>> {
    check_valid(inst)?;
    Ok(matching_with_cap(inst, cap))
}

fn matching_with_cap<V: Scalar>(inst: &Instance<V>, cap: i64) -> OffSchedule<V> {
    let packets = &inst.packets;
    let windows: Vec<(i64, i64)> = packets
        .iter()
        .map(|p| {
            let last = match p.deadline {
                TimeBound::At(d) => d,
                TimeBound::Unbounded => cap,
            };
            (p.release, last)
        })
        .collect();
    let axis = SlotAxis::new(&windows);
    let ranges: Vec<(usize, usize)> = windows.iter().map(|&(a, b)| axis.range(a, b)).collect();

    let m = axis.times.len();
    let mut slot_owner: Vec<Option<usize>> = vec![None; m];
    let mut packet_slot: Vec<Option<usize>> = vec![None; packets.len()];
    // slot -> packet that reached it during the current search
    let mut reached_from: Vec<usize> = vec![usize::MAX; m];
    let mut unvisited = Unvisited {
        next: (0..=m).collect(),
    };
    let mut queue = VecDeque::new();

    let mut order: Vec<usize> = (0..packets.len()).collect();
    order.sort_by(|&a, &b| greedy_cmp(&packets[a], &packets[b]));

    for root in order {
        let (lo, hi) = ranges[root];
        if lo >= hi {
            continue;
        }
        unvisited.reset();
        queue.clear();
        queue.push_back(root);
        let mut free_slot = None;
        'search: while let Some(q) = queue.pop_front() {
            let (lo, hi) = ranges[q];
            let mut s = unvisited.find(lo);
            while s < hi {
                unvisited.visit(s);
                reached_from[s] = q;
                match slot_owner[s] {
                    None => {
                        free_slot = Some(s);
                        break 'search;
                    }
                    Some(owner) => queue.push_back(owner),
                }
                s = unvisited.find(s + 1);
            }
        }
        // Flip the alternating path back to the root.
        let mut cur = match free_slot {
            Some(s) => s,
            None => continue,
        };
        loop {
            let q = reached_from[cur];
            let prev = packet_slot[q];
            slot_owner[cur] = Some(q);
            packet_slot[q] = Some(cur);
            match prev {
                Some(p) if q != root => cur = p,
                _ => break,
            }
        }
    }

    let mut assignments: Vec<(u64, i64)> = packet_slot
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (packets[i].id, axis.times[s])))
        .collect();
    assignments.sort_by_key(|&(_, slot)| slot);
    let total_value = packet_slot
        .iter()
        .zip(packets)
        .filter(|(s, _)| s.is_some())
        .map(|(_, p)| p.value)
        .sum();
    OffSchedule {
        assignments,
        total_value,
    }
}

/// Slots a set of packets earliest-deadline-first; `None` if one misses its deadline.
fn edf_slotting<V: Scalar>(chosen: &[&Packet<V>]) -> Option<Vec<(u64, i64)>> {
    let mut by_release: Vec<&Packet<V>> = chosen.to_vec();
    by_release.sort_by_key(|p| p.release);
    let mut ready: Vec<&Packet<V>> = Vec::new();
    let mut out = Vec::with_capacity(chosen.len());
    let mut i = 0;
    let mut t = by_release.first().map_or(0, |p| p.release);
    while out.len() < chosen.len() {
        while i < by_release.len() && by_release[i].release <= t {
            ready.push(by_release[i]);
            i += 1;
        }
        if ready.is_empty() {
            t = by_release[i].release;
            continue;
        }
        let (pos, _) = ready
            .iter()
            .enumerate()
            .min_by_key(|(_, p)| (p.deadline, p.id))
            .expect("non-empty");
        let p = ready.swap_remove(pos);
        if !p.deadline.admits(t) {
            return None;
        }
        out.push((p.id, t));
        t += 1;
    }
    Some(out)
}

/// Exhaustive search over all subsets; test oracle only.
pub fn brute_force_optimal<V: Scalar>(inst: &Instance<V>) -> Result<OffSchedule<V>> {
    let n = inst.packets.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            limit: BRUTE_FORCE_LIMIT,
            got: n,
        });
    }
    check_valid(inst)?;
    let mut best = OffSchedule {
        assignments: Vec::new(),
        total_value: V::zero(),
    };
    for mask in 1u32..(1u32 << n) {
        let chosen: Vec<&Packet<V>> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &inst.packets[i])
            .collect();
        let value: V = chosen.iter().map(|p| p.value).sum();
        if value <= best.total_value {
            continue;
        }
        if let Some(assignments) = edf_slotting(&chosen) {
            best = OffSchedule {
                assignments,
                total_value: value,
            };
        }
    }
    Ok(best)
}

/// OPT versus a policy on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport<V> {
    pub opt_value: V,
    pub alg_value: V,
    /// `opt / alg`; 1 when both are zero, +inf when only `alg` is.
    pub ratio: V,
}

impl<V: Scalar> RatioReport<V> {
    pub fn new(opt_value: V, alg_value: V) -> Self {
        let ratio = if alg_value == V::zero() {
            if opt_value == V::zero() {
                V::one()
            } else {
                V::infinity()
            }
        } else {
            opt_value / alg_value
        };
        RatioReport {
            opt_value,
            alg_value,
            ratio,
        }
    }
}

pub fn empirical_ratio<V: Scalar>(
    inst: &Instance<V>,
    params: &PolicyParams<V>,
) -> Result<RatioReport<V>> {
    let alg = simulate(inst, params)?.total_value;
    let opt = offline_optimal(inst)?.total_value;
    Ok(RatioReport::new(opt, alg))
}

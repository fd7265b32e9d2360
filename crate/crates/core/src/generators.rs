//! Seeded instance generators.
//!
//! [`generate`] draws random instances that satisfy one of the pairwise
//! variant constraints by construction. [`generate_lower_bound`] builds the
//! staged adversarial family on which MG with `alpha = beta = phi` collects
//! only about half of the optimum.
//!
//! # Lower-bound family
//!
//! With `k` stages, stage `i < k` lasts `2^(k+1-i) + 1` steps and every step
//! releases an `f`-packet (value `w_i`, deadline `2^(k+1) + 1 + i`) and an
//! `h`-packet (value `phi^i`, no deadline). Stage 1 additionally releases an
//! `e`-packet of value `1 - eps` that expires in its release step. The
//! `f`-values follow `w_1 = phi (1 - eps) - eps` and `w_i = phi w_(i-1) - eps`.
//! The final stage runs until the stage-`(k-1)` `f`-packets expire (5 steps
//! for `k >= 2`, one step for `k = 1`): each of its steps releases an
//! `h`-packet of value `phi^k`, and its last step instead releases `f` (value
//! `phi^k`, expiring immediately) and `h` (value `phi^(k+1) + eps`). No
//! `f`-packet outlives the last release, so MG never runs out of `h`-packets.
//!
//! The values keep `phi * v_e` exactly `eps` above the next `f`-packet while
//! `v_e` stays below `v_h / phi`, so MG skips both `e` and `f` and sends `h`.
//! The stage lengths satisfy `2 L_i = R_i + 1`, where `R_i` is the distance
//! from the first step of stage `i` to the stage's `f`-deadline: shorter
//! stages let an older, cheaper `f` become the head of the provisional
//! schedule, and longer ones let the current stage's `f` reach it. Either way
//! MG would then send an `f`-packet.
//!
//! The stage-1 `e` value `1 - eps` (rather than `1 + eps`) and the
//! `eps`-shifted `f`-values are required for this trace: with `v_e = 1 + eps`
//! the rule `v_e >= v_h / alpha` sends `e`, and with `w_1 = phi - eps` the
//! `f`-packet clears `max(v_h / alpha, beta v_e)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{classify_variants, Instance, InstanceMeta, Packet, TimeBound, Variant};
use crate::scalar::Scalar;

/// Values are drawn on a grid of this many points per unit, so sums of
/// generated values are exact and value gaps are at least `1 / VALUE_GRID`.
pub const VALUE_GRID: f64 = 64.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub variant: Variant,
    pub n: usize,
    pub max_slack: i64,
    pub value_range: (f64, f64),
    pub seed: u64,
    /// Releases are drawn from `1..=release_span`; defaults to `max(1, n / 2)`.
    pub release_span: Option<i64>,
}

impl GenSpec {
    pub fn new(variant: Variant, n: usize, seed: u64) -> Self {
        GenSpec {
            variant,
            n,
            max_slack: 5,
            value_range: (1.0, 10.0),
            seed,
            release_span: None,
        }
    }

    pub fn release_span(&self) -> i64 {
        self.release_span.unwrap_or((self.n as i64 / 2).max(1))
    }

    fn value_grid(&self) -> Result<(u64, u64)> {
        let (lo, hi) = self.value_range;
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && hi >= lo) {
            return Err(Error::InvalidSpec(format!("bad value range ({lo}, {hi})")));
        }
        let a = (lo * VALUE_GRID).ceil() as u64;
        let b = (hi * VALUE_GRID).floor() as u64;
        if a == 0 || a > b {
            return Err(Error::InvalidSpec(format!(
                "value range ({lo}, {hi}) holds no multiple of 1/{VALUE_GRID}"
            )));
        }
        Ok((a, b))
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_slack < 0 {
            return Err(Error::InvalidSpec("max_slack must be >= 0".into()));
        }
        if self.release_span() < 1 {
            return Err(Error::InvalidSpec("release span must be >= 1".into()));
        }
        self.value_grid().map(|_| ())
    }

    fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            generator: "random".into(),
            variant: Some(self.variant.tag().into()),
            seed: Some(self.seed),
            n: Some(self.n),
            max_slack: Some(self.max_slack),
            release_span: Some(self.release_span()),
            value_lo: Some(self.value_range.0),
            value_hi: Some(self.value_range.1),
            ..InstanceMeta::default()
        }
    }
}

/// SplitMix64 mixing of a base seed with two stream indices.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Assigns one drawn quantity per distinct key, sorted to follow the key order.
fn monotone_by_key<K: Ord + Copy, T: Ord + Copy>(
    keys: &[K],
    mut draw: impl FnMut() -> T,
    ascending: bool,
) -> Vec<T> {
    let mut distinct: Vec<K> = keys.to_vec();
    distinct.sort();
    distinct.dedup();
    let mut drawn: Vec<T> = distinct.iter().map(|_| draw()).collect();
    drawn.sort();
    if !ascending {
        drawn.reverse();
    }
    keys.iter()
        .map(|k| drawn[distinct.binary_search(k).expect("key present")])
        .collect()
}

/// Draws a random instance satisfying `spec.variant`; deterministic in the spec.
pub fn generate<V: Scalar>(spec: &GenSpec) -> Result<Instance<V>> {
    spec.validate()?;
    let (vlo, vhi) = spec.value_grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let span = spec.release_span();

    let mut releases: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=span)).collect();
    releases.sort_unstable();
    let slacks: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=spec.max_slack)).collect();
    let mut grid_values: Vec<u64> = (0..n).map(|_| rng.gen_range(vlo..=vhi)).collect();
    let mut deadlines: Vec<i64> = releases.iter().zip(&slacks).map(|(r, s)| r + s).collect();

    let slack_draw = |rng: &mut ChaCha8Rng| rng.gen_range(0..=spec.max_slack);
    let value_draw = |rng: &mut ChaCha8Rng| rng.gen_range(vlo..=vhi);

    match spec.variant {
        Variant::General => {}
        Variant::AgreeableDeadline => {
            // one deadline per release time, increasing with release
            let mut by_group: Vec<(i64, i64)> = Vec::new();
            for &r in &releases {
                if by_group.last().map(|g| g.0) != Some(r) {
                    by_group.push((r, r + slack_draw(&mut rng)));
                }
            }
            let mut ds: Vec<i64> = by_group.iter().map(|g| g.1).collect();
            ds.sort_unstable();
            for (g, d) in by_group.iter_mut().zip(ds) {
                g.1 = d;
            }
            for (r, d) in releases.iter().zip(deadlines.iter_mut()) {
                *d = by_group.iter().find(|g| g.0 == *r).expect("group").1;
            }
        }
        Variant::AntiAgreeableDeadline => {
            let last = releases.last().copied().unwrap_or(1);
            deadlines = monotone_by_key(&releases, || last + slack_draw(&mut rng), false);
        }
        Variant::AgreeableValue => {
            grid_values = monotone_by_key(&releases, || value_draw(&mut rng), true);
        }
        Variant::AntiAgreeableValue => {
            grid_values = monotone_by_key(&releases, || value_draw(&mut rng), false);
        }
        Variant::AgreeableDeadlineValue => {
            grid_values = monotone_by_key(&deadlines, || value_draw(&mut rng), true);
        }
        Variant::AntiAgreeableDeadlineValue => {
            grid_values = monotone_by_key(&deadlines, || value_draw(&mut rng), false);
        }
        Variant::AgreeableSlackValue => {
            grid_values = monotone_by_key(&slacks, || value_draw(&mut rng), true);
        }
        Variant::AntiAgreeableSlackValue => {
            grid_values = monotone_by_key(&slacks, || value_draw(&mut rng), false);
        }
    }

    let packets = (0..n)
        .map(|i| Packet {
            id: i as u64,
            release: releases[i],
            deadline: TimeBound::At(deadlines[i]),
            value: V::lit(grid_values[i] as f64 / VALUE_GRID),
        })
        .collect();
    let inst = Instance::new(packets).with_meta(spec.meta());
    if !classify_variants(&inst).satisfies(spec.variant) {
        return Err(Error::InvalidSpec(format!(
            "construction failed to satisfy {}",
            spec.variant
        )));
    }
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundSpec {
    pub k: u32,
    pub epsilon: f64,
}

impl LowerBoundSpec {
    pub const DEFAULT_EPSILON: f64 = 1e-6;
    /// Instances grow as `2^(k+2)` packets.
    pub const MAX_K: u32 = 20;

    pub fn new(k: u32) -> Self {
        LowerBoundSpec {
            k,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    /// `eps` must stay below `1 / (10 phi^(k+1))`.
    pub fn epsilon_bound(k: u32) -> f64 {
        1.0 / (10.0 * crate::scalar::PHI.powi(k as i32 + 1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k > Self::MAX_K {
            return Err(Error::InvalidSpec(format!(
                "k must be in 1..={}, got {}",
                Self::MAX_K,
                self.k
            )));
        }
        let bound = Self::epsilon_bound(self.k);
        if !(self.epsilon > 0.0 && self.epsilon < bound) {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be in (0, {bound:e}) for k = {}, got {}",
                self.k, self.epsilon
            )));
        }
        Ok(())
    }

    /// Number of steps in stage `i` (1-based).
    pub fn stage_len(&self, i: u32) -> i64 {
        if i < self.k {
            (1i64 << (self.k + 1 - i)) + 1
        } else if self.k == 1 {
            1
        } else {
            // until the previous stage's f-deadline
            self.f_deadline(self.k - 1) - self.stage_start(self.k) + 1
        }
    }

    /// First step of stage `i`.
    pub fn stage_start(&self, i: u32) -> i64 {
        1 + (1..i).map(|j| self.stage_len(j)).sum::<i64>()
    }

    /// Deadline of the `f`-packets released in stage `i < k`.
    pub fn f_deadline(&self, i: u32) -> i64 {
        (1i64 << (self.k + 1)) + 1 + i as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    E,
    F,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRole {
    pub stage: u32,
    pub role: Role,
}

/// A lower-bound instance together with the role of each packet
/// (`roles[i]` describes `instance.packets[i]`).
#[derive(Debug, Clone)]
pub struct LowerBound<V> {
    pub instance: Instance<V>,
    pub roles: Vec<PacketRole>,
}

impl<V: Scalar> LowerBound<V> {
    pub fn role_of(&self, id: u64) -> Option<PacketRole> {
        self.instance
            .packets
            .iter()
            .position(|p| p.id == id)
            .map(|i| self.roles[i])
    }
}

struct MarginCheck<V> {
    min_gap: V,
}

impl<V: Scalar> MarginCheck<V> {
    /// Requires `small` to sit below `large` by the minimum gap, up to rounding.
    fn below(&self, small: V, large: V, what: &str) -> Result<()> {
        let slack = V::lit(1e-6) * self.min_gap;
        if large - small >= self.min_gap - slack {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "lower-bound margin violated ({what}): {small} vs {large}"
            )))
        }
    }
}

/// Builds the staged adversarial instance described in the module docs.
pub fn generate_lower_bound<V: Scalar>(spec: &LowerBoundSpec) -> Result<LowerBound<V>> {
    spec.validate()?;
    let k = spec.k;
    let eps = V::lit(spec.epsilon);
    let one = V::one();
    let phi = V::phi();
    let check = MarginCheck {
        min_gap: eps * (phi - one),
    };

    let mut packets = Vec::new();
    let mut roles = Vec::new();
    let mut push = |p: Packet<V>, stage: u32, role: Role| {
        packets.push(p);
        roles.push(PacketRole { stage, role });
    };
    let mut next_id = 0u64;
    let mut id = || {
        next_id += 1;
        next_id - 1
    };

    let mut t = 1i64;
    let e_value = one - eps;
    let mut prev_w = e_value;
    for stage in 1..k {
        let h_value = phi.powi(stage as i32);
        let w = phi * prev_w - eps;
        // MG sees e (or the previous stage's f) first, then this f, then h.
        check.below(prev_w, h_value / phi, "head below h/alpha")?;
        let threshold = (h_value / phi).max(phi * prev_w);
        check.below(w, threshold, "f below threshold")?;
        check.below(threshold, h_value, "h above threshold")?;

        let deadline = spec.f_deadline(stage);
        for _ in 0..spec.stage_len(stage) {
            if stage == 1 {
                push(Packet::new(id(), t, t, e_value), stage, Role::E);
            }
            push(Packet::new(id(), t, deadline, w), stage, Role::F);
            push(Packet::unbounded(id(), t, h_value), stage, Role::H);
            t += 1;
        }
        prev_w = w;
    }

    let f_last = phi.powi(k as i32);
    let h_last = phi.powi(k as i32 + 1) + eps;
    if k > 1 {
        check.below(prev_w, f_last / phi, "head below h/alpha while flushing")?;
        check.below(phi * prev_w, f_last, "h above threshold while flushing")?;
    }
    for _ in 1..spec.stage_len(k) {
        push(Packet::unbounded(id(), t, f_last), k, Role::H);
        t += 1;
    }
    check.below(f_last, h_last / phi, "final f below h/alpha")?;
    let threshold = (h_last / phi).max(phi * f_last);
    check.below(prev_w, threshold, "older f below final threshold")?;
    if h_last < threshold {
        return Err(Error::InvalidSpec("final h below threshold".into()));
    }
    push(Packet::new(id(), t, t, f_last), k, Role::F);
    push(Packet::unbounded(id(), t, h_last), k, Role::H);

    let meta = InstanceMeta {
        generator: "lower-bound".into(),
        variant: Some(Variant::General.tag().into()),
        n: Some(packets.len()),
        k: Some(k),
        epsilon: Some(spec.epsilon),
        ..InstanceMeta::default()
    };
    Ok(LowerBound {
        instance: Instance::new(packets).with_meta(meta),
        roles,
    })
}

/// The epsilon-free OPT/MG ratio of the lower-bound family in closed form:
/// `(2 (2/phi)^k - phi^2/2) / ((2/phi)^k - 1/2)`, tending to 2.
pub fn lb_ratio_formula<V: Scalar>(k: u32) -> V {
    let two = V::lit(2.0);
    let half = V::lit(0.5);
    let phi = V::phi();
    let g = (two / phi).powi(k as i32);
    (two * g - phi * phi * half) / (g - half)
}

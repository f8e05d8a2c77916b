//! Set systems: families of feasible active sets over the controllable
//! states, queried through their inner and outer boundaries.
//!
//! The outer boundary of a member `S` holds the states `i` outside `S` with
//! `S ∪ {i}` feasible; the inner boundary holds the states `i` in `S` with
//! `S \ {i}` feasible. The adaptive-greedy scheme only ever walks outer
//! boundaries, so a family need not be enumerable to be used; enumeration is
//! required only by the exhaustive checkers.

use std::collections::{HashSet, VecDeque};

use crate::active_set::ActiveSet;
use crate::bandit::ControllabilityPartition;
use crate::error::{Error, Result};

/// Default cap on the number of members any enumeration may produce.
pub const DEFAULT_MEMBER_LIMIT: usize = 1 << 20;
/// Default cap on family size for the pairwise monotone-connectivity check.
pub const DEFAULT_PAIR_LIMIT: usize = 1 << 12;

pub trait SetSystem: Send + Sync {
    /// Controllable states the family is built on, ascending.
    fn ground(&self) -> &[usize];

    fn contains(&self, s: &ActiveSet) -> bool;

    fn outer_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        self.ground()
            .iter()
            .copied()
            .filter(|&i| !s.contains(i) && self.contains(&s.with(i)))
            .collect()
    }

    fn inner_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        s.iter().filter(|&i| self.contains(&s.without(i))).collect()
    }

    /// Exact member count when known in closed form.
    fn member_count(&self) -> Option<u128> {
        None
    }

    /// All members, in a deterministic order. The default walks outer
    /// boundaries from the empty set, which reaches every member of a family
    /// whose nonempty members all have a nonempty inner boundary.
    fn members(&self, limit: usize) -> Result<Vec<ActiveSet>> {
        if let Some(c) = self.member_count() {
            if c > limit as u128 {
                return Err(Error::SizeGuard {
                    what: "family members",
                    actual: usize::try_from(c).unwrap_or(usize::MAX),
                    limit,
                });
            }
        }
        let start = ActiveSet::empty();
        let mut seen: HashSet<ActiveSet> = HashSet::from([start.clone()]);
        let mut out = vec![start.clone()];
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for i in self.outer_boundary(&s) {
                let t = s.with(i);
                if seen.insert(t.clone()) {
                    if out.len() >= limit {
                        return Err(Error::SizeGuard {
                            what: "family members",
                            actual: limit + 1,
                            limit,
                        });
                    }
                    out.push(t.clone());
                    queue.push_back(t);
                }
            }
        }
        Ok(out)
    }

    /// Whether the family is known by construction to be monotonically
    /// connected (closed under union and intersection, with monotone paths
    /// between nested members).
    fn monotone_connected_certificate(&self) -> bool {
        false
    }

    fn full_set(&self) -> ActiveSet {
        self.ground().iter().copied().collect()
    }

    fn describe(&self) -> String;
}

/// Every subset of the ground set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSet {
    ground: Vec<usize>,
}

pub fn family_full(partition: &ControllabilityPartition) -> PowerSet {
    PowerSet {
        ground: partition.controllable.clone(),
    }
}

impl PowerSet {
    pub fn over(ground: Vec<usize>) -> Self {
        let mut ground = ground;
        ground.sort_unstable();
        ground.dedup();
        Self { ground }
    }
}

impl SetSystem for PowerSet {
    fn ground(&self) -> &[usize] {
        &self.ground
    }
    fn contains(&self, s: &ActiveSet) -> bool {
        s.iter().all(|i| self.ground.binary_search(&i).is_ok())
    }
    fn outer_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        self.ground.iter().copied().filter(|&i| !s.contains(i)).collect()
    }
    fn inner_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        s.iter().collect()
    }
    fn member_count(&self) -> Option<u128> {
        1u128.checked_shl(self.ground.len() as u32)
    }
    fn members(&self, limit: usize) -> Result<Vec<ActiveSet>> {
        let n = self.ground.len();
        if n >= 64 || (1usize << n) > limit {
            return Err(Error::SizeGuard {
                what: "family members",
                actual: if n >= 64 { usize::MAX } else { 1 << n },
                limit,
            });
        }
        Ok((0..1u64 << n).map(|m| ActiveSet::from_mask(&self.ground, m)).collect())
    }
    fn monotone_connected_certificate(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        "power set".into()
    }
}

/// A nested chain `{} = S_0 ⊂ S_1 ⊂ ... ⊂ S_n = ground`, one state per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedChain {
    ground: Vec<usize>,
    order: Vec<usize>,
    chain: Vec<ActiveSet>,
}

/// Builds the chain family; `chain` may omit the leading empty set.
pub fn family_nested(chain: &[ActiveSet]) -> Result<NestedChain> {
    let mut sets: Vec<ActiveSet> = chain.to_vec();
    if sets.first().is_none_or(|s| !s.is_empty()) {
        sets.insert(0, ActiveSet::empty());
    }
    let mut order = Vec::with_capacity(sets.len() - 1);
    for (k, w) in sets.windows(2).enumerate() {
        let added = w[1].difference(&w[0]);
        if !w[0].is_subset(&w[1]) || added.len() != 1 {
            return Err(Error::SetSystem(format!(
                "chain step {} ({} -> {}) must add exactly one state",
                k + 1,
                w[0],
                w[1]
            )));
        }
        order.push(added.iter().next().unwrap());
    }
    let mut ground = order.clone();
    ground.sort_unstable();
    Ok(NestedChain { ground, order, chain: sets })
}

impl NestedChain {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sets(&self) -> &[ActiveSet] {
        &self.chain
    }

    fn position(&self, s: &ActiveSet) -> Option<usize> {
        let k = s.len();
        (k < self.chain.len() && self.chain[k] == *s).then_some(k)
    }
}

impl SetSystem for NestedChain {
    fn ground(&self) -> &[usize] {
        &self.ground
    }
    fn contains(&self, s: &ActiveSet) -> bool {
        self.position(s).is_some()
    }
    fn outer_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        match self.position(s) {
            Some(k) if k < self.order.len() => vec![self.order[k]],
            _ => Vec::new(),
        }
    }
    fn inner_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        match self.position(s) {
            Some(k) if k > 0 => vec![self.order[k - 1]],
            _ => Vec::new(),
        }
    }
    fn member_count(&self) -> Option<u128> {
        Some(self.chain.len() as u128)
    }
    fn members(&self, _limit: usize) -> Result<Vec<ActiveSet>> {
        Ok(self.chain.clone())
    }
    fn monotone_connected_certificate(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        let parts: Vec<String> = self.chain.iter().map(|s| s.to_string()).collect();
        format!("nested chain {}", parts.join(" < "))
    }
}

/// An arbitrary family listed member by member.
#[derive(Debug, Clone)]
pub struct ExplicitFamily {
    ground: Vec<usize>,
    members: Vec<ActiveSet>,
    index: HashSet<ActiveSet>,
}

impl ExplicitFamily {
    pub fn new(ground: Vec<usize>, members: Vec<ActiveSet>) -> Self {
        let mut ground = ground;
        ground.sort_unstable();
        ground.dedup();
        let mut uniq = Vec::new();
        let mut index = HashSet::new();
        for m in members {
            if index.insert(m.clone()) {
                uniq.push(m);
            }
        }
        Self { ground, members: uniq, index }
    }
}

impl SetSystem for ExplicitFamily {
    fn ground(&self) -> &[usize] {
        &self.ground
    }
    fn contains(&self, s: &ActiveSet) -> bool {
        self.index.contains(s)
    }
    fn member_count(&self) -> Option<u128> {
        Some(self.members.len() as u128)
    }
    fn members(&self, _limit: usize) -> Result<Vec<ActiveSet>> {
        Ok(self.members.clone())
    }
    fn describe(&self) -> String {
        format!("explicit family of {} sets", self.members.len())
    }
}

/// Checks the boundary requirements the adaptive-greedy scheme relies on:
/// the empty and full sets are members, nonempty members have a nonempty
/// inner boundary and proper members a nonempty outer boundary.
pub fn check_boundaries(sys: &dyn SetSystem, limit: usize) -> Result<()> {
    let full = sys.full_set();
    if !sys.contains(&ActiveSet::empty()) || !sys.contains(&full) {
        return Err(Error::SetSystem("empty and full sets must be members".into()));
    }
    for s in sys.members(limit)? {
        if !s.is_empty() && sys.inner_boundary(&s).is_empty() {
            return Err(Error::SetSystem(format!("member {s} has an empty inner boundary")));
        }
        if s != full && sys.outer_boundary(&s).is_empty() {
            return Err(Error::SetSystem(format!("member {s} has an empty outer boundary")));
        }
    }
    Ok(())
}

/// Verifies monotone connectivity by enumeration: the empty and full sets
/// are members; any two nested members `S ⊂ S'` can be joined by a step up
/// from `S` and a step down from `S'` that stay between them; and the family
/// is closed under union and intersection.
pub fn check_monotone_connected(sys: &dyn SetSystem) -> Result<bool> {
    check_monotone_connected_with(sys, DEFAULT_PAIR_LIMIT)
}

pub fn check_monotone_connected_with(sys: &dyn SetSystem, limit: usize) -> Result<bool> {
    let members = sys.members(limit)?;
    if !sys.contains(&ActiveSet::empty()) || !sys.contains(&sys.full_set()) {
        return Ok(false);
    }
    let index: HashSet<&ActiveSet> = members.iter().collect();
    for (a, s) in members.iter().enumerate() {
        for t in &members[a + 1..] {
            if !index.contains(&s.union(t)) || !index.contains(&s.intersection(t)) {
                return Ok(false);
            }
        }
    }
    for s in &members {
        let outer = sys.outer_boundary(s);
        for t in &members {
            if s == t || !s.is_subset(t) {
                continue;
            }
            let up = outer.iter().any(|&j| t.contains(j));
            let down = sys.inner_boundary(t).iter().any(|&j| !s.contains(j));
            if !up || !down {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

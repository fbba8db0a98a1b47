//! Maximin shares.
//!
//! Opposite-side agents with the same (value, cap) are interchangeable, so a
//! bundle is a count vector over such classes. A family of count vectors is
//! realizable by a valid matching iff no vector takes more than a class's
//! size from it and the family takes at most `size * cap` copies in total;
//! `realize` builds the matching by a cyclic fill. For a threshold `T` we
//! search for one inclusion-minimal bundle of value at least `T` per
//! same-side agent, and binary search on `T`.

use std::collections::HashMap;

use crate::error::{Error, LowerBound, Result};
use crate::instance::{Instance, Matching, Side};

pub const DEFAULT_SHARE_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShareOptions {
    /// Search nodes allowed across the whole binary search.
    pub node_budget: u64,
}

impl Default for ShareOptions {
    fn default() -> Self {
        ShareOptions {
            node_budget: DEFAULT_SHARE_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
struct Class {
    value: u64,
    members: Vec<usize>,
    cap: usize,
}

impl Class {
    fn copies(&self) -> usize {
        self.members.len() * self.cap
    }
}

struct ShareProblem {
    classes: Vec<Class>,
    /// (original slot index, cap), sorted by cap descending.
    slots: Vec<(usize, usize)>,
}

/// A solved threshold: the share and one bundle (opposite indices) per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareSolution {
    pub value: u64,
    pub bundles: Vec<Vec<usize>>,
}

impl ShareProblem {
    fn new(values: &[u64], opp_caps: &[usize], slot_caps: &[usize]) -> ShareProblem {
        let mut by_key: HashMap<(u64, usize), Vec<usize>> = HashMap::new();
        for (o, (&v, &c)) in values.iter().zip(opp_caps).enumerate() {
            if v > 0 && c > 0 {
                by_key.entry((v, c)).or_default().push(o);
            }
        }
        let mut classes: Vec<Class> = by_key
            .into_iter()
            .map(|((value, cap), members)| Class { value, members, cap })
            .collect();
        classes.sort_by(|a, b| b.value.cmp(&a.value).then(b.cap.cmp(&a.cap)).then(a.members.cmp(&b.members)));
        let mut slots: Vec<(usize, usize)> = slot_caps.iter().copied().enumerate().collect();
        slots.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ShareProblem { classes, slots }
    }

    /// Largest threshold the copy supply could possibly support.
    fn upper_bound(&self) -> u64 {
        if self.slots.is_empty() {
            return 0;
        }
        let min_cap = self.slots.last().unwrap().1;
        let total_cap: usize = self.slots.iter().map(|s| s.1).sum();
        let pooled = top_copies(&self.classes, &vec![0; self.classes.len()], total_cap);
        let single = top_single(&self.classes, min_cap);
        (pooled / self.slots.len() as u64).min(single)
    }

    /// Inclusion-minimal count vectors with value `>= t` and size `<= max_size`.
    fn candidates(&self, t: u64, max_size: usize, nodes: &mut u64) -> Vec<Candidate> {
        let mut out = Vec::new();
        let mut counts = vec![0u32; self.classes.len()];
        self.collect(0, t, 0, 0, max_size, &mut counts, &mut out, nodes);
        out.sort_by(|a, b| a.value.cmp(&b.value).then(a.size.cmp(&b.size)).then(a.counts.cmp(&b.counts)));
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn collect(
        &self,
        k: usize,
        t: u64,
        value: u64,
        size: usize,
        max_size: usize,
        counts: &mut Vec<u32>,
        out: &mut Vec<Candidate>,
        nodes: &mut u64,
    ) {
        *nodes += 1;
        if k == self.classes.len() || size == max_size {
            return;
        }
        let class = &self.classes[k];
        let most = class.members.len().min(max_size - size);
        for c in 1..=most {
            let v = value + class.value * c as u64;
            counts[k] = c as u32;
            if v >= t {
                if v - class.value < t {
                    out.push(Candidate {
                        counts: counts.clone(),
                        value: v,
                        size: size + c,
                    });
                }
                break;
            }
            self.collect(k + 1, t, v, size + c, max_size, counts, out, nodes);
        }
        counts[k] = 0;
        self.collect(k + 1, t, value, size, max_size, counts, out, nodes);
    }

    fn feasible(&self, t: u64, nodes: &mut u64, budget: u64) -> Result<Option<Vec<Vec<u32>>>, ()> {
        let n_slots = self.slots.len();
        if t == 0 || n_slots == 0 {
            return Ok(Some(vec![vec![0; self.classes.len()]; n_slots]));
        }
        if self.slots.last().unwrap().1 == 0 {
            return Ok(None);
        }
        let max_cap = self.slots[0].1;
        let cands = self.candidates(t, max_cap, nodes);
        let mut state = FeasState {
            problem: self,
            cands: &cands,
            t,
            used: vec![0; self.classes.len()],
            chosen: Vec::with_capacity(n_slots),
            nodes,
            budget,
        };
        match state.dfs(0, 0) {
            Err(()) => Err(()),
            Ok(true) => Ok(Some(
                state.chosen.iter().map(|&c| cands[c].counts.clone()).collect(),
            )),
            Ok(false) => Ok(None),
        }
    }

    /// Turns count vectors (one per sorted slot) into opposite-side bundles,
    /// indexed by original slot.
    fn realize(&self, counts: &[Vec<u32>]) -> Vec<Vec<usize>> {
        let mut bundles = vec![Vec::new(); self.slots.len()];
        let mut cursor = vec![0usize; self.classes.len()];
        for (s, cv) in counts.iter().enumerate() {
            let slot = self.slots[s].0;
            for (k, &c) in cv.iter().enumerate() {
                let members = &self.classes[k].members;
                for _ in 0..c {
                    bundles[slot].push(members[cursor[k] % members.len()]);
                    cursor[k] += 1;
                }
            }
            bundles[slot].sort_unstable();
        }
        bundles
    }

    fn solve(&self, budget: u64) -> Result<ShareSolution> {
        let mut nodes = 0u64;
        let exceeded = |nodes: u64, lo: u64| Error::BudgetExceeded {
            nodes_explored: nodes,
            lower_bound: Some(LowerBound::Value(lo)),
        };
        let mut lo = 0u64;
        let mut best = self
            .feasible(0, &mut nodes, budget)
            .map_err(|_| exceeded(nodes, 0))?
            .expect("zero threshold is always feasible");
        let mut hi = self.upper_bound();
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            match self.feasible(mid, &mut nodes, budget) {
                Err(()) => return Err(exceeded(nodes, lo)),
                Ok(Some(found)) => {
                    lo = mid;
                    best = found;
                }
                Ok(None) => hi = mid - 1,
            }
        }
        Ok(ShareSolution {
            value: lo,
            bundles: self.realize(&best),
        })
    }
}

struct Candidate {
    counts: Vec<u32>,
    value: u64,
    size: usize,
}

struct FeasState<'a> {
    problem: &'a ShareProblem,
    cands: &'a [Candidate],
    t: u64,
    used: Vec<usize>,
    chosen: Vec<usize>,
    nodes: &'a mut u64,
    budget: u64,
}

impl FeasState<'_> {
    fn dfs(&mut self, s: usize, first: usize) -> Result<bool, ()> {
        let slots = &self.problem.slots;
        if s == slots.len() {
            return Ok(true);
        }
        *self.nodes += 1;
        if *self.nodes > self.budget {
            return Err(());
        }
        let remaining_cap: usize = slots[s..].iter().map(|x| x.1).sum();
        let supply = top_copies(&self.problem.classes, &self.used, remaining_cap);
        if supply < self.t * (slots.len() - s) as u64 {
            return Ok(false);
        }
        let cap = slots[s].1;
        for ci in first..self.cands.len() {
            let cand = &self.cands[ci];
            if cand.size > cap {
                continue;
            }
            let fits = cand.counts.iter().enumerate().all(|(k, &c)| {
                self.used[k] + c as usize <= self.problem.classes[k].copies()
            });
            if !fits {
                continue;
            }
            for (k, &c) in cand.counts.iter().enumerate() {
                self.used[k] += c as usize;
            }
            self.chosen.push(ci);
            let next_first = if s + 1 < slots.len() && slots[s + 1].1 == cap { ci } else { 0 };
            let found = self.dfs(s + 1, next_first)?;
            if found {
                return Ok(true);
            }
            self.chosen.pop();
            for (k, &c) in cand.counts.iter().enumerate() {
                self.used[k] -= c as usize;
            }
        }
        Ok(false)
    }
}

/// Total value of the `take` most valuable unused copies.
fn top_copies(classes: &[Class], used: &[usize], mut take: usize) -> u64 {
    let mut total = 0;
    for (k, class) in classes.iter().enumerate() {
        if take == 0 {
            break;
        }
        let avail = (class.copies() - used[k]).min(take);
        total += class.value * avail as u64;
        take -= avail;
    }
    total
}

/// Value of the best bundle of at most `size` distinct opposite agents.
fn top_single(classes: &[Class], mut size: usize) -> u64 {
    let mut total = 0;
    for class in classes {
        let take = class.members.len().min(size);
        total += class.value * take as u64;
        size -= take;
        if size == 0 {
            break;
        }
    }
    total
}

fn share_problem(instance: &Instance, side: Side, agent: usize, own_caps: Vec<usize>) -> ShareProblem {
    ShareProblem::new(instance.row(side, agent), instance.caps(side.opposite()), &own_caps)
}

fn bundles_to_matching(instance: &Instance, side: Side, bundles: &[Vec<usize>]) -> Matching {
    let m = match side {
        Side::Left => Matching::from_left_bundles(instance.n_right(), bundles),
        Side::Right => Matching::from_right_bundles(instance.n_left(), bundles),
    };
    m.expect("realized bundles index the opposite side")
}

/// MMS of `agent` together with a valid matching attaining it.
pub fn mms_solution(
    instance: &Instance,
    side: Side,
    agent: usize,
    opts: &ShareOptions,
) -> Result<(u64, Matching)> {
    let problem = share_problem(instance, side, agent, instance.caps(side).to_vec());
    let sol = problem.solve(opts.node_budget)?;
    Ok((sol.value, bundles_to_matching(instance, side, &sol.bundles)))
}

pub fn mms_value_with(instance: &Instance, side: Side, agent: usize, opts: &ShareOptions) -> Result<u64> {
    Ok(mms_solution(instance, side, agent, opts)?.0)
}

pub fn mms_value(instance: &Instance, side: Side, agent: usize) -> Result<u64> {
    mms_value_with(instance, side, agent, &ShareOptions::default())
}

/// MMS of every agent on `side`; agents with equal rows share one computation.
pub fn mms_values(instance: &Instance, side: Side, opts: &ShareOptions) -> Result<Vec<u64>> {
    let mut cache: HashMap<&[u64], u64> = HashMap::new();
    (0..instance.size(side))
        .map(|a| {
            let row = instance.row(side, a);
            if let Some(&v) = cache.get(row) {
                return Ok(v);
            }
            let v = mms_value_with(instance, side, a, opts)?;
            cache.insert(row, v);
            Ok(v)
        })
        .collect()
}

/// The share with the agent's own side uncapped: each same-side agent may be
/// matched to every opposite agent, while opposite caps still hold.
pub fn unconstrained_share(instance: &Instance, side: Side, agent: usize, opts: &ShareOptions) -> Result<u64> {
    let wide = vec![instance.size(side.opposite()); instance.size(side)];
    Ok(share_problem(instance, side, agent, wide).solve(opts.node_budget)?.value)
}

/// Best min-value partition of the items valued by `row` into exactly
/// `ceil(n / cap)` blocks of at most `cap` items each.
pub fn weak_mms_partition(row: &[u64], cap: usize, opts: &ShareOptions) -> Result<ShareSolution> {
    let n = row.len();
    if n == 0 {
        return Ok(ShareSolution { value: 0, bundles: Vec::new() });
    }
    if cap == 0 {
        return Err(Error::BadParameter("a zero cap cannot partition a non-empty side".into()));
    }
    let blocks = n.div_ceil(cap);
    let problem = ShareProblem::new(row, &vec![1; n], &vec![cap; blocks]);
    let mut sol = problem.solve(opts.node_budget)?;
    let mut placed = vec![false; n];
    for b in &sol.bundles {
        for &o in b {
            placed[o] = true;
        }
    }
    let mut target = 0;
    for o in (0..n).filter(|&o| !placed[o]) {
        while sol.bundles[target].len() >= cap {
            target += 1;
        }
        sol.bundles[target].push(o);
    }
    for b in &mut sol.bundles {
        b.sort_unstable();
    }
    Ok(sol)
}

pub fn weak_mms_value_with(instance: &Instance, side: Side, agent: usize, opts: &ShareOptions) -> Result<u64> {
    let row = instance.row(side, agent);
    let cap = instance.cap(side, agent);
    if cap == 0 {
        return Ok(0);
    }
    Ok(weak_mms_partition(row, cap, opts)?.value)
}

pub fn weak_mms_value(instance: &Instance, side: Side, agent: usize) -> Result<u64> {
    weak_mms_value_with(instance, side, agent, &ShareOptions::default())
}

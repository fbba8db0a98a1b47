//! Depth-first search over matchings, one right agent's bundle at a time.
//!
//! Bundles are bitmasks over the left side drawn from a fixed universe in
//! lexicographic order; each right agent keeps a bitset of universe entries
//! still compatible with everything assigned so far.

use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fairness::envy::top_sum;
use crate::instance::{rank_row, Instance, Matching, Side};
use crate::search::spec::{SearchOptions, SearchOutcome, SearchSpec, SearchStatus};

const MAX_UNIVERSE: usize = 1 << 20;
const MAX_TABLE_CELLS: usize = 200_000_000;
const TIME_CHECK_MASK: u64 = 1023;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fill {
    /// No completeness requirement.
    Free,
    /// Every right agent ends at its cap (and every left agent too when the
    /// totals agree).
    RightFull { left_full: bool },
    /// Every left agent ends at its cap; right bundles may be short.
    LeftFull,
}

/// Pairwise right-side constraint between two bundles.
#[derive(Debug, Clone, Copy)]
enum RightRule {
    Sd(usize),
    Ef(usize),
}

/// Prefix set of some left agents' rankings, with the agents owning it.
struct PrefixGroup {
    mask: u64,
    members: Vec<usize>,
    c: usize,
    upper: usize,
    lower: usize,
}

struct Model<'a> {
    inst: &'a Instance,
    nl: usize,
    nr: usize,
    words: usize,
    universe: Vec<u64>,
    fill: Fill,
    target_edges: usize,
    left_cap: Vec<usize>,
    right_cap: Vec<usize>,
    /// Static candidate bitsets per right agent.
    base: Vec<u64>,
    /// Per left agent: universe entries not containing it.
    avoid: Vec<u64>,
    right_rules: Vec<RightRule>,
    right_profile: Vec<usize>,
    profile_rank: Vec<Vec<usize>>,
    profile_row: Vec<Vec<u64>>,
    n_profiles: usize,
    /// `tables[(pk * P + pj) * U + b]` row: bitset of `x` compatible for a
    /// profile-`pk` agent holding `x` against a profile-`pj` agent holding `b`.
    tables: Option<Vec<u64>>,
    groups: Vec<PrefixGroup>,
    /// Groups containing right agent `j`, per `j`.
    groups_of: Vec<Vec<usize>>,
    left_ef: Vec<usize>,
    left_floor: Vec<u64>,
    any_left_floor: bool,
    /// Right agents of each left agent, best value first.
    left_pref: Vec<Vec<usize>>,
    right_sym_prev: Vec<Option<usize>>,
    left_sym_pairs: Vec<(usize, usize)>,
    /// Left-agent sets whose counts inside right bundles are aggregated.
    count_sets: Vec<u64>,
    /// `at_least[(q * max_bundle + t - 1) * words..]`: entries holding at
    /// least `t` members of count set `q`.
    at_least: Vec<u64>,
    max_bundle: usize,
    windows: Vec<Window>,
    left_must_fill: bool,
    /// Total left utility minus the summed left floors, when every complete
    /// matching hands the left side the same total.
    left_slack: Option<i64>,
    propagate: bool,
}

fn bit(set: &[u64], x: usize) -> bool {
    set[x / 64] >> (x % 64) & 1 == 1
}

fn set_bit(set: &mut [u64], x: usize) {
    set[x / 64] |= 1 << (x % 64);
}

fn sd_ok(rank: &[usize], own: u64, other: u64, c: usize) -> bool {
    let (mut a, mut b) = (0usize, 0usize);
    for &o in rank {
        a += (own >> o & 1) as usize;
        b += (other >> o & 1) as usize;
        if a + c < b {
            return false;
        }
    }
    true
}

fn mask_values(row: &[u64], mask: u64) -> Vec<u64> {
    (0..row.len()).filter(|&o| mask >> o & 1 == 1).map(|o| row[o]).collect()
}

fn ef_ok(row: &[u64], own: u64, other: u64, c: usize) -> bool {
    let own_v: u64 = mask_values(row, own).iter().sum();
    let mut vals = mask_values(row, other);
    let total: u64 = vals.iter().sum();
    own_v >= total - top_sum(&mut vals, c)
}

impl<'a> Model<'a> {
    fn build(inst: &'a Instance, spec: &SearchSpec, opts: &SearchOptions) -> Result<Model<'a>> {
        spec.validate(inst)?;
        let (nl, nr) = (inst.n_left(), inst.n_right());
        if nl > 64 || nr > 64 {
            return Err(Error::BadParameter("search supports at most 64 agents per side".into()));
        }
        let left_cap = inst.caps(Side::Left).to_vec();
        let right_cap = inst.caps(Side::Right).to_vec();
        let (sl, sr) = (inst.total_cap(Side::Left), inst.total_cap(Side::Right));
        let fill = if !spec.require_complete {
            Fill::Free
        } else if sr <= sl {
            Fill::RightFull { left_full: sr == sl }
        } else {
            Fill::LeftFull
        };
        let target_edges = inst.complete_size();

        let mut allowed_sizes = vec![false; nl + 1];
        for &d in &right_cap {
            match fill {
                Fill::RightFull { .. } => allowed_sizes[d] = true,
                _ => allowed_sizes[..=d].iter_mut().for_each(|s| *s = true),
            }
        }
        let mut universe = Vec::new();
        fn gen(start: usize, n: usize, mask: u64, size: usize, ok: &[bool], out: &mut Vec<u64>) -> bool {
            if ok[size] {
                out.push(mask);
                if out.len() > MAX_UNIVERSE {
                    return false;
                }
            }
            if size + 1 >= ok.len() || !ok[size + 1..].iter().any(|&b| b) {
                return true;
            }
            (start..n).all(|e| gen(e + 1, n, mask | 1 << e, size + 1, ok, out))
        }
        if !gen(0, nl, 0, 0, &allowed_sizes, &mut universe) {
            return Err(Error::BadParameter("bundle universe too large for exhaustive search".into()));
        }
        let u = universe.len();
        let words = u.div_ceil(64).max(1);

        let propagate = opts.propagate;
        let right_floor = spec.floors(inst, Side::Right);
        let left_fills = matches!(fill, Fill::LeftFull | Fill::RightFull { left_full: true });
        let right_ceiling: Vec<u64> = if propagate && left_fills && inst.has_identical_values(Side::Right) && nr > 0 {
            // Every complete matching hands the right side the same total.
            let row = inst.row(Side::Right, 0);
            let total: u64 = (0..nl).map(|i| row[i] * left_cap[i] as u64).sum();
            let slack = total as i64 - right_floor.iter().sum::<u64>() as i64;
            right_floor.iter().map(|&f| (f as i64 + slack).max(0) as u64).collect()
        } else {
            vec![u64::MAX; nr]
        };
        let over_committed = right_ceiling.iter().zip(&right_floor).any(|(c, f)| c < f);
        let mut base = vec![0u64; nr * words];
        for j in 0..nr {
            let row = inst.row(Side::Right, j);
            for (x, &m) in universe.iter().enumerate() {
                let size_ok = match fill {
                    Fill::RightFull { .. } => m.count_ones() as usize == right_cap[j],
                    _ => m.count_ones() as usize <= right_cap[j],
                };
                let value: u64 = mask_values(row, m).iter().sum();
                let floor_ok = !propagate || (value >= right_floor[j] && value <= right_ceiling[j] && !over_committed);
                if size_ok && floor_ok {
                    set_bit(&mut base[j * words..(j + 1) * words], x);
                }
            }
        }
        let mut avoid = vec![0u64; nl * words];
        for i in 0..nl {
            for (x, &m) in universe.iter().enumerate() {
                if m >> i & 1 == 0 {
                    set_bit(&mut avoid[i * words..(i + 1) * words], x);
                }
            }
        }

        let mut right_rules = Vec::new();
        for k in spec.sd_ef_constraints.iter().filter(|k| k.side == Side::Right) {
            right_rules.push(RightRule::Sd(k.c));
        }
        for k in spec.ef_constraints.iter().filter(|k| k.side == Side::Right) {
            right_rules.push(RightRule::Ef(k.c));
        }
        let mut profile_row: Vec<Vec<u64>> = Vec::new();
        let right_profile: Vec<usize> = (0..nr)
            .map(|j| {
                let row = inst.row(Side::Right, j);
                match profile_row.iter().position(|r| r == row) {
                    Some(p) => p,
                    None => {
                        profile_row.push(row.to_vec());
                        profile_row.len() - 1
                    }
                }
            })
            .collect();
        let profile_rank: Vec<Vec<usize>> = profile_row.iter().map(|r| rank_row(r)).collect();
        let n_profiles = profile_row.len();

        let left_sd: Vec<usize> = spec
            .sd_ef_constraints
            .iter()
            .filter(|k| k.side == Side::Left)
            .map(|k| k.c)
            .collect();
        let left_ef: Vec<usize> = spec
            .ef_constraints
            .iter()
            .filter(|k| k.side == Side::Left)
            .map(|k| k.c)
            .collect();
        let left_floor = spec.floors(inst, Side::Left);
        let any_left_floor = left_floor.iter().any(|&f| f > 0);
        let left_pref: Vec<Vec<usize>> = (0..nl).map(|i| rank_row(inst.row(Side::Left, i))).collect();

        let mut model = Model {
            inst,
            nl,
            nr,
            words,
            universe,
            fill,
            target_edges,
            left_cap,
            right_cap,
            base,
            avoid,
            right_rules,
            right_profile,
            profile_rank,
            profile_row,
            n_profiles,
            tables: None,
            groups: Vec::new(),
            groups_of: vec![Vec::new(); nr],
            left_ef,
            left_floor,
            any_left_floor,
            left_pref,
            right_sym_prev: vec![None; nr],
            left_sym_pairs: Vec::new(),
            count_sets: Vec::new(),
            at_least: Vec::new(),
            max_bundle: 0,
            windows: Vec::new(),
            left_must_fill: matches!(fill, Fill::LeftFull | Fill::RightFull { left_full: true }),
            left_slack: None,
            propagate,
        };
        if propagate {
            model.build_tables();
            model.filter_right_prefixes();
            model.build_groups(&left_sd);
            model.build_counts();
            model.left_slack = model.fixed_left_total().map(|t| t as i64 - model.left_floor.iter().sum::<u64>() as i64);
            model.build_symmetry(spec, !left_sd.is_empty());
        }
        Ok(model)
    }

    fn compatible(&self, pk: usize, x: u64, pj: usize, b: u64) -> bool {
        self.right_rules.iter().all(|rule| match *rule {
            RightRule::Sd(c) => {
                sd_ok(&self.profile_rank[pk], x, b, c) && sd_ok(&self.profile_rank[pj], b, x, c)
            }
            RightRule::Ef(c) => {
                ef_ok(&self.profile_row[pk], x, b, c) && ef_ok(&self.profile_row[pj], b, x, c)
            }
        })
    }

    fn build_tables(&mut self) {
        if self.right_rules.is_empty() {
            return;
        }
        let (u, p, w) = (self.universe.len(), self.n_profiles, self.words);
        if p * p * u * u > MAX_TABLE_CELLS {
            return;
        }
        let mut t = vec![0u64; p * p * u * w];
        for pk in 0..p {
            for pj in pk..p {
                for b in 0..u {
                    for x in 0..u {
                        if (pk == pj && x < b) || !self.compatible(pk, self.universe[x], pj, self.universe[b]) {
                            continue;
                        }
                        let row = ((pk * p + pj) * u + b) * w;
                        set_bit(&mut t[row..row + w], x);
                        let row = ((pj * p + pk) * u + x) * w;
                        set_bit(&mut t[row..row + w], b);
                    }
                }
            }
        }
        self.tables = Some(t);
    }

    fn build_groups(&mut self, left_sd: &[usize]) {
        let inst = self.inst;
        for &c in left_sd {
            let mut seen: Vec<(u64, Vec<usize>)> = Vec::new();
            for i in 0..self.nl {
                let rank = rank_row(inst.row(Side::Left, i));
                let mut mask = 0u64;
                for &j in &rank {
                    mask |= 1 << j;
                    match seen.iter_mut().find(|(m, _)| *m == mask) {
                        Some((_, members)) => members.push(i),
                        None => seen.push((mask, vec![i])),
                    }
                }
            }
            for (mask, members) in seen {
                let (upper, lower) = self.prefix_bounds(Side::Left, mask, &members, c);
                let g = self.groups.len();
                for j in 0..self.nr {
                    if mask >> j & 1 == 1 {
                        self.groups_of[j].push(g);
                    }
                }
                self.groups.push(PrefixGroup { mask, members, c, upper, lower });
            }
        }
    }

    /// Range any member's count inside the prefix can take in a matching that
    /// satisfies the fill requirement and the members' envy constraints.
    /// Members sit on `side`; `mask` is over the opposite side.
    fn prefix_bounds(&self, side: Side, mask: u64, members: &[usize], c: usize) -> (usize, usize) {
        let (own_cap, other_cap) = match side {
            Side::Left => (&self.left_cap, &self.right_cap),
            Side::Right => (&self.right_cap, &self.left_cap),
        };
        let other_fills = match side {
            Side::Left => matches!(self.fill, Fill::RightFull { .. }),
            Side::Right => self.left_must_fill,
        };
        let size = mask.count_ones() as usize;
        let inside: usize = (0..other_cap.len()).filter(|&o| mask >> o & 1 == 1).map(|o| other_cap[o]).sum();
        let outside: usize = other_cap.iter().sum::<usize>() - inside;
        let t_max = inside;
        let t_min = if other_fills {
            inside
        } else if self.fill == Fill::Free {
            0
        } else {
            self.target_edges.saturating_sub(outside)
        };
        let max_cap = members.iter().map(|&a| own_cap[a]).max().unwrap_or(0);
        let mut upper = size.min(max_cap);
        while upper > 0 && upper + (members.len() - 1) * upper.saturating_sub(c) > t_max {
            upper -= 1;
        }
        let reach: Vec<usize> = own_cap.iter().map(|&cap| cap.min(size)).collect();
        let lower = members
            .iter()
            .map(|&a| {
                let mut k = 0;
                while k < reach[a] {
                    let others: usize = (0..reach.len()).filter(|&x| x != a).map(|x| reach[x].min(k + c)).sum();
                    if k + others >= t_min {
                        break;
                    }
                    k += 1;
                }
                k
            })
            .min()
            .unwrap_or(0);
        (upper, lower)
    }

    /// Drops candidate bundles whose count inside some prefix of the owner's
    /// ranking falls outside the range the right-side envy rules allow.
    fn filter_right_prefixes(&mut self) {
        let inst = self.inst;
        let w = self.words;
        for rule in self.right_rules.clone() {
            let RightRule::Sd(c) = rule else { continue };
            let mut seen: Vec<(u64, Vec<usize>)> = Vec::new();
            for j in 0..self.nr {
                let mut mask = 0u64;
                for i in rank_row(inst.row(Side::Right, j)) {
                    mask |= 1 << i;
                    match seen.iter_mut().find(|(m, _)| *m == mask) {
                        Some((_, members)) => members.push(j),
                        None => seen.push((mask, vec![j])),
                    }
                }
            }
            for (mask, members) in seen {
                let (upper, lower) = self.prefix_bounds(Side::Right, mask, &members, c);
                for &j in &members {
                    for (x, &b) in self.universe.iter().enumerate() {
                        let k = (b & mask).count_ones() as usize;
                        if k < lower || k > upper {
                            self.base[j * w + x / 64] &= !(1u64 << (x % 64));
                        }
                    }
                }
            }
        }
    }

    fn build_counts(&mut self) {
        let inst = self.inst;
        let mut sets: Vec<u64> = (0..self.nl).map(|i| 1u64 << i).collect();
        if !self.right_rules.is_empty() {
            for j in 0..self.nr {
                let mut q = 0u64;
                for i in rank_row(inst.row(Side::Right, j)) {
                    q |= 1 << i;
                    if !sets.contains(&q) {
                        sets.push(q);
                    }
                }
            }
        }
        let tmax = self.right_cap.iter().copied().max().unwrap_or(0);
        let w = self.words;
        let mut at_least = vec![0u64; sets.len() * tmax * w];
        for (qi, &q) in sets.iter().enumerate() {
            for (x, &b) in self.universe.iter().enumerate() {
                let have = (b & q).count_ones() as usize;
                for t in 1..=have.min(tmax) {
                    let row = (qi * tmax + t - 1) * w;
                    set_bit(&mut at_least[row..row + w], x);
                }
            }
        }
        self.count_sets = sets;
        self.at_least = at_least;
        self.max_bundle = tmax;

        let mut windows = Vec::new();
        for (o, outer) in self.groups.iter().enumerate() {
            let inners = std::iter::once(None).chain((0..self.groups.len()).map(Some));
            for inner in inners {
                let (imask, ilower, iupper, imembers) = match inner {
                    None => (0, 0, 0, !0u64),
                    Some(g) => {
                        let grp = &self.groups[g];
                        let members = grp.members.iter().fold(0u64, |m, &a| m | 1 << a);
                        (grp.mask, grp.lower, grp.upper, members)
                    }
                };
                if imask & !outer.mask != 0 || imask == outer.mask {
                    continue;
                }
                let members = outer.members.iter().fold(0u64, |m, &a| m | 1 << a) & imembers;
                let width = (outer.mask & !imask).count_ones() as usize;
                let binding = (0..self.nl).filter(|&i| members >> i & 1 == 1).any(|i| {
                    outer.upper.saturating_sub(ilower) < self.left_cap[i].min(width) || outer.lower > iupper
                });
                if binding {
                    windows.push(Window {
                        mask: outer.mask & !imask,
                        outer: o,
                        inner,
                        members,
                    });
                }
            }
        }
        self.windows = windows;
    }

    fn fixed_left_total(&self) -> Option<u64> {
        if !self.any_left_floor || !matches!(self.fill, Fill::RightFull { .. }) || !self.inst.has_identical_values(Side::Left) {
            return None;
        }
        let row = self.inst.row(Side::Left, 0);
        Some((0..self.nr).map(|j| row[j] * self.right_cap[j] as u64).sum())
    }

    fn build_symmetry(&mut self, spec: &SearchSpec, left_sd: bool) {
        let inst = self.inst;
        let right_sd = spec.sd_ef_constraints.iter().any(|k| k.side == Side::Right);
        let rf = spec.floors(inst, Side::Right);
        let lf = &self.left_floor;
        let col = |side: Side, a: usize| -> Vec<u64> {
            inst.valuations(side.opposite()).iter().map(|r| r[a]).collect()
        };
        if !left_sd {
            for j in 1..self.nr {
                self.right_sym_prev[j] = (0..j).rev().find(|&p| {
                    inst.row(Side::Right, p) == inst.row(Side::Right, j)
                        && self.right_cap[p] == self.right_cap[j]
                        && rf[p] == rf[j]
                        && col(Side::Right, p) == col(Side::Right, j)
                });
            }
        }
        if !right_sd {
            for i in 1..self.nl {
                let prev = (0..i).rev().find(|&p| {
                    inst.row(Side::Left, p) == inst.row(Side::Left, i)
                        && self.left_cap[p] == self.left_cap[i]
                        && lf[p] == lf[i]
                        && col(Side::Left, p) == col(Side::Left, i)
                });
                if let Some(p) = prev {
                    self.left_sym_pairs.push((p, i));
                }
            }
        }
    }
}

/// Right agents cut out of one left prefix group by a nested one; members of
/// both place a bounded number of further edges inside.
struct Window {
    mask: u64,
    outer: usize,
    inner: Option<usize>,
    members: u64,
}

/// Mutable search state for one worker.
struct Worker<'m, 'a> {
    model: &'m Model<'a>,
    bundles: Vec<u64>,
    left_mask: Vec<u64>,
    left_deg: Vec<usize>,
    left_val: Vec<u64>,
    tied: Vec<bool>,
    /// One candidate layer per depth: `nr * words` words each.
    cands: Vec<u64>,
    nodes: u64,
    shared: &'m Shared,
    deadline: Instant,
}

struct Shared {
    nodes: AtomicU64,
    budget: u64,
    stop: AtomicBool,
    exceeded: AtomicBool,
    best_branch: AtomicUsize,
}

enum Step {
    Continue,
    Stop,
}

impl<'m, 'a> Worker<'m, 'a> {
    fn new(model: &'m Model<'a>, shared: &'m Shared, deadline: Instant) -> Self {
        let layer = model.nr * model.words;
        let mut cands = vec![0u64; (model.nr + 1) * layer];
        cands[..layer].copy_from_slice(&model.base);
        Worker {
            model,
            bundles: vec![0; model.nr],
            left_mask: vec![0; model.nl],
            left_deg: vec![0; model.nl],
            left_val: vec![0; model.nl],
            tied: vec![true; model.left_sym_pairs.len()],
            cands,
            nodes: 0,
            shared,
            deadline,
        }
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes & TIME_CHECK_MASK == 0 {
            let total = self.shared.nodes.fetch_add(TIME_CHECK_MASK + 1, Ordering::Relaxed) + TIME_CHECK_MASK + 1;
            if total > self.shared.budget || Instant::now() > self.deadline {
                self.shared.exceeded.store(true, Ordering::Relaxed);
                self.shared.stop.store(true, Ordering::Relaxed);
            }
        }
        !self.shared.stop.load(Ordering::Relaxed)
    }

    fn flush(&mut self) {
        let rem = self.nodes & TIME_CHECK_MASK;
        let total = self.shared.nodes.fetch_add(rem, Ordering::Relaxed) + rem;
        if total > self.shared.budget {
            self.shared.exceeded.store(true, Ordering::Relaxed);
        }
        self.nodes -= rem;
    }

    fn matching(&self) -> Matching {
        let mut m = Matching::for_instance(self.model.inst);
        for (j, &b) in self.bundles.iter().enumerate() {
            for i in 0..self.model.nl {
                if b >> i & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    fn excluded(&self, j: usize) -> u64 {
        let md = self.model;
        let mut ex = 0u64;
        for i in 0..md.nl {
            if self.left_deg[i] >= md.left_cap[i] {
                ex |= 1 << i;
            }
        }
        if md.propagate {
            for &g in &md.groups_of[j] {
                let grp = &md.groups[g];
                for &a in &grp.members {
                    if (self.left_mask[a] & grp.mask).count_ones() as usize >= grp.upper {
                        ex |= 1 << a;
                    }
                }
            }
        }
        ex
    }

    fn symmetric_ok(&self, j: usize, b: u64) -> bool {
        let md = self.model;
        if let Some(p) = md.right_sym_prev[j] {
            if b.reverse_bits() < self.bundles[p].reverse_bits() {
                return false;
            }
        }
        md.left_sym_pairs
            .iter()
            .zip(&self.tied)
            .all(|(&(i, k), &tied)| !tied || !(b >> i & 1 == 1 && b >> k & 1 == 0))
    }

    fn on_the_fly_ok(&self, j: usize, b: u64) -> bool {
        let md = self.model;
        if md.right_rules.is_empty() || md.tables.is_some() {
            return true;
        }
        let pj = md.right_profile[j];
        (0..j).all(|p| md.compatible(pj, b, md.right_profile[p], self.bundles[p]))
    }

    fn assign(&mut self, j: usize, b: u64) {
        self.bundles[j] = b;
        for i in 0..self.model.nl {
            if b >> i & 1 == 1 {
                self.left_mask[i] |= 1 << j;
                self.left_deg[i] += 1;
                self.left_val[i] += self.model.inst.value(Side::Left, i, j);
            }
        }
        for (t, &(i, k)) in self.tied.iter_mut().zip(&self.model.left_sym_pairs) {
            if *t && (b >> i & 1) != (b >> k & 1) {
                *t = false;
            }
        }
    }

    fn unassign(&mut self, j: usize, b: u64, tied_before: &[bool]) {
        self.bundles[j] = 0;
        for i in 0..self.model.nl {
            if b >> i & 1 == 1 {
                self.left_mask[i] &= !(1 << j);
                self.left_deg[i] -= 1;
                self.left_val[i] -= self.model.inst.value(Side::Left, i, j);
            }
        }
        self.tied.copy_from_slice(tied_before);
    }

    /// Best value left agent `i` can still reach from right agents `j..`.
    fn left_upper(&self, i: usize, from: usize) -> u64 {
        let md = self.model;
        let mut room = md.left_cap[i] - self.left_deg[i];
        let mut v = self.left_val[i];
        for &r in &md.left_pref[i] {
            if room == 0 {
                break;
            }
            if r >= from {
                v += md.inst.value(Side::Left, i, r);
                room -= 1;
            }
        }
        v
    }

    /// Whether left agent `i` can still collect between `lo` and `hi` more
    /// value from `room` distinct right agents among `next..` (exactly `room`
    /// when it must fill up).
    fn reachable(&self, i: usize, next: usize, room: usize, lo: u64, hi: u64, exact: bool) -> bool {
        self.reachable_without(i, next, None, room, lo, hi, exact)
    }

    fn reachable_without(
        &self,
        i: usize,
        next: usize,
        skip: Option<usize>,
        room: usize,
        lo: u64,
        hi: u64,
        exact: bool,
    ) -> bool {
        let md = self.model;
        let width = hi as usize + 1;
        let words = width.div_ceil(64);
        let mut dp = vec![0u64; (room + 1) * words];
        dp[0] = 1;
        let mut used = 0;
        for r in next..md.nr {
            let v = md.inst.value(Side::Left, i, r) as usize;
            if Some(r) == skip || v >= width {
                continue;
            }
            used += 1;
            for c in (0..room.min(used)).rev() {
                let (head, tail) = dp.split_at_mut((c + 1) * words);
                let src = &head[c * words..];
                let dst = &mut tail[..words];
                let (ws, bs) = (v / 64, v % 64);
                for q in (ws..words).rev() {
                    let mut x = src[q - ws] << bs;
                    if bs > 0 && q > ws {
                        x |= src[q - ws - 1] >> (64 - bs);
                    }
                    dst[q] |= x;
                }
                if width % 64 != 0 {
                    dst[words - 1] &= (1u64 << (width % 64)) - 1;
                }
            }
        }
        let counts = if exact { room..=room } else { 0..=room };
        counts.into_iter().any(|c| (lo..=hi).any(|s| bit(&dp[c * words..(c + 1) * words], s as usize)))
    }

    /// Bound checks after right agents `0..next` are assigned.
    fn consistent(&self, next: usize) -> bool {
        let md = self.model;
        let remaining = md.nr - next;
        let unassigned: u64 = if next >= 64 { 0 } else { !0u64 << next };
        match md.fill {
            Fill::Free => {}
            Fill::RightFull { left_full } => {
                let need: usize = md.right_cap[next..].iter().sum();
                let room: usize = (0..md.nl).map(|i| md.left_cap[i] - self.left_deg[i]).sum();
                if need > room {
                    return false;
                }
                if left_full && (0..md.nl).any(|i| md.left_cap[i] - self.left_deg[i] > remaining) {
                    return false;
                }
            }
            Fill::LeftFull => {
                let supply: usize = md.right_cap[next..].iter().sum();
                let room: usize = (0..md.nl).map(|i| md.left_cap[i] - self.left_deg[i]).sum();
                if room > supply || (0..md.nl).any(|i| md.left_cap[i] - self.left_deg[i] > remaining) {
                    return false;
                }
            }
        }
        for grp in &md.groups {
            let open = (grp.mask & unassigned).count_ones() as usize;
            let mut top = 0usize;
            for i in 0..md.nl {
                top = top.max((self.left_mask[i] & grp.mask).count_ones() as usize);
            }
            for &a in &grp.members {
                let cnt = (self.left_mask[a] & grp.mask).count_ones() as usize;
                let ub = cnt + open.min(md.left_cap[a] - self.left_deg[a]);
                if cnt > grp.upper || ub < grp.lower || ub + grp.c < top {
                    return false;
                }
            }
        }
        if md.any_left_floor || !md.left_ef.is_empty() {
            let ubs: Vec<u64> = (0..md.nl).map(|i| self.left_upper(i, next)).collect();
            if md.any_left_floor {
                if (0..md.nl).any(|i| ubs[i] < md.left_floor[i]) {
                    return false;
                }
                if let Some(slack) = md.left_slack {
                    if slack < 0 {
                        return false;
                    }
                    for i in 0..md.nl {
                        let top = md.left_floor[i] + slack as u64;
                        if self.left_val[i] > top {
                            return false;
                        }
                        let lo = md.left_floor[i].saturating_sub(self.left_val[i]);
                        let room = md.left_cap[i] - self.left_deg[i];
                        if !self.reachable(i, next, room, lo, top - self.left_val[i], md.left_must_fill) {
                            return false;
                        }
                    }
                }
                let deficit: Vec<u64> = (0..md.nl)
                    .map(|i| md.left_floor[i].saturating_sub(self.left_val[i]))
                    .collect();
                let total: u64 = deficit.iter().sum();
                if total > 0 {
                    let mut supply = 0u64;
                    let mut gains = Vec::with_capacity(md.nl);
                    for j in next..md.nr {
                        gains.clear();
                        gains.extend(
                            (0..md.nl)
                                .filter(|&i| deficit[i] > 0 && self.left_deg[i] < md.left_cap[i])
                                .map(|i| md.inst.value(Side::Left, i, j).min(deficit[i])),
                        );
                        supply += top_sum(&mut gains, md.right_cap[j]);
                    }
                    if supply < total {
                        return false;
                    }
                }
            }
            for &c in &md.left_ef {
                for i in 0..md.nl {
                    let row = md.inst.row(Side::Left, i);
                    for k in 0..md.nl {
                        if k == i || (self.left_deg[k] as usize) <= c {
                            continue;
                        }
                        let mut vals = mask_values(row, self.left_mask[k]);
                        let total: u64 = vals.iter().sum();
                        if ubs[i] < total - top_sum(&mut vals, c) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// With a fixed left total, removes from layer `next` every bundle that
    /// gives a left agent a right agent it cannot use on the way to its
    /// floor.
    fn floor_filter(&mut self, next: usize) -> bool {
        let md = self.model;
        let Some(slack) = md.left_slack else { return true };
        if slack < 0 || next == md.nr {
            return slack >= 0;
        }
        let (w, layer) = (md.words, md.nr * md.words);
        let mut dead: Vec<(usize, usize)> = Vec::new();
        for i in 0..md.nl {
            let room = md.left_cap[i] - self.left_deg[i];
            if room == 0 {
                continue;
            }
            let top = md.left_floor[i] + slack as u64 - self.left_val[i];
            let lo = md.left_floor[i].saturating_sub(self.left_val[i]);
            for k in next..md.nr {
                let v = md.inst.value(Side::Left, i, k);
                let ok = v <= top
                    && self.reachable_without(
                        i,
                        next,
                        Some(k),
                        room - 1,
                        lo.saturating_sub(v),
                        top - v,
                        md.left_must_fill,
                    );
                if !ok {
                    dead.push((i, k));
                }
            }
        }
        for (i, k) in dead {
            let at = next * layer + k * w;
            for q in 0..w {
                self.cands[at + q] &= md.avoid[i * w + q];
            }
            if self.cands[at..at + w].iter().all(|&x| x == 0) {
                return false;
            }
        }
        true
    }

    /// Pigeonhole test on every count set: over a window of unassigned right
    /// agents, the least and most members their remaining candidates can
    /// hold must fit what those left agents can still place there.
    fn counts_ok(&self, next: usize) -> bool {
        let md = self.model;
        if next == md.nr || md.count_sets.is_empty() {
            return true;
        }
        let (w, tmax) = (md.words, md.max_bundle);
        let layer = md.nr * w;
        let mut allowed = vec![!0u64; w];
        for i in 0..md.nl {
            if self.left_deg[i] >= md.left_cap[i] {
                for (a, v) in allowed.iter_mut().zip(&md.avoid[i * w..(i + 1) * w]) {
                    *a &= v;
                }
            }
        }
        let nq = md.count_sets.len();
        let rem = md.nr - next;
        let mut lo = vec![0usize; nq * rem];
        let mut hi = vec![0usize; nq * rem];
        let mut eff = vec![0u64; w];
        for k in next..md.nr {
            let cand = &self.cands[next * layer + k * w..next * layer + (k + 1) * w];
            for q in 0..w {
                eff[q] = cand[q] & allowed[q];
            }
            for qi in 0..nq {
                let (mut l, mut h) = (0, 0);
                for t in 1..=tmax {
                    let row = &md.at_least[(qi * tmax + t - 1) * w..(qi * tmax + t) * w];
                    let all = eff.iter().zip(row).all(|(e, r)| e & !r == 0);
                    let any = eff.iter().zip(row).any(|(e, r)| e & r != 0);
                    if all {
                        l = t;
                    }
                    if any {
                        h = t;
                    }
                    if !any {
                        break;
                    }
                }
                lo[qi * rem + k - next] = l;
                hi[qi * rem + k - next] = h;
            }
        }
        let unassigned: u64 = !0u64 << next;
        let cap_rem: Vec<usize> = (0..md.nl).map(|i| md.left_cap[i] - self.left_deg[i]).collect();
        let mut into_max = vec![0usize; md.nl];
        let mut into_min = vec![0usize; md.nl];
        let check = |kmask: u64, into_min: &[usize], into_max: &[usize]| -> bool {
            for (qi, &q) in md.count_sets.iter().enumerate() {
                let (mut need_lo, mut need_hi) = (0usize, 0usize);
                for k in next..md.nr {
                    if kmask >> k & 1 == 1 {
                        need_lo += lo[qi * rem + k - next];
                        need_hi += hi[qi * rem + k - next];
                    }
                }
                let (mut give_lo, mut give_hi) = (0usize, 0usize);
                for i in 0..md.nl {
                    if q >> i & 1 == 1 {
                        give_lo += into_min[i];
                        give_hi += into_max[i];
                    }
                }
                if need_lo > give_hi || need_hi < give_lo {
                    return false;
                }
            }
            true
        };
        let all = unassigned & if md.nr == 64 { !0 } else { (1u64 << md.nr) - 1 };
        for i in 0..md.nl {
            into_max[i] = cap_rem[i].min(rem);
            into_min[i] = if md.left_must_fill { cap_rem[i] } else { 0 };
        }
        if !check(all, &into_min, &into_max) {
            return false;
        }
        for win in &md.windows {
            let kmask = win.mask & unassigned;
            if kmask == 0 {
                continue;
            }
            let width = kmask.count_ones() as usize;
            let outer = &md.groups[win.outer];
            for i in 0..md.nl {
                let mut top = cap_rem[i].min(width);
                let mut bottom = 0usize;
                if win.members >> i & 1 == 1 {
                    let co = (self.left_mask[i] & outer.mask).count_ones() as usize;
                    let (ci, il, iu) = match win.inner {
                        None => (0, 0, 0),
                        Some(g) => {
                            let grp = &md.groups[g];
                            ((self.left_mask[i] & grp.mask).count_ones() as usize, grp.lower, grp.upper)
                        }
                    };
                    let room = outer.upper.saturating_sub(co).saturating_sub(il.saturating_sub(ci));
                    top = top.min(room);
                    bottom = outer.lower.saturating_sub(co).saturating_sub(iu.saturating_sub(ci));
                }
                into_max[i] = top;
                into_min[i] = bottom;
            }
            if !check(kmask, &into_min, &into_max) {
                return false;
            }
        }
        true
    }

    /// Narrows candidate layer `depth + 1` from layer `depth` after right
    /// agent `j` took universe entry `x`; false when some agent runs dry.
    fn forward(&mut self, j: usize, x: usize) -> bool {
        let md = self.model;
        let (w, nr) = (md.words, md.nr);
        let layer = nr * w;
        let (lo, hi) = self.cands.split_at_mut((j + 1) * layer);
        let cur = &lo[j * layer..];
        let nxt = &mut hi[..layer];
        let mut allowed = vec![!0u64; w];
        for i in 0..md.nl {
            if self.left_deg[i] >= md.left_cap[i] {
                for (a, v) in allowed.iter_mut().zip(&md.avoid[i * w..(i + 1) * w]) {
                    *a &= v;
                }
            }
        }
        let pj = md.right_profile[j];
        let p = md.n_profiles;
        let u = md.universe.len();
        for k in j + 1..nr {
            let src = &cur[k * w..(k + 1) * w];
            let dst = &mut nxt[k * w..(k + 1) * w];
            match &md.tables {
                Some(t) if md.propagate => {
                    let pk = md.right_profile[k];
                    let row = ((pk * p + pj) * u + x) * w;
                    for q in 0..w {
                        dst[q] = src[q] & t[row + q];
                    }
                }
                _ => dst.copy_from_slice(src),
            }
            if md.propagate && !dst.iter().zip(&allowed).any(|(d, a)| d & a != 0) {
                return false;
            }
        }
        true
    }

    fn dfs(&mut self, j: usize, visit: &mut dyn FnMut(&Matching) -> ControlFlow<()>) -> Step {
        let md = self.model;
        if j == md.nr {
            if md.fill != Fill::Free {
                let edges: usize = self.left_deg.iter().sum();
                if edges != md.target_edges {
                    return Step::Continue;
                }
            }
            let m = self.matching();
            return match visit(&m) {
                ControlFlow::Break(()) => Step::Stop,
                ControlFlow::Continue(()) => Step::Continue,
            };
        }
        let ex = self.excluded(j);
        let w = md.words;
        let layer = md.nr * w;
        let tied_before = self.tied.clone();
        for q in 0..w {
            let mut word = self.cands[j * layer + j * w + q];
            while word != 0 {
                let x = q * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                let b = md.universe[x];
                if b & ex != 0 {
                    continue;
                }
                if md.propagate && !self.symmetric_ok(j, b) {
                    continue;
                }
                if !self.tick() {
                    return Step::Stop;
                }
                if md.propagate && !self.on_the_fly_ok(j, b) {
                    continue;
                }
                self.assign(j, b);
                if (!md.propagate || self.consistent(j + 1))
                    && self.forward(j, x)
                    && (!md.propagate || (self.floor_filter(j + 1) && self.counts_ok(j + 1)))
                {
                    if let Step::Stop = self.dfs(j + 1, visit) {
                        self.unassign(j, b, &tied_before);
                        return Step::Stop;
                    }
                }
                self.unassign(j, b, &tied_before);
            }
        }
        Step::Continue
    }

    /// First-level choices for right agent 0, in visiting order.
    fn roots(&self) -> Vec<usize> {
        let md = self.model;
        let ex = self.excluded(0);
        let w = md.words;
        (0..md.universe.len())
            .filter(|&x| bit(&self.cands[..w], x))
            .filter(|&x| md.universe[x] & ex == 0)
            .filter(|&x| !md.propagate || self.symmetric_ok(0, md.universe[x]))
            .collect()
    }

    /// Explores the subtree under right agent 0 holding entry `x`.
    fn explore_root(&mut self, x: usize, visit: &mut dyn FnMut(&Matching) -> ControlFlow<()>) -> Step {
        let md = self.model;
        if md.nr == 0 {
            return self.dfs(0, visit);
        }
        if !self.tick() {
            return Step::Stop;
        }
        let tied_before = self.tied.clone();
        let b = md.universe[x];
        self.assign(0, b);
        let go = (!md.propagate || self.consistent(1)) && self.forward(0, x)
            && (!md.propagate || (self.floor_filter(1) && self.counts_ok(1)));
        let step = if go { self.dfs(1, visit) } else { Step::Continue };
        self.unassign(0, b, &tied_before);
        step
    }
}

fn deadline(spec: &SearchSpec) -> Instant {
    let secs = spec.time_budget.min(1e9);
    Instant::now() + Duration::from_secs_f64(secs)
}

fn shared(spec: &SearchSpec) -> Shared {
    Shared {
        nodes: AtomicU64::new(0),
        budget: spec.node_budget,
        stop: AtomicBool::new(false),
        exceeded: AtomicBool::new(false),
        best_branch: AtomicUsize::new(usize::MAX),
    }
}

/// Calls `visit` on every matching the search accepts at its leaves, in
/// canonical order: right agents by index, each bundle in lexicographic
/// order. Returns the number of nodes explored.
pub fn for_each_solution(
    instance: &Instance,
    spec: &SearchSpec,
    opts: &SearchOptions,
    mut visit: impl FnMut(&Matching) -> ControlFlow<()>,
) -> Result<u64> {
    let model = Model::build(instance, spec, opts)?;
    let sh = shared(spec);
    let mut worker = Worker::new(&model, &sh, deadline(spec));
    let mut filtered = |m: &Matching| {
        if spec.is_satisfied_by(instance, m) {
            visit(m)
        } else {
            ControlFlow::Continue(())
        }
    };
    if model.nr == 0 {
        worker.dfs(0, &mut filtered);
    } else {
        for x in worker.roots() {
            if let Step::Stop = worker.explore_root(x, &mut filtered) {
                break;
            }
        }
    }
    worker.flush();
    let nodes = sh.nodes.load(Ordering::Relaxed);
    if sh.exceeded.load(Ordering::Relaxed) {
        return Err(Error::BudgetExceeded {
            nodes_explored: nodes,
            lower_bound: None,
        });
    }
    Ok(nodes)
}

pub fn find_matching_with(instance: &Instance, spec: &SearchSpec, opts: &SearchOptions) -> Result<SearchOutcome> {
    let model = Model::build(instance, spec, opts)?;
    let sh = shared(spec);
    let dl = deadline(spec);
    let probe = Worker::new(&model, &sh, dl);
    let roots = if model.nr == 0 { vec![usize::MAX] } else { probe.roots() };
    drop(probe);

    let run_branch = |idx: usize, x: usize| -> Option<Matching> {
        if sh.best_branch.load(Ordering::Relaxed) < idx {
            return None;
        }
        let mut worker = Worker::new(&model, &sh, dl);
        let mut found = None;
        let mut visit = |m: &Matching| {
            if spec.is_satisfied_by(instance, m) {
                found = Some(m.clone());
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        };
        if x == usize::MAX {
            worker.dfs(0, &mut visit);
        } else {
            worker.explore_root(x, &mut visit);
        }
        worker.flush();
        if found.is_some() {
            sh.best_branch.fetch_min(idx, Ordering::Relaxed);
        }
        found
    };

    let results: Vec<Option<Matching>> = if opts.workers > 1 && roots.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::BadParameter(e.to_string()))?;
        pool.install(|| roots.par_iter().enumerate().map(|(k, &x)| run_branch(k, x)).collect())
    } else {
        let mut out = Vec::with_capacity(roots.len());
        for (k, &x) in roots.iter().enumerate() {
            let r = run_branch(k, x);
            let done = r.is_some() || sh.stop.load(Ordering::Relaxed);
            out.push(r);
            if done {
                break;
            }
        }
        out
    };
    let nodes = sh.nodes.load(Ordering::Relaxed);
    if let Some(m) = results.into_iter().flatten().next() {
        return Ok(SearchOutcome {
            status: SearchStatus::Found,
            witness: Some(m),
            nodes_explored: nodes,
        });
    }
    let status = if sh.exceeded.load(Ordering::Relaxed) || sh.stop.load(Ordering::Relaxed) {
        SearchStatus::BudgetExceeded
    } else {
        SearchStatus::ExhaustedInfeasible
    };
    Ok(SearchOutcome {
        status,
        witness: None,
        nodes_explored: nodes,
    })
}

pub fn find_matching(instance: &Instance, spec: &SearchSpec) -> Result<SearchOutcome> {
    find_matching_with(instance, spec, &SearchOptions::default())
}

/// Visits every complete valid matching exactly once, in canonical order,
/// and returns how many were visited before `visit` stopped.
pub fn enumerate_complete_matchings(
    instance: &Instance,
    node_budget: u64,
    mut visit: impl FnMut(&Matching) -> ControlFlow<()>,
) -> Result<u64> {
    let spec = SearchSpec::complete().with_budget(node_budget, f64::MAX);
    let opts = SearchOptions {
        propagate: false,
        workers: 1,
    };
    let mut count = 0u64;
    for_each_solution(instance, &spec, &opts, |m| {
        count += 1;
        visit(m)
    })?;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(inst: &Instance) -> u64 {
        enumerate_complete_matchings(inst, u64::MAX, |_| ControlFlow::Continue(())).unwrap()
    }

    #[test]
    fn complete_matching_counts() {
        let id = |n: usize, d: usize| Instance::identical(n, d, vec![1; n], vec![1; n]).unwrap();
        assert_eq!(count(&id(2, 1)), 2);
        assert_eq!(count(&id(3, 1)), 6);
        assert_eq!(count(&id(4, 2)), 90);
        assert_eq!(count(&id(5, 2)), 2040);
    }

    #[test]
    fn unbalanced_caps_fill_smaller_side() {
        let inst = Instance::new(vec![1, 1], vec![2, 2], vec![vec![1, 1]; 2], vec![vec![1, 1]; 2]).unwrap();
        let mut seen = 0;
        enumerate_complete_matchings(&inst, u64::MAX, |m| {
            assert_eq!(m.edge_count(), 2);
            seen += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(seen, 4);
    }

    #[test]
    fn finds_sd_def1_for_identical_five_by_two() {
        let row = vec![5, 4, 3, 2, 1];
        let inst = Instance::identical(5, 2, row.clone(), row).unwrap();
        let spec = SearchSpec::complete().with_sd_ef(Side::Left, 1).with_sd_ef(Side::Right, 1);
        let out = find_matching(&inst, &spec).unwrap();
        assert_eq!(out.status, SearchStatus::Found);
        assert!(spec.is_satisfied_by(&inst, out.witness.as_ref().unwrap()));
    }

    #[test]
    fn budget_is_reported() {
        let inst = Instance::identical(6, 3, vec![1; 6], vec![1; 6]).unwrap();
        let spec = SearchSpec::complete().with_side_floor(&inst, Side::Left, 100).with_budget(10, 60.0);
        let out = find_matching_with(&inst, &spec, &SearchOptions { propagate: false, workers: 1 }).unwrap();
        assert_eq!(out.status, SearchStatus::BudgetExceeded);
    }
}

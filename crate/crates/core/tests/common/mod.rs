//! Brute-force reference implementations, written from the definitions and
//! sharing no code with the library beyond the instance and matching types.
#![allow(dead_code)]

use twosided::{Instance, Matching, Side};

/// Every valid matching (caps respected), by deciding each edge in turn.
pub fn valid_matchings(inst: &Instance) -> Vec<Matching> {
    let (nl, nr) = (inst.n_left(), inst.n_right());
    let mut out = Vec::new();
    let mut m = Matching::empty(nl, nr);
    let mut dl = vec![0usize; nl];
    let mut dr = vec![0usize; nr];
    fn rec(
        inst: &Instance,
        k: usize,
        m: &mut Matching,
        dl: &mut [usize],
        dr: &mut [usize],
        out: &mut Vec<Matching>,
    ) {
        let (nl, nr) = (inst.n_left(), inst.n_right());
        if k == nl * nr {
            out.push(m.clone());
            return;
        }
        let (i, j) = (k / nr, k % nr);
        rec(inst, k + 1, m, dl, dr, out);
        if dl[i] < inst.cap(Side::Left, i) && dr[j] < inst.cap(Side::Right, j) {
            m.set(i, j, true);
            dl[i] += 1;
            dr[j] += 1;
            rec(inst, k + 1, m, dl, dr, out);
            m.set(i, j, false);
            dl[i] -= 1;
            dr[j] -= 1;
        }
    }
    rec(inst, 0, &mut m, &mut dl, &mut dr, &mut out);
    out
}

pub fn max_edges(inst: &Instance) -> usize {
    inst.caps(Side::Left).iter().sum::<usize>().min(inst.caps(Side::Right).iter().sum())
}

pub fn complete_matchings(inst: &Instance) -> Vec<Matching> {
    let target = max_edges(inst);
    valid_matchings(inst).into_iter().filter(|m| m.edge_count() == target).collect()
}

fn bundle_of(m: &Matching, side: Side, a: usize) -> Vec<usize> {
    let other = match side {
        Side::Left => m.n_right(),
        Side::Right => m.n_left(),
    };
    (0..other)
        .filter(|&o| match side {
            Side::Left => m.contains(a, o),
            Side::Right => m.contains(o, a),
        })
        .collect()
}

fn value(inst: &Instance, side: Side, a: usize, bundle: &[usize]) -> u64 {
    bundle.iter().map(|&o| inst.valuations(side)[a][o]).sum()
}

fn subsets_of_size(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut with = subsets_of_size(&items[1..], k - 1);
    for s in &mut with {
        s.insert(0, items[0]);
    }
    with.extend(subsets_of_size(&items[1..], k));
    with
}

/// Envy of `i` toward `k` survives removing every choice of at most `c`
/// matches from `k`'s bundle.
pub fn envies_beyond(inst: &Instance, m: &Matching, side: Side, i: usize, k: usize, c: usize) -> bool {
    let own = value(inst, side, i, &bundle_of(m, side, i));
    let theirs = bundle_of(m, side, k);
    let removable = c.min(theirs.len());
    subsets_of_size(&theirs, removable).iter().all(|s| {
        let rest: Vec<usize> = theirs.iter().copied().filter(|o| !s.contains(o)).collect();
        own < value(inst, side, i, &rest)
    })
}

pub fn ef_c(inst: &Instance, m: &Matching, side: Side, c: usize) -> bool {
    let n = inst.size(side);
    (0..n).all(|i| (0..n).all(|k| i == k || !envies_beyond(inst, m, side, i, k, c)))
}

/// Ranking by value descending, ties by lower index first.
pub fn ranking(row: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
    idx
}

pub fn sd_ef_c(inst: &Instance, m: &Matching, side: Side, c: usize) -> bool {
    let n = inst.size(side);
    for i in 0..n {
        let rank = ranking(&inst.valuations(side)[i]);
        let mine = bundle_of(m, side, i);
        for k in 0..n {
            if k == i {
                continue;
            }
            let theirs = bundle_of(m, side, k);
            for t in 1..=rank.len() {
                let a = rank[..t].iter().filter(|o| mine.contains(o)).count();
                let b = rank[..t].iter().filter(|o| theirs.contains(o)).count();
                if a + c < b {
                    return false;
                }
            }
        }
    }
    true
}

/// Best worst same-side bundle value for `agent` over every valid matching.
pub fn mms(inst: &Instance, side: Side, agent: usize) -> u64 {
    mms_over(&valid_matchings(inst), inst, side, agent)
}

pub fn mms_over(all: &[Matching], inst: &Instance, side: Side, agent: usize) -> u64 {
    all.iter()
        .map(|m| {
            (0..inst.size(side))
                .map(|a| value(inst, side, agent, &bundle_of(m, side, a)))
                .min()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}

/// Best worst block over set partitions of all opposite agents into blocks
/// of at most `cap` members (opposite caps ignored).
pub fn weak_mms(row: &[u64], cap: usize) -> u64 {
    fn rec(row: &[u64], k: usize, sizes: &mut Vec<usize>, vals: &mut Vec<u64>, cap: usize, best: &mut u64) {
        if k == row.len() {
            *best = (*best).max(vals.iter().copied().min().unwrap_or(0));
            return;
        }
        for b in 0..sizes.len() {
            if sizes[b] < cap {
                sizes[b] += 1;
                vals[b] += row[k];
                rec(row, k + 1, sizes, vals, cap, best);
                sizes[b] -= 1;
                vals[b] -= row[k];
            }
        }
        sizes.push(1);
        vals.push(row[k]);
        rec(row, k + 1, sizes, vals, cap, best);
        sizes.pop();
        vals.pop();
    }
    let mut best = 0;
    if cap > 0 {
        rec(row, 0, &mut Vec::new(), &mut Vec::new(), cap, &mut best);
    }
    best
}

/// Exact `utility >= share / d` without division.
pub fn meets_fraction(utility: u64, share: u64, d: usize) -> bool {
    utility * d as u64 >= share
}

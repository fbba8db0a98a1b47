//! Three-phase round robin for caps of two when the left side shares one
//! ranking. Right agents are processed by their position in that ranking.
//!
//! For odd `n`, when the left partner of right agent `h - 1` (with
//! `h = ceil(n / 2)`) already has two matches, right agent `n - 1` takes its
//! favourite left agent among those with exactly one match.

use crate::error::{Error, Result};
use crate::instance::{derive_side_ordinal, rank_row, Instance, Matching, Side};

struct State {
    /// Right agents in processing order (position -> right index).
    right: Vec<usize>,
    /// Each right agent's ranking of the left side.
    prefs: Vec<Vec<usize>>,
    m: Matching,
}

impl State {
    fn left_degree(&self, i: usize) -> usize {
        self.m.degree(Side::Left, i)
    }

    /// Favourite left agent of the right agent at `pos` with exactly `deg` matches.
    fn favourite(&self, pos: usize, deg: usize) -> Result<usize> {
        let j = self.right[pos];
        self.prefs[j]
            .iter()
            .copied()
            .find(|&i| self.left_degree(i) == deg && !self.m.contains(i, j))
            .ok_or_else(|| Error::BadParameter(format!("no left agent of degree {deg} for right position {pos}")))
    }

    fn link(&mut self, i: usize, pos: usize) {
        self.m.set(i, self.right[pos], true);
    }

    fn partners(&self, pos: usize) -> Vec<usize> {
        self.m.bundle_right(self.right[pos])
    }

    /// The right position other than `pos` that left agent `i` is matched to.
    fn co_partner(&self, i: usize, pos: usize) -> Option<usize> {
        let j = self.right[pos];
        self.m
            .bundle_left(i)
            .into_iter()
            .find(|&r| r != j)
            .map(|r| self.right.iter().position(|&x| x == r).unwrap())
    }
}

fn even(st: &mut State, n: usize) -> Result<()> {
    let half = n / 2;
    for pos in 0..half {
        let i = st.favourite(pos, 0)?;
        st.link(i, pos);
    }
    for pos in half..n {
        let i = st.favourite(pos, 1)?;
        st.link(i, pos);
    }
    for pos in (half..n).rev() {
        let shared = st.partners(pos)[0];
        let other = st
            .co_partner(shared, pos)
            .ok_or_else(|| Error::BadParameter("phase three lost a partner".into()))?;
        let i = st.favourite(pos, 0)?;
        st.link(i, pos);
        st.link(i, other);
    }
    Ok(())
}

fn odd(st: &mut State, n: usize) -> Result<()> {
    let h = n.div_ceil(2);
    for pos in 0..h {
        let i = st.favourite(pos, 0)?;
        st.link(i, pos);
    }
    for pos in h..n - 1 {
        let i = st.favourite(pos, 1)?;
        st.link(i, pos);
    }
    let pivot = st.partners(h - 1)[0];
    let last = if st.left_degree(pivot) == 1 { pivot } else { st.favourite(n - 1, 1)? };
    st.link(last, n - 1);
    let spare = (0..n)
        .find(|&i| st.left_degree(i) == 1 && !st.m.contains(i, st.right[h - 1]))
        .ok_or_else(|| Error::BadParameter("no degree-one left agent for the middle right agent".into()))?;
    st.link(spare, h - 1);
    for pos in (h..n).rev() {
        let shared = st.partners(pos)[0];
        let other = st
            .co_partner(shared, pos)
            .ok_or_else(|| Error::BadParameter("phase three lost a partner".into()))?;
        let i = st.favourite(pos, 0)?;
        st.link(i, pos);
        if other != h - 1 {
            st.link(i, other);
        }
    }
    let r = (0..n)
        .find(|&p| st.m.degree(Side::Right, st.right[p]) == 1)
        .ok_or_else(|| Error::BadParameter("no degree-one right agent at the end".into()))?;
    let l = (0..n)
        .find(|&i| st.left_degree(i) == 1 && !st.m.contains(i, st.right[r]))
        .ok_or_else(|| Error::BadParameter("no degree-one left agent at the end".into()))?;
    st.link(l, r);
    Ok(())
}

/// Complete matching for `n x n` markets with every cap equal to 2 and a
/// single left-side ranking; right preferences are arbitrary.
pub fn three_phase_rr(instance: &Instance) -> Result<Matching> {
    let n = instance.n_left();
    if instance.n_right() != n {
        return Err(Error::BadParameter("sides must have equal size".into()));
    }
    if instance.uniform_cap(Side::Left) != Some(2) || instance.uniform_cap(Side::Right) != Some(2) {
        return Err(Error::BadParameter("every cap must be 2".into()));
    }
    let left = derive_side_ordinal(instance, Side::Left);
    if !left.is_identical() {
        return Err(Error::BadParameter("left agents must share one ranking".into()));
    }
    let mut st = State {
        right: left.rankings[0].clone(),
        prefs: (0..n).map(|j| rank_row(instance.row(Side::Right, j))).collect(),
        m: Matching::for_instance(instance),
    };
    if n % 2 == 0 {
        even(&mut st, n)?;
    } else {
        odd(&mut st, n)?;
    }
    Ok(st.m)
}

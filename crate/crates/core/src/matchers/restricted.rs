//! Restricted round robin: coprime core, gcd blocks, and padding for
//! unequal side sizes.
//!
//! The positional routines work in rank space: left index `q` is the agent
//! in position `q` of the common right-side ranking, and right index `p` is
//! the agent in position `p` of the common left-side ranking.

use crate::error::{Error, Result};
use crate::instance::{derive_side_ordinal, rank_row, Instance, Matching, Side};
use crate::matchers::ordering::{gcd, round_robin_ordering};

/// `M(R((j*d + t) mod n), j) = 1` for every right `j` and `t < d`.
pub fn restricted_rr_coprime(n: usize, d: usize, a: usize, x: usize) -> Result<Matching> {
    if d > n {
        return Err(Error::BadParameter(format!("d = {d} exceeds n = {n}")));
    }
    if x != d && x != n - d {
        return Err(Error::BadParameter(format!("x = {x} must be d or n - d")));
    }
    if gcd(n as u64, d as u64) != 1 {
        return Err(Error::NotCoprime { x: d as u64, n: n as u64 });
    }
    let r = round_robin_ordering(n, a, x)?;
    let mut m = Matching::empty(n, n);
    for j in 0..n {
        for t in 0..d {
            m.set(r.at(j * d + t), j, true);
        }
    }
    Ok(m)
}

/// Block composition for any `d <= n`. `block_choices[k * g + m]` is the
/// `(a, x)` used for left block `k` against right block `m`; the default is
/// `(0, d / g)` everywhere.
pub fn restricted_rr(n: usize, d: usize, block_choices: Option<&[(usize, usize)]>) -> Result<Matching> {
    if n == 0 {
        return Err(Error::BadParameter("n must be positive".into()));
    }
    if d > n {
        return Err(Error::BadParameter(format!("d = {d} exceeds n = {n}")));
    }
    let g = gcd(n as u64, d as u64) as usize;
    let (np, dp) = (n / g, d / g);
    if let Some(choices) = block_choices {
        if choices.len() != g * g {
            return Err(Error::BadParameter(format!(
                "expected {} block choices, got {}",
                g * g,
                choices.len()
            )));
        }
    }
    let mut m = Matching::empty(n, n);
    for k in 0..g {
        for b in 0..g {
            let (a, x) = block_choices.map_or((0, dp), |c| c[k * g + b]);
            let sub = restricted_rr_coprime(np, dp, a, x)?;
            for (i, j) in sub.edges() {
                m.set(np * k + i, np * b + j, true);
            }
        }
    }
    Ok(m)
}

fn uniform_caps(instance: &Instance) -> Result<(usize, usize)> {
    let dl = instance
        .uniform_cap(Side::Left)
        .ok_or_else(|| Error::BadParameter("left caps differ between agents".into()))?;
    let dr = instance
        .uniform_cap(Side::Right)
        .ok_or_else(|| Error::BadParameter("right caps differ between agents".into()))?;
    let (left, right) = (instance.n_left() * dl, instance.n_right() * dr);
    if left != right {
        return Err(Error::SizeMismatch { left, right });
    }
    Ok((dl, dr))
}

/// Maps a rank-space matching to agent indices.
pub fn from_rank_space(m: &Matching, left_by_rank: &[usize], right_by_rank: &[usize]) -> Matching {
    let mut out = Matching::empty(left_by_rank.len(), right_by_rank.len());
    for (q, p) in m.edges() {
        out.set(left_by_rank[q], right_by_rank[p], true);
    }
    out
}

/// Restricted round robin treating the given rankings as the common ones:
/// `left_common` ranks right agents, `right_common` ranks left agents.
pub fn general_rr_with(instance: &Instance, left_common: &[usize], right_common: &[usize]) -> Result<Matching> {
    let (dl, dr) = uniform_caps(instance)?;
    let (nl, nr) = (instance.n_left(), instance.n_right());
    if nl > nr {
        let flipped = general_rr_with(&instance.transposed(), right_common, left_common)?;
        return Ok(flipped.transposed());
    }
    let padded = restricted_rr(nr, dl, None)?;
    let mut rank_m = Matching::empty(nl, nr);
    for (q, p) in padded.edges() {
        if q < nl {
            rank_m.set(q, p, true);
        }
    }
    debug_assert!((0..nr).all(|p| rank_m.degree(Side::Right, p) == dr));
    Ok(from_rank_space(&rank_m, right_common, left_common))
}

/// Complete SD-DEF1 matching for identical ordinals within each side and
/// `n_left * d_left = n_right * d_right`.
pub fn general_sd_def1(instance: &Instance) -> Result<Matching> {
    uniform_caps(instance)?;
    let left = derive_side_ordinal(instance, Side::Left);
    let right = derive_side_ordinal(instance, Side::Right);
    if !left.is_identical() || !right.is_identical() {
        return Err(Error::BadParameter("ordinal preferences differ within a side".into()));
    }
    general_rr_with(instance, &left.rankings[0], &right.rankings[0])
}

/// [`general_rr_with`] using agent 0's rankings on each side as the common
/// ones, so it runs on any instance with compatible caps.
pub fn restricted_rr_lead_agent(instance: &Instance) -> Result<Matching> {
    let left = rank_row(instance.row(Side::Left, 0));
    let right = rank_row(instance.row(Side::Right, 0));
    general_rr_with(instance, &left, &right)
}

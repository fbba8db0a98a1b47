//! Named instances and the matchings exhibited alongside them.

use crate::error::{Error, Result};
use crate::instance::{Instance, Matching};

/// Values `len-1, ..., 0` given to agents in the order of `ranking`.
fn values_from_ranking(ranking: &[usize]) -> Vec<u64> {
    let n = ranking.len();
    let mut row = vec![0; n];
    for (pos, &o) in ranking.iter().enumerate() {
        row[o] = (n - 1 - pos) as u64;
    }
    row
}

/// `head` first, then every other agent by ascending index.
fn ranking_with_head(n: usize, head: &[usize]) -> Vec<usize> {
    let mut r = head.to_vec();
    r.extend((0..n).filter(|o| !head.contains(o)));
    r
}

fn descending(n: usize) -> Vec<u64> {
    (0..n as u64).rev().collect()
}

/// `n = 4d` per side, cap `d`. The left side shares the ranking `0, 1, ...`;
/// right agents come in blocks of four, with the first three blocks led by
/// `0 1 2 3`, `0 1 4 5` and `2 3 4 5`, and everything else ascending.
pub fn sd_def1_impossible(d: usize) -> Result<Instance> {
    if d < 3 {
        return Err(Error::BadParameter(format!("needs d >= 3, got {d}")));
    }
    let n = 4 * d;
    let heads: [&[usize]; 3] = [&[0, 1, 2, 3], &[0, 1, 4, 5], &[2, 3, 4, 5]];
    let right = (0..n)
        .map(|j| {
            let block = j / 4;
            let head: &[usize] = heads.get(block).copied().unwrap_or(&[]);
            values_from_ranking(&ranking_with_head(n, head))
        })
        .collect();
    Instance::new(vec![d; n], vec![d; n], vec![descending(n); n], right)
}

/// `n = 7`, cap 3, both sides valuing the other at `6, 5, ..., 0`.
pub fn dmms_gap() -> Instance {
    Instance::identical(7, 3, descending(7), descending(7)).expect("fixed instance is valid")
}

/// Left values `d+1` on the first `n/d - 1` right agents, 1 on the next `d`,
/// 0 after; the right side values everybody at 1.
pub fn sd_ef_vs_mms(d: usize, n: usize) -> Result<Instance> {
    if d == 0 || n % d != 0 || n < d * d {
        return Err(Error::BadParameter(format!("needs d | n and n >= d^2, got d={d}, n={n}")));
    }
    let high = n / d - 1;
    let row = (0..n)
        .map(|j| match j {
            _ if j < high => d as u64 + 1,
            _ if j < high + d => 1,
            _ => 0,
        })
        .collect();
    Instance::identical(n, d, row, vec![1; n])
}

/// `n = 11`, cap 3, both sides valuing the other at `10, 9, ..., 0`.
pub fn one_sided_sd_vs_mms() -> Instance {
    Instance::identical(11, 3, descending(11), descending(11)).expect("fixed instance is valid")
}

/// `n` agents per side, cap 2, strictly decreasing identical values.
pub fn d2_decreasing(n: usize) -> Result<Instance> {
    Instance::identical(n, 2, descending(n), descending(n))
}

/// Even `n`, cap 2: the left side values the first `n/2 - 2` right agents at
/// `n` and the rest at 1; the right side values everybody at 1.
pub fn unconstrained_gap(n: usize) -> Result<Instance> {
    if n < 6 || n % 2 != 0 {
        return Err(Error::BadParameter(format!("needs even n >= 6, got {n}")));
    }
    let row = (0..n).map(|j| if j + 2 < n / 2 { n as u64 } else { 1 }).collect();
    Instance::identical(n, 2, row, vec![1; n])
}

/// A DEF1 matching on [`dmms_gap`], by left bundles.
pub fn def1_without_dmms_matching() -> Matching {
    let b = |v: &[usize]| v.to_vec();
    let bundles = vec![
        b(&[0, 4, 5]),
        b(&[1, 2, 6]),
        b(&[0, 3, 6]),
        b(&[1, 3, 5]),
        b(&[2, 3, 4]),
        b(&[0, 4, 5]),
        b(&[1, 2, 6]),
    ];
    Matching::from_left_bundles(7, &bundles).expect("fixed bundles are in range")
}

/// `n = 10`, cap 3: left values `2, 2, 2, 1, ...`, right values all 1.
pub fn dmms_without_def1() -> Instance {
    let mut row = vec![1; 10];
    row[..3].fill(2);
    Instance::identical(10, 3, row, vec![1; 10]).expect("fixed instance is valid")
}

/// Left agents 0, 1 and 2 all hold `{0, 1, 2}`; left agent `3 + k` holds
/// `3 + k`, `3 + (k+1) % 7` and `3 + (k+2) % 7`.
pub fn dmms_without_def1_matching() -> Matching {
    let mut bundles = vec![vec![0, 1, 2]; 3];
    for k in 0..7 {
        bundles.push((0..3).map(|s| 3 + (k + s) % 7).collect());
    }
    Matching::from_left_bundles(10, &bundles).expect("fixed bundles are in range")
}

/// `n = 7`, cap 3: left values `3, 3, 1, 1, 1, 0, 0`, right values
/// `9, 3, 3, 3, 3, 0, 0`.
pub fn no_joint_minimizer() -> Instance {
    Instance::identical(7, 3, vec![3, 3, 1, 1, 1, 0, 0], vec![9, 3, 3, 3, 3, 0, 0]).expect("fixed instance is valid")
}

/// The DMMS and DEF1 matching on [`no_joint_minimizer`], by right bundles.
pub fn no_joint_minimizer_matching() -> Matching {
    let bundles = vec![
        vec![0, 5, 6],
        vec![1, 2, 3],
        vec![4, 1, 2],
        vec![4, 1, 3],
        vec![4, 2, 3],
        vec![0, 5, 6],
        vec![0, 5, 6],
    ];
    Matching::from_right_bundles(7, &bundles).expect("fixed bundles are in range")
}

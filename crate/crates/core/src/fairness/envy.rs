//! Envy up to `c` matches, in the cardinal and the stochastic-dominance form.

use serde::{Deserialize, Serialize};

use crate::instance::{derive_side_ordinal, Instance, Matching, PreferenceProfile, Side};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvyDetail {
    /// `own` is the envier's utility; `reduced` is its value for the envied
    /// bundle with the `c` best matches removed. Envy means `own < reduced`.
    Cardinal { own: u64, reduced: u64 },
    /// Prefix covers positions `0..=t` of the envier's ranking.
    SdPrefix {
        t: usize,
        envier_count: usize,
        envied_count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvyWitness {
    pub side: Side,
    pub envier: usize,
    pub envied: usize,
    pub c: usize,
    #[serde(flatten)]
    pub detail: EnvyDetail,
}

impl EnvyWitness {
    /// Recomputes the violation from scratch and checks the stored numbers.
    pub fn verify(&self, instance: &Instance, m: &Matching) -> bool {
        if self.envier == self.envied
            || self.envier >= instance.size(self.side)
            || self.envied >= instance.size(self.side)
        {
            return false;
        }
        match self.detail {
            EnvyDetail::Cardinal { own, reduced } => {
                let (o, r) = cardinal_pair(instance, m, self.side, self.envier, self.envied, self.c);
                o == own && r == reduced && own < reduced
            }
            EnvyDetail::SdPrefix {
                t,
                envier_count,
                envied_count,
            } => {
                let ranking = derive_side_ordinal(instance, self.side).rankings.swap_remove(self.envier);
                if t >= ranking.len() {
                    return false;
                }
                let prefix = &ranking[..=t];
                let a = prefix.iter().filter(|&&o| m.has(self.side, self.envier, o)).count();
                let b = prefix.iter().filter(|&&o| m.has(self.side, self.envied, o)).count();
                a == envier_count && b == envied_count && a + self.c < b
            }
        }
    }

    pub fn gap(&self) -> u64 {
        match self.detail {
            EnvyDetail::Cardinal { own, reduced } => reduced - own,
            EnvyDetail::SdPrefix {
                envier_count,
                envied_count,
                ..
            } => (envied_count - envier_count - self.c) as u64,
        }
    }
}

/// Sum of the `c` largest values in `vals`.
pub fn top_sum(vals: &mut [u64], c: usize) -> u64 {
    if c >= vals.len() {
        return vals.iter().sum();
    }
    vals.sort_unstable_by(|a, b| b.cmp(a));
    vals[..c].iter().sum()
}

fn cardinal_pair(
    instance: &Instance,
    m: &Matching,
    side: Side,
    i: usize,
    k: usize,
    c: usize,
) -> (u64, u64) {
    let row = instance.row(side, i);
    let own = m.bundle(side, i).iter().map(|&o| row[o]).sum();
    let mut other: Vec<u64> = m.bundle(side, k).iter().map(|&o| row[o]).collect();
    let total: u64 = other.iter().sum();
    let removed = top_sum(&mut other, c);
    (own, total - removed)
}

/// Every ordered pair on `side` that violates EF-c.
pub fn ef_c_check(instance: &Instance, m: &Matching, side: Side, c: usize) -> Vec<EnvyWitness> {
    let n = instance.size(side);
    let bundles: Vec<Vec<usize>> = (0..n).map(|a| m.bundle(side, a)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let row = instance.row(side, i);
        let own: u64 = bundles[i].iter().map(|&o| row[o]).sum();
        let mut scratch = Vec::new();
        for (k, bundle) in bundles.iter().enumerate() {
            if k == i || bundle.len() <= c {
                continue;
            }
            scratch.clear();
            scratch.extend(bundle.iter().map(|&o| row[o]));
            let total: u64 = scratch.iter().sum();
            let reduced = total - top_sum(&mut scratch, c);
            if own < reduced {
                out.push(EnvyWitness {
                    side,
                    envier: i,
                    envied: k,
                    c,
                    detail: EnvyDetail::Cardinal { own, reduced },
                });
            }
        }
    }
    out
}

/// Every ordered pair on `side` that violates SD-EF-c under `profile`, each
/// reported at its shortest violating prefix.
pub fn sd_ef_c_check_with(
    profile: &PreferenceProfile,
    m: &Matching,
    c: usize,
) -> Vec<EnvyWitness> {
    let side = profile.side;
    let n = profile.rankings.len();
    let mut out = Vec::new();
    for i in 0..n {
        let ranking = profile.ranking(i);
        for k in 0..n {
            if k == i {
                continue;
            }
            let (mut a, mut b) = (0usize, 0usize);
            for (t, &o) in ranking.iter().enumerate() {
                a += m.has(side, i, o) as usize;
                b += m.has(side, k, o) as usize;
                if a + c < b {
                    out.push(EnvyWitness {
                        side,
                        envier: i,
                        envied: k,
                        c,
                        detail: EnvyDetail::SdPrefix {
                            t,
                            envier_count: a,
                            envied_count: b,
                        },
                    });
                    break;
                }
            }
        }
    }
    out
}

pub fn sd_ef_c_check(instance: &Instance, m: &Matching, side: Side, c: usize) -> Vec<EnvyWitness> {
    sd_ef_c_check_with(&derive_side_ordinal(instance, side), m, c)
}

pub fn is_ef_c(instance: &Instance, m: &Matching, side: Side, c: usize) -> bool {
    ef_c_check(instance, m, side, c).is_empty()
}

pub fn is_sd_ef_c(instance: &Instance, m: &Matching, side: Side, c: usize) -> bool {
    sd_ef_c_check(instance, m, side, c).is_empty()
}

pub fn is_def_c(instance: &Instance, m: &Matching, c: usize) -> bool {
    Side::BOTH.iter().all(|&s| is_ef_c(instance, m, s, c))
}

pub fn is_sd_def_c(instance: &Instance, m: &Matching, c: usize) -> bool {
    Side::BOTH.iter().all(|&s| is_sd_ef_c(instance, m, s, c))
}

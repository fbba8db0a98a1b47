use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fairness::envy::{ef_c_check, sd_ef_c_check, EnvyDetail, EnvyWitness};
use crate::fairness::mms::{mms_values, ShareOptions};
use crate::instance::{matching_status, Instance, Matching, Side};
use crate::ratio::{serde_ratio, Ratio};

/// Minimum over all agents of utility / MMS; agents whose MMS is zero count
/// as 1.
pub fn dmms_alpha(instance: &Instance, m: &Matching, mms_left: &[u64], mms_right: &[u64]) -> Ratio {
    let mut alpha: Option<Ratio> = None;
    for (side, shares) in [(Side::Left, mms_left), (Side::Right, mms_right)] {
        for (a, &share) in shares.iter().enumerate() {
            let r = if share == 0 {
                Ratio::from_integer(1)
            } else {
                Ratio::new(instance.utility(side, a, m), share)
            };
            alpha = Some(alpha.map_or(r, |b| b.min(r)));
        }
    }
    alpha.unwrap_or(Ratio::from_integer(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    pub compute_mms: bool,
    pub share: ShareOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub valid: bool,
    pub complete: bool,
    pub ef1_left: bool,
    pub ef1_right: bool,
    pub sd_ef1_left: bool,
    pub sd_ef1_right: bool,
    pub witnesses: Vec<EnvyWitness>,
    pub mms_left: Option<Vec<u64>>,
    pub mms_right: Option<Vec<u64>>,
    #[serde(with = "serde_ratio::option", default)]
    pub alpha_dmms: Option<Ratio>,
}

impl FairnessReport {
    pub fn def1(&self) -> bool {
        self.ef1_left && self.ef1_right
    }

    pub fn sd_def1(&self) -> bool {
        self.sd_ef1_left && self.sd_ef1_right
    }

    /// Booleans agree with the witness list.
    pub fn is_consistent(&self) -> bool {
        let any = |side: Side, cardinal: bool| {
            self.witnesses.iter().any(|w| {
                w.side == side && matches!(w.detail, EnvyDetail::Cardinal { .. }) == cardinal
            })
        };
        self.ef1_left != any(Side::Left, true)
            && self.ef1_right != any(Side::Right, true)
            && self.sd_ef1_left != any(Side::Left, false)
            && self.sd_ef1_right != any(Side::Right, false)
    }
}

/// Envy checks with `c = 1` on both sides, and optionally the MMS shares and
/// the resulting DMMS ratio.
pub fn fairness_report(instance: &Instance, m: &Matching, opts: &ReportOptions) -> Result<FairnessReport> {
    let status = matching_status(instance, m)?;
    let mut witnesses = Vec::new();
    let mut flags = [true; 4];
    for (k, side) in Side::BOTH.into_iter().enumerate() {
        let card = ef_c_check(instance, m, side, 1);
        let sd = sd_ef_c_check(instance, m, side, 1);
        flags[k] = card.is_empty();
        flags[k + 2] = sd.is_empty();
        witnesses.extend(card);
        witnesses.extend(sd);
    }
    let (mms_left, mms_right, alpha_dmms) = if opts.compute_mms {
        let l = mms_values(instance, Side::Left, &opts.share)?;
        let r = mms_values(instance, Side::Right, &opts.share)?;
        let alpha = dmms_alpha(instance, m, &l, &r);
        (Some(l), Some(r), Some(alpha))
    } else {
        (None, None, None)
    };
    Ok(FairnessReport {
        valid: status.valid,
        complete: status.complete,
        ef1_left: flags[0],
        ef1_right: flags[1],
        sd_ef1_left: flags[2],
        sd_ef1_right: flags[3],
        witnesses,
        mms_left,
        mms_right,
        alpha_dmms,
    })
}

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, LowerBound, Result};
use crate::fairness::envy::{ef_c_check, is_def_c, is_sd_def_c};
use crate::fairness::mms::{mms_values, unconstrained_share, ShareOptions};
use crate::fairness::report::dmms_alpha;
use crate::generate::{generate_instance, InstanceGenConfig};
use crate::instance::{matching_status, Instance, Matching, Side};
use crate::io::matching_to_json;
use crate::matchers::d2::d2_dmms_def1_for;
use crate::paperbench::instances;
use crate::ratio::{ceil_scaled, Ratio, RatioJson};
use crate::search::{
    enumerate_complete_matchings, find_matching_with, for_each_solution, max_dmms_alpha, SearchOptions, SearchOutcome,
    SearchSpec, SearchStatus, DEFAULT_NODE_BUDGET, DEFAULT_TIME_BUDGET_SECS,
};

pub const THM9_TRIALS: usize = 100;
pub const THM9_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClaimId {
    Thm1 { d: usize },
    Thm4,
    Thm6 { d: usize, c: usize, n: usize },
    Thm7,
    Thm8 { n: usize },
    AppcRatio { n: usize },
    AppdP1,
    AppdP2,
    AppdP3,
    Thm9Property,
}

impl ClaimId {
    /// Builds a claim from its name, filling unset parameters with defaults
    /// (`d = 3`, `c = 1`, `n = d^2` for THM6, `n = 5` for THM8, `n = 8` for
    /// APPC_RATIO).
    pub fn from_parts(name: &str, d: Option<usize>, n: Option<usize>, c: Option<usize>) -> Result<ClaimId> {
        let name = name.trim().to_ascii_uppercase().replace('-', "_");
        let id = match name.as_str() {
            "THM1" => ClaimId::Thm1 { d: d.unwrap_or(3) },
            "THM4" => ClaimId::Thm4,
            "THM6" => {
                let d = d.unwrap_or(3);
                ClaimId::Thm6 {
                    d,
                    c: c.unwrap_or(1),
                    n: n.unwrap_or(d * d),
                }
            }
            "THM7" => ClaimId::Thm7,
            "THM8" => ClaimId::Thm8 { n: n.unwrap_or(5) },
            "APPC_RATIO" => ClaimId::AppcRatio { n: n.unwrap_or(8) },
            "APPD_P1" => ClaimId::AppdP1,
            "APPD_P2" => ClaimId::AppdP2,
            "APPD_P3" => ClaimId::AppdP3,
            "THM9_PROPERTY" => ClaimId::Thm9Property,
            _ => return Err(Error::BadParameter(format!("unknown claim {name}"))),
        };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadParameter(msg));
        match *self {
            ClaimId::Thm1 { d } if d < 3 => bad(format!("THM1 needs d >= 3, got {d}")),
            ClaimId::Thm6 { d, c, n } if d == 0 || c >= d || n % d != 0 || n < d * d => {
                bad(format!("THM6 needs c < d, d | n and n >= d^2, got d={d}, c={c}, n={n}"))
            }
            ClaimId::Thm8 { n } if n < 2 => bad(format!("THM8 needs n >= 2, got {n}")),
            ClaimId::AppcRatio { n } if n < 6 || n % 2 != 0 => bad(format!("APPC_RATIO needs even n >= 6, got {n}")),
            _ => Ok(()),
        }
    }

    /// The default suite: every claim at the parameters used for acceptance.
    pub fn suite() -> Vec<ClaimId> {
        let mut out = vec![ClaimId::Thm1 { d: 3 }, ClaimId::Thm4, ClaimId::Thm6 { d: 3, c: 1, n: 9 }, ClaimId::Thm7];
        out.extend((2..=9).map(|n| ClaimId::Thm8 { n }));
        out.extend([8, 10, 12].map(|n| ClaimId::AppcRatio { n }));
        out.extend([ClaimId::AppdP1, ClaimId::AppdP2, ClaimId::AppdP3, ClaimId::Thm9Property]);
        out
    }

    /// Node and wall-clock budgets used when the caller sets none.
    pub fn default_budgets(&self) -> (u64, f64) {
        match self {
            ClaimId::Thm1 { .. } => (1_000_000_000, 7200.0),
            ClaimId::Thm6 { .. } => (1_000_000_000, 1800.0),
            ClaimId::Thm7 => (10_000_000_000, 28_800.0),
            _ => (DEFAULT_NODE_BUDGET, DEFAULT_TIME_BUDGET_SECS),
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClaimId::Thm1 { d } => write!(f, "THM1({d})"),
            ClaimId::Thm4 => write!(f, "THM4"),
            ClaimId::Thm6 { d, c, n } => write!(f, "THM6({d},{c},{n})"),
            ClaimId::Thm7 => write!(f, "THM7"),
            ClaimId::Thm8 { n } => write!(f, "THM8({n})"),
            ClaimId::AppcRatio { n } => write!(f, "APPC_RATIO({n})"),
            ClaimId::AppdP1 => write!(f, "APPD_P1"),
            ClaimId::AppdP2 => write!(f, "APPD_P2"),
            ClaimId::AppdP3 => write!(f, "APPD_P3"),
            ClaimId::Thm9Property => write!(f, "THM9_PROPERTY"),
        }
    }
}

/// Accepts `NAME` or `NAME(args)`: THM1(d), THM6(d,c[,n]), THM8(n),
/// APPC_RATIO(n).
impl FromStr for ClaimId {
    type Err = Error;

    fn from_str(s: &str) -> Result<ClaimId> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(p) if s.ends_with(')') => (&s[..p], &s[p + 1..s.len() - 1]),
            Some(_) => return Err(Error::Syntax(format!("unbalanced parentheses in {s}"))),
            None => (s, ""),
        };
        let nums = args
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| a.trim().parse::<usize>().map_err(|e| Error::Syntax(format!("{a}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let arg = |k: usize| nums.get(k).copied();
        let upper = name.trim().to_ascii_uppercase();
        match upper.as_str() {
            "THM1" => ClaimId::from_parts(&upper, arg(0), None, None),
            "THM6" => ClaimId::from_parts(&upper, arg(0), arg(2), arg(1)),
            "THM8" | "APPC_RATIO" => ClaimId::from_parts(&upper, None, arg(0), None),
            _ if !nums.is_empty() => Err(Error::BadParameter(format!("{upper} takes no parameters"))),
            _ => ClaimId::from_parts(&upper, None, None, None),
        }
    }
}

impl Serialize for ClaimId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClaimId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Confirmed,
    Refuted,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub claim: ClaimId,
    pub verdict: Verdict,
    pub evidence: Value,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub node_budget: Option<u64>,
    pub time_budget: Option<f64>,
    pub workers: usize,
}

/// A named instance with the matchings exhibited for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub instance: Instance,
    pub matchings: Vec<Matching>,
}

pub fn build_counterexample(id: ClaimId) -> Result<Counterexample> {
    id.validate()?;
    let plain = |instance| Counterexample {
        instance,
        matchings: Vec::new(),
    };
    Ok(match id {
        ClaimId::Thm1 { d } => plain(instances::sd_def1_impossible(d)?),
        ClaimId::Thm4 => plain(instances::dmms_gap()),
        ClaimId::Thm6 { d, n, .. } => plain(instances::sd_ef_vs_mms(d, n)?),
        ClaimId::Thm7 => plain(instances::one_sided_sd_vs_mms()),
        ClaimId::Thm8 { n } => {
            let instance = instances::d2_decreasing(n)?;
            let m = d2_dmms_def1_for(&instance)?;
            Counterexample {
                instance,
                matchings: vec![m],
            }
        }
        ClaimId::AppcRatio { n } => plain(instances::unconstrained_gap(n)?),
        ClaimId::AppdP1 => Counterexample {
            instance: instances::dmms_gap(),
            matchings: vec![instances::def1_without_dmms_matching()],
        },
        ClaimId::AppdP2 => Counterexample {
            instance: instances::dmms_without_def1(),
            matchings: vec![instances::dmms_without_def1_matching()],
        },
        ClaimId::AppdP3 => Counterexample {
            instance: instances::no_joint_minimizer(),
            matchings: vec![instances::no_joint_minimizer_matching()],
        },
        ClaimId::Thm9Property => {
            return Err(Error::BadParameter("THM9_PROPERTY ranges over random instances".into()))
        }
    })
}

struct Ctx {
    nodes: u64,
    secs: f64,
    opts: SearchOptions,
    share: ShareOptions,
}

impl Ctx {
    fn spec(&self) -> SearchSpec {
        SearchSpec::complete().with_budget(self.nodes, self.secs)
    }

    fn search(&self, instance: &Instance, spec: &SearchSpec) -> Result<SearchOutcome> {
        find_matching_with(instance, spec, &self.opts)
    }
}

fn shares(instance: &Instance, share: &ShareOptions) -> Result<(Vec<u64>, Vec<u64>)> {
    Ok((mms_values(instance, Side::Left, share)?, mms_values(instance, Side::Right, share)?))
}

fn meets_shares(instance: &Instance, m: &Matching, left: &[u64], right: &[u64]) -> bool {
    instance.utilities(Side::Left, m).iter().zip(left).all(|(u, s)| u >= s)
        && instance.utilities(Side::Right, m).iter().zip(right).all(|(u, s)| u >= s)
}

fn status_json(instance: &Instance, m: &Matching) -> Result<Value> {
    let s = matching_status(instance, m)?;
    Ok(json!({"valid": s.valid, "complete": s.complete}))
}

/// Verdict for "no matching satisfies `spec`".
fn infeasibility(outcome: &SearchOutcome) -> Verdict {
    match outcome.status {
        SearchStatus::ExhaustedInfeasible => Verdict::Confirmed,
        SearchStatus::Found => Verdict::Refuted,
        SearchStatus::BudgetExceeded => Verdict::BudgetExceeded,
    }
}

fn budget_verdict(err: Error) -> Result<(Verdict, Value)> {
    match err {
        Error::BudgetExceeded {
            nodes_explored,
            lower_bound,
        } => Ok((
            Verdict::BudgetExceeded,
            json!({
                "nodes_explored": nodes_explored,
                "lower_bound": lower_bound.map(|b| match b {
                    LowerBound::Value(v) => json!(v),
                    LowerBound::Alpha(a) => json!(RatioJson::from(a)),
                }),
            }),
        )),
        other => Err(other),
    }
}

pub fn verify_claim(id: ClaimId, opts: &VerifyOptions) -> Result<VerificationResult> {
    id.validate()?;
    if opts.node_budget == Some(0) || opts.time_budget.is_some_and(|t| t.is_nan() || t <= 0.0) {
        return Err(Error::BadParameter("budgets must be positive".into()));
    }
    let (dn, dt) = id.default_budgets();
    let ctx = Ctx {
        nodes: opts.node_budget.unwrap_or(dn),
        secs: opts.time_budget.unwrap_or(dt),
        opts: SearchOptions {
            propagate: true,
            workers: opts.workers.max(1),
        },
        share: ShareOptions::default(),
    };
    let start = Instant::now();
    let run = match id {
        ClaimId::Thm1 { .. } => verify_thm1(id, &ctx),
        ClaimId::Thm4 => verify_thm4(&ctx),
        ClaimId::Thm6 { d, c, .. } => verify_thm6(id, d, c, &ctx),
        ClaimId::Thm7 => verify_thm7(&ctx),
        ClaimId::Thm8 { .. } => verify_thm8(id, &ctx),
        ClaimId::AppcRatio { n } => verify_appc(id, n, &ctx),
        ClaimId::AppdP1 => verify_appd_p1(&ctx),
        ClaimId::AppdP2 => verify_appd_p2(&ctx),
        ClaimId::AppdP3 => verify_appd_p3(&ctx),
        ClaimId::Thm9Property => verify_thm9(&ctx),
    };
    let (verdict, evidence) = match run {
        Ok(v) => v,
        Err(e) => budget_verdict(e)?,
    };
    Ok(VerificationResult {
        claim: id,
        verdict,
        evidence,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn verify_thm1(id: ClaimId, ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = build_counterexample(id)?.instance;
    let spec = ctx.spec().with_sd_ef(Side::Left, 1).with_sd_ef(Side::Right, 1);
    let out = ctx.search(&inst, &spec)?;
    Ok((infeasibility(&out), json!({"search": out.to_json(), "tail_rankings": "ascending index"})))
}

fn verify_thm4(ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = instances::dmms_gap();
    let (ml, mr) = shares(&inst, &ctx.share)?;
    let (alpha, witness) = max_dmms_alpha(&inst, &ctx.spec(), &ml, &mr, &ctx.opts)?;
    let replayed = dmms_alpha(&inst, &witness, &ml, &mr);
    let verdict = if replayed != alpha {
        return Err(Error::BadParameter("witness does not attain the reported ratio".into()));
    } else if alpha < Ratio::new(89, 100) {
        Verdict::Confirmed
    } else {
        Verdict::Refuted
    };
    Ok((
        verdict,
        json!({
            "mms_left": ml,
            "mms_right": mr,
            "alpha": RatioJson::from(alpha),
            "witness": matching_to_json(&witness),
        }),
    ))
}

fn verify_thm6(id: ClaimId, d: usize, c: usize, ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = build_counterexample(id)?.instance;
    let ml = mms_values(&inst, Side::Left, &ctx.share)?;
    let alpha = Ratio::new(c as u64 + 2, d as u64);
    let mut spec = ctx.spec().with_sd_ef(Side::Left, c);
    let floors: Vec<u64> = ml.iter().map(|&s| ceil_scaled(alpha, s)).collect();
    for (a, &f) in floors.iter().enumerate() {
        spec = spec.with_floor(Side::Left, a, f);
    }
    let out = ctx.search(&inst, &spec)?;
    Ok((
        infeasibility(&out),
        json!({
            "mms_left": ml,
            "alpha": RatioJson::from(alpha),
            "left_floors": floors,
            "right_values": "all ones",
            "search": out.to_json(),
        }),
    ))
}

fn verify_thm7(ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = instances::one_sided_sd_vs_mms();
    let (ml, mr) = shares(&inst, &ctx.share)?;
    let mut evidence = json!({"mms_left": ml, "mms_right": mr});
    let mut verdict = Verdict::Confirmed;
    for (envy_side, floor_side, floors, key) in [
        (Side::Right, Side::Left, &ml, "sd_ef1_right_mms_left"),
        (Side::Left, Side::Right, &mr, "sd_ef1_left_mms_right"),
    ] {
        let mut spec = ctx.spec().with_sd_ef(envy_side, 1);
        for (a, &f) in floors.iter().enumerate() {
            spec = spec.with_floor(floor_side, a, f);
        }
        let out = ctx.search(&inst, &spec)?;
        evidence[key] = out.to_json();
        verdict = match (verdict, infeasibility(&out)) {
            (Verdict::Refuted, _) | (_, Verdict::Refuted) => Verdict::Refuted,
            (Verdict::BudgetExceeded, _) | (_, Verdict::BudgetExceeded) => Verdict::BudgetExceeded,
            _ => Verdict::Confirmed,
        };
        if verdict == Verdict::Refuted {
            break;
        }
    }
    Ok((verdict, evidence))
}

fn verify_thm8(id: ClaimId, ctx: &Ctx) -> Result<(Verdict, Value)> {
    let cx = build_counterexample(id)?;
    let (inst, m) = (&cx.instance, &cx.matchings[0]);
    let status = matching_status(inst, m)?;
    let (ml, mr) = shares(inst, &ctx.share)?;
    let sd_def1 = is_sd_def_c(inst, m, 1);
    let dmms = meets_shares(inst, m, &ml, &mr);
    let ok = status.valid && status.complete && sd_def1 && dmms;
    Ok((
        if ok { Verdict::Confirmed } else { Verdict::Refuted },
        json!({
            "matching": matching_to_json(m),
            "status": status_json(inst, m)?,
            "sd_def1": sd_def1,
            "mms_left": ml,
            "mms_right": mr,
            "utilities_left": inst.utilities(Side::Left, m),
            "utilities_right": inst.utilities(Side::Right, m),
        }),
    ))
}

fn verify_appc(id: ClaimId, n: usize, ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = build_counterexample(id)?.instance;
    let ml = mms_values(&inst, Side::Left, &ctx.share)?;
    let share = unconstrained_share(&inst, Side::Left, 0, &ctx.share)?;
    let mut spec = ctx.spec();
    for (a, &f) in ml.iter().enumerate() {
        spec = spec.with_floor(Side::Left, a, f);
    }
    let out = ctx.search(&inst, &spec)?;
    let Some(m) = out.witness.clone() else {
        // An MMS matching always exists, so a missing witness is either a
        // spent budget or an engine failure.
        let verdict = match out.status {
            SearchStatus::BudgetExceeded => Verdict::BudgetExceeded,
            _ => Verdict::Refuted,
        };
        return Ok((verdict, json!({"search": out.to_json()})));
    };
    let utilities = inst.utilities(Side::Left, &m);
    let lowest = utilities.iter().copied().min().unwrap_or(0);
    let ok = ml[0] == 2 && lowest == 2 && share * 4 >= n as u64;
    Ok((
        if ok { Verdict::Confirmed } else { Verdict::Refuted },
        json!({
            "mms_left": ml[0],
            "unconstrained_share": share,
            "ratio": RatioJson::from(Ratio::new(ml[0], share.max(1))),
            "witness": matching_to_json(&m),
            "utilities_left": utilities,
            "lowest_left_utility": lowest,
        }),
    ))
}

fn verify_appd_p1(ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = instances::dmms_gap();
    let m = instances::def1_without_dmms_matching();
    let status = matching_status(&inst, &m)?;
    let def1 = is_def_c(&inst, &m, 1);
    let (ml, mr) = shares(&inst, &ctx.share)?;
    let (alpha, best) = max_dmms_alpha(&inst, &ctx.spec(), &ml, &mr, &ctx.opts)?;
    let ok = status.valid && status.complete && def1 && alpha < Ratio::from_integer(1);
    Ok((
        if ok { Verdict::Confirmed } else { Verdict::Refuted },
        json!({
            "matching": matching_to_json(&m),
            "status": status_json(&inst, &m)?,
            "def1": def1,
            "max_alpha": RatioJson::from(alpha),
            "max_alpha_witness": matching_to_json(&best),
        }),
    ))
}

fn verify_appd_p2(ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = instances::dmms_without_def1();
    let m = instances::dmms_without_def1_matching();
    let status = matching_status(&inst, &m)?;
    let (ml, mr) = shares(&inst, &ctx.share)?;
    let dmms = meets_shares(&inst, &m, &ml, &mr);
    let envy: Vec<_> = [Side::Left, Side::Right]
        .into_iter()
        .flat_map(|s| ef_c_check(&inst, &m, s, 1))
        .collect();
    let replayed = envy.iter().all(|w| w.verify(&inst, &m));
    let ok = status.valid && status.complete && dmms && !envy.is_empty() && replayed;
    Ok((
        if ok { Verdict::Confirmed } else { Verdict::Refuted },
        json!({
            "matching": matching_to_json(&m),
            "status": status_json(&inst, &m)?,
            "mms_left": ml,
            "mms_right": mr,
            "dmms": dmms,
            "envy_witnesses": envy,
        }),
    ))
}

/// Agents on `side` whose utility equals their share.
fn at_share(inst: &Instance, m: &Matching, side: Side, shares: &[u64]) -> usize {
    inst.utilities(side, m).iter().zip(shares).filter(|(u, s)| u == s).count()
}

fn dmms_spec(base: SearchSpec, ml: &[u64], mr: &[u64]) -> SearchSpec {
    let mut spec = base;
    for (a, &f) in ml.iter().enumerate() {
        spec = spec.with_floor(Side::Left, a, f);
    }
    for (a, &f) in mr.iter().enumerate() {
        spec = spec.with_floor(Side::Right, a, f);
    }
    spec
}

/// Fewest agents of `side` left exactly at their share by a complete matching
/// that meets every share on that side, found by raising the floor of all
/// agents outside ever larger subsets.
fn min_at_share(inst: &Instance, side: Side, shares: &[u64], ctx: &Ctx) -> Result<usize> {
    let n = shares.len();
    if n > 20 {
        return Err(Error::BadParameter("subset scan supports at most 20 agents".into()));
    }
    for k in 0..=n {
        for subset in (0u32..1 << n).filter(|s| s.count_ones() as usize == k) {
            let mut spec = ctx.spec();
            for (a, &f) in shares.iter().enumerate() {
                spec = spec.with_floor(side, a, if subset >> a & 1 == 1 { f } else { f + 1 });
            }
            let out = ctx.search(inst, &spec)?;
            match out.status {
                SearchStatus::Found => return Ok(k),
                SearchStatus::ExhaustedInfeasible => {}
                SearchStatus::BudgetExceeded => {
                    return Err(Error::BudgetExceeded {
                        nodes_explored: out.nodes_explored,
                        lower_bound: None,
                    })
                }
            }
        }
    }
    Err(Error::BadParameter(format!("no complete matching meets every {side} share")))
}

fn verify_appd_p3(ctx: &Ctx) -> Result<(Verdict, Value)> {
    let inst = instances::no_joint_minimizer();
    let m = instances::no_joint_minimizer_matching();
    let status = matching_status(&inst, &m)?;
    let (ml, mr) = shares(&inst, &ctx.share)?;
    let exhibited_ok = status.valid && status.complete && meets_shares(&inst, &m, &ml, &mr) && is_def_c(&inst, &m, 1);
    let min_left = min_at_share(&inst, Side::Left, &ml, ctx)?;
    let min_right = min_at_share(&inst, Side::Right, &mr, ctx)?;

    // Symmetric agents are interchangeable and the counts are invariant under
    // swapping them, so one matching per symmetry class suffices.
    let spec = dmms_spec(ctx.spec(), &ml, &mr);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let nodes = for_each_solution(&inst, &spec, &ctx.opts, |x| {
        pairs.push((at_share(&inst, x, Side::Left, &ml), at_share(&inst, x, Side::Right, &mr)));
        ControlFlow::Continue(())
    })?;
    let joint = pairs.contains(&(min_left, min_right));
    let ok = exhibited_ok && !pairs.is_empty() && !joint;
    Ok((
        if ok { Verdict::Confirmed } else { Verdict::Refuted },
        json!({
            "matching": matching_to_json(&m),
            "status": status_json(&inst, &m)?,
            "exhibited_dmms_and_def1": exhibited_ok,
            "mms_left": ml,
            "mms_right": mr,
            "min_at_share_left": min_left,
            "min_at_share_right": min_right,
            "dmms_count_pairs": pairs,
            "joint_minimizer_exists": joint,
            "nodes_explored": nodes,
        }),
    ))
}

fn verify_thm9(ctx: &Ctx) -> Result<(Verdict, Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(THM9_SEED);
    let (mut with_dmms, mut with_joint, mut checked) = (0usize, 0usize, 0usize);
    let mut violation: Option<Value> = None;
    for trial in 0..THM9_TRIALS {
        let n = rng.gen_range(2..=5);
        let seed = rng.gen();
        let inst = generate_instance(&InstanceGenConfig::square(n, 2, 100, 100, seed))?;
        let (ml, mr) = shares(&inst, &ctx.share)?;
        let mut complete: Vec<(Matching, Option<usize>, Option<usize>)> = Vec::new();
        enumerate_complete_matchings(&inst, ctx.nodes, |m| {
            let left_ok = inst.utilities(Side::Left, m).iter().zip(&ml).all(|(u, s)| u >= s);
            let right_ok = inst.utilities(Side::Right, m).iter().zip(&mr).all(|(u, s)| u >= s);
            complete.push((
                m.clone(),
                left_ok.then(|| at_share(&inst, m, Side::Left, &ml)),
                right_ok.then(|| at_share(&inst, m, Side::Right, &mr)),
            ));
            ControlFlow::Continue(())
        })?;
        let min_l = complete.iter().filter_map(|x| x.1).min();
        let min_r = complete.iter().filter_map(|x| x.2).min();
        if complete.iter().any(|x| x.1.is_some() && x.2.is_some()) {
            with_dmms += 1;
        }
        let joint: Vec<&Matching> = complete
            .iter()
            .filter(|x| x.1.is_some() && x.1 == min_l && x.2.is_some() && x.2 == min_r)
            .map(|x| &x.0)
            .collect();
        if !joint.is_empty() {
            with_joint += 1;
        }
        for m in joint {
            checked += 1;
            if !is_def_c(&inst, m, 1) && violation.is_none() {
                let envy: Vec<_> = [Side::Left, Side::Right]
                    .into_iter()
                    .flat_map(|s| ef_c_check(&inst, m, s, 1))
                    .collect();
                violation = Some(json!({
                    "trial": trial,
                    "instance": crate::io::instance_to_json(&inst),
                    "matching": matching_to_json(m),
                    "envy_witnesses": envy,
                }));
            }
        }
    }
    let verdict = if violation.is_some() { Verdict::Refuted } else { Verdict::Confirmed };
    Ok((
        verdict,
        json!({
            "trials": THM9_TRIALS,
            "seed": THM9_SEED,
            "instances_with_dmms": with_dmms,
            "instances_with_joint_minimizer": with_joint,
            "joint_minimizers_checked": checked,
            "violation": violation,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_names_round_trip() {
        for id in ClaimId::suite() {
            assert_eq!(id.to_string().parse::<ClaimId>().unwrap(), id);
        }
        assert_eq!("thm6(3,1)".parse::<ClaimId>().unwrap(), ClaimId::Thm6 { d: 3, c: 1, n: 9 });
        assert!("THM1(2)".parse::<ClaimId>().is_err());
        assert!("THM4(1)".parse::<ClaimId>().is_err());
        assert!("NOPE".parse::<ClaimId>().is_err());
    }

    #[test]
    fn rejects_zero_budget() {
        let opts = VerifyOptions {
            node_budget: Some(0),
            ..Default::default()
        };
        assert!(verify_claim(ClaimId::Thm4, &opts).is_err());
    }
}

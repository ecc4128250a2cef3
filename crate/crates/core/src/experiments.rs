//! Monte Carlo welfare harness.
//!
//! Every draw gets its own ChaCha stream derived from the scenario seed and
//! the draw counter, so results do not depend on how draws are scheduled
//! across threads. Reductions are performed in draw order.

use crate::agents::{AgentSpec, CuriosityType, CuriousCounts, ParamError, StrategyParams};
use crate::model::Role;
use crate::protocol::{self, Declaration, Outcome, ProtocolConfig, ProtocolError, RunResult, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Sampling law for random agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionParams {
    pub purchaser_reserve_mean: f64,
    pub purchaser_reserve_std: f64,
    pub seller_reserve_mean: f64,
    pub seller_reserve_std: f64,
    pub kappa_range: [f64; 2],
    pub beta_range: [f64; 2],
    /// Purchaser opening target as a fraction of its reserve (< 1).
    pub purchaser_gamma_fraction: [f64; 2],
    /// Seller opening target as a fraction of its reserve (> 1).
    pub seller_gamma_fraction: [f64; 2],
    pub pace_horizon_range: [u32; 2],
    pub info_base: f64,
    pub info_scale: f64,
    #[serde(default)]
    pub curious_counts: CuriousCounts,
}

impl Default for DistributionParams {
    fn default() -> Self {
        DistributionParams {
            purchaser_reserve_mean: 15.0,
            purchaser_reserve_std: 3.0,
            seller_reserve_mean: 12.0,
            seller_reserve_std: 3.0,
            kappa_range: [0.0, 0.2],
            beta_range: [0.5, 5.0],
            purchaser_gamma_fraction: [0.1, 0.6],
            seller_gamma_fraction: [1.4, 1.9],
            pace_horizon_range: [100, 1000],
            info_base: 1e5,
            info_scale: 1e5,
            curious_counts: CuriousCounts::Opponent,
        }
    }
}

impl DistributionParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Distribution(m.to_string()));
        if !(self.purchaser_reserve_std >= 0.0) || !(self.seller_reserve_std >= 0.0) {
            return bad("reserve standard deviations must be >= 0");
        }
        for (name, mean, std) in [
            ("purchaser", self.purchaser_reserve_mean, self.purchaser_reserve_std),
            ("seller", self.seller_reserve_mean, self.seller_reserve_std),
        ] {
            if std == 0.0 && !(mean > 0.0) {
                return Err(ExperimentError::Distribution(format!(
                    "{name} reserve is degenerate at a non-positive value"
                )));
            }
        }
        for (name, r) in [
            ("kappa_range", self.kappa_range),
            ("beta_range", self.beta_range),
            ("purchaser_gamma_fraction", self.purchaser_gamma_fraction),
            ("seller_gamma_fraction", self.seller_gamma_fraction),
        ] {
            if !(r[0] <= r[1]) {
                return Err(ExperimentError::Distribution(format!("{name}: lower > upper")));
            }
        }
        if self.kappa_range[0] < 0.0 || self.kappa_range[1] > 1.0 {
            return bad("kappa_range must lie in [0, 1]");
        }
        if !(self.beta_range[0] > 0.0) {
            return bad("beta_range must be positive");
        }
        if !(self.purchaser_gamma_fraction[0] > 0.0 && self.purchaser_gamma_fraction[1] < 1.0) {
            return bad("purchaser_gamma_fraction must lie in (0, 1)");
        }
        if !(self.seller_gamma_fraction[0] > 1.0) {
            return bad("seller_gamma_fraction must be > 1");
        }
        let [h0, h1] = self.pace_horizon_range;
        if h0 == 0 || h0 > h1 {
            return bad("pace_horizon_range must satisfy 1 <= lower <= upper");
        }
        if !(self.info_base > 1.0) {
            return bad("info_base must be > 1");
        }
        if !(self.info_scale > 0.0) {
            return bad("info_scale must be > 0");
        }
        Ok(())
    }
}

/// Identifies one independent random stream: the scenario seed plus a counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawSeed {
    pub seed: u64,
    pub stream: u64,
}

impl DrawSeed {
    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Streams used for the purchaser and the seller of draw `index`.
    pub fn for_draw(seed: u64, index: u64, role: Role) -> Self {
        let offset = match role {
            Role::Purchaser => 0,
            Role::Seller => 1,
        };
        DrawSeed { seed, stream: 2 * index + offset }
    }
}

const MAX_RESERVE_REDRAWS: usize = 10_000;

fn uniform<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        // keep the stream aligned with non-degenerate draws
        let _: f64 = rng.random();
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// Samples an agent. Randomness consumed does not depend on `ctype`, so
/// the same seed yields the same numbers for every curiosity type.
pub fn draw_agent(
    role: Role,
    ctype: CuriosityType,
    dist: &DistributionParams,
    seed: DrawSeed,
) -> Result<AgentSpec, ExperimentError> {
    dist.validate()?;
    let mut rng = seed.rng();
    let (mean, std, gamma_frac) = match role {
        Role::Purchaser => {
            (dist.purchaser_reserve_mean, dist.purchaser_reserve_std, dist.purchaser_gamma_fraction)
        }
        Role::Seller => (dist.seller_reserve_mean, dist.seller_reserve_std, dist.seller_gamma_fraction),
    };
    let reserve = if std == 0.0 {
        mean
    } else {
        let normal = Normal::new(mean, std).map_err(|e| ExperimentError::Distribution(e.to_string()))?;
        let mut drawn = None;
        for _ in 0..MAX_RESERVE_REDRAWS {
            let x = normal.sample(&mut rng);
            if x > 0.0 {
                drawn = Some(x);
                break;
            }
        }
        drawn.ok_or_else(|| {
            ExperimentError::Distribution(format!("{role} reserve N({mean}, {std}^2) almost never positive"))
        })?
    };
    let kappa = uniform(&mut rng, dist.kappa_range);
    let beta = uniform(&mut rng, dist.beta_range);
    let fraction = uniform(&mut rng, gamma_frac);
    let [h0, h1] = dist.pace_horizon_range;
    let pace_horizon = rng.random_range(h0..=h1);

    let spec = AgentSpec {
        role,
        ctype,
        initial_reserve: reserve,
        info_base: dist.info_base,
        info_scale: dist.info_scale,
        curious_counts: dist.curious_counts,
        strategy: StrategyParams { kappa, beta, gamma: fraction * reserve, pace_horizon },
    };
    spec.validate()?;
    Ok(spec)
}

/// The agent at the centre of every sampling range: mean reserve and
/// mid-range strategy parameters.
pub fn typical_agent(
    role: Role,
    ctype: CuriosityType,
    dist: &DistributionParams,
) -> Result<AgentSpec, ExperimentError> {
    dist.validate()?;
    let mid = |r: [f64; 2]| (r[0] + r[1]) / 2.0;
    let (reserve, fraction) = match role {
        Role::Purchaser => (dist.purchaser_reserve_mean, mid(dist.purchaser_gamma_fraction)),
        Role::Seller => (dist.seller_reserve_mean, mid(dist.seller_gamma_fraction)),
    };
    let [h0, h1] = dist.pace_horizon_range;
    let spec = AgentSpec {
        role,
        ctype,
        initial_reserve: reserve,
        info_base: dist.info_base,
        info_scale: dist.info_scale,
        curious_counts: dist.curious_counts,
        strategy: StrategyParams {
            kappa: mid(dist.kappa_range),
            beta: mid(dist.beta_range),
            gamma: fraction * reserve,
            pace_horizon: h0 + (h1 - h0) / 2,
        },
    };
    spec.validate()?;
    Ok(spec)
}

/// A purchaser type facing a seller type. The purchaser is the focal agent
/// whose welfare the comparisons report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pairing {
    pub purchaser: CuriosityType,
    pub seller: CuriosityType,
}

impl Pairing {
    pub const fn new(purchaser: CuriosityType, seller: CuriosityType) -> Self {
        Pairing { purchaser, seller }
    }

    pub fn label(&self) -> String {
        format!("{}-vs-{}", self.purchaser.short_name(), self.seller.short_name())
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Pairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) =
            s.split_once("-vs-").ok_or_else(|| format!("pairing `{s}` should look like `cur-vs-unc`"))?;
        Ok(Pairing { purchaser: a.parse()?, seller: b.parse()? })
    }
}

/// The pairings of the welfare figure: focal type first.
pub const FIG2_PAIRINGS: [Pairing; 5] = [
    Pairing::new(CuriosityType::Uncurious, CuriosityType::Uncurious),
    Pairing::new(CuriosityType::Curious, CuriosityType::Uncurious),
    Pairing::new(CuriosityType::Curious, CuriosityType::Secretive),
    Pairing::new(CuriosityType::Secretive, CuriosityType::Uncurious),
    Pairing::new(CuriosityType::Secretive, CuriosityType::Curious),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pairing: Pairing,
    pub variant: Variant,
    /// Per-side bound used by `bou` and `all`.
    pub bound: u32,
    pub draws: u64,
    pub seed: u64,
    pub dist: DistributionParams,
    pub opener: Role,
}

impl Scenario {
    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig { opener: self.opener, ..self.variant.config(self.bound) }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.draws == 0 {
            return Err(ExperimentError::Scenario("draws must be >= 1".into()));
        }
        self.dist.validate()?;
        self.protocol().validate()?;
        Ok(())
    }
}

/// A sample mean with its normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Estimate {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for x in xs {
            n += 1;
            sum += x;
            sum_sq += x * x;
        }
        if n == 0 {
            return Estimate::default();
        }
        let mean = sum / n as f64;
        if n == 1 {
            return Estimate { mean, ci95: 0.0 };
        }
        let var = ((sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
        Estimate { mean, ci95: 1.96 * (var / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Success,
    Reject,
    NotMatched,
    Forced,
}

impl From<&Outcome> for OutcomeKind {
    fn from(o: &Outcome) -> Self {
        match o {
            Outcome::Agreement(_) => OutcomeKind::Success,
            Outcome::Rejected(_) => OutcomeKind::Reject,
            Outcome::NotMatched => OutcomeKind::NotMatched,
            Outcome::ForcedSettlement { .. } => OutcomeKind::Forced,
        }
    }
}

/// The part of a run that the aggregation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawSummary {
    pub kind: OutcomeKind,
    pub seller_utility: f64,
    pub purchaser_utility: f64,
    pub messages: usize,
}

impl From<&RunResult> for DrawSummary {
    fn from(r: &RunResult) -> Self {
        DrawSummary {
            kind: OutcomeKind::from(&r.outcome),
            seller_utility: r.seller_utility,
            purchaser_utility: r.purchaser_utility,
            messages: r.record.total_messages(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub pairing: Pairing,
    pub variant: Variant,
    pub bound: Option<u32>,
    pub draws: u64,
    /// Draws in which a bargaining actually took place.
    pub held: u64,
    /// Mean utility over held bargainings.
    pub mean_seller_utility: Estimate,
    pub mean_purchaser_utility: Estimate,
    /// Mean utility over all draws, counting unmatched draws as zero.
    pub seller_utility_per_draw: Estimate,
    pub purchaser_utility_per_draw: Estimate,
    pub success_rate: f64,
    pub reject_rate: f64,
    pub not_matched_rate: f64,
    pub forced_rate: f64,
    pub mean_messages_per_run: f64,
}

impl WelfareReport {
    /// Welfare of the focal (purchaser) agent.
    pub fn welfare(&self) -> f64 {
        self.mean_purchaser_utility.mean
    }

    pub fn aggregate(
        pairing: Pairing,
        variant: Variant,
        bound: Option<u32>,
        draws: &[DrawSummary],
    ) -> WelfareReport {
        let n = draws.len() as f64;
        let held: Vec<&DrawSummary> = draws.iter().filter(|d| d.kind != OutcomeKind::NotMatched).collect();
        let rate = |k: OutcomeKind| draws.iter().filter(|d| d.kind == k).count() as f64 / n;
        let msgs = if held.is_empty() {
            0.0
        } else {
            held.iter().map(|d| d.messages as f64).sum::<f64>() / held.len() as f64
        };
        WelfareReport {
            pairing,
            variant,
            bound,
            draws: draws.len() as u64,
            held: held.len() as u64,
            mean_seller_utility: Estimate::from_samples(held.iter().map(|d| d.seller_utility)),
            mean_purchaser_utility: Estimate::from_samples(held.iter().map(|d| d.purchaser_utility)),
            seller_utility_per_draw: Estimate::from_samples(draws.iter().map(|d| d.seller_utility)),
            purchaser_utility_per_draw: Estimate::from_samples(draws.iter().map(|d| d.purchaser_utility)),
            success_rate: rate(OutcomeKind::Success),
            reject_rate: rate(OutcomeKind::Reject),
            not_matched_rate: rate(OutcomeKind::NotMatched),
            forced_rate: rate(OutcomeKind::Forced),
            mean_messages_per_run: msgs,
        }
    }
}

/// Runs `f(i)` for every `i < n` and returns results in index order.
pub(crate) fn par_map_indexed<T, F>(n: u64, jobs: Option<usize>, f: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(u64) -> Result<T, ExperimentError> + Sync + Send,
{
    let work = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>, _>>();
    match jobs {
        None => work(),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| ExperimentError::Pool(e.to_string()))?
            .install(work),
    }
}

/// The `(seller, purchaser)` couple of draw `index`.
pub fn draw_pair(s: &Scenario, index: u64) -> Result<(AgentSpec, AgentSpec), ExperimentError> {
    let purchaser = draw_agent(
        Role::Purchaser,
        s.pairing.purchaser,
        &s.dist,
        DrawSeed::for_draw(s.seed, index, Role::Purchaser),
    )?;
    let seller =
        draw_agent(Role::Seller, s.pairing.seller, &s.dist, DrawSeed::for_draw(s.seed, index, Role::Seller))?;
    Ok((seller, purchaser))
}

/// Executes one draw of a scenario.
pub fn run_draw(s: &Scenario, index: u64) -> Result<RunResult, ExperimentError> {
    let (seller, purchaser) = draw_pair(s, index)?;
    let sd = Declaration::truthful(format!("s{index}"), &seller);
    let pd = Declaration::truthful(format!("p{index}"), &purchaser);
    Ok(protocol::run(&seller, &purchaser, &sd, &pd, &s.protocol())?)
}

pub fn run_scenario(s: &Scenario, jobs: Option<usize>) -> Result<WelfareReport, ExperimentError> {
    s.validate()?;
    let summaries = par_map_indexed(s.draws, jobs, |i| run_draw(s, i).map(|r| DrawSummary::from(&r)))?;
    Ok(report_for(s, &summaries))
}

/// Like [`run_scenario`] but also returns every run, in draw order.
pub fn run_scenario_detailed(
    s: &Scenario,
    jobs: Option<usize>,
) -> Result<(WelfareReport, Vec<RunResult>), ExperimentError> {
    s.validate()?;
    let runs = par_map_indexed(s.draws, jobs, |i| run_draw(s, i))?;
    let summaries: Vec<DrawSummary> = runs.iter().map(DrawSummary::from).collect();
    Ok((report_for(s, &summaries), runs))
}

fn report_for(s: &Scenario, summaries: &[DrawSummary]) -> WelfareReport {
    let bound = s.protocol().bound;
    WelfareReport::aggregate(s.pairing, s.variant, bound, summaries)
}

/// The four variants on a shared seed stream, in `barg, mat, bou, all` order.
pub fn sweep_variants(
    pairing: Pairing,
    dist: &DistributionParams,
    bound: u32,
    draws: u64,
    seed: u64,
    opener: Role,
    jobs: Option<usize>,
) -> Result<Vec<WelfareReport>, ExperimentError> {
    Variant::ALL
        .iter()
        .map(|&variant| {
            run_scenario(&Scenario { pairing, variant, bound, draws, seed, dist: *dist, opener }, jobs)
        })
        .collect()
}

/// Welfare table of the figure: every pairing of [`FIG2_PAIRINGS`] under the
/// requested variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Table {
    pub bound: u32,
    pub rows: Vec<(Pairing, Vec<WelfareReport>)>,
}

impl Fig2Table {
    /// Focal welfare of `pairing` under `variant`, when present.
    pub fn welfare(&self, pairing: Pairing, variant: Variant) -> Option<f64> {
        self.rows
            .iter()
            .find(|(p, _)| *p == pairing)?
            .1
            .iter()
            .find(|r| r.variant == variant)
            .map(WelfareReport::welfare)
    }
}

pub fn run_fig2(
    dist: &DistributionParams,
    variants: &[Variant],
    bound: u32,
    draws: u64,
    seed: u64,
    opener: Role,
    jobs: Option<usize>,
) -> Result<Fig2Table, ExperimentError> {
    let rows = FIG2_PAIRINGS
        .iter()
        .map(|&pairing| {
            let reports = variants
                .iter()
                .map(|&variant| {
                    run_scenario(
                        &Scenario { pairing, variant, bound, draws, seed, dist: *dist, opener },
                        jobs,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((pairing, reports))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(Fig2Table { bound, rows })
}

/// One checked comparison of the welfare figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Panel the comparison belongs to (`2a`, `2b`, `2c` or `plateau`).
    pub group: String,
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    fn new(group: &str, name: impl Into<String>, holds: bool, detail: String) -> Check {
        Check { group: group.to_string(), name: name.into(), holds, detail }
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

/// The orderings and ratios the welfare figure is expected to show.
pub fn fig2_checks(t: &Fig2Table) -> Result<Vec<Check>, ExperimentError> {
    use CuriosityType::*;
    let w = |p: Pairing, v: Variant| {
        t.welfare(p, v).ok_or_else(|| {
            ExperimentError::Scenario(format!("table lacks {p} under {v}; run all four variants"))
        })
    };
    let row = |p: Pairing| -> Result<[f64; 4], ExperimentError> {
        Ok([w(p, Variant::Barg)?, w(p, Variant::Mat)?, w(p, Variant::Bou)?, w(p, Variant::All)?])
    };
    let [ub, um, uo, ua] = row(Pairing::new(Uncurious, Uncurious))?;
    let [cb, cm, co, ca] = row(Pairing::new(Curious, Uncurious))?;
    let [xb, _, xo, _] = row(Pairing::new(Curious, Secretive))?;
    let su = row(Pairing::new(Secretive, Uncurious))?;
    let sc = row(Pairing::new(Secretive, Curious))?;
    let g = |x: f64| format!("{x:.4}");

    let mut out = vec![
        Check::new("2a", "unc: all > mat", ua > um, format!("{} > {}", g(ua), g(um))),
        Check::new("2a", "unc: mat > barg", um > ub, format!("{} > {}", g(um), g(ub))),
        Check::new("2a", "unc: barg > bou", ub > uo, format!("{} > {}", g(ub), g(uo))),
        Check::new("2a", "unc: mat/barg in [1.5, 3]", within(um / ub, 1.5, 3.0), g(um / ub)),
        Check::new("2a", "unc: all/barg in [2.5, 6]", within(ua / ub, 2.5, 6.0), g(ua / ub)),
        Check::new("2a", "unc: bou/barg in [0.8, 1]", within(uo / ub, 0.8, 1.0), g(uo / ub)),
        Check::new("2b", "cur: mat <= 0.92 barg", cm <= 0.92 * cb, g(cm / cb)),
        Check::new("2b", "cur: all <= 0.92 barg", ca <= 0.92 * cb, g(ca / cb)),
        Check::new("2b", "cur: vs sec < vs unc under barg", xb < cb, format!("{} < {}", g(xb), g(cb))),
        Check::new("2b", "cur vs unc: bou < barg", co < cb, format!("{} < {}", g(co), g(cb))),
        Check::new("2b", "cur vs sec: bou > barg", xo > xb, format!("{} > {}", g(xo), g(xb))),
        Check::new("2c", "sec: barg < 0", su[0] < 0.0, g(su[0])),
        Check::new("2c", "sec: mat > 0", su[1] > 0.0, g(su[1])),
        Check::new(
            "2c",
            "sec: |mat|/|barg| in [0.6, 1.4]",
            within(su[1].abs() / su[0].abs(), 0.6, 1.4),
            g(su[1].abs() / su[0].abs()),
        ),
        Check::new(
            "2c",
            "sec: |all|/|barg| in [2, 4]",
            within(su[3].abs() / su[0].abs(), 2.0, 4.0),
            g(su[3].abs() / su[0].abs()),
        ),
    ];
    for (i, v) in Variant::ALL.iter().enumerate() {
        out.push(Check::new(
            "2c",
            format!("sec: vs cur < vs unc under {v}"),
            sc[i] < su[i],
            format!("{} < {}", g(sc[i]), g(su[i])),
        ));
    }
    Ok(out)
}

/// Bounds of the plateau sweep.
pub const PLATEAU_BOUNDS: [u32; 6] = [100, 250, 500, 750, 1000, 1500];

/// Plateau ordering: secretive pairing <= uncurious pairing <= curious pairing.
pub fn plateau_checks(secretive: u32, uncurious: u32, curious: u32) -> Vec<Check> {
    vec![
        Check::new("plateau", "sec <= unc", secretive <= uncurious, format!("{secretive} <= {uncurious}")),
        Check::new("plateau", "unc <= cur", uncurious <= curious, format!("{uncurious} <= {curious}")),
    ]
}

/// Default relative tolerance of the plateau detector.
pub const PLATEAU_EPSILON: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub pairing: Pairing,
    pub variant: Variant,
    pub points: Vec<WelfareReport>,
    pub plateau: u32,
}

/// Smallest bound from which every consecutive welfare change stays
/// within `eps` relative to the earlier value.
pub fn plateau_bound(bounds: &[u32], welfare: &[f64], eps: f64) -> Result<u32, ExperimentError> {
    if bounds.len() < 2 || bounds.len() != welfare.len() {
        return Err(ExperimentError::Scenario(
            "plateau detection needs at least two bounds with one welfare value each".into(),
        ));
    }
    let mut start = bounds.len() - 1;
    for j in (0..bounds.len() - 1).rev() {
        let change = (welfare[j + 1] - welfare[j]).abs();
        if change <= eps * welfare[j].abs() {
            start = j;
        } else {
            break;
        }
    }
    Ok(bounds[start])
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_bound(
    pairing: Pairing,
    variant: Variant,
    dist: &DistributionParams,
    bounds: &[u32],
    draws: u64,
    seed: u64,
    eps: f64,
    opener: Role,
    jobs: Option<usize>,
) -> Result<BoundSweep, ExperimentError> {
    if bounds.len() < 2 {
        return Err(ExperimentError::Scenario("a bound sweep needs at least two bounds".into()));
    }
    if bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Scenario("bounds must be strictly ascending".into()));
    }
    if !matches!(variant, Variant::Bou | Variant::All) {
        return Err(ExperimentError::Scenario(format!("variant {variant} has no bound")));
    }
    let points = bounds
        .iter()
        .map(|&bound| {
            run_scenario(&Scenario { pairing, variant, bound, draws, seed, dist: *dist, opener }, jobs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let welfare: Vec<f64> = points.iter().map(WelfareReport::welfare).collect();
    let plateau = plateau_bound(bounds, &welfare, eps)?;
    Ok(BoundSweep { pairing, variant, points, plateau })
}

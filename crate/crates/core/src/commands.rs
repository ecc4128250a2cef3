//! The four subcommands of the `curiobarg` binary, as library calls.
//!
//! Each command takes a validated [`RunConfig`] plus command-line overrides,
//! writes its report files and returns a [`CommandReport`] whose `ok` flag
//! decides the process exit status.

use crate::agents::{AgentSpec, CuriosityType};
use crate::config::{ConfigError, Format, Population, RunConfig};
use crate::experiments::{
    self, fig2_checks, plateau_checks, run_fig2, sweep_bound, typical_agent, BoundSweep, Check, DrawSeed,
    DrawSummary, ExperimentError, Fig2Table, Pairing, Scenario, WelfareReport, PLATEAU_BOUNDS,
    PLATEAU_EPSILON,
};
use crate::incentives::{
    self, grid_from_multipliers, theorem1_probe, theorem2_batch, theorem2_check, CaseTally, IncentiveError,
    Theorem1Report, Theorem2Summary,
};
use crate::model::Role;
use crate::protocol::{self, Declaration, ProtocolError, Variant};
use crate::report::{self, provenance_header};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// The effective configuration. `jobs` is not part of it: results do
    /// not depend on it.
    pub fn apply(&self, cfg: &RunConfig) -> RunConfig {
        let mut cfg = cfg.clone();
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        cfg
    }
}

#[derive(Debug, Clone, Default)]
pub struct CommandReport {
    pub ok: bool,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for the terminal.
    pub lines: Vec<String>,
}

struct Output<'a> {
    cfg: &'a RunConfig,
    digest: String,
    files: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, CommandError> {
        let dir = &cfg.output.dir;
        std::fs::create_dir_all(dir).map_err(|source| CommandError::Io { path: dir.clone(), source })?;
        Ok(Output { cfg, digest: cfg.digest(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CommandError> {
        let path = self.cfg.output.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CommandError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, contents: impl FnOnce(&str, u64) -> String) -> Result<(), CommandError> {
        if self.cfg.wants(Format::Csv) {
            let text = contents(&self.digest, self.cfg.experiment.seed);
            self.write(name, &text)?;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CommandError> {
        if self.cfg.wants(Format::Json) {
            #[derive(Serialize)]
            struct Envelope<'b, T> {
                config_sha256: &'b str,
                seed: u64,
                #[serde(flatten)]
                body: &'b T,
            }
            let env = Envelope { config_sha256: &self.digest, seed: self.cfg.experiment.seed, body };
            let mut text = serde_json::to_string_pretty(&env).expect("reports serialize");
            text.push('\n');
            self.write(name, &text)?;
        }
        Ok(())
    }
}

fn scenario(
    cfg: &RunConfig,
    pairing: Pairing,
    variant: Variant,
    bound: u32,
) -> Result<Scenario, CommandError> {
    let Population::Random { dist, .. } = cfg.population() else {
        return Err(CommandError::Usage(
            "this command samples agents: configure [agents.distribution]".into(),
        ));
    };
    Ok(Scenario {
        pairing,
        variant,
        bound,
        draws: cfg.experiment.draws,
        seed: cfg.experiment.seed,
        dist,
        opener: cfg.protocol.opener,
    })
}

fn welfare_line(r: &WelfareReport) -> String {
    format!(
        "{:<11} {:<4} purchaser {:>10} ± {:<9} seller {:>10} ± {:<9} success {} reject {} not-matched {} forced {}",
        r.pairing.label(),
        r.variant.as_str(),
        report::sig6(r.mean_purchaser_utility.mean),
        report::sig6(r.mean_purchaser_utility.ci95),
        report::sig6(r.mean_seller_utility.mean),
        report::sig6(r.mean_seller_utility.ci95),
        report::sig6(r.success_rate),
        report::sig6(r.reject_rate),
        report::sig6(r.not_matched_rate),
        report::sig6(r.forced_rate),
    )
}

fn check_lines(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .map(|c| format!("{} [{}] {} ({})", if c.holds { "PASS" } else { "FAIL" }, c.group, c.name, c.detail))
        .collect()
}

/// Runs the configured scenario (or the configured pair of agents once).
pub fn cmd_run(cfg: &RunConfig, ov: &Overrides) -> Result<CommandReport, CommandError> {
    let cfg = ov.apply(cfg);
    let mut out = Output::new(&cfg)?;
    let (report, records) = match cfg.population() {
        Population::Random { pairing, .. } => {
            let s = scenario(&cfg, pairing, cfg.protocol.variant, cfg.protocol.bound)?;
            if cfg.output.records {
                let (report, runs) = experiments::run_scenario_detailed(&s, ov.jobs)?;
                (report, Some(runs.into_iter().map(|r| r.record).collect::<Vec<_>>()))
            } else {
                (experiments::run_scenario(&s, ov.jobs)?, None)
            }
        }
        Population::Fixed { seller, purchaser } => {
            let sd = Declaration::truthful("seller", &seller);
            let pd = Declaration::truthful("purchaser", &purchaser);
            let r = protocol::run(&seller, &purchaser, &sd, &pd, &cfg.protocol_config())?;
            let pairing = Pairing::new(purchaser.ctype, seller.ctype);
            let report = WelfareReport::aggregate(
                pairing,
                cfg.protocol.variant,
                cfg.protocol_config().bound,
                &[DrawSummary::from(&r)],
            );
            (report, cfg.output.records.then(|| vec![r.record]))
        }
    };
    out.csv("report.csv", |d, s| report::welfare_csv(std::slice::from_ref(&report), d, s))?;
    out.json("report.json", &serde_json::json!({ "report": &report }))?;
    if let Some(records) = records {
        let mut text = provenance_header(&out.digest, cfg.experiment.seed);
        for r in &records {
            text.push_str(&r.to_json_line());
            text.push('\n');
        }
        out.write("records.jsonl", &text)?;
    }
    Ok(CommandReport { ok: true, lines: vec![welfare_line(&report)], files: out.files })
}

#[derive(Debug, Clone, Default)]
pub struct Fig2Options {
    /// Evaluate the expected orderings and fail unless all hold.
    pub assert: bool,
    /// Restrict the table to one variant.
    pub variant: Option<Variant>,
    /// Bound of `bou` and `all`; defaults to `protocol.bound`.
    pub bound: Option<u32>,
}

#[derive(Serialize)]
struct Fig2Json<'a> {
    table: &'a Fig2Table,
    checks: Option<&'a [Check]>,
}

/// The welfare figure: every pairing under the four variants.
pub fn cmd_fig2(cfg: &RunConfig, ov: &Overrides, opts: &Fig2Options) -> Result<CommandReport, CommandError> {
    let cfg = ov.apply(cfg);
    if opts.assert && opts.variant.is_some() {
        return Err(CommandError::Usage("--assert needs all four variants; drop --variant".into()));
    }
    let Some(dist) = cfg.distribution() else {
        return Err(CommandError::Usage("fig2 samples agents: configure [agents.distribution]".into()));
    };
    let variants = opts.variant.map(|v| vec![v]).unwrap_or_else(|| Variant::ALL.to_vec());
    let bound = opts.bound.unwrap_or(cfg.protocol.bound);
    let table = run_fig2(
        &dist,
        &variants,
        bound,
        cfg.experiment.draws,
        cfg.experiment.seed,
        cfg.protocol.opener,
        ov.jobs,
    )?;
    let mut out = Output::new(&cfg)?;
    let mut lines = Vec::new();
    for (pairing, reports) in &table.rows {
        out.csv(&format!("fig2_{}.csv", pairing.label()), |d, s| report::welfare_csv(reports, d, s))?;
        lines.extend(reports.iter().map(welfare_line));
    }
    let checks = if variants.len() == Variant::ALL.len() { Some(fig2_checks(&table)?) } else { None };
    out.json("fig2.json", &Fig2Json { table: &table, checks: checks.as_deref() })?;
    let mut ok = true;
    if opts.assert {
        let checks = checks.as_deref().unwrap_or_default();
        lines.extend(check_lines(checks));
        ok = checks.iter().all(|c| c.holds);
    }
    Ok(CommandReport { ok, files: out.files, lines })
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub bounds: Vec<u32>,
    pub variant: Variant,
    /// Pairings to sweep; the plateau assertion needs the default three.
    pub pairings: Vec<Pairing>,
    pub assert: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            bounds: PLATEAU_BOUNDS.to_vec(),
            variant: Variant::Bou,
            pairings: plateau_pairings().to_vec(),
            assert: false,
        }
    }
}

/// Secretive, uncurious and curious focal agents, each facing an uncurious seller.
pub fn plateau_pairings() -> [Pairing; 3] {
    use CuriosityType::*;
    [Pairing::new(Secretive, Uncurious), Pairing::new(Uncurious, Uncurious), Pairing::new(Curious, Uncurious)]
}

/// Welfare against the bound, with plateau detection.
pub fn cmd_sweep_bound(
    cfg: &RunConfig,
    ov: &Overrides,
    opts: &SweepOptions,
) -> Result<CommandReport, CommandError> {
    let cfg = ov.apply(cfg);
    let Some(dist) = cfg.distribution() else {
        return Err(CommandError::Usage(
            "sweep-bound samples agents: configure [agents.distribution]".into(),
        ));
    };
    let sweeps: Vec<BoundSweep> = opts
        .pairings
        .iter()
        .map(|&p| {
            sweep_bound(
                p,
                opts.variant,
                &dist,
                &opts.bounds,
                cfg.experiment.draws,
                cfg.experiment.seed,
                PLATEAU_EPSILON,
                cfg.protocol.opener,
                ov.jobs,
            )
        })
        .collect::<Result<_, _>>()?;
    let mut out = Output::new(&cfg)?;
    let mut lines = Vec::new();
    for sw in &sweeps {
        out.csv(&format!("sweep_bound_{}.csv", sw.pairing.label()), |d, s| {
            report::sweep_csv(sw, &opts.bounds, d, s)
        })?;
        lines.push(format!("{:<11} plateau at bound {}", sw.pairing.label(), sw.plateau));
    }
    let plateau_of = |p: Pairing| sweeps.iter().find(|s| s.pairing == p).map(|s| s.plateau);
    let [sec, unc, cur] = plateau_pairings().map(plateau_of);
    let checks = match (sec, unc, cur) {
        (Some(s), Some(u), Some(c)) => Some(plateau_checks(s, u, c)),
        _ => None,
    };
    out.json("sweep_bound.json", &serde_json::json!({ "sweeps": &sweeps, "checks": &checks }))?;
    let mut ok = true;
    if opts.assert {
        let Some(checks) = checks else {
            return Err(CommandError::Usage(
                "--assert needs the secretive, uncurious and curious pairings".into(),
            ));
        };
        lines.extend(check_lines(&checks));
        ok = checks.iter().all(|c| c.holds);
    }
    Ok(CommandReport { ok, files: out.files, lines })
}

#[derive(Serialize)]
struct CheckJson<'a> {
    focal: &'a AgentSpec,
    multipliers: &'a [f64],
    theorem1: &'a Theorem1Report,
    cases: &'a CaseTally,
    theorem2: &'a Theorem2Summary,
}

/// Normalizes a multiplier grid: sorted, deduplicated, always containing 1.
pub fn normalize_multipliers(ms: &[f64]) -> Vec<f64> {
    let mut ms: Vec<f64> = ms.to_vec();
    ms.push(1.0);
    ms.sort_by(|a, b| a.total_cmp(b));
    ms.dedup();
    ms
}

/// Opponent of the probed agent on draw `i`.
pub type OpponentSampler = Box<dyn Fn(u64) -> Result<AgentSpec, ExperimentError> + Sync>;

/// The agent whose declarations the incentive probe varies, and a sampler
/// of its opponent on draw `i`.
pub fn focal_and_opponents(cfg: &RunConfig) -> Result<(AgentSpec, OpponentSampler), CommandError> {
    let curious = |t: CuriosityType| matches!(t, CuriosityType::Curious | CuriosityType::CuriousSecretive);
    let role = if curious(cfg.agents.purchaser_type) {
        Role::Purchaser
    } else if curious(cfg.agents.seller_type) {
        Role::Seller
    } else {
        return Err(IncentiveError::Precondition(
            "the truthful-declaration probe needs a curious purchaser or seller".into(),
        )
        .into());
    };
    let ctype = |r: Role| match r {
        Role::Purchaser => cfg.agents.purchaser_type,
        Role::Seller => cfg.agents.seller_type,
    };
    match cfg.population() {
        Population::Fixed { seller, purchaser } => {
            let (focal, opp) = match role {
                Role::Purchaser => (purchaser, seller),
                Role::Seller => (seller, purchaser),
            };
            Ok((focal, Box::new(move |_| Ok(opp))))
        }
        Population::Random { dist, .. } => {
            let focal = match cfg.check.focal {
                Some(block) => {
                    let spec = cfg.spec_from_block(role, block);
                    spec.validate().map_err(|e| ConfigError::Invalid {
                        key: "check.focal".into(),
                        message: e.to_string(),
                    })?;
                    spec
                }
                None => typical_agent(role, ctype(role), &dist)?,
            };
            let (opp_role, opp_type, seed) = (role.opponent(), ctype(role.opponent()), cfg.experiment.seed);
            Ok((
                focal,
                Box::new(move |i| {
                    experiments::draw_agent(opp_role, opp_type, &dist, DrawSeed::for_draw(seed, i, opp_role))
                }),
            ))
        }
    }
}

/// Incentive probes: truthful-declaration dominance and agreement dominance.
pub fn cmd_check(
    cfg: &RunConfig,
    ov: &Overrides,
    multipliers: Option<&[f64]>,
) -> Result<CommandReport, CommandError> {
    let cfg = ov.apply(cfg);
    let proto = cfg.protocol_config();
    if !proto.is_all() {
        return Err(IncentiveError::Precondition(format!(
            "the incentive probes need variant `all`, the config selects `{}`",
            cfg.protocol.variant
        ))
        .into());
    }
    let multipliers = normalize_multipliers(multipliers.unwrap_or(&cfg.check.multipliers));
    if let Some(m) = multipliers.iter().find(|m| !(**m > 0.0)) {
        return Err(CommandError::Usage(format!("declaration multiplier {m} is not positive")));
    }
    let draws = cfg.check_draws();
    let (focal, sampler) = focal_and_opponents(&cfg)?;
    let truthful =
        incentives::truthful_bound_reserve(&focal, cfg.protocol.bound).map_err(IncentiveError::from)?;
    let grid: Vec<f64> = multipliers.iter().map(|m| m * truthful).collect();
    debug_assert_eq!(grid, grid_from_multipliers(truthful, &multipliers));
    let (t1, cases) = theorem1_probe(&focal, sampler.as_ref(), &grid, &proto, draws, ov.jobs)?;

    let t2 = match cfg.population() {
        Population::Random { pairing, dist } => {
            let s = Scenario {
                pairing,
                variant: Variant::All,
                bound: cfg.protocol.bound,
                draws,
                seed: cfg.experiment.seed,
                dist,
                opener: cfg.protocol.opener,
            };
            theorem2_batch(&s, ov.jobs)?
        }
        Population::Fixed { seller, purchaser } => {
            let sd = Declaration::truthful("seller", &seller);
            let pd = Declaration::truthful("purchaser", &purchaser);
            let r = protocol::run(&seller, &purchaser, &sd, &pd, &proto)?;
            let forced = r.outcome.is_forced();
            let holds = forced && theorem2_check(&r.record, &r.outcome, &seller, &purchaser, &sd, &pd)?;
            Theorem2Summary { runs: 1, forced: forced as u64, holds: holds as u64 }
        }
    };

    let mut out = Output::new(&cfg)?;
    out.csv("theorem1.csv", |d, s| report::theorem1_csv(&t1, &multipliers, d, s))?;
    out.json(
        "check.json",
        &CheckJson { focal: &focal, multipliers: &multipliers, theorem1: &t1, cases: &cases, theorem2: &t2 },
    )?;

    let mut lines = vec![format!(
        "truthful declaration (reserve at bound {}): {}",
        cfg.protocol.bound,
        report::sig6(truthful)
    )];
    for (i, m) in multipliers.iter().enumerate() {
        let u = t1.expected_utility[i];
        lines.push(format!(
            "  x{:<6} declared {:>10}  utility {:>10} ± {}",
            report::sig6(*m),
            report::sig6(grid[i]),
            report::sig6(u.mean),
            report::sig6(u.ci95)
        ));
    }
    lines.push(format!(
        "{} truthful declaration dominates (cases: failed {}, overpaid {}, compatible {})",
        if t1.dominance_holds { "PASS" } else { "FAIL" },
        cases.case1_rejected,
        cases.case2_overpaid,
        cases.case3_compatible
    ));
    lines.push(format!(
        "{} forced settlements never beat an agreement ({} of {} forced runs, {} runs)",
        if t2.all_hold() { "PASS" } else { "FAIL" },
        t2.holds,
        t2.forced,
        t2.runs
    ));
    Ok(CommandReport { ok: t1.dominance_holds && t2.all_hold(), files: out.files, lines })
}

/// Loads a config and turns every failure into a message naming its origin.
pub fn load_config(path: &Path) -> Result<RunConfig, CommandError> {
    Ok(RunConfig::load(path)?)
}

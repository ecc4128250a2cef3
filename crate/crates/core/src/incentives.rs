//! Executable probes for the two incentive properties of the extended
//! protocol:
//!
//! - declaring a reserve more favourable to the opponent than the reserve
//!   at the bound does not pay for a curious agent;
//! - under enforced settlement, any agreement better than the declared
//!   reserve beats the forced trade.

use crate::agents::{self, AgentSpec, CuriosityType, ParamError};
use crate::experiments::{draw_pair, par_map_indexed, Estimate, ExperimentError, Scenario};
use crate::model::{BargainingRecord, PriceOutcome, Role, PRICE_TOLERANCE};
use crate::protocol::{self, match_gate, Declaration, Outcome, ProtocolConfig, RunResult};
use serde::{Deserialize, Serialize};

/// Offset used to probe "strictly better than the declared reserve".
pub const BETTER_PRICE_OFFSET: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum IncentiveError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub role: Role,
    /// Reserve at the bound, the threshold below (purchaser) or above
    /// (seller) which declarations are considered honest.
    pub truthful_value: f64,
    pub declaration_grid: Vec<f64>,
    pub expected_utility: Vec<Estimate>,
    /// Per-draw utility difference against the truthful declaration.
    pub paired_gain: Vec<Estimate>,
    pub truthful_index: usize,
    pub dominance_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaseTally {
    /// Bargaining failed and the agent paid its (inflated) declaration.
    pub case1_rejected: u64,
    /// Agreement at a price worse than the reserve at the bound.
    pub case2_overpaid: u64,
    /// Agreement at an acceptable price.
    pub case3_compatible: u64,
    /// Case-3 runs the truthful declaration would not have been matched in.
    pub case3_missed_by_truthful: u64,
    /// Case-1 runs whose utility did not exceed the truthful run on the same draw.
    pub case1_not_better_than_truthful: u64,
}

impl CaseTally {
    pub fn total(&self) -> u64 {
        self.case1_rejected + self.case2_overpaid + self.case3_compatible
    }
}

/// Turns multipliers of the truthful value into a declaration grid.
pub fn grid_from_multipliers(truthful: f64, multipliers: &[f64]) -> Vec<f64> {
    let mut grid: Vec<f64> = multipliers.iter().map(|m| m * truthful).collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup_by(|a, b| (*a - *b).abs() <= PRICE_TOLERANCE);
    grid
}

/// Reserve price of `agent` once both sides made `bound` proposals.
pub fn truthful_bound_reserve(agent: &AgentSpec, bound: u32) -> Result<f64, ParamError> {
    agents::reserve_price(agent, bound as usize, bound as usize)
}

fn is_inflated(role: Role, declared: f64, truthful: f64) -> bool {
    match role {
        Role::Purchaser => declared > truthful + PRICE_TOLERANCE,
        Role::Seller => declared < truthful - PRICE_TOLERANCE,
    }
}

/// Monte Carlo probe of truthful-declaration dominance for a curious agent.
///
/// Every declaration faces the same opponent on draw `i`, so differences
/// between grid points are paired.
pub fn theorem1_probe(
    agent: &AgentSpec,
    opponent: &(dyn Fn(u64) -> Result<AgentSpec, ExperimentError> + Sync),
    grid: &[f64],
    config: &ProtocolConfig,
    draws: u64,
    jobs: Option<usize>,
) -> Result<(Theorem1Report, CaseTally), IncentiveError> {
    if !matches!(agent.ctype, CuriosityType::Curious | CuriosityType::CuriousSecretive) {
        return Err(IncentiveError::Precondition(format!(
            "the probe targets curious agents, got a {} one",
            agent.ctype
        )));
    }
    if !config.is_all() {
        return Err(IncentiveError::Precondition(
            "the probe requires matching, a bound and enforcement (variant `all`)".into(),
        ));
    }
    if draws == 0 {
        return Err(IncentiveError::Parameter("draws must be >= 1".into()));
    }
    let bound = config.bound.expect("checked by is_all");
    let truthful = truthful_bound_reserve(agent, bound)?;
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(IncentiveError::Parameter("declaration grid must be sorted ascending".into()));
    }
    let truthful_index =
        grid.iter().position(|d| (d - truthful).abs() <= PRICE_TOLERANCE).ok_or_else(|| {
            IncentiveError::Parameter(format!("grid lacks the truthful declaration {truthful}"))
        })?;

    let role = agent.role;
    let per_draw: Vec<(f64, Vec<RunResult>)> = par_map_indexed(draws, jobs, |i| {
        let opp = opponent(i)?;
        if opp.role != role.opponent() {
            return Err(ExperimentError::Scenario("opponent sampled in the wrong role".into()));
        }
        let opp_decl = Declaration::truthful("opponent", &opp);
        let runs = grid
            .iter()
            .map(|&d| {
                let own = Declaration::new("agent", d);
                let r = match role {
                    Role::Purchaser => protocol::run(&opp, agent, &opp_decl, &own, config),
                    Role::Seller => protocol::run(agent, &opp, &own, &opp_decl, config),
                };
                r.map_err(ExperimentError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((opp.initial_reserve, runs))
    })?;

    let own_utility = |r: &RunResult| match role {
        Role::Purchaser => r.purchaser_utility,
        Role::Seller => r.seller_utility,
    };

    let expected_utility: Vec<Estimate> = (0..grid.len())
        .map(|g| Estimate::from_samples(per_draw.iter().map(|(_, runs)| own_utility(&runs[g]))))
        .collect();
    let paired_gain: Vec<Estimate> = (0..grid.len())
        .map(|g| {
            Estimate::from_samples(
                per_draw.iter().map(|(_, runs)| own_utility(&runs[g]) - own_utility(&runs[truthful_index])),
            )
        })
        .collect();

    let base = expected_utility[truthful_index];
    let dominance_holds = grid
        .iter()
        .zip(&expected_utility)
        .filter(|(d, _)| is_inflated(role, **d, truthful))
        .all(|(_, e)| e.mean <= base.mean + base.ci95);

    let mut tally = CaseTally::default();
    let truthful_decl = Declaration::new("agent", truthful);
    for (opp_reserve, runs) in &per_draw {
        let opp_decl = Declaration::new("opponent", *opp_reserve);
        let honest = &runs[truthful_index];
        for (g, r) in runs.iter().enumerate() {
            if !is_inflated(role, grid[g], truthful) || r.outcome == Outcome::NotMatched {
                continue;
            }
            match r.record.outcome {
                PriceOutcome::Failed => {
                    tally.case1_rejected += 1;
                    if own_utility(r) <= own_utility(honest) + PRICE_TOLERANCE {
                        tally.case1_not_better_than_truthful += 1;
                    }
                }
                PriceOutcome::Agreed(price) if is_inflated(role, price, truthful) => {
                    tally.case2_overpaid += 1;
                }
                PriceOutcome::Agreed(_) => {
                    tally.case3_compatible += 1;
                    let matched = match role {
                        Role::Purchaser => match_gate(&opp_decl, &truthful_decl),
                        Role::Seller => match_gate(&truthful_decl, &opp_decl),
                    };
                    if !matched {
                        tally.case3_missed_by_truthful += 1;
                    }
                }
            }
        }
    }

    Ok((
        Theorem1Report {
            role,
            truthful_value: truthful,
            declaration_grid: grid.to_vec(),
            expected_utility,
            paired_gain,
            truthful_index,
            dominance_holds,
        },
        tally,
    ))
}

/// Checks that a forced settlement is worse for both parties than any
/// agreement strictly better than their declared reserve, all else equal.
pub fn theorem2_check(
    record: &BargainingRecord,
    outcome: &Outcome,
    seller: &AgentSpec,
    purchaser: &AgentSpec,
    seller_decl: &Declaration,
    purchaser_decl: &Declaration,
) -> Result<bool, IncentiveError> {
    let Outcome::ForcedSettlement { purchaser_pays, seller_receives, .. } = *outcome else {
        return Err(IncentiveError::Precondition(format!(
            "the agreement-dominance check applies to forced settlements, got {outcome:?}"
        )));
    };
    let mut holds = true;
    for (spec, decl, realized_price) in
        [(purchaser, purchaser_decl, purchaser_pays), (seller, seller_decl, seller_receives)]
    {
        let (k_own, k_opp) = record.counts_for(spec.role);
        let realized = agents::utility(spec, Some(realized_price), k_own, k_opp)?;
        let at_declared = agents::utility(spec, Some(decl.declared_reserve), k_own, k_opp)?;
        let better_price = match spec.role {
            Role::Purchaser => decl.declared_reserve - BETTER_PRICE_OFFSET,
            Role::Seller => decl.declared_reserve + BETTER_PRICE_OFFSET,
        };
        let better = agents::utility(spec, Some(better_price), k_own, k_opp)?;
        holds &= realized <= at_declared + PRICE_TOLERANCE && realized < better;
    }
    Ok(holds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Theorem2Summary {
    pub runs: u64,
    pub forced: u64,
    /// Forced settlements on which [`theorem2_check`] returned true.
    pub holds: u64,
}

impl Theorem2Summary {
    pub fn all_hold(&self) -> bool {
        self.forced == self.holds
    }
}

/// Runs a scenario of the `all` variant and checks every forced settlement.
pub fn theorem2_batch(s: &Scenario, jobs: Option<usize>) -> Result<Theorem2Summary, IncentiveError> {
    if !s.protocol().is_all() {
        return Err(IncentiveError::Precondition("forced settlements only exist under variant `all`".into()));
    }
    s.validate()?;
    let verdicts = par_map_indexed(s.draws, jobs, |i| {
        let (seller, purchaser) = draw_pair(s, i)?;
        let sd = Declaration::truthful(format!("s{i}"), &seller);
        let pd = Declaration::truthful(format!("p{i}"), &purchaser);
        let r = protocol::run(&seller, &purchaser, &sd, &pd, &s.protocol())?;
        if !r.outcome.is_forced() {
            return Ok(None);
        }
        theorem2_check(&r.record, &r.outcome, &seller, &purchaser, &sd, &pd)
            .map(Some)
            .map_err(|e| ExperimentError::Scenario(e.to_string()))
    })?;
    let forced = verdicts.iter().flatten().count() as u64;
    let holds = verdicts.iter().flatten().filter(|ok| **ok).count() as u64;
    Ok(Theorem2Summary { runs: s.draws, forced, holds })
}

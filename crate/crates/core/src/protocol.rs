//! Bargaining engines and the three protocol extensions.
//!
//! - standard alternating offers,
//! - a matching gate run by a trusted referee on declared reserve prices,
//! - a per-side proposal bound with simultaneous, referee-forwarded rounds,
//! - enforced settlement at the declared reserves when the bargaining fails.

use crate::agents::{self, decide_under, Action, AgentSpec, ParamError, Regime};
use crate::model::{
    BargainingRecord, EndingFlag, ExchangeMode, MessageLog, PriceOutcome, Role, PRICE_TOLERANCE,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Safety valve for alternating runs; never a protocol bound.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// Bound used by the bounded variants unless configured otherwise.
pub const DEFAULT_BOUND: u32 = 500;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid protocol configuration: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub matching: bool,
    /// Per-side proposal bound; setting it switches to mediated rounds.
    pub bound: Option<u32>,
    pub enforcement: bool,
    /// Who proposes first in alternating mode.
    pub opener: Role,
    pub max_steps: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Variant::Barg.config(DEFAULT_BOUND)
    }
}

impl ProtocolConfig {
    pub fn mediated(&self) -> bool {
        self.bound.is_some()
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.enforcement && !self.matching {
            return Err(ProtocolError::Config(
                "enforcement requires matching (settlement uses declared reserves)".into(),
            ));
        }
        if self.bound == Some(0) {
            return Err(ProtocolError::Config("bound must be >= 1".into()));
        }
        if self.max_steps == 0 {
            return Err(ProtocolError::Config("max_steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_all(&self) -> bool {
        self.matching && self.enforcement && self.bound.is_some()
    }
}

/// The four protocol variants compared in the welfare experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Barg,
    Mat,
    Bou,
    All,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Barg, Variant::Mat, Variant::Bou, Variant::All];

    pub fn config(self, bound: u32) -> ProtocolConfig {
        let base = ProtocolConfig {
            matching: false,
            bound: None,
            enforcement: false,
            opener: Role::Purchaser,
            max_steps: DEFAULT_MAX_STEPS,
        };
        match self {
            Variant::Barg => base,
            Variant::Mat => ProtocolConfig { matching: true, ..base },
            Variant::Bou => ProtocolConfig { bound: Some(bound), ..base },
            Variant::All => ProtocolConfig { matching: true, bound: Some(bound), enforcement: true, ..base },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Barg => "barg",
            Variant::Mat => "mat",
            Variant::Bou => "bou",
            Variant::All => "all",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim_end_matches('.') {
            "barg" => Ok(Variant::Barg),
            "mat" => Ok(Variant::Mat),
            "bou" => Ok(Variant::Bou),
            "all" => Ok(Variant::All),
            other => Err(format!("unknown variant `{other}` (expected barg|mat|bou|all)")),
        }
    }
}

/// A reserve price handed to the referee before bargaining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Declaration {
    pub agent_id: String,
    pub declared_reserve: f64,
}

impl Declaration {
    pub fn new(agent_id: impl Into<String>, declared_reserve: f64) -> Self {
        Declaration { agent_id: agent_id.into(), declared_reserve }
    }

    /// Declares the agent's initial reserve.
    pub fn truthful(agent_id: impl Into<String>, spec: &AgentSpec) -> Self {
        Declaration::new(agent_id, spec.initial_reserve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    Rejected(Role),
    BoundReached,
    /// The safety valve of an alternating run fired.
    Livelock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Agreement(f64),
    Rejected(FailureCause),
    NotMatched,
    ForcedSettlement { purchaser_pays: f64, seller_receives: f64, penalty: f64 },
}

impl Outcome {
    pub fn is_forced(&self) -> bool {
        matches!(self, Outcome::ForcedSettlement { .. })
    }
}

/// How a bargaining engine stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Agreed(f64),
    Failed(FailureCause),
}

/// The referee authorizes the bargaining iff the declared domains overlap.
pub fn match_gate(seller: &Declaration, purchaser: &Declaration) -> bool {
    purchaser.declared_reserve + PRICE_TOLERANCE >= seller.declared_reserve
}

/// Trade at the declared reserves; the surplus is confiscated.
pub fn settle_enforced(seller: &Declaration, purchaser: &Declaration) -> Result<Outcome, ProtocolError> {
    if !match_gate(seller, purchaser) {
        return Err(ProtocolError::Precondition(format!(
            "declarations do not match (seller {}, purchaser {})",
            seller.declared_reserve, purchaser.declared_reserve
        )));
    }
    let pays = purchaser.declared_reserve;
    let receives = seller.declared_reserve;
    Ok(Outcome::ForcedSettlement {
        purchaser_pays: pays,
        seller_receives: receives,
        penalty: (pays - receives).max(0.0),
    })
}

fn empty_record(mode: ExchangeMode) -> BargainingRecord {
    BargainingRecord {
        good: "good".into(),
        seller: "seller".into(),
        purchaser: "purchaser".into(),
        outcome: PriceOutcome::Failed,
        seller_log: MessageLog::default(),
        purchaser_log: MessageLog::default(),
        mode,
    }
}

struct Parties<'a> {
    seller: (&'a AgentSpec, Regime),
    purchaser: (&'a AgentSpec, Regime),
}

impl<'a> Parties<'a> {
    fn get(&self, role: Role) -> (&'a AgentSpec, Regime) {
        match role {
            Role::Seller => self.seller,
            Role::Purchaser => self.purchaser,
        }
    }
}

fn check_roles(seller: &AgentSpec, purchaser: &AgentSpec) -> Result<(), ProtocolError> {
    if seller.role != Role::Seller || purchaser.role != Role::Purchaser {
        return Err(ProtocolError::Precondition("agent roles do not match their seats".into()));
    }
    seller.validate()?;
    purchaser.validate()?;
    Ok(())
}

/// Standard alternating offers between two agents that simply walk away on failure.
pub fn run_alternating(
    seller: &AgentSpec,
    purchaser: &AgentSpec,
    opener: Role,
    max_steps: u64,
) -> Result<(BargainingRecord, Termination), ProtocolError> {
    alternating(
        &Parties { seller: (seller, Regime::Free), purchaser: (purchaser, Regime::Free) },
        opener,
        max_steps,
    )
}

fn alternating(
    parties: &Parties<'_>,
    opener: Role,
    max_steps: u64,
) -> Result<(BargainingRecord, Termination), ProtocolError> {
    check_roles(parties.seller.0, parties.purchaser.0)?;
    if max_steps == 0 {
        return Err(ProtocolError::Config("max_steps must be >= 1".into()));
    }
    let mut rec = empty_record(ExchangeMode::Alternating { opener });
    let mut mover = opener;
    for _ in 0..max_steps {
        let (spec, regime) = parties.get(mover);
        let (k, k_opp) = rec.counts_for(mover);
        let last = rec.log(mover.opponent()).last();
        match decide_under(spec, k, k_opp, last, regime)? {
            Action::Accept => {
                let price = last.expect("accept only follows an offer");
                rec.log_mut(mover).ending = EndingFlag::Accept;
                rec.outcome = PriceOutcome::Agreed(price);
                return Ok((rec, Termination::Agreed(price)));
            }
            Action::Reject => {
                rec.log_mut(mover).ending = EndingFlag::Reject;
                return Ok((rec, Termination::Failed(FailureCause::Rejected(mover))));
            }
            Action::Propose(p) => rec.log_mut(mover).push(p),
        }
        mover = mover.opponent();
    }
    Ok((rec, Termination::Failed(FailureCause::Livelock)))
}

/// Bounded rounds in which a referee forwards both proposals at once.
pub fn run_mediated_rounds(
    seller: &AgentSpec,
    purchaser: &AgentSpec,
    bound: u32,
) -> Result<(BargainingRecord, Termination), ProtocolError> {
    mediated(&Parties { seller: (seller, Regime::Free), purchaser: (purchaser, Regime::Free) }, bound)
}

fn mediated(parties: &Parties<'_>, bound: u32) -> Result<(BargainingRecord, Termination), ProtocolError> {
    check_roles(parties.seller.0, parties.purchaser.0)?;
    if bound == 0 {
        return Err(ProtocolError::Config("bound must be >= 1".into()));
    }
    let mut rec = empty_record(ExchangeMode::Mediated);
    let (ps, preg) = parties.purchaser;
    let (ss, sreg) = parties.seller;

    for round in 0..bound as usize {
        let last_p = rec.purchaser_log.last();
        let last_s = rec.seller_log.last();
        let a_p = decide_under(ps, round, round, last_s, preg)?;
        let a_s = decide_under(ss, round, round, last_p, sreg)?;

        // an acceptance closes the round; pending proposals are never forwarded
        let agreed = match (a_p, a_s) {
            (Action::Accept, Action::Accept) => {
                rec.purchaser_log.ending = EndingFlag::Accept;
                rec.seller_log.ending = EndingFlag::Accept;
                Some(0.5 * (last_p.unwrap() + last_s.unwrap()))
            }
            (Action::Accept, _) => {
                rec.purchaser_log.ending = EndingFlag::Accept;
                last_s
            }
            (_, Action::Accept) => {
                rec.seller_log.ending = EndingFlag::Accept;
                last_p
            }
            _ => None,
        };
        if let Some(price) = agreed {
            rec.outcome = PriceOutcome::Agreed(price);
            return Ok((rec, Termination::Agreed(price)));
        }

        match (a_p, a_s) {
            (Action::Propose(p), Action::Propose(s)) => {
                rec.purchaser_log.push(p);
                rec.seller_log.push(s);
                if p + PRICE_TOLERANCE >= s {
                    rec.purchaser_log.ending = EndingFlag::Accept;
                    rec.seller_log.ending = EndingFlag::Accept;
                    let price = 0.5 * (p + s);
                    rec.outcome = PriceOutcome::Agreed(price);
                    return Ok((rec, Termination::Agreed(price)));
                }
            }
            (Action::Reject, Action::Reject) => {
                rec.purchaser_log.ending = EndingFlag::Reject;
                rec.seller_log.ending = EndingFlag::Reject;
                return Ok((rec, Termination::Failed(FailureCause::Rejected(Role::Purchaser))));
            }
            (Action::Reject, _) => {
                rec.purchaser_log.ending = EndingFlag::Reject;
                return Ok((rec, Termination::Failed(FailureCause::Rejected(Role::Purchaser))));
            }
            (_, Action::Reject) => {
                rec.seller_log.ending = EndingFlag::Reject;
                return Ok((rec, Termination::Failed(FailureCause::Rejected(Role::Seller))));
            }
            _ => unreachable!("acceptances handled above"),
        }
    }
    Ok((rec, Termination::Failed(FailureCause::BoundReached)))
}

/// Result of one bargaining under a protocol configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub record: BargainingRecord,
    pub outcome: Outcome,
    pub seller_utility: f64,
    pub purchaser_utility: f64,
}

/// Full pipeline: matching gate, engine, enforcement, utilities.
pub fn run(
    seller: &AgentSpec,
    purchaser: &AgentSpec,
    seller_decl: &Declaration,
    purchaser_decl: &Declaration,
    config: &ProtocolConfig,
) -> Result<RunResult, ProtocolError> {
    config.validate()?;
    check_roles(seller, purchaser)?;
    for d in [seller_decl, purchaser_decl] {
        if !(d.declared_reserve > 0.0) {
            return Err(ProtocolError::Precondition(format!(
                "declared reserve of {} must be > 0",
                d.agent_id
            )));
        }
    }
    let mode = match config.bound {
        Some(_) => ExchangeMode::Mediated,
        None => ExchangeMode::Alternating { opener: config.opener },
    };

    if config.matching && !match_gate(seller_decl, purchaser_decl) {
        let mut record = empty_record(mode);
        record.seller = seller_decl.agent_id.clone();
        record.purchaser = purchaser_decl.agent_id.clone();
        return Ok(RunResult {
            record,
            outcome: Outcome::NotMatched,
            seller_utility: 0.0,
            purchaser_utility: 0.0,
        });
    }

    let regime = |decl: &Declaration| {
        if config.enforcement {
            Regime::Enforced { declared: decl.declared_reserve, bound: config.bound }
        } else {
            Regime::Free
        }
    };
    let parties =
        Parties { seller: (seller, regime(seller_decl)), purchaser: (purchaser, regime(purchaser_decl)) };
    let (mut record, termination) = match config.bound {
        Some(b) => mediated(&parties, b)?,
        None => alternating(&parties, config.opener, config.max_steps)?,
    };
    record.seller = seller_decl.agent_id.clone();
    record.purchaser = purchaser_decl.agent_id.clone();

    let outcome = match termination {
        Termination::Agreed(p) => Outcome::Agreement(p),
        Termination::Failed(_) if config.enforcement => settle_enforced(seller_decl, purchaser_decl)?,
        Termination::Failed(cause) => Outcome::Rejected(cause),
    };

    let (s_own, s_opp) = record.counts_for(Role::Seller);
    let (p_own, p_opp) = record.counts_for(Role::Purchaser);
    let (s_price, p_price) = match outcome {
        Outcome::Agreement(p) => (Some(p), Some(p)),
        Outcome::ForcedSettlement { purchaser_pays, seller_receives, .. } => {
            (Some(seller_receives), Some(purchaser_pays))
        }
        Outcome::Rejected(_) | Outcome::NotMatched => (None, None),
    };
    Ok(RunResult {
        seller_utility: agents::utility(seller, s_price, s_own, s_opp)?,
        purchaser_utility: agents::utility(purchaser, p_price, p_own, p_opp)?,
        record,
        outcome,
    })
}

//! Agent taxonomy, information-aware utility, moving reserve price and the
//! time-dependent concession strategy.
//!
//! Information is measured by proposal counts: an agent that has sent
//! `k_own` proposals and received `k_opp` values the exchange through an
//! information factor that multiplies its initial reserve price. For a
//! purchaser with base `n` and scale `c`, writing `L(k) = log_n(n + c*k)`:
//!
//! | type              | purchaser factor       | seller factor          |
//! |-------------------|------------------------|------------------------|
//! | uncurious         | 1                      | 1                      |
//! | secretive         | 1 / L(k_own)           | L(k_own)               |
//! | curious           | L(k_opp)               | 1 / L(k_opp)           |
//! | curious-secretive | L(k_opp) / L(k_own)    | L(k_own) / L(k_opp)    |
//!
//! The seller column mirrors the purchaser one so that revealing always
//! hurts a secretive agent and collecting always pleases a curious one.

use crate::model::{Role, PRICE_TOLERANCE};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("information base must be > 1, got {0}")]
    InfoBase(f64),
    #[error("information scale must be > 0, got {0}")]
    InfoScale(f64),
    #[error("initial reserve must be > 0, got {0}")]
    Reserve(f64),
    #[error("kappa must lie in [0, 1], got {0}")]
    Kappa(f64),
    #[error("beta must be > 0, got {0}")]
    Beta(f64),
    #[error("pace horizon must be >= 1")]
    PaceHorizon,
    #[error("opening target {gamma} is on the wrong side of the reserve {reserve} for a {role}")]
    Gamma { role: Role, gamma: f64, reserve: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CuriosityType {
    Uncurious,
    Secretive,
    Curious,
    CuriousSecretive,
}

impl CuriosityType {
    pub const ALL: [CuriosityType; 4] = [
        CuriosityType::Uncurious,
        CuriosityType::Secretive,
        CuriosityType::Curious,
        CuriosityType::CuriousSecretive,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            CuriosityType::Uncurious => "unc",
            CuriosityType::Secretive => "sec",
            CuriosityType::Curious => "cur",
            CuriosityType::CuriousSecretive => "cursec",
        }
    }

    fn values_collected(self) -> bool {
        matches!(self, CuriosityType::Curious | CuriosityType::CuriousSecretive)
    }

    fn minds_revealed(self) -> bool {
        matches!(self, CuriosityType::Secretive | CuriosityType::CuriousSecretive)
    }
}

impl fmt::Display for CuriosityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CuriosityType::Uncurious => "uncurious",
            CuriosityType::Secretive => "secretive",
            CuriosityType::Curious => "curious",
            CuriosityType::CuriousSecretive => "curious-secretive",
        })
    }
}

impl FromStr for CuriosityType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uncurious" | "unc" => Ok(CuriosityType::Uncurious),
            "secretive" | "sec" => Ok(CuriosityType::Secretive),
            "curious" | "cur" => Ok(CuriosityType::Curious),
            "curious-secretive" | "cursec" => Ok(CuriosityType::CuriousSecretive),
            other => Err(format!("unknown curiosity type `{other}`")),
        }
    }
}

/// Which proposal count feeds the "collected information" term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CuriousCounts {
    /// The opponent's proposals (what was actually collected).
    #[default]
    Opponent,
    /// The agent's own proposals, as in the literal utility instantiation.
    Own,
}

impl FromStr for CuriousCounts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "opponent" => Ok(CuriousCounts::Opponent),
            "own" => Ok(CuriousCounts::Own),
            other => Err(format!("unknown curious-counts `{other}` (expected own|opponent)")),
        }
    }
}

/// Parameters of the time-dependent concession tactic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyParams {
    /// Fraction of the distance to the target conceded at the first proposal.
    pub kappa: f64,
    /// Convexity of the concession curve (> 1 concedes early, < 1 late).
    pub beta: f64,
    /// Opening target price.
    pub gamma: f64,
    /// Number of own proposals after which the plan reaches the initial reserve.
    pub pace_horizon: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub role: Role,
    pub ctype: CuriosityType,
    /// Reserve price before any message is exchanged.
    pub initial_reserve: f64,
    pub info_base: f64,
    pub info_scale: f64,
    #[serde(default)]
    pub curious_counts: CuriousCounts,
    pub strategy: StrategyParams,
}

impl AgentSpec {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.initial_reserve > 0.0) {
            return Err(ParamError::Reserve(self.initial_reserve));
        }
        if !(self.info_base > 1.0) {
            return Err(ParamError::InfoBase(self.info_base));
        }
        if !(self.info_scale > 0.0) {
            return Err(ParamError::InfoScale(self.info_scale));
        }
        let s = &self.strategy;
        if !(0.0..=1.0).contains(&s.kappa) {
            return Err(ParamError::Kappa(s.kappa));
        }
        if !(s.beta > 0.0) {
            return Err(ParamError::Beta(s.beta));
        }
        if s.pace_horizon == 0 {
            return Err(ParamError::PaceHorizon);
        }
        let wrong_side = match self.role {
            Role::Purchaser => !(s.gamma < self.initial_reserve),
            Role::Seller => !(s.gamma > self.initial_reserve),
        };
        if wrong_side || !(s.gamma > 0.0) {
            return Err(ParamError::Gamma { role: self.role, gamma: s.gamma, reserve: self.initial_reserve });
        }
        Ok(())
    }

    pub fn info_factor(&self, k_own: usize, k_opp: usize) -> Result<f64, ParamError> {
        info_factor(self.role, self.ctype, self.curious_counts, self.info_base, self.info_scale, k_own, k_opp)
    }
}

/// `log_base(base + scale * k)`; equals 1 at `k = 0` and grows with `k`.
fn info_log(base: f64, scale: f64, k: usize) -> f64 {
    (base + scale * k as f64).ln() / base.ln()
}

/// The purchaser-side information factor of the utility instantiation.
pub fn delta(
    ctype: CuriosityType,
    info_base: f64,
    info_scale: f64,
    k_own: usize,
    k_opp: usize,
) -> Result<f64, ParamError> {
    info_factor(Role::Purchaser, ctype, CuriousCounts::Opponent, info_base, info_scale, k_own, k_opp)
}

/// Information factor for either role; see the module table.
pub fn info_factor(
    role: Role,
    ctype: CuriosityType,
    counts: CuriousCounts,
    info_base: f64,
    info_scale: f64,
    k_own: usize,
    k_opp: usize,
) -> Result<f64, ParamError> {
    if !(info_base > 1.0) {
        return Err(ParamError::InfoBase(info_base));
    }
    if !(info_scale > 0.0) {
        return Err(ParamError::InfoScale(info_scale));
    }
    let collected = if ctype.values_collected() {
        let k = match counts {
            CuriousCounts::Opponent => k_opp,
            CuriousCounts::Own => k_own,
        };
        info_log(info_base, info_scale, k)
    } else {
        1.0
    };
    let revealed = if ctype.minds_revealed() { info_log(info_base, info_scale, k_own) } else { 1.0 };
    // purchaser: willingness to pay grows with collected, shrinks with revealed
    Ok(match role {
        Role::Purchaser => collected / revealed,
        Role::Seller => revealed / collected,
    })
}

/// Realized utility of `spec` for a finished bargaining.
///
/// `price` is `None` when the bargaining failed.
pub fn utility(spec: &AgentSpec, price: Option<f64>, k_own: usize, k_opp: usize) -> Result<f64, ParamError> {
    let d = spec.info_factor(k_own, k_opp)?;
    let r0 = spec.initial_reserve;
    Ok(match (spec.role, price) {
        (Role::Purchaser, Some(p)) => r0 * d - p,
        (Role::Purchaser, None) => r0 * (d - 1.0),
        (Role::Seller, Some(p)) => p - r0 * d,
        (Role::Seller, None) => r0 * (1.0 - d),
    })
}

/// The price at which [`utility`] is zero for the given counts.
pub fn reserve_price(spec: &AgentSpec, k_own: usize, k_opp: usize) -> Result<f64, ParamError> {
    Ok(spec.initial_reserve * spec.info_factor(k_own, k_opp)?)
}

/// Concession fraction `kappa + (1 - kappa) * (k / horizon)^(1/beta)`, uncapped.
pub fn concession_fraction(s: &StrategyParams, k: usize, horizon: u32) -> f64 {
    let t = k as f64 / horizon as f64;
    s.kappa + (1.0 - s.kappa) * t.powf(1.0 / s.beta)
}

/// Price the strategy would propose at own step `k`.
pub fn planned_proposal(spec: &AgentSpec, k: usize) -> Result<f64, ParamError> {
    planned_with_horizon(spec, k, spec.strategy.pace_horizon)
}

pub fn planned_with_horizon(spec: &AgentSpec, k: usize, horizon: u32) -> Result<f64, ParamError> {
    if horizon == 0 {
        return Err(ParamError::PaceHorizon);
    }
    let s = &spec.strategy;
    let a = concession_fraction(s, k, horizon);
    let r0 = spec.initial_reserve;
    Ok(match spec.role {
        Role::Purchaser => s.gamma + (r0 - s.gamma) * a,
        Role::Seller => s.gamma - (s.gamma - r0) * a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Accept,
    Propose(f64),
    Reject,
}

/// What is at stake if the bargaining fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Failure simply ends the bargaining.
    Free,
    /// Failure forces a trade at `declared`; `bound` is the per-side proposal cap, if any.
    Enforced { declared: f64, bound: Option<u32> },
}

/// Whether waiting for a forced settlement at the bound pays off for `spec`.
///
/// This is the case when the reserve at the bound is better for the agent
/// than its initial reserve, i.e. for agents that value collected
/// information more than they fear revealing their own.
pub fn delay_pays(spec: &AgentSpec, bound: u32) -> Result<bool, ParamError> {
    let k = bound as usize;
    let at_bound = reserve_price(spec, k, k)?;
    let r0 = spec.initial_reserve;
    Ok(match spec.role {
        Role::Purchaser => at_bound > r0 + PRICE_TOLERANCE,
        Role::Seller => at_bound < r0 - PRICE_TOLERANCE,
    })
}

/// Per-step decision when failure simply ends the bargaining.
///
/// `k` is the number of proposals this agent has already made and
/// `k_opp` the number it has received.
pub fn decide(
    spec: &AgentSpec,
    k: usize,
    k_opp: usize,
    opponent_last: Option<f64>,
) -> Result<Action, ParamError> {
    decide_under(spec, k, k_opp, opponent_last, Regime::Free)
}

/// Per-step decision under an explicit failure regime.
///
/// In the free regime the agent accepts an offer at least as good as both
/// its plan and its current reserve, drops out when its plan became strictly
/// worse than its current reserve, and proposes its plan otherwise.
///
/// Under enforcement, failure is replaced by a trade at the declared
/// reserve, so any agreement at least as good as the declared reserve
/// dominates it. The declared reserve then replaces the moving reserve,
/// the plan is clamped to it instead of rejecting, and agents for which
/// delay does not pay compress their pacing so the plan reaches the
/// initial reserve at the last round before the bound.
pub fn decide_under(
    spec: &AgentSpec,
    k: usize,
    k_opp: usize,
    opponent_last: Option<f64>,
    regime: Regime,
) -> Result<Action, ParamError> {
    let role = spec.role;
    match regime {
        Regime::Free => {
            let plan = planned_proposal(spec, k)?;
            let reserve = reserve_price(spec, k, k_opp)?;
            if let Some(offer) = opponent_last {
                if role.at_least_as_good(offer, plan) && role.at_least_as_good(offer, reserve) {
                    return Ok(Action::Accept);
                }
            }
            if role.strictly_worse(plan, reserve) {
                Ok(Action::Reject)
            } else {
                Ok(Action::Propose(plan))
            }
        }
        Regime::Enforced { declared, bound } => {
            let mut horizon = spec.strategy.pace_horizon;
            if let Some(b) = bound {
                if !delay_pays(spec, b)? {
                    horizon = horizon.min(b.saturating_sub(1)).max(1);
                }
            }
            let mut plan = planned_with_horizon(spec, k, horizon)?;
            if role.strictly_worse(plan, declared) {
                plan = declared;
            }
            if let Some(offer) = opponent_last {
                if role.at_least_as_good(offer, plan) {
                    return Ok(Action::Accept);
                }
            }
            Ok(Action::Propose(plan))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn purchaser(ctype: CuriosityType) -> AgentSpec {
        AgentSpec {
            role: Role::Purchaser,
            ctype,
            initial_reserve: 15.0,
            info_base: 1e5,
            info_scale: 1e5,
            curious_counts: CuriousCounts::Opponent,
            strategy: StrategyParams { kappa: 0.1, beta: 4.0, gamma: 2.0, pace_horizon: 10 },
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn delta_examples() {
        use CuriosityType::*;
        assert_eq!(delta(Uncurious, 1e5, 1e5, 7, 3).unwrap(), 1.0);
        // ln(1e5)/ln(1e6) and its inverse
        assert!(close(delta(Secretive, 1e5, 1e5, 9, 9).unwrap(), 5.0 / 6.0, 1e-12));
        assert!(close(delta(Curious, 1e5, 1e5, 9, 9).unwrap(), 1.2, 1e-12));
        assert!(close(delta(CuriousSecretive, 1e5, 1e5, 9, 9).unwrap(), 1.0, 1e-12));
        assert_eq!(delta(Secretive, 1.0, 1e5, 1, 1), Err(ParamError::InfoBase(1.0)));
        for t in CuriosityType::ALL {
            assert_eq!(delta(t, 1e5, 1e5, 0, 0).unwrap(), 1.0);
        }
    }

    #[test]
    fn literal_counts_switch() {
        let mut p = purchaser(CuriosityType::Curious);
        assert!(close(p.info_factor(0, 9).unwrap(), 1.2, 1e-12));
        assert_eq!(p.info_factor(9, 0).unwrap(), 1.0);
        p.curious_counts = CuriousCounts::Own;
        assert!(close(p.info_factor(9, 0).unwrap(), 1.2, 1e-12));
    }

    #[test]
    fn utility_examples() {
        let unc = purchaser(CuriosityType::Uncurious);
        assert!(close(utility(&unc, Some(10.0), 3, 3).unwrap(), 5.0, 1e-12));
        let sec = purchaser(CuriosityType::Secretive);
        assert!(close(utility(&sec, None, 9, 0).unwrap(), -2.5, 1e-12));
        let cur = purchaser(CuriosityType::Curious);
        assert!(close(utility(&cur, None, 0, 9).unwrap(), 3.0, 1e-12));
    }

    #[test]
    fn seller_mirror_signs() {
        let mut s = purchaser(CuriosityType::Secretive);
        s.role = Role::Seller;
        s.strategy.gamma = 30.0;
        assert!(utility(&s, None, 9, 9).unwrap() < 0.0);
        assert!(reserve_price(&s, 9, 9).unwrap() > 15.0);
        s.ctype = CuriosityType::Curious;
        assert!(utility(&s, None, 9, 9).unwrap() > 0.0);
        assert!(reserve_price(&s, 9, 9).unwrap() < 15.0);
    }

    #[test]
    fn reserve_examples() {
        let unc = purchaser(CuriosityType::Uncurious);
        for k in [0, 1, 50, 900] {
            assert_eq!(reserve_price(&unc, k, k).unwrap(), 15.0);
        }
        assert!(close(reserve_price(&purchaser(CuriosityType::Secretive), 9, 0).unwrap(), 12.5, 1e-9));
        assert!(close(reserve_price(&purchaser(CuriosityType::Curious), 0, 9).unwrap(), 18.0, 1e-9));
    }

    #[test]
    fn planned_proposal_examples() {
        let p = purchaser(CuriosityType::Uncurious);
        assert!(close(planned_proposal(&p, 0).unwrap(), 3.3, 1e-12));
        assert!(close(planned_proposal(&p, 10).unwrap(), 15.0, 1e-12));
        let expected = 2.0 + 13.0 * (0.1 + 0.9 * 0.5f64.powf(0.25));
        assert!(close(planned_proposal(&p, 5).unwrap(), expected, 1e-12));
        assert!(close(expected, 13.138, 1e-3));
        assert_eq!(planned_with_horizon(&p, 3, 0), Err(ParamError::PaceHorizon));
    }

    #[test]
    fn decide_examples() {
        // golden trace purchaser at k = 4: plan 12.66
        let mut p = purchaser(CuriosityType::Uncurious);
        p.strategy.beta = 1.0;
        p.strategy.pace_horizon = 5;
        assert!(close(planned_proposal(&p, 4).unwrap(), 12.66, 1e-9));
        assert_eq!(decide(&p, 4, 4, Some(11.8)).unwrap(), Action::Accept);
        match decide(&p, 3, 3, Some(13.6)).unwrap() {
            Action::Propose(x) => assert!(close(x, 10.32, 1e-9)),
            other => panic!("expected a proposal, got {other:?}"),
        }

        // secretive: plan 13.14 exceeds the shrunken reserve ~12.98 at k = 5
        let sec = purchaser(CuriosityType::Secretive);
        let plan = planned_proposal(&sec, 5).unwrap();
        let rp = reserve_price(&sec, 5, 5).unwrap();
        assert!(plan > rp && close(rp, 12.98, 0.01));
        assert_eq!(decide(&sec, 5, 5, Some(20.0)).unwrap(), Action::Reject);
    }

    #[test]
    fn offers_beyond_the_reserve_are_never_accepted() {
        let mut p = purchaser(CuriosityType::Uncurious);
        p.strategy.beta = 1.0;
        p.strategy.pace_horizon = 5;
        // plan at k = 6 is 17.34 > 16 but 16 is above the reserve 15
        assert_eq!(decide(&p, 6, 6, Some(16.0)).unwrap(), Action::Reject);
    }

    #[test]
    fn enforced_regime_clamps_and_hurries() {
        let p = AgentSpec {
            strategy: StrategyParams { kappa: 0.1, beta: 1.0, gamma: 2.0, pace_horizon: 1000 },
            ..purchaser(CuriosityType::Uncurious)
        };
        let regime = Regime::Enforced { declared: 15.0, bound: Some(11) };
        // horizon compressed to 10
        match decide_under(&p, 10, 10, Some(40.0), regime).unwrap() {
            Action::Propose(x) => assert!(close(x, 15.0, 1e-9)),
            other => panic!("{other:?}"),
        }
        // past the horizon the plan is clamped at the declared reserve, never rejected
        match decide_under(&p, 30, 30, Some(40.0), regime).unwrap() {
            Action::Propose(x) => assert!(close(x, 15.0, 1e-9)),
            other => panic!("{other:?}"),
        }
        assert_eq!(decide_under(&p, 10, 10, Some(14.0), regime).unwrap(), Action::Accept);

        let cur = AgentSpec { ctype: CuriosityType::Curious, ..p };
        assert!(delay_pays(&cur, 11).unwrap());
        assert!(!delay_pays(&p, 11).unwrap());
        assert!(!delay_pays(&AgentSpec { ctype: CuriosityType::Secretive, ..p }, 11).unwrap());
        // the curious agent keeps its own pace
        match decide_under(&cur, 10, 10, Some(40.0), regime).unwrap() {
            Action::Propose(x) => assert!(x < 4.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors() {
        let mut p = purchaser(CuriosityType::Uncurious);
        assert!(p.validate().is_ok());
        p.strategy.gamma = 16.0;
        assert!(matches!(p.validate(), Err(ParamError::Gamma { .. })));
        p.strategy.gamma = 2.0;
        p.strategy.kappa = 1.5;
        assert_eq!(p.validate(), Err(ParamError::Kappa(1.5)));
        p.strategy.kappa = 0.1;
        p.info_scale = 0.0;
        assert_eq!(p.validate(), Err(ParamError::InfoScale(0.0)));
    }
}

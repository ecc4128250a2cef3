//! Utility, reserve-price and strategy axioms on randomized agents.

use curiobarg::agents::{
    self, concession_fraction, planned_proposal, reserve_price, utility, AgentSpec, CuriosityType,
    CuriousCounts, StrategyParams,
};
use curiobarg::model::Role;
use proptest::prelude::*;

fn ctype() -> impl Strategy<Value = CuriosityType> {
    prop::sample::select(CuriosityType::ALL.to_vec())
}

fn role() -> impl Strategy<Value = Role> {
    prop_oneof![Just(Role::Purchaser), Just(Role::Seller)]
}

fn counts() -> impl Strategy<Value = CuriousCounts> {
    prop_oneof![Just(CuriousCounts::Opponent), Just(CuriousCounts::Own)]
}

prop_compose! {
    fn agent_of(role: Role, ctype: CuriosityType)(
        reserve in 0.5f64..100.0,
        base in 1.5f64..1e6,
        scale_exp in -3.0f64..6.0,
        counts in counts(),
        kappa in 0.0f64..=1.0,
        beta in 0.1f64..10.0,
        fraction in 0.05f64..0.95,
        horizon in 1u32..2000,
    ) -> AgentSpec {
        let gamma = match role {
            Role::Purchaser => reserve * fraction,
            Role::Seller => reserve * (1.0 + fraction),
        };
        AgentSpec {
            role,
            ctype,
            initial_reserve: reserve,
            info_base: base,
            info_scale: 10f64.powf(scale_exp),
            curious_counts: counts,
            strategy: StrategyParams { kappa, beta, gamma, pace_horizon: horizon },
        }
    }
}

fn any_agent() -> impl Strategy<Value = AgentSpec> {
    (role(), ctype()).prop_flat_map(|(r, t)| agent_of(r, t))
}

/// Independent evaluation of `log_n(n + c k)`.
fn log_n(spec: &AgentSpec, k: usize) -> f64 {
    (spec.info_base + spec.info_scale * k as f64).log(spec.info_base)
}

/// Oracle for the purchaser-oriented information factor, before role mirroring.
fn oracle_factor(spec: &AgentSpec, k_own: usize, k_opp: usize) -> f64 {
    let collected_k = match spec.curious_counts {
        CuriousCounts::Opponent => k_opp,
        CuriousCounts::Own => k_own,
    };
    let f = match spec.ctype {
        CuriosityType::Uncurious => 1.0,
        CuriosityType::Secretive => 1.0 / log_n(spec, k_own),
        CuriosityType::Curious => log_n(spec, collected_k),
        CuriosityType::CuriousSecretive => log_n(spec, collected_k) / log_n(spec, k_own),
    };
    match spec.role {
        Role::Purchaser => f,
        Role::Seller => 1.0 / f,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn reserve_price_is_the_utility_root(spec in any_agent(), k_own in 0usize..=1000, k_opp in 0usize..=1000) {
        let rp = reserve_price(&spec, k_own, k_opp).unwrap();
        let u = utility(&spec, Some(rp), k_own, k_opp).unwrap();
        prop_assert!(u.abs() <= 1e-9, "u = {u}");
        let expected = spec.initial_reserve * oracle_factor(&spec, k_own, k_opp);
        prop_assert!((rp - expected).abs() <= 1e-9 * expected.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn utility_is_strictly_monotone_in_price(
        spec in any_agent(),
        k_own in 0usize..1000,
        k_opp in 0usize..1000,
        a in 0.01f64..200.0,
        gap in 1e-6f64..50.0,
    ) {
        let (lo, hi) = (a, a + gap);
        let u_lo = utility(&spec, Some(lo), k_own, k_opp).unwrap();
        let u_hi = utility(&spec, Some(hi), k_own, k_opp).unwrap();
        match spec.role {
            Role::Purchaser => prop_assert!(u_lo > u_hi),
            Role::Seller => prop_assert!(u_lo < u_hi),
        }
    }

    #[test]
    fn secretive_utility_falls_with_own_messages(
        r in role(),
        spec_seed in agent_of(Role::Purchaser, CuriosityType::Secretive),
        price in prop::option::of(0.01f64..200.0),
        k in 0usize..1000,
        step in 1usize..100,
        k_opp in 0usize..1000,
    ) {
        let spec = AgentSpec { role: r, ..spec_seed };
        let before = utility(&spec, price, k, k_opp).unwrap();
        let after = utility(&spec, price, k + step, k_opp).unwrap();
        prop_assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn curious_utility_rises_with_opponent_messages(
        r in role(),
        spec_seed in agent_of(Role::Purchaser, CuriosityType::Curious),
        price in prop::option::of(0.01f64..200.0),
        k in 0usize..1000,
        step in 1usize..100,
        k_own in 0usize..1000,
    ) {
        let spec = AgentSpec { role: r, curious_counts: CuriousCounts::Opponent, ..spec_seed };
        let before = utility(&spec, price, k_own, k).unwrap();
        let after = utility(&spec, price, k_own, k + step).unwrap();
        prop_assert!(after > before, "{after} !> {before}");
    }

    #[test]
    fn curious_secretive_has_both_monotonicities(
        r in role(),
        spec_seed in agent_of(Role::Purchaser, CuriosityType::CuriousSecretive),
        price in prop::option::of(0.01f64..200.0),
        k_own in 0usize..1000,
        k_opp in 0usize..1000,
        step in 1usize..100,
    ) {
        let spec = AgentSpec { role: r, curious_counts: CuriousCounts::Opponent, ..spec_seed };
        let base = utility(&spec, price, k_own, k_opp).unwrap();
        prop_assert!(utility(&spec, price, k_own + step, k_opp).unwrap() < base);
        prop_assert!(utility(&spec, price, k_own, k_opp + step).unwrap() > base);
    }

    #[test]
    fn uncurious_utility_ignores_counts(
        r in role(),
        spec_seed in agent_of(Role::Purchaser, CuriosityType::Uncurious),
        price in prop::option::of(0.01f64..200.0),
        a in (0usize..1000, 0usize..1000),
        b in (0usize..1000, 0usize..1000),
    ) {
        let spec = AgentSpec { role: r, ..spec_seed };
        let ua = utility(&spec, price, a.0, a.1).unwrap();
        let ub = utility(&spec, price, b.0, b.1).unwrap();
        prop_assert_eq!(ua, ub);
        let expected = match (r, price) {
            (Role::Purchaser, Some(p)) => spec.initial_reserve - p,
            (Role::Seller, Some(p)) => p - spec.initial_reserve,
            (_, None) => 0.0,
        };
        prop_assert!((ua - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn plans_concede_monotonically(spec in any_agent(), k in 0usize..3000, step in 1usize..50) {
        let now = planned_proposal(&spec, k).unwrap();
        let later = planned_proposal(&spec, k + step).unwrap();
        match spec.role {
            Role::Purchaser => prop_assert!(later >= now),
            Role::Seller => prop_assert!(later <= now),
        }
    }

    #[test]
    fn concession_fraction_endpoints(spec in any_agent()) {
        let s = &spec.strategy;
        prop_assert_eq!(concession_fraction(s, 0, s.pace_horizon), s.kappa);
        let end = concession_fraction(s, s.pace_horizon as usize, s.pace_horizon);
        prop_assert!((end - 1.0).abs() <= 1e-12);
        let target = planned_proposal(&spec, s.pace_horizon as usize).unwrap();
        prop_assert!((target - spec.initial_reserve).abs() <= 1e-9 * spec.initial_reserve.max(1.0));
    }

    #[test]
    fn purchaser_reserves_are_ordered_by_type(
        base in agent_of(Role::Purchaser, CuriosityType::Uncurious),
        k in 1usize..1000,
    ) {
        let with = |ctype| AgentSpec { ctype, curious_counts: CuriousCounts::Opponent, ..base };
        let rp = |ctype| reserve_price(&with(ctype), k, k).unwrap();
        let (cur, unc, sec) =
            (rp(CuriosityType::Curious), rp(CuriosityType::Uncurious), rp(CuriosityType::Secretive));
        prop_assert!(cur >= unc && unc >= sec, "{cur} {unc} {sec}");
    }

    #[test]
    fn delta_matches_direct_evaluation(
        t in ctype(),
        base in 1.5f64..1e6,
        scale in 0.001f64..1e6,
        k_own in 0usize..1000,
        k_opp in 0usize..1000,
    ) {
        let d = agents::delta(t, base, scale, k_own, k_opp).unwrap();
        let l = |k: usize| (base + scale * k as f64).ln() / base.ln();
        let expected = match t {
            CuriosityType::Uncurious => 1.0,
            CuriosityType::Secretive => 1.0 / l(k_own),
            CuriosityType::Curious => l(k_opp),
            CuriosityType::CuriousSecretive => l(k_opp) / l(k_own),
        };
        prop_assert!(d > 0.0);
        prop_assert!((d - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn documented_values() {
    let d = |t, a, b| agents::delta(t, 1e5, 1e5, a, b).unwrap();
    assert_eq!(d(CuriosityType::Uncurious, 7, 3), 1.0);
    // ln(1e5) / ln(1e6) and its reciprocal
    assert!((d(CuriosityType::Secretive, 9, 9) - 5.0 / 6.0).abs() < 1e-12);
    assert!((d(CuriosityType::Curious, 9, 9) - 1.2).abs() < 1e-12);
    assert!(agents::delta(CuriosityType::Curious, 1.0, 1.0, 0, 0).is_err());
}

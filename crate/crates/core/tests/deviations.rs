mod common;

use csi_market::verifier::{probe_grid, strategy_payoff, OpponentView};
use csi_market::{
    certify_ne, expected_payoff, ne_basic, ne_unequal_costs, solve, structural_checks,
    EquilibriumProfile, HyperbolicSegment, InfoState, MarketParams, PriceCdf, PrimaryStrategy,
};

use common::{band_points, reached};

fn profile_of(params: &MarketParams, strategies: [PrimaryStrategy; 2]) -> EquilibriumProfile {
    let mut ne = ne_basic(params).unwrap();
    ne.strategies = strategies;
    ne
}

#[test]
fn equilibria_certify_at_every_band() {
    for (name, p) in band_points() {
        let ne = solve(&p).unwrap();
        let report = certify_ne(&p, &ne, 2_000).unwrap();
        assert!(report.epsilon <= 1e-6 * p.span(), "{name}: {}", report.epsilon);
        assert!(report.epsilon >= -1e-9 * p.span(), "{name}: {}", report.epsilon);
    }
}

#[test]
fn payoff_is_flat_on_support_and_lower_off_it() {
    for (name, p) in band_points() {
        let ne = solve(&p).unwrap();
        for (me, info, d) in reached(&ne) {
            let opp = &ne.strategies[1 - me];
            let view = OpponentView::new(&p, me, opp).unwrap();
            let current = view.gross_of_cdf(info, d) - if info == InfoState::NoAcquire { 0.0 } else { p.s[me] };
            let tol = 1e-9 * p.span();
            for seg in d.segments.iter().filter(|s| s.b > 0.0) {
                for k in 0..=50 {
                    let x = seg.lo + (seg.hi - seg.lo) * k as f64 / 50.0;
                    let x = x.min(p.v - 1e-9 * p.span());
                    let value = expected_payoff(&p, me, info, x, opp).unwrap();
                    assert!((value - current).abs() <= tol, "{name} p{me} {info:?} x={x}: {value} vs {current}");
                }
            }
            for x in probe_grid(&p, &view, 500) {
                let value = expected_payoff(&p, me, info, x, opp).unwrap();
                assert!(value <= current + tol, "{name} p{me} {info:?} x={x}: {value} > {current}");
            }
        }
    }
}

#[test]
fn gain_bound_tightens_with_the_grid() {
    for (name, p) in band_points() {
        let ne = solve(&p).unwrap();
        let reports: Vec<_> = [100, 1_000, 10_000]
            .iter()
            .map(|&g| certify_ne(&p, &ne, g).unwrap())
            .collect();
        for pair in reports.windows(2) {
            assert!(pair[1].epsilon_upper <= pair[0].epsilon_upper + 1e-12, "{name}");
            assert!(pair[1].epsilon >= pair[0].epsilon - 1e-12, "{name}");
            assert!(pair[1].epsilon <= pair[1].epsilon_upper + 1e-12, "{name}");
        }
    }
}

#[test]
fn universal_acquisition_loses_exactly_the_cost() {
    let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
    let bertrand = PrimaryStrategy::always_acquire(
        PriceCdf::pure_price(0.0, 50.0, 0.0),
        PriceCdf::point_mass_at_v(0.0, 50.0),
    );
    let current = strategy_payoff(&p, 0, &bertrand, &bertrand).unwrap();
    let deviation = expected_payoff(&p, 0, InfoState::NoAcquire, 50.0, &bertrand).unwrap();
    assert!((deviation - current - 8.0).abs() < 1e-12);
    let report = certify_ne(&p, &profile_of(&p, [bertrand.clone(), bertrand]), 1_000).unwrap();
    assert!((report.epsilon - 8.0).abs() < 1e-9, "{}", report.epsilon);
}

#[test]
fn pure_acquire_against_pure_skip_is_not_stable() {
    let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
    let base = 25.0;
    let phi = PriceCdf::new(0.0, 50.0, vec![HyperbolicSegment::scaled(base, 50.0, 2.0, base, 0.0)], 0.0);
    let psi = PriceCdf::new(0.0, 50.0, vec![HyperbolicSegment::new(base, 50.0, 1.0, base)], 0.5);
    let acquirer = PrimaryStrategy::always_acquire(phi, PriceCdf::point_mass_at_v(0.0, 50.0));
    let skipper = PrimaryStrategy::never_acquire(psi);
    let report = certify_ne(&p, &profile_of(&p, [acquirer, skipper]), 2_000).unwrap();
    assert!(report.primaries[0].gain > 1.0, "{:?}", report.primaries[0]);
}

#[test]
fn skipping_below_threshold_is_not_stable() {
    let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
    let pure_n = solve(&MarketParams::symmetric(50.0, 0.0, 0.5, 13.0)).unwrap();
    let report = certify_ne(&p, &profile_of(&p, pure_n.strategies), 2_000).unwrap();
    assert!(report.epsilon > 1.0, "{}", report.epsilon);
    assert_eq!(
        report.primaries[0].best_decision,
        csi_market::verifier::Decision::Acquire
    );
}

#[test]
fn perturbed_mixing_is_not_stable() {
    let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
    let mut ne = ne_basic(&p).unwrap();
    ne.strategies[1].p_acquire += 0.1;
    let report = certify_ne(&p, &ne, 2_000).unwrap();
    assert!(report.primaries[0].gain > 1e-3, "{}", report.primaries[0].gain);
}

#[test]
fn equilibrium_shapes_pass_structure_checks() {
    for (name, p) in band_points() {
        let report = structural_checks(&solve(&p).unwrap());
        assert!(report.passed(), "{name}: {:?}", report.failures());
    }
}

#[test]
fn interior_atom_is_flagged() {
    let p = MarketParams::symmetric(50.0, 0.0, 0.5, 8.0);
    let mut ne = ne_basic(&p).unwrap();
    ne.strategies[0].no_acquire = Some(PriceCdf::pure_price(0.0, 50.0, 40.0));
    let report = structural_checks(&ne);
    assert!(report
        .failures()
        .iter()
        .any(|c| c.name == "no_atom_below_ceiling" && c.primary == Some(0)));
}

#[test]
fn unequal_costs_put_ceiling_atoms_only_on_the_costlier_primary() {
    for (s1, s2) in [(4.0, 8.0), (4.0, 13.0)] {
        let p = MarketParams::symmetric(50.0, 0.0, 0.5, 0.0).with_costs(s1, s2);
        let report = structural_checks(&ne_unequal_costs(&p).unwrap());
        for (me, info, mass) in &report.ceiling_atoms {
            let est0_step = *info == InfoState::AcquiredEst0 && *mass == 1.0;
            assert!(est0_step || (*me == 1 && *info == InfoState::NoAcquire), "{me} {info:?} {mass}");
        }
        assert!(report
            .ceiling_atoms
            .iter()
            .any(|(me, info, _)| *me == 1 && *info == InfoState::NoAcquire));
    }
}

#![allow(dead_code)]

use csi_market::{EquilibriumProfile, InfoState, MarketParams, PriceCdf};

/// One parameter point inside every band of every two-primary scenario.
pub fn band_points() -> Vec<(&'static str, MarketParams)> {
    let sym = |s: f64| MarketParams::symmetric(50.0, 0.0, 0.5, s);
    let avail = |s: f64| MarketParams::symmetric(25.0, 0.0, 0.5, s).with_availability(0.7, 0.4);
    vec![
        ("basic/pure-N", sym(13.0)),
        ("basic/mixed", sym(8.0)),
        ("noisy/pure-N", sym(9.0).with_qs(0.8)),
        ("noisy/mixed", sym(4.0).with_qs(0.8)),
        ("costs/pure-N", sym(0.0).with_costs(13.0, 14.0)),
        ("costs/one-sided", sym(0.0).with_costs(4.0, 13.0)),
        ("costs/both-mix", sym(0.0).with_costs(4.0, 8.0)),
        ("availability/pure-N", avail(6.5)),
        ("availability/one-sided", avail(5.0)),
        ("availability/both-mix", avail(2.0)),
    ]
}

/// Mixed-band points only.
pub fn mixed_points() -> Vec<(&'static str, MarketParams)> {
    band_points()
        .into_iter()
        .filter(|(name, _)| !name.ends_with("pure-N"))
        .collect()
}

/// Distributions the profile actually uses.
pub fn reached(profile: &EquilibriumProfile) -> Vec<(usize, InfoState, &PriceCdf)> {
    let mut out = Vec::new();
    for (me, st) in profile.strategies.iter().enumerate() {
        for info in InfoState::ALL {
            if st.reaches(info) {
                if let Some(d) = st.cdf(info) {
                    out.push((me, info, d));
                }
            }
        }
    }
    out
}

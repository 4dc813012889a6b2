//! Bundled example networks.

use crate::netmodel::Network;

pub const TOYBAY_JSON: &str = include_str!("../fixtures/toybay.json");
pub const TOYBAY_STRESS_JSON: &str = include_str!("../fixtures/toybay_stress.json");

/// 12 buses, 5 blocks, 6 switches, 4 DGs plus a substation, 6 loads in 2 clusters.
pub fn toybay() -> Network {
    Network::from_json(TOYBAY_JSON).expect("bundled fixture is valid")
}

/// `toybay` with a cheap but tightly limited substation feed and slow DGs.
pub fn toybay_stress() -> Network {
    Network::from_json(TOYBAY_STRESS_JSON).expect("bundled fixture is valid")
}

pub const TWINBAY_JSON: &str = include_str!("../fixtures/twinbay.json");

/// Two three-phase feeder sections that can run as separate components, each
/// with a controllable DG. Used for real-time control runs.
pub fn twinbay() -> Network {
    Network::from_json(TWINBAY_JSON).expect("bundled fixture is valid")
}

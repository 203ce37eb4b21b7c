//! Combinatorial decomposition of postcritically finite branched coverings by
//! stable multicurves, plus numerical verification of explicit PCF rational maps.
//!
//! The combinatorial half models a marked sphere cut along a multicurve: curve
//! classes, pieces, and an ordered pullback table describing how the covering
//! map lifts each curve. On top of that it computes transition matrices,
//! growth classes (constant / bounded / coiling), Thurston obstructions and
//! Levy cycles, refinements to a growth dichotomy, and renormalization
//! certificates. The numerical half verifies critical portraits of concrete
//! rational maps, solves for their defining parameters by Newton iteration,
//! and renders basins of attraction.

pub mod analysis;
pub mod curve_complex;
pub mod decomposition;
pub mod exact;
pub mod numerics;
pub mod pullback;
pub mod report;

/// Embedded copies of the bundled fixture systems (also shipped in `fixtures/`).
pub mod fixtures {
    use crate::curve_complex::CurveSystem;

    pub const COR55: &str = include_str!("../fixtures/cor55.json");
    pub const LEVY: &str = include_str!("../fixtures/levy.json");
    pub const CANTOR: &str = include_str!("../fixtures/cantor.json");
    pub const CHAIN: &str = include_str!("../fixtures/chain.json");
    pub const THM14: &str = include_str!("../fixtures/thm14.json");
    pub const COILED_FATOU: &str = include_str!("../fixtures/coiled_fatou.json");

    /// All fixtures as `(name, json)` pairs.
    pub const ALL: [(&str, &str); 6] = [
        ("cor55", COR55),
        ("levy", LEVY),
        ("cantor", CANTOR),
        ("chain", CHAIN),
        ("thm14", THM14),
        ("coiled-fatou", COILED_FATOU),
    ];

    /// Parses an embedded fixture by name. Panics on unknown names: fixtures
    /// are compiled in, so a miss is a programming error.
    pub fn load(name: &str) -> CurveSystem {
        let json = ALL
            .iter()
            .find(|(n, _)| *n == name)
            .unwrap_or_else(|| panic!("unknown fixture {name}"))
            .1;
        serde_json::from_str(json).expect("embedded fixture parses")
    }
}

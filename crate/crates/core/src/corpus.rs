//! Bundled example contracts.

pub const PIZZA_SIMPLE: &str = include_str!("../specs/pizza_simple.pact");
pub const PIZZA_TIMED: &str = include_str!("../specs/pizza_timed.pact");
pub const PIZZA_WARRANTY: &str = include_str!("../specs/pizza_warranty.pact");
pub const PIZZA_PROMISSORY: &str = include_str!("../specs/pizza_promissory.pact");
pub const PIZZA_POWER: &str = include_str!("../specs/pizza_power.pact");
pub const PIZZA_TYPES: &str = include_str!("../specs/pizza_types.pact");

/// `(file name, source)` for every bundled contract.
pub const BUNDLED: [(&str, &str); 6] = [
    ("pizza_simple.pact", PIZZA_SIMPLE),
    ("pizza_timed.pact", PIZZA_TIMED),
    ("pizza_warranty.pact", PIZZA_WARRANTY),
    ("pizza_promissory.pact", PIZZA_PROMISSORY),
    ("pizza_power.pact", PIZZA_POWER),
    ("pizza_types.pact", PIZZA_TYPES),
];

/// Look a bundled contract up by file name, with or without the extension.
pub fn bundled(name: &str) -> Option<&'static str> {
    let stem = name.trim_end_matches(".pact");
    BUNDLED
        .iter()
        .find(|(file, _)| file.trim_end_matches(".pact") == stem)
        .map(|(_, src)| *src)
}

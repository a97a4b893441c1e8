//! JSON Schema documents for every output the CLI writes.

macro_rules! schemas {
    ($($name:literal),* $(,)?) => {
        pub const NAMES: &[&str] = &[$($name),*];

        pub fn get(name: &str) -> &'static str {
            match name {
                $($name => include_str!(concat!("../schemas/", $name, ".json")),)*
                _ => unreachable!("names are checked by the argument parser"),
            }
        }
    };
}

schemas!(
    "alpha",
    "classify",
    "normalize",
    "transport",
    "distance",
    "analytic-disc",
    "geodesic-certificate",
    "between-certificate",
    "blaschke",
    "balanced",
    "lens",
    "lempert-report",
    "convexity",
    "ball",
    "universal",
    "sweep",
    "plotdata",
    "error",
);

//! Exact rational edge weights.
//!
//! All weight accounting in this crate is exact: weights are ratios of
//! 128-bit integers, so comparisons like `alg <= 4 * opt` never suffer
//! from floating-point noise. Instances are desk-scale, which keeps
//! numerators and denominators tiny compared to the i128 headroom.

use num_rational::Ratio;
use num_traits::Zero;

pub type Weight = Ratio<i128>;

pub fn weight(n: i128) -> Weight {
    Weight::from_integer(n)
}

pub fn frac(numer: i128, denom: i128) -> Weight {
    Weight::new(numer, denom)
}

/// Parses "3" or "7/2" into an exact weight.
pub fn parse_weight(s: &str) -> Result<Weight, String> {
    let bad = |_| format!("invalid rational number {s:?}");
    let w = match s.split_once('/') {
        Some((n, d)) => {
            let numer: i128 = n.trim().parse().map_err(bad)?;
            let denom: i128 = d.trim().parse().map_err(bad)?;
            if denom == 0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            Weight::new(numer, denom)
        }
        None => Weight::from_integer(s.trim().parse().map_err(bad)?),
    };
    Ok(w)
}

/// Renders a weight the way `parse_weight` reads it: "3" or "7/2".
pub fn format_weight(w: &Weight) -> String {
    if w.denom() == &1 {
        w.numer().to_string()
    } else {
        format!("{}/{}", w.numer(), w.denom())
    }
}

pub fn is_positive(w: &Weight) -> bool {
    w > &Weight::zero()
}

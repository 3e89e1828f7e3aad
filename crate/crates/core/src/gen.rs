//! Seeded random scenarios in the style of the reference experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::{Point2, Scenario, ScenarioParams};

/// `m` GBSs uniform in the `box_m × box_m` square, with the mission running
/// diagonally from `(0.1 D, 0.1 D)` to `(0.9 D, 0.9 D)`.
pub fn generate_params(m: usize, box_m: f64, seed: u64) -> Result<ScenarioParams> {
    if m == 0 {
        return Err(Error::Argument("need at least one GBS".into()));
    }
    if !(box_m > 0.0 && box_m.is_finite()) {
        return Err(Error::Argument(format!("box size must be positive, got {box_m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gbs = (0..m)
        .map(|_| Point2::new(rng.gen_range(0.0..box_m), rng.gen_range(0.0..box_m)))
        .collect();
    Ok(ScenarioParams::with_layout(
        gbs,
        Point2::new(0.1 * box_m, 0.1 * box_m),
        Point2::new(0.9 * box_m, 0.9 * box_m),
    ))
}

pub fn generate_scenario(m: usize, box_m: f64, seed: u64) -> Result<Scenario> {
    Scenario::new(generate_params(m, box_m, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_box() {
        let a = generate_params(7, 10_000.0, 3).unwrap();
        let b = generate_params(7, 10_000.0, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_params(7, 10_000.0, 4).unwrap());
        assert!(a.gbs.iter().all(|g| (0.0..10_000.0).contains(&g.x) && (0.0..10_000.0).contains(&g.y)));
        assert_eq!(a.u0, Point2::new(1000.0, 1000.0));
        assert_eq!(a.u_f, Point2::new(9000.0, 9000.0));
        assert!(generate_params(0, 1.0, 0).is_err());
    }
}

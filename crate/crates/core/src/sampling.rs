//! Deterministic low-discrepancy sample points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points of the R2 sequence in `[0, 1)²`, rotated by a shift drawn from `seed`.
pub fn r2_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
    // Plastic number, the 2-D analogue of the golden ratio.
    const G: f64 = 1.324_717_957_244_746;
    let alpha = [1.0 / G, 1.0 / (G * G)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 2] = [rng.random(), rng.random()];
    (1..=n)
        .map(|k| {
            let k = k as f64;
            [(shift[0] + k * alpha[0]).fract(), (shift[1] + k * alpha[1]).fract()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_deterministic_and_spread() {
        let a = r2_points(64, 5);
        assert_eq!(a, r2_points(64, 5));
        assert_ne!(a, r2_points(64, 6));
        // Every cell of a 4x4 partition receives a point.
        let mut cells = [0; 16];
        for p in &a {
            assert!((0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]));
            cells[(p[0] * 4.0) as usize * 4 + (p[1] * 4.0) as usize] += 1;
        }
        assert!(cells.iter().all(|&c| c > 0));
    }
}

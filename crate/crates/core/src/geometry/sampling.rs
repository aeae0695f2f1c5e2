//! Seeded random points: in boxes, in balls, and on directions.
//!
//! All draws go through `ChaCha8Rng` so that a seed fixes every sample on
//! every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Ball, Point};
use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn unit_vector(rng: &mut SeededRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

pub fn uniform_in_box<T: Real>(rng: &mut SeededRng, lo: &[T], hi: &[T]) -> Point<T> {
    Point::from_vec(
        lo.iter()
            .zip(hi)
            .map(|(l, h)| {
                let (l, h) = (l.as_f64(), h.as_f64());
                T::lit(l + (h - l) * rng.gen::<f64>())
            })
            .collect(),
    )
}

/// Uniform point of the open ball.
pub fn uniform_in_ball<T: Real>(rng: &mut SeededRng, ball: &Ball<T>) -> Point<T> {
    let n = ball.dim();
    let dir = unit_vector(rng, n);
    let u: f64 = rng.gen();
    let rho = ball.radius.as_f64() * u.powf(1.0 / n as f64);
    along(ball, &dir, rho)
}

/// Uniform point on the sphere of radius `shell_factor * r`, just inside the
/// open ball. Points there detect thin caps of the ball poking out of a
/// region far more often than volume samples do.
pub fn on_inner_shell<T: Real>(rng: &mut SeededRng, ball: &Ball<T>) -> Point<T> {
    let dir = unit_vector(rng, ball.dim());
    along(ball, &dir, ball.radius.as_f64() * shell_factor::<T>())
}

pub fn shell_factor<T: Real>() -> f64 {
    1.0 - (8.0 * T::epsilon().as_f64()).max(1e-9)
}

fn along<T: Real>(ball: &Ball<T>, dir: &[f64], rho: f64) -> Point<T> {
    Point::from_vec(
        ball.center
            .coords()
            .iter()
            .zip(dir)
            .map(|(c, d)| T::lit(c.as_f64() + rho * d))
            .collect(),
    )
}

/// The `m` probe points used to falsify containment of `ball`: the first
/// half uniform in the ball, the rest on the inner shell.
pub fn ball_probes<T: Real>(
    ball: &Ball<T>,
    m: usize,
    seed: u64,
) -> impl Iterator<Item = Point<T>> + '_ {
    let mut rng = seeded(seed);
    let volume = m.div_ceil(2);
    (0..m).map(move |k| {
        if k < volume {
            uniform_in_ball(&mut rng, ball)
        } else {
            on_inner_shell(&mut rng, ball)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_stay_inside_open_ball() {
        let ball = Ball::new(Point::from_f64(&[1.0, -2.0, 0.5]).unwrap(), 3.0).unwrap();
        let pts: Vec<Point<f64>> = ball_probes(&ball, 1000, 7).collect();
        assert_eq!(pts.len(), 1000);
        assert!(pts.iter().all(|p| ball.contains(p)));
    }

    #[test]
    fn probes_are_reproducible() {
        let ball = Ball::new(Point::from_f64(&[0.0, 0.0]).unwrap(), 1.0).unwrap();
        let a: Vec<Point<f64>> = ball_probes(&ball, 50, 3).collect();
        let b: Vec<Point<f64>> = ball_probes(&ball, 50, 3).collect();
        let c: Vec<Point<f64>> = ball_probes(&ball, 50, 4).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, 1), derive_seed(0, 2));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}

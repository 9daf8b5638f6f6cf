//! Seeded generators for random metric instances.
//!
//! All randomness in the crate flows through [`ChaCha8Rng`], whose output
//! stream is fixed by its seed on every platform.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::metric::{MetricInstance, Point};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the `index`-th sub-seed of `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_point<R: Rng>(rng: &mut R) -> Point {
    Point::new(rng.gen::<f64>(), rng.gen::<f64>())
}

/// Uniform points in the unit square.
pub fn random_planar_instance<R: Rng>(rng: &mut R, agents: usize, alternatives: usize) -> MetricInstance {
    let points = (0..agents + alternatives).map(|_| random_point(rng)).collect();
    MetricInstance::from_points(agents, alternatives, points).expect("finite points")
}

/// Shortest-path closure of random edge weights in `[0.05, 1)`: a general
/// (typically non-Euclidean) metric.
pub fn random_matrix_instance<R: Rng>(rng: &mut R, agents: usize, alternatives: usize) -> MetricInstance {
    let size = agents + alternatives;
    let mut d = vec![0.0; size * size];
    for i in 0..size {
        for j in (i + 1)..size {
            let w = rng.gen_range(0.05..1.0);
            d[i * size + j] = w;
            d[j * size + i] = w;
        }
    }
    for k in 0..size {
        for i in 0..size {
            for j in 0..size {
                let via = d[i * size + k] + d[k * size + j];
                if via < d[i * size + j] {
                    d[i * size + j] = via;
                }
            }
        }
    }
    // Closure is symmetric in exact arithmetic; copy the upper triangle so it
    // is symmetric bit-for-bit.
    for i in 0..size {
        for j in (i + 1)..size {
            d[j * size + i] = d[i * size + j];
        }
    }
    MetricInstance::from_matrix(agents, alternatives, d).expect("shortest-path closure is a metric")
}

/// Planar instance where every agent stands on its own alternative; the
/// first `agents` alternatives are the agents' locations and `extra`
/// further alternatives are scattered uniformly.
pub fn random_colocated_instance<R: Rng>(rng: &mut R, agents: usize, extra: usize) -> MetricInstance {
    let agent_points: Vec<Point> = (0..agents).map(|_| random_point(rng)).collect();
    let mut alts = agent_points.clone();
    alts.extend((0..extra).map(|_| random_point(rng)));
    MetricInstance::from_planar(&agent_points, &alts).expect("finite points")
}

/// Either kind of instance with `n, m` drawn from `1..=max_size`.
pub fn random_instance<R: Rng>(rng: &mut R, max_size: usize) -> MetricInstance {
    let n = rng.gen_range(1..=max_size);
    let m = rng.gen_range(1..=max_size);
    if rng.gen_bool(0.5) {
        random_matrix_instance(rng, n, m)
    } else {
        random_planar_instance(rng, n, m)
    }
}

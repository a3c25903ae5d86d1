//! Deterministic synthetic sphere arrangements.
//!
//! Shared by the test suites and the CLI self-test: linear chains with
//! mixed radii, a branched star, and seeded rigid motions. Every fixture
//! has a tree intersection graph, so its planar tiling covers the surface
//! exactly once and the quadrature area check is a meaningful oracle.

use crate::geom::Vec3;
use crate::mol_ingest::{Sphere, SphereOrigin, SphereSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sphere(index: usize, centre: Vec3, radius: f64) -> Sphere {
    Sphere {
        centre,
        radius,
        origin: SphereOrigin::Atom {
            index,
            element: "C".into(),
        },
    }
}

/// One sphere of the given radius at the origin.
pub fn single(radius: f64) -> SphereSet {
    SphereSet {
        name: format!("single-{radius}"),
        spheres: vec![sphere(0, Vec3::ZERO, radius)],
    }
}

/// Chain overlap factor: adjacent centres sit at this fraction of the
/// radius sum, inside the intersection window |rᵢ − rⱼ| < d < rᵢ + rⱼ and
/// above every second-neighbour contact threshold of the radii below.
const CHAIN_OVERLAP: f64 = 0.515;

/// Per-length radius profiles, all within [1.5, 2.25]; the largest sphere
/// sits inside so the ends are small caps.
fn chain_radii(n: usize) -> Vec<f64> {
    match n {
        2 => vec![2.25, 1.5],
        3 => vec![1.6, 2.25, 1.5],
        4 => vec![1.5, 2.25, 2.1, 1.6],
        5 => vec![1.5, 2.0, 2.25, 2.0, 1.5],
        6 => vec![1.5, 1.9, 2.25, 2.2, 1.85, 1.5],
        7 => vec![1.5, 1.85, 2.1, 2.25, 2.1, 1.85, 1.5],
        _ => vec![1.5, 1.85, 2.1, 2.25, 2.25, 2.1, 1.85, 1.5],
    }
}

/// A straight chain of `n` spheres (2 ≤ n ≤ 8) with mixed radii. The
/// intersection graph is a path: adjacent spheres overlap, second
/// neighbours stay disjoint.
pub fn chain(n: usize) -> SphereSet {
    assert!((2..=8).contains(&n), "chain fixtures cover 2..=8 spheres");
    let radii = chain_radii(n);
    let mut spheres = Vec::with_capacity(n);
    let mut x = 0.0;
    for (i, &r) in radii.iter().enumerate() {
        if i > 0 {
            x += CHAIN_OVERLAP * (radii[i - 1] + r);
        }
        spheres.push(sphere(i, Vec3::new(x, 0.0, 0.0), r));
    }
    SphereSet {
        name: format!("chain-{n}"),
        spheres,
    }
}

/// A branched fixture: a central sphere with four arms along +x, −x, +y,
/// +z. Arms intersect only the centre, so the tree has depth one.
pub fn star() -> SphereSet {
    let (rc, ra) = (2.0, 1.6);
    let d = 0.75 * (rc + ra);
    let arms = [
        Vec3::new(d, 0.0, 0.0),
        Vec3::new(-d, 0.0, 0.0),
        Vec3::new(0.0, d, 0.0),
        Vec3::new(0.0, 0.0, d),
    ];
    let mut spheres = vec![sphere(0, Vec3::ZERO, rc)];
    for (i, &c) in arms.iter().enumerate() {
        spheres.push(sphere(i + 1, c, ra));
    }
    SphereSet {
        name: "star-5".into(),
        spheres,
    }
}

/// Applies a seeded random rotation and translation. Useful for checking
/// that descriptors ignore the molecule's pose.
pub fn rigidly_moved(set: &SphereSet, seed: u64) -> SphereSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // uniform rotation from a normalized quaternion of Gaussian components
    let mut gauss = || {
        let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-12), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let q = [gauss(), gauss(), gauss(), gauss()];
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
    let rot = [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ];
    let shift = Vec3::new(
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-5.0..5.0),
    );
    SphereSet {
        name: set.name.clone(),
        spheres: set
            .spheres
            .iter()
            .map(|s| {
                let c = s.centre;
                let rotated = Vec3::new(
                    rot[0][0] * c.x + rot[0][1] * c.y + rot[0][2] * c.z,
                    rot[1][0] * c.x + rot[1][1] * c.y + rot[1][2] * c.z,
                    rot[2][0] * c.x + rot[2][1] * c.y + rot[2][2] * c.z,
                );
                Sphere {
                    centre: rotated + shift,
                    radius: s.radius,
                    origin: s.origin.clone(),
                }
            })
            .collect(),
    }
}

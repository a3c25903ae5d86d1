//! Piecewise-sphere surface model: which spheres intersect, how much of
//! each sphere survives, total surface area, and the rooted tree that
//! orders the gluing of charts.
//!
//! All geometry downstream works on the rescaled model, whose total area
//! is exactly 4π.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mol_ingest::{SphereOrigin, SphereSet};

#[derive(Debug, Clone)]
pub struct SurfaceModel {
    pub name: String,
    /// Rescaled sphere centres.
    pub centres: Vec<Vec3>,
    /// Rescaled sphere radii.
    pub radii: Vec<f64>,
    /// Intersection graph: `adjacency[i]` lists the spheres whose boundary
    /// circle cuts sphere `i`, ascending.
    pub adjacency: Vec<Vec<usize>>,
    /// Original (pre-rescale) total surface area in Å².
    pub area_original: f64,
    /// Factor applied to all lengths so the area becomes 4π.
    pub scale: f64,
    /// Root sphere of the gluing tree: closest centre to the centroid.
    pub base: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Breadth-first visit order starting at `base`.
    pub order: Vec<usize>,
    /// Origins of spheres removed because another sphere swallowed them.
    pub dropped: Vec<SphereOrigin>,
    lambda: Vec<f64>,
}

impl SurfaceModel {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Signed distance from centre `i` to the plane of the intersection
    /// circle with `j`, measured along the line of centres. Meaningful
    /// only when `j` is adjacent to `i`.
    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        self.lambda[i * self.radii.len() + j]
    }
}

fn pair_lambda(ci: Vec3, ri: f64, cj: Vec3, rj: f64) -> (f64, f64, f64) {
    let d = ci.dist(cj);
    let li = (d * d + ri * ri - rj * rj) / (2.0 * d);
    (d, li, d - li)
}

/// Total area of the union boundary: each sphere keeps its full area minus
/// one cap per intersecting neighbour.
fn union_area(radii: &[f64], adjacency: &[Vec<usize>], lambda: &[f64]) -> f64 {
    let n = radii.len();
    let mut area = 0.0;
    for i in 0..n {
        let mut caps = 0.0;
        for &j in &adjacency[i] {
            caps += radii[i] - lambda[i * n + j];
        }
        area += 4.0 * std::f64::consts::PI * radii[i] * radii[i]
            - 2.0 * std::f64::consts::PI * radii[i] * caps;
    }
    area
}

pub fn build_surface_model(set: &SphereSet) -> Result<SurfaceModel> {
    let total = set.spheres.len();
    let mut alive = vec![true; total];
    let mut dropped = Vec::new();

    // A sphere strictly inside another contributes no boundary; drop the
    // smaller of such a pair until none remain.
    loop {
        let mut hit = None;
        'scan: for i in 0..total {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..total {
                if !alive[j] {
                    continue;
                }
                let d = set.spheres[i].centre.dist(set.spheres[j].centre);
                let (ri, rj) = (set.spheres[i].radius, set.spheres[j].radius);
                if d <= (ri - rj).abs() {
                    hit = Some(if ri < rj { (i, j) } else { (j, i) });
                    break 'scan;
                }
            }
        }
        match hit {
            Some((gone, by)) => {
                log::warn!(
                    "{}: sphere {gone} ({:?}) lies inside sphere {by}; dropping it",
                    set.name,
                    set.spheres[gone].origin
                );
                alive[gone] = false;
                dropped.push(set.spheres[gone].origin.clone());
            }
            None => break,
        }
    }

    let kept: Vec<usize> = (0..total).filter(|&i| alive[i]).collect();
    let n = kept.len();
    let centres: Vec<Vec3> = kept.iter().map(|&i| set.spheres[i].centre).collect();
    let radii: Vec<f64> = kept.iter().map(|&i| set.spheres[i].radius).collect();

    let mut adjacency = vec![Vec::new(); n];
    let mut lambda = vec![f64::NAN; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (d, li, lj) = pair_lambda(centres[i], radii[i], centres[j], radii[j]);
            if (radii[i] - radii[j]).abs() < d && d < radii[i] + radii[j] {
                adjacency[i].push(j);
                adjacency[j].push(i);
                lambda[i * n + j] = li;
                lambda[j * n + i] = lj;
            }
        }
    }

    let components = component_count(n, &adjacency);
    if components > 1 {
        return Err(Error::Disconnected(components));
    }

    let area = union_area(&radii, &adjacency, &lambda);
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::NonPositiveArea(area));
    }

    let scale = (4.0 * std::f64::consts::PI / area).sqrt();
    let centres: Vec<Vec3> = centres.into_iter().map(|c| c * scale).collect();
    let radii: Vec<f64> = radii.into_iter().map(|r| r * scale).collect();
    let lambda: Vec<f64> = lambda.into_iter().map(|l| l * scale).collect();

    let mut centroid = Vec3::ZERO;
    for c in &centres {
        centroid = centroid + *c;
    }
    centroid = centroid * (1.0 / n as f64);
    // Lowest index wins among spheres within a roundoff band of the minimum,
    // so exact ties stay on the same sphere after a rigid motion.
    let dist: Vec<f64> = centres.iter().map(|c| c.dist(centroid)).collect();
    let nearest = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    let tie_band = 1e-9 * (1.0 + nearest);
    let base = (0..n).find(|&i| dist[i] <= nearest + tie_band).unwrap();

    let (parent, children, order) = bfs_tree(n, &adjacency, base);

    Ok(SurfaceModel {
        name: set.name.clone(),
        centres,
        radii,
        adjacency,
        area_original: area,
        scale,
        base,
        parent,
        children,
        order,
        dropped,
        lambda,
    })
}

fn component_count(n: usize, adjacency: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    components
}

/// Level-by-level breadth-first tree; every vertex takes the lowest-index
/// neighbour in the previous level as its parent.
fn bfs_tree(
    n: usize,
    adjacency: &[Vec<usize>],
    base: usize,
) -> (Vec<Option<usize>>, Vec<Vec<usize>>, Vec<usize>) {
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut order = vec![base];
    let mut in_tree = vec![false; n];
    in_tree[base] = true;
    let mut level = vec![base];
    while !level.is_empty() {
        let mut next = Vec::new();
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if let Some(&p) = adjacency[v].iter().filter(|u| level.contains(u)).min() {
                parent[v] = Some(p);
                children[p].push(v);
                next.push(v);
            }
        }
        for &v in &next {
            in_tree[v] = true;
        }
        order.extend(&next);
        level = next;
    }
    (parent, children, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol_ingest::Sphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set_from(spheres: Vec<(f64, f64, f64, f64)>) -> SphereSet {
        SphereSet {
            name: "test".into(),
            spheres: spheres
                .into_iter()
                .enumerate()
                .map(|(i, (x, y, z, r))| Sphere {
                    centre: Vec3::new(x, y, z),
                    radius: r,
                    origin: SphereOrigin::Atom {
                        index: i,
                        element: "C".into(),
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn two_unit_spheres_carry_area_six_pi() {
        let model =
            build_surface_model(&set_from(vec![(0.0, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0, 1.0)]))
                .unwrap();
        assert!((model.lambda(0, 1) * model.scale.recip() - 0.5).abs() < 1e-12);
        assert!((model.area_original - 6.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((model.scale - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(model.base, 0);
        assert_eq!(model.parent, vec![None, Some(0)]);
        assert_eq!(model.order, vec![0, 1]);
    }

    #[test]
    fn pair_area_matches_cap_subtraction_oracle() {
        // carbon–oxygen pair at a C=O bond length
        let (r1, r2, d) = (1.70, 1.52, 1.43);
        let model = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, r1),
            (d, 0.0, 0.0, r2),
        ]))
        .unwrap();
        // oracle: subtract one spherical cap (2πrh) from each full sphere
        let l1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
        let l2 = d - l1;
        let pi = std::f64::consts::PI;
        let oracle = 4.0 * pi * (r1 * r1 + r2 * r2)
            - 2.0 * pi * r1 * (r1 - l1)
            - 2.0 * pi * r2 * (r2 - l2);
        assert!((model.area_original - oracle).abs() < 1e-9);
        assert!((model.area_original - 47.370).abs() < 2e-3);
        assert!((model.lambda(0, 1) / model.scale - 0.9176573).abs() < 1e-6);
        assert!((model.lambda(1, 0) / model.scale - 0.5123427).abs() < 1e-6);
    }

    #[test]
    fn rescaled_model_has_unit_sphere_area() {
        let model = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 1.7),
            (1.43, 0.0, 0.0, 1.52),
            (2.6, 0.9, 0.0, 1.55),
        ]))
        .unwrap();
        let n = model.len();
        let mut lambda = vec![f64::NAN; n * n];
        for i in 0..n {
            for &j in &model.adjacency[i] {
                lambda[i * n + j] = model.lambda(i, j);
            }
        }
        let area = union_area(&model.radii, &model.adjacency, &lambda);
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn engulfed_spheres_are_dropped() {
        let model = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 2.0),
            (0.5, 0.0, 0.0, 0.3),
            (2.5, 0.0, 0.0, 1.8),
        ]))
        .unwrap();
        assert_eq!(model.len(), 2);
        assert_eq!(model.dropped.len(), 1);
        assert!(
            matches!(&model.dropped[0], SphereOrigin::Atom { index: 1, .. }),
            "the swallowed sphere should be the one reported"
        );
    }

    #[test]
    fn nested_engulfing_collapses_to_the_outer_sphere() {
        let model = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 3.0),
            (0.5, 0.0, 0.0, 1.0),
            (0.7, 0.0, 0.0, 0.4),
        ]))
        .unwrap();
        assert_eq!(model.len(), 1);
        assert_eq!(model.dropped.len(), 2);
        assert!((model.area_original - 36.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn disconnected_unions_are_rejected() {
        let err = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (5.0, 0.0, 0.0, 1.0),
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::Disconnected(2)));
        // exact tangency carries no intersection circle either
        let err = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (2.0, 0.0, 0.0, 1.0),
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::Disconnected(2)));
    }

    #[test]
    fn base_sphere_is_nearest_the_centroid() {
        let model = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (1.2, 0.0, 0.0, 1.0),
            (2.4, 0.0, 0.0, 1.0),
        ]))
        .unwrap();
        assert_eq!(model.base, 1);
        assert_eq!(model.parent[0], Some(1));
        assert_eq!(model.parent[2], Some(1));
        assert_eq!(model.order, vec![1, 0, 2]);
    }

    #[test]
    fn bfs_parents_take_the_lowest_index() {
        // sphere 3 touches 1 and 2 but not 0; both candidates are depth one
        let model = build_surface_model(&set_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (1.5, 0.8, 0.0, 1.0),
            (-1.5, 0.8, 0.0, 1.0),
            (0.0, 2.05, 0.0, 1.0),
        ]))
        .unwrap();
        assert_eq!(model.base, 0);
        assert!(!model.adjacency[0].contains(&3));
        assert_eq!(model.adjacency[3], vec![1, 2]);
        assert_eq!(model.parent[3], Some(1));
        assert_eq!(model.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rigid_motions_leave_the_model_invariant() {
        let base = vec![
            (0.0, 0.0, 0.0, 1.7),
            (1.43, 0.0, 0.0, 1.52),
            (2.6, 0.9, 0.0, 1.55),
            (3.1, 2.2, 0.4, 1.8),
        ];
        let reference = build_surface_model(&set_from(base.clone())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = |rng: &mut ChaCha8Rng| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        for _ in 0..25 {
            // rotation from a random unit quaternion, plus a translation
            let (a, b, c, d) = (normal(&mut rng), normal(&mut rng), normal(&mut rng), normal(&mut rng));
            let q = (a * a + b * b + c * c + d * d).sqrt();
            let (w, x, y, z) = (a / q, b / q, c / q, d / q);
            let rot = [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ];
            let t = Vec3::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            let moved: Vec<(f64, f64, f64, f64)> = base
                .iter()
                .map(|&(px, py, pz, r)| {
                    let p = Vec3::new(
                        rot[0][0] * px + rot[0][1] * py + rot[0][2] * pz,
                        rot[1][0] * px + rot[1][1] * py + rot[1][2] * pz,
                        rot[2][0] * px + rot[2][1] * py + rot[2][2] * pz,
                    ) + t;
                    (p.x, p.y, p.z, r)
                })
                .collect();
            let model = build_surface_model(&set_from(moved)).unwrap();
            assert!((model.area_original - reference.area_original).abs() < 1e-9);
            assert!((model.scale - reference.scale).abs() < 1e-12);
            assert_eq!(model.base, reference.base);
            assert_eq!(model.parent, reference.parent);
            assert_eq!(model.adjacency, reference.adjacency);
            for i in 0..reference.len() {
                for &j in &reference.adjacency[i] {
                    assert!((model.lambda(i, j) - reference.lambda(i, j)).abs() < 1e-9);
                }
            }
        }
    }
}

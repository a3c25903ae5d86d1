//! Flattens the rescaled sphere union onto the complex plane.
//!
//! The base sphere is projected stereographically onto the whole plane;
//! every other sphere occupies a disc cut out of its parent's region, with
//! a Möbius map gluing the local chart of that sphere to the global
//! coordinate. On each region the round metric pulls back to
//! `ds² = 2F|dz|²` with `F = (C/2)/(|z − A|² + B)²`.

use crate::error::{Error, Result};
use crate::geom::{fibonacci_sphere, orthonormal_frame, Vec3};
use crate::mobius::{Disc, MobiusMap};
use crate::surface_model::SurfaceModel;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct PlanarRegion {
    pub sphere: usize,
    /// Depth in the gluing tree; the base region is level 0.
    pub level: usize,
    /// Rescaled radius of the sphere this region charts.
    pub radius: f64,
    /// Plane disc owned by this region; `None` for the base region, which
    /// owns the rest of the plane.
    pub disc: Option<Disc>,
    /// Möbius map from the global plane coordinate to this sphere's local
    /// stereographic coordinate.
    pub chart: MobiusMap,
    /// Metric parameters: F = (C/2) / (|z − A|² + B)².
    pub metric_a: Complex64,
    pub metric_b: f64,
    pub metric_c: f64,
    /// Local-chart radius of the boundary circle shared with the parent.
    pub w_boundary: f64,
    /// (r_c − λ_cp)/(r_c + λ_cp) for the edge to the parent.
    pub eps: f64,
    /// (r_p + λ_pc)/(r_p − λ_pc) for the edge to the parent.
    pub eps_tilde: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// True when the disc was shrunk to keep the tiling disjoint, so the
    /// gluing is no longer exactly isometric along this boundary.
    pub perturbed: bool,
}

#[derive(Debug, Clone)]
pub struct PlanarDomain {
    pub regions: Vec<PlanarRegion>,
    pub base: usize,
    /// Construction order (breadth-first from the base).
    pub order: Vec<usize>,
    /// Molecular surface area in Å², before the unit-area rescale.
    pub area_original: f64,
}

impl PlanarDomain {
    /// Deepest region whose disc contains `z`.
    pub fn region_at(&self, z: Complex64) -> usize {
        let mut current = self.base;
        'descend: loop {
            for &c in &self.regions[current].children {
                if let Some(d) = &self.regions[c].disc {
                    if d.contains(z) {
                        current = c;
                        continue 'descend;
                    }
                }
            }
            return current;
        }
    }

    /// Metric coefficient F at `z` (so the area element is 2F dx dy).
    pub fn metric_f(&self, z: Complex64) -> f64 {
        region_f(&self.regions[self.region_at(z)], z)
    }
}

pub fn region_f(region: &PlanarRegion, z: Complex64) -> f64 {
    let q = (z - region.metric_a).norm_sqr() + region.metric_b;
    0.5 * region.metric_c / (q * q)
}

/// Stereographic chart of one sphere: the pole direction maps to ∞ and
/// its antipode to 0; the equator against the pole axis maps to |u| = 1.
struct Chart3D {
    centre: Vec3,
    r: f64,
    n: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl Chart3D {
    fn new(centre: Vec3, r: f64, pole_dir: Vec3) -> Self {
        let n = pole_dir.normalized();
        let (e1, e2) = orthonormal_frame(n);
        Chart3D { centre, r, n, e1, e2 }
    }

    fn map(&self, p: Vec3) -> Complex64 {
        let q = p - self.centre;
        let den = self.r - q.dot(self.n);
        Complex64::new(q.dot(self.e1), q.dot(self.e2)) / den
    }
}

/// Picks the base-chart pole: the candidate direction farthest inside the
/// visible part of the base sphere, so ∞ stays clear of every child disc.
fn base_pole(model: &SurfaceModel) -> Result<Vec3> {
    let b = model.base;
    let cb = model.centres[b];
    let rb = model.radii[b];
    let caps: Vec<(Vec3, f64)> = model.adjacency[b]
        .iter()
        .map(|&j| {
            let dir = (model.centres[j] - cb).normalized();
            let theta = (model.lambda(b, j) / rb).clamp(-1.0, 1.0).acos();
            (dir, theta)
        })
        .collect();
    let mut best_margin = f64::NEG_INFINITY;
    let mut best = Vec3::new(0.0, 0.0, 1.0);
    for v in fibonacci_sphere(2048) {
        let margin = caps
            .iter()
            .map(|(dir, theta)| v.dot(*dir).clamp(-1.0, 1.0).acos() - theta)
            .fold(f64::INFINITY, f64::min);
        if margin > best_margin {
            best_margin = margin;
            best = v;
        }
    }
    if !caps.is_empty() && best_margin <= 0.0 {
        return Err(Error::NoValidPole);
    }
    Ok(best)
}

pub fn build_planar_domain(model: &SurfaceModel) -> Result<PlanarDomain> {
    let n = model.len();
    let base = model.base;

    let mut charts: Vec<Option<Chart3D>> = (0..n).map(|_| None).collect();
    charts[base] = Some(Chart3D::new(
        model.centres[base],
        model.radii[base],
        base_pole(model)?,
    ));

    let mut regions: Vec<Option<PlanarRegion>> = (0..n).map(|_| None).collect();
    regions[base] = Some(PlanarRegion {
        sphere: base,
        level: 0,
        radius: model.radii[base],
        disc: None,
        chart: MobiusMap::IDENTITY,
        metric_a: Complex64::new(0.0, 0.0),
        metric_b: 1.0,
        metric_c: 4.0 * model.radii[base] * model.radii[base],
        w_boundary: f64::NAN,
        eps: f64::NAN,
        eps_tilde: f64::NAN,
        parent: None,
        children: model.children[base].clone(),
        perturbed: false,
    });

    for &c in model.order.iter().skip(1) {
        let p = model.parent[c].expect("non-base sphere has a parent");
        let (rc, rp) = (model.radii[c], model.radii[p]);
        let (cc, cp) = (model.centres[c], model.centres[p]);
        let l_cp = model.lambda(c, p);
        let l_pc = model.lambda(p, c);
        let axis = (cp - cc).normalized();

        let chart_c = Chart3D::new(cc, rc, axis);
        let w = ((rc + l_cp) / (rc - l_cp)).sqrt();
        let eps = (rc - l_cp) / (rc + l_cp);
        let eps_tilde = (rp + l_pc) / (rp - l_pc);

        // three points on the 3D intersection circle fix the gluing map
        let circle_centre = cc + axis * l_cp;
        let rho = (rc * rc - l_cp * l_cp).sqrt();
        let (e1, e2) = orthonormal_frame(axis);
        let parent_chart = charts[p].as_ref().expect("parent chart built first");
        let parent_sigma_inv = regions[p].as_ref().unwrap().chart.inverse();

        let mut sigma = None;
        for attempt in 0..8 {
            let offset = attempt as f64 * 0.7;
            let mut src = [Complex64::new(0.0, 0.0); 3];
            let mut dst = [Complex64::new(0.0, 0.0); 3];
            let mut ok = true;
            for (k, slot) in src.iter_mut().enumerate() {
                let ang = offset + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let pt = circle_centre + e1 * (rho * ang.cos()) + e2 * (rho * ang.sin());
                let z = parent_sigma_inv.apply(parent_chart.map(pt));
                let u = chart_c.map(pt);
                if !z.is_finite() || !u.is_finite() || (u.norm() - w).abs() > 1e-6 * w {
                    ok = false;
                    break;
                }
                *slot = z;
                dst[k] = u;
            }
            if !ok {
                continue;
            }
            if let Ok(m) = MobiusMap::from_three_points(src, dst) {
                // validate on a fourth circle point before accepting
                let ang = offset + 1.0;
                let pt = circle_centre + e1 * (rho * ang.cos()) + e2 * (rho * ang.sin());
                let z = parent_sigma_inv.apply(parent_chart.map(pt));
                if z.is_finite() && (m.apply(z).norm() - w).abs() < 1e-6 * w {
                    sigma = Some(m);
                    break;
                }
            }
        }
        let sigma = sigma.ok_or_else(|| {
            Error::Domain(format!("could not fit a gluing map for sphere {c}"))
        })?;

        let disc = sigma.inverse().disc_image(&Disc {
            centre: Complex64::new(0.0, 0.0),
            radius: w,
        })?;
        let tip = sigma.inverse().apply(Complex64::new(0.0, 0.0));
        if !disc.contains(tip) {
            return Err(Error::Domain(format!(
                "region {c} is oriented inside-out (visible tip fell outside its disc)"
            )));
        }

        let (_, a, b) = sigma.hermitian_form();
        regions[c] = Some(PlanarRegion {
            sphere: c,
            level: regions[p].as_ref().unwrap().level + 1,
            radius: rc,
            disc: Some(disc),
            chart: sigma,
            metric_a: a,
            metric_b: b,
            metric_c: 4.0 * b * rc * rc,
            w_boundary: w,
            eps,
            eps_tilde,
            parent: Some(p),
            children: model.children[c].clone(),
            perturbed: false,
        });
        charts[c] = Some(chart_c);
    }

    let mut regions: Vec<PlanarRegion> = regions.into_iter().map(Option::unwrap).collect();

    // Containment and sibling-overlap repair, parents before children.
    for &s in &model.order {
        let parent_disc = regions[s].disc.clone();
        let kids = regions[s].children.clone();
        if let Some(pd) = &parent_disc {
            for &c in &kids {
                let d = regions[c].disc.as_mut().unwrap();
                let reach = (d.centre - pd.centre).norm() + d.radius;
                if reach > pd.radius {
                    let fitted = pd.radius - (d.centre - pd.centre).norm();
                    if fitted <= 0.0 {
                        return Err(Error::Domain(format!(
                            "disc of region {c} escapes its parent region {s}"
                        )));
                    }
                    log::warn!(
                        "{}: shrinking disc of region {c} by {:.3e} to stay inside region {s}",
                        model.name,
                        d.radius - fitted
                    );
                    d.radius = fitted;
                    regions[c].perturbed = true;
                }
            }
        }
        for round in 0..32 {
            let mut changed = false;
            for a in 0..kids.len() {
                for b in (a + 1)..kids.len() {
                    let (ca, cb) = (kids[a], kids[b]);
                    let da = regions[ca].disc.clone().unwrap();
                    let db = regions[cb].disc.clone().unwrap();
                    let gap = (da.centre - db.centre).norm() - da.radius - db.radius;
                    if gap < 0.0 {
                        let pad = 1e-9 * (da.radius + db.radius);
                        let cut = 0.5 * (-gap + pad);
                        for &(idx, r_old) in &[(ca, da.radius), (cb, db.radius)] {
                            let new_r = r_old - cut;
                            if new_r <= 0.0 {
                                return Err(Error::Domain(format!(
                                    "sibling discs under region {s} cannot be separated"
                                )));
                            }
                            regions[idx].disc.as_mut().unwrap().radius = new_r;
                            regions[idx].perturbed = true;
                        }
                        log::warn!(
                            "{}: sibling regions {ca} and {cb} overlap by {:.3e}; shrinking both",
                            model.name,
                            -gap
                        );
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
            if round == 31 {
                return Err(Error::Domain(format!(
                    "sibling overlap repair under region {s} did not converge"
                )));
            }
        }
    }

    Ok(PlanarDomain {
        regions,
        base,
        order: model.order.clone(),
        area_original: model.area_original,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol_ingest::{Sphere, SphereOrigin, SphereSet};
    use crate::surface_model::build_surface_model;

    fn domain_from(spheres: Vec<(f64, f64, f64, f64)>) -> Result<PlanarDomain> {
        let set = SphereSet {
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
        };
        build_planar_domain(&build_surface_model(&set)?)
    }

    #[test]
    fn single_sphere_is_the_round_metric_on_the_plane() {
        let domain = domain_from(vec![(0.3, -0.2, 0.7, 1.7)]).unwrap();
        assert_eq!(domain.regions.len(), 1);
        let r = &domain.regions[0];
        assert!(r.disc.is_none());
        assert!((r.radius - 1.0).abs() < 1e-12, "rescale gives a unit sphere");
        assert!((domain.metric_f(Complex64::new(0.0, 0.0)) - 2.0).abs() < 1e-12);
        assert!((domain.metric_f(Complex64::new(1.0, 0.0)) - 0.5).abs() < 1e-12);
        assert!((domain.metric_f(Complex64::new(0.6, 0.8)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_glues_along_the_expected_circle() {
        let domain = domain_from(vec![(0.0, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0, 1.0)]).unwrap();
        let child = &domain.regions[1];
        assert_eq!(child.parent, Some(0));
        assert_eq!(child.level, 1);
        // edge invariants are independent of the base-pole choice
        assert!((child.w_boundary - 3.0f64.sqrt()).abs() < 1e-9);
        assert!((child.eps - 1.0 / 3.0).abs() < 1e-12);
        assert!((child.eps_tilde - 3.0).abs() < 1e-12);
        assert!((child.metric_c / child.metric_b - 4.0 * child.radius * child.radius).abs() < 1e-12);
        // the disc boundary maps exactly onto the local circle |u| = W
        let disc = child.disc.as_ref().unwrap();
        for k in 0..8 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
            let z = disc.centre + disc.radius * Complex64::new(ang.cos(), ang.sin());
            assert!((child.chart.apply(z).norm() - child.w_boundary).abs() < 1e-9);
        }
        // the discrete pole search sits within a few degrees of the axis,
        // so the disc is only approximately the centred one
        assert!(disc.centre.norm() < 0.1);
        assert!((disc.radius - 1.0 / 3.0f64.sqrt()).abs() < 0.1);
        assert!(!child.perturbed);
    }

    #[test]
    fn metric_is_continuous_across_region_boundaries() {
        let domain = domain_from(vec![(0.0, 0.0, 0.0, 1.7), (1.43, 0.0, 0.0, 1.52)]).unwrap();
        let child = &domain.regions[1];
        let disc = child.disc.as_ref().unwrap();
        let parent = &domain.regions[0];
        for k in 0..32 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 32.0;
            let z = disc.centre + disc.radius * Complex64::new(ang.cos(), ang.sin());
            let f_in = region_f(child, z);
            let f_out = region_f(parent, z);
            assert!(
                (f_in - f_out).abs() < 1e-8 * f_out,
                "metric jump at boundary angle {ang}: {f_in} vs {f_out}"
            );
        }
    }

    #[test]
    fn child_disc_carries_the_visible_cap_area() {
        let domain = domain_from(vec![(0.0, 0.0, 0.0, 1.7), (1.43, 0.0, 0.0, 1.52)]).unwrap();
        let model = {
            let set = SphereSet {
                name: "test".into(),
                spheres: vec![
                    Sphere {
                        centre: Vec3::new(0.0, 0.0, 0.0),
                        radius: 1.7,
                        origin: SphereOrigin::Atom { index: 0, element: "C".into() },
                    },
                    Sphere {
                        centre: Vec3::new(1.43, 0.0, 0.0),
                        radius: 1.52,
                        origin: SphereOrigin::Atom { index: 1, element: "O".into() },
                    },
                ],
            };
            build_surface_model(&set).unwrap()
        };
        let child = &domain.regions[1];
        let disc = child.disc.as_ref().unwrap();
        // midpoint polar quadrature of ∫ 2F dx dy over the disc
        let (n_r, n_t) = (1500usize, 96usize);
        let mut sum = 0.0;
        for i in 0..n_r {
            let rho = disc.radius * (i as f64 + 0.5) / n_r as f64;
            for j in 0..n_t {
                let ang = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_t as f64;
                let z = disc.centre + rho * Complex64::new(ang.cos(), ang.sin());
                sum += 2.0 * region_f(child, z) * rho;
            }
        }
        let area = sum * (disc.radius / n_r as f64) * (2.0 * std::f64::consts::PI / n_t as f64);
        let expected = 2.0 * std::f64::consts::PI * model.radii[1] * (model.radii[1] + model.lambda(1, 0));
        assert!(
            (area - expected).abs() < 1e-4 * expected,
            "disc area {area} vs cap area {expected}"
        );
    }

    #[test]
    fn chains_nest_their_discs() {
        let domain = domain_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (1.2, 0.0, 0.0, 1.0),
            (2.4, 0.0, 0.0, 1.0),
        ])
        .unwrap();
        // base is the middle sphere; both ends are its children
        assert_eq!(domain.base, 1);
        let levels: Vec<usize> = domain.regions.iter().map(|r| r.level).collect();
        assert_eq!(levels, vec![1, 0, 1]);
        let d0 = domain.regions[0].disc.as_ref().unwrap();
        let d2 = domain.regions[2].disc.as_ref().unwrap();
        let gap = (d0.centre - d2.centre).norm() - d0.radius - d2.radius;
        assert!(gap >= 0.0, "sibling discs must not overlap, gap {gap}");
        assert!(!domain.regions[0].perturbed && !domain.regions[2].perturbed);

        // a genuine 4-chain puts a grandchild disc inside its parent's
        let domain = domain_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (1.2, 0.0, 0.0, 1.0),
            (2.4, 0.0, 0.0, 1.0),
            (3.6, 0.0, 0.0, 1.0),
        ])
        .unwrap();
        let base = domain.base;
        let grandchild = domain
            .regions
            .iter()
            .find(|r| r.level == 2)
            .expect("depth-two region exists");
        let parent = &domain.regions[grandchild.parent.unwrap()];
        assert_eq!(parent.level, 1);
        assert_ne!(parent.sphere, base);
        let (dg, dp) = (
            grandchild.disc.as_ref().unwrap(),
            parent.disc.as_ref().unwrap(),
        );
        assert!(
            (dg.centre - dp.centre).norm() + dg.radius <= dp.radius + 1e-12,
            "grandchild disc must nest inside its parent disc"
        );
        // continuity across the deeper boundary too
        for k in 0..16 {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let z = dg.centre + dg.radius * Complex64::new(ang.cos(), ang.sin());
            let f_in = region_f(grandchild, z);
            let f_out = region_f(parent, z);
            assert!((f_in - f_out).abs() < 1e-8 * f_out);
        }
    }

    #[test]
    fn overlapping_sibling_spheres_get_shrunk_discs() {
        // an equilateral-ish triangle: both children also cut each other
        let domain = domain_from(vec![
            (0.0, 0.0, 0.0, 1.3),
            (1.4, 0.0, 0.0, 1.0),
            (0.7, 1.2, 0.0, 1.0),
        ])
        .unwrap();
        let base = domain.base;
        let kids = &domain.regions[base].children;
        assert_eq!(kids.len(), 2);
        let (c1, c2) = (kids[0], kids[1]);
        assert!(domain.regions[c1].perturbed && domain.regions[c2].perturbed);
        let d1 = domain.regions[c1].disc.as_ref().unwrap();
        let d2 = domain.regions[c2].disc.as_ref().unwrap();
        assert!((d1.centre - d2.centre).norm() >= d1.radius + d2.radius);
    }

    #[test]
    fn fully_caged_base_sphere_has_no_pole() {
        let mut spheres = vec![(0.0, 0.0, 0.0, 0.8)];
        for (x, y, z) in [
            (1.3, 0.0, 0.0),
            (-1.3, 0.0, 0.0),
            (0.0, 1.3, 0.0),
            (0.0, -1.3, 0.0),
            (0.0, 0.0, 1.3),
            (0.0, 0.0, -1.3),
        ] {
            spheres.push((x, y, z, 1.2));
        }
        assert!(matches!(domain_from(spheres), Err(Error::NoValidPole)));
    }

    #[test]
    fn region_lookup_descends_to_the_deepest_disc() {
        let domain = domain_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (1.2, 0.0, 0.0, 1.0),
            (2.4, 0.0, 0.0, 1.0),
            (3.6, 0.0, 0.0, 1.0),
        ])
        .unwrap();
        let grandchild_idx = domain
            .regions
            .iter()
            .position(|r| r.level == 2)
            .unwrap();
        let dg = domain.regions[grandchild_idx].disc.as_ref().unwrap();
        assert_eq!(domain.region_at(dg.centre), grandchild_idx);
        let far = Complex64::new(1e6, 1e6);
        assert_eq!(domain.region_at(far), domain.base);
    }
}

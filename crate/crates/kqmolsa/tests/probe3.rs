use kqmolsa::chart_fit::region_charts;
use kqmolsa::geom::Vec3;
use kqmolsa::kahler_potential::build_potential;
use kqmolsa::mol_ingest::{Sphere, SphereOrigin, SphereSet};
use kqmolsa::planar_domain::{build_planar_domain, region_f};
use kqmolsa::surface_model::build_surface_model;
use num_complex::Complex64;

fn sphere(c: [f64; 3], r: f64) -> Sphere {
    Sphere {
        centre: Vec3::new(c[0], c[1], c[2]),
        radius: r,
        origin: SphereOrigin::Atom { index: 0, element: "C".into() },
    }
}

#[test]
fn propane_regions() {
    let set = SphereSet {
        name: "propane".into(),
        spheres: vec![
            sphere([-1.2654, 0.0, 0.8550], 1.7),
            sphere([0.0, 0.0, 0.0], 1.7),
            sphere([1.2654, 0.0, 0.8550], 1.7),
        ],
    };
    let model = build_surface_model(&set).unwrap();
    println!("adjacency: {:?}", model.adjacency);
    println!("base: {} children: {:?}", model.base, model.children);
    println!("radii: {:?}", model.radii);
    let domain = build_planar_domain(&model).unwrap();
    for (i, reg) in domain.regions.iter().enumerate() {
        println!(
            "region {i}: level {} disc {:?} perturbed {} children {:?}",
            reg.level, reg.disc, reg.perturbed, reg.children
        );
    }
    let potential = build_potential(&domain).unwrap();
    let (n_r, n_theta) = (15usize, 10usize);

    let two_pi = std::f64::consts::TAU;
    for idx in 0..domain.regions.len() {
        let region = &domain.regions[idx];
        let child_discs: Vec<_> = region
            .children
            .iter()
            .filter_map(|&c| domain.regions[c].disc.clone())
            .collect();
        let mut area = 0.0;
        let mut mass = 0.0f64;
        let mut worst: (f64, Complex64) = (0.0, Complex64::new(0.0, 0.0));
        for chart in region_charts(&domain, idx, n_r, n_theta) {
            println!("  chart a={:?} b={:?} c={:?} d={:?}", chart.a, chart.b, chart.c, chart.d);
            let h = 1.0 / n_r as f64;
            let dtheta = two_pi / n_theta as f64;
            for ir in 1..=n_r {
                let rho = ir as f64 * h;
                let w_r = if ir == n_r { 0.5 * h } else { h };
                for it in 0..n_theta {
                    let th = it as f64 * dtheta;
                    let w = Complex64::from_polar(rho, th);
                    let z = chart.apply(w);
                    if !z.is_finite() {
                        continue;
                    }
                    if child_discs.iter().any(|d| d.contains(z)) {
                        continue;
                    }
                    let weight = w_r * dtheta * rho * chart.jacobian_sq(w);
                    let f = 2.0 * region_f(region, z);
                    let dens = f * (-(1.0) * potential.evaluate_in(idx, z)).exp();
                    area += f * weight;
                    mass += dens * weight;
                    if dens * weight > worst.0 {
                        worst = (dens * weight, z);
                    }
                }
            }
        }
        println!(
            "region {idx}: area {area:.6} mass {mass:.6} worst node {:.3e} at z = {}",
            worst.0, worst.1
        );
    }
}

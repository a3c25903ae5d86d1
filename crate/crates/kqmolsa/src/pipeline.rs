//! End-to-end assembly: molecule → sphere set → surface model → planar
//! domain → Kähler potential → descriptor, plus molecule-level comparison.

use crate::descriptor_distance::{min_distance, sanitize, AlignOptions};
use crate::error::Result;
use crate::kahler_potential::build_potential;
use crate::mol_ingest::{build_sphere_set, MoleculeRecord, SphereSet};
use crate::planar_domain::build_planar_domain;
use crate::quantizer::{quantize, QuantizeOptions, ShapeDescriptor};
use crate::similarity::{score, SimilarityScore, Weights};
use crate::surface_model::build_surface_model;
use std::collections::BTreeMap;

/// Runs the full chain from an already-built sphere set.
pub fn sphere_set_descriptor(set: &SphereSet, opts: &QuantizeOptions) -> Result<ShapeDescriptor> {
    let model = build_surface_model(set)?;
    let domain = build_planar_domain(&model)?;
    let potential = build_potential(&domain)?;
    quantize(&domain, &potential, &set.name, opts)
}

/// Runs the full chain from a parsed molecule record.
pub fn molecule_descriptor(
    mol: &MoleculeRecord,
    radii: &BTreeMap<String, f64>,
    opts: &QuantizeOptions,
) -> Result<ShapeDescriptor> {
    sphere_set_descriptor(&build_sphere_set(mol, radii)?, opts)
}

/// Compares two molecules at the requested level. For k ≥ 2 the k = 1
/// alignment is computed first and its Möbius parameters seed the final
/// search — the k = 1 problem is smaller and its optimum transfers.
pub fn compare_sphere_sets(
    a: &SphereSet,
    b: &SphereSet,
    opts: &QuantizeOptions,
    weights: &Weights,
    align: &AlignOptions,
) -> Result<SimilarityScore> {
    let chain = |set: &SphereSet| -> Result<_> {
        let model = build_surface_model(set)?;
        let domain = build_planar_domain(&model)?;
        let potential = build_potential(&domain)?;
        Ok((domain, potential))
    };
    let (domain_a, pot_a) = chain(a)?;
    let (domain_b, pot_b) = chain(b)?;

    let mut align = *align;
    if opts.k >= 2 && align.warm_start.is_none() {
        let low = QuantizeOptions { k: 1, ..*opts };
        let seed = (|| -> Result<[f64; 6]> {
            let da = quantize(&domain_a, &pot_a, &a.name, &low)?;
            let db = quantize(&domain_b, &pot_b, &b.name, &low)?;
            let coarse = min_distance(&sanitize(&da.matrix)?, &sanitize(&db.matrix)?, &align)?;
            Ok(coarse.params)
        })();
        match seed {
            Ok(params) => align.warm_start = Some(params),
            Err(e) => log::warn!("level-1 warm start unavailable ({e}); starting from identity"),
        }
    }

    let da = quantize(&domain_a, &pot_a, &a.name, opts)?;
    let db = quantize(&domain_b, &pot_b, &b.name, opts)?;
    score(&da, &db, weights, &align)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pipeline_output_matches_the_manual_chain() {
        let set = fixtures::chain(3);
        let opts = QuantizeOptions::default();
        let d = sphere_set_descriptor(&set, &opts).unwrap();

        let model = build_surface_model(&set).unwrap();
        let domain = build_planar_domain(&model).unwrap();
        let potential = build_potential(&domain).unwrap();
        let manual = quantize(&domain, &potential, &set.name, &opts).unwrap();

        assert_eq!(d.name, manual.name);
        assert_eq!(d.area_check, manual.area_check);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.matrix[(i, j)], manual.matrix[(i, j)]);
            }
        }
    }

    #[test]
    fn a_molecule_compared_with_itself_scores_one() {
        let set = fixtures::chain(2);
        let s = compare_sphere_sets(
            &set,
            &set,
            &QuantizeOptions::default(),
            &Weights::default(),
            &AlignOptions::default(),
        )
        .unwrap();
        assert!(s.distance < 1e-6, "distance {}", s.distance);
        assert!((s.score - 1.0).abs() < 1e-6, "score {}", s.score);
    }

    #[test]
    fn pose_changes_barely_move_the_level_two_score() {
        let set = fixtures::chain(2);
        let moved = fixtures::rigidly_moved(&set, 23);
        let opts = QuantizeOptions {
            k: 2,
            ..QuantizeOptions::default()
        };
        let s = compare_sphere_sets(
            &set,
            &moved,
            &opts,
            &Weights::default(),
            &AlignOptions::default(),
        )
        .unwrap();
        assert!((s.area_ratio - 1.0).abs() < 1e-9, "same spheres, same area");
        assert!(s.distance < 0.1, "pose distance {}", s.distance);
        assert!(s.score > 0.93, "score {}", s.score);
    }
}

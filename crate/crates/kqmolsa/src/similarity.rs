//! Bounded similarity scores and library ranking.
//!
//! score = x·(A_min/A_max) + y/(1 + d) with x + y = 1 and x < 0.5, so the
//! aligned shape distance d stays the primary contributor and the score
//! lives in [0, 1]. Areas are the pre-rescale molecular surface areas:
//! after normalization every surface has area 4π, so the ratio must be
//! taken before it.

use crate::descriptor_distance::{min_distance, sanitize, AlignOptions};
use crate::error::{Error, Result};
use crate::quantizer::ShapeDescriptor;
use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Area-ratio weight.
    pub x: f64,
    /// Distance weight.
    pub y: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { x: 0.3, y: 0.7 }
    }
}

impl Weights {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let w = Weights { x, y };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite())
            || (self.x + self.y - 1.0).abs() > 1e-9
            || self.x < 0.0
            || self.x >= 0.5
        {
            return Err(Error::InvalidWeights {
                x: self.x,
                y: self.y,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimilarityScore {
    pub score: f64,
    /// Aligned descriptor distance.
    pub distance: f64,
    /// min(𝒜₁, 𝒜₂)/max(𝒜₁, 𝒜₂) of the pre-rescale areas.
    pub area_ratio: f64,
    pub weights: Weights,
    /// Optimal log-scale from the alignment.
    pub scale: f64,
    pub converged: bool,
}

/// The score arithmetic on already-known parts. Accepts any weights that
/// sum to one (the full [0, 0.5] sweep is meaningful for weight studies);
/// `score` enforces the stricter x < 0.5 gate for production comparisons.
pub fn score_from_parts(distance: f64, area_1: f64, area_2: f64, weights: &Weights) -> f64 {
    let ratio = area_1.min(area_2) / area_1.max(area_2);
    weights.x * ratio + weights.y / (1.0 + distance)
}

/// Scores a descriptor pair: aligns the matrices, then combines the
/// distance with the pre-rescale area ratio.
pub fn score(
    d1: &ShapeDescriptor,
    d2: &ShapeDescriptor,
    weights: &Weights,
    align: &AlignOptions,
) -> Result<SimilarityScore> {
    weights.validate()?;
    if d1.k != d2.k {
        return Err(Error::OrderMismatch(d1.dim(), d2.dim()));
    }
    if d1.area_original <= 0.0 || d2.area_original <= 0.0 {
        return Err(Error::Domain(format!(
            "non-positive surface area ({} / {})",
            d1.area_original, d2.area_original
        )));
    }
    let m1 = sanitize(&d1.matrix)?;
    let m2 = sanitize(&d2.matrix)?;
    let alignment = min_distance(&m1, &m2, align)?;
    let ratio = d1.area_original.min(d2.area_original)
        / d1.area_original.max(d2.area_original);
    Ok(SimilarityScore {
        score: weights.x * ratio + weights.y / (1.0 + alignment.distance),
        distance: alignment.distance,
        area_ratio: ratio,
        weights: *weights,
        scale: alignment.scale,
        converged: alignment.converged,
    })
}

#[derive(Debug, Clone)]
pub struct ScreenRow {
    pub name: String,
    pub result: SimilarityScore,
}

#[derive(Debug, Clone)]
pub struct ScreenOutcome {
    /// Scored rows, best first; ties broken by name.
    pub ranked: Vec<ScreenRow>,
    /// (name, reason) for members whose comparison failed.
    pub skipped: Vec<(String, String)>,
}

/// Scores the query against every library member in parallel and ranks the
/// results. Individual numeric failures (e.g. a descriptor that is not
/// positive definite even after rescue) become skipped rows; a quantization
/// level mismatch is a caller error and fails the whole screen.
pub fn screen(
    query: &ShapeDescriptor,
    library: &[ShapeDescriptor],
    weights: &Weights,
    align: &AlignOptions,
    top_n: Option<usize>,
) -> Result<ScreenOutcome> {
    weights.validate()?;
    if let Some(d) = library.iter().find(|d| d.k != query.k) {
        return Err(Error::OrderMismatch(query.dim(), d.dim()));
    }

    let outcomes: Vec<(String, Result<SimilarityScore>)> = library
        .par_iter()
        .map(|d| (d.name.clone(), score(query, d, weights, align)))
        .collect();

    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for (name, outcome) in outcomes {
        match outcome {
            Ok(result) => ranked.push(ScreenRow { name, result }),
            Err(e) => skipped.push((name, e.to_string())),
        }
    }
    ranked.sort_by(|a, b| {
        b.result
            .score
            .partial_cmp(&a.result.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
    });
    if let Some(n) = top_n {
        ranked.truncate(n);
    }
    Ok(ScreenOutcome { ranked, skipped })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Ranked rows as CSV: name, score, distance, area_ratio, scale_p, converged.
pub fn write_csv(rows: &[ScreenRow], out: &mut impl Write) -> Result<()> {
    writeln!(out, "name,score,distance,area_ratio,scale_p,converged")?;
    for row in rows {
        let r = &row.result;
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            csv_field(&row.name),
            r.score,
            r.distance,
            r.area_ratio,
            r.scale,
            r.converged
        )?;
    }
    Ok(())
}

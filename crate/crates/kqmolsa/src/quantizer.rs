//! Geometric quantization of the surface: integrates monomial pairs
//! against the quantized volume form to produce the Hermitian moment
//! matrix that serves as the shape descriptor.
//!
//! M[i][j] = ∬ zⁱ z̄ʲ e^{−kφ(z)} · 2F(z) dx dy over the tiled plane,
//! with i, j ∈ 0..=2k. Each region is sampled on a polar grid pulled back
//! through its fitted Möbius charts (one for a disc region, patch plus
//! complement for the base). Nodes owned by a deeper region are skipped.

use crate::chart_fit::region_charts;
use crate::error::{Error, Result};
use crate::kahler_potential::KahlerPotential;
use crate::linalg::CMat;
use crate::mobius::{Disc, MobiusMap};
use crate::planar_domain::{region_f, PlanarDomain};
use num_complex::Complex64;
use serde::Deserialize;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy)]
pub struct QuantizeOptions {
    /// Quantization level; the descriptor is a (2k+1)×(2k+1) matrix.
    pub k: u32,
    /// Radial nodes per disc chart.
    pub n_r: usize,
    /// Angular nodes per disc chart.
    pub n_theta: usize,
    /// Hard limit on the relative deviation of the numeric area from 4π.
    pub area_tolerance: f64,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        QuantizeOptions {
            k: 1,
            n_r: 15,
            n_theta: 10,
            area_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShapeDescriptor {
    pub name: String,
    pub k: u32,
    pub matrix: CMat,
    pub sphere_count: usize,
    /// Molecular surface area in Å², before the unit-area rescale.
    pub area_original: f64,
    /// Area recovered by the quadrature on the rescaled surface (≈ 4π).
    pub area_check: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl ShapeDescriptor {
    pub fn dim(&self) -> usize {
        2 * self.k as usize + 1
    }

    /// Relative deviation of the recovered area from 4π.
    pub fn area_deviation(&self) -> f64 {
        let four_pi = 4.0 * std::f64::consts::PI;
        (self.area_check - four_pi).abs() / four_pi
    }
}

pub fn quantize(
    domain: &PlanarDomain,
    potential: &KahlerPotential,
    name: &str,
    opts: &QuantizeOptions,
) -> Result<ShapeDescriptor> {
    if opts.n_r < 2 || opts.n_theta < 1 {
        return Err(Error::Domain(format!(
            "quadrature grid {}×{} is too small",
            opts.n_r, opts.n_theta
        )));
    }
    let dim = 2 * opts.k as usize + 1;
    let mut m = CMat::zeros(dim);
    let mut area = 0.0;

    for idx in 0..domain.regions.len() {
        for chart in region_charts(domain, idx, opts.n_r, opts.n_theta) {
            accumulate(domain, potential, idx, opts, &chart, &mut m, &mut area)?;
        }
    }

    let four_pi = 4.0 * std::f64::consts::PI;
    let deviation = (area - four_pi).abs() / four_pi;
    if deviation > opts.area_tolerance {
        return Err(Error::AreaCheck {
            got: area,
            dev: deviation,
            limit: opts.area_tolerance,
        });
    }
    if domain.regions.iter().any(|r| r.perturbed) {
        log::warn!("{name}: descriptor built on a perturbed (shrunken-disc) domain");
    }

    m.hermitize();
    Ok(ShapeDescriptor {
        name: name.to_string(),
        k: opts.k,
        matrix: m,
        sphere_count: domain.regions.len(),
        area_original: domain.area_original,
        area_check: area,
        n_r: opts.n_r,
        n_theta: opts.n_theta,
    })
}

/// Adds one chart's polar-grid contribution. `chart` maps the unit disc
/// onto the chart's plane patch.
fn accumulate(
    domain: &PlanarDomain,
    potential: &KahlerPotential,
    region_idx: usize,
    opts: &QuantizeOptions,
    chart: &MobiusMap,
    m: &mut CMat,
    area: &mut f64,
) -> Result<()> {
    let region = &domain.regions[region_idx];
    let child_discs: Vec<Disc> = region
        .children
        .iter()
        .filter_map(|&c| domain.regions[c].disc.clone())
        .collect();
    let dim = m.n();
    let k = opts.k as i32;
    let h = 1.0 / opts.n_r as f64;
    let dtheta = 2.0 * std::f64::consts::PI / opts.n_theta as f64;
    let mut pow = vec![Complex64::new(1.0, 0.0); dim];

    // the ρ = 0 node is skipped: its ρ-weighted contribution vanishes
    for ir in 1..=opts.n_r {
        let rho = ir as f64 * h;
        let w_r = if ir == opts.n_r { 0.5 * h } else { h };
        for it in 0..opts.n_theta {
            let theta = dtheta * it as f64;
            let w = rho * Complex64::new(theta.cos(), theta.sin());
            let z = chart.apply(w);
            if !z.is_finite() {
                // a chart pole on a node: the pulled-back integrand's
                // limit is finite, one lost node is quadrature noise
                continue;
            }
            if child_discs.iter().any(|d| d.contains(z)) {
                continue;
            }
            let weight = w_r * dtheta * rho * chart.jacobian_sq(w);
            let density = 2.0 * region_f(region, z)
                * (-(k as f64) * potential.evaluate_in(region_idx, z)).exp();
            if !density.is_finite() {
                return Err(Error::NonFinite(format!(
                    "integrand at z = {z} in region {region_idx}"
                )));
            }
            *area += 2.0 * region_f(region, z) * weight;
            for p in 1..dim {
                pow[p] = pow[p - 1] * z;
            }
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += pow[i] * pow[j].conj() * (density * weight);
                }
            }
        }
    }
    Ok(())
}

/// Writes a descriptor as JSON with full-precision floats. Matrix entries
/// are [re, im] pairs serialized to 17 significant digits so that reading
/// the file back reproduces the descriptor bit for bit.
pub fn write_descriptor(d: &ShapeDescriptor, out: &mut impl Write) -> Result<()> {
    let dim = d.dim();
    let quoted_name =
        serde_json::to_string(&d.name).map_err(|e| Error::DescriptorFile(e.to_string()))?;
    writeln!(out, "{{")?;
    writeln!(out, "  \"schema_version\": 1,")?;
    writeln!(out, "  \"molecule_name\": {quoted_name},")?;
    writeln!(out, "  \"k\": {},", d.k)?;
    writeln!(out, "  \"n_spheres\": {},", d.sphere_count)?;
    writeln!(out, "  \"area_original\": {:.16e},", d.area_original)?;
    writeln!(out, "  \"area_check\": {:.16e},", d.area_check)?;
    writeln!(
        out,
        "  \"quadrature\": {{\"n_r\": {}, \"n_theta\": {}}},",
        d.n_r, d.n_theta
    )?;
    writeln!(out, "  \"matrix\": [")?;
    for i in 0..dim {
        let row = (0..dim)
            .map(|j| {
                let v = d.matrix[(i, j)];
                format!("[{:.16e}, {:.16e}]", v.re, v.im)
            })
            .collect::<Vec<_>>()
            .join(", ");
        let comma = if i + 1 == dim { "" } else { "," };
        writeln!(out, "    [{row}]{comma}")?;
    }
    writeln!(out, "  ]")?;
    writeln!(out, "}}")?;
    Ok(())
}

pub fn save_descriptor(d: &ShapeDescriptor, path: &str) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_descriptor(d, &mut file)
}

#[derive(Deserialize)]
struct Quadrature {
    n_r: usize,
    n_theta: usize,
}

#[derive(Deserialize)]
struct DescriptorFile {
    schema_version: u32,
    molecule_name: String,
    k: u32,
    n_spheres: usize,
    area_original: f64,
    area_check: f64,
    quadrature: Quadrature,
    matrix: Vec<Vec<[f64; 2]>>,
}

pub fn read_descriptor(input: &mut impl BufRead) -> Result<ShapeDescriptor> {
    let file: DescriptorFile = serde_json::from_reader(input)
        .map_err(|e| Error::DescriptorFile(e.to_string()))?;
    if file.schema_version != 1 {
        return Err(Error::DescriptorFile(format!(
            "unsupported schema version {}",
            file.schema_version
        )));
    }
    let dim = 2 * file.k as usize + 1;
    if file.matrix.len() != dim || file.matrix.iter().any(|r| r.len() != dim) {
        return Err(Error::DescriptorFile(format!(
            "matrix shape does not match k = {}",
            file.k
        )));
    }
    let mut m = CMat::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let [re, im] = file.matrix[i][j];
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::DescriptorFile(format!(
                    "non-finite entry at ({i},{j})"
                )));
            }
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    let scale = m.max_abs().max(1e-300);
    for i in 0..dim {
        for j in 0..dim {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-6 * scale {
                return Err(Error::DescriptorFile(format!(
                    "matrix is not Hermitian at ({i},{j})"
                )));
            }
        }
    }
    if !(file.area_original.is_finite() && file.area_original > 0.0) {
        return Err(Error::DescriptorFile(format!(
            "non-positive area_original {}",
            file.area_original
        )));
    }
    Ok(ShapeDescriptor {
        name: file.molecule_name,
        k: file.k,
        matrix: m,
        sphere_count: file.n_spheres,
        area_original: file.area_original,
        area_check: file.area_check,
        n_r: file.quadrature.n_r,
        n_theta: file.quadrature.n_theta,
    })
}

pub fn load_descriptor(path: &str) -> Result<ShapeDescriptor> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_descriptor(&mut file)
}

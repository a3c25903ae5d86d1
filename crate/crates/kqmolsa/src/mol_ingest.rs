//! SDF/MOL ingestion and reduction of a molecule to a set of spheres.
//!
//! Hydrogens are discarded, each smallest-set-of-smallest-rings cycle is
//! collapsed to a single sphere at the ring centroid, and every remaining
//! heavy atom contributes a sphere with its van der Waals radius.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use std::collections::BTreeMap;

const RING_SPHERE_RADIUS: f64 = 2.25;
const MACROCYCLE_LIMIT: usize = 12;

#[derive(Debug, Clone)]
pub struct Atom {
    pub element: String,
    pub pos: Vec3,
}

#[derive(Debug, Clone, Copy)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: u8,
}

#[derive(Debug, Clone)]
pub struct MoleculeRecord {
    pub name: String,
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
}

/// Where a sphere came from; kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum SphereOrigin {
    Atom { index: usize, element: String },
    Ring { atoms: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct Sphere {
    pub centre: Vec3,
    pub radius: f64,
    pub origin: SphereOrigin,
}

#[derive(Debug, Clone)]
pub struct SphereSet {
    pub name: String,
    pub spheres: Vec<Sphere>,
}

impl SphereSet {
    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }
}

/// Bondi van der Waals radii in Å for the elements the pipeline accepts.
pub fn default_radii() -> BTreeMap<String, f64> {
    [
        ("C", 1.70),
        ("N", 1.55),
        ("O", 1.52),
        ("S", 1.80),
        ("F", 1.47),
        ("Cl", 1.75),
        ("Br", 1.85),
        ("I", 1.98),
        ("P", 1.80),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Parses a radii override file: one `SYMBOL value` pair per line, `#`
/// starting a comment. Entries replace or extend the Bondi defaults.
pub fn load_radii_table(path: &str) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut table = default_radii();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let sym = parts.next().unwrap();
        let val = parts.next().and_then(|v| v.parse::<f64>().ok());
        match val {
            Some(r) if r > 0.0 && parts.next().is_none() => {
                table.insert(normalize_element(sym), r);
            }
            _ => {
                return Err(Error::RadiiTable {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("expected 'SYMBOL value', got '{raw}'"),
                });
            }
        }
    }
    Ok(table)
}

fn normalize_element(sym: &str) -> String {
    let mut out = String::with_capacity(sym.len());
    for (i, ch) in sym.chars().enumerate() {
        if i == 0 {
            out.extend(ch.to_uppercase());
        } else {
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// Splits an SDF file into raw records on `$$$$` separators. Returns the
/// record text together with the line offset of its first line, so parse
/// errors can report file positions.
pub fn split_records(text: &str) -> Vec<(usize, String)> {
    let mut records = Vec::new();
    let mut current = String::new();
    let mut start_line = 0usize;
    let mut seen_content = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim() == "$$$$" {
            if seen_content {
                records.push((start_line, std::mem::take(&mut current)));
            }
            current.clear();
            seen_content = false;
            start_line = lineno + 1;
            continue;
        }
        if !seen_content && line.trim().is_empty() {
            start_line = lineno + 1;
            continue;
        }
        seen_content = true;
        current.push_str(line);
        current.push('\n');
    }
    if seen_content {
        records.push((start_line, current));
    }
    records
}

/// Parses one molfile record (V2000 connection table).
pub fn parse_record(block: &str, line_offset: usize) -> Result<MoleculeRecord> {
    let lines: Vec<&str> = block.lines().collect();
    let err = |line: usize, msg: String| Error::Parse {
        line: line_offset + line + 1,
        msg,
    };
    if lines.len() < 4 {
        return Err(err(lines.len(), "truncated molfile header".into()));
    }
    let name = lines[0].trim().to_string();
    let dim_flag = lines[1]
        .get(20..22)
        .map(|s| s.eq_ignore_ascii_case("2d"))
        .unwrap_or(false);

    let counts = lines[3];
    if counts.contains("V3000") {
        return Err(Error::UnsupportedVersion("V3000".into()));
    }
    let natoms: usize = field(counts, 0, 3)
        .parse()
        .map_err(|_| err(3, format!("bad atom count in '{counts}'")))?;
    let nbonds: usize = field(counts, 3, 6)
        .parse()
        .map_err(|_| err(3, format!("bad bond count in '{counts}'")))?;

    let mut atoms = Vec::with_capacity(natoms);
    for i in 0..natoms {
        let l = lines
            .get(4 + i)
            .ok_or_else(|| err(4 + i, "atom block shorter than the atom count".into()))?;
        let x: f64 = field(l, 0, 10)
            .parse()
            .map_err(|_| err(4 + i, format!("bad x coordinate in '{l}'")))?;
        let y: f64 = field(l, 10, 20)
            .parse()
            .map_err(|_| err(4 + i, format!("bad y coordinate in '{l}'")))?;
        let z: f64 = field(l, 20, 30)
            .parse()
            .map_err(|_| err(4 + i, format!("bad z coordinate in '{l}'")))?;
        let element = field(l, 31, 34);
        if element.is_empty() {
            return Err(err(4 + i, format!("missing element symbol in '{l}'")));
        }
        atoms.push(Atom {
            element: normalize_element(&element),
            pos: Vec3::new(x, y, z),
        });
    }

    let mut bonds = Vec::with_capacity(nbonds);
    for j in 0..nbonds {
        let l = lines
            .get(4 + natoms + j)
            .ok_or_else(|| err(4 + natoms + j, "bond block shorter than the bond count".into()))?;
        let a: usize = field(l, 0, 3)
            .parse()
            .map_err(|_| err(4 + natoms + j, format!("bad bond atom in '{l}'")))?;
        let b: usize = field(l, 3, 6)
            .parse()
            .map_err(|_| err(4 + natoms + j, format!("bad bond atom in '{l}'")))?;
        let order: u8 = field(l, 6, 9).parse().unwrap_or(1);
        if a == 0 || b == 0 || a > natoms || b > natoms || a == b {
            return Err(err(
                4 + natoms + j,
                format!("bond references invalid atoms {a},{b}"),
            ));
        }
        bonds.push(Bond {
            a: a - 1,
            b: b - 1,
            order,
        });
    }

    if dim_flag && atoms.iter().all(|a| a.pos.z == 0.0) {
        return Err(Error::TwoDimensional(name));
    }

    Ok(MoleculeRecord { name, atoms, bonds })
}

/// Parses a whole SDF file, failing on the first bad record.
pub fn parse_sdf(text: &str) -> Result<Vec<MoleculeRecord>> {
    split_records(text)
        .into_iter()
        .map(|(off, block)| parse_record(&block, off))
        .collect()
}

fn field(line: &str, from: usize, to: usize) -> String {
    let chars: Vec<char> = line.chars().collect();
    if from >= chars.len() {
        return String::new();
    }
    chars[from..to.min(chars.len())]
        .iter()
        .collect::<String>()
        .trim()
        .to_string()
}

/// Smallest set of smallest rings of the heavy-atom bond graph.
///
/// Candidates are the shortest cycles through each edge; they are admitted
/// in (length, lexicographic) order while independent over GF(2) in the
/// edge space, until the circuit rank of every component is reached.
/// Returned cycles list original atom indices, lowest index first.
pub fn detect_rings(mol: &MoleculeRecord) -> Vec<Vec<usize>> {
    let n = mol.atoms.len();
    let heavy: Vec<bool> = mol.atoms.iter().map(|a| a.element != "H").collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for b in &mol.bonds {
        if !(heavy[b.a] && heavy[b.b]) {
            continue;
        }
        let e = (b.a.min(b.b), b.a.max(b.b));
        if edges.contains(&e) {
            continue;
        }
        adj[e.0].push(e.1);
        adj[e.1].push(e.0);
        edges.push(e);
    }
    for nb in &mut adj {
        nb.sort_unstable();
    }

    let rank = circuit_rank(n, &heavy, &adj, edges.len());
    if rank == 0 {
        return Vec::new();
    }

    let edge_index: BTreeMap<(usize, usize), usize> =
        edges.iter().copied().zip(0..).collect();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for &(u, v) in &edges {
        if let Some(path) = shortest_path_avoiding(&adj, u, v, (u, v)) {
            candidates.push(canonical_cycle(path));
        }
    }
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    candidates.dedup();

    let words = edges.len().div_ceil(64);
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut rings = Vec::new();
    for cyc in candidates {
        if rings.len() == rank {
            break;
        }
        let mut vec = vec![0u64; words];
        for i in 0..cyc.len() {
            let a = cyc[i];
            let b = cyc[(i + 1) % cyc.len()];
            let idx = edge_index[&(a.min(b), a.max(b))];
            vec[idx / 64] ^= 1 << (idx % 64);
        }
        let mut reduced = vec.clone();
        for row in &basis {
            let pivot = leading_bit(row);
            if bit_set(&reduced, pivot) {
                xor_into(&mut reduced, row);
            }
        }
        if reduced.iter().any(|w| *w != 0) {
            basis.push(reduced);
            basis.sort_by_key(|r| std::cmp::Reverse(leading_bit(r)));
            rings.push(cyc);
        }
    }
    rings
}

fn circuit_rank(n: usize, heavy: &[bool], adj: &[Vec<usize>], n_edges: usize) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0usize;
    let mut vertices = 0usize;
    for start in 0..n {
        if !heavy[start] || seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            vertices += 1;
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    (n_edges + components).saturating_sub(vertices)
}

fn shortest_path_avoiding(
    adj: &[Vec<usize>],
    from: usize,
    to: usize,
    skip: (usize, usize),
) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adj[u] {
            let e = (u.min(v), u.max(v));
            if e == skip || prev[v] != usize::MAX {
                continue;
            }
            prev[v] = u;
            queue.push_back(v);
        }
    }
    None
}

fn canonical_cycle(mut cyc: Vec<usize>) -> Vec<usize> {
    let min_pos = cyc
        .iter()
        .enumerate()
        .min_by_key(|(_, v)| **v)
        .map(|(i, _)| i)
        .unwrap();
    cyc.rotate_left(min_pos);
    if cyc.len() > 2 && cyc[1] > cyc[cyc.len() - 1] {
        cyc[1..].reverse();
    }
    cyc
}

fn leading_bit(v: &[u64]) -> usize {
    for (w, word) in v.iter().enumerate().rev() {
        if *word != 0 {
            return w * 64 + (63 - word.leading_zeros() as usize);
        }
    }
    0
}

fn bit_set(v: &[u64], bit: usize) -> bool {
    v[bit / 64] & (1 << (bit % 64)) != 0
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// Reduces a molecule to its sphere set: ring spheres first (one per SSSR
/// cycle, radius 2.25 Å at the ring centroid), then one van der Waals
/// sphere per non-ring heavy atom, in input order.
pub fn build_sphere_set(
    mol: &MoleculeRecord,
    radii: &BTreeMap<String, f64>,
) -> Result<SphereSet> {
    let rings = detect_rings(mol);
    for ring in &rings {
        if ring.len() > MACROCYCLE_LIMIT {
            return Err(Error::Macrocycle {
                size: ring.len(),
                limit: MACROCYCLE_LIMIT,
            });
        }
    }
    let mut in_ring = vec![false; mol.atoms.len()];
    for ring in &rings {
        for &a in ring {
            in_ring[a] = true;
        }
    }

    let mut spheres = Vec::new();
    for ring in &rings {
        let mut centre = Vec3::ZERO;
        for &a in ring {
            centre = centre + mol.atoms[a].pos;
        }
        spheres.push(Sphere {
            centre: centre * (1.0 / ring.len() as f64),
            radius: RING_SPHERE_RADIUS,
            origin: SphereOrigin::Ring { atoms: ring.clone() },
        });
    }
    for (i, atom) in mol.atoms.iter().enumerate() {
        if atom.element == "H" || in_ring[i] {
            continue;
        }
        let radius = *radii
            .get(&atom.element)
            .ok_or_else(|| Error::UnknownElement(atom.element.clone()))?;
        spheres.push(Sphere {
            centre: atom.pos,
            radius,
            origin: SphereOrigin::Atom {
                index: i,
                element: atom.element.clone(),
            },
        });
    }

    if spheres.is_empty() {
        return Err(Error::EmptySphereSet);
    }
    for i in 0..spheres.len() {
        for j in (i + 1)..spheres.len() {
            if spheres[i].centre.dist(spheres[j].centre) < 1e-9 {
                return Err(Error::DegenerateGeometry(format!(
                    "spheres {i} and {j} share a centre"
                )));
            }
        }
    }

    Ok(SphereSet {
        name: mol.name.clone(),
        spheres,
    })
}

//! Möbius transformations of the extended complex plane.
//!
//! Maps are stored as determinant-one 2×2 complex matrices acting by
//! z ↦ (az + b)/(cz + d). The projective sign ambiguity is irrelevant
//! everywhere in this crate: only |entries|² combinations are consumed.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Open disc in the plane, |z - centre| < radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub centre: Complex64,
    pub radius: f64,
}

impl Disc {
    pub fn new(centre: Complex64, radius: f64) -> Self {
        Disc { centre, radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.centre).norm() < self.radius
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };

    /// Builds a map from matrix entries, rescaling so the determinant is one.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(Error::DegenerateGeometry(
                "mobius matrix is singular".into(),
            ));
        }
        let s = det.sqrt();
        Ok(MobiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    /// z ↦ z/w for real w > 0 (used to renormalize chart boundary circles).
    pub fn scaling(w: f64) -> Self {
        let s = w.sqrt();
        MobiusMap {
            a: Complex64::new(1.0 / s, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(s, 0.0),
        }
    }

    /// w ↦ centre + radius·w, mapping the unit disc onto `disc`.
    pub fn onto_disc(disc: &Disc) -> Self {
        let s = disc.radius.sqrt();
        MobiusMap {
            a: Complex64::new(s, 0.0),
            b: disc.centre / s,
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0 / s, 0.0),
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// |dw/dz|² at z for w = m(z); the determinant-one form gives 1/|cz+d|⁴.
    pub fn jacobian_sq(&self, z: Complex64) -> f64 {
        let den = (self.c * z + self.d).norm_sqr();
        1.0 / (den * den)
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// self ∘ other (apply `other` first).
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// The unique map sending z1, z2, z3 to w1, w2, w3.
    pub fn from_three_points(
        z: [Complex64; 3],
        w: [Complex64; 3],
    ) -> Result<MobiusMap> {
        let t = to_zero_one_inf(z)?;
        let u = to_zero_one_inf(w)?;
        Ok(u.inverse().compose(&t))
    }

    /// Image of a circle that does not pass through the pole of the map.
    ///
    /// The image of the boundary circle is again a circle; the interior of
    /// `disc` maps to the interior of the result iff the pole lies outside
    /// `disc` (the caller is expected to be in that situation and can check
    /// with `pole_in_disc`).
    pub fn disc_image(&self, disc: &Disc) -> Result<Disc> {
        if self.c.norm() < 1e-14 {
            // affine: z ↦ (a/d) z + b/d
            let scale = self.a / self.d;
            return Ok(Disc::new(
                scale * disc.centre + self.b / self.d,
                scale.norm() * disc.radius,
            ));
        }
        // (az+b)/(cz+d) = a/c - 1/(c(cz+d)) for det 1
        let u_centre = self.c * disc.centre + self.d;
        let u_radius = self.c.norm() * disc.radius;
        let denom = u_centre.norm_sqr() - u_radius * u_radius;
        if denom.abs() < 1e-14 * u_radius.max(1.0).powi(2) {
            return Err(Error::DegenerateGeometry(
                "disc boundary passes through the mobius pole".into(),
            ));
        }
        // inversion v = 1/u of the circle |u - u_centre| = u_radius
        let v_centre = u_centre.conj() / denom;
        let v_radius = u_radius / denom.abs();
        let centre = self.a / self.c - v_centre / self.c;
        Ok(Disc::new(centre, v_radius / self.c.norm()))
    }

    pub fn pole_in_disc(&self, disc: &Disc) -> bool {
        if self.c.norm() < 1e-14 {
            return false;
        }
        disc.contains(-self.d / self.c)
    }

    /// Parameters (P, A, B) of the Hermitian form |az+b|² + |cz+d|² written
    /// as P(|z−A|² + B). For a determinant-one map B = 1/P², so the pullback
    /// of the round metric of a radius-r sphere under this map has Kähler
    /// coefficient 2r²B / (|z−A|²+B)².
    pub fn hermitian_form(&self) -> (f64, Complex64, f64) {
        let p = self.a.norm_sqr() + self.c.norm_sqr();
        let a = -(self.a.conj() * self.b + self.c.conj() * self.d) / p;
        (p, a, 1.0 / (p * p))
    }
}

fn to_zero_one_inf(z: [Complex64; 3]) -> Result<MobiusMap> {
    let [z1, z2, z3] = z;
    let min_sep = (z1 - z2)
        .norm()
        .min((z2 - z3).norm())
        .min((z1 - z3).norm());
    if min_sep < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "three-point mobius fit needs distinct points".into(),
        ));
    }
    MobiusMap::new(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_fixes_discs() {
        let d = Disc::new(c(0.3, -1.2), 0.7);
        let img = MobiusMap::IDENTITY.disc_image(&d).unwrap();
        assert!((img.centre - d.centre).norm() < 1e-14);
        assert!((img.radius - d.radius).abs() < 1e-14);
    }

    #[test]
    fn inversion_maps_disc_3_1_to_disc_3_8ths() {
        // z ↦ 1/z sends D(3,1) to D(3/8, 1/8)
        let inv = MobiusMap::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let img = inv.disc_image(&Disc::new(c(3.0, 0.0), 1.0)).unwrap();
        assert!((img.centre - c(0.375, 0.0)).norm() < 1e-12);
        assert!((img.radius - 0.125).abs() < 1e-12);

        // every boundary point of the source lands on the image circle
        for t in 0..100 {
            let ang = 2.0 * std::f64::consts::PI * t as f64 / 100.0;
            let z = c(3.0 + ang.cos(), ang.sin());
            let w = inv.apply(z);
            assert!(((w - img.centre).norm() - img.radius).abs() < 1e-12);
        }
    }

    #[test]
    fn general_map_sends_boundary_to_boundary() {
        let m = MobiusMap::new(c(1.3, 0.2), c(-0.4, 1.1), c(0.2, -0.3), c(0.8, 0.05)).unwrap();
        let d = Disc::new(c(1.5, 2.0), 0.6);
        assert!(!m.pole_in_disc(&d));
        let img = m.disc_image(&d).unwrap();
        for t in 0..64 {
            let ang = 2.0 * std::f64::consts::PI * t as f64 / 64.0;
            let z = d.centre + c(ang.cos(), ang.sin()) * d.radius;
            let w = m.apply(z);
            assert!(((w - img.centre).norm() - img.radius).abs() < 1e-10);
        }
        // interior maps to interior when the pole is outside
        assert!(img.contains(m.apply(d.centre + c(0.31, -0.2))));
    }

    #[test]
    fn compose_and_inverse_are_consistent() {
        let m = MobiusMap::new(c(2.0, -1.0), c(0.3, 0.4), c(0.0, 0.5), c(1.0, 1.0)).unwrap();
        let n = MobiusMap::new(c(0.1, 0.0), c(1.0, -2.0), c(0.7, 0.0), c(0.0, 3.0)).unwrap();
        let z = c(0.37, -1.42);
        let lhs = m.compose(&n).apply(z);
        let rhs = m.apply(n.apply(z));
        assert!((lhs - rhs).norm() < 1e-12);

        let id = m.compose(&m.inverse());
        let w = id.apply(z);
        assert!((w - z).norm() < 1e-12);

        let det = m.a * m.d - m.b * m.c;
        assert!((det - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn three_point_fit_reproduces_the_map() {
        let m = MobiusMap::new(c(1.2, 0.3), c(-0.2, 0.8), c(0.15, -0.1), c(0.9, 0.2)).unwrap();
        let zs = [c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.3)];
        let ws = [m.apply(zs[0]), m.apply(zs[1]), m.apply(zs[2])];
        let fit = MobiusMap::from_three_points(zs, ws).unwrap();
        for z in [c(0.5, -0.7), c(3.0, 2.0), c(-0.1, -0.1)] {
            assert!((fit.apply(z) - m.apply(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn hermitian_form_matches_direct_expansion() {
        let m = MobiusMap::new(c(1.1, -0.4), c(0.3, 0.9), c(-0.2, 0.5), c(1.4, 0.1)).unwrap();
        let (p, a, b) = m.hermitian_form();
        for z in [c(0.2, 0.1), c(-1.0, 2.0), c(0.0, 0.0)] {
            let direct = (m.a * z + m.b).norm_sqr() + (m.c * z + m.d).norm_sqr();
            let form = p * ((z - a).norm_sqr() + b);
            assert!((direct - form).abs() < 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn unit_disc_parametrization() {
        let d = Disc::new(c(-2.0, 1.0), 0.35);
        let t = MobiusMap::onto_disc(&d);
        assert!((t.apply(c(0.0, 0.0)) - d.centre).norm() < 1e-14);
        let edge = t.apply(c(1.0, 0.0));
        assert!(((edge - d.centre).norm() - d.radius).abs() < 1e-14);
        assert!((t.jacobian_sq(c(0.3, 0.2)) - d.radius * d.radius).abs() < 1e-12);
    }
}

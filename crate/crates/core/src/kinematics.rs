//! Deformation measures shared by all constitutive models.
//!
//! Everything here is a pure function on small value types: the 3x3
//! deformation gradient, the invariants of the right Cauchy-Green tensor,
//! and principal stretches. The plane-stress condensation that enforces
//! exact incompressibility lives in [`condense_plane_stress`].

use crate::error::{Error, Result};

/// Row-major 3x3 deformation gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationGradient3 {
    pub f: [[f64; 3]; 3],
}

impl DeformationGradient3 {
    pub const IDENTITY: Self = Self {
        f: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_diag(a: f64, b: f64, c: f64) -> Self {
        Self {
            f: [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]],
        }
    }

    pub fn det(&self) -> f64 {
        let f = &self.f;
        f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1])
            - f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0])
            + f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0])
    }

    /// Right Cauchy-Green tensor C = F^T F, symmetrized.
    pub fn right_cauchy_green(&self) -> [[f64; 3]; 3] {
        let f = &self.f;
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += f[k][i] * f[k][j];
                }
                c[i][j] = s;
            }
        }
        // symmetrize against roundoff before any eigen work
        for i in 0..3 {
            for j in (i + 1)..3 {
                let m = 0.5 * (c[i][j] + c[j][i]);
                c[i][j] = m;
                c[j][i] = m;
            }
        }
        c
    }
}

/// Invariants of C = F^T F together with their isochoric counterparts.
#[derive(Debug, Clone, Copy)]
pub struct InvariantSet {
    pub i1: f64,
    pub i2: f64,
    pub j: f64,
    pub i1_bar: f64,
    pub i2_bar: f64,
}

/// Principal stretches sorted descending; the square roots of the
/// eigenvalues of C.
#[derive(Debug, Clone, Copy)]
pub struct PrincipalStretches {
    pub values: [f64; 3],
}

/// Extends an in-plane deformation gradient to 3D under exact
/// incompressibility: the thickness stretch is 1/det of the in-plane block,
/// so det(F) = 1 identically.
pub fn condense_plane_stress(inplane: [[f64; 2]; 2]) -> Result<DeformationGradient3> {
    let d = inplane[0][0] * inplane[1][1] - inplane[0][1] * inplane[1][0];
    if !(d > 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "in-plane deformation gradient has non-positive determinant {d:e}"
        )));
    }
    Ok(DeformationGradient3 {
        f: [
            [inplane[0][0], inplane[0][1], 0.0],
            [inplane[1][0], inplane[1][1], 0.0],
            [0.0, 0.0, 1.0 / d],
        ],
    })
}

/// Invariants I1 = tr C, I2 = 1/2 [tr(C)^2 - tr(C^2)], J = det F, and the
/// isochoric pair I1_bar = J^(-2/3) I1, I2_bar = J^(-4/3) I2.
pub fn invariants(f: &DeformationGradient3) -> Result<InvariantSet> {
    let j = f.det();
    if !(j > 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "deformation gradient has non-positive determinant {j:e}"
        )));
    }
    let c = f.right_cauchy_green();
    let i1 = c[0][0] + c[1][1] + c[2][2];
    let mut tr_c2 = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr_c2 += c[i][k] * c[k][i];
        }
    }
    let i2 = 0.5 * (i1 * i1 - tr_c2);
    let j23 = j.powf(2.0 / 3.0);
    Ok(InvariantSet {
        i1,
        i2,
        j,
        i1_bar: i1 / j23,
        i2_bar: i2 / (j23 * j23),
    })
}

/// Principal stretches via the closed-form eigenvalues of the symmetric C.
///
/// Uses the trigonometric solution of the characteristic cubic; C is
/// symmetrized first so the result is reproducible bit-for-bit. Repeated
/// eigenvalues are fine: stretch-based energies depend on eigenvalues only.
pub fn principal_stretches(f: &DeformationGradient3) -> Result<PrincipalStretches> {
    let j = f.det();
    if !(j > 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "deformation gradient has non-positive determinant {j:e}"
        )));
    }
    let c = f.right_cauchy_green();
    let eig = sym3_eigenvalues(&c);
    for (k, &e) in eig.iter().enumerate() {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Numeric(format!(
                "eigenvalue {k} of C is non-positive or non-finite ({e:e})"
            )));
        }
    }
    // descending
    Ok(PrincipalStretches {
        values: [eig[2].sqrt(), eig[1].sqrt(), eig[0].sqrt()],
    })
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending, by the trigonometric
/// cubic formula.
fn sym3_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return d;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for jj in 0..3 {
            b[i][jj] = (a[i][jj] - if i == jj { q } else { 0.0 }) / p;
        }
    }
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e3, e2, e1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Rng;

    fn random_gradient(rng: &mut Rng) -> DeformationGradient3 {
        loop {
            let mut f = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    f[i][j] = if i == j { 1.0 } else { 0.0 } + rng.uniform(-0.5, 0.5);
                }
            }
            let g = DeformationGradient3 { f };
            if g.det() > 0.05 {
                return g;
            }
        }
    }

    #[test]
    fn condense_identity() {
        let f = condense_plane_stress([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(f, DeformationGradient3::IDENTITY);
    }

    #[test]
    fn condense_forces_unit_determinant() {
        let f = condense_plane_stress([[2.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(f.f[2][2], 0.5);
        let f = condense_plane_stress([[1.2, 0.0], [0.0, 0.8]]).unwrap();
        assert!((f.f[2][2] - 1.0 / 0.96).abs() < 1e-15);
    }

    #[test]
    fn condense_rejects_inverted() {
        assert!(condense_plane_stress([[-1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(condense_plane_stress([[0.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn condensed_determinant_is_one_to_machine_precision() {
        let mut rng = Rng::new(42);
        for _ in 0..1000 {
            let g = loop {
                let g = [
                    [1.0 + rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)],
                    [rng.uniform(-0.5, 0.5), 1.0 + rng.uniform(-0.5, 0.5)],
                ];
                if g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.05 {
                    break g;
                }
            };
            let f = condense_plane_stress(g).unwrap();
            assert!((f.det() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn invariants_reference_configuration() {
        let inv = invariants(&DeformationGradient3::IDENTITY).unwrap();
        assert_eq!((inv.i1, inv.i2, inv.j), (3.0, 3.0, 1.0));
        assert_eq!((inv.i1_bar, inv.i2_bar), (3.0, 3.0));
    }

    #[test]
    fn invariants_uniaxial_isochoric() {
        let s = 2f64.powf(-0.5);
        let f = DeformationGradient3::from_diag(2.0, s, s);
        let inv = invariants(&f).unwrap();
        assert!((inv.i1 - 5.0).abs() < 1e-14);
        assert!((inv.i2 - 4.25).abs() < 1e-14);
        assert!((inv.j - 1.0).abs() < 1e-14);
        assert!((inv.i1_bar - 5.0).abs() < 1e-13);
        assert!((inv.i2_bar - 4.25).abs() < 1e-13);
    }

    #[test]
    fn isochoric_invariants_scale_invariant() {
        // I1_bar, I2_bar must not change when F is multiplied by any c > 0.
        // Cross-checked against the eigenvalue route.
        let mut rng = Rng::new(7);
        for _ in 0..100 {
            let g = random_gradient(&mut rng);
            let c = rng.uniform(0.2, 5.0);
            let mut scaled = g;
            for i in 0..3 {
                for j in 0..3 {
                    scaled.f[i][j] *= c;
                }
            }
            let a = invariants(&g).unwrap();
            let b = invariants(&scaled).unwrap();
            assert!((a.i1_bar - b.i1_bar).abs() < 1e-10 * a.i1_bar.abs());
            assert!((a.i2_bar - b.i2_bar).abs() < 1e-10 * a.i2_bar.abs());

            // eigenvalue route: isochoric invariants from normalized stretches
            let st = principal_stretches(&g).unwrap().values;
            let jpow = a.j.powf(1.0 / 3.0);
            let (l1, l2, l3) = (st[0] / jpow, st[1] / jpow, st[2] / jpow);
            let i1_eig = l1 * l1 + l2 * l2 + l3 * l3;
            let i2_eig = l1 * l1 * l2 * l2 + l2 * l2 * l3 * l3 + l3 * l3 * l1 * l1;
            assert!((a.i1_bar - i1_eig).abs() < 1e-9 * i1_eig);
            assert!((a.i2_bar - i2_eig).abs() < 1e-9 * i2_eig);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)] // asserting the printed reference value
    fn stretches_identity_and_diagonal() {
        let s = principal_stretches(&DeformationGradient3::IDENTITY).unwrap();
        assert_eq!(s.values, [1.0, 1.0, 1.0]);
        let f = DeformationGradient3::from_diag(2.0, 2f64.powf(-0.5), 2f64.powf(-0.5));
        let s = principal_stretches(&f).unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-12);
        assert!((s.values[1] - 0.70710678).abs() < 1e-8);
        assert!((s.values[2] - 0.70710678).abs() < 1e-8);
    }

    #[test]
    fn stretch_product_equals_jacobian() {
        let mut rng = Rng::new(11);
        for _ in 0..1000 {
            let g = random_gradient(&mut rng);
            let j = g.det();
            let s = principal_stretches(&g).unwrap().values;
            let prod = s[0] * s[1] * s[2];
            assert!(
                (prod - j).abs() <= 1e-10 * j.abs(),
                "product {prod} vs J {j}"
            );
            let inv = invariants(&g).unwrap();
            let i1_eig = s.iter().map(|l| l * l).sum::<f64>();
            let i2_eig =
                s[0] * s[0] * s[1] * s[1] + s[1] * s[1] * s[2] * s[2] + s[2] * s[2] * s[0] * s[0];
            assert!((inv.i1 - i1_eig).abs() <= 1e-9 * i1_eig);
            assert!((inv.i2 - i2_eig).abs() <= 1e-9 * i2_eig);
        }
    }

    /// Independent oracle: roots of the characteristic polynomial of C by
    /// bisection, no shared code with the trigonometric solver.
    fn char_poly_roots(c: &[[f64; 3]; 3]) -> [f64; 3] {
        let tr = c[0][0] + c[1][1] + c[2][2];
        let mut tr_c2 = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                tr_c2 += c[i][k] * c[k][i];
            }
        }
        let i2 = 0.5 * (tr * tr - tr_c2);
        let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1])
            - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
        let p = |x: f64| -> f64 { -x * x * x + tr * x * x - i2 * x + det };
        // roots bracketed inside (0, tr); scan then bisect
        let mut roots = Vec::new();
        let n = 200_000;
        let mut prev = p(1e-12);
        let mut prev_x = 1e-12;
        for k in 1..=n {
            let x = tr * (k as f64) / (n as f64);
            let v = p(x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != v.signum() {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if p(lo).signum() == p(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev = v;
            prev_x = x;
        }
        // repeated roots may collapse; pad from the trace identity
        while roots.len() < 3 {
            let missing = tr - roots.iter().sum::<f64>();
            roots.push(missing / (3 - roots.len()) as f64);
        }
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        [roots[0], roots[1], roots[2]]
    }

    #[test]
    fn stretches_match_characteristic_polynomial_oracle() {
        let mut rng = Rng::new(23);
        for _ in 0..50 {
            let g = random_gradient(&mut rng);
            let c = g.right_cauchy_green();
            let expected = char_poly_roots(&c);
            let got = principal_stretches(&g).unwrap().values;
            for k in 0..3 {
                let want = expected[k].sqrt();
                assert!(
                    (got[k] - want).abs() <= 1e-9 * want.max(1.0),
                    "stretch {k}: {} vs oracle {}",
                    got[k],
                    want
                );
            }
        }
    }
}

//! Incompressible hyperelastic model catalog.
//!
//! Seven isotropic strain energy densities, each split into homogeneity
//! parameters `theta` (entering linearly, units N/mm^2) and non-homogeneity
//! parameters `alpha` (dimensionless exponents/shape factors), so that
//! W(F; theta, alpha) = theta . Q(F; alpha).
//!
//! Stresses for the condensed plane-stress state are analytic per model and
//! cross-checked against a finite-difference oracle in the tests; keeping
//! them analytic preserves quadratic Newton convergence in the solver.

use crate::error::{Error, Result};
use crate::kinematics::{
    condense_plane_stress, invariants, principal_stretches, DeformationGradient3,
};

/// Identity of a hyperelastic model in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    Carroll,
    LopezPamies,
    MooneyRivlin,
    NeoHookean,
    GenNeoHookean,
    Ogden,
    Yeoh,
}

impl ModelId {
    /// Catalog order; also the database sweep order.
    pub const ALL: [ModelId; 7] = [
        ModelId::Carroll,
        ModelId::LopezPamies,
        ModelId::MooneyRivlin,
        ModelId::NeoHookean,
        ModelId::GenNeoHookean,
        ModelId::Ogden,
        ModelId::Yeoh,
    ];

    /// Serialization token (normative lowercase spelling).
    pub fn token(&self) -> &'static str {
        match self {
            ModelId::Carroll => "carroll",
            ModelId::LopezPamies => "lopez-pamies",
            ModelId::MooneyRivlin => "mooney-rivlin",
            ModelId::NeoHookean => "neo-hookean",
            ModelId::GenNeoHookean => "gen-neo-hookean",
            ModelId::Ogden => "ogden",
            ModelId::Yeoh => "yeoh",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.token() == token)
            .ok_or_else(|| Error::Parameter(format!("unknown model token '{token}'")))
    }

    /// (|theta|, |alpha|) expected by this model.
    pub fn signature(&self) -> (usize, usize) {
        match self {
            ModelId::Carroll => (3, 0),
            ModelId::LopezPamies => (1, 1),
            ModelId::MooneyRivlin => (2, 0),
            ModelId::NeoHookean => (1, 0),
            ModelId::GenNeoHookean => (1, 2),
            ModelId::Ogden => (1, 1),
            ModelId::Yeoh => (3, 0),
        }
    }
}

/// Parameter vector pair for one model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl Params {
    pub fn new(theta: Vec<f64>, alpha: Vec<f64>) -> Self {
        Self { theta, alpha }
    }

    fn check(&self, model: ModelId) -> Result<()> {
        let (nt, na) = model.signature();
        if self.theta.len() != nt || self.alpha.len() != na {
            return Err(Error::Parameter(format!(
                "model '{}' expects |theta| = {nt}, |alpha| = {na}; got {} and {}",
                model.token(),
                self.theta.len(),
                self.alpha.len()
            )));
        }
        Ok(())
    }
}

/// Strain energy density W(F; theta, alpha) in N/mm^2.
pub fn energy(model: ModelId, f: &DeformationGradient3, params: &Params) -> Result<f64> {
    params.check(model)?;
    let q = homogeneity_basis(model, f, &params.alpha)?;
    Ok(q.iter().zip(&params.theta).map(|(q, t)| q * t).sum())
}

/// Basis vector Q(F; alpha) with energy = theta . Q for every theta.
pub fn homogeneity_basis(model: ModelId, f: &DeformationGradient3, alpha: &[f64]) -> Result<Vec<f64>> {
    let na = model.signature().1;
    if alpha.len() != na {
        return Err(Error::Parameter(format!(
            "model '{}' expects |alpha| = {na}; got {}",
            model.token(),
            alpha.len()
        )));
    }
    let inv = invariants(f)?;
    let (i1b, i2b) = (inv.i1_bar, inv.i2_bar);
    match model {
        ModelId::Carroll => Ok(vec![i1b, i1b.powi(4), i2b.sqrt()]),
        ModelId::LopezPamies => {
            let a1 = alpha[0];
            Ok(vec![i1b.powf(a1) - 3f64.powf(a1)])
        }
        ModelId::MooneyRivlin => Ok(vec![i1b - 3.0, i2b - 3.0]),
        ModelId::NeoHookean => Ok(vec![i1b - 3.0]),
        ModelId::GenNeoHookean => {
            let (a2, a3) = (alpha[0], alpha[1]);
            let base = 1.0 + a2 * (i1b - 3.0);
            if !(base > 0.0) {
                return Err(Error::Domain(format!(
                    "generalized neo-hookean base 1 + alpha2 (I1_bar - 3) = {base:e} is non-positive"
                )));
            }
            Ok(vec![base.powf(a3) - 1.0])
        }
        ModelId::Ogden => {
            let a4 = alpha[0];
            let l = principal_stretches(f)?.values;
            Ok(vec![l[0].powf(a4) + l[1].powf(a4) + l[2].powf(a4) - 3.0])
        }
        ModelId::Yeoh => {
            let x = i1b - 3.0;
            Ok(vec![x, x * x, x * x * x])
        }
    }
}

/// In-plane first Piola-Kirchhoff stress (N/mm^2) of the condensed energy
/// W_hat(F_2x2) = W(condense_plane_stress(F_2x2)).
pub fn piola_condensed_2d(
    model: ModelId,
    inplane_f: [[f64; 2]; 2],
    params: &Params,
) -> Result<[[f64; 2]; 2]> {
    params.check(model)?;
    let d = det2(inplane_f);
    if !(d > 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "in-plane deformation gradient has non-positive determinant {d:e}"
        )));
    }
    if model == ModelId::Ogden {
        return ogden_piola(inplane_f, d, params.theta[0], params.alpha[0]);
    }

    // Invariant-based models: with det(F) = 1 the isochoric invariants equal
    // the plain ones, I1 = tr(C2) + 1/d^2 and I2 = d^2 + tr(C2)/d^2.
    let tr_c2 = inplane_f[0][0] * inplane_f[0][0]
        + inplane_f[0][1] * inplane_f[0][1]
        + inplane_f[1][0] * inplane_f[1][0]
        + inplane_f[1][1] * inplane_f[1][1];
    let d2 = d * d;
    let i1 = tr_c2 + 1.0 / d2;
    let i2 = d2 + tr_c2 / d2;
    let (w1, w2) = energy_derivatives(model, i1, i2, params)?;

    // P = w1 dI1/dF + w2 dI2/dF with
    //   dI1/dF = 2 F - (2/d^2) F^-T
    //   dI2/dF = (2/d^2) F + 2 (d^2 - tr(C2)/d^2) F^-T
    let finv_t = inv_transpose2(inplane_f, d);
    let cf = 2.0 * (w1 + w2 / d2);
    let cit = 2.0 * (-w1 / d2 + w2 * (d2 - tr_c2 / d2));
    let mut p = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = cf * inplane_f[i][j] + cit * finv_t[i][j];
        }
    }
    Ok(p)
}

/// (dW/dI1_bar, dW/dI2_bar) for the invariant-based models.
fn energy_derivatives(model: ModelId, i1: f64, i2: f64, params: &Params) -> Result<(f64, f64)> {
    let t = &params.theta;
    match model {
        ModelId::Carroll => Ok((t[0] + 4.0 * t[1] * i1.powi(3), t[2] / (2.0 * i2.sqrt()))),
        ModelId::LopezPamies => {
            let a1 = params.alpha[0];
            Ok((t[0] * a1 * i1.powf(a1 - 1.0), 0.0))
        }
        ModelId::MooneyRivlin => Ok((t[0], t[1])),
        ModelId::NeoHookean => Ok((t[0], 0.0)),
        ModelId::GenNeoHookean => {
            let (a2, a3) = (params.alpha[0], params.alpha[1]);
            let base = 1.0 + a2 * (i1 - 3.0);
            if !(base > 0.0) {
                return Err(Error::Domain(format!(
                    "generalized neo-hookean base 1 + alpha2 (I1_bar - 3) = {base:e} is non-positive"
                )));
            }
            Ok((t[0] * a3 * a2 * base.powf(a3 - 1.0), 0.0))
        }
        ModelId::Yeoh => {
            let x = i1 - 3.0;
            Ok((t[0] + 2.0 * t[1] * x + 3.0 * t[2] * x * x, 0.0))
        }
        ModelId::Ogden => unreachable!("ogden is stretch-based"),
    }
}

/// Ogden stress from the spectral decomposition of C2. The out-of-plane
/// stretch is 1/d, so S = theta alpha sum_i [l_i^(a-2) - l3^a / mu_i] v_i v_i^T
/// and P = F S.
fn ogden_piola(f: [[f64; 2]; 2], d: f64, theta: f64, a: f64) -> Result<[[f64; 2]; 2]> {
    let c = [
        [
            f[0][0] * f[0][0] + f[1][0] * f[1][0],
            f[0][0] * f[0][1] + f[1][0] * f[1][1],
        ],
        [
            f[0][0] * f[0][1] + f[1][0] * f[1][1],
            f[0][1] * f[0][1] + f[1][1] * f[1][1],
        ],
    ];
    let mean = 0.5 * (c[0][0] + c[1][1]);
    let half_diff = 0.5 * (c[0][0] - c[1][1]);
    let r = (half_diff * half_diff + c[0][1] * c[0][1]).sqrt();
    let mu = [mean + r, mean - r];
    if !(mu[1] > 0.0) {
        return Err(Error::Numeric(format!(
            "degenerate in-plane stretch state, eigenvalue {:e}",
            mu[1]
        )));
    }
    let angle = 0.5 * f64::atan2(2.0 * c[0][1], c[0][0] - c[1][1]);
    let (s, co) = angle.sin_cos();
    let vecs = [[co, s], [-s, co]];
    let l3 = 1.0 / d;
    let l3a = l3.powf(a);
    let mut smat = [[0.0; 2]; 2];
    for k in 0..2 {
        let lk = mu[k].sqrt();
        let coeff = theta * a * (lk.powf(a - 2.0) - l3a / mu[k]);
        for i in 0..2 {
            for j in 0..2 {
                smat[i][j] += coeff * vecs[k][i] * vecs[k][j];
            }
        }
    }
    let mut p = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = f[i][0] * smat[0][j] + f[i][1] * smat[1][j];
        }
    }
    Ok(p)
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv_transpose2(m: [[f64; 2]; 2], d: f64) -> [[f64; 2]; 2] {
    [[m[1][1] / d, -m[1][0] / d], [-m[0][1] / d, m[0][0] / d]]
}

/// Condensed energy of an in-plane deformation gradient; the quantity whose
/// gradient [`piola_condensed_2d`] returns.
pub fn condensed_energy(model: ModelId, inplane_f: [[f64; 2]; 2], params: &Params) -> Result<f64> {
    energy(model, &condense_plane_stress(inplane_f)?, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::Rng;

    fn uniaxial() -> DeformationGradient3 {
        DeformationGradient3::from_diag(2.0, 2f64.powf(-0.5), 2f64.powf(-0.5))
    }

    fn random_inplane(rng: &mut Rng) -> [[f64; 2]; 2] {
        loop {
            let g = [
                [1.0 + rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)],
                [rng.uniform(-0.3, 0.3), 1.0 + rng.uniform(-0.3, 0.3)],
            ];
            if det2(g) > 0.3 {
                return g;
            }
        }
    }

    fn random_params(model: ModelId, rng: &mut Rng) -> Params {
        let (nt, _) = model.signature();
        let theta = (0..nt).map(|_| rng.uniform(0.1, 10.0)).collect();
        let alpha = match model {
            ModelId::LopezPamies => vec![rng.uniform(0.01, 10.0)],
            ModelId::GenNeoHookean => vec![rng.uniform(0.01, 10.0), rng.uniform(0.5, 10.0)],
            ModelId::Ogden => vec![rng.uniform(1.0, 10.0)],
            _ => vec![],
        };
        Params::new(theta, alpha)
    }

    /// Central finite differences of the condensed energy.
    fn fd_piola(model: ModelId, f: [[f64; 2]; 2], params: &Params) -> [[f64; 2]; 2] {
        let mut p = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let h = 1e-6 * f[i][j].abs().max(1.0);
                let mut fp = f;
                let mut fm = f;
                fp[i][j] += h;
                fm[i][j] -= h;
                let wp = condensed_energy(model, fp, params).unwrap();
                let wm = condensed_energy(model, fm, params).unwrap();
                p[i][j] = (wp - wm) / (2.0 * h);
            }
        }
        p
    }

    #[test]
    fn energy_reference_values() {
        let id = DeformationGradient3::IDENTITY;
        let nh = energy(ModelId::NeoHookean, &id, &Params::new(vec![1.0], vec![])).unwrap();
        assert_eq!(nh, 0.0);

        let mr = energy(
            ModelId::MooneyRivlin,
            &uniaxial(),
            &Params::new(vec![1.0, 1.0], vec![]),
        )
        .unwrap();
        assert!((mr - 3.25).abs() < 1e-12, "mooney-rivlin {mr}");

        let og = energy(
            ModelId::Ogden,
            &uniaxial(),
            &Params::new(vec![1.0], vec![2.0]),
        )
        .unwrap();
        assert!((og - 2.0).abs() < 1e-12, "ogden {og}");

        let ca = energy(
            ModelId::Carroll,
            &id,
            &Params::new(vec![1.0, 1.0, 1.0], vec![]),
        )
        .unwrap();
        assert!((ca - 85.7320508).abs() < 1e-7, "carroll {ca}");
    }

    #[test]
    fn basis_reference_values() {
        let id = DeformationGradient3::IDENTITY;
        assert_eq!(
            homogeneity_basis(ModelId::NeoHookean, &id, &[]).unwrap(),
            vec![0.0]
        );
        // I1_bar = 5 state
        let q = homogeneity_basis(ModelId::Yeoh, &uniaxial(), &[]).unwrap();
        assert!((q[0] - 2.0).abs() < 1e-12);
        assert!((q[1] - 4.0).abs() < 1e-12);
        assert!((q[2] - 8.0).abs() < 1e-11);
    }

    #[test]
    fn basis_reproduces_energy_for_random_theta() {
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let f = crate::kinematics::condense_plane_stress(random_inplane(&mut rng)).unwrap();
            let theta = vec![rng.uniform(0.01, 10.0), rng.uniform(0.01, 10.0)];
            let q = homogeneity_basis(ModelId::MooneyRivlin, &f, &[]).unwrap();
            let via_basis: f64 = q.iter().zip(&theta).map(|(q, t)| q * t).sum();
            let direct = energy(
                ModelId::MooneyRivlin,
                &f,
                &Params::new(theta.clone(), vec![]),
            )
            .unwrap();
            assert!((via_basis - direct).abs() <= 1e-12 * direct.abs().max(1e-12));
        }
    }

    #[test]
    fn reference_state_is_stress_free_except_carroll() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        for model in ModelId::ALL {
            if model == ModelId::Carroll {
                continue;
            }
            let params = random_params(model, &mut Rng::new(17));
            let p = piola_condensed_2d(model, id, &params).unwrap();
            for row in p {
                for v in row {
                    assert!(v.abs() < 1e-8, "{model:?} reference stress {v:e}");
                }
            }
        }
        // Carroll carries a nonzero reference stress; it must still match the
        // finite-difference gradient of its energy.
        let params = Params::new(vec![1.0, 1.0, 1.0], vec![]);
        let p = piola_condensed_2d(ModelId::Carroll, id, &params).unwrap();
        let fd = fd_piola(ModelId::Carroll, id, &params);
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[i][j] - fd[i][j]).abs() < 1e-5 * fd[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn neo_hookean_uniaxial_closed_form() {
        // Incompressible uniaxial plane stress: P11 = 2 theta (lambda - lambda^-2).
        // Validate the closed form by finite differences before trusting it.
        let lam: f64 = 2.0;
        let f = [[lam, 0.0], [0.0, lam.powf(-0.5)]];
        let params = Params::new(vec![1.0], vec![]);
        let fd = fd_piola(ModelId::NeoHookean, f, &params);
        let closed = 2.0 * (lam - lam.powi(-2));
        assert!((fd[0][0] - closed).abs() < 1e-6, "fd {} vs {closed}", fd[0][0]);
        let p = piola_condensed_2d(ModelId::NeoHookean, f, &params).unwrap();
        assert!((p[0][0] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_consistency_200_random_samples() {
        let mut rng = Rng::new(2024);
        for trial in 0..200 {
            let model = ModelId::ALL[trial % 7];
            let params = random_params(model, &mut rng);
            let f = random_inplane(&mut rng);
            let p = piola_condensed_2d(model, f, &params).unwrap();
            let fd = fd_piola(model, f, &params);
            for i in 0..2 {
                for j in 0..2 {
                    let err = (p[i][j] - fd[i][j]).abs();
                    let tol = (1e-5 * fd[i][j].abs()).max(1e-6);
                    assert!(
                        err <= tol,
                        "{model:?} trial {trial} P[{i}][{j}] = {} vs fd {}",
                        p[i][j],
                        fd[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn homogeneity_in_theta() {
        let mut rng = Rng::new(5);
        for model in ModelId::ALL {
            let params = random_params(model, &mut rng);
            let f2 = random_inplane(&mut rng);
            let f3 = crate::kinematics::condense_plane_stress(f2).unwrap();
            for a in [0.1, 3.0, 10.0] {
                let scaled = Params::new(
                    params.theta.iter().map(|t| a * t).collect(),
                    params.alpha.clone(),
                );
                let w = energy(model, &f3, &params).unwrap();
                let ws = energy(model, &f3, &scaled).unwrap();
                assert!((ws - a * w).abs() <= 1e-12 * (a * w).abs().max(1e-300));
                let p = piola_condensed_2d(model, f2, &params).unwrap();
                let ps = piola_condensed_2d(model, f2, &scaled).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(
                            (ps[i][j] - a * p[i][j]).abs() <= 1e-12 * (a * p[i][j]).abs().max(1e-300)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn objectivity_under_inplane_rotations() {
        let mut rng = Rng::new(8);
        for _ in 0..100 {
            let model = ModelId::ALL[rng.index(7)];
            let params = random_params(model, &mut rng);
            let f = crate::kinematics::condense_plane_stress(random_inplane(&mut rng)).unwrap();
            let ang = rng.uniform(0.0, std::f64::consts::TAU);
            let (s, c) = ang.sin_cos();
            let mut rf = [[0.0; 3]; 3];
            let r = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        rf[i][j] += r[i][k] * f.f[k][j];
                    }
                }
            }
            let w = energy(model, &f, &params).unwrap();
            let wr = energy(model, &DeformationGradient3 { f: rf }, &params).unwrap();
            assert!(
                (w - wr).abs() <= 1e-10 * w.abs().max(1.0),
                "{model:?}: {w} vs rotated {wr}"
            );
        }
    }

    #[test]
    fn model_nesting() {
        let mut rng = Rng::new(13);
        for _ in 0..20 {
            let f2 = random_inplane(&mut rng);
            let f3 = crate::kinematics::condense_plane_stress(f2).unwrap();
            // gen-neo-hookean with alpha3 = 1 is neo-hookean with theta = t7 a2
            let (t7, a2) = (rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0));
            let gnh = energy(
                ModelId::GenNeoHookean,
                &f3,
                &Params::new(vec![t7], vec![a2, 1.0]),
            )
            .unwrap();
            let nh = energy(ModelId::NeoHookean, &f3, &Params::new(vec![t7 * a2], vec![])).unwrap();
            assert!((gnh - nh).abs() <= 1e-12 * nh.abs().max(1e-12));
            // ogden with alpha4 = 2 is neo-hookean with the same theta (J = 1)
            let t8 = rng.uniform(0.1, 5.0);
            let og = energy(ModelId::Ogden, &f3, &Params::new(vec![t8], vec![2.0])).unwrap();
            let nh = energy(ModelId::NeoHookean, &f3, &Params::new(vec![t8], vec![])).unwrap();
            assert!(
                (og - nh).abs() <= 1e-12 * nh.abs().max(1e-10),
                "ogden {og} vs neo-hookean {nh}"
            );
        }
    }

    #[test]
    fn signature_mismatch_rejected() {
        let id = DeformationGradient3::IDENTITY;
        let err = energy(ModelId::NeoHookean, &id, &Params::new(vec![1.0, 2.0], vec![]));
        assert!(matches!(err, Err(Error::Parameter(_))));
        let err = energy(ModelId::Ogden, &id, &Params::new(vec![1.0], vec![]));
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn gen_neo_hookean_domain_error() {
        // negative alpha2 with a stretched state drives the base non-positive
        let f = crate::kinematics::condense_plane_stress([[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let params = Params::new(vec![1.0], vec![-2.0, 2.0]);
        let err = energy(ModelId::GenNeoHookean, &f, &params);
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}

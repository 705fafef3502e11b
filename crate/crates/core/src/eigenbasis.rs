//! Center-subspace eigenvectors and their adjoints under the delay pairing.

use crate::linalg::{self, ser_cvec, CMat, CVec, C64, I};
use crate::model::{exp_hist, Model, Param};
use crate::spectrum::{char_dlambda, char_matrix};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("iω = {freq}i is not a root of slice {n}: σ_min/σ_max = {ratio:e}")]
    NotARoot { n: u32, freq: f64, ratio: f64 },
    #[error("eigenvalue {freq}i of slice {n} is not simple: second singular value ratio {gap:e}")]
    NotSimple { n: u32, freq: f64, gap: f64 },
    #[error("defective pairing |(ψ, φ)| = {0:e}")]
    DefectivePairing(f64),
}

const ROOT_TOL: f64 = 1e-7;
const SIMPLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct EigenMode {
    pub n: u32,
    /// ω_k in the time of the model the basis was built for.
    pub freq: f64,
    /// φ_k(0); φ_k(θ) = φ_k(0) e^{iω_k θ}.
    #[serde(serialize_with = "ser_cvec")]
    pub phi: CVec,
    /// ψ_k(0) after normalization; ψ_k(s) = ψ_k(0) e^{−iω_k s}.
    #[serde(serialize_with = "ser_cvec")]
    pub psi: CVec,
    /// D_k = 1/(ψ̃, φ) where ψ̃ is the left null vector with leading entry 1.
    pub norm: C64,
    pub residual_right: f64,
    pub residual_left: f64,
}

impl EigenMode {
    pub fn lambda(&self) -> C64 {
        I * self.freq
    }

    /// φ_k at θ = 0, −r_1, …
    pub fn phi_hist(&self, delays: &[f64]) -> Vec<CVec> {
        exp_hist(&self.phi, self.lambda(), delays)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenData {
    pub mu0: Param,
    pub modes: [EigenMode; 2],
}

impl EigenData {
    /// The four basis vectors φ1, φ̄1, φ3, φ̄3 with eigenvalues and wave numbers.
    pub fn columns(&self) -> [(CVec, C64, u32); 4] {
        let [a, b] = &self.modes;
        [
            (a.phi.clone(), a.lambda(), a.n),
            (a.phi.map(|z| z.conj()), a.lambda().conj(), a.n),
            (b.phi.clone(), b.lambda(), b.n),
            (b.phi.map(|z| z.conj()), b.lambda().conj(), b.n),
        ]
    }

    /// ψ1, ψ̄1, ψ3, ψ̄3.
    pub fn rows(&self) -> [CVec; 4] {
        let [a, b] = &self.modes;
        [
            a.psi.clone(),
            a.psi.map(|z| z.conj()),
            b.psi.clone(),
            b.psi.map(|z| z.conj()),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("eigen data serializes")
    }
}

fn unit_leading(v: CVec) -> CVec {
    let scale = v.norm();
    let lead = v
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-12 * scale)
        .unwrap_or(C64::new(1.0, 0.0));
    v / lead
}

fn check_simple(n: u32, freq: f64, s: &[f64]) -> Result<(), EigenError> {
    let top = s[0].max(f64::MIN_POSITIVE);
    let ratio = s[s.len() - 1] / top;
    if ratio > ROOT_TOL {
        return Err(EigenError::NotARoot { n, freq, ratio });
    }
    if s.len() > 1 {
        let gap = s[s.len() - 2] / top;
        if gap < SIMPLE_TOL {
            return Err(EigenError::NotSimple { n, freq, gap });
        }
    }
    Ok(())
}

fn rel(m: &CMat, v: &CVec, r: CVec) -> f64 {
    r.norm() / (m.norm() * v.norm()).max(f64::MIN_POSITIVE)
}

/// Null vector of Δ_n(iω), leading nonzero entry equal to 1.
pub fn right_eigvec(model: &dyn Model, n: u32, mu: Param, freq: f64) -> Result<CVec, EigenError> {
    let m = char_matrix(model, n, mu, I * freq);
    let (v, s) = linalg::null_right(&m);
    check_simple(n, freq, &s)?;
    Ok(unit_leading(v))
}

/// Row null vector of Δ_n(iω), returned as a column, leading entry 1.
pub fn left_eigvec(model: &dyn Model, n: u32, mu: Param, freq: f64) -> Result<CVec, EigenError> {
    let m = char_matrix(model, n, mu, I * freq);
    let (v, s) = linalg::null_left(&m);
    check_simple(n, freq, &s)?;
    Ok(unit_leading(v))
}

/// (ψ, φ) = ψ(0)[I + Σ_k r_k G_k e^{−iω r_k}]φ(0).
pub fn bilinear_pair(model: &dyn Model, mu: Param, psi: &CVec, phi: &CVec, freq: f64) -> C64 {
    linalg::sandwich(psi, &char_dlambda(model, mu, I * freq), phi)
}

/// Pairing of ψ(s) = ψ e^{−λ_ψ s} with φ(θ) = φ e^{λ_φ θ}; reduces to
/// [`bilinear_pair`] when the exponents agree.
pub fn pair_general(model: &dyn Model, mu: Param, psi: &CVec, lam_psi: C64, phi: &CVec, lam_phi: C64) -> C64 {
    let lin = model.linear(mu);
    let mut total = linalg::dotu(psi, phi);
    for (g, r) in lin.g.iter().zip(model.delays(mu)) {
        let d = lam_phi - lam_psi;
        let w = if d.norm() * r < 1e-8 {
            C64::from(r) * (-lam_psi * r).exp()
        } else {
            (-lam_psi * r).exp() * (1.0 - (-d * r).exp()) / d
        };
        total += linalg::sandwich(psi, &linalg::to_complex(g), phi) * w;
    }
    total
}

pub fn build_mode(model: &dyn Model, mu: Param, n: u32, freq: f64) -> Result<EigenMode, EigenError> {
    let phi = right_eigvec(model, n, mu, freq)?;
    let raw = left_eigvec(model, n, mu, freq)?;
    let pair = bilinear_pair(model, mu, &raw, &phi, freq);
    if pair.norm() < 1e-12 {
        return Err(EigenError::DefectivePairing(pair.norm()));
    }
    let norm = 1.0 / pair;
    let psi = &raw * norm;
    let m = char_matrix(model, n, mu, I * freq);
    let residual_right = rel(&m, &phi, &m * &phi);
    let residual_left = rel(&m, &psi, m.transpose() * &psi);
    Ok(EigenMode { n, freq, phi, psi, norm, residual_right, residual_left })
}

/// Normalized basis for the two modes `(n_k, ω_k)`, frequencies given in the
/// time of `model`.
pub fn build_basis(model: &dyn Model, mu0: Param, modes: [(u32, f64); 2]) -> Result<EigenData, EigenError> {
    Ok(EigenData {
        mu0,
        modes: [
            build_mode(model, mu0, modes[0].0, modes[0].1)?,
            build_mode(model, mu0, modes[1].0, modes[1].1)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::model::PredatorPrey;
    use crate::spectrum::imaginary_roots;

    fn pp_mode() -> (PredatorPrey, Param, f64) {
        let m = PredatorPrey::standard();
        let r1 = 0.6739271475649673;
        let r = imaginary_roots(&m, 0, [0.0, r1]).unwrap()[1];
        (m, [r.delay(0), r1], r.freq)
    }

    #[test]
    fn pairing_is_one_after_normalization() {
        let (m, mu, w) = pp_mode();
        let e = build_mode(&m, mu, 0, w).unwrap();
        assert_eq!(e.phi[0], c(1.0, 0.0));
        assert!((bilinear_pair(&m, mu, &e.psi, &e.phi, w) - 1.0).norm() < 1e-12);
        assert!(e.residual_right < 1e-10 && e.residual_left < 1e-10);
        let lam = e.lambda();
        let same = pair_general(&m, mu, &e.psi, lam, &e.phi, lam);
        assert!((same - 1.0).norm() < 1e-12);
        let cross = pair_general(&m, mu, &e.psi, lam, &e.phi.map(|z| z.conj()), lam.conj());
        assert!(cross.norm() < 1e-10);
    }

    #[test]
    fn off_root_rejected() {
        let (m, mu, w) = pp_mode();
        assert!(matches!(right_eigvec(&m, 0, mu, w * 1.1), Err(EigenError::NotARoot { .. })));
    }

    #[test]
    fn undelayed_pairing_is_plain_product() {
        let (m, mu, w) = pp_mode();
        let psi = CVec::from_vec(vec![c(1.0, 2.0), c(0.5, 0.0)]);
        let phi = CVec::from_vec(vec![c(0.0, 1.0), c(3.0, -1.0)]);
        let mut zero = mu;
        zero[0] = 0.0;
        assert!((bilinear_pair(&m, zero, &psi, &phi, w) - linalg::dotu(&psi, &phi)).norm() < 1e-14);
    }
}

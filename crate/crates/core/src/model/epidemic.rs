//! Stage-structured epidemic model with a maturation delay τ and a
//! free-movement delay ω; bifurcation parameters μ = (ω, d2).

use super::{DelayParam, ImagRoot, LinearPart, Model, ModelError, Param};
use crate::linalg::{c, CVec, RMat, C64};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct Epidemic {
    pub alpha: f64,
    pub d: f64,
    /// Transmission rate.
    pub infection: f64,
    pub gamma: f64,
    pub beta: f64,
    pub tau: f64,
    pub d1: f64,
    pub d3: f64,
    pub l: f64,
    s_star: f64,
    i_star: f64,
    y_star: f64,
    r0: f64,
}

/// Builds the model translated to its positive equilibrium.
#[allow(clippy::too_many_arguments)]
pub fn builtin_epidemic(
    alpha: f64,
    d: f64,
    infection: f64,
    gamma: f64,
    beta: f64,
    tau: f64,
    d1: f64,
    d3: f64,
    l: f64,
) -> Result<Epidemic, ModelError> {
    let e = (-d * tau).exp();
    let r0 = infection * alpha * alpha * e * (1.0 - e) / (d * beta * (d + gamma));
    if !(r0 > 1.0) {
        return Err(ModelError::NoEquilibrium(format!("R0 = {r0} <= 1")));
    }
    let s_star = (d + gamma) / infection;
    Ok(Epidemic {
        alpha,
        d,
        infection,
        gamma,
        beta,
        tau,
        d1,
        d3,
        l,
        s_star,
        i_star: s_star * (r0 - 1.0),
        y_star: alpha * e / beta,
        r0,
    })
}

impl Epidemic {
    /// Default rates with domain scale `l`.
    pub fn standard(l: f64) -> Self {
        builtin_epidemic(2.1, 0.5, 0.5, 0.1, 0.3, 1.0, 0.05, 0.06, l).expect("R0 > 1")
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// (S*, I*, y*)
    pub fn steady_state(&self) -> [f64; 3] {
        [self.s_star, self.i_star, self.y_star]
    }

    fn k(&self, n: u32) -> f64 {
        let nf = n as f64;
        nf * nf / (self.l * self.l)
    }

    /// Coefficients (P_n, Q_n) of z⁴ + P_n z² + Q_n.
    pub fn quartic(&self, n: u32, d2: f64) -> (f64, f64) {
        let k = self.k(n);
        let (d, d1, a) = (self.d, self.d1, self.infection * self.i_star);
        let p = (d2 * k).powi(2) + (d + d1 * k + a) * (d + d1 * k - a);
        let j = d2 * k * (d + d1 * k) + a * d2 * k + a * d;
        let kk = d2 * k * (d + d1 * k) - a * d2 * k - a * d;
        (p, j * kk)
    }

    /// cos(zω) on the Hopf set.
    pub fn cos_phase(&self, n: u32, d2: f64, z: f64) -> f64 {
        let k = self.k(n);
        let (d, d1) = (self.d, self.d1);
        let a = self.infection * self.i_star;
        let cc = a * d2 * k + a * d;
        -((d + d1 * k + d2 * k) * a * z * z + (d2 * k * (d + d1 * k) - z * z) * cc)
            / (cc * cc + (a * z).powi(2))
    }

    /// Value of `e^{-izω}` forced by the characteristic equation at `iz`.
    fn forced_exp(&self, n: u32, d2: f64, z: f64) -> C64 {
        let k = self.k(n);
        let a = self.infection * self.i_star;
        let lam = c(0.0, z);
        -(lam + self.d1 * k + self.d) * (lam + d2 * k) / (a * (lam + d2 * k + self.d))
    }

    /// Closed-form value of Re[(dλ/dω)^{-1}] at the root `iz_n`.
    pub fn transversality_closed(&self, n: u32, d2: f64) -> Option<f64> {
        let (p, q) = self.quartic(n, d2);
        let z = self.closed_form_roots(n, [0.0, d2])?.first()?.freq;
        let k = self.k(n);
        let a = self.infection * self.i_star;
        Some((p * p - 4.0 * q).sqrt() / ((a * z).powi(2) + (a * d2 * k + a * self.d).powi(2)))
    }

    /// Largest wave number with an imaginary root (Q_n < 0).
    pub fn max_wave_number(&self, d2: f64) -> Option<u32> {
        (0..10_000u32).take_while(|&n| self.quartic(n, d2).1 < 0.0).last()
    }
}

impl Model for Epidemic {
    fn name(&self) -> String {
        "epidemic".into()
    }

    fn dim(&self) -> usize {
        3
    }

    fn scale(&self) -> f64 {
        self.l
    }

    fn param_names(&self) -> [String; 2] {
        ["omega".into(), "d2".into()]
    }

    fn delays(&self, mu: Param) -> Vec<f64> {
        vec![mu[0], self.tau]
    }

    fn diffusion(&self, mu: Param) -> Vec<f64> {
        vec![self.d1, mu[1], self.d3]
    }

    fn linear(&self, _mu: Param) -> LinearPart {
        let (d, g, m, b) = (self.d, self.gamma, self.infection, self.beta);
        let (s, i, y) = (self.s_star, self.i_star, self.y_star);
        let e = self.alpha * (-d * self.tau).exp();
        LinearPart {
            a: RMat::from_row_slice(
                3,
                3,
                &[
                    -d,
                    -m * s + g,
                    self.alpha,
                    0.0,
                    m * s - d - g,
                    0.0,
                    0.0,
                    0.0,
                    -2.0 * b * y,
                ],
            ),
            g: vec![
                RMat::from_row_slice(3, 3, &[-m * i, 0.0, 0.0, m * i, 0.0, 0.0, 0.0, 0.0, 0.0]),
                RMat::from_row_slice(3, 3, &[0.0, 0.0, -e, 0.0, 0.0, 0.0, 0.0, 0.0, e]),
            ],
        }
    }

    fn reaction(&self, _mu: Param, hist: &[&[f64]], out: &mut [f64]) {
        let si = self.infection * hist[1][0] * hist[0][1];
        out[0] = -si;
        out[1] = si;
        out[2] = -self.beta * hist[0][2] * hist[0][2];
    }

    fn equilibrium(&self, _mu: Param) -> Vec<f64> {
        self.steady_state().to_vec()
    }

    fn tensor2(&self, _mu: Param, a: &[CVec], b: &[CVec]) -> CVec {
        let m = self.infection;
        let s = a[1][0] * b[0][1] + b[1][0] * a[0][1];
        CVec::from_vec(vec![-m * s, m * s, -2.0 * self.beta * a[0][2] * b[0][2]])
    }

    fn tensor3(&self, _mu: Param, _a: &[CVec], _b: &[CVec], _c: &[CVec]) -> CVec {
        CVec::zeros(3)
    }

    fn param_derivative(&self, _mu: Param, i: usize) -> Option<(Vec<f64>, LinearPart)> {
        let dd = if i == 1 { vec![0.0, 1.0, 0.0] } else { vec![0.0; 3] };
        Some((dd, LinearPart::zeros(3, 2)))
    }

    fn delay_param(&self) -> Option<DelayParam> {
        Some(DelayParam { param: 0, delay: 0 })
    }

    fn closed_form_roots(&self, n: u32, mu: Param) -> Option<Vec<ImagRoot>> {
        let d2 = mu[1];
        let (p, q) = self.quartic(n, d2);
        let disc = p * p - 4.0 * q;
        if disc < 0.0 {
            return Some(Vec::new());
        }
        let mut roots = Vec::new();
        for w in [(-p + disc.sqrt()) / 2.0, (-p - disc.sqrt()) / 2.0] {
            if w > 0.0 && !roots.iter().any(|r: &ImagRoot| (r.freq - w.sqrt()).abs() < 1e-14) {
                let z = w.sqrt();
                let e = self.forced_exp(n, d2, z);
                let cos = self.cos_phase(n, d2, z);
                let sin = -e.im;
                roots.push(ImagRoot {
                    freq: z,
                    phase: sin.atan2(cos).rem_euclid(2.0 * PI),
                });
            }
        }
        roots.sort_by(|a, b| b.freq.partial_cmp(&a.freq).unwrap());
        Some(roots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_values() {
        let m = Epidemic::standard(3.0);
        let [s, i, y] = m.steady_state();
        assert!((s - 1.2).abs() < 1e-12);
        assert!((i - 5.816).abs() < 1e-3);
        assert!((y - 4.247).abs() < 2e-3);
        assert!((m.r0() - 5.85).abs() < 1e-2);
    }

    #[test]
    fn r0_boundary_rejected() {
        // μ chosen so that R0 = 1 exactly
        let (al, d, ga, be, ta): (f64, f64, f64, f64, f64) = (2.1, 0.5, 0.1, 0.3, 1.0);
        let e = (-d * ta).exp();
        let mu = d * be * (d + ga) / (al * al * e * (1.0 - e));
        assert!(builtin_epidemic(al, d, mu * (1.0 - 1e-12), ga, be, ta, 0.05, 0.06, 3.0).is_err());
    }

    #[test]
    fn mature_density_follows_survival() {
        let m = builtin_epidemic(2.1, 0.5, 0.5, 0.1, 0.3, 2.0, 0.05, 0.06, 3.0).unwrap();
        assert!((m.steady_state()[2] - 7.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn cos_phase_matches_forced_exponential() {
        let m = Epidemic::standard(3.0);
        for n in 0..3 {
            let r = m.closed_form_roots(n, [0.5, 5.23]).unwrap();
            let z = r[0].freq;
            let e = m.forced_exp(n, 5.23, z);
            assert!((e.norm() - 1.0).abs() < 1e-12);
            assert!((e.re - m.cos_phase(n, 5.23, z)).abs() < 1e-12);
        }
    }
}

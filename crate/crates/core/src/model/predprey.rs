//! Diffusive predator–prey model with a delayed prey self-limitation;
//! bifurcation parameters μ = (τ, r1).

use super::{DelayParam, ImagRoot, LinearPart, Model, ModelError, Param};
use crate::linalg::{CVec, RMat};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct PredatorPrey {
    pub r2: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub d1: f64,
    pub d2: f64,
    pub l: f64,
}

/// Builds the model and checks that the equilibrium at `r1` is positive.
#[allow(clippy::too_many_arguments)]
pub fn builtin_predprey(
    r1: f64,
    r2: f64,
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    d1: f64,
    d2: f64,
    l: f64,
) -> Result<(PredatorPrey, (f64, f64)), ModelError> {
    let m = PredatorPrey {
        r2,
        a11,
        a12,
        a21,
        a22,
        d1,
        d2,
        l,
    };
    let eq = m.steady_state(r1);
    if !(eq.0 > 0.0 && eq.1 > 0.0) {
        return Err(ModelError::NoEquilibrium(format!(
            "r1 a21 - r2 a11 = {} must be positive",
            r1 * a21 - r2 * a11
        )));
    }
    Ok((m, eq))
}

impl PredatorPrey {
    pub fn standard() -> Self {
        PredatorPrey {
            r2: 1.0,
            a11: 1.0,
            a12: 1.2,
            a21: 2.8,
            a22: 1.0,
            d1: 0.1,
            d2: 0.2,
            l: 3.0,
        }
    }

    fn den(&self) -> f64 {
        self.a11 * self.a22 + self.a12 * self.a21
    }

    /// (X*, Y*)
    pub fn steady_state(&self, r1: f64) -> (f64, f64) {
        let den = self.den();
        (
            (r1 * self.a22 + self.r2 * self.a12) / den,
            (r1 * self.a21 - self.r2 * self.a11) / den,
        )
    }

    /// (A_n, B_n, C, D_n) of λ² + A_nλ + B_n + e^{−λτ}(Cλ + D_n).
    pub fn char_coeffs(&self, n: u32, r1: f64) -> (f64, f64, f64, f64) {
        let (x, y) = self.steady_state(r1);
        let k = (n as f64).powi(2) / (self.l * self.l);
        let an = (self.d1 + self.d2) * k + self.a22 * y;
        let bn = self.d1 * k * (self.a22 * y + self.d2 * k) + self.a12 * self.a21 * x * y;
        let cc = self.a11 * x;
        let dn = (self.a22 * y + self.d2 * k) * self.a11 * x;
        (an, bn, cc, dn)
    }
}

impl Model for PredatorPrey {
    fn name(&self) -> String {
        "predprey".into()
    }

    fn dim(&self) -> usize {
        2
    }

    fn scale(&self) -> f64 {
        self.l
    }

    fn param_names(&self) -> [String; 2] {
        ["tau".into(), "r1".into()]
    }

    fn delays(&self, mu: Param) -> Vec<f64> {
        vec![mu[0]]
    }

    fn diffusion(&self, _mu: Param) -> Vec<f64> {
        vec![self.d1, self.d2]
    }

    fn linear(&self, mu: Param) -> LinearPart {
        let (x, y) = self.steady_state(mu[1]);
        LinearPart {
            a: RMat::from_row_slice(
                2,
                2,
                &[0.0, -self.a12 * x, self.a21 * y, -self.a22 * y],
            ),
            g: vec![RMat::from_row_slice(2, 2, &[-self.a11 * x, 0.0, 0.0, 0.0])],
        }
    }

    fn reaction(&self, _mu: Param, hist: &[&[f64]], out: &mut [f64]) {
        let (u, v, ud) = (hist[0][0], hist[0][1], hist[1][0]);
        out[0] = -self.a11 * u * ud - self.a12 * u * v;
        out[1] = self.a21 * u * v - self.a22 * v * v;
    }

    fn equilibrium(&self, mu: Param) -> Vec<f64> {
        let (x, y) = self.steady_state(mu[1]);
        vec![x, y]
    }

    fn tensor2(&self, _mu: Param, a: &[CVec], b: &[CVec]) -> CVec {
        let uv = a[0][0] * b[0][1] + b[0][0] * a[0][1];
        let uud = a[0][0] * b[1][0] + b[0][0] * a[1][0];
        CVec::from_vec(vec![
            -self.a11 * uud - self.a12 * uv,
            self.a21 * uv - 2.0 * self.a22 * a[0][1] * b[0][1],
        ])
    }

    fn tensor3(&self, _mu: Param, _a: &[CVec], _b: &[CVec], _c: &[CVec]) -> CVec {
        CVec::zeros(2)
    }

    fn param_derivative(&self, _mu: Param, i: usize) -> Option<(Vec<f64>, LinearPart)> {
        if i == 0 {
            return Some((vec![0.0; 2], LinearPart::zeros(2, 1)));
        }
        let den = self.den();
        let (dx, dy) = (self.a22 / den, self.a21 / den);
        Some((
            vec![0.0; 2],
            LinearPart {
                a: RMat::from_row_slice(
                    2,
                    2,
                    &[0.0, -self.a12 * dx, self.a21 * dy, -self.a22 * dy],
                ),
                g: vec![RMat::from_row_slice(2, 2, &[-self.a11 * dx, 0.0, 0.0, 0.0])],
            },
        ))
    }

    fn delay_param(&self) -> Option<DelayParam> {
        Some(DelayParam { param: 0, delay: 0 })
    }

    fn closed_form_roots(&self, n: u32, mu: Param) -> Option<Vec<ImagRoot>> {
        let (an, bn, cc, dn) = self.char_coeffs(n, mu[1]);
        let p = an * an - 2.0 * bn - cc * cc;
        let q = bn * bn - dn * dn;
        let disc = p * p - 4.0 * q;
        if disc < 0.0 {
            return Some(Vec::new());
        }
        let mut roots = Vec::new();
        for w2 in [(-p + disc.sqrt()) / 2.0, (-p - disc.sqrt()) / 2.0] {
            if w2 <= 0.0 {
                continue;
            }
            let w = w2.sqrt();
            if roots.iter().any(|r: &ImagRoot| (r.freq - w).abs() < 1e-14) {
                continue;
            }
            let den = (cc * w).powi(2) + dn * dn;
            let sin = (an * w * dn - (bn - w2) * cc * w) / den;
            let cos = -(an * cc * w2 + (bn - w2) * dn) / den;
            roots.push(ImagRoot {
                freq: w,
                phase: sin.atan2(cos).rem_euclid(2.0 * PI),
            });
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
        let (_, (x, y)) =
            builtin_predprey(0.6739271475, 1.0, 1.0, 1.2, 2.8, 1.0, 0.1, 0.2, 3.0).unwrap();
        let den = 1.0 + 1.2 * 2.8;
        assert!((x - (0.6739271475 + 1.2) / den).abs() < 1e-14);
        assert!((y - (0.6739271475 * 2.8 - 1.0) / den).abs() < 1e-14);
        assert!((x - 0.4298).abs() < 1e-4 && (y - 0.2034).abs() < 1e-4);
    }

    #[test]
    fn degenerate_equilibrium_rejected() {
        assert!(builtin_predprey(1.0 / 2.8, 1.0, 1.0, 1.2, 2.8, 1.0, 0.1, 0.2, 3.0).is_err());
    }

    #[test]
    fn decoupled_prey() {
        let (_, (x, _)) = builtin_predprey(2.0, 0.5, 1.0, 0.0, 2.8, 1.0, 0.1, 0.2, 3.0).unwrap();
        assert!((x - 2.0).abs() < 1e-14);
    }
}

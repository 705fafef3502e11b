//! Time rescaling that normalizes one delay to 1.

use super::{central_param_derivative, LinearPart, Model, ModelError, Param};
use crate::linalg::{CVec, C64};

/// `t → s t` with `s` the chosen delay; delays are frozen at their values at
/// μ0 divided by `s(μ0)`, and D, L, F pick up the factor `s(μ)`.
pub struct Rescaled<'a> {
    inner: &'a dyn Model,
    which: usize,
    mu0: Param,
    factor: f64,
    delays: Vec<f64>,
}

pub fn prepare_critical(
    inner: &dyn Model,
    which_delay: usize,
    mu0: Param,
) -> Result<Rescaled<'_>, ModelError> {
    let r = inner.delays(mu0);
    let s = *r.get(which_delay).ok_or(ModelError::ZeroDelay(which_delay))?;
    if !(s > 0.0) {
        return Err(ModelError::ZeroDelay(which_delay));
    }
    Ok(Rescaled {
        inner,
        which: which_delay,
        mu0,
        factor: s,
        delays: r.iter().map(|x| x / s).collect(),
    })
}

impl<'a> Rescaled<'a> {
    /// Rescale factor s(μ0); frequencies of the rescaled system are s·z.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn mu0(&self) -> Param {
        self.mu0
    }

    pub fn inner(&self) -> &'a dyn Model {
        self.inner
    }

    pub fn factor_at(&self, mu: Param) -> f64 {
        self.inner.delays(mu)[self.which]
    }

    fn factor_derivative(&self, mu: Param, i: usize) -> f64 {
        match self.inner.delay_param() {
            Some(dp) if dp.delay == self.which => {
                if dp.param == i {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let h = 1e-6 * (1.0 + mu[i].abs());
                let mut p = mu;
                let mut q = mu;
                p[i] += h;
                q[i] -= h;
                (self.factor_at(p) - self.factor_at(q)) / (2.0 * h)
            }
        }
    }

    /// Undoes the rescaling of D and L at μ.
    pub fn restore(&self, mu: Param) -> (Vec<f64>, LinearPart) {
        let s = self.factor_at(mu);
        (
            self.diffusion(mu).iter().map(|d| d / s).collect(),
            self.linear(mu).scaled(1.0 / s),
        )
    }
}

impl<'a> Model for Rescaled<'a> {
    fn name(&self) -> String {
        format!("{} (rescaled)", self.inner.name())
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    fn param_names(&self) -> [String; 2] {
        self.inner.param_names()
    }

    fn delays(&self, _mu: Param) -> Vec<f64> {
        self.delays.clone()
    }

    fn diffusion(&self, mu: Param) -> Vec<f64> {
        let s = self.factor_at(mu);
        self.inner.diffusion(mu).iter().map(|d| s * d).collect()
    }

    fn linear(&self, mu: Param) -> LinearPart {
        self.inner.linear(mu).scaled(self.factor_at(mu))
    }

    fn reaction(&self, mu: Param, hist: &[&[f64]], out: &mut [f64]) {
        self.inner.reaction(mu, hist, out);
        let s = self.factor_at(mu);
        out.iter_mut().for_each(|x| *x *= s);
    }

    fn equilibrium(&self, mu: Param) -> Vec<f64> {
        self.inner.equilibrium(mu)
    }

    fn tensor2(&self, mu: Param, a: &[CVec], b: &[CVec]) -> CVec {
        self.inner.tensor2(mu, a, b) * C64::from(self.factor_at(mu))
    }

    fn tensor3(&self, mu: Param, a: &[CVec], b: &[CVec], c: &[CVec]) -> CVec {
        self.inner.tensor3(mu, a, b, c) * C64::from(self.factor_at(mu))
    }

    fn param_derivative(&self, mu: Param, i: usize) -> Option<(Vec<f64>, LinearPart)> {
        let (dd, dl) = self
            .inner
            .param_derivative(mu, i)
            .unwrap_or_else(|| central_param_derivative(self.inner, mu, i, 1e-6 * (1.0 + mu[i].abs())));
        let s = self.factor_at(mu);
        let ds = self.factor_derivative(mu, i);
        let d = self.inner.diffusion(mu);
        let l = self.inner.linear(mu);
        Some((
            d.iter().zip(&dd).map(|(x, dx)| ds * x + s * dx).collect(),
            dl.scaled(s).axpy(ds, &l),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Epidemic, PredatorPrey};

    #[test]
    fn unit_rescale_is_identity() {
        let m = PredatorPrey::standard();
        let mu = [1.0, 0.7];
        let r = prepare_critical(&m, 0, mu).unwrap();
        assert_eq!(r.diffusion(mu), m.diffusion(mu));
        assert!(r.linear(mu).max_abs_diff(&m.linear(mu)) == 0.0);
        assert_eq!(r.delays(mu), vec![1.0]);
    }

    #[test]
    fn round_trip() {
        let m = Epidemic::standard(3.0);
        let mu = [0.529, 5.23];
        let r = prepare_critical(&m, 0, mu).unwrap();
        for probe in [mu, [0.6, 4.0]] {
            let (d, l) = r.restore(probe);
            let d0 = m.diffusion(probe);
            for (a, b) in d.iter().zip(&d0) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(l.max_abs_diff(&m.linear(probe)) < 1e-12);
        }
        assert!((r.delays(mu)[1] - 1.0 / 0.529).abs() < 1e-12);
    }

    #[test]
    fn zero_delay_rejected() {
        let m = PredatorPrey::standard();
        assert!(prepare_critical(&m, 0, [0.0, 0.7]).is_err());
    }

    #[test]
    fn expansion_matches_scaled_derivatives() {
        let m = Epidemic::standard(3.0);
        let mu = [0.529, 5.23];
        let r = prepare_critical(&m, 0, mu).unwrap();
        let e = crate::model::expand_at(&r, mu, 1e-6);
        // ∂D/∂ω = diag(d1, d2, d3), ∂D/∂d2 = ω diag(0, 1, 0)
        assert_eq!(e.d1[0], vec![0.05, 5.23, 0.06]);
        assert!((e.d1[1][1] - 0.529).abs() < 1e-15);
        assert!(e.l1[0].max_abs_diff(&m.linear(mu)) < 1e-15);
        assert!(e.l1[1].max_abs_diff(&LinearPart::zeros(3, 2)) == 0.0);
    }
}

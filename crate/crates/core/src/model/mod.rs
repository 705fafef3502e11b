//! Delayed reaction–diffusion systems on (0, lπ) with Neumann boundary.
//!
//! A model is `u_t = D(μ)Δu + A(μ)u(t) + Σ_k G_k(μ)u(t − r_k) + F(μ, u_t)`
//! written around an equilibrium, so `F` and its Jacobian vanish at zero.

mod epidemic;
mod predprey;
mod rescale;
mod table;

pub use epidemic::{builtin_epidemic, Epidemic};
pub use predprey::{builtin_predprey, PredatorPrey};
pub use rescale::{prepare_critical, Rescaled};
pub use table::{load_model, model_from_doc, model_from_json, Affine, DelaySpec, ModelDoc, Monomial, TableModel};

use crate::linalg::{CVec, RMat, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Param = [f64; 2];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no positive equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("cannot rescale by a zero delay (index {0})")]
    ZeroDelay(usize),
    #[error("wrong arity {0} for a Taylor coefficient, expected 2 or 3")]
    Arity(usize),
    #[error("invalid model document: {0}")]
    Document(String),
    #[error("unknown built-in model `{0}`")]
    UnknownBuiltin(String),
}

/// Matrices multiplying `u(t)` and `u(t − r_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPart {
    pub a: RMat,
    pub g: Vec<RMat>,
}

impl LinearPart {
    pub fn zeros(n: usize, m: usize) -> Self {
        LinearPart {
            a: RMat::zeros(n, n),
            g: vec![RMat::zeros(n, n); m],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        LinearPart {
            a: &self.a * s,
            g: self.g.iter().map(|g| g * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &LinearPart) -> Self {
        LinearPart {
            a: &self.a + &other.a * s,
            g: self
                .g
                .iter()
                .zip(&other.g)
                .map(|(x, y)| x + y * s)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &LinearPart) -> f64 {
        let mut d = (&self.a - &other.a).amax();
        for (x, y) in self.g.iter().zip(&other.g) {
            d = d.max((x - y).amax());
        }
        d
    }

    /// Applies the operator to a complex history (`hist[0]` at θ=0, `hist[k]` at θ=−r_k).
    pub fn apply(&self, hist: &[CVec]) -> CVec {
        let mut v = crate::linalg::to_complex(&self.a) * &hist[0];
        for (k, g) in self.g.iter().enumerate() {
            v += crate::linalg::to_complex(g) * &hist[k + 1];
        }
        v
    }
}

/// Pure-imaginary root `iz` of one characteristic slice, with the delay phase
/// `z·r` reduced to [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImagRoot {
    pub freq: f64,
    pub phase: f64,
}

/// Marks the parameter that acts only as one of the delays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayParam {
    pub param: usize,
    pub delay: usize,
}

pub trait Model: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    /// Domain is (0, lπ).
    fn scale(&self) -> f64;
    fn param_names(&self) -> [String; 2];
    fn delays(&self, mu: Param) -> Vec<f64>;
    /// Diagonal of D(μ).
    fn diffusion(&self, mu: Param) -> Vec<f64>;
    fn linear(&self, mu: Param) -> LinearPart;
    /// Nonlinear remainder; `hist[0]` is u(t), `hist[k]` is u(t − r_k).
    fn reaction(&self, mu: Param, hist: &[&[f64]], out: &mut [f64]);

    /// Equilibrium in original coordinates.
    fn equilibrium(&self, _mu: Param) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn tensor2(&self, mu: Param, a: &[CVec], b: &[CVec]) -> CVec {
        fd_tensor2(self, mu, a, b)
    }

    fn tensor3(&self, mu: Param, a: &[CVec], b: &[CVec], c: &[CVec]) -> CVec {
        fd_tensor3(self, mu, a, b, c)
    }

    /// Analytic ∂/∂μ_i of (diag D, L); `None` falls back to differences.
    fn param_derivative(&self, _mu: Param, _i: usize) -> Option<(Vec<f64>, LinearPart)> {
        None
    }

    fn delay_param(&self) -> Option<DelayParam> {
        None
    }

    /// Closed-form imaginary roots of slice `m`, when the model has them.
    fn closed_form_roots(&self, _m: u32, _mu: Param) -> Option<Vec<ImagRoot>> {
        None
    }
}

/// First-order Taylor data of D and L at μ0.
#[derive(Clone, Debug)]
pub struct ParamExpansion {
    pub mu0: Param,
    pub delays: Vec<f64>,
    pub d0: Vec<f64>,
    pub l0: LinearPart,
    pub d1: [Vec<f64>; 2],
    pub l1: [LinearPart; 2],
}

fn bump(mu: Param, i: usize, h: f64) -> Param {
    let mut m = mu;
    m[i] += h;
    m
}

pub fn central_param_derivative<M: Model + ?Sized>(
    model: &M,
    mu: Param,
    i: usize,
    h: f64,
) -> (Vec<f64>, LinearPart) {
    let (p, q) = (bump(mu, i, h), bump(mu, i, -h));
    let dp = model.diffusion(p);
    let dq = model.diffusion(q);
    let dd = dp.iter().zip(&dq).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let lp = model.linear(p);
    let lq = model.linear(q);
    (dd, lp.axpy(-1.0, &lq).scaled(0.5 / h))
}

pub fn expand_at<M: Model + ?Sized>(model: &M, mu0: Param, h: f64) -> ParamExpansion {
    let deriv = |i: usize| {
        model
            .param_derivative(mu0, i)
            .unwrap_or_else(|| central_param_derivative(model, mu0, i, h * (1.0 + mu0[i].abs())))
    };
    let (d10, l10) = deriv(0);
    let (d01, l01) = deriv(1);
    ParamExpansion {
        mu0,
        delays: model.delays(mu0),
        d0: model.diffusion(mu0),
        l0: model.linear(mu0),
        d1: [d10, d01],
        l1: [l10, l01],
    }
}

/// Symmetric multilinear form of the nonlinearity applied to 2 or 3 histories.
pub fn taylor_coeff<M: Model + ?Sized>(
    model: &M,
    mu: Param,
    dirs: &[&[CVec]],
) -> Result<CVec, ModelError> {
    match dirs.len() {
        2 => Ok(model.tensor2(mu, dirs[0], dirs[1])),
        3 => Ok(model.tensor3(mu, dirs[0], dirs[1], dirs[2])),
        k => Err(ModelError::Arity(k)),
    }
}

fn eval_real<M: Model + ?Sized>(model: &M, mu: Param, hist: &[Vec<f64>]) -> Vec<f64> {
    let views: Vec<&[f64]> = hist.iter().map(|v| v.as_slice()).collect();
    let mut out = vec![0.0; model.dim()];
    model.reaction(mu, &views, &mut out);
    out
}

fn combo(parts: &[(&[Vec<f64>], f64)]) -> Vec<Vec<f64>> {
    let slots = parts[0].0.len();
    let n = parts[0].0[0].len();
    (0..slots)
        .map(|k| {
            (0..n)
                .map(|i| parts.iter().map(|(h, w)| w * h[k][i]).sum())
                .collect()
        })
        .collect()
}

fn split(h: &[CVec]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        h.iter().map(|v| v.iter().map(|z| z.re).collect()).collect(),
        h.iter().map(|v| v.iter().map(|z| z.im).collect()).collect(),
    )
}

fn hist_norm(h: &[Vec<f64>]) -> f64 {
    h.iter()
        .flat_map(|v| v.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

fn real_d2<M: Model + ?Sized>(model: &M, mu: Param, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let (na, nb) = (hist_norm(a), hist_norm(b));
    if na == 0.0 || nb == 0.0 {
        return vec![0.0; model.dim()];
    }
    let s = 1e-4;
    let (wa, wb) = (s / na, s / nb);
    let mut out = vec![0.0; model.dim()];
    for (sa, sb, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
        let f = eval_real(model, mu, &combo(&[(a, sa * wa), (b, sb * wb)]));
        for (o, v) in out.iter_mut().zip(f) {
            *o += sign * v;
        }
    }
    out.iter().map(|v| v / (4.0 * wa * wb)).collect()
}

fn real_d3<M: Model + ?Sized>(
    model: &M,
    mu: Param,
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    c: &[Vec<f64>],
) -> Vec<f64> {
    let (na, nb, nc) = (hist_norm(a), hist_norm(b), hist_norm(c));
    if na == 0.0 || nb == 0.0 || nc == 0.0 {
        return vec![0.0; model.dim()];
    }
    let s = 1e-3;
    let (wa, wb, wc) = (s / na, s / nb, s / nc);
    let mut out = vec![0.0; model.dim()];
    for sa in [1.0, -1.0] {
        for sb in [1.0, -1.0] {
            for sc in [1.0, -1.0] {
                let sign = sa * sb * sc;
                let f = eval_real(model, mu, &combo(&[(a, sa * wa), (b, sb * wb), (c, sc * wc)]));
                for (o, v) in out.iter_mut().zip(f) {
                    *o += sign * v;
                }
            }
        }
    }
    out.iter().map(|v| v / (8.0 * wa * wb * wc)).collect()
}

fn to_cvec(re: &[f64], im: &[f64]) -> CVec {
    CVec::from_iterator(re.len(), re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)))
}

/// Second derivative of the nonlinearity by central differences, extended to
/// complex arguments by bilinearity.
pub fn fd_tensor2<M: Model + ?Sized>(model: &M, mu: Param, a: &[CVec], b: &[CVec]) -> CVec {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let rr = real_d2(model, mu, &ar, &br);
    let ii = real_d2(model, mu, &ai, &bi);
    let ri = real_d2(model, mu, &ar, &bi);
    let ir = real_d2(model, mu, &ai, &br);
    let re: Vec<f64> = rr.iter().zip(&ii).map(|(x, y)| x - y).collect();
    let im: Vec<f64> = ri.iter().zip(&ir).map(|(x, y)| x + y).collect();
    to_cvec(&re, &im)
}

pub fn fd_tensor3<M: Model + ?Sized>(
    model: &M,
    mu: Param,
    a: &[CVec],
    b: &[CVec],
    c: &[CVec],
) -> CVec {
    let parts = [split(a), split(b), split(c)];
    let n = model.dim();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for mask in 0..8u32 {
        let pick = |j: usize| {
            if mask >> j & 1 == 1 {
                &parts[j].1
            } else {
                &parts[j].0
            }
        };
        let imag_count = mask.count_ones();
        let v = real_d3(model, mu, pick(0), pick(1), pick(2));
        // i^k for k imaginary factors
        let (target, sign) = match imag_count % 4 {
            0 => (&mut re, 1.0),
            1 => (&mut im, 1.0),
            2 => (&mut re, -1.0),
            _ => (&mut im, -1.0),
        };
        for (t, x) in target.iter_mut().zip(v) {
            *t += sign * x;
        }
    }
    to_cvec(&re, &im)
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub kind: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub reaction_at_zero: f64,
    pub jacobian_at_zero: f64,
    pub tensor2_asymmetry: f64,
    pub tensor3_asymmetry: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn probe_hist(n: usize, slots: usize, seed: u64) -> Vec<CVec> {
    let t = seed as f64;
    (0..slots)
        .map(|k| {
            CVec::from_iterator(
                n,
                (0..n).map(|j| {
                    let x = 1.7 * t + 0.9 * k as f64 + 0.37 * j as f64;
                    C64::new((3.1 * x).sin(), (2.3 * x + 0.5).cos())
                }),
            )
        })
        .collect()
}

pub fn validate_model<M: Model + ?Sized>(model: &M, mu: Param) -> ValidationReport {
    let n = model.dim();
    let slots = model.delays(mu).len() + 1;
    let mut violations = Vec::new();

    let diff = model.diffusion(mu);
    if let Some(&worst) = diff.iter().min_by(|a, b| a.partial_cmp(b).unwrap()) {
        if worst <= 0.0 {
            violations.push(Violation {
                kind: "diffusion not positive".into(),
                residual: worst,
            });
        }
    }
    if model.delays(mu).iter().any(|&r| r < 0.0) {
        violations.push(Violation {
            kind: "negative delay".into(),
            residual: model.delays(mu).iter().cloned().fold(0.0, f64::min),
        });
    }

    let zero = vec![vec![0.0; n]; slots];
    let f0 = eval_real(model, mu, &zero);
    let reaction_at_zero = f0.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if reaction_at_zero > 1e-12 {
        violations.push(Violation {
            kind: "reaction nonzero at equilibrium".into(),
            residual: reaction_at_zero,
        });
    }

    let h = 1e-6;
    let mut jac = 0.0f64;
    for k in 0..slots {
        for j in 0..n {
            let mut p = zero.clone();
            let mut q = zero.clone();
            p[k][j] = h;
            q[k][j] = -h;
            let fp = eval_real(model, mu, &p);
            let fq = eval_real(model, mu, &q);
            for (x, y) in fp.iter().zip(&fq) {
                jac = jac.max(((x - y) / (2.0 * h)).abs());
            }
        }
    }
    if jac > 1e-6 {
        violations.push(Violation {
            kind: "reaction Jacobian nonzero at equilibrium".into(),
            residual: jac,
        });
    }

    let a = probe_hist(n, slots, 1);
    let b = probe_hist(n, slots, 2);
    let c = probe_hist(n, slots, 3);
    let t_ab = model.tensor2(mu, &a, &b);
    let t_ba = model.tensor2(mu, &b, &a);
    let tensor2_asymmetry = (&t_ab - &t_ba).norm() / (1.0 + t_ab.norm());
    if tensor2_asymmetry > 1e-8 {
        violations.push(Violation {
            kind: "tensor2 asymmetric".into(),
            residual: tensor2_asymmetry,
        });
    }
    let t_abc = model.tensor3(mu, &a, &b, &c);
    let mut tensor3_asymmetry = 0.0f64;
    for (x, y, z) in [(&b, &a, &c), (&a, &c, &b), (&c, &b, &a)] {
        let t = model.tensor3(mu, x, y, z);
        tensor3_asymmetry = tensor3_asymmetry.max((&t_abc - &t).norm() / (1.0 + t_abc.norm()));
    }
    if tensor3_asymmetry > 1e-6 {
        violations.push(Violation {
            kind: "tensor3 asymmetric".into(),
            residual: tensor3_asymmetry,
        });
    }

    ValidationReport {
        violations,
        reaction_at_zero,
        jacobian_at_zero: jac,
        tensor2_asymmetry,
        tensor3_asymmetry,
    }
}

/// Values of `v e^{λθ}` at θ = 0, −r_1, …, −r_m.
pub fn exp_hist(v: &CVec, lambda: C64, delays: &[f64]) -> Vec<CVec> {
    std::iter::once(v.clone())
        .chain(delays.iter().map(|&r| v * (-lambda * r).exp()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn linear_part_arithmetic() {
        let l = LinearPart {
            a: RMat::identity(2, 2),
            g: vec![RMat::from_element(2, 2, 2.0)],
        };
        let z = l.axpy(-1.0, &l);
        assert_eq!(z, LinearPart::zeros(2, 1));
        let h = vec![
            crate::linalg::cvec(&[c(1.0, 0.0), c(0.0, 1.0)]),
            crate::linalg::cvec(&[c(1.0, 0.0), c(1.0, 0.0)]),
        ];
        let v = l.apply(&h);
        assert!((v[0] - c(5.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(4.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn exp_hist_values() {
        let v = crate::linalg::cvec(&[c(1.0, 0.0)]);
        let h = exp_hist(&v, c(0.0, 2.0), &[0.5]);
        assert!((h[1][0] - c(0.0, -1.0).exp()).norm() < 1e-15);
    }
}

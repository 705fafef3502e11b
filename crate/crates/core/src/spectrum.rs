//! Characteristic slices, imaginary roots, Hopf branches and double Hopf points.

use crate::linalg::{self, c, CMat, C64};
use crate::model::{DelayParam, Model, Param};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("model has no parameter acting as a single delay")]
    NoDelayParam,
    #[error("Newton polish did not converge near z = {0}")]
    NoConvergence(f64),
    #[error("degenerate crossing: |ψ ∂Δ/∂λ φ| = {0:e}")]
    DegenerateCrossing(f64),
    #[error("no sign change of the branch difference in the sweep window")]
    NoBracket,
    #[error("contour passes too close to a root (m = {0})")]
    ContourTooClose(u32),
    #[error("csv export failed: {0}")]
    Export(String),
}

pub fn wave_factor(model: &dyn Model, m: u32) -> f64 {
    let l = model.scale();
    (m as f64).powi(2) / (l * l)
}

/// Δ_m(λ) = λI + (m²/l²)D − A − Σ_k G_k e^{−λ r_k}.
pub fn char_matrix(model: &dyn Model, m: u32, mu: Param, lambda: C64) -> CMat {
    let n = model.dim();
    let k = wave_factor(model, m);
    let lin = model.linear(mu);
    let d = model.diffusion(mu);
    let delays = model.delays(mu);
    let mut out = CMat::identity(n, n) * lambda - linalg::to_complex(&lin.a);
    for i in 0..n {
        out[(i, i)] += k * d[i];
    }
    for (g, r) in lin.g.iter().zip(&delays) {
        out -= linalg::to_complex(g) * (-lambda * r).exp();
    }
    out
}

/// ∂Δ_m/∂λ = I + Σ_k r_k G_k e^{−λ r_k}.
pub fn char_dlambda(model: &dyn Model, mu: Param, lambda: C64) -> CMat {
    let n = model.dim();
    let lin = model.linear(mu);
    let mut out = CMat::identity(n, n);
    for (g, r) in lin.g.iter().zip(model.delays(mu)) {
        out += linalg::to_complex(g) * (r * (-lambda * r).exp());
    }
    out
}

/// ∂Δ_m/∂μ_i at fixed λ.
pub fn char_dparam(model: &dyn Model, m: u32, mu: Param, lambda: C64, i: usize) -> CMat {
    if let Some(dp) = model.delay_param() {
        if dp.param == i {
            let lin = model.linear(mu);
            let r = model.delays(mu)[dp.delay];
            return linalg::to_complex(&lin.g[dp.delay]) * (lambda * (-lambda * r).exp());
        }
    }
    let h = 1e-4 * (1.0 + mu[i].abs());
    let at = |s: f64| {
        let mut p = mu;
        p[i] += s * h;
        char_matrix(model, m, p, lambda)
    };
    (at(-2.0) - at(-1.0) * c(8.0, 0.0) + at(1.0) * c(8.0, 0.0) - at(2.0)) / c(12.0 * h, 0.0)
}

pub fn char_residual(model: &dyn Model, m: u32, mu: Param, lambda: C64) -> C64 {
    linalg::det(&char_matrix(model, m, mu, lambda))
}

/// d/dx det M via column replacement; well defined at singular M.
fn det_derivative(m: &CMat, dm: &CMat) -> C64 {
    let mut total = c(0.0, 0.0);
    for j in 0..m.ncols() {
        let mut mj = m.clone();
        mj.set_column(j, &dm.column(j));
        total += linalg::det(&mj);
    }
    total
}

/// Imaginary root `i·freq` with delay phase; the critical delays of the
/// tied parameter are `(phase + 2πj)/freq`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfRoot {
    pub freq: f64,
    pub phase: f64,
    pub residual: f64,
}

impl HopfRoot {
    pub fn delay(&self, j: u32) -> f64 {
        (self.phase + 2.0 * PI * j as f64) / self.freq
    }
}

fn tied(model: &dyn Model) -> Result<DelayParam, SpectrumError> {
    model.delay_param().ok_or(SpectrumError::NoDelayParam)
}

fn with_param(mu: Param, i: usize, v: f64) -> Param {
    let mut p = mu;
    p[i] = v;
    p
}

fn residual_at(model: &dyn Model, m: u32, mu: Param, dp: DelayParam, z: f64, phase: f64) -> f64 {
    char_residual(model, m, with_param(mu, dp.param, phase / z), c(0.0, z)).norm()
}

/// Positive frequencies `z` with `det Δ_m(iz) = 0` for some value of the
/// delay parameter, sorted by decreasing frequency. Uses the model's closed
/// form when it has one.
pub fn imaginary_roots(model: &dyn Model, m: u32, mu: Param) -> Result<Vec<HopfRoot>, SpectrumError> {
    let dp = tied(model)?;
    match model.closed_form_roots(m, mu) {
        Some(roots) => Ok(roots
            .into_iter()
            .map(|r| HopfRoot {
                freq: r.freq,
                phase: r.phase,
                residual: residual_at(model, m, mu, dp, r.freq, r.phase),
            })
            .collect()),
        None => imaginary_roots_generic(model, m, mu),
    }
}

/// Coefficients of det Δ_m(iz) as a polynomial in E = e^{−izT}.
fn exp_polynomial(model: &dyn Model, m: u32, mu: Param, dp: DelayParam, z: f64) -> Vec<C64> {
    let n = model.dim();
    let k = wave_factor(model, m);
    let lin = model.linear(mu);
    let d = model.diffusion(mu);
    let delays = model.delays(mu);
    let lambda = c(0.0, z);
    let mut base = CMat::identity(n, n) * lambda - linalg::to_complex(&lin.a);
    for i in 0..n {
        base[(i, i)] += k * d[i];
    }
    for (idx, (g, r)) in lin.g.iter().zip(&delays).enumerate() {
        if idx != dp.delay {
            base -= linalg::to_complex(g) * (-lambda * r).exp();
        }
    }
    let gt = linalg::to_complex(&lin.g[dp.delay]);
    let p = n + 1;
    let samples: Vec<C64> = (0..p)
        .map(|s| {
            let w = C64::from_polar(1.0, 2.0 * PI * s as f64 / p as f64);
            linalg::det(&(&base - &gt * w))
        })
        .collect();
    (0..p)
        .map(|j| {
            samples
                .iter()
                .enumerate()
                .map(|(s, v)| v * C64::from_polar(1.0, -2.0 * PI * (s * j) as f64 / p as f64))
                .sum::<C64>()
                / p as f64
        })
        .collect()
}

fn unit_circle_indicator(coeffs: &[C64]) -> (f64, Vec<C64>) {
    let roots = linalg::poly_roots(coeffs);
    let f = roots.iter().map(|e| e.norm_sqr() - 1.0).product::<f64>();
    (f, roots)
}

/// Frobenius bound on |z| for any imaginary root of slice `m`.
pub fn frequency_bound(model: &dyn Model, m: u32, mu: Param) -> f64 {
    let k = wave_factor(model, m);
    let lin = model.linear(mu);
    let d = model.diffusion(mu);
    let mut kd_a = -lin.a.clone();
    for i in 0..model.dim() {
        kd_a[(i, i)] += k * d[i];
    }
    kd_a.norm() + lin.g.iter().map(|g| g.norm()).sum::<f64>()
}

/// Scan + bracket + Newton path that works for any model with a delay
/// parameter.
pub fn imaginary_roots_generic(
    model: &dyn Model,
    m: u32,
    mu: Param,
) -> Result<Vec<HopfRoot>, SpectrumError> {
    let dp = tied(model)?;
    let zmax = frequency_bound(model, m, mu) * 1.01 + 1e-3;
    let steps = 4000usize;
    let ind = |z: f64| unit_circle_indicator(&exp_polynomial(model, m, mu, dp, z)).0;
    let mut roots: Vec<HopfRoot> = Vec::new();
    let mut za = zmax * 1e-6;
    let mut fa = ind(za);
    for s in 1..=steps {
        let zb = zmax * s as f64 / steps as f64;
        let fb = ind(zb);
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (za, zb, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = ind(mid);
                if fm.signum() == flo.signum() && fm != 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 * hi {
                    break;
                }
            }
            let z0 = 0.5 * (lo + hi);
            let (_, es) = unit_circle_indicator(&exp_polynomial(model, m, mu, dp, z0));
            if let Some(e) = es
                .iter()
                .min_by(|a, b| (a.norm() - 1.0).abs().partial_cmp(&(b.norm() - 1.0).abs()).unwrap())
            {
                let phase0 = (-e.arg()).rem_euclid(2.0 * PI);
                let root = polish(model, m, mu, dp, z0, phase0)?;
                if !roots.iter().any(|r| (r.freq - root.freq).abs() < 1e-9 * root.freq) {
                    roots.push(root);
                }
            }
        }
        za = zb;
        fa = fb;
    }
    roots.sort_by(|a, b| b.freq.partial_cmp(&a.freq).unwrap());
    Ok(roots)
}

/// Newton iteration in (z, T) on det Δ_m(iz; μ_T) = 0.
fn polish(
    model: &dyn Model,
    m: u32,
    mu: Param,
    dp: DelayParam,
    z0: f64,
    phase0: f64,
) -> Result<HopfRoot, SpectrumError> {
    let mut z = z0;
    // keep T away from zero so the phase stays defined
    let mut t = if phase0 < 1e-12 { 2.0 * PI / z } else { phase0 / z };
    for _ in 0..50 {
        let p = with_param(mu, dp.param, t);
        let lambda = c(0.0, z);
        let mat = char_matrix(model, m, p, lambda);
        let f = linalg::det(&mat);
        let fz = det_derivative(&mat, &char_dlambda(model, p, lambda)) * c(0.0, 1.0);
        let ft = det_derivative(&mat, &char_dparam(model, m, p, lambda, dp.param));
        let jac = nalgebra::Matrix2::new(fz.re, ft.re, fz.im, ft.im);
        let step = match jac.try_inverse() {
            Some(inv) => inv * nalgebra::Vector2::new(-f.re, -f.im),
            None => return Err(SpectrumError::NoConvergence(z0)),
        };
        z += step[0];
        t += step[1];
        if step[0].abs() < 1e-15 * z.abs().max(1.0) && step[1].abs() < 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    let phase = (z * t).rem_euclid(2.0 * PI);
    let residual = residual_at(model, m, mu, dp, z, phase);
    if !(residual < 1e-8) || !(z > 0.0) {
        return Err(SpectrumError::NoConvergence(z0));
    }
    Ok(HopfRoot { freq: z, phase, residual })
}

/// dλ/dμ_i of a simple imaginary root.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Transversality {
    pub d_lambda: C64,
}

impl Transversality {
    pub fn re(&self) -> f64 {
        self.d_lambda.re
    }

    pub fn sign(&self) -> i8 {
        if self.d_lambda.re > 0.0 {
            1
        } else if self.d_lambda.re < 0.0 {
            -1
        } else {
            0
        }
    }

    /// Re[(dλ/dμ)^{-1}], which has the same sign as Re dλ/dμ.
    pub fn re_inverse(&self) -> f64 {
        self.d_lambda.inv().re
    }
}

/// Implicit differentiation of Δ_m(λ(μ), μ)φ = 0 with respect to μ_i.
pub fn transversality_wrt(
    model: &dyn Model,
    m: u32,
    mu: Param,
    freq: f64,
    i: usize,
) -> Result<Transversality, SpectrumError> {
    let lambda = c(0.0, freq);
    let mat = char_matrix(model, m, mu, lambda);
    let (phi, _) = linalg::null_right(&mat);
    let (psi, _) = linalg::null_left(&mat);
    let den = linalg::sandwich(&psi, &char_dlambda(model, mu, lambda), &phi);
    if den.norm() < 1e-12 {
        return Err(SpectrumError::DegenerateCrossing(den.norm()));
    }
    let num = linalg::sandwich(&psi, &char_dparam(model, m, mu, lambda, i), &phi);
    Ok(Transversality { d_lambda: -num / den })
}

/// dλ/d(delay parameter) at a Hopf point; `mu` carries the critical delay.
pub fn transversality(
    model: &dyn Model,
    m: u32,
    mu: Param,
    freq: f64,
) -> Result<Transversality, SpectrumError> {
    let dp = tied(model)?;
    transversality_wrt(model, m, mu, freq, dp.param)
}

/// One Hopf branch: wave number, frequency rank (0 = largest) and delay index j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchId {
    pub n: u32,
    pub rank: usize,
    pub j: u32,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HopfSample {
    pub sweep: f64,
    pub delay: f64,
    pub freq: f64,
    pub transversality_sign: i8,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfBranch {
    pub id: BranchId,
    pub sweep_param: usize,
    pub samples: Vec<HopfSample>,
    /// First sweep value where the tracked root disappeared.
    pub end: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.steps.max(1);
        (0..=n).map(move |s| self.lo + (self.hi - self.lo) * s as f64 / n as f64)
    }
}

pub fn sweep_param(model: &dyn Model) -> Result<usize, SpectrumError> {
    Ok(1 - tied(model)?.param)
}

fn point(dp: DelayParam, sweep: f64, delay: f64) -> Param {
    let mut mu = [0.0; 2];
    mu[dp.param] = delay;
    mu[1 - dp.param] = sweep;
    mu
}

/// Critical delay curve of one branch over a sweep of the other parameter.
pub fn hopf_curve(model: &dyn Model, id: BranchId, sweep: Sweep) -> Result<HopfBranch, SpectrumError> {
    let dp = tied(model)?;
    let mut samples: Vec<HopfSample> = Vec::new();
    let mut end = None;
    for p in sweep.values() {
        let roots = imaginary_roots(model, id.n, point(dp, p, 0.0))?;
        let chosen = match samples.last() {
            None => roots.get(id.rank).copied(),
            Some(prev) => roots
                .iter()
                .min_by(|a, b| {
                    (a.freq - prev.freq)
                        .abs()
                        .partial_cmp(&(b.freq - prev.freq).abs())
                        .unwrap()
                })
                .filter(|r| (r.freq - prev.freq).abs() < 0.25 * prev.freq)
                .copied(),
        };
        match chosen {
            Some(r) => {
                let delay = r.delay(id.j);
                let mu = point(dp, p, delay);
                let sign = transversality(model, id.n, mu, r.freq).map(|t| t.sign()).unwrap_or(0);
                samples.push(HopfSample {
                    sweep: p,
                    delay,
                    freq: r.freq,
                    transversality_sign: sign,
                    residual: r.residual,
                });
            }
            None if !samples.is_empty() => {
                end = Some(p);
                break;
            }
            None => {}
        }
    }
    Ok(HopfBranch {
        id,
        sweep_param: 1 - dp.param,
        samples,
        end,
    })
}

/// Critical delay of a branch at one sweep value, with its frequency.
pub fn branch_delay(model: &dyn Model, id: BranchId, sweep: f64) -> Result<Option<(f64, f64)>, SpectrumError> {
    let dp = tied(model)?;
    let roots = imaginary_roots(model, id.n, point(dp, sweep, 0.0))?;
    Ok(roots.get(id.rank).map(|r| (r.delay(id.j), r.freq)))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HopfMode {
    pub n: u32,
    /// Frequency in the model's own time.
    pub freq: f64,
    pub branch: BranchId,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleHopfPoint {
    pub mu0: Param,
    pub modes: [HopfMode; 2],
    pub hypotheses: Option<HypothesisReport>,
}

impl DoubleHopfPoint {
    pub fn ratio(&self) -> f64 {
        let (a, b) = (self.modes[0].freq, self.modes[1].freq);
        a.min(b) / a.max(b)
    }
}

/// Intersections of two branches inside the sweep window, sorted by the
/// swept parameter. Modes are ordered by wave number; equal wave numbers keep
/// the caller's branch order.
pub fn find_double_hopf(
    model: &dyn Model,
    a: BranchId,
    b: BranchId,
    sweep: Sweep,
    check: Option<&NondegeneracyConfig>,
) -> Result<Vec<DoubleHopfPoint>, SpectrumError> {
    let dp = tied(model)?;
    let diff = |p: f64| -> Result<Option<f64>, SpectrumError> {
        match (branch_delay(model, a, p)?, branch_delay(model, b, p)?) {
            (Some((ta, _)), Some((tb, _))) => Ok(Some(ta - tb)),
            _ => Ok(None),
        }
    };
    let grid: Vec<f64> = sweep.values().collect();
    let mut points = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &p in &grid {
        let cur = diff(p)?.map(|v| (p, v));
        if let (Some((pa, va)), Some((pb, vb))) = (prev, cur) {
            if va == 0.0 || va.signum() != vb.signum() {
                let root = refine_root(&|x| diff(x).ok().flatten().unwrap_or(f64::NAN), pa, va, pb, vb);
                let (ta, fa) = branch_delay(model, a, root)?.ok_or(SpectrumError::NoBracket)?;
                let (_, fb) = branch_delay(model, b, root)?.ok_or(SpectrumError::NoBracket)?;
                let mut modes = [
                    HopfMode { n: a.n, freq: fa, branch: a },
                    HopfMode { n: b.n, freq: fb, branch: b },
                ];
                if modes[0].n > modes[1].n {
                    modes.swap(0, 1);
                }
                let mut pt = DoubleHopfPoint {
                    mu0: point(dp, root, ta),
                    modes,
                    hypotheses: None,
                };
                if let Some(cfg) = check {
                    pt.hypotheses = Some(verify_nondegeneracy(model, &pt, cfg));
                }
                points.push(pt);
            }
        }
        prev = cur;
    }
    if points.is_empty() {
        return Err(SpectrumError::NoBracket);
    }
    points.sort_by(|x, y| x.mu0[1 - dp.param].partial_cmp(&y.mu0[1 - dp.param]).unwrap());
    Ok(points)
}

/// Bisection with secant steps on a bracketed sign change.
fn refine_root(f: &dyn Fn(f64) -> f64, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        let x = if secant.is_finite() && secant > a.min(b) && secant < a.max(b) {
            // alternate: secant proposal then bisection on the smaller side
            let fx = f(secant);
            if fx == 0.0 {
                return secant;
            }
            if fx.signum() == fa.signum() {
                a = secant;
                fa = fx;
            } else {
                b = secant;
                fb = fx;
            }
            0.5 * (a + b)
        } else {
            mid
        };
        let fx = f(x);
        if fx == 0.0 || !fx.is_finite() {
            return x;
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NondegeneracyConfig {
    pub eps_res: f64,
    pub delta: f64,
    /// Ω = omega_factor · max(ω1, ω2), raised per slice to the frequency bound.
    pub omega_factor: f64,
    pub nodes: usize,
    pub m_cap: u32,
    pub m_max: Option<u32>,
}

impl Default for NondegeneracyConfig {
    fn default() -> Self {
        NondegeneracyConfig {
            eps_res: 1e-3,
            delta: 1e-2,
            omega_factor: 4.0,
            nodes: 4000,
            m_cap: 200,
            m_max: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceCount {
    pub m: u32,
    pub expected: i64,
    pub counted: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    /// ω1 < ω2 as in the textbook ordering.
    pub ordered: bool,
    pub residuals: [f64; 2],
    pub simple: bool,
    /// Closest strong resonance (i, j) and |ω_min/ω_max − i/j|.
    pub nearest_resonance: (u32, u32, f64),
    pub slices: Vec<SliceCount>,
    pub tail_threshold: Option<u32>,
    pub notes: Vec<String>,
}

/// Smallest m with −d_min m²/l² + ‖A‖ + Σ‖G_k‖ < 0.
pub fn tail_threshold(model: &dyn Model, mu: Param) -> Option<u32> {
    let d_min = model.diffusion(mu).iter().cloned().fold(f64::INFINITY, f64::min);
    if !(d_min > 0.0) {
        return None;
    }
    let lin = model.linear(mu);
    let bound = lin.a.norm() + lin.g.iter().map(|g| g.norm()).sum::<f64>();
    let l = model.scale();
    let m = (bound * l * l / d_min).sqrt().floor() as u64 + 1;
    u32::try_from(m).ok()
}

/// Number of zeros of det Δ_m inside the rectangle [−δ, δ] × [−Ω, Ω],
/// from the phase increments of the determinant along the boundary.
pub fn count_roots(model: &dyn Model, m: u32, mu: Param, delta: f64, omega: f64, nodes: usize) -> Option<i64> {
    let corners = [c(delta, -omega), c(delta, omega), c(-delta, omega), c(-delta, -omega)];
    let perim = 4.0 * delta + 4.0 * omega;
    let f = |z: C64| char_residual(model, m, mu, z);
    let mut total = 0.0;
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        let len = (b - a).norm();
        let pieces = ((nodes as f64) * len / perim).ceil().max(4.0) as usize;
        for p in 0..pieces {
            let za = a + (b - a) * (p as f64 / pieces as f64);
            let zb = a + (b - a) * ((p + 1) as f64 / pieces as f64);
            total += phase_increment(&f, za, f(za), zb, f(zb), 0)?;
        }
    }
    Some((total / (2.0 * PI)).round() as i64)
}

fn phase_increment(f: &dyn Fn(C64) -> C64, za: C64, fa: C64, zb: C64, fb: C64, depth: u32) -> Option<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.5 {
        return Some(d);
    }
    if depth > 40 {
        return None;
    }
    let zm = 0.5 * (za + zb);
    let fm = f(zm);
    if fm.norm() == 0.0 {
        return None;
    }
    Some(phase_increment(f, za, fa, zm, fm, depth + 1)? + phase_increment(f, zm, fm, zb, fb, depth + 1)?)
}

pub fn verify_nondegeneracy(model: &dyn Model, pt: &DoubleHopfPoint, cfg: &NondegeneracyConfig) -> HypothesisReport {
    let mu = pt.mu0;
    let [m1, m2] = pt.modes;
    let mut notes = Vec::new();

    let residuals = [
        char_residual(model, m1.n, mu, c(0.0, m1.freq)).norm(),
        char_residual(model, m2.n, mu, c(0.0, m2.freq)).norm(),
    ];
    let simple = [m1, m2].iter().all(|md| {
        let s = linalg::singular_values(&char_matrix(model, md.n, mu, c(0.0, md.freq)));
        let k = s.len();
        k < 2 || s[k - 2] > 1e-6 * s[0].max(1.0)
    }) && [m1, m2].iter().all(|md| transversality(model, md.n, mu, md.freq).is_ok());

    let ratio = pt.ratio();
    let mut nearest = (1, 1, f64::INFINITY);
    for j in 1..=4u32 {
        for i in 1..=j {
            let dist = (ratio - i as f64 / j as f64).abs();
            if dist < nearest.2 {
                nearest = (i, j, dist);
            }
        }
    }
    let h2 = nearest.2 > cfg.eps_res;
    if !h2 {
        notes.push(format!("strong resonance {}:{} within {:e}", nearest.0, nearest.1, nearest.2));
    }

    let tail = tail_threshold(model, mu);
    let m_max = cfg
        .m_max
        .or(tail.map(|t| t.saturating_sub(1)))
        .unwrap_or(cfg.m_cap)
        .min(cfg.m_cap);
    let tail_ok = tail.is_some_and(|t| t <= m_max + 1);
    if !tail_ok {
        notes.push("tail bound does not certify slices beyond the cap".into());
    }
    let wmax = m1.freq.max(m2.freq);
    let mut slices = Vec::new();
    let mut counts_ok = true;
    for m in 0..=m_max {
        let expected = [m1, m2].iter().filter(|md| md.n == m).count() as i64 * 2;
        let omega = (cfg.omega_factor * wmax).max(frequency_bound(model, m, mu) + 1.0);
        let mut got = count_roots(model, m, mu, cfg.delta, omega, cfg.nodes);
        if got.is_none() {
            got = count_roots(model, m, mu, 2.0 * cfg.delta, omega, cfg.nodes);
        }
        match got {
            Some(k) => {
                if k != expected {
                    counts_ok = false;
                }
                slices.push(SliceCount { m, expected, counted: k });
            }
            None => {
                counts_ok = false;
                notes.push(format!("contour too close to a root for m = {m}"));
            }
        }
    }
    let h1 = simple && counts_ok && tail_ok && residuals.iter().all(|r| *r < 1e-8);
    let h3 = m1.n <= m2.n;
    HypothesisReport {
        h1,
        h2,
        h3,
        ordered: m1.freq < m2.freq,
        residuals,
        simple,
        nearest_resonance: nearest,
        slices,
        tail_threshold: tail,
        notes,
    }
}

/// Writes `sweep,delay,frequency,transversality_sign,residual` rows.
pub fn write_branch_csv<W: Write>(branch: &HopfBranch, out: W) -> Result<(), SpectrumError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| SpectrumError::Export(e.to_string());
    w.write_record(["sweep", "critical_delay", "frequency", "transversality_sign", "residual"])
        .map_err(err)?;
    for s in &branch.samples {
        w.write_record(&[
            s.sweep.to_string(),
            s.delay.to_string(),
            s.freq.to_string(),
            s.transversality_sign.to_string(),
            s.residual.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| SpectrumError::Export(e.to_string()))
}

/// Unit-modulus check used by property tests.
pub fn exp_roots_at(model: &dyn Model, m: u32, mu: Param, z: f64) -> Result<Vec<C64>, SpectrumError> {
    let dp = tied(model)?;
    Ok(linalg::poly_roots(&exp_polynomial(model, m, mu, dp, z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Epidemic, PredatorPrey};

    #[test]
    fn conjugate_symmetry() {
        let m = Epidemic::standard(3.0);
        for k in 0..20 {
            let lam = c(0.3 * k as f64 - 2.0, 1.7 - 0.21 * k as f64);
            let a = char_residual(&m, 2, [0.53, 5.0], lam);
            let b = char_residual(&m, 2, [0.53, 5.0], lam.conj());
            assert!((a.conj() - b).norm() <= 1e-13 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn zero_is_not_a_root_predprey() {
        let m = PredatorPrey::standard();
        let r1 = 0.6739271475;
        let (_, bn, _, dn) = m.char_coeffs(0, r1);
        let det = char_residual(&m, 0, [10.0, r1], c(0.0, 0.0));
        assert!((det.re - (bn + dn)).abs() < 1e-12);
        assert!(det.norm() > 1e-3);
    }

    #[test]
    fn delay_shift_between_branches() {
        let m = Epidemic::standard(3.0);
        let r = imaginary_roots(&m, 1, [0.0, 5.23]).unwrap()[0];
        assert!((r.delay(1) - r.delay(0) - 2.0 * PI / r.freq).abs() < 1e-10);
    }

    #[test]
    fn counts_known_roots() {
        let m = Epidemic::standard(3.0);
        let r = imaginary_roots(&m, 1, [0.0, 5.23]).unwrap()[0];
        let mu = [r.delay(0), 5.23];
        assert_eq!(count_roots(&m, 1, mu, 1e-2, 4.0 * r.freq, 4000), Some(2));
        assert_eq!(count_roots(&m, 5, mu, 1e-2, 4.0 * r.freq, 4000), Some(0));
    }

    #[test]
    fn refine_finds_simple_root() {
        let f = |x: f64| x * x - 2.0;
        let r = refine_root(&f, 0.0, -2.0, 3.0, 7.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }
}

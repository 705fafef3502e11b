//! Second- and third-order normal-form coefficients on the center manifold
//! of a double Hopf point.

mod integrals;
mod tables;

pub use integrals::{gamma, spatial_integrals, SpatialIntegrals};
pub use tables::{case_tables, ETerm, HSpec};

use crate::eigenbasis::{build_basis, EigenData, EigenError};
use crate::linalg::{self, ser_cvec, CVec, C64};
use crate::model::{exp_hist, expand_at, prepare_critical, Model, ModelError, ParamExpansion, Param};
use crate::spectrum::{char_matrix, DoubleHopfPoint};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Exponents of z1, z2, z3, z4 in a monomial.
pub type Quad = [u8; 4];

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error("rescaling: {0}")]
    Model(#[from] ModelError),
    #[error("eigenbasis: {0}")]
    Eigen(#[from] EigenError),
    #[error("model has no parameter acting as a single delay")]
    NoDelayParam,
    #[error("{stage}: near-resonant denominator {term} = {value:e}")]
    NearResonance { stage: &'static str, term: String, value: f64 },
    #[error("h functions: resolvent resonance at j = {j}, σ = {sigma}, condition {cond:e}")]
    ResolventResonance { j: u32, sigma: C64, cond: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WaveCase {
    /// n1 = n2 = 0.
    BothZero,
    /// n1 = 0, n2 ≠ 0.
    FirstZero,
    /// n1, n2 ≠ 0 and n2 = n1.
    Equal,
    /// n1, n2 ≠ 0 and n2 = 2 n1.
    Double,
    /// n1, n2 ≠ 0 otherwise.
    Generic,
}

pub fn wave_case(n1: u32, n2: u32) -> WaveCase {
    match (n1, n2) {
        (0, 0) => WaveCase::BothZero,
        (0, _) => WaveCase::FirstZero,
        _ if n1 == n2 => WaveCase::Equal,
        _ if n2 == 2 * n1 => WaveCase::Double,
        _ => WaveCase::Generic,
    }
}

/// The four resonant cubic coefficients z1²z2, z1z3z4, z3²z4, z1z2z3.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Cubic {
    pub m2100: C64,
    pub m1011: C64,
    pub m0021: C64,
    pub m1110: C64,
}

impl Cubic {
    pub fn from_array(v: [C64; 4]) -> Self {
        Cubic { m2100: v[0], m1011: v[1], m0021: v[2], m1110: v[3] }
    }

    pub fn to_array(&self) -> [C64; 4] {
        [self.m2100, self.m1011, self.m0021, self.m1110]
    }
}

/// Monomials of the four cubic coefficients and the row (0 → ψ1, 2 → ψ3) they belong to.
pub const CUBIC_TARGETS: [(Quad, usize); 4] = [([2, 1, 0, 0], 0), ([1, 0, 1, 1], 0), ([0, 0, 2, 1], 2), ([1, 1, 1, 0], 2)];

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormCoeffs {
    pub b11: C64,
    pub b21: C64,
    pub b13: C64,
    pub b23: C64,
    pub b3: Cubic,
    pub c: Cubic,
    pub d: Cubic,
    pub e: Cubic,
    pub case: WaveCase,
    pub n: [u32; 2],
    /// Frequencies in rescaled time.
    pub omega: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct FScalar {
    pub q: String,
    pub k: usize,
    pub value: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormReport {
    pub coeffs: NormalFormCoeffs,
    pub rescale_factor: f64,
    pub basis: EigenData,
    pub integrals: SpatialIntegrals,
    pub f2: Vec<FScalar>,
    pub max_resolvent_residual: f64,
}

impl NormalFormReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormalFormConfig {
    pub eps_res: f64,
    pub max_condition: f64,
    /// Relative step for parameter derivatives without an analytic form.
    pub fd_step: f64,
}

impl Default for NormalFormConfig {
    fn default() -> Self {
        NormalFormConfig { eps_res: 1e-3, max_condition: 1e12, fd_step: 1e-6 }
    }
}

/// Everything evaluated at the critical point of a model whose time already
/// normalizes the chosen delay.
pub struct Critical<'a> {
    pub model: &'a dyn Model,
    pub mu0: Param,
    pub delays: Vec<f64>,
    pub basis: EigenData,
    pub lam: [C64; 4],
    pub wave: [u32; 4],
    pub phi: [CVec; 4],
    pub psi: [CVec; 4],
    pub phi_hist: [Vec<CVec>; 4],
}

impl<'a> Critical<'a> {
    pub fn new(model: &'a dyn Model, mu0: Param, basis: EigenData) -> Self {
        let delays = model.delays(mu0);
        let cols = basis.columns();
        let lam = [cols[0].1, cols[1].1, cols[2].1, cols[3].1];
        let wave = [cols[0].2, cols[1].2, cols[2].2, cols[3].2];
        let phi = cols.map(|c| c.0);
        let psi = basis.rows();
        let phi_hist = [0, 1, 2, 3].map(|k| exp_hist(&phi[k], lam[k], &delays));
        Critical { model, mu0, delays, basis, lam, wave, phi, psi, phi_hist }
    }

    pub fn omega(&self) -> [f64; 2] {
        [self.lam[0].im, self.lam[2].im]
    }

    /// λ_q = Σ q_i λ_i.
    pub fn lambda_of(&self, q: Quad) -> C64 {
        q.iter().zip(&self.lam).map(|(&a, &l)| l * a as f64).sum()
    }

    fn min_omega(&self) -> f64 {
        let [a, b] = self.omega();
        a.abs().min(b.abs())
    }
}

pub fn quads(order: u8) -> Vec<Quad> {
    let mut out = Vec::new();
    for a in 0..=order {
        for b in 0..=order - a {
            for c in 0..=order - a - b {
                out.push([a, b, c, order - a - b - c]);
            }
        }
    }
    out.sort_by(|x, y| y.cmp(x));
    out
}

pub fn quad_label(q: Quad) -> String {
    q.iter().map(|d| d.to_string()).collect()
}

fn multinomial(q: Quad) -> f64 {
    let fact = |n: u8| (1..=n as u64).product::<u64>() as f64;
    fact(q.iter().sum()) / q.iter().map(|&x| fact(x)).product::<f64>()
}

fn slot_args<'s>(sys: &'s Critical, q: Quad) -> Vec<&'s [CVec]> {
    let mut args = Vec::new();
    for (i, &c) in q.iter().enumerate() {
        for _ in 0..c {
            args.push(sys.phi_hist[i].as_slice());
        }
    }
    args
}

/// F_q: coefficient of z^q in the nonlinearity evaluated on Φz (quadratic or cubic q).
pub fn taylor_f(sys: &Critical, q: Quad) -> CVec {
    let args = slot_args(sys, q);
    let v = crate::model::taylor_coeff(sys.model, sys.mu0, &args).expect("order 2 or 3");
    v * C64::from(multinomial(q))
}

pub fn quadratic_f(sys: &Critical) -> BTreeMap<Quad, CVec> {
    quads(2).into_iter().map(|q| (q, taylor_f(sys, q))).collect()
}

/// B11, B21, B13, B23.
pub fn second_order(sys: &Critical, exp: &ParamExpansion) -> [C64; 4] {
    let l = sys.model.scale();
    let coeff = |param: usize, k: usize| {
        let kk = (sys.wave[k] as f64).powi(2) / (l * l);
        let mut v = exp.l1[param].apply(&sys.phi_hist[k]);
        for (i, d) in exp.d1[param].iter().enumerate() {
            v[i] -= sys.phi[k][i] * (kk * d);
        }
        linalg::dotu(&sys.psi[k], &v)
    };
    [coeff(0, 0), coeff(1, 0), coeff(0, 2), coeff(1, 2)]
}

/// The forty scalars f_q^{1(k)} = ψ_k F_q β, keyed by (q, k) with k ∈ 0..4.
#[derive(Clone, Debug)]
pub struct FLine {
    values: BTreeMap<(Quad, usize), C64>,
}

impl FLine {
    pub fn get(&self, q: Quad, k: usize) -> C64 {
        self.values[&(q, k)]
    }

    pub fn scalars(&self) -> Vec<FScalar> {
        self.values
            .iter()
            .map(|(&(q, k), &value)| FScalar { q: quad_label(q), k: k + 1, value })
            .collect()
    }
}

pub fn f2_line(sys: &Critical, f: &BTreeMap<Quad, CVec>, ints: &SpatialIntegrals) -> FLine {
    let mut values = BTreeMap::new();
    for (&q, fq) in f {
        for k in 0..4 {
            let first = q[0] + q[1] + u8::from(k < 2);
            let second = q[2] + q[3] + u8::from(k >= 2);
            values.insert((q, k), linalg::dotu(&sys.psi[k], fq) * ints.beta(first, second));
        }
    }
    FLine { values }
}

pub fn third_order_c(sys: &Critical, ints: &SpatialIntegrals) -> Cubic {
    let weights = [ints.gamma40, ints.gamma22, ints.gamma04, ints.gamma22];
    let mut out = [C64::new(0.0, 0.0); 4];
    for (slot, ((q, row), w)) in CUBIC_TARGETS.iter().zip(weights).enumerate() {
        out[slot] = linalg::dotu(&sys.psi[*row], &taylor_f(sys, *q)) * (w / 6.0);
    }
    Cubic::from_array(out)
}

struct Term {
    weight: f64,
    num: C64,
    den: C64,
    label: &'static str,
}

fn checked_sum(terms: &[Term], floor: f64, stage: &'static str) -> Result<C64, NormalFormError> {
    let mut total = C64::new(0.0, 0.0);
    for t in terms {
        if t.den.norm() < floor {
            return Err(NormalFormError::NearResonance {
                stage,
                term: t.label.to_string(),
                value: t.den.norm(),
            });
        }
        total += t.num * t.weight / t.den;
    }
    Ok(total / 6.0)
}

/// D2100, D1011, D0021, D1110 from the projected U_2^1 term.
pub fn third_order_d(sys: &Critical, fl: &FLine, eps_res: f64) -> Result<Cubic, NormalFormError> {
    let a = sys.lam[0];
    let b = sys.lam[2];
    let f = |q: &str, k: usize| {
        let d: Vec<u8> = q.bytes().map(|c| c - b'0').collect();
        fl.get([d[0], d[1], d[2], d[3]], k - 1)
    };
    let t = |weight: f64, x: (&str, usize), y: (&str, usize), den: C64, label: &'static str| Term {
        weight,
        num: f(x.0, x.1) * f(y.0, y.1),
        den,
        label,
    };
    let floor = eps_res * sys.min_omega();
    let d2100 = [
        t(2.0, ("2000", 1), ("1100", 1), -a, "-iω1"),
        t(1.0, ("1100", 1), ("2000", 1), a, "iω1"),
        t(1.0, ("1100", 1), ("1100", 2), a, "iω1"),
        t(2.0, ("0200", 1), ("2000", 2), 3.0 * a, "3iω1"),
        t(1.0, ("1010", 1), ("1100", 3), -b, "-iω2"),
        t(1.0, ("0110", 1), ("2000", 3), 2.0 * a - b, "2iω1-iω2"),
        t(1.0, ("1001", 1), ("1100", 4), b, "iω2"),
        t(1.0, ("0101", 1), ("2000", 4), 2.0 * a + b, "2iω1+iω2"),
    ];
    let d1011 = [
        t(2.0, ("2000", 1), ("0011", 1), -a, "-iω1"),
        t(1.0, ("1010", 1), ("1001", 1), -b, "-iω2"),
        t(1.0, ("1001", 1), ("1010", 1), b, "iω2"),
        t(1.0, ("1100", 1), ("0011", 2), a, "iω1"),
        t(1.0, ("0110", 1), ("1001", 2), 2.0 * a - b, "2iω1-iω2"),
        t(1.0, ("0101", 1), ("1010", 2), 2.0 * a + b, "2iω1+iω2"),
        t(1.0, ("1010", 1), ("0011", 3), -b, "-iω2"),
        t(2.0, ("0020", 1), ("1001", 3), a - 2.0 * b, "iω1-2iω2"),
        t(1.0, ("0011", 1), ("1010", 3), a, "iω1"),
        t(1.0, ("1001", 1), ("0011", 4), b, "iω2"),
        t(1.0, ("0011", 1), ("1001", 4), a, "iω1"),
        t(2.0, ("0002", 1), ("1010", 4), a + 2.0 * b, "iω1+2iω2"),
    ];
    let d0021 = [
        t(1.0, ("1010", 3), ("0011", 1), -a, "-iω1"),
        t(1.0, ("1001", 3), ("0020", 1), 2.0 * b - a, "2iω2-iω1"),
        t(1.0, ("0110", 3), ("0011", 2), a, "iω1"),
        t(1.0, ("0101", 3), ("0020", 2), 2.0 * b + a, "2iω2+iω1"),
        t(2.0, ("0020", 3), ("0011", 3), -b, "-iω2"),
        t(1.0, ("0011", 3), ("0020", 3), b, "iω2"),
        t(1.0, ("0011", 3), ("0011", 4), b, "iω2"),
        t(2.0, ("0002", 3), ("0020", 4), 3.0 * b, "3iω2"),
    ];
    let d1110 = [
        t(2.0, ("2000", 3), ("0110", 1), -2.0 * a + b, "-2iω1+iω2"),
        t(1.0, ("1100", 3), ("1010", 1), b, "iω2"),
        t(1.0, ("1010", 3), ("1100", 1), -a, "-iω1"),
        t(1.0, ("1100", 3), ("0110", 2), b, "iω2"),
        t(2.0, ("0200", 3), ("1010", 2), 2.0 * a + b, "2iω1+iω2"),
        t(1.0, ("0110", 3), ("1100", 2), a, "iω1"),
        t(1.0, ("1010", 3), ("0110", 3), -a, "-iω1"),
        t(1.0, ("0110", 3), ("1010", 3), a, "iω1"),
        t(2.0, ("0020", 3), ("1100", 3), -b, "-iω2"),
        t(1.0, ("1001", 3), ("0110", 4), -a + 2.0 * b, "-iω1+2iω2"),
        t(1.0, ("0101", 3), ("1010", 4), a + 2.0 * b, "iω1+2iω2"),
        t(1.0, ("0011", 3), ("1100", 4), b, "iω2"),
    ];
    let stage = "third-order D";
    Ok(Cubic {
        m2100: checked_sum(&d2100, floor, stage)?,
        m1011: checked_sum(&d1011, floor, stage)?,
        m0021: checked_sum(&d0021, floor, stage)?,
        m1110: checked_sum(&d1110, floor, stage)?,
    })
}

/// Σ_p c_p e^{σ_p θ} with vector coefficients.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ExpPoly {
    pub terms: Vec<ExpTerm>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpTerm {
    pub exponent: C64,
    #[serde(serialize_with = "ser_cvec")]
    pub coeff: CVec,
}

impl ExpPoly {
    pub fn eval(&self, theta: f64, dim: usize) -> CVec {
        let mut out = CVec::zeros(dim);
        for t in &self.terms {
            out += &t.coeff * (t.exponent * theta).exp();
        }
        out
    }

    /// Values at θ = 0, −r_1, …
    pub fn hist(&self, delays: &[f64], dim: usize) -> Vec<CVec> {
        std::iter::once(0.0)
            .chain(delays.iter().map(|r| -r))
            .map(|th| self.eval(th, dim))
            .collect()
    }
}

/// S_{yz_i}(y) = 2 D²F[φ_i, y], the derivative of F̃_2(Φz, y) in y along z_i.
pub fn s_operator(sys: &Critical, i: usize, y: &[CVec]) -> CVec {
    sys.model.tensor2(sys.mu0, &sys.phi_hist[i], y) * C64::from(2.0)
}

/// Coefficient matrices F_{y(0)z_i}, F_{y(−r_1)z_i}, … of S_{yz_i}.
pub fn s_matrices(sys: &Critical, i: usize) -> Vec<linalg::CMat> {
    let n = sys.model.dim();
    let slots = sys.delays.len() + 1;
    (0..slots)
        .map(|slot| {
            let mut m = linalg::CMat::zeros(n, n);
            for col in 0..n {
                let mut y = vec![CVec::zeros(n); slots];
                y[slot][col] = C64::new(1.0, 0.0);
                m.set_column(col, &s_operator(sys, i, &y));
            }
            m
        })
        .collect()
}

pub type HTable = BTreeMap<(u32, Quad), ExpPoly>;

/// Builds h_{j q} from its displayed ingredients: the φ_k-projection terms
/// for `spec.ks` and the particular solution with spatial weight `spec.b`.
pub fn h_entry(
    sys: &Critical,
    f: &BTreeMap<Quad, CVec>,
    fl: &FLine,
    spec: &HSpec,
    cfg: &NormalFormConfig,
) -> Result<(ExpPoly, f64), NormalFormError> {
    let sigma = sys.lambda_of(spec.q);
    let mut terms = Vec::new();
    for &k in spec.ks {
        let den = sys.lam[k] - sigma;
        if den.norm() < cfg.eps_res * sys.min_omega() {
            return Err(NormalFormError::NearResonance {
                stage: "h functions",
                term: format!("λ_{} − λ_q in h_{{{} {}}}", k + 1, spec.j, quad_label(spec.q)),
                value: den.norm(),
            });
        }
        terms.push(ExpTerm { exponent: sys.lam[k], coeff: &sys.phi[k] * (fl.get(spec.q, k) / den) });
    }
    let mut residual = 0.0;
    if spec.b != 0.0 {
        let m = char_matrix(sys.model, spec.j, sys.mu0, sigma);
        let cond = linalg::condition(&m);
        if !(cond < cfg.max_condition) {
            return Err(NormalFormError::ResolventResonance { j: spec.j, sigma, cond });
        }
        let rhs = &f[&spec.q] * C64::from(spec.b);
        let x = linalg::solve_refined(&m, &rhs)
            .ok_or(NormalFormError::ResolventResonance { j: spec.j, sigma, cond })?;
        residual = linalg::rel_residual(&m, &x, &rhs);
        terms.push(ExpTerm { exponent: sigma, coeff: x });
    }
    Ok((ExpPoly { terms }, residual))
}

/// The h entries demanded by the active case's E formulas.
pub fn h_solutions(
    sys: &Critical,
    f: &BTreeMap<Quad, CVec>,
    fl: &FLine,
    ints: &SpatialIntegrals,
    cfg: &NormalFormConfig,
) -> Result<(HTable, f64), NormalFormError> {
    let (specs, _) = case_tables(ints);
    let mut table = HTable::new();
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let (h, res) = h_entry(sys, f, fl, spec, cfg)?;
        worst = worst.max(res);
        table.insert((spec.j, spec.q), h);
    }
    Ok((table, worst))
}

pub fn third_order_e(sys: &Critical, h: &HTable, ints: &SpatialIntegrals) -> Cubic {
    let (_, formulas) = case_tables(ints);
    let n = sys.model.dim();
    let mut out = [C64::new(0.0, 0.0); 4];
    for (slot, terms) in formulas.iter().enumerate() {
        let row = CUBIC_TARGETS[slot].1;
        for t in terms {
            let y = h[&(t.j, t.q)].hist(&sys.delays, n);
            out[slot] += linalg::dotu(&sys.psi[row], &s_operator(sys, t.i, &y)) * t.weight;
        }
        out[slot] /= 6.0;
    }
    Cubic::from_array(out)
}

/// Full pipeline on a model whose time already normalizes the chosen delay;
/// `modes` are (wave number, frequency) in that time.
pub fn normal_form(
    model: &dyn Model,
    mu0: Param,
    modes: [(u32, f64); 2],
    cfg: &NormalFormConfig,
) -> Result<NormalFormReport, NormalFormError> {
    let basis = build_basis(model, mu0, modes)?;
    run(&Critical::new(model, mu0, basis), cfg)
}

/// Steps 1–3 on a prepared critical point.
pub fn run(sys: &Critical, cfg: &NormalFormConfig) -> Result<NormalFormReport, NormalFormError> {
    let (n1, n2) = (sys.wave[0], sys.wave[2]);
    let ints = spatial_integrals(n1, n2, sys.model.scale());
    let exp = expand_at(sys.model, sys.mu0, cfg.fd_step);
    let [b11, b21, b13, b23] = second_order(sys, &exp);
    let f = quadratic_f(sys);
    let fl = f2_line(sys, &f, &ints);
    let c = third_order_c(sys, &ints);
    let d = third_order_d(sys, &fl, cfg.eps_res)?;
    let (h, worst) = h_solutions(sys, &f, &fl, &ints, cfg)?;
    let e = third_order_e(sys, &h, &ints);
    let b3 = {
        let (c, d, e) = (c.to_array(), d.to_array(), e.to_array());
        Cubic::from_array([0, 1, 2, 3].map(|i| c[i] + 1.5 * (d[i] + e[i])))
    };
    let coeffs = NormalFormCoeffs {
        b11,
        b21,
        b13,
        b23,
        b3,
        c,
        d,
        e,
        case: wave_case(n1, n2),
        n: [n1, n2],
        omega: sys.omega(),
    };
    Ok(NormalFormReport {
        coeffs,
        rescale_factor: 1.0,
        basis: sys.basis.clone(),
        integrals: ints,
        f2: fl.scalars(),
        max_resolvent_residual: worst,
    })
}

/// Rescales time by the delay tied to a parameter and runs [`normal_form`]
/// at a double Hopf point.
pub fn assemble(
    model: &dyn Model,
    point: &DoubleHopfPoint,
    cfg: &NormalFormConfig,
) -> Result<NormalFormReport, NormalFormError> {
    let dp = model.delay_param().ok_or(NormalFormError::NoDelayParam)?;
    let scaled = prepare_critical(model, dp.delay, point.mu0)?;
    let s = scaled.factor();
    let modes = point.modes.map(|m| (m.n, m.freq * s));
    let mut report = normal_form(&scaled, point.mu0, modes, cfg)?;
    report.rescale_factor = s;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quads_are_complete() {
        assert_eq!(quads(2).len(), 10);
        assert_eq!(quads(3).len(), 20);
        assert_eq!(quads(2)[0], [2, 0, 0, 0]);
        assert_eq!(multinomial([1, 1, 1, 0]), 6.0);
        assert_eq!(multinomial([2, 1, 0, 0]), 3.0);
    }

    #[test]
    fn case_dispatch_is_total() {
        for n1 in 0..=10u32 {
            for n2 in n1..=10 {
                let c = wave_case(n1, n2);
                let expect = if n1 == 0 && n2 == 0 {
                    WaveCase::BothZero
                } else if n1 == 0 {
                    WaveCase::FirstZero
                } else if n1 == n2 {
                    WaveCase::Equal
                } else if n2 == 2 * n1 {
                    WaveCase::Double
                } else {
                    WaveCase::Generic
                };
                assert_eq!(c, expect);
            }
        }
    }

    #[test]
    fn exp_poly_history() {
        let p = ExpPoly {
            terms: vec![ExpTerm { exponent: C64::new(0.0, 2.0), coeff: CVec::from_vec(vec![C64::new(1.0, 0.0)]) }],
        };
        let h = p.hist(&[0.5], 1);
        assert!((h[1][0] - C64::new(0.0, -1.0).exp()).norm() < 1e-15);
    }
}

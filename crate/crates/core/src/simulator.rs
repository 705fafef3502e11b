//! Method-of-lines integration of the delayed reaction–diffusion system on
//! (0, lπ) with Neumann boundary conditions, and diagnostics of the runs.

use crate::model::{Model, Param};
use crate::normalform::gamma;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

pub const BLOW_UP: f64 = 1e8;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("grid needs at least 3 nodes, got {0}")]
    Grid(usize),
    #[error("{found} Poincaré crossings, at least {needed} needed")]
    TooFewCrossings { found: usize, needed: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Uniform nodes x_i = i h on [0, lπ], h = lπ/(N − 1).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Grid {
    pub n: usize,
    pub l: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self, SimError> {
        if n < 3 {
            return Err(SimError::Grid(n));
        }
        Ok(Grid { n, l, h: l * std::f64::consts::PI / (n - 1) as f64 })
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    /// Second difference with ghost nodes u_{−1} = u_1, u_N = u_{N−2}.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let k = 1.0 / (self.h * self.h);
        out[0] = 2.0 * (u[1] - u[0]) * k;
        for i in 1..n - 1 {
            out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * k;
        }
        out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * k;
    }

    /// Trapezoid weights; they annihilate the discrete Laplacian.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] = 0.5 * self.h;
        w[self.n - 1] = 0.5 * self.h;
        w
    }

    pub fn integral(&self, u: &[f64]) -> f64 {
        self.weights().iter().zip(u).map(|(w, v)| w * v).sum()
    }

    /// γ_m sampled at the nodes.
    pub fn mode(&self, m: u32) -> Vec<f64> {
        (0..self.n).map(|i| gamma(m, self.l, self.x(i))).collect()
    }
}

/// min(h²/(2 max d_i), r_min/4).
pub fn step_bound(model: &dyn Model, mu: Param, grid: &Grid) -> f64 {
    let dmax = model.diffusion(mu).into_iter().fold(0.0f64, f64::max);
    let diff = if dmax > 0.0 { grid.h * grid.h / (2.0 * dmax) } else { f64::INFINITY };
    let rmin = model.delays(mu).into_iter().fold(f64::INFINITY, f64::min);
    diff.min(rmin / 4.0)
}

pub fn default_step(model: &dyn Model, mu: Param, grid: &Grid) -> f64 {
    step_bound(model, mu, grid) / 2.0
}

/// Initial history in original coordinates: `f(t, x)` for t ∈ [−r, 0].
pub type InitFn<'a> = dyn Fn(f64, f64) -> Vec<f64> + 'a;

/// Base state plus `amp[c]·cos(n x/l)` on every component, constant in time.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct CosineInit {
    pub base: Vec<f64>,
    pub amp: Vec<f64>,
    pub n: u32,
}

impl CosineInit {
    pub fn eval(&self, l: f64, x: f64) -> Vec<f64> {
        let c = (self.n as f64 * x / l).cos();
        self.base.iter().zip(&self.amp).map(|(b, a)| b + a * c).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SimSpec {
    pub mu: Param,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    /// Full-state samples every `stride` steps.
    pub stride: usize,
    /// Node recorded at every step.
    pub probe: usize,
    pub linear_only: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimRun {
    pub grid: Grid,
    pub dim: usize,
    pub dt: f64,
    pub mu: Param,
    pub equilibrium: Vec<f64>,
    pub delays: Vec<f64>,
    /// Sample times and states, component-major (`state[c·N + i]`).
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub probe_node: usize,
    /// State at the probe node after every step, starting at t = 0.
    pub probe: Vec<Vec<f64>>,
}

/// Four-point Lagrange weights at offset `f` ∈ [0, 1) between nodes 0 and 1
/// of the stencil (−1, 0, 1, 2).
fn lagrange4(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

struct History {
    buf: Vec<Vec<f64>>,
    /// Index of the latest step n in `buf`.
    head: usize,
}

impl History {
    fn at(&self, back: usize) -> &[f64] {
        let len = self.buf.len();
        &self.buf[(self.head + len - back % len) % len]
    }

    fn push(&mut self, v: &[f64]) {
        self.head = (self.head + 1) % self.buf.len();
        self.buf[self.head].copy_from_slice(v);
    }

    /// State σ time units before the latest step; σ ≥ 2 dt.
    fn lookup(&self, sigma: f64, dt: f64, out: &mut [f64]) {
        let p = sigma / dt;
        let j = p.floor();
        let f = p - j;
        let j = j as usize;
        if f == 0.0 {
            out.copy_from_slice(self.at(j));
            return;
        }
        let w = lagrange4(f);
        let rows = [self.at(j - 1), self.at(j), self.at(j + 1), self.at(j + 2)];
        for (i, o) in out.iter_mut().enumerate() {
            *o = w[0] * rows[0][i] + w[1] * rows[1][i] + w[2] * rows[2][i] + w[3] * rows[3][i];
        }
    }
}

struct Rhs<'a> {
    model: &'a dyn Model,
    mu: Param,
    grid: Grid,
    dim: usize,
    diff: Vec<f64>,
    a: Vec<f64>,
    g: Vec<Vec<f64>>,
    linear_only: bool,
    lap: Vec<f64>,
    node: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(model: &'a dyn Model, mu: Param, grid: Grid, linear_only: bool) -> Self {
        let dim = model.dim();
        let lin = model.linear(mu);
        let flat = |m: &crate::linalg::RMat| (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect::<Vec<_>>();
        let nd = lin.g.len();
        Rhs {
            model,
            mu,
            grid,
            dim,
            diff: model.diffusion(mu),
            a: flat(&lin.a),
            g: lin.g.iter().map(flat).collect(),
            linear_only,
            lap: vec![0.0; grid.n],
            node: vec![vec![0.0; dim]; nd + 1],
            out: vec![0.0; dim],
        }
    }

    /// `dst = F(y, delayed)` for the deviation from equilibrium.
    fn eval(&mut self, y: &[f64], delayed: &[Vec<f64>], dst: &mut [f64]) {
        let (n, dim) = (self.grid.n, self.dim);
        for c in 0..dim {
            self.grid.laplacian(&y[c * n..(c + 1) * n], &mut self.lap);
            for i in 0..n {
                dst[c * n + i] = self.diff[c] * self.lap[i];
            }
        }
        for i in 0..n {
            for c in 0..dim {
                self.node[0][c] = y[c * n + i];
                for (k, d) in delayed.iter().enumerate() {
                    self.node[k + 1][c] = d[c * n + i];
                }
            }
            for r in 0..dim {
                let mut s = 0.0;
                for c in 0..dim {
                    s += self.a[r * dim + c] * self.node[0][c];
                    for (k, g) in self.g.iter().enumerate() {
                        s += g[r * dim + c] * self.node[k + 1][c];
                    }
                }
                dst[r * n + i] += s;
            }
            if !self.linear_only {
                let hist: Vec<&[f64]> = self.node.iter().map(|v| v.as_slice()).collect();
                self.model.reaction(self.mu, &hist, &mut self.out);
                for r in 0..dim {
                    dst[r * n + i] += self.out[r];
                }
            }
        }
    }
}

/// Classic RK4 with delayed arguments read from the stored history.
pub fn integrate(model: &dyn Model, spec: &SimSpec, init: &InitFn) -> Result<SimRun, SimError> {
    let grid = spec.grid;
    let (n, dim, dt) = (grid.n, model.dim(), spec.dt);
    let bound = step_bound(model, spec.mu, &grid);
    if !(dt > 0.0 && dt <= bound) {
        return Err(SimError::StepTooLarge { dt, bound });
    }
    let eq = model.equilibrium(spec.mu);
    let delays = model.delays(spec.mu);
    let rmax = delays.iter().cloned().fold(0.0f64, f64::max);
    let slots = (rmax / dt).ceil() as usize + 4;
    let size = n * dim;
    let state_at = |t: f64| {
        let mut v = vec![0.0; size];
        for i in 0..n {
            let u = init(t, grid.x(i));
            for c in 0..dim {
                v[c * n + i] = u[c] - eq[c];
            }
        }
        v
    };
    let mut hist = History { buf: (0..slots).rev().map(|k| state_at(-(k as f64) * dt)).collect(), head: slots - 1 };
    let mut rhs = Rhs::new(model, spec.mu, grid, spec.linear_only);
    let mut y = hist.at(0).to_vec();
    let to_orig = |v: &[f64]| -> Vec<f64> { (0..size).map(|k| v[k] + eq[k / n]).collect() };
    let probe_of = |v: &[f64]| -> Vec<f64> { (0..dim).map(|c| v[c * n + spec.probe] + eq[c]).collect() };
    let mut run = SimRun {
        grid,
        dim,
        dt,
        mu: spec.mu,
        equilibrium: eq.clone(),
        delays: delays.clone(),
        t: vec![0.0],
        states: vec![to_orig(&y)],
        probe_node: spec.probe,
        probe: vec![probe_of(&y)],
    };
    let steps = (spec.t_end / dt).round() as usize;
    let mut delayed = vec![vec![0.0; size]; delays.len()];
    let mut k = [vec![0.0; size], vec![0.0; size], vec![0.0; size], vec![0.0; size]];
    let mut stage = vec![0.0; size];
    let stride = spec.stride.max(1);
    for step in 1..=steps {
        for (s, c) in [0.0, 0.5, 0.5, 1.0].into_iter().enumerate() {
            for (d, r) in delayed.iter_mut().zip(&delays) {
                hist.lookup(r - c * dt, dt, d);
            }
            if s == 0 {
                stage.copy_from_slice(&y);
            } else {
                let prev = &k[s - 1];
                for j in 0..size {
                    stage[j] = y[j] + c * dt * prev[j];
                }
            }
            let (_, tail) = k.split_at_mut(s);
            rhs.eval(&stage, &delayed, &mut tail[0]);
        }
        let mut worst = 0.0f64;
        for j in 0..size {
            y[j] += dt / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
            worst = worst.max(y[j].abs());
        }
        let t = step as f64 * dt;
        if !(worst < BLOW_UP) {
            return Err(SimError::BlowUp { t });
        }
        hist.push(&y);
        run.probe.push(probe_of(&y));
        if step % stride == 0 || step == steps {
            run.t.push(t);
            run.states.push(to_orig(&y));
        }
    }
    Ok(run)
}

impl SimRun {
    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    /// Component `c` of a sample as a spatial profile.
    pub fn profile(&self, sample: usize, c: usize) -> &[f64] {
        let n = self.grid.n;
        &self.states[sample][c * n..(c + 1) * n]
    }

    /// Probe state at time t by cubic interpolation of the per-step record.
    pub fn probe_at(&self, t: f64) -> Vec<f64> {
        let p = (t / self.dt).clamp(0.0, (self.probe.len() - 1) as f64);
        let j = (p.floor() as usize).clamp(1, self.probe.len().saturating_sub(3).max(1));
        let f = p - j as f64;
        if self.probe.len() < 4 {
            return self.probe[p.round() as usize].clone();
        }
        let w = lagrange4(f);
        (0..self.dim)
            .map(|c| (0..4).map(|s| w[s] * self.probe[j + s - 1][c]).sum())
            .collect()
    }
}

impl SimRun {
    /// Time-RMS of |u − u*| at each node over t ≥ `from`, scaled to unit
    /// discrete L² norm.
    pub fn rms_profile(&self, from: f64) -> Vec<f64> {
        let n = self.grid.n;
        let idx: Vec<usize> = (0..self.t.len()).filter(|&s| self.t[s] >= from).collect();
        let mut prof = vec![0.0; n];
        for &s in &idx {
            for c in 0..self.dim {
                for (i, u) in self.profile(s, c).iter().enumerate() {
                    prof[i] += (u - self.equilibrium[c]).powi(2);
                }
            }
        }
        let mut prof: Vec<f64> = prof.into_iter().map(|v| (v / idx.len().max(1) as f64).sqrt()).collect();
        let norm = self.grid.integral(&prof.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
        if norm > 0.0 {
            prof.iter_mut().for_each(|v| *v /= norm);
        }
        prof
    }
}

/// Discrete L² distance between two profiles on the same grid.
pub fn profile_distance(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).collect();
    grid.integral(&d).sqrt()
}

/// Projections of u − u* onto γ_n per sample: `values[sample][mode][component]`.
#[derive(Clone, Debug, Serialize)]
pub struct ModeSeries {
    pub t: Vec<f64>,
    pub modes: Vec<u32>,
    pub values: Vec<Vec<Vec<f64>>>,
}

pub fn mode_amplitudes(run: &SimRun, modes: &[u32]) -> ModeSeries {
    let g = run.grid;
    let w = g.weights();
    let shapes: Vec<Vec<f64>> = modes.iter().map(|&m| g.mode(m)).collect();
    let values = (0..run.states.len())
        .map(|s| {
            shapes
                .iter()
                .map(|shape| {
                    (0..run.dim)
                        .map(|c| {
                            let eq = run.equilibrium[c];
                            run.profile(s, c)
                                .iter()
                                .zip(shape)
                                .zip(&w)
                                .map(|((u, v), wi)| (u - eq) * v * wi)
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    ModeSeries { t: run.t.clone(), modes: modes.to_vec(), values }
}

impl ModeSeries {
    /// RMS over t ≥ `from`, summed in quadrature over components.
    pub fn rms(&self, from: f64) -> Vec<f64> {
        let idx: Vec<usize> = (0..self.t.len()).filter(|&s| self.t[s] >= from).collect();
        (0..self.modes.len())
            .map(|m| {
                let mut acc = 0.0;
                for &s in &idx {
                    acc += self.values[s][m].iter().map(|v| v * v).sum::<f64>();
                }
                (acc / idx.len().max(1) as f64).sqrt()
            })
            .collect()
    }

    /// Dominant mode over t ≥ `from` and its ratio to the runner-up.
    pub fn dominant(&self, from: f64) -> (u32, f64) {
        let r = self.rms(from);
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by(|a, b| r[*b].partial_cmp(&r[*a]).unwrap());
        let ratio = if order.len() > 1 { r[order[0]] / r[order[1]] } else { f64::INFINITY };
        (self.modes[order[0]], ratio)
    }
}

/// Level set of one probe component, read `lag` time units in the past.
#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize)]
pub struct Section {
    pub component: usize,
    pub lag: f64,
    pub level: f64,
    /// +1 for upward crossings, −1 for downward.
    pub direction: i8,
    /// Probe components reported at each crossing.
    pub project: [usize; 2],
}

impl Section {
    /// X(0, t − τ) = X* with (Y, X) at x = 0 for a two-species delayed model;
    /// otherwise the first component crossing its equilibrium value, seen
    /// through the next two components.
    pub fn default_for(run: &SimRun) -> Section {
        if run.dim == 2 {
            Section { component: 0, lag: run.delays[0], level: run.equilibrium[0], direction: 1, project: [1, 0] }
        } else {
            let project = if run.dim > 2 { [1, 2] } else { [1, 0] };
            Section { component: 0, lag: 0.0, level: run.equilibrium[0], direction: 1, project }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub point: [f64; 2],
}

/// Section crossings with t ≥ `from`, located on the cubic probe interpolant.
/// Root of `f` in [a, b] by the Illinois variant of regula falsi.
fn illinois(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0;
    for _ in 0..60 {
        let m = (b - fb * (b - a) / (fb - fa)).clamp(a, b);
        let fm = f(m);
        if fm == 0.0 || (b - a) < 1e-13 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = m;
            fa = fm;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fm.abs() < 1e-15 {
            return m;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

pub fn poincare(run: &SimRun, sec: &Section, from: f64, needed: usize) -> Result<Vec<Crossing>, SimError> {
    let s = |t: f64| run.probe_at(t - sec.lag)[sec.component] - sec.level;
    let dir = sec.direction as f64;
    let dt = run.dt;
    let start = ((from.max(sec.lag) / dt).ceil() as usize).max(1);
    let last = run.probe.len() - 1;
    let mut out = Vec::new();
    let mut prev = s(start as f64 * dt);
    for k in start + 1..=last {
        let (ta, tb) = ((k - 1) as f64 * dt, k as f64 * dt);
        let cur = s(tb);
        if dir * prev < 0.0 && dir * cur >= 0.0 {
            let tc = illinois(&s, ta, tb, prev, cur);
            let v = run.probe_at(tc);
            out.push(Crossing { t: tc, point: [v[sec.project[0]], v[sec.project[1]]] });
        }
        prev = cur;
    }
    if out.len() < needed {
        return Err(SimError::TooFewCrossings { found: out.len(), needed });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AttractorKind {
    Equilibrium,
    Periodic,
    TorusLike,
    Irregular,
    Inconclusive,
}

/// Thresholds of [`classify_attractor`]; calibration constants.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AttractorConfig {
    pub transient: f64,
    pub variance_tol: f64,
    pub diameter_tol: f64,
    /// Section points falling into at most this many groups count as periodic.
    pub max_clusters: usize,
    pub gap_factor: f64,
    pub anisotropy_tol: f64,
    pub neighbours: usize,
    pub min_crossings: usize,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        AttractorConfig {
            transient: 0.5,
            variance_tol: 1e-10,
            diameter_tol: 1e-3,
            max_clusters: 16,
            gap_factor: 5.0,
            anisotropy_tol: 0.1,
            neighbours: 10,
            min_crossings: 50,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractorReport {
    pub kind: AttractorKind,
    pub variance: f64,
    pub crossings: usize,
    pub diameter: f64,
    pub clusters: usize,
    /// Lag q at which the section points settle onto a q-point cycle.
    pub return_lag: Option<usize>,
    /// Section points still travelling in one direction; the window is too
    /// short to judge.
    pub drifting: bool,
    pub anisotropy: f64,
    pub max_gap: f64,
    /// Length-weighted median gap of the rotation-ordered chain.
    pub typical_gap: f64,
    pub section: Section,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Gaps of the closed chain visiting `pts` in the order of frac(kρ), the
/// order a circle map with rotation number ρ imposes on its orbit; ρ is
/// chosen to minimize the chain length.
pub fn rotation_chain(pts: &[[f64; 2]]) -> (f64, Vec<f64>) {
    let n = pts.len();
    let gaps_for = |rho: f64| {
        let mut idx: Vec<usize> = (0..n).collect();
        let key = |k: usize| (k as f64 * rho).rem_euclid(1.0);
        idx.sort_by(|a, b| key(*a).partial_cmp(&key(*b)).unwrap());
        (0..n).map(|j| dist(pts[idx[j]], pts[idx[(j + 1) % n]])).collect::<Vec<f64>>()
    };
    let len = |g: &[f64]| g.iter().sum::<f64>();
    let coarse = 1e-4;
    let mut cands: Vec<(f64, f64)> = (1..=5000).map(|k| k as f64 * coarse).map(|r| (len(&gaps_for(r)), r)).collect();
    cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let fine = 1.0 / (4.0 * (n * n) as f64);
    let steps = (coarse / fine).ceil() as i64;
    let mut best = (f64::INFINITY, 0.0);
    for &(_, r0) in cands.iter().take(20) {
        for s in -steps..=steps {
            let r = r0 + s as f64 * fine;
            if r <= 0.0 || r > 0.5 {
                continue;
            }
            let l = len(&gaps_for(r));
            if l < best.0 {
                best = (l, r);
            }
        }
    }
    (best.1, gaps_for(best.1))
}

/// Gap g such that gaps no longer than g make up half the chain length.
pub fn weighted_median(gaps: &[f64]) -> f64 {
    let mut s = gaps.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = s.iter().sum();
    let mut acc = 0.0;
    for g in &s {
        acc += g;
        if acc >= 0.5 * total {
            return *g;
        }
    }
    *s.last().unwrap_or(&0.0)
}

/// Median over points of λ_min/λ_max of the covariance of each point's
/// `k` nearest neighbours; near zero for points on a curve.
pub fn local_anisotropy(pts: &[[f64; 2]], k: usize) -> f64 {
    let mut ratios: Vec<f64> = pts
        .iter()
        .map(|p| {
            let mut d: Vec<(f64, usize)> = pts.iter().enumerate().map(|(j, q)| (dist(*p, *q), j)).collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let nb: Vec<[f64; 2]> = d.iter().take(k).map(|(_, j)| pts[*j]).collect();
            let m = nb.len() as f64;
            let (mx, my) = nb.iter().fold((0.0, 0.0), |a, q| (a.0 + q[0] / m, a.1 + q[1] / m));
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for q in &nb {
                sxx += (q[0] - mx).powi(2);
                syy += (q[1] - my).powi(2);
                sxy += (q[0] - mx) * (q[1] - my);
            }
            let tr = sxx + syy;
            let det = sxx * syy - sxy * sxy;
            let root = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let (hi, lo) = (tr / 2.0 + root, (tr / 2.0 - root).max(0.0));
            if hi > 0.0 {
                lo / hi
            } else {
                0.0
            }
        })
        .collect();
    median(&mut ratios)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

/// Number of groups when points closer than `tol` to a group's first
/// member join it.
fn cluster_count(pts: &[[f64; 2]], tol: f64) -> usize {
    let mut heads: Vec<[f64; 2]> = Vec::new();
    for p in pts {
        if !heads.iter().any(|h| dist(*h, *p) < tol) {
            heads.push(*p);
        }
    }
    heads.len()
}

/// Smallest q ≤ `max_q` for which the return distances |p_{k+q} − p_k|
/// stay below `tol` over the last quarter of the points and have at least
/// halved on average since the first quarter: an orbit still closing in on
/// a cycle.
pub fn settling_lag(pts: &[[f64; 2]], max_q: usize, tol: f64) -> Option<usize> {
    (1..=max_q).find(|&q| {
        if pts.len() < q + 8 {
            return false;
        }
        let d: Vec<f64> = (0..pts.len() - q).map(|k| dist(pts[k], pts[k + q])).collect();
        let quarter = d.len() / 4;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let last = &d[d.len() - quarter..];
        last.iter().all(|v| *v < tol) && mean(last) < 0.5 * mean(&d[..quarter])
    })
}

/// True when for some q ≤ `max_q` every q-th subsequence of the points
/// moves nearly straight, path length under 1.5 times the distance covered.
pub fn drifting(pts: &[[f64; 2]], max_q: usize) -> bool {
    (1..=max_q).any(|q| {
        (0..q).all(|r| {
            let sub: Vec<[f64; 2]> = pts.iter().skip(r).step_by(q).cloned().collect();
            if sub.len() < 8 {
                return false;
            }
            let path: f64 = sub.windows(2).map(|w| dist(w[0], w[1])).sum();
            path < 1.5 * dist(sub[0], sub[sub.len() - 1])
        })
    })
}

/// Decision tree: small variance, then few Poincaré point clusters or a
/// settling return map, then a locally one-dimensional set whose
/// rotation-ordered chain closes. Points still drifting one way give
/// `Inconclusive`.
pub fn classify_attractor(run: &SimRun, sec: &Section, cfg: &AttractorConfig) -> AttractorReport {
    let from = cfg.transient * run.t_end();
    let start = (from / run.dt).ceil() as usize;
    let window = &run.probe[start.min(run.probe.len() - 1)..];
    let mut variance = 0.0f64;
    for c in 0..run.dim {
        let mean = window.iter().map(|v| v[c]).sum::<f64>() / window.len() as f64;
        let var = window.iter().map(|v| (v[c] - mean).powi(2)).sum::<f64>() / window.len() as f64;
        variance = variance.max(var);
    }
    let mut rep = AttractorReport {
        kind: AttractorKind::Inconclusive,
        variance,
        crossings: 0,
        diameter: f64::NAN,
        clusters: 0,
        return_lag: None,
        drifting: false,
        anisotropy: f64::NAN,
        max_gap: f64::NAN,
        typical_gap: f64::NAN,
        section: *sec,
    };
    if variance < cfg.variance_tol {
        rep.kind = AttractorKind::Equilibrium;
        return rep;
    }
    let pts: Vec<[f64; 2]> = match poincare(run, sec, from, cfg.min_crossings) {
        Ok(c) => c.into_iter().map(|c| c.point).collect(),
        Err(SimError::TooFewCrossings { found, .. }) => {
            rep.crossings = found;
            return rep;
        }
        Err(_) => return rep,
    };
    rep.crossings = pts.len();
    let mut diameter = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            diameter = diameter.max(dist(pts[i], pts[j]));
        }
    }
    rep.diameter = diameter;
    rep.clusters = cluster_count(&pts, cfg.diameter_tol);
    if diameter < cfg.diameter_tol || rep.clusters <= cfg.max_clusters {
        rep.kind = AttractorKind::Periodic;
        return rep;
    }
    rep.return_lag = settling_lag(&pts, cfg.max_clusters, cfg.diameter_tol);
    if rep.return_lag.is_some() {
        rep.kind = AttractorKind::Periodic;
        return rep;
    }
    rep.drifting = drifting(&pts, cfg.max_clusters);
    if rep.drifting {
        return rep;
    }
    rep.anisotropy = local_anisotropy(&pts, cfg.neighbours);
    let (_, gaps) = rotation_chain(&pts);
    rep.max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    rep.typical_gap = weighted_median(&gaps);
    let closes = rep.max_gap < cfg.gap_factor * rep.typical_gap;
    rep.kind = if rep.anisotropy < cfg.anisotropy_tol && closes {
        AttractorKind::TorusLike
    } else {
        AttractorKind::Irregular
    };
    rep
}

/// Mean frequency from upward crossings of the mean and the exponential
/// growth rate from successive maxima of |x − mean|.
pub fn oscillation(t: &[f64], x: &[f64]) -> Option<(f64, f64)> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut ups = Vec::new();
    for k in 1..x.len() {
        let (a, b) = (x[k - 1] - mean, x[k] - mean);
        if a < 0.0 && b >= 0.0 {
            ups.push(t[k - 1] + (t[k] - t[k - 1]) * a / (a - b));
        }
    }
    if ups.len() < 3 {
        return None;
    }
    let freq = 2.0 * std::f64::consts::PI * (ups.len() - 1) as f64 / (ups[ups.len() - 1] - ups[0]);
    let mut peaks = Vec::new();
    for w in ups.windows(2) {
        let (mut best, mut tb) = (0.0f64, 0.0);
        for k in 0..x.len() {
            if t[k] >= w[0] && t[k] < w[1] && (x[k] - mean).abs() > best {
                best = (x[k] - mean).abs();
                tb = t[k];
            }
        }
        peaks.push((tb, best.ln()));
    }
    let n = peaks.len() as f64;
    let (st, sy) = peaks.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = peaks.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2)));
    Some((freq, if den > 0.0 { num / den } else { 0.0 }))
}

/// Columns t, then `c{comp}_x{node}` in original coordinates.
pub fn write_trajectory_csv<W: Write>(run: &SimRun, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["t".to_string()];
    for c in 0..run.dim {
        for i in 0..run.grid.n {
            head.push(format!("c{c}_x{i}"));
        }
    }
    w.write_record(&head)?;
    for (t, s) in run.t.iter().zip(&run.states) {
        let mut rec = vec![format!("{t:.10}")];
        rec.extend(s.iter().map(|v| format!("{v:.12e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_modes_csv<W: Write>(series: &ModeSeries, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let dim = series.values.first().and_then(|v| v.first()).map_or(0, |v| v.len());
    let mut head = vec!["t".to_string()];
    for m in &series.modes {
        for c in 0..dim {
            head.push(format!("n{m}_c{c}"));
        }
    }
    w.write_record(&head)?;
    for (t, row) in series.t.iter().zip(&series.values) {
        let mut rec = vec![format!("{t:.10}")];
        rec.extend(row.iter().flatten().map(|v| format!("{v:.12e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_crossings_csv<W: Write>(pts: &[Crossing], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "p0", "p1"])?;
    for c in pts {
        w.write_record([format!("{:.10}", c.t), format!("{:.12e}", c.point[0]), format!("{:.12e}", c.point[1])])?;
    }
    w.flush()?;
    Ok(())
}

/// Space-time heat map of one component of a trajectory CSV.
pub fn gnuplot_heatmap(csv_path: &str, run: &SimRun, component: usize) -> String {
    let first = 2 + component * run.grid.n;
    let last = first + run.grid.n - 1;
    format!(
        "set datafile separator ','\n\
         set view map\n\
         set xlabel 't'\n\
         set ylabel 'x'\n\
         splot for [k={first}:{last}] '{csv_path}' every ::1 using 1:((k-{first})*{h}):k with points pt 5 ps 0.3 palette notitle\n",
        h = run.grid.h,
    )
}

pub fn gnuplot_section(csv_path: &str) -> String {
    format!(
        "set datafile separator ','\n\
         plot '{csv_path}' every ::1 using 2:3 with points pt 7 ps 0.4 notitle\n"
    )
}

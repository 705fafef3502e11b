//! Planar amplitude system of the double Hopf normal form, its twelve
//! unfoldings and the bifurcation set near the critical point.
//!
//! With z1 = r1 e^{iθ1}, z3 = r2 e^{iθ2}, rescaled amplitudes and time
//! t̂ = ε1 t, the normal form truncated at third order gives
//!
//! ```text
//! ṙ1 = r1 (c1 + r1² + b0 r2²)
//! ṙ2 = r2 (c2 + c0 r1² + d0 r2²)
//! ```
//!
//! with (c1, c2) = ε1 M α and α = μ − μ0.

use crate::linalg::C64;
use crate::model::Param;
use crate::normalform::NormalFormCoeffs;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

pub const DEGENERATE_TOL: f64 = 1e-10;
pub const SIGN_TOL: f64 = 1e-9;
pub const LINE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum UnfoldingError {
    #[error("degenerate cubic coefficient: Re {which} = {value:e}")]
    DegenerateCubic { which: &'static str, value: f64 },
    #[error("boundary case: {quantity} = {value:e} is within {SIGN_TOL:e} of zero")]
    Boundary { quantity: &'static str, value: f64 },
    #[error("sign pattern ({0}, {1}, {2}, {3}) is not realizable")]
    Unrealizable(i8, i8, i8, i8),
    #[error("parameter directions degenerate: det = {0:e}")]
    DegenerateDirections(f64),
    #[error("query point lies on the critical line {0}")]
    OnLine(String),
    #[error("interior equilibrium undefined: d0 − b0 c0 = {0:e}")]
    SingularInterior(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeSystem {
    pub eps1: i8,
    pub eps2: i8,
    pub b0: f64,
    pub c0: f64,
    pub d0: f64,
    pub disc: f64,
    /// Rows (Re B11, Re B21) and (Re B13, Re B23).
    pub m: [[f64; 2]; 2],
    pub mu0: Param,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

pub fn reduce(coeffs: &NormalFormCoeffs, mu0: Param) -> Result<AmplitudeSystem, UnfoldingError> {
    let b = &coeffs.b3;
    for (which, v) in [("B2100", b.m2100.re), ("B0021", b.m0021.re)] {
        if v.abs() < DEGENERATE_TOL {
            return Err(UnfoldingError::DegenerateCubic { which, value: v });
        }
    }
    let eps1 = sign(b.m2100.re);
    let eps2 = sign(b.m0021.re);
    let d0 = (eps1 * eps2) as f64;
    let b0 = d0 * b.m1011.re / b.m0021.re;
    let c0 = b.m1110.re / b.m2100.re;
    Ok(AmplitudeSystem {
        eps1,
        eps2,
        b0,
        c0,
        d0,
        disc: d0 - b0 * c0,
        m: [[coeffs.b11.re, coeffs.b21.re], [coeffs.b13.re, coeffs.b23.re]],
        mu0,
    })
}

impl AmplitudeSystem {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn c_of_alpha(&self, a: [f64; 2]) -> [f64; 2] {
        let e = self.eps1 as f64;
        [
            e * (self.m[0][0] * a[0] + self.m[0][1] * a[1]),
            e * (self.m[1][0] * a[0] + self.m[1][1] * a[1]),
        ]
    }

    pub fn c_of_mu(&self, mu: Param) -> [f64; 2] {
        self.c_of_alpha([mu[0] - self.mu0[0], mu[1] - self.mu0[1]])
    }

    pub fn alpha_of_c(&self, c: [f64; 2]) -> Result<[f64; 2], UnfoldingError> {
        let det = self.det();
        let scale = self.m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        if det.abs() <= 1e-12 * scale * scale {
            return Err(UnfoldingError::DegenerateDirections(det));
        }
        let e = self.eps1 as f64;
        let (x, y) = (e * c[0], e * c[1]);
        Ok([
            (self.m[1][1] * x - self.m[0][1] * y) / det,
            (-self.m[1][0] * x + self.m[0][0] * y) / det,
        ])
    }

    /// Right-hand side in rescaled time.
    pub fn field(&self, c: [f64; 2], r: [f64; 2]) -> [f64; 2] {
        let (r1s, r2s) = (r[0] * r[0], r[1] * r[1]);
        [
            r[0] * (c[0] + r1s + self.b0 * r2s),
            r[1] * (c[1] + self.c0 * r1s + self.d0 * r2s),
        ]
    }

    /// Jacobian of [`field`](Self::field).
    pub fn jacobian(&self, c: [f64; 2], r: [f64; 2]) -> [[f64; 2]; 2] {
        let (r1s, r2s) = (r[0] * r[0], r[1] * r[1]);
        [
            [c[0] + 3.0 * r1s + self.b0 * r2s, 2.0 * self.b0 * r[0] * r[1]],
            [2.0 * self.c0 * r[0] * r[1], c[1] + self.c0 * r1s + 3.0 * self.d0 * r2s],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    Ia,
    Ib,
    II,
    III,
    IVa,
    IVb,
    V,
    VIa,
    VIb,
    VIIa,
    VIIb,
    VIII,
}

/// Sign columns (d0, b0, c0, d0 − b0c0) of the twelve unfoldings.
pub const TABLE: [(CaseLabel, [i8; 4]); 12] = [
    (CaseLabel::Ia, [1, 1, 1, 1]),
    (CaseLabel::Ib, [1, 1, 1, -1]),
    (CaseLabel::II, [1, 1, -1, 1]),
    (CaseLabel::III, [1, -1, 1, 1]),
    (CaseLabel::IVa, [1, -1, -1, 1]),
    (CaseLabel::IVb, [1, -1, -1, -1]),
    (CaseLabel::V, [-1, 1, 1, -1]),
    (CaseLabel::VIa, [-1, 1, -1, 1]),
    (CaseLabel::VIb, [-1, 1, -1, -1]),
    (CaseLabel::VIIa, [-1, -1, 1, 1]),
    (CaseLabel::VIIb, [-1, -1, 1, -1]),
    (CaseLabel::VIII, [-1, -1, -1, -1]),
];

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn label_of_signs(s: [i8; 4]) -> Option<CaseLabel> {
    TABLE.iter().find(|(_, t)| *t == s).map(|(l, _)| *l)
}

/// A critical line n·c = 0 through the origin. Half-lines are bifurcations
/// only along `dir_c`; full lines along both directions.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalLine {
    pub name: String,
    pub kind: String,
    pub normal_c: [f64; 2],
    pub normal_alpha: [f64; 2],
    pub offset: f64,
    pub dir_c: [f64; 2],
    /// Unit direction in α = μ − μ0.
    pub dir_alpha: [f64; 2],
    pub full: bool,
    /// Only the linear part of a curve known to o(c1).
    pub approximate: bool,
}

impl CriticalLine {
    /// dμ2/dμ1 along the line.
    pub fn mu_slope(&self) -> f64 {
        self.dir_alpha[1] / self.dir_alpha[0]
    }

    pub fn contains(&self, c: [f64; 2]) -> bool {
        let n = self.normal_c[0].hypot(self.normal_c[1]);
        let dist = (self.normal_c[0] * c[0] + self.normal_c[1] * c[1]).abs() / n;
        let along = self.dir_c[0] * c[0] + self.dir_c[1] * c[1];
        dist < LINE_TOL && (self.full || along > -LINE_TOL)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnfoldingClass {
    pub label: CaseLabel,
    pub signs: [i8; 4],
    pub amplitude: AmplitudeSystem,
    pub lines: Vec<CriticalLine>,
    pub region_count: usize,
}

impl UnfoldingClass {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classification serializes")
    }
}

pub fn classify(amp: &AmplitudeSystem) -> Result<CaseLabel, UnfoldingError> {
    let q = [("d0", amp.d0), ("b0", amp.b0), ("c0", amp.c0), ("d0 - b0 c0", amp.disc)];
    let mut s = [0i8; 4];
    for (k, (quantity, value)) in q.into_iter().enumerate() {
        if value.abs() < SIGN_TOL {
            return Err(UnfoldingError::Boundary { quantity, value });
        }
        s[k] = sign(value);
    }
    label_of_signs(s).ok_or(UnfoldingError::Unrealizable(s[0], s[1], s[2], s[3]))
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Direction along n·c = 0 on the side where `pick` is positive.
fn half_dir(n: [f64; 2], pick: impl Fn([f64; 2]) -> f64) -> [f64; 2] {
    let d = unit([-n[1], n[0]]);
    if pick(d) >= 0.0 {
        d
    } else {
        [-d[0], -d[1]]
    }
}

fn line(
    amp: &AmplitudeSystem,
    name: &str,
    kind: &str,
    n: [f64; 2],
    dir: [f64; 2],
    full: bool,
    approximate: bool,
) -> Result<CriticalLine, UnfoldingError> {
    let m = amp.m;
    let normal_alpha = [m[0][0] * n[0] + m[1][0] * n[1], m[0][1] * n[0] + m[1][1] * n[1]];
    let dir_alpha = unit(amp.alpha_of_c(dir)?);
    Ok(CriticalLine {
        name: name.into(),
        kind: kind.into(),
        normal_c: n,
        normal_alpha,
        offset: 0.0,
        dir_c: dir,
        dir_alpha,
        full,
        approximate,
    })
}

/// Axes plus the secondary lines of the case.
pub fn bifurcation_lines(amp: &AmplitudeSystem, label: CaseLabel) -> Result<Vec<CriticalLine>, UnfoldingError> {
    let (b0, c0, d0) = (amp.b0, amp.c0, amp.d0);
    let mut out = vec![
        line(amp, "c1=0", "hopf mode 1", [1.0, 0.0], [0.0, 1.0], true, false)?,
        line(amp, "c2=0", "hopf mode 2", [0.0, 1.0], [1.0, 0.0], true, false)?,
    ];
    let e1 = [-c0, 1.0];
    let e1_dir = half_dir(e1, |d| -d[0]);
    let e2 = [-d0, b0];
    let e2_dir = half_dir(e2, |d| -d[1] * d0);
    let hopf = [1.0 - c0, b0 + 1.0];
    match label {
        CaseLabel::Ib => {
            out.push(line(amp, "c2=c0c1", "secondary hopf", e1, e1_dir, false, false)?);
            out.push(line(amp, "c2=c1/b0", "secondary hopf", e2, e2_dir, false, false)?);
        }
        CaseLabel::VIa => {
            let h_dir = half_dir(hopf, |d| -d[0]);
            out.push(line(amp, "L1", "secondary hopf", e1, e1_dir, false, false)?);
            out.push(line(amp, "L2", "heteroclinic", hopf, h_dir, false, true)?);
            out.push(line(amp, "L3", "torus hopf", hopf, h_dir, false, false)?);
            out.push(line(amp, "L4", "secondary hopf", e2, e2_dir, false, false)?);
        }
        _ => {
            out.push(line(amp, "c2=c0c1", "secondary", e1, e1_dir, false, false)?);
            out.push(line(amp, "b0c2=d0c1", "secondary", e2, e2_dir, false, false)?);
            if d0 < 0.0 && amp.disc > 0.0 {
                let h_dir = half_dir(hopf, |d| -d[0]);
                out.push(line(amp, "(b0+1)c2=(c0-1)c1", "torus hopf", hopf, h_dir, false, false)?);
            }
        }
    }
    Ok(out)
}

pub fn unfold(coeffs: &NormalFormCoeffs, mu0: Param) -> Result<UnfoldingClass, UnfoldingError> {
    let amplitude = reduce(coeffs, mu0)?;
    let label = classify(&amplitude)?;
    let lines = bifurcation_lines(&amplitude, label)?;
    let signs = TABLE.iter().find(|(l, _)| *l == label).map(|(_, s)| *s).unwrap_or([0; 4]);
    let region_count = sectors(&lines).len() + lines.iter().filter(|l| l.approximate).count();
    Ok(UnfoldingClass { label, signs, amplitude, lines, region_count })
}

fn angle(d: [f64; 2]) -> f64 {
    d[1].atan2(d[0]).rem_euclid(2.0 * PI)
}

/// Distinct half-line angles in [0, 2π), coincident rays merged.
fn sectors(lines: &[CriticalLine]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::new();
    for l in lines {
        a.push(angle(l.dir_c));
        if l.full {
            a.push(angle([-l.dir_c[0], -l.dir_c[1]]));
        }
    }
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stability {
    Sink,
    Source,
    Saddle,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    Origin,
    Mode1,
    Mode2,
    Mixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeEquilibrium {
    pub kind: EquilibriumKind,
    pub r: [f64; 2],
    /// Eigenvalues in physical time (rescaled ones times ε1).
    pub eigenvalues: [C64; 2],
    pub stability: Stability,
}

fn eig2(j: [[f64; 2]; 2]) -> [C64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = C64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    [C64::from(tr / 2.0) + disc, C64::from(tr / 2.0) - disc]
}

fn stability(ev: &[C64; 2]) -> Stability {
    let tol = 1e-12;
    if ev.iter().any(|e| e.re.abs() <= tol) {
        Stability::Degenerate
    } else if ev.iter().all(|e| e.re < 0.0) {
        Stability::Sink
    } else if ev.iter().all(|e| e.re > 0.0) {
        Stability::Source
    } else {
        Stability::Saddle
    }
}

/// Equilibria of the amplitude system at (c1, c2) with physical-time
/// stability; negative squared amplitudes are discarded.
pub fn amplitude_flow(amp: &AmplitudeSystem, c: [f64; 2]) -> Result<Vec<AmplitudeEquilibrium>, UnfoldingError> {
    let mut pts = vec![(EquilibriumKind::Origin, [0.0, 0.0])];
    if -c[0] > 0.0 {
        pts.push((EquilibriumKind::Mode1, [(-c[0]).sqrt(), 0.0]));
    }
    let r2s = -c[1] / amp.d0;
    if r2s > 0.0 {
        pts.push((EquilibriumKind::Mode2, [0.0, r2s.sqrt()]));
    }
    let det = amp.d0 - amp.b0 * amp.c0;
    if det.abs() < SIGN_TOL {
        if c[0] != 0.0 || c[1] != 0.0 {
            return Err(UnfoldingError::SingularInterior(det));
        }
    } else {
        let x = (-c[0] * amp.d0 + amp.b0 * c[1]) / det;
        let y = (-c[1] + amp.c0 * c[0]) / det;
        if x > 0.0 && y > 0.0 {
            pts.push((EquilibriumKind::Mixed, [x.sqrt(), y.sqrt()]));
        }
    }
    let e = amp.eps1 as f64;
    Ok(pts
        .into_iter()
        .map(|(kind, r)| {
            let ev = eig2(amp.jacobian(c, r)).map(|v| v * e);
            AmplitudeEquilibrium { kind, r, eigenvalues: ev, stability: stability(&ev) }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct Region {
    pub label: String,
    /// Sector index counted counterclockwise from the first sector.
    pub index: usize,
    pub c: [f64; 2],
    pub prediction: Option<String>,
    pub time_reversed: bool,
    pub equilibria: Vec<AmplitudeEquilibrium>,
}

const IB_PROSE: [&str; 6] = [
    "the equilibrium is a sink",
    "a stable periodic solution bifurcates from the equilibrium",
    "periodic solutions of saddle type appear via secondary Hopf bifurcation, stable only on the center manifold",
    "two stable nonhomogeneous periodic solutions coexist",
    "periodic solutions of saddle type appear via secondary Hopf bifurcation, stable only on the center manifold",
    "a stable periodic solution bifurcates from the equilibrium",
];

const VIA_PROSE: [&str; 8] = [
    "no stable equilibrium or periodic solution near the origin",
    "the positive equilibrium is a sink",
    "a stable periodic solution",
    "a quasi-periodic solution on a two-dimensional torus",
    "a quasi-periodic solution on a three-dimensional torus, or none after it vanishes; the two regions are separated only at order o(c1)",
    "the three-dimensional torus has vanished",
    "no stable equilibrium or periodic solution near the origin",
    "no stable equilibrium or periodic solution near the origin",
];

/// Region of α = μ − μ0. Ib regions D1..D6 start at the quadrant c1, c2 > 0;
/// VIa regions D1..D8 start at c1 > 0, c2 < 0; both run counterclockwise.
pub fn region_of(cls: &UnfoldingClass, alpha: [f64; 2]) -> Result<Region, UnfoldingError> {
    let amp = &cls.amplitude;
    let c = amp.c_of_alpha(alpha);
    if c[0].hypot(c[1]) < LINE_TOL {
        return Err(UnfoldingError::OnLine("origin".into()));
    }
    if let Some(l) = cls.lines.iter().find(|l| l.contains(c)) {
        return Err(UnfoldingError::OnLine(l.name.clone()));
    }
    let rays = sectors(&cls.lines);
    let start = match cls.label {
        CaseLabel::VIa => 1.5 * PI,
        _ => 0.0,
    };
    let rel = |a: f64| (a - start + 1e-12).rem_euclid(2.0 * PI);
    let mut rel_rays: Vec<f64> = rays.iter().map(|&a| rel(a)).collect();
    rel_rays.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let t = rel(angle(c));
    let index = rel_rays.iter().filter(|&&r| r <= t).count().saturating_sub(1);
    let reversed = amp.eps1 > 0;
    let (label, prose) = match cls.label {
        CaseLabel::Ib => (format!("D{}", index + 1), Some(IB_PROSE[index % 6])),
        CaseLabel::VIa => {
            let d = if index >= 4 { index + 2 } else { index + 1 };
            let label = if index == 4 { "D5/D6".to_string() } else { format!("D{d}") };
            (label, Some(VIA_PROSE[d - 1]))
        }
        _ => (format!("S{}", index + 1), None),
    };
    let prediction = prose.map(|p| if reversed { format!("time-reversed: {p}") } else { p.to_string() });
    Ok(Region {
        label,
        index,
        c,
        prediction,
        time_reversed: reversed,
        equilibria: amplitude_flow(amp, c)?,
    })
}

/// Segments of length `extent` in α for every critical line, in α and μ.
pub fn write_lines_csv<W: Write>(cls: &UnfoldingClass, extent: f64, out: W) -> Result<(), UnfoldingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "name", "kind", "approximate", "alpha1_a", "alpha2_a", "alpha1_b", "alpha2_b", "mu1_a", "mu2_a", "mu1_b",
        "mu2_b",
    ])?;
    let mu0 = cls.amplitude.mu0;
    for l in &cls.lines {
        let d = l.dir_alpha;
        let a = if l.full { [-extent * d[0], -extent * d[1]] } else { [0.0, 0.0] };
        let b = [extent * d[0], extent * d[1]];
        let mut rec = vec![l.name.clone(), l.kind.clone(), l.approximate.to_string()];
        for v in [a[0], a[1], b[0], b[1], mu0[0] + a[0], mu0[1] + a[1], mu0[0] + b[0], mu0[1] + b[1]] {
            rec.push(format!("{v:.12e}"));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Gnuplot script drawing the line segments of `csv_path` in (μ1, μ2).
pub fn gnuplot_script(csv_path: &str, names: &[String; 2], mu0: Param) -> String {
    format!(
        "set datafile separator ','\n\
         set key outside\n\
         set xlabel '{x}'\n\
         set ylabel '{y}'\n\
         set object circle at {m0},{m1} size char 0.5 fc rgb 'black'\n\
         plot '{csv_path}' every ::1 using 8:9:($10-$8):($11-$9) with vectors nohead lw 2 title 'critical lines'\n",
        x = names[0],
        y = names[1],
        m0 = mu0[0],
        m1 = mu0[1],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(d0: f64, b0: f64, c0: f64) -> AmplitudeSystem {
        AmplitudeSystem {
            eps1: -1,
            eps2: if d0 > 0.0 { -1 } else { 1 },
            b0,
            c0,
            d0,
            disc: d0 - b0 * c0,
            m: [[1.0, 0.2], [0.3, -1.0]],
            mu0: [0.0, 0.0],
        }
    }

    #[test]
    fn table_examples() {
        assert_eq!(classify(&amp(1.0, 1.5, 1.2)).unwrap(), CaseLabel::Ib);
        assert_eq!(classify(&amp(-1.0, 2.1, -0.63)).unwrap(), CaseLabel::VIa);
        assert!(matches!(classify(&amp(1.0, 0.0, 1.0)), Err(UnfoldingError::Boundary { .. })));
    }

    #[test]
    fn every_realizable_pattern_has_a_label() {
        let vals = [-2.0, -0.7, 0.4, 3.0];
        for d0 in [-1.0, 1.0] {
            for b0 in vals {
                for c0 in vals {
                    let a = amp(d0, b0, c0);
                    if a.disc.abs() > SIGN_TOL {
                        assert!(classify(&a).is_ok(), "{d0} {b0} {c0}");
                    }
                }
            }
        }
    }

    #[test]
    fn region_counts() {
        for (a, n) in [(amp(1.0, 1.5, 1.2), 6), (amp(-1.0, 2.1, -0.63), 7)] {
            let label = classify(&a).unwrap();
            let lines = bifurcation_lines(&a, label).unwrap();
            assert_eq!(sectors(&lines).len(), n);
        }
    }
}

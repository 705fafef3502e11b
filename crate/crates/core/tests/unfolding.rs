use dhopf::eigenbasis::{build_basis, EigenData};
use dhopf::linalg::C64;
use dhopf::model::{prepare_critical, Epidemic, PredatorPrey};
use dhopf::normalform::{assemble, run, Critical, NormalFormCoeffs, NormalFormConfig};
use dhopf::spectrum::{branch_delay, find_double_hopf, BranchId, DoubleHopfPoint, Sweep};
use dhopf::unfolding::*;
use proptest::prelude::*;
use std::sync::OnceLock;

const PP_A: BranchId = BranchId { n: 0, rank: 0, j: 1 };
const PP_B: BranchId = BranchId { n: 0, rank: 1, j: 0 };

fn pp() -> &'static (DoubleHopfPoint, NormalFormCoeffs) {
    static CELL: OnceLock<(DoubleHopfPoint, NormalFormCoeffs)> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = PredatorPrey::standard();
        let pt = find_double_hopf(&m, PP_A, PP_B, Sweep { lo: 0.5, hi: 0.9, steps: 80 }, None).unwrap().remove(0);
        let r = assemble(&m, &pt, &NormalFormConfig::default()).unwrap();
        (pt, r.coeffs)
    })
}

fn epi_hh2() -> &'static (DoubleHopfPoint, NormalFormCoeffs) {
    static CELL: OnceLock<(DoubleHopfPoint, NormalFormCoeffs)> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = Epidemic::standard(3.0);
        let a = BranchId { n: 1, rank: 0, j: 0 };
        let b = BranchId { n: 2, rank: 0, j: 0 };
        let pt = find_double_hopf(&m, a, b, Sweep { lo: 5.0, hi: 5.5, steps: 10 }, None).unwrap().remove(0);
        let r = assemble(&m, &pt, &NormalFormConfig::default()).unwrap();
        (pt, r.coeffs)
    })
}

#[test]
fn predprey_unfolding_is_via() {
    let (pt, coeffs) = pp();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    let a = &cls.amplitude;
    assert_eq!((a.eps1, a.eps2), (-1, 1));
    assert!((a.b0 - 2.10189).abs() < 1e-3);
    assert!((a.c0 + 0.63587).abs() < 1e-3);
    assert_eq!(a.d0, -1.0);
    assert!((a.disc - 0.336547).abs() < 1e-3);
    assert_eq!(cls.label, CaseLabel::VIa);
    assert_eq!(cls.region_count, 8);
    let l2 = cls.lines.iter().find(|l| l.name == "L2").unwrap();
    assert!(l2.approximate);
}

#[test]
fn epidemic_hh2_is_ib_with_coexistence_at_d4_point() {
    let (pt, coeffs) = epi_hh2();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    assert_eq!(cls.label, CaseLabel::Ib);
    assert_eq!(cls.region_count, 6);
    let alpha = [0.53 - pt.mu0[0], 5.23 - pt.mu0[1]];
    let reg = region_of(&cls, alpha).unwrap();
    assert_eq!(reg.label, "D4");
    assert!(reg.prediction.unwrap().contains("two stable nonhomogeneous periodic"));
    let stab = |k| reg.equilibria.iter().find(|e| e.kind == k).map(|e| e.stability);
    assert_eq!(stab(EquilibriumKind::Mode1), Some(Stability::Sink));
    assert_eq!(stab(EquilibriumKind::Mode2), Some(Stability::Sink));
    assert_eq!(stab(EquilibriumKind::Mixed), Some(Stability::Saddle));
}

#[test]
fn ib_regions_follow_the_remark() {
    let (pt, coeffs) = epi_hh2();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    let a = &cls.amplitude;
    let at = |c: [f64; 2]| region_of(&cls, a.alpha_of_c(c).unwrap()).unwrap();
    assert_eq!(at([1e-3, 1e-3]).label, "D1");
    assert_eq!(at([-1e-3, 1e-3]).label, "D2");
    assert_eq!(at([1e-3, -1e-3]).label, "D6");
    let sinks = |r: &Region| r.equilibria.iter().filter(|e| e.stability == Stability::Sink).count();
    assert_eq!(sinks(&at([1e-3, 1e-3])), 1);
    for k in 1..=6 {
        let th = -PI_F + (k as f64) * 0.9;
        let r = at([1e-3 * th.cos(), 1e-3 * th.sin()]);
        let want = if r.label == "D4" { 2 } else { 1 };
        assert_eq!(sinks(&r), want, "{}", r.label);
    }
}

const PI_F: f64 = std::f64::consts::PI;

#[test]
fn via_torus_region_has_stable_interior_equilibrium() {
    let (pt, coeffs) = pp();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    let a = cls.amplitude.clone();
    let slope = |name: &str| {
        let l = cls.lines.iter().find(|l| l.name == name).unwrap();
        l.dir_c[1] / l.dir_c[0]
    };
    let mid = |s1: f64, s2: f64| {
        let s = 0.5 * (s1 + s2);
        [-1e-3, -1e-3 * s]
    };
    let d4 = mid(slope("L1"), slope("L3"));
    let r = region_of(&cls, a.alpha_of_c(d4).unwrap()).unwrap();
    assert_eq!(r.label, "D4");
    let inner = r.equilibria.iter().find(|e| e.kind == EquilibriumKind::Mixed).unwrap();
    assert_eq!(inner.stability, Stability::Sink);
    let d5 = mid(slope("L3"), slope("L4"));
    let r = region_of(&cls, a.alpha_of_c(d5).unwrap()).unwrap();
    assert_eq!(r.label, "D5/D6");
    let inner = r.equilibria.iter().find(|e| e.kind == EquilibriumKind::Mixed).unwrap();
    assert_eq!(inner.stability, Stability::Source);
    assert!(inner.eigenvalues[0].im.abs() > 0.0);
    let r = region_of(&cls, a.alpha_of_c([1e-3, 1e-3]).unwrap()).unwrap();
    assert_eq!(r.label, "D2");
    assert_eq!(r.equilibria[0].stability, Stability::Sink);
}

#[test]
fn predprey_simulation_points_in_the_cubic_truncation() {
    let (pt, coeffs) = pp();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    let r = region_of(&cls, [10.8 - pt.mu0[0], 0.69 - pt.mu0[1]]).unwrap();
    assert_eq!(r.label, "D3");
    let inner = r.equilibria.iter().find(|e| e.kind == EquilibriumKind::Mixed);
    assert!(inner.is_none());
    let m1 = r.equilibria.iter().find(|e| e.kind == EquilibriumKind::Mode1).unwrap();
    assert_eq!(m1.stability, Stability::Sink);
}

#[test]
fn decoupled_amplitudes() {
    let (pt, coeffs) = pp();
    let mut c = coeffs.clone();
    c.b3.m1011 = C64::new(0.0, 1.0);
    c.b3.m1110 = C64::new(0.0, -2.0);
    let a = reduce(&c, pt.mu0).unwrap();
    assert_eq!((a.b0, a.c0), (0.0, 0.0));
    assert_eq!(a.disc, a.d0);
    assert!(matches!(classify(&a), Err(UnfoldingError::Boundary { quantity: "b0", .. })));
    let lines = bifurcation_lines(&a, CaseLabel::Ia).unwrap();
    for l in &lines[2..] {
        assert!(l.normal_c[0] == 0.0 || l.normal_c[1] == 0.0, "{}", l.name);
    }
    // d0 = −1 here; a mode-2 state exists for c2 > 0 and attracts in physical time when c1 > 0
    let eq = amplitude_flow(&a, [1e-3, 1e-3]).unwrap();
    let m2 = eq.iter().find(|e| e.kind == EquilibriumKind::Mode2).unwrap();
    assert_eq!(m2.stability, Stability::Saddle);
    let mut c = coeffs.clone();
    c.b3.m1011 = C64::new(0.0, 1.0);
    c.b3.m1110 = C64::new(0.0, -2.0);
    c.b3.m0021 = -c.b3.m0021;
    let a = reduce(&c, pt.mu0).unwrap();
    assert_eq!(a.d0, 1.0);
    let eq = amplitude_flow(&a, [1e-3, -1e-3]).unwrap();
    let sinks: Vec<_> = eq.iter().filter(|e| e.stability == Stability::Sink).collect();
    assert_eq!(sinks.len(), 1);
    assert_eq!(sinks[0].kind, EquilibriumKind::Mode2);
}

#[test]
fn degenerate_cubic_rejected() {
    let (pt, coeffs) = pp();
    let mut c = coeffs.clone();
    c.b3.m2100 = C64::new(0.0, 0.3);
    assert!(matches!(reduce(&c, pt.mu0), Err(UnfoldingError::DegenerateCubic { which: "B2100", .. })));
}

#[test]
fn origin_alone_at_the_critical_point() {
    let (pt, coeffs) = pp();
    let a = reduce(coeffs, pt.mu0).unwrap();
    let eq = amplitude_flow(&a, [0.0, 0.0]).unwrap();
    assert_eq!(eq.len(), 1);
    assert_eq!(eq[0].stability, Stability::Degenerate);
}

#[test]
fn negating_the_vector_field_keeps_the_class() {
    for (pt, coeffs) in [pp(), epi_hh2()] {
        let mut n = coeffs.clone();
        for v in [&mut n.b11, &mut n.b21, &mut n.b13, &mut n.b23] {
            *v = -*v;
        }
        n.b3 = dhopf::normalform::Cubic::from_array(coeffs.b3.to_array().map(|v| -v));
        let (a, b) = (unfold(coeffs, pt.mu0).unwrap(), unfold(&n, pt.mu0).unwrap());
        assert_eq!(a.label, b.label);
        assert_eq!(a.amplitude.eps1, -b.amplitude.eps1);
        assert_eq!(a.amplitude.eps2, -b.amplitude.eps2);
        assert_eq!((a.amplitude.b0, a.amplitude.c0), (b.amplitude.b0, b.amplitude.c0));
        let alpha = [1e-3, -2e-3];
        let (ca, cb) = (a.amplitude.c_of_alpha(alpha), b.amplitude.c_of_alpha(alpha));
        assert!((ca[0] - cb[0]).abs() < 1e-15 && (ca[1] - cb[1]).abs() < 1e-15);
    }
}

#[test]
fn lines_pass_through_critical_point_and_map_consistently() {
    for (pt, coeffs) in [pp(), epi_hh2()] {
        let cls = unfold(coeffs, pt.mu0).unwrap();
        for l in &cls.lines {
            assert_eq!(l.offset, 0.0);
            let c = cls.amplitude.c_of_alpha([1e-2 * l.dir_alpha[0], 1e-2 * l.dir_alpha[1]]);
            let dot = l.normal_c[0] * c[0] + l.normal_c[1] * c[1];
            assert!(dot.abs() < 1e-14, "{} {}", l.name, dot);
            let d = l.dir_c[0] * c[0] + l.dir_c[1] * c[1];
            assert!(d > 0.0);
            let na = l.normal_alpha[0] * l.dir_alpha[0] + l.normal_alpha[1] * l.dir_alpha[1];
            assert!(na.abs() < 1e-12);
        }
    }
}

#[test]
fn primary_lines_are_tangent_to_hopf_curves() {
    let m = PredatorPrey::standard();
    let (pt, coeffs) = pp();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    let r1 = pt.mu0[1];
    let h = 1e-5;
    for (name, id) in [("c1=0", PP_A), ("c2=0", PP_B)] {
        let hi = branch_delay(&m, id, r1 + h).unwrap().unwrap().0;
        let lo = branch_delay(&m, id, r1 - h).unwrap().unwrap().0;
        let fd = (hi - lo) / (2.0 * h);
        let l = cls.lines.iter().find(|l| l.name == name).unwrap();
        let slope = l.dir_alpha[0] / l.dir_alpha[1];
        assert!((slope - fd).abs() < 1e-4 * fd.abs(), "{name}: {slope} vs {fd}");
    }
}

#[test]
fn exports() {
    let (pt, coeffs) = pp();
    let cls = unfold(coeffs, pt.mu0).unwrap();
    let mut buf = Vec::new();
    write_lines_csv(&cls, 0.05, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + cls.lines.len());
    assert!(text.starts_with("name,kind,approximate"));
    let script = gnuplot_script("lines.csv", &["tau".into(), "r1".into()], pt.mu0);
    assert!(script.contains("'lines.csv'"));
    let v: serde_json::Value = serde_json::from_str(&cls.to_json()).unwrap();
    assert_eq!(v["label"], "VIa");
}

/// Physical-time RK4 of the amplitude system.
fn settle(a: &AmplitudeSystem, c: [f64; 2], r0: [f64; 2], t_end: f64, dt: f64, stop: impl Fn([f64; 2]) -> bool) -> [f64; 2] {
    let e = a.eps1 as f64;
    let f = |r: [f64; 2]| {
        let v = a.field(c, r);
        [e * v[0], e * v[1]]
    };
    let mut r = r0;
    let mut t = 0.0;
    while t < t_end && !stop(r) {
        let k1 = f(r);
        let k2 = f([r[0] + 0.5 * dt * k1[0], r[1] + 0.5 * dt * k1[1]]);
        let k3 = f([r[0] + 0.5 * dt * k2[0], r[1] + 0.5 * dt * k2[1]]);
        let k4 = f([r[0] + dt * k3[0], r[1] + dt * k3[1]]);
        for i in 0..2 {
            r[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
    }
    r
}

fn synthetic(label: CaseLabel) -> AmplitudeSystem {
    let (d0, b0, c0) = match label {
        CaseLabel::Ib => (1.0, 1.57575, 1.27177),
        _ => (-1.0, 2.10189, -0.63587),
    };
    AmplitudeSystem { eps1: -1, eps2: (-d0) as i8, b0, c0, d0, disc: d0 - b0 * c0, m: [[1.0, 0.0], [0.0, 1.0]], mu0: [0.0; 2] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn equilibria_and_stability_agree_with_integration(
        th in 0.0f64..(2.0 * PI_F),
        via in any::<bool>(),
        dx in 0.2f64..1.0,
        dy in 0.2f64..1.0,
    ) {
        let a = synthetic(if via { CaseLabel::VIa } else { CaseLabel::Ib });
        let c = [th.cos(), th.sin()];
        for eq in amplitude_flow(&a, c).unwrap() {
            let f = a.field(c, eq.r);
            prop_assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
            if eq.stability == Stability::Degenerate {
                continue;
            }
            let slowest = eq.eigenvalues.iter().map(|v| v.re.abs()).fold(f64::INFINITY, f64::min);
            if slowest < 0.02 {
                continue;
            }
            let delta = 1e-4;
            let r0 = [eq.r[0] + delta * dx, eq.r[1] + delta * dy];
            let dist = |r: [f64; 2]| (r[0] - eq.r[0]).hypot(r[1] - eq.r[1]);
            let d0 = dist(r0);
            let end = settle(&a, c, r0, 30.0 / slowest, 1e-3, |r| dist(r) > 100.0 * d0);
            match eq.stability {
                Stability::Sink => prop_assert!(dist(end) < 0.1 * d0, "{:?} {:?}", eq, end),
                _ => prop_assert!(dist(end) > 10.0 * d0, "{:?} {:?}", eq, end),
            }
        }
    }

    #[test]
    fn classification_survives_eigenvector_rescaling(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.hypot(im) > 0.1);
        let (pt, coeffs) = pp();
        let m = PredatorPrey::standard();
        let tau = pt.mu0[0];
        let scaled = prepare_critical(&m, 0, pt.mu0).unwrap();
        let modes = pt.modes.map(|md| (md.n, md.freq * tau));
        let mut basis: EigenData = build_basis(&scaled, pt.mu0, modes).unwrap();
        let k = C64::new(re, im);
        let md = &mut basis.modes[0];
        md.phi = &md.phi * k;
        md.psi = &md.psi / k;
        let moved = run(&Critical::new(&scaled, pt.mu0, basis), &NormalFormConfig::default()).unwrap();
        let a = reduce(coeffs, pt.mu0).unwrap();
        let b = reduce(&moved.coeffs, pt.mu0).unwrap();
        prop_assert_eq!((a.eps1, a.eps2), (b.eps1, b.eps2));
        prop_assert!((a.b0 - b.b0).abs() < 1e-8);
        prop_assert!((a.c0 - b.c0).abs() < 1e-8);
        prop_assert_eq!(classify(&a).unwrap(), classify(&b).unwrap());
    }
}

use dhopf::model::{Epidemic, Model, PredatorPrey};
use dhopf::spectrum::*;

fn pp_branches() -> (BranchId, BranchId) {
    (
        BranchId { n: 0, rank: 0, j: 1 },
        BranchId { n: 0, rank: 1, j: 0 },
    )
}

#[test]
fn predprey_locus() {
    let m = PredatorPrey::standard();
    let (a, b) = pp_branches();
    let pts = find_double_hopf(&m, a, b, Sweep { lo: 0.5, hi: 0.9, steps: 80 }, None).unwrap();
    assert_eq!(pts.len(), 1);
    let p = &pts[0];
    assert!((p.mu0[1] - 0.6739271475).abs() < 1e-9);
    assert!((p.mu0[0] - 10.4238045).abs() < 1e-6);
    assert!((p.modes[0].freq - 0.7744404593788865).abs() < 1e-9);
    assert!((p.modes[1].freq - 0.3621701094421199).abs() < 1e-9);
}

#[test]
fn epidemic_intersections() {
    let m = Epidemic::standard(3.0);
    let cases = [(2, 3, 1.0, 3.0, 1.61633), (1, 2, 3.0, 7.0, 5.2184), (0, 1, 20.0, 50.0, 35.2105)];
    for (n1, n2, lo, hi, want) in cases {
        let pts = find_double_hopf(
            &m,
            BranchId { n: n1, rank: 0, j: 0 },
            BranchId { n: n2, rank: 0, j: 0 },
            Sweep { lo, hi, steps: 60 },
            None,
        )
        .unwrap();
        assert!((pts[0].mu0[1] - want).abs() < 1e-4, "{} vs {want}", pts[0].mu0[1]);
        assert!(pts[0].modes[0].freq < pts[0].modes[1].freq);
    }
}

#[test]
fn closed_and_generic_roots_agree() {
    let e = Epidemic::standard(3.0);
    let p = PredatorPrey::standard();
    let models: [(&dyn Model, [f64; 2]); 4] = [
        (&e, [0.5, 5.23]),
        (&e, [0.5, 1.3]),
        (&p, [10.0, 0.6739271475]),
        (&p, [10.0, 0.9]),
    ];
    let mut compared = 0;
    for (model, mu) in models {
        for n in 0..5 {
            let closed = imaginary_roots(model, n, mu).unwrap();
            let generic = imaginary_roots_generic(model, n, mu).unwrap();
            assert_eq!(closed.len(), generic.len(), "n = {n}");
            for (x, y) in closed.iter().zip(&generic) {
                assert!((x.freq - y.freq).abs() < 1e-8);
                let dphase = (x.phase - y.phase).abs();
                assert!(dphase.min(2.0 * std::f64::consts::PI - dphase) < 1e-8);
                assert!(x.residual < 1e-10 && y.residual < 1e-10);
                compared += 1;
            }
        }
    }
    assert!(compared >= 8);
}

#[test]
fn epidemic_transversality_matches_closed_form() {
    let m = Epidemic::standard(3.0);
    for d2 in [1.62, 5.23, 20.0, 35.2] {
        for n in 0..=m.max_wave_number(d2).unwrap() {
            let r = imaginary_roots(&m, n, [0.0, d2]).unwrap()[0];
            for j in 0..2 {
                let t = transversality(&m, n, [r.delay(j), d2], r.freq).unwrap();
                let closed = m.transversality_closed(n, d2).unwrap();
                assert!(t.re() > 0.0);
                assert!((t.re_inverse() - closed).abs() < 1e-8, "{} {}", t.re_inverse(), closed);
            }
        }
    }
}

#[test]
fn predprey_transversality_signs() {
    let m = PredatorPrey::standard();
    let r1 = 0.6739271475;
    let roots = imaginary_roots(&m, 0, [0.0, r1]).unwrap();
    let plus = transversality(&m, 0, [roots[0].delay(1), r1], roots[0].freq).unwrap();
    let minus = transversality(&m, 0, [roots[1].delay(0), r1], roots[1].freq).unwrap();
    assert_eq!(plus.sign(), 1);
    assert_eq!(minus.sign(), -1);
}

#[test]
fn epidemic_hopf_curve_passes_hh2() {
    let m = Epidemic::standard(3.0);
    let b = hopf_curve(&m, BranchId { n: 1, rank: 0, j: 0 }, Sweep { lo: 5.0, hi: 5.5, steps: 50 }).unwrap();
    let s = b.samples.iter().find(|s| (s.sweep - 5.23).abs() < 1e-9).unwrap();
    assert!((s.delay - 0.5290).abs() < 1e-3);
    assert!(b.samples.iter().all(|s| s.freq > 0.0 && s.residual < 1e-10 && s.transversality_sign == 1));
}

#[test]
fn epidemic_hh2_hypotheses() {
    let m = Epidemic::standard(3.0);
    let cfg = NondegeneracyConfig::default();
    let pts = find_double_hopf(
        &m,
        BranchId { n: 1, rank: 0, j: 0 },
        BranchId { n: 2, rank: 0, j: 0 },
        Sweep { lo: 5.0, hi: 5.5, steps: 10 },
        Some(&cfg),
    )
    .unwrap();
    let h = pts[0].hypotheses.as_ref().unwrap();
    assert!(h.h1 && h.h2 && h.h3, "{h:?}");
    assert!(h.tail_threshold.unwrap() > 1);
}

#[test]
fn strong_resonance_detected() {
    let m = Epidemic::standard(3.0);
    let mut pt = find_double_hopf(
        &m,
        BranchId { n: 1, rank: 0, j: 0 },
        BranchId { n: 2, rank: 0, j: 0 },
        Sweep { lo: 5.0, hi: 5.5, steps: 10 },
        None,
    )
    .unwrap()
    .remove(0);
    pt.modes[1].freq = 2.0 * pt.modes[0].freq;
    let h = verify_nondegeneracy(&m, &pt, &NondegeneracyConfig { m_max: Some(2), ..Default::default() });
    assert!(!h.h2);
    assert_eq!((h.nearest_resonance.0, h.nearest_resonance.1), (1, 2));
}

#[test]
fn branch_csv_has_header() {
    let m = PredatorPrey::standard();
    let b = hopf_curve(&m, BranchId { n: 0, rank: 1, j: 0 }, Sweep { lo: 0.6, hi: 0.7, steps: 4 }).unwrap();
    let mut buf = Vec::new();
    write_branch_csv(&b, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("sweep,critical_delay,frequency,transversality_sign,residual"));
    assert_eq!(text.lines().count(), 6);
}

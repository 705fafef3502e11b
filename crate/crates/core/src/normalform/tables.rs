//! Per-case tables of the h functions and the E combinations built from them.

use super::{wave_case, Quad, SpatialIntegrals, WaveCase};

/// h_{j q}(θ) = Σ_{k ∈ ks} f_q^{1(k)}/(λ_k − λ_q) φ_k(θ) + b e^{λ_q θ} Δ_j(λ_q)^{-1} F_q.
#[derive(Clone, Copy, Debug)]
pub struct HSpec {
    pub j: u32,
    pub q: Quad,
    pub ks: &'static [usize],
    pub b: f64,
}

/// `weight · ψ_row S_{yz_i}(h_{j q})`, summed and divided by 6.
#[derive(Clone, Copy, Debug)]
pub struct ETerm {
    pub weight: f64,
    pub i: usize,
    pub j: u32,
    pub q: Quad,
}

const Q2000: Quad = [2, 0, 0, 0];
const Q1100: Quad = [1, 1, 0, 0];
const Q0011: Quad = [0, 0, 1, 1];
const Q1001: Quad = [1, 0, 0, 1];
const Q1010: Quad = [1, 0, 1, 0];
const Q0020: Quad = [0, 0, 2, 0];
const Q0110: Quad = [0, 1, 1, 0];

const ALL: &[usize] = &[0, 1, 2, 3];
const FIRST: &[usize] = &[0, 1];
const SECOND: &[usize] = &[2, 3];
const NONE: &[usize] = &[];

fn h(j: u32, q: Quad, ks: &'static [usize], b: f64) -> HSpec {
    HSpec { j, q, ks, b }
}

fn e(weight: f64, i: usize, j: u32, q: Quad) -> ETerm {
    ETerm { weight, i, j, q }
}

/// h specifications and E formulas (E2100, E1011, E0021, E1110) for the wave
/// numbers in `ints`.
pub fn case_tables(ints: &SpatialIntegrals) -> (Vec<HSpec>, [Vec<ETerm>; 4]) {
    let (n1, n2) = (ints.n1, ints.n2);
    let (s1, s2) = (ints.s1(), ints.s2());
    match wave_case(n1, n2) {
        WaveCase::BothZero => (
            vec![
                h(0, Q1100, ALL, s1),
                h(0, Q2000, ALL, s1),
                h(0, Q0011, ALL, s1),
                h(0, Q1001, ALL, s1),
                h(0, Q1010, ALL, s1),
                h(0, Q0020, ALL, s1),
                h(0, Q0110, ALL, s1),
            ],
            [
                vec![e(s1, 0, 0, Q1100), e(s1, 1, 0, Q2000)],
                vec![e(s1, 0, 0, Q0011), e(s1, 2, 0, Q1001), e(s1, 3, 0, Q1010)],
                vec![e(s1, 2, 0, Q0011), e(s1, 3, 0, Q0020)],
                vec![e(s1, 0, 0, Q0110), e(s1, 1, 0, Q1010), e(s1, 2, 0, Q1100)],
            ],
        ),
        WaveCase::FirstZero => (
            vec![
                h(0, Q2000, FIRST, s1),
                h(0, Q1100, FIRST, s1),
                h(0, Q0011, FIRST, s1),
                h(n2, Q1001, SECOND, s1),
                h(n2, Q1010, SECOND, s1),
                h(0, Q0020, FIRST, s1),
                h(n2, Q0110, SECOND, s1),
                h(2 * n2, Q0011, NONE, s2),
                h(2 * n2, Q0020, NONE, s2),
                h(2 * n2, Q1100, NONE, 0.0),
            ],
            [
                vec![e(s1, 0, 0, Q1100), e(s1, 1, 0, Q2000)],
                vec![e(s1, 0, 0, Q0011), e(s1, 2, n2, Q1001), e(s1, 3, n2, Q1010)],
                vec![
                    e(s1, 2, 0, Q0011),
                    e(s1, 3, 0, Q0020),
                    e(s2, 2, 2 * n2, Q0011),
                    e(s2, 3, 2 * n2, Q0020),
                ],
                vec![
                    e(s1, 0, n2, Q0110),
                    e(s1, 1, n2, Q1010),
                    e(s1, 2, 0, Q1100),
                    e(s2, 2, 2 * n2, Q1100),
                ],
            ],
        ),
        case => {
            let equal = case == WaveCase::Equal;
            let double = case == WaveCase::Double;
            let (sum, diff) = (n1 + n2, n2 - n1);
            let bd = if equal { s1 } else { s2 };
            let near = if double { SECOND } else { NONE };
            let low = if double { FIRST } else { NONE };
            let mut hs = vec![
                h(0, Q2000, NONE, s1),
                h(0, Q1100, NONE, s1),
                h(2 * n1, Q2000, near, s2),
                h(2 * n1, Q1100, near, s2),
                h(0, Q0011, NONE, s1),
                h(sum, Q1001, NONE, s2),
                h(sum, Q1010, NONE, s2),
                h(diff, Q1001, low, bd),
                h(diff, Q1010, low, bd),
                h(0, Q0020, NONE, s1),
                h(2 * n2, Q0011, NONE, s2),
                h(2 * n2, Q0020, NONE, s2),
                h(sum, Q0110, NONE, s2),
                h(diff, Q0110, low, bd),
            ];
            hs.push(if equal {
                h(2 * n1, Q0011, NONE, s2)
            } else {
                h(2 * n1, Q0011, near, 0.0)
            });
            hs.push(h(2 * n2, Q1100, NONE, if equal { s2 } else { 0.0 }));
            (
                hs,
                [
                    vec![
                        e(s1, 0, 0, Q1100),
                        e(s1, 1, 0, Q2000),
                        e(s2, 0, 2 * n1, Q1100),
                        e(s2, 1, 2 * n1, Q2000),
                    ],
                    vec![
                        e(s1, 0, 0, Q0011),
                        e(s2, 0, 2 * n1, Q0011),
                        e(s2, 2, sum, Q1001),
                        e(s2, 3, sum, Q1010),
                        e(bd, 2, diff, Q1001),
                        e(bd, 3, diff, Q1010),
                    ],
                    vec![
                        e(s1, 2, 0, Q0011),
                        e(s1, 3, 0, Q0020),
                        e(s2, 2, 2 * n2, Q0011),
                        e(s2, 3, 2 * n2, Q0020),
                    ],
                    vec![
                        e(s1, 2, 0, Q1100),
                        e(s2, 2, 2 * n2, Q1100),
                        e(s2, 0, sum, Q0110),
                        e(s2, 1, sum, Q1010),
                        e(bd, 0, diff, Q0110),
                        e(bd, 1, diff, Q1010),
                    ],
                ],
            )
        }
    }
}

//! Integrals of products of normalized Neumann cosines γ_n on (0, lπ).

use serde::Serialize;
use std::f64::consts::PI;

/// γ_{ij} = ∫γ_{n1}^i γ_{n2}^j for the quartic and cubic products, plus the
/// triple products b_{j n_a n_b} = ∫γ_j γ_{n_a} γ_{n_b}.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpatialIntegrals {
    pub n1: u32,
    pub n2: u32,
    pub l: f64,
    pub gamma40: f64,
    pub gamma04: f64,
    pub gamma22: f64,
    pub beta30: f64,
    pub beta21: f64,
    pub beta12: f64,
    pub beta03: f64,
}

/// γ_n(x) = cos(nx/l)/‖cos(n·/l)‖.
pub fn gamma(n: u32, l: f64, x: f64) -> f64 {
    let len = l * PI;
    if n == 0 {
        1.0 / len.sqrt()
    } else {
        (2.0 / len).sqrt() * (n as f64 * x / l).cos()
    }
}

pub fn spatial_integrals(n1: u32, n2: u32, l: f64) -> SpatialIntegrals {
    let len = l * PI;
    let s1 = 1.0 / len.sqrt();
    let s2 = 1.0 / (2.0 * len).sqrt();
    let quartic = |n: u32| if n == 0 { 1.0 / len } else { 1.5 / len };
    let gamma22 = if n1 == n2 && n1 != 0 { 1.5 / len } else { 1.0 / len };
    let cube = |n: u32| if n == 0 { s1 } else { 0.0 };
    let beta21 = match (n1, n2) {
        (0, 0) => s1,
        (0, _) => 0.0,
        _ if n2 == 2 * n1 => s2,
        _ => 0.0,
    };
    let beta12 = if n1 == 0 { s1 } else { 0.0 };
    SpatialIntegrals {
        n1,
        n2,
        l,
        gamma40: quartic(n1),
        gamma04: quartic(n2),
        gamma22,
        beta30: cube(n1),
        beta21,
        beta12,
        beta03: cube(n2),
    }
}

impl SpatialIntegrals {
    pub fn s1(&self) -> f64 {
        1.0 / (self.l * PI).sqrt()
    }

    pub fn s2(&self) -> f64 {
        1.0 / (2.0 * self.l * PI).sqrt()
    }

    /// β_{ij} with i + j = 3.
    pub fn beta(&self, i: u8, j: u8) -> f64 {
        match (i, j) {
            (3, 0) => self.beta30,
            (2, 1) => self.beta21,
            (1, 2) => self.beta12,
            (0, 3) => self.beta03,
            _ => panic!("β_{i}{j} is not a cubic product"),
        }
    }

    /// b_{j n_a n_b} for n_a, n_b ∈ {n1, n2}.
    pub fn b(&self, j: u32, na: u32, nb: u32) -> f64 {
        let (lo, hi) = (na.min(nb), na.max(nb));
        match (lo, hi) {
            (0, 0) => if j == 0 { self.s1() } else { 0.0 },
            (0, n) => if j == n { self.s1() } else { 0.0 },
            (a, b) if a == b => {
                if j == 0 {
                    self.s1()
                } else if j == 2 * a {
                    self.s2()
                } else {
                    0.0
                }
            }
            (a, b) => if j == a + b || j == b - a { self.s2() } else { 0.0 },
        }
    }
}

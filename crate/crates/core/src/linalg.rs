//! Small dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn cvec(values: &[C64]) -> CVec {
    DVector::from_column_slice(values)
}

pub fn rvec_to_c(values: &[f64]) -> CVec {
    DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)))
}

/// Serializes a complex vector as a list of `[re, im]` pairs.
pub fn ser_cvec<S: serde::Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

pub fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

/// Row vector times matrix times column vector.
pub fn sandwich(row: &CVec, m: &CMat, col: &CVec) -> C64 {
    dotu(row, &(m * col))
}

/// Plain (non-conjugating) dot product.
pub fn dotu(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn condition(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Direction of the smallest singular value.
///
/// Returns the unit right singular vector together with the sorted singular
/// values (descending).
pub fn null_right(m: &CMat) -> (CVec, Vec<f64>) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("nonempty matrix");
    let v = v_t.row(imin).transpose().map(|z| z.conj());
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (v, s)
}

/// Row vector `w` with `w m = 0`, returned as a column.
pub fn null_left(m: &CMat) -> (CVec, Vec<f64>) {
    null_right(&m.transpose())
}

/// LU solve followed by one step of iterative refinement.
pub fn solve_refined(m: &CMat, rhs: &CVec) -> Option<CVec> {
    let lu = m.clone().lu();
    let mut x = lu.solve(rhs)?;
    let r = rhs - m * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Some(x)
}

pub fn rel_residual(m: &CMat, x: &CVec, rhs: &CVec) -> f64 {
    let r = (m * x - rhs).norm();
    let b = rhs.norm();
    if b == 0.0 {
        r
    } else {
        r / b
    }
}

/// Roots of the polynomial `sum coeffs[k] z^k` through the companion matrix.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut deg = coeffs.len();
    let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    while deg > 0 && coeffs[deg - 1].norm() <= 1e-13 * scale {
        deg -= 1;
    }
    if deg <= 1 {
        return Vec::new();
    }
    let d = deg - 1;
    let lead = coeffs[d];
    if d == 1 {
        return vec![-coeffs[0] / lead];
    }
    if d == 2 {
        let (a, b, cc) = (lead, coeffs[1], coeffs[0]);
        let disc = (b * b - 4.0 * a * cc).sqrt();
        let q = if (b.conj() * disc).re >= 0.0 {
            -0.5 * (b + disc)
        } else {
            -0.5 * (b - disc)
        };
        if q.norm() == 0.0 {
            return vec![C64::new(0.0, 0.0); 2];
        }
        return vec![q / a, cc / q];
    }
    let mut comp = CMat::zeros(d, d);
    for k in 1..d {
        comp[(k, k - 1)] = C64::new(1.0, 0.0);
    }
    for k in 0..d {
        comp[(k, d - 1)] = -coeffs[k] / lead;
    }
    comp.schur()
        .eigenvalues()
        .map(|e| e.iter().copied().collect())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_vectors_annihilate() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(2.0, 1.0), c(2.0, 0.0), c(4.0, 2.0)],
        );
        let (v, s) = null_right(&m);
        assert!((&m * &v).norm() < 1e-12);
        assert!(s[1] < 1e-12);
        let (w, _) = null_left(&m);
        assert!((w.transpose() * &m).norm() < 1e-12);
    }

    #[test]
    fn companion_roots() {
        // (z-1)(z-2)(z+3i)
        let r = poly_roots(&[c(0.0, 6.0), c(2.0, -9.0), c(-3.0, 3.0), c(1.0, 0.0)]);
        assert_eq!(r.len(), 3);
        for want in [c(1.0, 0.0), c(2.0, 0.0), c(0.0, -3.0)] {
            assert!(r.iter().any(|z| (z - want).norm() < 1e-10));
        }
        let q = poly_roots(&[c(2.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)]);
        assert!(q.iter().any(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
        assert!(q.iter().any(|z| (z - c(2.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn refined_solve() {
        let m = CMat::from_row_slice(2, 2, &[c(3.0, 1.0), c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)]);
        let b = cvec(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let x = solve_refined(&m, &b).unwrap();
        assert!(rel_residual(&m, &x, &b) < 1e-14);
    }
}

//! Tensor-product Gauss–Legendre quadrature on axis-aligned boxes.
//!
//! The two-point rule integrates cubics exactly per axis, so moments of
//! order ≤ 2 over a box come out exact up to round-off.

/// Nodes on [−1, 1] of the two-point rule; both weights are 1.
const GL2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Zeroth, first and second moments of a box: `(∫1, ∫x, ∫‖x‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMoments {
    pub volume: f64,
    pub first: Vec<f64>,
    pub second: f64,
}

/// Integrates `f` over the box `[lo, hi]` with the two-point rule per axis.
pub fn integrate_box(lo: &[f64], hi: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let n = lo.len();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / 2.0).collect();
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (a + b) / 2.0).collect();
    let jac: f64 = half.iter().product();
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    for mask in 0..(1usize << n) {
        for j in 0..n {
            x[j] = mid[j] + half[j] * GL2[(mask >> j) & 1];
        }
        total += f(&x);
    }
    total * jac
}

pub fn box_moments(lo: &[f64], hi: &[f64]) -> BoxMoments {
    let n = lo.len();
    let volume = integrate_box(lo, hi, |_| 1.0);
    let first = (0..n).map(|j| integrate_box(lo, hi, |x| x[j])).collect();
    let second = integrate_box(lo, hi, |x| x.iter().map(|v| v * v).sum());
    BoxMoments { volume, first, second }
}

/// Integrates `f · 1_region` over a box split into `cells` equal sub-boxes
/// per axis, each handled by the two-point rule. Returns `(∫f, volume)`.
pub fn integrate_region(
    lo: &[f64],
    hi: &[f64],
    cells: usize,
    mut inside: impl FnMut(&[f64]) -> bool,
    mut f: impl FnMut(&[f64]) -> f64,
) -> (f64, f64) {
    let n = lo.len();
    let step: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / cells as f64).collect();
    let mut idx = vec![0usize; n];
    let mut sub_lo = vec![0.0; n];
    let mut sub_hi = vec![0.0; n];
    let mut total = 0.0;
    let mut volume = 0.0;
    loop {
        for j in 0..n {
            sub_lo[j] = lo[j] + idx[j] as f64 * step[j];
            sub_hi[j] = sub_lo[j] + step[j];
        }
        total += integrate_box(&sub_lo, &sub_hi, |x| if inside(x) { f(x) } else { 0.0 });
        volume += integrate_box(&sub_lo, &sub_hi, |x| if inside(x) { 1.0 } else { 0.0 });
        let mut j = 0;
        loop {
            if j == n {
                return (total, volume);
            }
            idx[j] += 1;
            if idx[j] == cells {
                idx[j] = 0;
                j += 1;
            } else {
                break;
            }
        }
    }
}

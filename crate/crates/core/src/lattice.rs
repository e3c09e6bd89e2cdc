//! Lattices given by generator matrices.
//!
//! A lattice point is stored by its integer coefficients `z`; the point in
//! space is `z · G` where the rows of `G` are the basis vectors.
//!
//! Nearest-point search breaks ties deterministically: squared distances
//! within a relative 1e-12 of each other count as equal, and among equal
//! candidates the one whose residual `x − λ` is lexicographically largest
//! wins. The rule only looks at `x − λ`, so quantization commutes with
//! lattice shifts. On `Zⁿ` it reduces to rounding halves down.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, div_floor, IntMatrix};

const TIE_RELATIVE: f64 = 1e-12;
const COORD_RELATIVE: f64 = 1e-9;

/// Sample budget for Monte Carlo second moments when nothing better exists.
pub const DEFAULT_MC_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_MC_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    IntegerGrid,
    Hexagonal,
    Generic,
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LatticeKind::IntegerGrid => "integer-grid",
            LatticeKind::Hexagonal => "hexagonal",
            LatticeKind::Generic => "generic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    n: usize,
    kind: LatticeKind,
    scale: f64,
    base: Vec<f64>,
    generator: Vec<f64>,
    inverse: Vec<f64>,
    coord_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub volume: f64,
    pub covering_radius: f64,
    pub inscribed_radius: f64,
    pub second_moment: f64,
    /// 99% half-width when the second moment is a Monte Carlo estimate.
    pub second_moment_error: f64,
}

/// Smallest distance between closures of two Voronoi cells that do not touch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub value: f64,
    /// `false` when `value` is only a lower bound.
    pub exact: bool,
}

fn hex_base() -> Vec<f64> {
    vec![1.0, 0.0, 0.5, 3f64.sqrt() / 2.0]
}

impl Lattice {
    pub fn integer_grid(n: usize, scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut base = vec![0.0; n * n];
        for i in 0..n {
            base[i * n + i] = 1.0;
        }
        Self::build(n, LatticeKind::IntegerGrid, base, scale)
    }

    /// The A₂ lattice with minimum distance `scale`.
    pub fn hexagonal(scale: f64) -> Result<Self> {
        Self::build(2, LatticeKind::Hexagonal, hex_base(), scale)
    }

    /// Arbitrary nonsingular generator, row-major, rows are basis vectors.
    pub fn generic(n: usize, base: Vec<f64>, scale: f64) -> Result<Self> {
        Self::build(n, LatticeKind::Generic, base, scale)
    }

    fn build(n: usize, kind: LatticeKind, base: Vec<f64>, scale: f64) -> Result<Self> {
        if base.len() != n * n {
            return Err(Error::BadGenerator(format!(
                "expected {} entries, got {}",
                n * n,
                base.len()
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        if base.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadGenerator("non-finite entry".into()));
        }
        let generator: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let det = linalg::determinant(&generator, n);
        let row_scale = (0..n)
            .map(|i| linalg::norm_sq(&generator[i * n..(i + 1) * n]).sqrt())
            .fold(0.0, f64::max);
        if det.abs() <= 1e-12 * row_scale.powi(n as i32) {
            return Err(Error::BadGenerator("determinant is zero".into()));
        }
        let inverse =
            linalg::invert(&generator, n).ok_or_else(|| Error::BadGenerator("matrix is not invertible".into()))?;
        Ok(Self {
            n,
            kind,
            scale,
            base,
            generator,
            inverse,
            coord_tol: COORD_RELATIVE * row_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn base_generator(&self) -> &[f64] {
        &self.base
    }

    /// Row-major generator including the scale.
    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    pub fn scaled(&self, sigma: f64) -> Result<Self> {
        Self::build(self.n, self.kind, self.base.clone(), self.scale * sigma)
    }

    /// The sublattice whose basis is `b · G`.
    pub fn sublattice(&self, b: &IntMatrix) -> Result<Self> {
        if b.dim() != self.n {
            return Err(Error::InvalidParameter("sublattice basis has wrong dimension".into()));
        }
        if let Some(m) = b.as_scalar() {
            if m > 0 {
                return self.scaled(m as f64);
            }
        }
        let base = linalg::mat_mul(&b.to_f64(), &self.base, self.n);
        Self::build(self.n, LatticeKind::Generic, base, self.scale)
    }

    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        linalg::int_vec_mat(coeffs, &self.generator, self.n)
    }

    /// Real coefficients of `x` in this basis.
    pub fn coords_of(&self, x: &[f64]) -> Vec<f64> {
        linalg::vec_mat(x, &self.inverse, self.n)
    }

    /// Integer coefficients of `x` if it is a lattice point (within 1e-9).
    pub fn lattice_coeffs(&self, x: &[f64]) -> Option<Vec<i64>> {
        let y = self.coords_of(x);
        let z: Vec<i64> = y.iter().map(|v| v.round() as i64).collect();
        let ok = y
            .iter()
            .zip(&z)
            .all(|(a, &b)| (a - b as f64).abs() <= 1e-9 * (1.0 + a.abs()));
        ok.then_some(z)
    }

    fn check_finite(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "expected a {}-vector, got length {}",
                self.n,
                x.len()
            )));
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Coefficients of `Q(x)`.
    pub fn nearest_coeffs(&self, x: &[f64]) -> Result<Vec<i64>> {
        self.check_finite(x)?;
        Ok(self.nearest_coeffs_unchecked(x))
    }

    pub(crate) fn nearest_coeffs_unchecked(&self, x: &[f64]) -> Vec<i64> {
        let n = self.n;
        if self.kind == LatticeKind::IntegerGrid {
            return x.iter().map(|&v| (v / self.scale - 0.5).ceil() as i64).collect();
        }
        let y = linalg::vec_mat(x, &self.inverse, n);
        let z0: Vec<i64> = y.iter().map(|v| (v + 0.5).floor() as i64).collect();
        let mut best = Best::new(n);
        let mut z = vec![0i64; n];
        let mut r = vec![0.0; n];
        for_each_offset(n, self.search_radius(), |off| {
            for j in 0..n {
                z[j] = z0[j] + off[j];
            }
            r.copy_from_slice(x);
            for (k, &zk) in z.iter().enumerate() {
                let row = &self.generator[k * n..(k + 1) * n];
                for j in 0..n {
                    r[j] -= zk as f64 * row[j];
                }
            }
            best.offer(&z, &r, self.coord_tol);
        });
        best.z
    }

    /// `Q(x)` as a point.
    pub fn nearest_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.point(&self.nearest_coeffs(x)?))
    }

    /// `x − Q(x)`, a point of `V(0)`.
    pub fn mod_lattice(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = self.nearest_point(x)?;
        Ok(x.iter().zip(&q).map(|(a, b)| a - b).collect())
    }

    /// Exact nearest point to the rational point `(num / den) · G`.
    ///
    /// Candidate residuals are integer vectors, so the result is exactly
    /// translation-invariant: adding `den·t` to `num` adds `t` to the output.
    pub fn quantize_coords(&self, num: &[i64], den: i64) -> Vec<i64> {
        debug_assert!(den > 0);
        let n = self.n;
        if self.kind == LatticeKind::IntegerGrid {
            // ceil(num/den − 1/2), i.e. halves round down
            return num.iter().map(|&a| -div_floor(den - 2 * a, 2 * den)).collect();
        }
        let z0: Vec<i64> = num.iter().map(|&a| div_floor(2 * a + den, 2 * den)).collect();
        let inv_den = 1.0 / den as f64;
        let mut best = Best::new(n);
        let mut z = vec![0i64; n];
        let mut r = vec![0.0; n];
        for_each_offset(n, self.search_radius(), |off| {
            for j in 0..n {
                z[j] = z0[j] + off[j];
            }
            for v in r.iter_mut() {
                *v = 0.0;
            }
            for k in 0..n {
                let f = (num[k] - z[k] * den) as f64;
                if f == 0.0 {
                    continue;
                }
                let row = &self.generator[k * n..(k + 1) * n];
                for j in 0..n {
                    r[j] += f * row[j];
                }
            }
            for v in r.iter_mut() {
                *v *= inv_den;
            }
            best.offer(&z, &r, self.coord_tol);
        });
        best.z
    }

    fn search_radius(&self) -> i64 {
        match self.kind {
            // the hexagonal basis is reduced, so one step around the
            // rounded coefficients is enough
            LatticeKind::Hexagonal => 1,
            _ => 2,
        }
    }

    /// Lattice points with norm at most `radius` (origin included), as coefficients.
    pub fn points_within(&self, radius: f64) -> Vec<Vec<i64>> {
        let n = self.n;
        let bounds: Vec<i64> = (0..n)
            .map(|j| {
                let col: f64 = (0..n).map(|i| self.inverse[i * n + j].powi(2)).sum::<f64>().sqrt();
                (radius * col).ceil() as i64 + 1
            })
            .collect();
        let limit = radius * radius * (1.0 + 1e-9) + self.coord_tol * self.coord_tol;
        let mut out = Vec::new();
        let mut z: Vec<i64> = bounds.iter().map(|b| -b).collect();
        loop {
            let p = self.point(&z);
            if linalg::norm_sq(&p) <= limit {
                out.push(z.clone());
            }
            let mut j = 0;
            loop {
                if j == n {
                    return out;
                }
                z[j] += 1;
                if z[j] > bounds[j] {
                    z[j] = -bounds[j];
                    j += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Voronoi-relevant vectors as coefficients: `v` such that `v/2` is
    /// strictly closer to `0` and `v` than to any other lattice point.
    pub fn relevant_vectors(&self) -> Vec<Vec<i64>> {
        let n = self.n;
        let cands = offsets(n, 2);
        let others: Vec<Vec<f64>> = offsets(n, 3)
            .into_iter()
            .filter(|w| w.iter().any(|&c| c != 0))
            .map(|w| self.point(&w))
            .collect();
        let mut out = Vec::new();
        for v in cands {
            if v.iter().all(|&c| c == 0) {
                continue;
            }
            let pv = self.point(&v);
            let vv = linalg::norm_sq(&pv);
            let tol = 1e-10 * vv;
            let relevant = others.iter().all(|w| {
                let same = w.iter().zip(&pv).all(|(a, b)| (a - b).abs() <= self.coord_tol);
                same || linalg::norm_sq(w) - linalg::dot(w, &pv) > tol
            });
            if relevant {
                out.push(v);
            }
        }
        out
    }

    pub fn volume(&self) -> f64 {
        linalg::determinant(&self.generator, self.n).abs()
    }

    pub fn inscribed_radius(&self) -> f64 {
        match self.kind {
            LatticeKind::IntegerGrid | LatticeKind::Hexagonal => self.scale / 2.0,
            LatticeKind::Generic => {
                self.relevant_vectors()
                    .iter()
                    .map(|v| linalg::norm_sq(&self.point(v)))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
                    / 2.0
            }
        }
    }

    pub fn covering_radius(&self) -> Result<f64> {
        let n = self.n;
        match self.kind {
            LatticeKind::IntegerGrid => Ok(self.scale * (n as f64).sqrt() / 2.0),
            LatticeKind::Hexagonal => Ok(self.scale / 3f64.sqrt()),
            LatticeKind::Generic => match n {
                1 => Ok(self.generator[0].abs() / 2.0),
                2 => Ok(self
                    .voronoi_polygon()
                    .iter()
                    .map(|p| linalg::norm_sq(p))
                    .fold(0.0, f64::max)
                    .sqrt()),
                3 | 4 => Ok(self
                    .voronoi_vertices()
                    .iter()
                    .map(|p| linalg::norm_sq(p))
                    .fold(0.0, f64::max)
                    .sqrt()),
                _ => Err(Error::Unsupported(format!(
                    "Voronoi geometry of a generic lattice in dimension {n}"
                ))),
            },
        }
    }

    /// Geometry with exact second moments where available; generic
    /// lattices above dimension 2 fall back to Monte Carlo with the default
    /// budget.
    pub fn geometry(&self) -> Result<LatticeGeometry> {
        self.geometry_with_budget(DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED)
    }

    pub fn geometry_with_budget(&self, samples: u64, seed: u64) -> Result<LatticeGeometry> {
        let n = self.n;
        if self.kind == LatticeKind::Generic && n > 4 {
            return Err(Error::Unsupported(format!(
                "Voronoi geometry of a generic lattice in dimension {n}"
            )));
        }
        let (second_moment, second_moment_error) = match (self.kind, n) {
            (LatticeKind::IntegerGrid, _) | (LatticeKind::Generic, 1) => (1.0 / 12.0, 0.0),
            (LatticeKind::Hexagonal, _) => (5.0 / (36.0 * 3f64.sqrt()), 0.0),
            (LatticeKind::Generic, 2) => (polygon_second_moment(&self.voronoi_polygon()), 0.0),
            _ => self.monte_carlo_second_moment(samples, seed),
        };
        Ok(LatticeGeometry {
            volume: self.volume(),
            covering_radius: self.covering_radius()?,
            inscribed_radius: self.inscribed_radius(),
            second_moment,
            second_moment_error,
        })
    }

    /// Normalized second moment of `V(0)` by uniform sampling of a
    /// fundamental parallelepiped folded back into the cell. Returns the
    /// estimate and its 99% half-width.
    pub fn monte_carlo_second_moment(&self, samples: u64, seed: u64) -> (f64, f64) {
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            for v in u.iter_mut() {
                *v = rng.random::<f64>();
            }
            linalg::vec_mat_into(&u, &self.generator, n, &mut x);
            let z = self.nearest_coeffs_unchecked(&x);
            let q = self.point(&z);
            let e: f64 = x.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
            sum += e;
            sum_sq += e * e;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sum_sq / m - mean * mean).max(0.0);
        let norm = n as f64 * self.volume().powf(2.0 / n as f64);
        let half = 2.576 * (var / m).sqrt();
        (mean / norm, half / norm)
    }

    /// Vertices of `V(0)` in counter-clockwise order (dimension 2 only).
    pub fn voronoi_polygon(&self) -> Vec<Vec<f64>> {
        assert_eq!(self.n, 2, "voronoi_polygon needs dimension 2");
        let big: f64 = (0..2)
            .map(|i| linalg::norm_sq(&self.generator[i * 2..i * 2 + 2]).sqrt())
            .sum::<f64>()
            * 2.0;
        let mut poly = vec![vec![-big, -big], vec![big, -big], vec![big, big], vec![-big, big]];
        for v in self.relevant_vectors() {
            let p = self.point(&v);
            let c = linalg::norm_sq(&p) / 2.0;
            poly = clip_half_plane(&poly, &p, c);
        }
        poly
    }

    fn voronoi_vertices(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let rel: Vec<Vec<f64>> = self.relevant_vectors().iter().map(|v| self.point(v)).collect();
        let rhs: Vec<f64> = rel.iter().map(|p| linalg::norm_sq(p) / 2.0).collect();
        let mut verts = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            // rows of the system are the chosen relevant vectors; solve A x = b
            let mut a = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            for (r, &i) in idx.iter().enumerate() {
                a[r * n..(r + 1) * n].copy_from_slice(&rel[i]);
                b[r] = rhs[i];
            }
            if linalg::determinant(&a, n).abs() > 1e-12 * self.volume().powi(n as i32).max(1e-300) {
                let at = transpose(&a, n);
                if let Some(x) = linalg::solve_row(&at, &b, n) {
                    let inside = rel
                        .iter()
                        .zip(&rhs)
                        .all(|(p, &c)| linalg::dot(p, &x) <= c * (1.0 + 1e-9) + self.coord_tol);
                    if inside {
                        verts.push(x);
                    }
                }
            }
            if !next_combination(&mut idx, rel.len()) {
                break;
            }
        }
        verts
    }

    /// Smallest distance between closures of non-adjacent Voronoi cells.
    ///
    /// Exact in dimensions 1 and 2. Higher dimensions get the lower bound
    /// `min ‖t‖ − 2r̄` over non-relevant lattice vectors `t`.
    pub fn nonadjacent_separation(&self) -> Result<Separation> {
        let n = self.n;
        match n {
            1 => Ok(Separation {
                value: self.generator[0].abs(),
                exact: true,
            }),
            2 => {
                let poly = self.voronoi_polygon();
                let touch_tol = self.coord_tol * 10.0;
                let mut best = f64::INFINITY;
                for off in offsets(2, 3) {
                    if off == [0, 0] {
                        continue;
                    }
                    let t = self.point(&off);
                    let shifted: Vec<Vec<f64>> = poly.iter().map(|p| vec![p[0] + t[0], p[1] + t[1]]).collect();
                    let d = polygon_distance(&poly, &shifted);
                    if d > touch_tol {
                        best = best.min(d);
                    }
                }
                Ok(Separation {
                    value: best,
                    exact: true,
                })
            }
            _ => {
                let cover = self.covering_radius()?;
                let rel = self.relevant_vectors();
                let mut best = f64::INFINITY;
                for off in offsets(n, 2) {
                    if off.iter().all(|&c| c == 0) || rel.contains(&off) {
                        continue;
                    }
                    let d = linalg::norm_sq(&self.point(&off)).sqrt() - 2.0 * cover;
                    best = best.min(d);
                }
                Ok(Separation {
                    value: best.max(0.0),
                    exact: false,
                })
            }
        }
    }
}

/// Running minimum under the tie rule.
struct Best {
    z: Vec<i64>,
    r: Vec<f64>,
    d2: f64,
}

impl Best {
    fn new(n: usize) -> Self {
        Self {
            z: vec![0; n],
            r: vec![0.0; n],
            d2: f64::INFINITY,
        }
    }

    #[inline]
    fn offer(&mut self, z: &[i64], r: &[f64], coord_tol: f64) {
        let d2 = linalg::norm_sq(r);
        let take = if !self.d2.is_finite() {
            true
        } else {
            let tol = TIE_RELATIVE * d2.max(self.d2) + coord_tol * coord_tol * 1e-6;
            if d2 < self.d2 - tol {
                true
            } else if d2 <= self.d2 + tol {
                lex_greater(r, &self.r, coord_tol)
            } else {
                false
            }
        };
        if take {
            self.z.copy_from_slice(z);
            self.r.copy_from_slice(r);
            self.d2 = d2;
        }
    }
}

fn lex_greater(a: &[f64], b: &[f64], tol: f64) -> bool {
    for (x, y) in a.iter().zip(b) {
        if *x > y + tol {
            return true;
        }
        if *x < y - tol {
            return false;
        }
    }
    false
}

fn for_each_offset(n: usize, radius: i64, mut f: impl FnMut(&[i64])) {
    let mut off = vec![-radius; n];
    loop {
        f(&off);
        let mut j = 0;
        loop {
            if j == n {
                return;
            }
            off[j] += 1;
            if off[j] > radius {
                off[j] = -radius;
                j += 1;
            } else {
                break;
            }
        }
    }
}

pub(crate) fn offsets(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for_each_offset(n, radius, |o| out.push(o.to_vec()));
    out
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Keeps the part of a convex polygon with `x·p ≤ c`.
fn clip_half_plane(poly: &[Vec<f64>], p: &[f64], c: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let a = &poly[i];
        let b = &poly[(i + 1) % m];
        let fa = linalg::dot(a, p) - c;
        let fb = linalg::dot(b, p) - c;
        if fa <= 0.0 {
            out.push(a.clone());
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

#[cfg(test)]
fn polygon_area(poly: &[Vec<f64>]) -> f64 {
    let m = poly.len();
    (0..m)
        .map(|i| {
            let a = &poly[i];
            let b = &poly[(i + 1) % m];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

/// Normalized second moment of a convex polygon containing the origin.
pub(crate) fn polygon_second_moment(poly: &[Vec<f64>]) -> f64 {
    let m = poly.len();
    let mut area = 0.0;
    let mut moment = 0.0;
    for i in 0..m {
        let a = &poly[i];
        let b = &poly[(i + 1) % m];
        let tri = (a[0] * b[1] - a[1] * b[0]) / 2.0;
        area += tri;
        moment += tri * (linalg::norm_sq(a) + linalg::norm_sq(b) + linalg::dot(a, b)) / 6.0;
    }
    moment / (2.0 * area * area)
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len).clamp(0.0, 1.0)
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

/// Distance between two convex polygons that do not overlap.
fn polygon_distance(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, b) in [(p, q), (q, p)] {
        let m = b.len();
        for v in a {
            for i in 0..m {
                best = best.min(point_segment_distance(v, &b[i], &b[(i + 1) % m]));
            }
        }
    }
    best
}

/// Which fundamental cell of the coarse lattice to draw representatives from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellSelector {
    /// `V_coarse(0)` under the tie rule.
    #[default]
    CoarseVoronoi,
    /// The half-open parallelepiped spanned by the coarse basis.
    Parallelepiped,
}

/// A fine lattice together with a sublattice of it.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedPair {
    fine: Lattice,
    coarse: Lattice,
    /// Coarse basis in fine coefficients.
    basis: IntMatrix,
    /// `adj(basis)`, sign-normalized so that `den > 0`.
    adj: IntMatrix,
    den: i64,
    index: u64,
}

impl NestedPair {
    pub fn new(fine: Lattice, coarse: Lattice) -> Result<Self> {
        let n = fine.dim();
        if coarse.dim() != n {
            return Err(Error::NotNested("dimensions differ".into()));
        }
        let b = linalg::mat_mul(coarse.generator(), &fine.inverse, n);
        let mut entries = Vec::with_capacity(n * n);
        for &v in &b {
            let r = v.round();
            if (v - r).abs() > 1e-9 * (1.0 + v.abs()) {
                return Err(Error::NotNested(format!(
                    "coarse basis has non-integer fine coordinate {v}"
                )));
            }
            entries.push(r as i64);
        }
        let basis = IntMatrix::new(n, entries);
        let pair = Self::assemble(fine, coarse, basis)?;
        let ratio = pair.coarse.volume() / pair.fine.volume();
        if (ratio - pair.index as f64).abs() > 1e-9 * ratio {
            return Err(Error::NotNested(format!(
                "index {} disagrees with volume ratio {ratio}",
                pair.index
            )));
        }
        Ok(pair)
    }

    /// The sublattice of `fine` with basis `b · G_fine`.
    pub fn from_basis(fine: Lattice, b: IntMatrix) -> Result<Self> {
        let coarse = fine.sublattice(&b)?;
        Self::assemble(fine, coarse, b)
    }

    fn assemble(fine: Lattice, coarse: Lattice, basis: IntMatrix) -> Result<Self> {
        let det = basis.determinant();
        if det == 0 {
            return Err(Error::NotNested("sublattice basis is singular".into()));
        }
        let mut adj = basis.adjugate();
        let mut den = det;
        if den < 0 {
            adj = adj.scaled(-1);
            den = -den;
        }
        Ok(Self {
            fine,
            coarse,
            basis,
            adj,
            den,
            index: det.unsigned_abs(),
        })
    }

    pub fn fine(&self) -> &Lattice {
        &self.fine
    }

    pub fn coarse(&self) -> &Lattice {
        &self.coarse
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Coarse point given by coarse coefficients, in fine coefficients.
    pub fn coarse_to_fine(&self, coarse: &[i64]) -> Vec<i64> {
        self.basis.left_mul(coarse)
    }

    /// Fine coefficients of a coarse lattice point, if it is one.
    pub fn fine_to_coarse(&self, fine: &[i64]) -> Option<Vec<i64>> {
        let num = self.adj.left_mul(fine);
        num.iter()
            .map(|&v| (v % self.den == 0).then_some(v / self.den))
            .collect()
    }

    /// Exact `Q_coarse` of a fine point, returned in coarse coefficients.
    pub fn quantize_to_coarse(&self, fine: &[i64]) -> Vec<i64> {
        let num = self.adj.left_mul(fine);
        self.coarse.quantize_coords(&num, self.den)
    }

    /// Exact `Q_coarse` of the rational fine point `num/den`, in coarse coefficients.
    pub fn quantize_rational_to_coarse(&self, num: &[i64], den: i64) -> Vec<i64> {
        let a = self.adj.left_mul(num);
        self.coarse.quantize_coords(&a, den * self.den)
    }

    /// Splits a fine point into `(Q_coarse(λ), λ mod coarse)`, the first in
    /// coarse coefficients and the second in fine coefficients.
    pub fn reduce(&self, fine: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let q = self.quantize_to_coarse(fine);
        let qf = self.coarse_to_fine(&q);
        let rep = fine.iter().zip(&qf).map(|(a, b)| a - b).collect();
        (q, rep)
    }

    pub fn coset_representatives(&self, cell: CellSelector) -> Result<Vec<Vec<i64>>> {
        let n = self.fine.dim();
        let expected = self.index as usize;
        let reps: Vec<Vec<i64>> = match cell {
            CellSelector::CoarseVoronoi => {
                let radius = self.coarse.covering_radius()? * (1.0 + 1e-9);
                let mut pts = self.fine.points_within(radius);
                pts.retain(|p| self.quantize_to_coarse(p).iter().all(|&c| c == 0));
                pts
            }
            CellSelector::Parallelepiped => {
                // fine points whose coarse coordinates lie in [0,1)ⁿ
                let corners = offsets(n, 1)
                    .into_iter()
                    .filter(|o| o.iter().all(|&c| c >= 0))
                    .map(|o| self.coarse.point(&o))
                    .map(|p| linalg::norm_sq(&p).sqrt())
                    .fold(0.0, f64::max);
                let mut pts = self.fine.points_within(corners * (1.0 + 1e-9));
                pts.retain(|p| self.adj.left_mul(p).iter().all(|&v| v >= 0 && v < self.den));
                pts
            }
        };
        if reps.len() != expected {
            return Err(Error::WindowTooSmall {
                expected,
                found: reps.len(),
            });
        }
        Ok(reps)
    }
}

//! Translation group, dilations and the homogeneous norm attached to a
//! Kolmogorov-type drift matrix in upper-block nilpotent form.
//!
//! Spatial coordinates are stored in a fixed array of length [`MAX_N`];
//! coordinates beyond the shape dimension stay zero.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MAX_N: usize = 4;
pub const NORM_TOL: f64 = 1e-12;

type Mat = [[f64; MAX_N]; MAX_N];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: [f64; MAX_N],
    pub t: f64,
}

impl Point {
    pub fn new(x: &[f64], t: f64) -> Self {
        assert!(x.len() <= MAX_N, "spatial dimension above {MAX_N}");
        let mut p = [0.0; MAX_N];
        p[..x.len()].copy_from_slice(x);
        Point { x: p, t }
    }

    pub fn origin() -> Self {
        Point { x: [0.0; MAX_N], t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance between two points of the same shape.
    pub fn euclid_dist(&self, other: &Point) -> f64 {
        let mut s = (self.t - other.t).powi(2);
        for i in 0..MAX_N {
            s += (self.x[i] - other.x[i]).powi(2);
        }
        s.sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut x = [0.0; MAX_N];
        for (i, v) in x.iter_mut().enumerate() {
            *v = self.x[i] - other.x[i];
        }
        Point { x, t: self.t - other.t }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupMode {
    Compose,
    Invert,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorShape {
    blocks: Vec<usize>,
    b: Mat,
    n: usize,
    q: usize,
    /// spatial exponents a_1..a_N
    a: Vec<i32>,
    /// (B^T)^j / j! for j = 0..=d
    ft_terms: Vec<Mat>,
}

impl OperatorShape {
    /// Validates block sizes and the drift matrix (rows of `b`).
    pub fn validate(s: &[usize], b: &[Vec<f64>]) -> Result<Self> {
        if s.is_empty() || s.contains(&0) {
            return Err(LabError::Shape("block sizes must be nonempty and positive".into()));
        }
        if s.windows(2).any(|w| w[1] > w[0]) {
            return Err(LabError::Shape(format!("block sizes {s:?} are not nonincreasing")));
        }
        let n: usize = s.iter().sum();
        if n > MAX_N {
            return Err(LabError::Shape(format!("N = {n} exceeds supported {MAX_N}")));
        }
        if b.len() != n || b.iter().any(|r| r.len() != n) {
            return Err(LabError::Shape(format!("B must be {n}x{n}")));
        }
        let mut offsets = vec![0usize];
        for &sk in s {
            offsets.push(offsets.last().unwrap() + sk);
        }
        let block_of = |i: usize| offsets.iter().rposition(|&o| o <= i).unwrap();
        for (i, row) in b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(LabError::Shape("nonfinite entry in B".into()));
                }
                if v != 0.0 && block_of(j) != block_of(i) + 1 {
                    return Err(LabError::Shape(format!(
                        "nonzero entry B[{i}][{j}] outside the superdiagonal blocks"
                    )));
                }
            }
        }
        for k in 1..s.len() {
            let (r0, c0) = (offsets[k - 1], offsets[k]);
            let blk = DMatrix::from_fn(s[k - 1], s[k], |i, j| b[r0 + i][c0 + j]);
            let rank = blk.rank(1e-12 * blk.amax().max(1.0));
            if rank != s[k] {
                return Err(LabError::Shape(format!(
                    "block B_{k} has rank {rank}, expected {}",
                    s[k]
                )));
            }
        }
        let mut bm = [[0.0; MAX_N]; MAX_N];
        for i in 0..n {
            for j in 0..n {
                bm[i][j] = b[i][j];
            }
        }
        let d = s.len() - 1;
        let mut bt = [[0.0; MAX_N]; MAX_N];
        for i in 0..n {
            for j in 0..n {
                bt[i][j] = bm[j][i];
            }
        }
        let mut ft_terms = vec![identity(n)];
        for j in 1..=d {
            let prev = ft_terms[j - 1];
            let mut next = mat_mul(&prev, &bt, n);
            for row in next.iter_mut().take(n) {
                for v in row.iter_mut().take(n) {
                    *v /= j as f64;
                }
            }
            ft_terms.push(next);
        }
        let top = mat_mul(&ft_terms[d], &bt, n);
        if top.iter().flatten().any(|&v| v != 0.0) {
            return Err(LabError::Shape("B is not nilpotent of order d+1".into()));
        }
        let mut a = Vec::with_capacity(n);
        for (k, &sk) in s.iter().enumerate() {
            a.extend(std::iter::repeat_n(2 * k as i32 + 1, sk));
        }
        let q = s.iter().enumerate().map(|(k, &sk)| (2 * k + 1) * sk).sum();
        Ok(OperatorShape { blocks: s.to_vec(), b: bm, n, q, a, ft_terms })
    }

    pub fn parabolic() -> Self {
        Self::validate(&[1], &[vec![0.0]]).expect("parabolic shape")
    }

    pub fn kolmogorov() -> Self {
        Self::validate(&[1, 1], &[vec![0.0, 1.0], vec![0.0, 0.0]]).expect("Kolmogorov shape")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "parabolic" => Some(Self::parabolic()),
            "kolmogorov" => Some(Self::kolmogorov()),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self.blocks.as_slice() {
            [1] if self.b[0][0] == 0.0 => "parabolic".into(),
            [1, 1] if self.b[0][1] == 1.0 => "kolmogorov".into(),
            s => format!("shape{s:?}"),
        }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of diffusive coordinates s_0.
    pub fn s0(&self) -> usize {
        self.blocks[0]
    }
    pub fn depth(&self) -> usize {
        self.blocks.len() - 1
    }
    /// Homogeneous spatial dimension Q.
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn spatial_exponents(&self) -> &[i32] {
        &self.a
    }
    /// Exponents of all N+1 coordinates, time last.
    pub fn exponents(&self) -> Vec<i32> {
        let mut a = self.a.clone();
        a.push(2);
        a
    }
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i][j]
    }
    pub fn b_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.b[i][j])
    }

    pub fn translation_matrix(&self, tau: f64) -> DMatrix<f64> {
        let f = self.f_array(tau);
        DMatrix::from_fn(self.n, self.n, |i, j| f[i][j])
    }

    fn f_array(&self, tau: f64) -> Mat {
        let mut out = [[0.0; MAX_N]; MAX_N];
        let mut c = 1.0;
        for term in &self.ft_terms {
            for i in 0..self.n {
                for j in 0..self.n {
                    out[i][j] += c * term[i][j];
                }
            }
            c *= -tau;
        }
        out
    }

    /// F(tau) x without forming the matrix.
    #[inline]
    pub fn apply_f(&self, tau: f64, x: &[f64; MAX_N]) -> [f64; MAX_N] {
        let mut out = *x;
        let mut c = 1.0;
        for term in &self.ft_terms[1..] {
            c *= -tau;
            for (i, o) in out.iter_mut().enumerate().take(self.n) {
                let mut s = 0.0;
                for (j, xv) in x.iter().enumerate().take(self.n) {
                    s += term[i][j] * xv;
                }
                *o += c * s;
            }
        }
        out
    }

    pub fn group_op(&self, z: &Point, w: &Point, mode: GroupMode) -> Point {
        match mode {
            GroupMode::Compose => self.compose(z, w),
            GroupMode::Invert => self.invert(z),
        }
    }

    #[inline]
    pub fn compose(&self, z: &Point, w: &Point) -> Point {
        let fx = self.apply_f(w.t, &z.x);
        let mut x = [0.0; MAX_N];
        for i in 0..self.n {
            x[i] = w.x[i] + fx[i];
        }
        Point { x, t: z.t + w.t }
    }

    #[inline]
    pub fn invert(&self, z: &Point) -> Point {
        let fx = self.apply_f(-z.t, &z.x);
        let mut x = [0.0; MAX_N];
        for i in 0..self.n {
            x[i] = -fx[i];
        }
        Point { x, t: -z.t }
    }

    /// w^{-1} o z, the relative position entering d(z, w).
    #[inline]
    pub fn relative(&self, z: &Point, w: &Point) -> Point {
        // equals (z_x - F(z_t - w_t) w_x, z_t - w_t)
        let dt = z.t - w.t;
        let fw = self.apply_f(dt, &w.x);
        let mut x = [0.0; MAX_N];
        for i in 0..self.n {
            x[i] = z.x[i] - fw[i];
        }
        Point { x, t: dt }
    }

    #[inline]
    pub fn dilate(&self, r: f64, z: &Point) -> Point {
        let mut x = [0.0; MAX_N];
        for i in 0..self.n {
            x[i] = z.x[i] * r.powi(self.a[i]);
        }
        Point { x, t: z.t * r * r }
    }

    /// Homogeneous norm: the root of sum x_i^2/rho^(2a_i) + t^2/rho^4 = 1.
    ///
    /// Works in u = rho^-2, where the defining map is a polynomial with
    /// nonnegative coefficients. The root is bracketed by doubling/halving
    /// and refined by bisection with Newton acceleration.
    pub fn hom_norm(&self, z: &Point, tol: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(LabError::Tolerance("nonfinite point".into()));
        }
        let mut coef = [0.0f64; 2 * MAX_N + 2];
        coef[2] = z.t * z.t;
        for i in 0..self.n {
            coef[self.a[i] as usize] += z.x[i] * z.x[i];
        }
        let deg = 2 * self.depth() + 1;
        let top = deg.max(2);
        if coef[..=top].iter().all(|&c| c == 0.0) {
            return Ok(0.0);
        }
        let eval = |u: f64| {
            let mut p = 0.0;
            let mut dp = 0.0;
            let mut uk1 = 1.0;
            for (k, &c) in coef.iter().enumerate().take(top + 1).skip(1) {
                dp += k as f64 * c * uk1;
                uk1 *= u;
                p += c * uk1;
            }
            (p, dp)
        };
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        let mut guard = 0;
        while eval(lo).0 > 1.0 {
            lo *= 0.5;
            guard += 1;
            if guard > 4000 {
                return Err(LabError::Tolerance("lower bracket not found".into()));
            }
        }
        while eval(hi).0 < 1.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 4000 {
                return Err(LabError::Tolerance("upper bracket not found".into()));
            }
        }
        let mut u = 0.5 * (lo + hi);
        for _ in 0..400 {
            let (p, dp) = eval(u);
            let r = p - 1.0;
            if r.abs() <= tol {
                return Ok(u.powf(-0.5));
            }
            if r > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let newton = u - r / dp;
            u = if newton > lo && newton < hi && dp > 0.0 { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * hi {
                return Ok(u.powf(-0.5));
            }
        }
        Err(LabError::Tolerance("root finder did not converge".into()))
    }

    /// Homogeneous norm at the default tolerance; panics only on nonfinite input.
    #[inline]
    pub fn norm(&self, z: &Point) -> f64 {
        self.hom_norm(z, NORM_TOL).expect("finite point")
    }

    /// d(z, w) = |w^{-1} o z|.
    #[inline]
    pub fn d(&self, z: &Point, w: &Point) -> f64 {
        self.norm(&self.relative(z, w))
    }

    /// Symmetrized quasi-distance d(z, w) + d(w, z).
    #[inline]
    pub fn quasi_distance(&self, z: &Point, w: &Point) -> f64 {
        self.d(z, w) + self.d(w, z)
    }

    /// Homogeneous polar coordinates: w = delta_rho(theta), theta on the
    /// Euclidean unit sphere of R^{N+1} (time last).
    pub fn polar(&self, w: &Point) -> Option<(f64, [f64; MAX_N + 1])> {
        let rho = self.norm(w);
        if rho == 0.0 {
            return None;
        }
        let mut th = [0.0; MAX_N + 1];
        let mut s = 0.0;
        for i in 0..self.n {
            th[i] = w.x[i] / rho.powi(self.a[i]);
            s += th[i] * th[i];
        }
        th[self.n] = w.t / (rho * rho);
        s += th[self.n] * th[self.n];
        let s = s.sqrt();
        for v in th.iter_mut().take(self.n + 1) {
            *v /= s;
        }
        Some((rho, th))
    }

    /// Inverse of [`polar`](Self::polar).
    pub fn from_polar(&self, rho: f64, theta: &[f64]) -> Point {
        let mut x = [0.0; MAX_N];
        for i in 0..self.n {
            x[i] = theta[i] * rho.powi(self.a[i]);
        }
        Point { x, t: theta[self.n] * rho * rho }
    }

    /// Polar Jacobian weight J(theta) = sum a_i theta_i^2 (time included),
    /// so that dw = rho^{Q+1} J(theta) d sigma(theta) d rho.
    #[inline]
    pub fn polar_jacobian(&self, theta: &[f64]) -> f64 {
        let mut j = 2.0 * theta[self.n] * theta[self.n];
        for i in 0..self.n {
            j += self.a[i] as f64 * theta[i] * theta[i];
        }
        j
    }

    /// Euclidean volume of the unit ball of R^{N+1}, which is also the
    /// homogeneous unit ball.
    pub fn unit_ball_volume(&self) -> f64 {
        let k = (self.n + 1) as f64;
        std::f64::consts::PI.powf(k / 2.0) / gamma_half_int(self.n + 3)
    }

    pub fn random_point(&self, rng: &mut ChaCha8Rng, scale: f64) -> Point {
        let mut x = [0.0; MAX_N];
        for v in x.iter_mut().take(self.n) {
            *v = scale * (2.0 * rng.random::<f64>() - 1.0);
        }
        Point { x, t: scale * (2.0 * rng.random::<f64>() - 1.0) }
    }

    /// Uniform point of the Euclidean unit sphere S^N, as a homogeneous unit vector.
    pub fn random_unit(&self, rng: &mut ChaCha8Rng) -> Point {
        loop {
            let mut v = [0.0; MAX_N + 1];
            let mut s = 0.0f64;
            for c in v.iter_mut().take(self.n + 1) {
                *c = rng.sample(StandardNormal);
                s += *c * *c;
            }
            if s > 1e-20 {
                let s = s.sqrt();
                return self.from_polar(1.0, &v[..=self.n].iter().map(|c| c / s).collect::<Vec<_>>());
            }
        }
    }
}

fn identity(n: usize) -> Mat {
    let mut m = [[0.0; MAX_N]; MAX_N];
    for (i, row) in m.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    m
}

fn mat_mul(a: &Mat, b: &Mat, n: usize) -> Mat {
    let mut c = [[0.0; MAX_N]; MAX_N];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// Gamma(m/2) for positive integer m.
fn gamma_half_int(m: usize) -> f64 {
    if m == 1 {
        std::f64::consts::PI.sqrt()
    } else if m == 2 {
        1.0
    } else {
        (m as f64 / 2.0 - 1.0) * gamma_half_int(m - 2)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaRow {
    pub beta: f64,
    /// sup ratio per decade of |zeta^{-1} o z|, smallest scales last
    pub decade_sups: Vec<f64>,
    /// log10 growth of the decade sups per decade
    pub growth: f64,
    pub finite: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaProbe {
    pub beta: f64,
    pub k_tilde: f64,
    pub m: f64,
    pub rows: Vec<BetaRow>,
}

/// Growth per decade above which a candidate beta is declared unbounded.
pub const BETA_GROWTH_TOL: f64 = 0.015;

/// Empirical order-beta probe.
///
/// Triples are sampled with |eta^{-1} o z| = 1 (the inequality is invariant
/// under translations and dilations) and |zeta^{-1} o z| = eps spread over
/// the decades 1e-1..1e-6, so |eta^{-1} o z| >= M |zeta^{-1} o z| with M = 10.
/// Both forms of the inequality are tested; a candidate beta is finite when
/// the per-decade sup of the ratio does not grow as eps decreases.
pub fn order_beta_probe(shape: &OperatorShape, sample_count: usize, seed: u64) -> BetaProbe {
    assert!(sample_count >= 1000, "order_beta_probe needs at least 1e3 samples");
    const DECADES: usize = 5;
    let m = 10.0;
    let betas: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
    let mut rng = seeded_rng(seed);
    let mut sups = vec![vec![0.0f64; DECADES]; betas.len()];
    for s in 0..sample_count {
        let decade = s % DECADES;
        let eps = 10f64.powf(-(1.0 + decade as f64 + rng.random::<f64>()));
        let z = shape.random_point(&mut rng, 1.0);
        let v = shape.random_unit(&mut rng);
        let w = shape.dilate(eps, &shape.random_unit(&mut rng));
        let eta = shape.compose(&z, &shape.invert(&v));
        let zeta = shape.compose(&z, &shape.invert(&w));
        let a1 = shape.relative(&z, &eta).sub(&shape.relative(&zeta, &eta));
        let a2 = shape.relative(&eta, &z).sub(&shape.relative(&eta, &zeta));
        let lhs = shape.norm(&a1).max(shape.norm(&a2));
        let rel = shape.d(&z, &zeta);
        let far = shape.d(&z, &eta);
        debug_assert!(far >= m * rel * 0.999);
        for (bi, &b) in betas.iter().enumerate() {
            let r = lhs / (rel.powf(b) * far.powf(1.0 - b));
            if r > sups[bi][decade] {
                sups[bi][decade] = r;
            }
        }
    }
    let mut rows = Vec::new();
    for (bi, &b) in betas.iter().enumerate() {
        let ys: Vec<f64> = sups[bi].iter().map(|v| v.max(1e-300).log10()).collect();
        let xs: Vec<f64> = (0..DECADES).map(|d| d as f64).collect();
        let growth = crate::stats::fit_slope(&xs, &ys);
        rows.push(BetaRow {
            beta: b,
            decade_sups: sups[bi].clone(),
            growth,
            finite: growth <= BETA_GROWTH_TOL,
        });
    }
    let best = rows.iter().filter(|r| r.finite).map(|r| r.beta).fold(0.0, f64::max);
    let k_tilde = rows
        .iter()
        .find(|r| r.beta == best)
        .map(|r| r.decade_sups.iter().cloned().fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    BetaProbe { beta: best, k_tilde, m, rows }
}

/// Largest observed d(z, w)/d(w, z) over random pairs.
pub fn quasi_symmetry_constant(shape: &OperatorShape, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut worst = 1.0f64;
    for _ in 0..samples {
        let z = shape.random_point(&mut rng, 2.0);
        let w = shape.random_point(&mut rng, 2.0);
        let (a, b) = (shape.d(&z, &w), shape.d(&w, &z));
        if a > 0.0 && b > 0.0 {
            worst = worst.max(a / b).max(b / a);
        }
    }
    worst
}

/// Monte Carlo volume of B_r(z) = {w : d(z, w) < r}, with the standard error.
///
/// A first pass maps the bounding box of the ball at the origin through
/// w -> z o w^{-1} to find a Euclidean box containing B_r(z); the second pass
/// samples that box uniformly.
pub fn ball_volume_mc(
    shape: &OperatorShape,
    z: &Point,
    r: f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = seeded_rng(seed);
    let n = shape.n();
    let exps = shape.exponents();
    let mut lo = vec![f64::INFINITY; n + 1];
    let mut hi = vec![f64::NEG_INFINITY; n + 1];
    let corners = 1usize << (n + 1);
    for c in 0..corners.max(4096) {
        let mut v = vec![0.0; n + 1];
        for (i, vi) in v.iter_mut().enumerate() {
            let ext = r.powi(exps[i]);
            *vi = if c < corners {
                if c >> i & 1 == 1 {
                    ext
                } else {
                    -ext
                }
            } else {
                ext * (2.0 * rng.random::<f64>() - 1.0)
            };
        }
        let w = Point::new(&v[..n], v[n]);
        let p = shape.compose(z, &shape.invert(&w));
        for i in 0..n {
            lo[i] = lo[i].min(p.x[i]);
            hi[i] = hi[i].max(p.x[i]);
        }
        lo[n] = lo[n].min(p.t);
        hi[n] = hi[n].max(p.t);
    }
    let mut vol = 1.0;
    for i in 0..=n {
        let pad = 0.25 * (hi[i] - lo[i]);
        lo[i] -= pad;
        hi[i] += pad;
        vol *= hi[i] - lo[i];
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut x = [0.0; MAX_N];
        for i in 0..n {
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
        }
        let t = lo[n] + (hi[n] - lo[n]) * rng.random::<f64>();
        if shape.d(z, &Point { x, t }) < r {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p * vol, vol * (p * (1.0 - p) / samples as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_shape_data() {
        let k = OperatorShape::kolmogorov();
        assert_eq!((k.n(), k.q()), (2, 4));
        assert_eq!(k.exponents(), vec![1, 3, 2]);
        let p = OperatorShape::parabolic();
        assert_eq!((p.n(), p.q()), (1, 1));
        assert_eq!(p.exponents(), vec![1, 2]);
    }

    #[test]
    fn rejects_malformed_drift() {
        assert!(OperatorShape::validate(&[1, 1], &[vec![0.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(OperatorShape::validate(&[1, 1], &[vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(OperatorShape::validate(&[1, 2], &vec![vec![0.0; 3]; 3]).is_err());
        assert!(OperatorShape::validate(&[2, 2], &[
            vec![0.0, 0.0, 1.0, 2.0],
            vec![0.0, 0.0, 2.0, 4.0],
            vec![0.0; 4],
            vec![0.0; 4],
        ])
        .is_err());
    }

    #[test]
    fn two_step_chain_is_accepted() {
        let s = OperatorShape::validate(&[1, 1, 1], &[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(s.q(), 9);
        // F(1) = I - B^T + (B^T)^2/2
        let f = s.translation_matrix(1.0);
        assert_eq!(f[(2, 0)], 0.5);
        assert_eq!(f[(1, 0)], -1.0);
    }

    #[test]
    fn translation_matrix_examples() {
        let k = OperatorShape::kolmogorov();
        let f = k.translation_matrix(1.0);
        assert_eq!(f.as_slice(), &[1.0, -1.0, 0.0, 1.0]);
        assert_eq!(k.translation_matrix(0.0), DMatrix::identity(2, 2));
        assert_eq!(OperatorShape::parabolic().translation_matrix(3.7)[(0, 0)], 1.0);
    }

    #[test]
    fn group_examples() {
        let k = OperatorShape::kolmogorov();
        let c = k.compose(&Point::new(&[1.0, 0.0], 0.0), &Point::new(&[0.0, 0.0], 1.0));
        assert_eq!(c, Point::new(&[1.0, -1.0], 1.0));
        let inv = k.invert(&Point::new(&[1.0, 0.0], 2.0));
        assert_eq!(inv, Point::new(&[-1.0, -2.0], -2.0));
        let z = Point::new(&[0.3, -1.2], 0.7);
        let e = k.compose(&z, &k.invert(&z));
        assert!(e.euclid_dist(&Point::origin()) < 1e-15);
        let d = k.dilate(2.0, &Point::new(&[1.0, 1.0], 1.0));
        assert_eq!(d, Point::new(&[2.0, 8.0], 4.0));
    }

    #[test]
    fn norm_examples() {
        let k = OperatorShape::kolmogorov();
        assert!((k.norm(&Point::new(&[0.0, 0.0], 4.0)) - 2.0).abs() < 1e-12);
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((k.norm(&Point::new(&[1.0, 0.0], 1.0)) - golden).abs() < 1e-11);
        assert_eq!(k.norm(&Point::origin()), 0.0);
        assert!(k.hom_norm(&Point::new(&[f64::NAN, 0.0], 0.0), 1e-12).is_err());
    }

    #[test]
    fn relative_matches_group_formula() {
        let k = OperatorShape::kolmogorov();
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let z = k.random_point(&mut rng, 2.0);
            let w = k.random_point(&mut rng, 2.0);
            let a = k.relative(&z, &w);
            let b = k.compose(&k.invert(&w), &z);
            assert!(a.euclid_dist(&b) < 1e-13);
        }
    }

    #[test]
    fn polar_round_trip_and_unit_ball() {
        let k = OperatorShape::kolmogorov();
        let z = Point::new(&[0.4, -2.0], 0.3);
        let (rho, th) = k.polar(&z).unwrap();
        assert!(k.from_polar(rho, &th).euclid_dist(&z) < 1e-10);
        assert!((k.unit_ball_volume() - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert!((OperatorShape::parabolic().unit_ball_volume() - std::f64::consts::PI).abs() < 1e-14);
    }
}

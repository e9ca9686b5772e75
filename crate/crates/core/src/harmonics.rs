//! Real spherical harmonics on S^1 and S^2, expansion coefficients of the
//! kernel Gamma_ij, and the homogeneous kernels K_km.
//!
//! Index conventions. Degree m, index k in 1..=g_m.
//! Circle: k = 1 is cos(m phi)/sqrt(pi), k = 2 is sin(m phi)/sqrt(pi), with
//! phi measured from the first axis toward the time axis.
//! S^2: the time coordinate is the polar axis and phi is the azimuth in the
//! spatial plane; k = 1 is the zonal harmonic, k = 2j the cos(j phi) and
//! k = 2j + 1 the sin(j phi) harmonic of order j.
//!
//! Kernels are written K(w) = Omega(theta) / (J(theta) |w|^{Q+2}) for
//! w = delta_rho(theta), where J is the polar Jacobian weight, so the
//! homogeneous sphere carries the polar measure J d sigma. With this
//! normalization the shell integrals of K vanish exactly when Omega has zero
//! Euclidean mean, and Gamma_ij J = sum c^{km} Y_km.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{OperatorShape, Point, MAX_N};
use crate::kernels::FundamentalSolution;
use crate::quadrature::SphereRule;

use std::f64::consts::PI;

/// Largest supported harmonic degree.
pub const MAX_DEGREE: usize = 40;

fn binom(n: i64, k: i64) -> i64 {
    if k < 0 || n < k {
        return 0;
    }
    let mut r = 1i64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Dimension of the space of degree-m harmonics on S^N.
pub fn basis_dim(n: usize, m: usize) -> usize {
    let (n, m) = (n as i64, m as i64);
    (binom(m + n, n) - binom(m + n - 2, n)) as usize
}

/// Position of the first degree-m harmonic in a flattened table.
pub fn degree_offset(n: usize, m: usize) -> usize {
    (0..m).map(|d| basis_dim(n, d)).sum()
}

pub fn table_len(n: usize, m_max: usize) -> usize {
    degree_offset(n, m_max + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphericalBasis {
    pub dim: usize,
    pub m: usize,
    pub k: usize,
}

impl SphericalBasis {
    pub fn new(dim: usize, m: usize, k: usize) -> Self {
        assert!(dim == 1 || dim == 2, "sphere dimension {dim} unsupported");
        assert!(k >= 1 && k <= basis_dim(dim, m), "index k={k} out of range for degree {m}");
        SphericalBasis { dim, m, k }
    }

    pub fn flat_index(&self) -> usize {
        degree_offset(self.dim, self.m) + self.k - 1
    }

    /// All harmonics of this sphere dimension with 1 <= m <= m_max.
    pub fn all(dim: usize, m_max: usize) -> Vec<Self> {
        let mut v = Vec::new();
        for m in 1..=m_max {
            for k in 1..=basis_dim(dim, m) {
                v.push(SphericalBasis { dim, m, k });
            }
        }
        v
    }
}

/// Values of all harmonics with degree <= m_max at theta (time last),
/// written into `out` in flattened order.
pub fn eval_all_into(dim: usize, theta: &[f64], m_max: usize, out: &mut Vec<f64>) {
    out.clear();
    // cos(m phi), sin(m phi) by the Chebyshev recurrence
    let mut cs = [(1.0f64, 0.0f64); MAX_DEGREE + 1];
    let (c1, s1) = {
        let r = (theta[0] * theta[0] + theta[1] * theta[1]).sqrt();
        if r > 0.0 {
            (theta[0] / r, theta[1] / r)
        } else {
            (1.0, 0.0)
        }
    };
    assert!(m_max <= MAX_DEGREE, "degree above {MAX_DEGREE} unsupported");
    for m in 1..=m_max {
        let (c, s) = cs[m - 1];
        cs[m] = (c * c1 - s * s1, s * c1 + c * s1);
    }
    let c0 = 1.0 / (2.0 * PI).sqrt();
    let c = 1.0 / PI.sqrt();
    match dim {
        1 => {
            out.push(c0);
            for &(cm, sm) in cs.iter().take(m_max + 1).skip(1) {
                out.push(c * cm);
                out.push(c * sm);
            }
        }
        2 => {
            let x = theta[2].clamp(-1.0, 1.0);
            let s = (1.0 - x * x).max(0.0).sqrt();
            // normalized associated Legendre table p[l][m], int_{-1}^{1} p^2 = 1
            let mut p = [[0.0f64; MAX_DEGREE + 1]; MAX_DEGREE + 1];
            p[0][0] = 1.0 / 2f64.sqrt();
            for m in 1..=m_max {
                p[m][m] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[m - 1][m - 1];
            }
            for m in 0..m_max {
                p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * x * p[m][m];
            }
            for m in 0..=m_max {
                for l in (m + 2)..=m_max {
                    let (lf, mf) = (l as f64, m as f64);
                    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                    let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                    p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
                }
            }
            for (l, row) in p.iter().enumerate().take(m_max + 1) {
                out.push(c0 * row[0]);
                for m in 1..=l {
                    out.push(c * row[m] * cs[m].0);
                    out.push(c * row[m] * cs[m].1);
                }
            }
        }
        _ => panic!("sphere dimension {dim} unsupported"),
    }
}

pub fn eval_all(dim: usize, theta: &[f64], m_max: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(table_len(dim, m_max));
    eval_all_into(dim, theta, m_max, &mut v);
    v
}

/// Value of one orthonormal harmonic at a unit vector.
pub fn eval_basis(basis: &SphericalBasis, theta: &[f64]) -> f64 {
    let norm: f64 = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    debug_assert!((norm - 1.0).abs() < 1e-12, "theta must be a unit vector");
    eval_all(basis.dim, theta, basis.m)[basis.flat_index()]
}

/// Harmonic values on every node of a sphere rule.
#[derive(Clone, Debug)]
pub struct HarmonicTable {
    pub m_max: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl HarmonicTable {
    pub fn new(rule: &SphereRule, m_max: usize) -> Self {
        let width = table_len(rule.dim, m_max);
        let mut values = Vec::with_capacity(width * rule.len());
        let mut buf = Vec::new();
        for k in 0..rule.len() {
            eval_all_into(rule.dim, rule.theta(k), m_max, &mut buf);
            values.extend_from_slice(&buf);
        }
        HarmonicTable { m_max, width, values }
    }

    #[inline]
    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.width..(node + 1) * self.width]
    }
}

/// Gram matrix deviation max |<Y_a, Y_b> - delta_ab| over all harmonics of
/// degree <= m_max, by the given rule.
pub fn orthonormality_defect(rule: &SphereRule, m_max: usize) -> f64 {
    let table = HarmonicTable::new(rule, m_max);
    let w = table.width;
    let mut gram = vec![0.0; w * w];
    for node in 0..rule.len() {
        let row = table.row(node);
        let wt = rule.weights[node];
        for a in 0..w {
            let ya = wt * row[a];
            for b in a..w {
                gram[a * w + b] += ya * row[b];
            }
        }
    }
    let mut worst = 0.0f64;
    for a in 0..w {
        for b in a..w {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((gram[a * w + b] - target).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelExpansion {
    pub shape: String,
    pub dim: usize,
    pub z: Point,
    pub i: usize,
    pub j: usize,
    pub m_max: usize,
    /// coeffs[m][k-1] for m = 0..=m_max
    pub coeffs: Vec<Vec<f64>>,
    /// max_k |c^{km}| over the last two degrees
    pub tail: [f64; 2],
}

impl KernelExpansion {
    pub fn max_abs_by_degree(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.iter().fold(0.0, |a: f64, v| a.max(v.abs()))).collect()
    }

    /// Flattened coefficients aligned with [`eval_all`] (degree 0 included).
    pub fn flat(&self) -> Vec<f64> {
        self.coeffs.iter().flatten().cloned().collect()
    }

    /// The truncated angular density sum_{1 <= m <= m_cut} c^{km} Y_km(theta).
    pub fn density(&self, theta: &[f64], m_cut: usize) -> f64 {
        let m_cut = m_cut.min(self.m_max);
        let y = eval_all(self.dim, theta, m_cut);
        let mut s = 0.0;
        for (m, cm) in self.coeffs.iter().enumerate().take(m_cut + 1).skip(1) {
            let off = degree_offset(self.dim, m);
            for (k, c) in cm.iter().enumerate() {
                s += c * y[off + k];
            }
        }
        s
    }

    /// Truncated reconstruction of Gamma_ij at a point of the unit sphere.
    pub fn reconstruct(&self, shape: &OperatorShape, theta: &[f64], m_cut: usize) -> f64 {
        self.density(theta, m_cut) / shape.polar_jacobian(theta)
    }
}

/// c^{km} = int_{S^N} Gamma_ij Y_km J d sigma for 0 <= m <= m_max.
pub fn expand_coeffs(fs: &FundamentalSolution, i: usize, j: usize, m_max: usize) -> Result<KernelExpansion> {
    expand_with_rule(fs, i, j, m_max, &SphereRule::kernel_adapted(fs.shape().n(), 16))
}

pub fn expand_with_rule(
    fs: &FundamentalSolution,
    i: usize,
    j: usize,
    m_max: usize,
    rule: &SphereRule,
) -> Result<KernelExpansion> {
    let sh = fs.shape();
    let dim = sh.n();
    if dim > 2 {
        return Err(LabError::Shape(format!("harmonic expansion needs N <= 2, got {dim}")));
    }
    if i >= sh.s0() || j >= sh.s0() {
        return Err(LabError::Shape("expansion indices must lie in the diffusive block".into()));
    }
    let width = table_len(dim, m_max);
    let chunks: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        let n = rule.len();
        let parts = 64usize;
        (0..parts)
            .into_par_iter()
            .map(|p| {
                let mut acc = vec![0.0; width];
                let mut buf = Vec::with_capacity(width);
                let lo = p * n / parts;
                let hi = (p + 1) * n / parts;
                for node in lo..hi {
                    let th = rule.theta(node);
                    let g = fs.hess(&sh.from_polar(1.0, th), i, j);
                    if g == 0.0 {
                        continue;
                    }
                    let f = rule.weights[node] * g * sh.polar_jacobian(th);
                    eval_all_into(dim, th, m_max, &mut buf);
                    for (a, y) in acc.iter_mut().zip(&buf) {
                        *a += f * y;
                    }
                }
                acc
            })
            .collect()
    };
    let mut flat = vec![0.0; width];
    for c in &chunks {
        for (f, v) in flat.iter_mut().zip(c) {
            *f += v;
        }
    }
    let mut coeffs = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let off = degree_offset(dim, m);
        coeffs.push(flat[off..off + basis_dim(dim, m)].to_vec());
    }
    let mx = |c: &Vec<f64>| c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tail = [mx(&coeffs[m_max.saturating_sub(1)]), mx(&coeffs[m_max])];
    Ok(KernelExpansion {
        shape: sh.name(),
        dim,
        z: fs.frozen.z0,
        i,
        j,
        m_max,
        coeffs,
        tail,
    })
}

/// K_km(z) = Y_km(z') / (J(z') |z|^{Q+2}).
pub fn eval_k(basis: &SphericalBasis, shape: &OperatorShape, z: &Point) -> Result<f64> {
    let (rho, th) = shape.polar(z).ok_or(LabError::Pole)?;
    let th = &th[..=shape.n()];
    Ok(eval_basis(basis, th) / (shape.polar_jacobian(th) * rho.powi(shape.q() as i32 + 2)))
}

/// sup over the sphere of |Y_km / J|, the constant c_km bounding
/// |K_km(z)| |z|^{Q+2}; sampled on a fine product rule.
pub fn kernel_sup(basis: &SphericalBasis, shape: &OperatorShape) -> f64 {
    let rule = match basis.dim {
        1 => SphereRule::circle(2048),
        _ => SphereRule::product(128, 256),
    };
    let mut sup = 0.0f64;
    for k in 0..rule.len() {
        let th = rule.theta(k);
        sup = sup.max((eval_basis(basis, th) / shape.polar_jacobian(th)).abs());
    }
    sup
}

/// Sup norm on the unit sphere of Gamma_ij minus its truncated series, for
/// each truncation degree 1..=exp.m_max.
pub fn reconstruction_curve(exp: &KernelExpansion, fs: &FundamentalSolution, rule: &SphereRule) -> Vec<f64> {
    let sh = fs.shape();
    let dim = exp.dim;
    let width = table_len(dim, exp.m_max);
    let mut errs = vec![0.0f64; exp.m_max + 1];
    let flat = exp.flat();
    let mut buf = Vec::with_capacity(width);
    for node in 0..rule.len() {
        let th = rule.theta(node);
        let exact = fs.hess(&sh.from_polar(1.0, th), exp.i, exp.j);
        let jac = sh.polar_jacobian(th);
        eval_all_into(dim, th, exp.m_max, &mut buf);
        let mut partial = flat[0] * buf[0];
        for m in 1..=exp.m_max {
            let off = degree_offset(dim, m);
            for k in 0..basis_dim(dim, m) {
                partial += flat[off + k] * buf[off + k];
            }
            errs[m] = errs[m].max((partial / jac - exact).abs());
        }
    }
    errs.remove(0);
    errs
}

/// Partial sums of sum_m sum_k c_km |c^{km}| by degree.
pub fn summability_partial_sums(exp: &KernelExpansion, shape: &OperatorShape) -> Vec<f64> {
    let mut out = Vec::with_capacity(exp.m_max);
    let mut s = 0.0;
    for m in 1..=exp.m_max {
        for (k, c) in exp.coeffs[m].iter().enumerate() {
            let ckm = kernel_sup(&SphericalBasis::new(exp.dim, m, k + 1), shape);
            s += ckm * c.abs();
        }
        out.push(s);
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HormanderRow {
    pub m: usize,
    /// sup over k and samples of the normalized kernel difference
    pub constant: f64,
    /// per-decade sups of the smallest-scale decade relative to the first
    pub decade_growth: f64,
}

/// Empirical Hormander constants of K_km for m = 1..=m_max, sampling
/// |eta^{-1} o z| = 1 and |zeta^{-1} o z| = eps <= 1/m_sep.
pub fn hormander_probe(
    shape: &OperatorShape,
    m_max: usize,
    beta: f64,
    m_sep: f64,
    samples: usize,
    seed: u64,
) -> Vec<HormanderRow> {
    use rand::RngExt;
    let dim = shape.n();
    let mut rng = crate::geometry::seeded_rng(seed);
    const DECADES: usize = 4;
    let mut sups = vec![vec![0.0f64; DECADES]; m_max + 1];
    let q2 = shape.q() as f64 + 2.0;
    for s in 0..samples {
        let decade = s % DECADES;
        let eps = 10f64.powf(-(m_sep.log10() + decade as f64 + rng.random::<f64>()));
        let z = shape.random_point(&mut rng, 1.0);
        let v = shape.random_unit(&mut rng);
        let w = shape.dilate(eps, &shape.random_unit(&mut rng));
        let eta = shape.compose(&z, &shape.invert(&v));
        let zeta = shape.compose(&z, &shape.invert(&w));
        let a = shape.relative(&eta, &zeta);
        let b = shape.relative(&eta, &z);
        let (ra, ta) = match shape.polar(&a) {
            Some(p) => p,
            None => continue,
        };
        let (rb, tb) = match shape.polar(&b) {
            Some(p) => p,
            None => continue,
        };
        let ya = eval_all(dim, &ta[..=dim], m_max);
        let yb = eval_all(dim, &tb[..=dim], m_max);
        let ka = 1.0 / (shape.polar_jacobian(&ta[..=dim]) * ra.powf(q2));
        let kb = 1.0 / (shape.polar_jacobian(&tb[..=dim]) * rb.powf(q2));
        let far = shape.d(&z, &eta);
        let near = shape.d(&z, &zeta);
        let norm = far.powf(q2 + beta) / near.powf(beta);
        for m in 1..=m_max {
            let off = degree_offset(dim, m);
            for k in 0..basis_dim(dim, m) {
                let diff = (ya[off + k] * ka - yb[off + k] * kb).abs() * norm;
                if diff > sups[m][decade] {
                    sups[m][decade] = diff;
                }
            }
        }
    }
    (1..=m_max)
        .map(|m| {
            let row = &sups[m];
            let constant = row.iter().cloned().fold(0.0, f64::max);
            let growth = (row[DECADES - 1].max(1e-300) / row[0].max(1e-300)).log10() / (DECADES - 1) as f64;
            HormanderRow { m, constant, decade_growth: growth }
        })
        .collect()
}

/// Sup of |K_km(z)| |z|^{Q+2} over a random sample, per degree.
pub fn kernel_growth_sample(shape: &OperatorShape, m_max: usize, samples: usize, seed: u64) -> Vec<f64> {
    let dim = shape.n();
    let mut rng = crate::geometry::seeded_rng(seed);
    let mut out = vec![0.0f64; m_max + 1];
    let q2 = shape.q() as i32 + 2;
    for _ in 0..samples {
        let z = shape.random_point(&mut rng, 2.0);
        let (rho, th) = match shape.polar(&z) {
            Some(p) => p,
            None => continue,
        };
        let th = &th[..=dim];
        let y = eval_all(dim, th, m_max);
        let scale = 1.0 / (shape.polar_jacobian(th) * rho.powi(q2));
        for (m, o) in out.iter_mut().enumerate().skip(1) {
            let off = degree_offset(dim, m);
            for k in 0..basis_dim(dim, m) {
                *o = o.max((y[off + k] * scale).abs() * rho.powi(q2));
            }
        }
    }
    out.remove(0);
    out
}

/// Unit vector helper for tests and callers working in R^{N+1}.
pub fn unit(theta: &[f64]) -> [f64; MAX_N + 1] {
    let n: f64 = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = [0.0; MAX_N + 1];
    for (o, v) in out.iter_mut().zip(theta) {
        *o = v / n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims() {
        assert_eq!(basis_dim(2, 1), 3);
        assert_eq!(basis_dim(2, 2), 5);
        assert_eq!(basis_dim(2, 7), 15);
        for m in 1..10 {
            assert_eq!(basis_dim(1, m), 2);
        }
        assert_eq!(basis_dim(1, 0), 1);
        assert_eq!(basis_dim(2, 0), 1);
    }

    #[test]
    fn circle_normalization() {
        let v = eval_basis(&SphericalBasis::new(1, 1, 1), &[1.0, 0.0]);
        assert!((v - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_on_both_spheres() {
        assert!(orthonormality_defect(&SphereRule::exact_for_degree(1, 8), 8) < 1e-12);
        assert!(orthonormality_defect(&SphereRule::exact_for_degree(2, 8), 8) < 1e-12);
    }

    #[test]
    fn degree_one_is_linear() {
        // on S^2 the degree-one harmonics are multiples of the coordinates
        let th = unit(&[0.3, -0.4, 0.5]);
        let y = eval_all(2, &th[..3], 1);
        let c = (3.0 / (4.0 * PI)).sqrt();
        let mut got = [y[1], y[2], y[3]];
        got.sort_by(|a, b| a.total_cmp(b));
        let mut want = [c * th[2], c * th[0], c * th[1]];
        want.sort_by(|a, b| a.total_cmp(b));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-14);
        }
    }
}

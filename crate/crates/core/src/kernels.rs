//! Gaussian fundamental solution of the frozen operator, its spatial
//! derivatives, and the boundary coefficients alpha_ij.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{OperatorShape, Point, MAX_N};
use crate::quadrature::{composite_gl, SphereRule};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrozenCoefficients {
    pub z0: Point,
    /// s0 x s0 diffusion block, row-major
    pub a: Vec<f64>,
    pub lambda: f64,
}

impl FrozenCoefficients {
    pub fn new(z0: Point, a: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(LabError::Shape("diffusion block must be square".into()));
        }
        if (&a - a.transpose()).amax() > 1e-14 * a.amax().max(1.0) {
            return Err(LabError::Shape("diffusion block must be symmetric".into()));
        }
        let eig = a.clone().symmetric_eigen().eigenvalues;
        for &e in eig.iter() {
            if e < 1.0 / lambda - 1e-14 || e > lambda + 1e-14 {
                return Err(LabError::Ellipticity { cell: 0, eig: e, lambda });
            }
        }
        let s0 = a.nrows();
        let mut flat = Vec::with_capacity(s0 * s0);
        for i in 0..s0 {
            for j in 0..s0 {
                flat.push(a[(i, j)]);
            }
        }
        Ok(FrozenCoefficients { z0, a: flat, lambda })
    }

    /// Identity diffusion on s0 coordinates.
    pub fn identity(s0: usize) -> Self {
        Self::new(Point::origin(), DMatrix::identity(s0, s0), 1.0).expect("identity is elliptic")
    }

    /// Scalar diffusion a I.
    pub fn scalar(s0: usize, a: f64) -> Self {
        let lambda = a.max(1.0 / a);
        Self::new(Point::origin(), DMatrix::identity(s0, s0) * a, lambda).expect("positive scalar")
    }

    pub fn s0(&self) -> usize {
        (self.a.len() as f64).sqrt().round() as usize
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.s0() + j]
    }
}

/// Matrix whose entries are polynomials in t (coefficient index = power).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovariancePolynomial {
    pub n: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

impl CovariancePolynomial {
    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            self.coeffs[i][j].iter().rev().fold(0.0, |acc, c| acc * t + c)
        })
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .flatten()
            .map(|p| p.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// C(t) = int_0^t F(s) A0 F(s)^T ds by exact coefficient arithmetic.
pub fn covariance_poly(shape: &OperatorShape, frozen: &FrozenCoefficients) -> CovariancePolynomial {
    let n = shape.n();
    let s0 = shape.s0();
    assert_eq!(frozen.s0(), s0, "diffusion block does not match s0");
    let d = shape.depth();
    // F(s) = sum_j F_j s^j with F_j = (-B^T)^j / j!
    let bt = shape.b_matrix().transpose();
    let mut f_terms = vec![DMatrix::<f64>::identity(n, n)];
    for j in 1..=d {
        let next = -(&f_terms[j - 1] * &bt) / j as f64;
        f_terms.push(next);
    }
    let a0 = DMatrix::from_fn(n, n, |i, j| if i < s0 && j < s0 { frozen.entry(i, j) } else { 0.0 });
    let deg = 2 * d + 1;
    let mut coeffs = vec![vec![vec![0.0; deg + 1]; n]; n];
    for (j, fj) in f_terms.iter().enumerate() {
        for (k, fk) in f_terms.iter().enumerate() {
            let prod = fj * &a0 * fk.transpose();
            let p = j + k + 1;
            for r in 0..n {
                for c in 0..n {
                    coeffs[r][c][p] += prod[(r, c)] / p as f64;
                }
            }
        }
    }
    CovariancePolynomial { n, coeffs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    Value,
    Grad,
    Hess,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GammaValue {
    Value(f64),
    Grad(Vec<f64>),
    Hess(DMatrix<f64>),
}

/// Frozen fundamental solution with precomputed covariance data.
///
/// Evaluation uses C(t) = D C(1) D with D = diag(t^{a_i/2}), an exact
/// identity for the block structure, so the inverse is formed once from the
/// well-conditioned C(1).
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    shape: OperatorShape,
    pub frozen: FrozenCoefficients,
    pub cov: CovariancePolynomial,
    c1_inv: [[f64; MAX_N]; MAX_N],
    norm_const: f64,
    half_a: [f64; MAX_N],
}

impl FundamentalSolution {
    pub fn new(shape: &OperatorShape, frozen: &FrozenCoefficients) -> Self {
        let cov = covariance_poly(shape, frozen);
        let c1 = cov.eval(1.0);
        let n = shape.n();
        let chol = c1.clone().cholesky().expect("C(1) positive definite");
        let inv = chol.inverse();
        let det = c1.determinant();
        let mut c1_inv = [[0.0; MAX_N]; MAX_N];
        for i in 0..n {
            for j in 0..n {
                c1_inv[i][j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            }
        }
        let norm_const = 1.0 / ((4.0 * std::f64::consts::PI).powf(n as f64 / 2.0) * det.sqrt());
        let mut half_a = [0.0; MAX_N];
        for (i, h) in half_a.iter_mut().enumerate().take(n) {
            *h = 0.5 * shape.spatial_exponents()[i] as f64;
        }
        FundamentalSolution { shape: shape.clone(), frozen: frozen.clone(), cov, c1_inv, norm_const, half_a }
    }

    pub fn shape(&self) -> &OperatorShape {
        &self.shape
    }

    /// Returns (Gamma, C(t)^{-1} x) for t > 0.
    #[inline]
    fn core(&self, z: &Point) -> (f64, [f64; MAX_N]) {
        let n = self.shape.n();
        let t = z.t;
        let mut y = [0.0; MAX_N];
        let mut scale = [0.0; MAX_N];
        for i in 0..n {
            scale[i] = t.powf(-self.half_a[i]);
            y[i] = z.x[i] * scale[i];
        }
        let mut cy = [0.0; MAX_N];
        let mut quad = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.c1_inv[i][j] * y[j];
            }
            cy[i] = s;
            quad += s * y[i];
        }
        let g = self.norm_const * t.powf(-0.5 * self.shape.q() as f64) * (-0.25 * quad).exp();
        let mut cx = [0.0; MAX_N];
        for i in 0..n {
            cx[i] = cy[i] * scale[i];
        }
        (g, cx)
    }

    #[inline]
    fn c_inv_entry(&self, t: f64, i: usize, j: usize) -> f64 {
        self.c1_inv[i][j] * t.powf(-self.half_a[i] - self.half_a[j])
    }

    #[inline]
    pub fn value(&self, z: &Point) -> f64 {
        if z.t <= 0.0 {
            return 0.0;
        }
        self.core(z).0
    }

    #[inline]
    pub fn grad(&self, z: &Point, i: usize) -> f64 {
        if z.t <= 0.0 {
            return 0.0;
        }
        let (g, cx) = self.core(z);
        -0.5 * cx[i] * g
    }

    #[inline]
    pub fn hess(&self, z: &Point, i: usize, j: usize) -> f64 {
        if z.t <= 0.0 {
            return 0.0;
        }
        let (g, cx) = self.core(z);
        (-0.5 * self.c_inv_entry(z.t, i, j) + 0.25 * cx[i] * cx[j]) * g
    }

    pub fn gamma_eval(&self, z: &Point, order: Order) -> Result<GammaValue> {
        let n = self.shape.n();
        if order == Order::Hess && z.t.abs() < 1e-300 && z.x.iter().all(|v| v.abs() < 1e-300) {
            return Err(LabError::Domain("Hessian requested at the pole".into()));
        }
        Ok(match order {
            Order::Value => GammaValue::Value(self.value(z)),
            Order::Grad => GammaValue::Grad((0..n).map(|i| self.grad(z, i)).collect()),
            Order::Hess => GammaValue::Hess(DMatrix::from_fn(n, n, |i, j| self.hess(z, i, j))),
        })
    }

    /// Gamma(z; zeta) = Gamma_0(zeta^{-1} o z).
    pub fn with_pole(&self, z: &Point, zeta: &Point) -> f64 {
        self.value(&self.shape.relative(z, zeta))
    }

    /// C(t)^{-1} by direct inversion of the polynomial matrix, used as an
    /// independent route in tests.
    pub fn direct_inverse(&self, t: f64) -> DMatrix<f64> {
        self.cov.eval(t).try_inverse().expect("C(t) invertible for t > 0")
    }
}

/// alpha_ij = int over the unit sphere of Gamma_j nu_i (Euclidean surface
/// measure, outward normal nu = theta).
pub fn alpha_coeff(fs: &FundamentalSolution, i: usize, j: usize) -> f64 {
    alpha_with_rule(fs, i, j, &SphereRule::kernel_adapted(fs.shape().n(), 16))
}

pub fn alpha_with_rule(fs: &FundamentalSolution, i: usize, j: usize, rule: &SphereRule) -> f64 {
    let sh = fs.shape();
    rule.integrate(|th| fs.grad(&sh.from_polar(1.0, th), j) * th[i])
}

/// alpha_ij with a refinement-based error estimate; fails if the estimate
/// exceeds `tol`.
pub fn alpha_checked(fs: &FundamentalSolution, i: usize, j: usize, tol: f64) -> Result<f64> {
    let n = fs.shape().n();
    let a = alpha_with_rule(fs, i, j, &SphereRule::kernel_adapted(n, 12));
    let b = alpha_with_rule(fs, i, j, &SphereRule::kernel_adapted(n, 20));
    let estimate = (a - b).abs();
    if estimate > tol {
        return Err(LabError::Quadrature { estimate, tol });
    }
    Ok(b)
}

/// Integral of Gamma_ij over the sphere with the polar measure J d sigma.
pub fn sphere_mean_weighted(fs: &FundamentalSolution, i: usize, j: usize, rule: &SphereRule) -> f64 {
    let sh = fs.shape();
    rule.integrate(|th| fs.hess(&sh.from_polar(1.0, th), i, j) * sh.polar_jacobian(th))
}

/// Integral of Gamma_ij over the sphere with the bare Euclidean measure.
pub fn sphere_mean_euclidean(fs: &FundamentalSolution, i: usize, j: usize, rule: &SphereRule) -> f64 {
    let sh = fs.shape();
    rule.integrate(|th| fs.hess(&sh.from_polar(1.0, th), i, j))
}

/// Annulus integral of Gamma_ij over a < |zeta| < b by radial Gauss-Legendre
/// times the sphere rule in homogeneous polar coordinates (Jacobian
/// rho^{Q+1} J(theta)).
pub fn cancellation_check(fs: &FundamentalSolution, i: usize, j: usize, a: f64, b: f64) -> f64 {
    assert!(0.0 < a && a < b);
    let sh = fs.shape();
    let rule = SphereRule::kernel_adapted(sh.n(), 16);
    let levels = ((b / a).log2().ceil() as usize).max(1);
    let edges: Vec<f64> = (0..=levels).map(|k| a * (b / a).powf(k as f64 / levels as f64)).collect();
    let (r, wr) = composite_gl(&edges, 8);
    let q1 = sh.q() as i32 + 1;
    let mut total = 0.0;
    for (rho, w) in r.iter().zip(&wr) {
        let shell = rule.integrate(|th| {
            fs.hess(&sh.from_polar(*rho, th), i, j) * sh.polar_jacobian(th)
        });
        total += w * rho.powi(q1) * shell;
    }
    total
}

/// Centered finite-difference residual of the frozen operator applied to
/// Gamma at the sample points; returns the maximum absolute residual.
pub fn pde_residual_probe(fs: &FundamentalSolution, points: &[Point], h: f64) -> f64 {
    let sh = fs.shape();
    let n = sh.n();
    let s0 = sh.s0();
    let shift = |z: &Point, k: usize, d: f64| {
        let mut p = *z;
        if k < n {
            p.x[k] += d;
        } else {
            p.t += d;
        }
        p
    };
    let g = |p: &Point| fs.value(p);
    let mut worst = 0.0f64;
    for z in points {
        let mut r = 0.0;
        for i in 0..s0 {
            for j in 0..s0 {
                let aij = fs.frozen.entry(i, j);
                if aij == 0.0 {
                    continue;
                }
                let d2 = if i == j {
                    (g(&shift(z, i, h)) - 2.0 * g(z) + g(&shift(z, i, -h))) / (h * h)
                } else {
                    let pp = shift(&shift(z, i, h), j, h);
                    let pm = shift(&shift(z, i, h), j, -h);
                    let mp = shift(&shift(z, i, -h), j, h);
                    let mm = shift(&shift(z, i, -h), j, -h);
                    (g(&pp) - g(&pm) - g(&mp) + g(&mm)) / (4.0 * h * h)
                };
                r += aij * d2;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let b = sh.b(i, j);
                if b != 0.0 {
                    let dj = (g(&shift(z, j, h)) - g(&shift(z, j, -h))) / (2.0 * h);
                    r += b * z.x[i] * dj;
                }
            }
        }
        r -= (g(&shift(z, n, h)) - g(&shift(z, n, -h))) / (2.0 * h);
        worst = worst.max(r.abs());
    }
    worst
}

/// Radial sample used by the growth-bound check: sup of
/// |Gamma_ij(z)| |z|^{Q+a_i+a_j} over points at several radii.
pub fn growth_constant(fs: &FundamentalSolution, i: usize, j: usize, radii: &[f64], rule: &SphereRule) -> f64 {
    let sh = fs.shape();
    let e = sh.q() as i32 + sh.spatial_exponents()[i] + sh.spatial_exponents()[j];
    let mut sup = 0.0f64;
    for &r in radii {
        for k in 0..rule.len() {
            let z = sh.from_polar(r, rule.theta(k));
            sup = sup.max(fs.hess(&z, i, j).abs() * sh.norm(&z).powi(e));
        }
    }
    sup
}

/// Finite-difference bounds of d^k/dphi^k of Gamma_ij along the unit circle
/// (parabolic) or along meridians of S^2 for k = 1..=4.
pub fn sphere_derivative_bounds(fs: &FundamentalSolution, i: usize, j: usize, samples: usize) -> [f64; 4] {
    let sh = fs.shape();
    let h = 1e-3;
    let mut out = [0.0f64; 4];
    let azimuths: Vec<f64> = if sh.n() == 1 { vec![0.0] } else { (0..8).map(|k| k as f64 * 0.785).collect() };
    for &az in &azimuths {
        let at = |phi: f64| {
            let th: Vec<f64> = if sh.n() == 1 {
                vec![phi.cos(), phi.sin()]
            } else {
                vec![phi.cos() * az.cos(), phi.cos() * az.sin(), phi.sin()]
            };
            fs.hess(&sh.from_polar(1.0, &th), i, j)
        };
        for s in 0..samples {
            let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (s as f64 + 0.5) / samples as f64;
            let v: Vec<f64> = (-2..=2).map(|k| at(phi + k as f64 * h)).collect();
            let d1 = (v[3] - v[1]) / (2.0 * h);
            let d2 = (v[3] - 2.0 * v[2] + v[1]) / (h * h);
            let d3 = (v[4] - 2.0 * v[3] + 2.0 * v[1] - v[0]) / (2.0 * h.powi(3));
            let d4 = (v[4] - 4.0 * v[3] + 6.0 * v[2] - 4.0 * v[1] + v[0]) / h.powi(4);
            for (o, d) in out.iter_mut().zip([d1, d2, d3, d4]) {
                *o = o.max(d.abs());
            }
        }
    }
    out
}

/// Sample points with t > 0 and homogeneous norm in [r_lo, r_hi].
pub fn sample_points(shape: &OperatorShape, count: usize, r_lo: f64, r_hi: f64, seed: u64) -> Vec<Point> {
    use rand::RngExt;
    let mut rng = crate::geometry::seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = shape.random_unit(&mut rng);
        if u.t <= 0.05 {
            continue;
        }
        let r = r_lo + (r_hi - r_lo) * rng.random::<f64>();
        out.push(shape.dilate(r, &u));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_covariance() {
        let k = OperatorShape::kolmogorov();
        let c = covariance_poly(&k, &FrozenCoefficients::identity(1));
        assert_eq!(c.coeffs[0][0], vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(c.coeffs[0][1], vec![0.0, 0.0, -0.5, 0.0]);
        assert_eq!(c.coeffs[1][1][3], 1.0 / 3.0);
        assert!((c.eval(1.0).determinant() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(c.degree(), 3);
    }

    #[test]
    fn parabolic_covariance() {
        let p = OperatorShape::parabolic();
        let c = covariance_poly(&p, &FrozenCoefficients::scalar(1, 2.5));
        assert_eq!(c.coeffs[0][0], vec![0.0, 2.5]);
    }

    #[test]
    fn anchors() {
        let k = OperatorShape::kolmogorov();
        let fs = FundamentalSolution::new(&k, &FrozenCoefficients::identity(1));
        let g = fs.value(&Point::new(&[0.0, 0.0], 1.0));
        assert!((g - 3f64.sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(fs.value(&Point::new(&[0.3, 0.1], -1.0)), 0.0);
        let p = OperatorShape::parabolic();
        let fp = FundamentalSolution::new(&p, &FrozenCoefficients::identity(1));
        let g = fp.value(&Point::new(&[0.0], 1.0));
        assert!((g - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn pole_is_rejected_for_hessian() {
        let fs = FundamentalSolution::new(&OperatorShape::parabolic(), &FrozenCoefficients::identity(1));
        assert!(fs.gamma_eval(&Point::origin(), Order::Hess).is_err());
        assert!(fs.gamma_eval(&Point::origin(), Order::Value).is_ok());
    }

    #[test]
    fn ellipticity_enforced() {
        let a = DMatrix::from_element(1, 1, 5.0);
        assert!(FrozenCoefficients::new(Point::origin(), a, 2.0).is_err());
    }
}

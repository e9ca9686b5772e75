//! Singular integrals T f(z) = p.v. int K(zeta^{-1} o z) f(zeta) d zeta for
//! kernels K(w) = Omega(theta) / (J(theta) rho^{Q+2}), their commutators and
//! the grand truncated maximal operator.
//!
//! Discretization. Let psi be a C^1 cutoff, 1 on rho <= rho_s/2 and 0 on
//! rho >= rho_s. The near part
//!   int_eps^{rho_s} psi(rho) d rho / rho int Omega(theta) [f~(z o (delta_rho theta)^{-1}) - f(z)] d sigma
//! uses homogeneous polar coordinates and the multilinear interpolant f~ of
//! the lattice values (extended by zero). The far part is the lattice sum
//!   sum (1 - psi) K(zeta^{-1} o z) [f(zeta) - f(z) chi_{rho <= 1}] vol,
//! where the subtracted term runs over the lattice extended beyond the box
//! so that it approximates the vanishing shell integral. The result is
//! linear in the lattice values:
//!   T_h g(y) = sum_zeta W(y, zeta) g(zeta) - g(y) S(y).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{GridField, LatticeBox};
use crate::dyadic::{BallCatalog, CellGeometry};
use crate::error::{LabError, Result};
use crate::geometry::{seeded_rng, OperatorShape, Point, MAX_N};
use crate::harmonics::{eval_all_into, KernelExpansion, SphericalBasis};
use crate::kernels::FundamentalSolution;
use crate::quadrature::{composite_gl, graded_edges, SphereRule};

#[derive(Clone, Debug)]
pub struct SingularSpec {
    pub shape: OperatorShape,
    /// inner radial cutoff of the near part
    pub eps: f64,
    /// near/far blending radius rho_s
    pub rho_split: f64,
    /// Gauss points per radial panel
    pub radial_order: usize,
    /// angular rule of the near part
    pub sphere: SphereRule,
    /// radius of the locally subtracted f(z) term
    pub subtract_radius: f64,
}

impl SingularSpec {
    /// Defaults for a lattice: rho_s = `split` homogeneous cell sizes,
    /// eps = rho_s 2^-10, and a near rule exact for degree m_max + 8.
    pub fn for_lattice(shape: &OperatorShape, bx: &LatticeBox, m_max: usize, split: f64) -> Self {
        let rho_split = split * bx.hom_cell_size(shape);
        SingularSpec {
            shape: shape.clone(),
            eps: rho_split * 2f64.powi(-10),
            rho_split,
            radial_order: 4,
            sphere: SphereRule::exact_for_degree(shape.n(), m_max.max(2) + 8),
            subtract_radius: 1.0,
        }
    }

    /// Defaults for the given kernels; the exact kernels are steep near
    /// t = 0 on the sphere and get the kernel-adapted angular rule.
    pub fn for_kernels(shape: &OperatorShape, bx: &LatticeBox, kernels: &[AngularKernel], split: f64) -> Self {
        let m = kernels.iter().map(|k| k.degree()).max().unwrap_or(0);
        let mut spec = Self::for_lattice(shape, bx, m, split);
        if kernels.iter().any(|k| matches!(k, AngularKernel::Exact { .. })) {
            spec.sphere = SphereRule::kernel_adapted(shape.n(), 4);
        }
        spec
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        SingularSpec { eps, ..self.clone() }
    }

    #[inline]
    pub fn psi(&self, rho: f64) -> f64 {
        let a = 0.5 * self.rho_split;
        if rho <= a {
            1.0
        } else if rho >= self.rho_split {
            0.0
        } else {
            let c = (0.5 * std::f64::consts::PI * (rho - a) / a).cos();
            c * c
        }
    }

    /// Radial nodes on [eps, rho_s] with weights psi(rho)/rho folded in.
    pub fn radial_nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let levels = ((self.rho_split / self.eps).log2().ceil() as usize).max(1);
        let edges = graded_edges(self.eps.min(self.rho_split), self.rho_split, levels);
        let edges: Vec<f64> = edges.into_iter().skip_while(|e| *e < self.eps).collect();
        let mut e = vec![self.eps];
        e.extend(edges.into_iter().filter(|x| *x > self.eps));
        let (r, w) = composite_gl(&e, self.radial_order);
        let w = r.iter().zip(&w).map(|(r, w)| w * self.psi(*r) / r).collect();
        (r, w)
    }
}

/// Angular part Omega of a kernel K = Omega / (J rho^{Q+2}).
#[derive(Clone, Debug)]
pub enum AngularKernel {
    Harmonic(SphericalBasis),
    /// sum over 1 <= m <= m_max of c^{km} Y_km, coefficients flattened as in
    /// [`eval_all_into`] (the degree-0 slot is ignored)
    Series { dim: usize, m_max: usize, coeffs: Vec<f64> },
    /// Gamma_ij J, the kernel of the full second derivative
    Exact { fs: Box<FundamentalSolution>, i: usize, j: usize },
}

impl AngularKernel {
    pub fn from_expansion(exp: &KernelExpansion, m_cut: usize) -> Self {
        let m_cut = m_cut.min(exp.m_max);
        let mut coeffs = Vec::new();
        for c in exp.coeffs.iter().take(m_cut + 1) {
            coeffs.extend_from_slice(c);
        }
        coeffs[0] = 0.0;
        AngularKernel::Series { dim: exp.dim, m_max: m_cut, coeffs }
    }

    pub fn degree(&self) -> usize {
        match self {
            AngularKernel::Harmonic(b) => b.m,
            AngularKernel::Series { m_max, .. } => *m_max,
            AngularKernel::Exact { .. } => 0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            AngularKernel::Harmonic(b) => format!("K_m{}k{}", b.m, b.k),
            AngularKernel::Series { m_max, .. } => format!("series_m{m_max}"),
            AngularKernel::Exact { i, j, .. } => format!("gamma_{}{}", i + 1, j + 1),
        }
    }
}

/// Omega of every kernel at theta, sharing one harmonic evaluation.
fn omega_many(kernels: &[AngularKernel], shape: &OperatorShape, theta: &[f64], buf: &mut Vec<f64>, out: &mut [f64]) {
    let deg = kernels.iter().map(|k| k.degree()).max().unwrap_or(0);
    let need = kernels.iter().any(|k| !matches!(k, AngularKernel::Exact { .. }));
    if need {
        eval_all_into(shape.n(), theta, deg, buf);
    }
    for (o, k) in out.iter_mut().zip(kernels) {
        *o = match k {
            AngularKernel::Harmonic(b) => buf[b.flat_index()],
            AngularKernel::Series { coeffs, .. } => coeffs.iter().zip(buf.iter()).skip(1).map(|(c, y)| c * y).sum(),
            AngularKernel::Exact { fs, i, j } => {
                let p = shape.from_polar(1.0, theta);
                fs.hess(&p, *i, *j) * shape.polar_jacobian(theta)
            }
        };
    }
}

/// rho, theta (unit vector of R^{N+1}) and J for w != 0.
#[inline]
fn polar_j(shape: &OperatorShape, w: &Point) -> Option<(f64, [f64; MAX_N + 1], f64)> {
    let (rho, th) = shape.polar(w)?;
    let j = shape.polar_jacobian(&th[..=shape.n()]);
    Some((rho, th, j))
}

fn point_from_index(bx: &LatticeBox, idx: &[i64]) -> Point {
    let d = bx.dim();
    let mut p = Point::origin();
    for a in 0..d - 1 {
        p.x[a] = bx.lower[a] + (idx[a] as f64 + 0.5) * bx.h(a);
    }
    p.t = bx.lower[d - 1] + (idx[d - 1] as f64 + 0.5) * bx.h(d - 1);
    p
}

/// Integer index ranges (relative to y) containing every lattice center zeta
/// with |zeta^{-1} o y| <= radius.
fn shell_window(shape: &OperatorShape, bx: &LatticeBox, y: &Point, radius: f64) -> [(i64, i64); MAX_N + 1] {
    let d = bx.dim();
    let mut lo = [f64::INFINITY; MAX_N + 1];
    let mut hi = [f64::NEG_INFINITY; MAX_N + 1];
    let mut rng = seeded_rng(0x5eed);
    let mut upd = |w: &Point| {
        let z = shape.compose(y, &shape.invert(w));
        let c = LatticeBox::coords(&z, d);
        let yc = LatticeBox::coords(y, d);
        for a in 0..d {
            let v = c[a] - yc[a];
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    };
    for s in 0..4096 {
        let u = shape.random_unit(&mut rng);
        let r = radius * [1.0, 0.75, 0.5, 0.25][s % 4];
        upd(&shape.dilate(r, &u));
    }
    let mut out = [(0i64, 0i64); MAX_N + 1];
    for a in 0..d {
        let h = bx.h(a);
        let pad = 0.25 * (hi[a] - lo[a]) + 2.0 * h;
        out[a] = (((lo[a] - pad) / h).floor() as i64, ((hi[a] + pad) / h).ceil() as i64);
    }
    out
}

/// Table engine: W(y, zeta) tabulated over index differences and the
/// absolute indices of the axes where the group law is not a lattice shift.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub spec: SingularSpec,
    pub kernel: AngularKernel,
    pub bx: LatticeBox,
    table: Vec<f64>,
    ybase: Vec<usize>,
    zoff: Vec<usize>,
    /// S(y) per cell
    pub s: Vec<f64>,
    /// extended-lattice shell sum per cell: the cancellation defect
    pub defect: Vec<f64>,
}

/// Largest table the engine will allocate.
pub const MAX_TABLE: usize = 12_000_000;

impl DiscreteOperator {
    pub fn build(spec: &SingularSpec, kernel: &AngularKernel, bx: &LatticeBox) -> Result<Self> {
        let shape = &spec.shape;
        let d = bx.dim();
        if d != shape.n() + 1 {
            return Err(LabError::Shape("lattice dimension differs from N + 1".into()));
        }
        // axes whose absolute index matters: blocks 0..depth-1
        let last = if shape.depth() >= 1 { *shape.blocks().last().unwrap() } else { shape.n() };
        let ni: Vec<usize> = (0..shape.n() - last).collect();
        let n: Vec<usize> = bx.res.clone();
        let mut stride_d = vec![0usize; d];
        let mut size = 1usize;
        for a in 0..d {
            stride_d[a] = size;
            size *= 2 * n[a] - 1;
        }
        let mut stride_y = vec![0usize; d];
        for &a in &ni {
            stride_y[a] = size;
            size *= n[a];
        }
        if size > MAX_TABLE {
            return Err(LabError::Shape(format!("kernel table of {size} entries exceeds the limit {MAX_TABLE}")));
        }
        let nkeys: usize = ni.iter().map(|&a| n[a]).product();
        let vol = bx.cell_volume();
        let q2 = shape.q() as i32 + 2;
        let (rn, rw) = spec.radial_nodes();
        let kernels = std::slice::from_ref(kernel);
        let sphere_omega: Vec<f64> = {
            let mut buf = Vec::new();
            let mut o = [0.0];
            (0..spec.sphere.len())
                .map(|s| {
                    omega_many(kernels, shape, spec.sphere.theta(s), &mut buf, &mut o);
                    o[0]
                })
                .collect()
        };
        let near_mean: f64 = rw.iter().sum::<f64>() * spec.sphere.weights.iter().zip(&sphere_omega).map(|(w, o)| w * o).sum::<f64>();

        let per_key: Vec<(Vec<(usize, f64)>, f64)> = (0..nkeys)
            .into_par_iter()
            .map(|key| {
                let mut yidx = [0i64; MAX_N + 1];
                let mut rem = key;
                for &a in &ni {
                    yidx[a] = (rem % n[a]) as i64;
                    rem /= n[a];
                }
                let y = point_from_index(bx, &yidx[..d]);
                let mut buf = Vec::new();
                let mut o = [0.0];
                let mut entries: Vec<(usize, f64)> = Vec::new();
                let ykey: usize = ni.iter().map(|&a| yidx[a] as usize * stride_y[a]).sum();
                let slot = |delta: &[i64]| -> Option<usize> {
                    let mut k = ykey;
                    for a in 0..d {
                        if delta[a].unsigned_abs() as usize >= n[a] {
                            return None;
                        }
                        if ni.contains(&a) {
                            let z = yidx[a] - delta[a];
                            if z < 0 || z >= n[a] as i64 {
                                return None;
                            }
                        }
                        k += (delta[a] + n[a] as i64 - 1) as usize * stride_d[a];
                    }
                    Some(k)
                };
                // far part over all index differences
                let mut delta = [0i64; MAX_N + 1];
                for a in 0..d {
                    delta[a] = -(n[a] as i64 - 1);
                }
                loop {
                    if let Some(k) = slot(&delta[..d]) {
                        let mut zi = [0i64; MAX_N + 1];
                        for a in 0..d {
                            zi[a] = yidx[a] - delta[a];
                        }
                        let z = point_from_index(bx, &zi[..d]);
                        let w = shape.relative(&y, &z);
                        if let Some((rho, th, jac)) = polar_j(shape, &w) {
                            if rho >= 0.5 * spec.rho_split {
                                omega_many(kernels, shape, &th[..d], &mut buf, &mut o);
                                let v = (1.0 - spec.psi(rho)) * o[0] * vol / (jac * rho.powi(q2));
                                if v != 0.0 {
                                    entries.push((k, v));
                                }
                            }
                        }
                    }
                    let mut a = 0;
                    loop {
                        if a == d {
                            break;
                        }
                        if delta[a] < n[a] as i64 - 1 {
                            delta[a] += 1;
                            break;
                        }
                        delta[a] = -(n[a] as i64 - 1);
                        a += 1;
                    }
                    if a == d {
                        break;
                    }
                }
                // near part through interpolation weights
                for (s, &om) in sphere_omega.iter().enumerate() {
                    let sw = spec.sphere.weights[s] * om;
                    if sw == 0.0 {
                        continue;
                    }
                    let th = spec.sphere.theta(s);
                    for (r, &cr) in rn.iter().zip(&rw) {
                        let w = shape.from_polar(*r, th);
                        let z = shape.compose(&y, &shape.invert(&w));
                        let (base, frac) = bx.interp_cell(&z);
                        for corner in 0..(1usize << d) {
                            let mut wt = cr * sw;
                            let mut del = [0i64; MAX_N + 1];
                            for a in 0..d {
                                let up = (corner >> a) & 1;
                                del[a] = yidx[a] - (base[a] + up as i64);
                                wt *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
                            }
                            if wt != 0.0 {
                                if let Some(k) = slot(&del[..d]) {
                                    entries.push((k, wt));
                                }
                            }
                        }
                    }
                }
                // extended-lattice shell sum
                let win = shell_window(shape, bx, &y, spec.subtract_radius);
                let mut defect = 0.0;
                let mut off = [0i64; MAX_N + 1];
                for a in 0..d {
                    off[a] = win[a].0;
                }
                loop {
                    let mut zi = [0i64; MAX_N + 1];
                    for a in 0..d {
                        zi[a] = yidx[a] + off[a];
                    }
                    let z = point_from_index(bx, &zi[..d]);
                    let w = shape.relative(&y, &z);
                    if let Some((rho, th, jac)) = polar_j(shape, &w) {
                        if rho >= 0.5 * spec.rho_split && rho <= spec.subtract_radius {
                            omega_many(kernels, shape, &th[..d], &mut buf, &mut o);
                            defect += (1.0 - spec.psi(rho)) * o[0] * vol / (jac * rho.powi(q2));
                        }
                    }
                    let mut a = 0;
                    loop {
                        if a == d {
                            break;
                        }
                        if off[a] < win[a].1 {
                            off[a] += 1;
                            break;
                        }
                        off[a] = win[a].0;
                        a += 1;
                    }
                    if a == d {
                        break;
                    }
                }
                (entries, defect)
            })
            .collect();

        let mut table = vec![0.0; size];
        let mut key_defect = vec![0.0; nkeys];
        for (key, (entries, defect)) in per_key.into_iter().enumerate() {
            for (k, v) in entries {
                table[k] += v;
            }
            key_defect[key] = defect;
        }
        let cells = bx.len();
        let mut ybase = Vec::with_capacity(cells);
        let mut zoff = Vec::with_capacity(cells);
        let mut s = Vec::with_capacity(cells);
        let mut defect = Vec::with_capacity(cells);
        for c in 0..cells {
            let idx = bx.multi_index(c);
            let mut yb = 0;
            let mut zo = 0;
            let mut key = 0;
            let mut mul = 1;
            for a in 0..d {
                yb += (idx[a] + n[a] - 1) * stride_d[a];
                zo += idx[a] * stride_d[a];
            }
            for &a in &ni {
                yb += idx[a] * stride_y[a];
                key += idx[a] * mul;
                mul *= n[a];
            }
            ybase.push(yb);
            zoff.push(zo);
            s.push(near_mean + key_defect[key]);
            defect.push(key_defect[key]);
        }
        Ok(DiscreteOperator { spec: spec.clone(), kernel: kernel.clone(), bx: bx.clone(), table, ybase, zoff, s, defect })
    }

    #[inline]
    pub fn weight(&self, y: usize, z: usize) -> f64 {
        self.table[self.ybase[y] - self.zoff[z]]
    }

    /// sum_{zeta in support} W(y, zeta) g(zeta) for each target y.
    pub fn raw_sum(&self, g: &[f64], support: &[usize], targets: &[usize]) -> Vec<f64> {
        targets
            .par_iter()
            .map(|&y| {
                let yb = self.ybase[y];
                support.iter().map(|&z| self.table[yb - self.zoff[z]] * g[z]).sum()
            })
            .collect()
    }

    /// T_h g at the targets for g supported in `support`.
    pub fn apply_at(&self, g: &[f64], support: &[usize], targets: &[usize]) -> Vec<f64> {
        let raw = self.raw_sum(g, support, targets);
        raw.into_iter().zip(targets).map(|(r, &y)| r - g[y] * self.s[y]).collect()
    }

    pub fn apply(&self, g: &GridField) -> GridField {
        let support: Vec<usize> = (0..g.len()).filter(|&c| g.values[c] != 0.0).collect();
        let targets: Vec<usize> = (0..g.len()).collect();
        let v = self.apply_at(&g.values, &support, &targets);
        GridField { bx: g.bx.clone(), values: v, name: format!("T[{}]", g.name) }
    }

    /// The cancellation defect at the cell nearest the box center.
    pub fn center_defect(&self) -> f64 {
        let d = self.bx.dim();
        let idx: Vec<usize> = (0..d).map(|a| self.bx.res[a] / 2).collect();
        self.defect[self.bx.flat_index(&idx)]
    }
}

/// On-the-fly engine for many kernels and fields at selected cells; agrees
/// with [`DiscreteOperator`] up to summation order. Returns
/// out[kernel][field][target].
pub fn apply_batch(spec: &SingularSpec, kernels: &[AngularKernel], fields: &[&GridField], targets: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let nk = kernels.len();
    let nf = fields.len();
    if nk == 0 || nf == 0 {
        return vec![vec![Vec::new(); nf]; nk];
    }
    let bx = &fields[0].bx;
    let shape = &spec.shape;
    let d = bx.dim();
    let vol = bx.cell_volume();
    let q2 = shape.q() as i32 + 2;
    let (rn, rw) = spec.radial_nodes();
    let ns = spec.sphere.len();
    let sphere_omega: Vec<Vec<f64>> = {
        let mut buf = Vec::new();
        (0..ns)
            .map(|s| {
                let mut o = vec![0.0; nk];
                omega_many(kernels, shape, spec.sphere.theta(s), &mut buf, &mut o);
                o
            })
            .collect()
    };
    let rsum: f64 = rw.iter().sum();
    let near_mean: Vec<f64> = (0..nk).map(|k| rsum * (0..ns).map(|s| spec.sphere.weights[s] * sphere_omega[s][k]).sum::<f64>()).collect();
    let supports: Vec<usize> = (0..bx.len()).filter(|&c| fields.iter().any(|f| f.values[c] != 0.0)).collect();

    let per_target: Vec<Vec<f64>> = targets
        .par_iter()
        .map(|&yc| {
            let y = bx.center(yc);
            let mut acc = vec![0.0; nk * nf];
            let mut buf = Vec::new();
            let mut om = vec![0.0; nk];
            for &z in &supports {
                if z == yc {
                    continue;
                }
                let w = shape.relative(&y, &bx.center(z));
                let Some((rho, th, jac)) = polar_j(shape, &w) else { continue };
                if rho < 0.5 * spec.rho_split {
                    continue;
                }
                let c = (1.0 - spec.psi(rho)) * vol / (jac * rho.powi(q2));
                if c == 0.0 {
                    continue;
                }
                omega_many(kernels, shape, &th[..d], &mut buf, &mut om);
                for f in 0..nf {
                    let g = fields[f].values[z];
                    if g != 0.0 {
                        for k in 0..nk {
                            acc[k * nf + f] += c * om[k] * g;
                        }
                    }
                }
            }
            // extended-lattice shell sum
            let yidx = bx.multi_index(yc);
            let win = shell_window(shape, bx, &y, spec.subtract_radius);
            let mut defect = vec![0.0; nk];
            let mut off = [0i64; MAX_N + 1];
            for a in 0..d {
                off[a] = win[a].0;
            }
            loop {
                let mut zi = [0i64; MAX_N + 1];
                for a in 0..d {
                    zi[a] = yidx[a] as i64 + off[a];
                }
                let w = shape.relative(&y, &point_from_index(bx, &zi[..d]));
                if let Some((rho, th, jac)) = polar_j(shape, &w) {
                    if rho >= 0.5 * spec.rho_split && rho <= spec.subtract_radius {
                        omega_many(kernels, shape, &th[..d], &mut buf, &mut om);
                        let c = (1.0 - spec.psi(rho)) * vol / (jac * rho.powi(q2));
                        for k in 0..nk {
                            defect[k] += c * om[k];
                        }
                    }
                }
                let mut a = 0;
                loop {
                    if a == d {
                        break;
                    }
                    if off[a] < win[a].1 {
                        off[a] += 1;
                        break;
                    }
                    off[a] = win[a].0;
                    a += 1;
                }
                if a == d {
                    break;
                }
            }
            // near part
            let mut a_s = vec![0.0; nf];
            for s in 0..ns {
                let th = spec.sphere.theta(s);
                a_s.iter_mut().for_each(|v| *v = 0.0);
                for (r, &cr) in rn.iter().zip(&rw) {
                    let w = shape.from_polar(*r, th);
                    let z = shape.compose(&y, &shape.invert(&w));
                    for f in 0..nf {
                        a_s[f] += cr * fields[f].interpolate(&z);
                    }
                }
                for k in 0..nk {
                    let sw = spec.sphere.weights[s] * sphere_omega[s][k];
                    for f in 0..nf {
                        acc[k * nf + f] += sw * a_s[f];
                    }
                }
            }
            for k in 0..nk {
                for f in 0..nf {
                    acc[k * nf + f] -= fields[f].values[yc] * (defect[k] + near_mean[k]);
                }
            }
            acc
        })
        .collect();
    let mut out = vec![vec![vec![0.0; targets.len()]; nf]; nk];
    for (t, acc) in per_target.iter().enumerate() {
        for k in 0..nk {
            for f in 0..nf {
                out[k][f][t] = acc[k * nf + f];
            }
        }
    }
    out
}

/// T f on the whole lattice, through the table engine when it fits.
pub fn apply_t(spec: &SingularSpec, kernel: &AngularKernel, f: &GridField) -> Result<GridField> {
    match DiscreteOperator::build(spec, kernel, &f.bx) {
        Ok(op) => Ok(op.apply(f)),
        Err(LabError::Shape(_)) => {
            let targets: Vec<usize> = (0..f.len()).collect();
            let v = apply_batch(spec, std::slice::from_ref(kernel), &[f], &targets);
            Ok(GridField { bx: f.bx.clone(), values: v[0][0].clone(), name: format!("T[{}]", f.name) })
        }
        Err(e) => Err(e),
    }
}

/// [a, T] f = T(a f) - a T(f).
pub fn apply_commutator(op: &DiscreteOperator, a: &GridField, f: &GridField) -> GridField {
    let af = a.zip(f, |x, y| x * y, "af");
    let t_af = op.apply(&af);
    let t_f = op.apply(f);
    let mut out = t_af.zip(&t_f, |p, q| p - q, "commutator");
    for (o, (x, q)) in out.values.iter_mut().zip(a.values.iter().zip(&t_f.values)) {
        *o = *o + q - x * q;
    }
    out
}

/// ||T f||_2 / ||f||_2.
pub fn l2_ratio(op: &DiscreteOperator, f: &GridField) -> f64 {
    let tf = op.apply(f);
    let nf = crate::discretization::integrate(f, None, Some(2.0));
    if nf == 0.0 {
        0.0
    } else {
        crate::discretization::integrate(&tf, None, Some(2.0)) / nf
    }
}

/// sup over lambda of lambda |{|g| > lambda}| / ||f||_1.
pub fn weak_ratio(g: &GridField, f: &GridField) -> f64 {
    let l1 = crate::discretization::integrate(&f.abs(), None, None);
    crate::stats::weak_type_ratio(&g.values, g.bx.cell_volume(), l1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakProbe {
    pub ratios: Vec<f64>,
    pub max: f64,
}

pub fn weak_l1_probe(op: &DiscreteOperator, corpus: &[GridField]) -> WeakProbe {
    let ratios: Vec<f64> = corpus.iter().map(|f| weak_ratio(&op.apply(f), f)).collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    WeakProbe { ratios, max }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsStudy {
    pub eps: Vec<f64>,
    /// max over targets of |T_eps f - T_{eps_prev} f|
    pub differences: Vec<f64>,
}

/// Outputs at the targets for a decreasing sequence of inner cutoffs.
pub fn eps_study(spec: &SingularSpec, kernel: &AngularKernel, f: &GridField, targets: &[usize], eps: &[f64]) -> EpsStudy {
    let mut prev: Option<Vec<f64>> = None;
    let mut differences = Vec::new();
    for &e in eps {
        let v = apply_batch(&spec.with_eps(e), std::slice::from_ref(kernel), &[f], targets).remove(0).remove(0);
        if let Some(p) = &prev {
            differences.push(p.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        prev = Some(v);
    }
    EpsStudy { eps: eps.to_vec(), differences }
}

/// Precomputed balls, dilated balls and sampled points for M#_{T,s}.
#[derive(Clone, Debug)]
pub struct GrandMaximalPlan {
    pub s: f64,
    pub balls: Vec<Vec<u32>>,
    /// membership bitsets of the dilated balls sB
    pub dilated: Vec<Vec<u64>>,
    pub points: Vec<Vec<u32>>,
    /// balls containing each cell
    pub cell_balls: Vec<Vec<u32>>,
}

#[inline]
fn bit(set: &[u64], c: usize) -> bool {
    set[c >> 6] >> (c & 63) & 1 == 1
}

impl GrandMaximalPlan {
    pub fn new(geom: &CellGeometry, catalog: &BallCatalog, s: f64, pairs: usize, seed: u64) -> Self {
        use rand::seq::index::sample;
        assert!(s > 1.0, "dilation factor must exceed 1");
        let mut k = 2;
        while k * (k - 1) / 2 < pairs {
            k += 1;
        }
        let words = geom.len().div_ceil(64);
        let dilated: Vec<Vec<u64>> = (0..catalog.len())
            .into_par_iter()
            .map(|b| {
                let c = catalog.centers[b];
                let mut set = vec![0u64; words];
                for x in geom.ball(&geom.points[c], s * catalog.radii[b]) {
                    set[x >> 6] |= 1 << (x & 63);
                }
                set
            })
            .collect();
        let mut rng = seeded_rng(seed);
        let points = catalog
            .balls
            .iter()
            .map(|b| {
                if b.len() <= k {
                    b.clone()
                } else {
                    let mut p: Vec<u32> = sample(&mut rng, b.len(), k).into_iter().map(|i| b[i]).collect();
                    p.sort_unstable();
                    p
                }
            })
            .collect();
        let mut cell_balls = vec![Vec::new(); geom.len()];
        for (i, b) in catalog.balls.iter().enumerate() {
            for &c in b {
                cell_balls[c as usize].push(i as u32);
            }
        }
        GrandMaximalPlan { s, balls: catalog.balls.clone(), dilated, points, cell_balls }
    }

    pub fn in_dilated(&self, ball: usize, cell: usize) -> bool {
        bit(&self.dilated[ball], cell)
    }
}

/// M#_{T,s} g at the targets (all cells when None): over catalog balls B
/// containing the cell, the largest sampled oscillation of
/// T(g chi_{complement of sB}) on B.
pub fn grand_maximal(op: &DiscreteOperator, plan: &GrandMaximalPlan, g: &GridField, targets: Option<&[usize]>) -> GridField {
    let n = g.len();
    let all: Vec<usize>;
    let targets = match targets {
        Some(t) => t,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    let support: Vec<usize> = (0..n).filter(|&c| g.values[c] != 0.0).collect();
    let mut out = GridField::zeros(&g.bx, "M_sharp");
    if support.is_empty() {
        return out;
    }
    let mut need = vec![false; plan.balls.len()];
    for &t in targets {
        for &b in &plan.cell_balls[t] {
            need[b as usize] = true;
        }
    }
    let ball_ids: Vec<usize> = (0..plan.balls.len()).filter(|&b| need[b]).collect();
    let osc: Vec<(usize, f64)> = ball_ids
        .par_iter()
        .map(|&b| {
            let dil = &plan.dilated[b];
            let outside: Vec<usize> = support.iter().cloned().filter(|&c| !bit(dil, c)).collect();
            if outside.is_empty() {
                return (b, 0.0);
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &y in &plan.points[b] {
                let yb = op.ybase[y as usize];
                let v: f64 = outside.iter().map(|&z| op.table[yb - op.zoff[z]] * g.values[z]).sum();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (b, hi - lo)
        })
        .collect();
    let mut ball_osc = vec![0.0; plan.balls.len()];
    for (b, o) in osc {
        ball_osc[b] = o;
    }
    for &t in targets {
        out.values[t] = plan.cell_balls[t].iter().map(|&b| ball_osc[b as usize]).fold(0.0, f64::max);
    }
    out
}

/// sup over the sphere of |Omega / J|, the constant bounding |K| |z|^{Q+2}.
pub fn kernel_constant(kernel: &AngularKernel, shape: &OperatorShape) -> f64 {
    let rule = match shape.n() {
        1 => SphereRule::circle(2048),
        _ => SphereRule::product(96, 192),
    };
    let mut buf = Vec::new();
    let mut o = [0.0];
    let mut sup = 0.0f64;
    for s in 0..rule.len() {
        let th = rule.theta(s);
        omega_many(std::slice::from_ref(kernel), shape, th, &mut buf, &mut o);
        sup = sup.max((o[0] / shape.polar_jacobian(th)).abs());
    }
    sup
}

/// Kernel value K(w) = Omega / (J rho^{Q+2}).
pub fn kernel_value(kernel: &AngularKernel, shape: &OperatorShape, w: &Point) -> Result<f64> {
    let (rho, th, jac) = polar_j(shape, w).ok_or(LabError::Pole)?;
    let mut buf = Vec::new();
    let mut o = [0.0];
    omega_many(std::slice::from_ref(kernel), shape, &th[..=shape.n()], &mut buf, &mut o);
    Ok(o[0] / (jac * rho.powi(shape.q() as i32 + 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{sample, TestFunction};

    fn setup(shape: &OperatorShape, n: usize) -> (LatticeBox, SingularSpec) {
        let bx = LatticeBox::desk(shape, 2.0, 4.0, n);
        let spec = SingularSpec::for_lattice(shape, &bx, 2, 4.0);
        (bx, spec)
    }

    #[test]
    fn engines_agree() {
        for (sh, n) in [(OperatorShape::parabolic(), 16), (OperatorShape::kolmogorov(), 8)] {
            let (bx, spec) = setup(&sh, n);
            let mut c = Point::origin();
            c.t = 2.0;
            let u = TestFunction::bump(&sh, c, 1.5);
            let f = sample(|p| u.value(p, sh.n()), &bx, "u");
            let ker = AngularKernel::Harmonic(SphericalBasis::new(sh.n(), 2, 1));
            let op = DiscreteOperator::build(&spec, &ker, &bx).unwrap();
            let tf = op.apply(&f);
            let targets: Vec<usize> = (0..bx.len()).step_by(7).collect();
            let b = apply_batch(&spec, &[ker], &[&f], &targets);
            for (i, &t) in targets.iter().enumerate() {
                assert!((tf.values[t] - b[0][0][i]).abs() < 1e-9 * (1.0 + tf.sup_abs()), "{} {} {}", sh.name(), tf.values[t], b[0][0][i]);
            }
        }
    }

    #[test]
    fn zero_and_linearity() {
        let sh = OperatorShape::parabolic();
        let (bx, spec) = setup(&sh, 16);
        let ker = AngularKernel::Harmonic(SphericalBasis::new(1, 1, 2));
        let op = DiscreteOperator::build(&spec, &ker, &bx).unwrap();
        assert!(op.apply(&GridField::zeros(&bx, "0")).sup_abs() == 0.0);
        let f = sample(|p| (p.x[0] * 2.0).sin() * p.t, &bx, "f");
        let g = sample(|p| p.x[0] * p.x[0] - p.t, &bx, "g");
        let lhs = op.apply(&f.zip(&g, |a, b| 2.0 * a - 3.0 * b, "h"));
        let (tf, tg) = (op.apply(&f), op.apply(&g));
        for k in 0..bx.len() {
            assert!((lhs.values[k] - (2.0 * tf.values[k] - 3.0 * tg.values[k])).abs() < 1e-10);
        }
    }

    #[test]
    fn commutator_with_constant_vanishes() {
        let sh = OperatorShape::parabolic();
        let (bx, spec) = setup(&sh, 12);
        let ker = AngularKernel::Harmonic(SphericalBasis::new(1, 2, 1));
        let op = DiscreteOperator::build(&spec, &ker, &bx).unwrap();
        let f = sample(|p| (p.x[0] + p.t).cos(), &bx, "f");
        let a = GridField::constant(&bx, 2.5, "a");
        assert!(apply_commutator(&op, &a, &f).sup_abs() < 1e-12);
    }
}

//! End-to-end experiments: the Hessian representation formula, the weighted
//! sweeps behind the sharp weighted estimate, the commutator delta-sweep and
//! the Sobolev-type estimates in Orlicz and variable weighted spaces.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{apply_l, sample, sample_hessian, y_of_jet, CoefficientField, GridField, LatticeBox, TestFunction};
use crate::dyadic::GridFamily;
use crate::error::{LabError, Result};
use crate::function_spaces::{ap_characteristic, bmo_norms, CubeFamily, Space, Weight};
use crate::geometry::{OperatorShape, Point};
use crate::harmonics::{expand_coeffs, SphericalBasis};
use crate::kernels::{alpha_coeff, FrozenCoefficients, FundamentalSolution};
use crate::operators::{apply_batch, AngularKernel, SingularSpec};
use crate::sparse::{apply_sparse, build_sparse_family, principal_family, sparse_operator_norm, Mode, SparseKind, SparseSetup};
use crate::stats::loglog_slope;

/// Near/far split used by every representation run, in homogeneous cell sizes.
pub const SPLIT: f64 = 4.0;

/// A(z) = (1 + delta sin(2 x_1) cos(t)) I, elliptic with lambda = 1/(1 - delta).
pub fn oscillating_coefficients(shape: &OperatorShape, bx: &LatticeBox, delta: f64) -> Result<CoefficientField> {
    if !(0.0..1.0).contains(&delta) {
        return Err(LabError::Domain(format!("delta must lie in [0, 1), got {delta}")));
    }
    let s0 = shape.s0();
    CoefficientField::from_fn(bx, s0, 1.0 / (1.0 - delta), |p| {
        let a = 1.0 + delta * (2.0 * p.x[0]).sin() * p.t.cos();
        (0..s0 * s0).map(|k| if k % (s0 + 1) == 0 { a } else { 0.0 }).collect()
    })
}

/// Identity diffusion on the lattice.
pub fn identity_coefficients(shape: &OperatorShape, bx: &LatticeBox) -> Result<CoefficientField> {
    let s0 = shape.s0();
    let a: Vec<f64> = (0..s0 * s0).map(|k| if k % (s0 + 1) == 0 { 1.0 } else { 0.0 }).collect();
    CoefficientField::constant(bx, &a, s0, 1.0)
}

/// Smooth test functions supported in the interior of the box and in t > 0.
pub fn u_corpus(shape: &OperatorShape, bx: &LatticeBox) -> Vec<TestFunction> {
    let d = bx.dim();
    let mid: Vec<f64> = (0..d).map(|a| 0.5 * (bx.lower[a] + bx.upper[a])).collect();
    let span: Vec<f64> = (0..d).map(|a| bx.upper[a] - bx.lower[a]).collect();
    let make = |shift: f64, frac: f64, amp: f64| {
        let n = shape.n();
        let mut c = Point::origin();
        for a in 0..n {
            c.x[a] = mid[a] + shift * span[a];
        }
        c.t = mid[d - 1] - 0.5 * shift * span[d - 1];
        let radii: Vec<f64> = span.iter().map(|s| frac * s).collect();
        TestFunction::Bump { center: c, radii, amp }
    };
    vec![
        make(0.0, 0.375, 1.0),
        make(0.08, 0.25, 1.0),
        TestFunction::Sum(vec![(1.0, make(-0.1, 0.2, 1.0)), (-0.7, make(0.1, 0.2, 1.0))]),
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub shape: String,
    pub m_max: usize,
    pub i: usize,
    pub j: usize,
    pub cells: usize,
    pub evaluated: usize,
    pub constant_coefficients: bool,
    /// ||rhs - u_ij||_2 / ||u_ij||_2 on the evaluation set (0 when both vanish)
    pub rel_l2_error: f64,
    pub max_abs_error: f64,
}

fn is_constant(coeff: &CoefficientField) -> bool {
    coeff.entries.iter().all(|a| a == &coeff.entries[0])
}

fn frozen_at(coeff: &CoefficientField, k: usize) -> Result<FrozenCoefficients> {
    let s0 = coeff.s0;
    FrozenCoefficients::new(coeff.bx.center(k), DMatrix::from_row_slice(s0, s0, &coeff.entries[k]), coeff.lambda)
}

fn error_report(shape: &OperatorShape, coeff: &CoefficientField, m_max: usize, i: usize, j: usize, targets: &[usize], rhs: &[f64], exact: &GridField) -> RepresentationReport {
    let (mut e2, mut n2, mut emax) = (0.0, 0.0, 0.0f64);
    for (r, &t) in rhs.iter().zip(targets) {
        let e = r - exact.values[t];
        e2 += e * e;
        n2 += exact.values[t] * exact.values[t];
        emax = emax.max(e.abs());
    }
    RepresentationReport {
        shape: shape.name(),
        m_max,
        i,
        j,
        cells: coeff.bx.len(),
        evaluated: targets.len(),
        constant_coefficients: is_constant(coeff),
        rel_l2_error: if n2 > 0.0 { (e2 / n2).sqrt() } else if e2 > 0.0 { f64::INFINITY } else { 0.0 },
        max_abs_error: emax,
    }
}

/// Evaluation set: every `stride`-th cell.
pub fn evaluation_set(bx: &LatticeBox, stride: usize) -> Vec<usize> {
    (0..bx.len()).step_by(stride.max(1)).collect()
}

/// u_ij = -sum c^{km} T_km(L u) + sum c^{km} [a_hk, T_km](u_hk) - alpha_ij L u
/// on the evaluation set, with the kernel frozen at each evaluation point.
/// For constant A the commutators vanish and the truncated series is applied
/// as a single kernel; one report per entry of `m_list`.
pub fn hessian_via_representation(
    shape: &OperatorShape,
    coeff: &CoefficientField,
    u: &TestFunction,
    m_list: &[usize],
    i: usize,
    j: usize,
    targets: &[usize],
) -> Result<Vec<(GridField, RepresentationReport)>> {
    let bx = &coeff.bx;
    if i >= shape.s0() || j >= shape.s0() {
        return Err(LabError::Shape("representation indices must lie in the diffusive block".into()));
    }
    let (lu, _) = apply_l(shape, coeff, u)?;
    let exact = sample_hessian(shape, u, bx, i, j);
    let m_top = m_list.iter().cloned().max().unwrap_or(0);
    let to_field = |rhs: &[f64], m: usize| {
        let mut g = GridField::zeros(bx, &format!("rep_u{}{}_m{m}", i + 1, j + 1));
        for (v, &t) in rhs.iter().zip(targets) {
            g.values[t] = *v;
        }
        g
    };
    if is_constant(coeff) {
        let fs = FundamentalSolution::new(shape, &frozen_at(coeff, 0)?);
        let alpha = alpha_coeff(&fs, i, j);
        let exp = expand_coeffs(&fs, i, j, m_top)?;
        let kernels: Vec<AngularKernel> = m_list.iter().map(|&m| AngularKernel::from_expansion(&exp, m)).collect();
        let spec = SingularSpec::for_kernels(shape, bx, &kernels, SPLIT);
        let out = apply_batch(&spec, &kernels, &[&lu], targets);
        return Ok(m_list
            .iter()
            .zip(&out)
            .map(|(&m, o)| {
                let rhs: Vec<f64> = o[0].iter().zip(targets).map(|(t, &k)| -t - alpha * lu.values[k]).collect();
                (to_field(&rhs, m), error_report(shape, coeff, m, i, j, targets, &rhs, &exact))
            })
            .collect());
    }
    // variable coefficients: every basis kernel applied to L u, u_hk and a_hk u_hk
    let s0 = shape.s0();
    let basis: Vec<SphericalBasis> = SphericalBasis::all(shape.n(), m_top).into_iter().filter(|b| b.m >= 1).collect();
    let kernels: Vec<AngularKernel> = basis.iter().map(|b| AngularKernel::Harmonic(*b)).collect();
    let mut pairs = Vec::new();
    let mut fields = vec![lu.clone()];
    for h in 0..s0 {
        for k in h..s0 {
            let uhk = sample_hessian(shape, u, bx, h, k);
            let a = coeff.entry_field(h, k);
            fields.push(a.zip(&uhk, |x, y| x * y, "a_u"));
            fields.push(uhk);
            pairs.push((h, k));
        }
    }
    let refs: Vec<&GridField> = fields.iter().collect();
    let spec = SingularSpec::for_kernels(shape, bx, &kernels, SPLIT);
    let out = apply_batch(&spec, &kernels, &refs, targets);
    let per_target: Vec<Result<Vec<f64>>> = targets
        .par_iter()
        .enumerate()
        .map(|(t, &cell)| {
            let fs = FundamentalSolution::new(shape, &frozen_at(coeff, cell)?);
            let alpha = alpha_coeff(&fs, i, j);
            let exp = expand_coeffs(&fs, i, j, m_top)?;
            let a = &coeff.entries[cell];
            Ok(m_list
                .iter()
                .map(|&m| {
                    let mut v = -alpha * lu.values[cell];
                    for (kb, b) in basis.iter().enumerate() {
                        if b.m > m {
                            continue;
                        }
                        let c = exp.coeffs[b.m][b.k - 1];
                        let o = &out[kb];
                        let mut term = -o[0][t];
                        for (q, &(h, k)) in pairs.iter().enumerate() {
                            let mult = if h == k { 1.0 } else { 2.0 };
                            term += mult * (o[1 + 2 * q][t] - a[h * s0 + k] * o[2 + 2 * q][t]);
                        }
                        v += c * term;
                    }
                    v
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(targets.len());
    for r in per_target {
        rows.push(r?);
    }
    Ok(m_list
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let rhs: Vec<f64> = rows.iter().map(|r| r[mi]).collect();
            (to_field(&rhs, m), error_report(shape, coeff, m, i, j, targets, &rhs, &exact))
        })
        .collect())
}

/// max over cells of |Y u - (L u - sum a_ij u_{x_i x_j})|.
pub fn y_identity_defect(shape: &OperatorShape, coeff: &CoefficientField, u: &TestFunction) -> Result<f64> {
    let (lu, _) = apply_l(shape, coeff, u)?;
    let n = shape.n();
    let s0 = coeff.s0;
    let mut worst = 0.0f64;
    for k in 0..coeff.bx.len() {
        let p = coeff.bx.center(k);
        let jet = u.jet(&p, n);
        let mut rhs = lu.values[k];
        for a in 0..s0 {
            for b in 0..s0 {
                rhs -= coeff.entries[k][a * s0 + b] * jet.dxx[a][b];
            }
        }
        worst = worst.max((y_of_jet(shape, &p, &jet) - rhs).abs() / (1.0 + lu.values[k].abs()));
    }
    Ok(worst)
}

/// Cells at least `margin` cells away from every face: the inner box.
pub fn inner_cells(bx: &LatticeBox, margin: usize) -> Vec<usize> {
    let d = bx.dim();
    (0..bx.len())
        .filter(|&k| {
            let idx = bx.multi_index(k);
            (0..d).all(|a| idx[a] >= margin && idx[a] + margin < bx.res[a])
        })
        .collect()
}

fn masked(f: &GridField, cells: &[usize]) -> GridField {
    let mut g = GridField::zeros(&f.bx, &f.name);
    for &c in cells {
        g.values[c] = f.values[c];
    }
    g
}

/// Fields entering the Sobolev-type norm: u, u_{x_i}, u_{x_i x_j} (i, j < s0) and Y u.
pub fn sobolev_parts(shape: &OperatorShape, u: &TestFunction, bx: &LatticeBox) -> Vec<GridField> {
    let n = shape.n();
    let s0 = shape.s0();
    let mut out = vec![sample(|p| u.value(p, n), bx, "u")];
    for i in 0..s0 {
        out.push(sample(|p| u.jet(p, n).dx[i], bx, &format!("u_x{}", i + 1)));
    }
    for i in 0..s0 {
        for j in 0..s0 {
            out.push(sample_hessian(shape, u, bx, i, j));
        }
    }
    out.push(sample(|p| y_of_jet(shape, p, &u.jet(p, n)), bx, "Yu"));
    out
}

/// Sum of the norms of the Sobolev parts restricted to `inner`.
pub fn sobolev_norm(space: &Space, parts: &[GridField], inner: &[usize]) -> Result<f64> {
    let mut s = 0.0;
    for f in parts {
        s += space.norm(&masked(f, inner))?;
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceEstimate {
    pub space: String,
    /// LHS / RHS per test function; None when the RHS vanishes
    pub ratios: Vec<Option<f64>>,
    pub sup: f64,
    pub finite: bool,
}

/// ||u||_{S^X(Omega')} / (||L u||_X + ||u||_X) over the corpus, Omega' the
/// inner box with the given margin.
pub fn generalized_space_estimate(shape: &OperatorShape, space: &Space, coeff: &CoefficientField, corpus: &[TestFunction], margin: usize) -> Result<SpaceEstimate> {
    let bx = &coeff.bx;
    let inner = inner_cells(bx, margin);
    let mut ratios = Vec::with_capacity(corpus.len());
    for u in corpus {
        let (lu, _) = apply_l(shape, coeff, u)?;
        let uf = sample(|p| u.value(p, shape.n()), bx, "u");
        let rhs = space.norm(&lu)? + space.norm(&uf)?;
        if rhs == 0.0 {
            ratios.push(None);
            continue;
        }
        let lhs = sobolev_norm(space, &sobolev_parts(shape, u, bx), &inner)?;
        ratios.push(Some(lhs / rhs));
    }
    let sup = ratios.iter().flatten().cloned().fold(0.0, f64::max);
    Ok(SpaceEstimate { space: space.name(), finite: ratios.iter().flatten().all(|r| r.is_finite()), ratios, sup })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightPoint {
    pub gamma: f64,
    pub ap: f64,
    /// max over the corpus of ||A f||_{L^p(w)} / ||f||_{L^p(w)}
    pub sparse_ratio: f64,
    /// max over the same families of the L^p(w) operator norm
    pub sparse_norm: f64,
    /// sum ||u_ij||_{L^p(Omega', w)} / (||L u|| + ||u||), max over the u corpus
    pub pde_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedSweep {
    pub shape: String,
    pub p: f64,
    pub target: f64,
    pub points: Vec<WeightPoint>,
    pub sparse_exponent: f64,
    pub norm_exponent: f64,
    pub pde_exponent: f64,
    /// PDE ratio at w = 1
    pub kappa: f64,
    /// sparse_exponent <= target + 0.25
    pub within_bound: bool,
}

pub struct SweepInput<'a> {
    pub shape: &'a OperatorShape,
    pub family: &'a GridFamily,
    pub cubes: &'a CubeFamily,
    pub coeff: &'a CoefficientField,
    pub corpus: &'a [GridField],
    pub u_corpus: &'a [TestFunction],
    /// singular point of the power weights
    pub z0: Point,
    /// distances to criticality of the power exponents
    pub eps: Vec<f64>,
    pub margin: usize,
}

/// Power weights d(z, z0)^gamma approaching both ends of the A_p range,
/// -(Q+2) < gamma < (Q+2)(p-1), plus the anchor w = 1.
pub fn sweep_exponents(shape: &OperatorShape, p: f64, eps: &[f64]) -> Vec<f64> {
    let q2 = shape.q() as f64 + 2.0;
    let mut g = vec![0.0];
    for e in eps {
        g.push(q2 * (p - 1.0) * (1.0 - e));
        g.push(-q2 * (1.0 - e));
    }
    g
}

/// sum_{i,j} ||u_ij||_{L^p(Omega', w)} / (||L u||_{L^p(w)} + ||u||_{L^p(w)}),
/// max over the corpus, one value per weight.
pub fn weighted_pde_ratios(shape: &OperatorShape, coeff: &CoefficientField, corpus: &[TestFunction], weights: &[Weight], p: f64, margin: usize) -> Result<Vec<f64>> {
    let bx = &coeff.bx;
    let inner = inner_cells(bx, margin);
    let s0 = shape.s0();
    let mut data = Vec::new();
    for u in corpus {
        let (lu, _) = apply_l(shape, coeff, u)?;
        let uf = sample(|q| u.value(q, shape.n()), bx, "u");
        let mut hess = Vec::new();
        for i in 0..s0 {
            for j in 0..s0 {
                hess.push(masked(&sample_hessian(shape, u, bx, i, j), &inner));
            }
        }
        data.push((lu, uf, hess));
    }
    let mut out = Vec::with_capacity(weights.len());
    for w in weights {
        let space = Space::Weighted { p, w: Some(w.w.values.clone()) };
        let mut best = 0.0f64;
        for (lu, uf, hess) in &data {
            let rhs = space.norm(lu)? + space.norm(uf)?;
            if rhs > 0.0 {
                let mut lhs = 0.0;
                for h in hess {
                    lhs += space.norm(h)?;
                }
                best = best.max(lhs / rhs);
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Both weighted sub-experiments over the power-weight family.
pub fn weighted_hessian_sweep(input: &SweepInput, p: f64) -> Result<WeightedSweep> {
    let shape = input.shape;
    let bx = &input.family.geom.bx;
    let grid = &input.family.grids[0];
    let zc = bx.locate(&input.z0).ok_or_else(|| LabError::Domain("weight singularity outside the box".into()))?;
    let gammas = sweep_exponents(shape, p, &input.eps);
    let weights = gammas.iter().map(|&g| Weight::power(&input.family.geom, &input.z0, g)).collect::<Result<Vec<_>>>()?;
    let pde = weighted_pde_ratios(shape, input.coeff, input.u_corpus, &weights, p, input.margin)?;
    let mut points = Vec::new();
    for ((&gamma, w), pde_ratio) in gammas.iter().zip(&weights).zip(pde) {
        let ap = ap_characteristic(w, p, input.cubes);
        let sigma = w.dual(p);
        let mut fields: Vec<GridField> = input.corpus.to_vec();
        for k in 0..grid.n_levels() {
            if let Some(q) = grid.levels[k].cells.iter().position(|c| c.contains(&zc)) {
                let mut f = GridField::zeros(bx, "sigma_chi");
                for &c in &grid.levels[k].cells[q] {
                    f.values[c] = sigma.w.values[c];
                }
                fields.push(f);
            }
        }
        let space = Space::Weighted { p, w: Some(w.w.values.clone()) };
        let rows: Vec<Result<(f64, f64)>> = fields
            .par_iter()
            .map(|f| {
                let nf = space.norm(f)?;
                if nf == 0.0 {
                    return Ok((0.0, 0.0));
                }
                let fam = principal_family(grid, 0, 0, f, 2.0);
                let af = apply_sparse(&fam, f, SparseKind::Plain, None, false)?;
                Ok((space.norm(&af)? / nf, sparse_operator_norm(&fam, &w.w.values, p, 200)))
            })
            .collect();
        let (mut sparse_ratio, mut sparse_norm) = (0.0f64, 0.0f64);
        for r in rows {
            let (a, b) = r?;
            sparse_ratio = sparse_ratio.max(a);
            sparse_norm = sparse_norm.max(b);
        }
        points.push(WeightPoint { gamma, ap, sparse_ratio, sparse_norm, pde_ratio });
    }
    let ap: Vec<f64> = points.iter().map(|q| q.ap).collect();
    let col = |f: fn(&WeightPoint) -> f64| points.iter().map(f).collect::<Vec<f64>>();
    let sparse_exponent = loglog_slope(&ap, &col(|q| q.sparse_ratio));
    let target = (1.0 / (p - 1.0)).max(1.0);
    Ok(WeightedSweep {
        shape: shape.name(),
        p,
        target,
        norm_exponent: loglog_slope(&ap, &col(|q| q.sparse_norm)),
        pde_exponent: loglog_slope(&ap, &col(|q| q.pde_ratio)),
        kappa: points[0].pde_ratio,
        within_bound: sparse_exponent <= target + 0.25,
        sparse_exponent,
        points,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorSweep {
    pub deltas: Vec<f64>,
    /// delta_K-BMO norm of b = 1 + delta b0
    pub bmo: Vec<f64>,
    /// ||A^b f + A^{b,*} f||_{L^p(w)} / ||f||_{L^p(w)} on the commutator family
    pub sparse_bound: Vec<f64>,
    pub slope: f64,
}

/// Sparse commutator bound for b = 1 + delta b0 against the delta_K-BMO norm.
pub fn commutator_delta_sweep(setup: &SparseSetup, b0: &GridField, f: &GridField, deltas: &[f64], cubes: &CubeFamily, k_cut: f64, p: f64, w: Option<&Weight>) -> Result<CommutatorSweep> {
    let space = Space::Weighted { p, w: w.map(|w| w.w.values.clone()) };
    let nf = space.norm(f)?;
    if nf == 0.0 {
        return Err(LabError::Domain("commutator sweep needs a nonzero f".into()));
    }
    let mut bmo = Vec::new();
    let mut sparse_bound = Vec::new();
    for &delta in deltas {
        let b = b0.map(|v| 1.0 + delta * v, "b");
        bmo.push(bmo_norms(&b, cubes, k_cut).delta_k);
        let fam = build_sparse_family(setup, 0, 0, 0, f, Mode::Commutator, Some(&b))?;
        let osc = apply_sparse(&fam, f, SparseKind::Osc, Some(&b), true)?;
        let adj = apply_sparse(&fam, f, SparseKind::OscAdjoint, Some(&b), true)?;
        sparse_bound.push(space.norm(&osc.zip(&adj, |a, c| a + c, "bound"))? / nf);
    }
    Ok(CommutatorSweep { slope: loglog_slope(&bmo, &sparse_bound), deltas: deltas.to_vec(), bmo, sparse_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(shape: &OperatorShape, n: usize) -> LatticeBox {
        LatticeBox::desk(shape, 2.0, 4.0, n)
    }

    #[test]
    fn zero_function_gives_zero_rhs() {
        let sh = OperatorShape::parabolic();
        let bx = desk(&sh, 16);
        let coeff = identity_coefficients(&sh, &bx).unwrap();
        let u = TestFunction::Sum(vec![]);
        let targets = evaluation_set(&bx, 5);
        let rows = hessian_via_representation(&sh, &coeff, &u, &[2], 0, 0, &targets).unwrap();
        assert_eq!(rows[0].0.sup_abs(), 0.0);
        assert_eq!(rows[0].1.rel_l2_error, 0.0);
    }

    #[test]
    fn constant_coefficient_representation_converges_in_m() {
        let sh = OperatorShape::parabolic();
        let bx = desk(&sh, 32);
        let coeff = identity_coefficients(&sh, &bx).unwrap();
        let u = &u_corpus(&sh, &bx)[0];
        let rows = hessian_via_representation(&sh, &coeff, u, &[2, 4, 8], 0, 0, &evaluation_set(&bx, 3)).unwrap();
        let e: Vec<f64> = rows.iter().map(|r| r.1.rel_l2_error).collect();
        assert!(e[0] > e[1] && e[1] > e[2] && e[2] < 0.1, "{e:?}");
    }

    #[test]
    fn variable_path_matches_constant_path() {
        // the general path with a constant field must agree with the series path
        let sh = OperatorShape::parabolic();
        let bx = desk(&sh, 16);
        let coeff = oscillating_coefficients(&sh, &bx, 0.0).unwrap();
        let mut perturbed = coeff.clone();
        perturbed.entries[0][0] += 1e-13;
        perturbed.lambda = 1.1;
        let u = &u_corpus(&sh, &bx)[0];
        let targets = evaluation_set(&bx, 7);
        let a = hessian_via_representation(&sh, &coeff, u, &[4], 0, 0, &targets).unwrap();
        let b = hessian_via_representation(&sh, &perturbed, u, &[4], 0, 0, &targets).unwrap();
        assert!(!b[0].1.constant_coefficients);
        for &t in &targets[1..] {
            assert!((a[0].0.values[t] - b[0].0.values[t]).abs() < 1e-8, "{} {}", a[0].0.values[t], b[0].0.values[t]);
        }
    }

    #[test]
    fn y_identity_holds() {
        for sh in [OperatorShape::parabolic(), OperatorShape::kolmogorov()] {
            let bx = desk(&sh, 8);
            let coeff = oscillating_coefficients(&sh, &bx, 0.3).unwrap();
            for u in u_corpus(&sh, &bx) {
                assert!(y_identity_defect(&sh, &coeff, &u).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn square_phi_matches_l2() {
        use crate::function_spaces::PhiFunction;
        let sh = OperatorShape::parabolic();
        let bx = desk(&sh, 16);
        let coeff = identity_coefficients(&sh, &bx).unwrap();
        let corpus = u_corpus(&sh, &bx);
        let a = generalized_space_estimate(&sh, &Space::Orlicz(PhiFunction::power(2.0, bx.len())), &coeff, &corpus, 4).unwrap();
        let b = generalized_space_estimate(&sh, &Space::Weighted { p: 2.0, w: None }, &coeff, &corpus, 4).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            let (x, y) = (x.unwrap(), y.unwrap());
            assert!((x - y).abs() < 1e-6 * y);
        }
        let zero = generalized_space_estimate(&sh, &Space::Weighted { p: 2.0, w: None }, &coeff, &[TestFunction::Sum(vec![])], 4).unwrap();
        assert_eq!(zero.ratios, vec![None]);
    }
}

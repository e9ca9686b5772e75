//! Sparse families and sparse operators: the stopping-time construction that
//! dominates T(f chi_{P*}) and [b, T](f chi_{P*}) on a dyadic cube P, and the
//! median-oscillation decomposition of a BMO function.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::GridField;
use crate::dyadic::{cz_local, dyadic_maximal_within, BallCatalog, DyadicGrid, GridFamily};
use crate::error::{LabError, Result};
use crate::operators::{kernel_constant, grand_maximal, DiscreteOperator, GrandMaximalPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Plain,
    Commutator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SparseKind {
    Plain,
    Osc,
    OscAdjoint,
}

/// Everything the stopping-time construction needs for one operator.
pub struct SparseSetup<'a> {
    pub family: &'a GridFamily,
    pub catalog: &'a BallCatalog,
    pub plan: &'a GrandMaximalPlan,
    pub op: &'a DiscreteOperator,
    /// sup |K| |z|^{Q+2}
    pub c_km: f64,
    /// CZ level for the bad-set cover
    pub lambda: f64,
    /// dilation factor of P*
    pub s: f64,
    /// first threshold constant tried
    pub alpha0: f64,
    /// cubes with fewer cells are not split further
    pub min_cells: usize,
}

impl<'a> SparseSetup<'a> {
    pub fn new(family: &'a GridFamily, catalog: &'a BallCatalog, plan: &'a GrandMaximalPlan, op: &'a DiscreteOperator, d_tilde: f64) -> Self {
        SparseSetup {
            family,
            catalog,
            plan,
            op,
            c_km: kernel_constant(&op.kernel, &op.spec.shape),
            lambda: 1.0 / (4.0 * d_tilde.max(1.0)),
            s: plan.s,
            alpha0: 2.0,
            min_cells: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseNode {
    pub level: usize,
    pub index: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub cells: Vec<usize>,
    /// cells of the dilated cube used for the averages
    pub dilated: Vec<usize>,
    /// threshold constant selected by doubling
    pub alpha: f64,
    pub bad_cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseFamily {
    pub grid: usize,
    pub eta: f64,
    pub nodes: Vec<SparseNode>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseCheck {
    pub disjoint: bool,
    pub nested: bool,
    /// min |F_T| / |T|
    pub witness_ratio: f64,
    /// max sum |children| / |T|
    pub packing_ratio: f64,
}

impl SparseCheck {
    pub fn passed(&self, eta: f64) -> bool {
        self.disjoint && self.nested && self.witness_ratio >= eta && self.packing_ratio <= 1.0 - eta
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeDump {
    pub level: usize,
    pub index: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub cells: usize,
    pub witness_cells: usize,
    pub dilated_cells: usize,
    pub alpha: f64,
}

impl SparseFamily {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// F_T = T minus the union of its children.
    pub fn witness(&self, i: usize) -> Vec<usize> {
        let node = &self.nodes[i];
        let mut taken: Vec<usize> = node.children.iter().flat_map(|&c| self.nodes[c].cells.iter().cloned()).collect();
        taken.sort_unstable();
        node.cells.iter().cloned().filter(|c| taken.binary_search(c).is_err()).collect()
    }

    /// Both sparseness forms, checked cell by cell.
    pub fn check(&self, n_cells: usize) -> SparseCheck {
        let mut owner = vec![usize::MAX; n_cells];
        let mut disjoint = true;
        let mut nested = true;
        let mut witness_ratio = f64::INFINITY;
        let mut packing_ratio = 0.0f64;
        for (i, node) in self.nodes.iter().enumerate() {
            let w = self.witness(i);
            for &c in &w {
                if owner[c] != usize::MAX {
                    disjoint = false;
                }
                owner[c] = i;
            }
            witness_ratio = witness_ratio.min(w.len() as f64 / node.cells.len() as f64);
            let mut sorted = node.cells.clone();
            sorted.sort_unstable();
            let mut child_cells = 0;
            for &ch in &node.children {
                child_cells += self.nodes[ch].cells.len();
                if self.nodes[ch].cells.iter().any(|c| sorted.binary_search(c).is_err()) {
                    nested = false;
                }
            }
            packing_ratio = packing_ratio.max(child_cells as f64 / node.cells.len() as f64);
        }
        if self.nodes.is_empty() {
            witness_ratio = 1.0;
        }
        SparseCheck { disjoint, nested, witness_ratio, packing_ratio }
    }

    pub fn dump(&self) -> Vec<NodeDump> {
        (0..self.nodes.len())
            .map(|i| {
                let n = &self.nodes[i];
                NodeDump {
                    level: n.level,
                    index: n.index,
                    parent: n.parent,
                    children: n.children.clone(),
                    cells: n.cells.len(),
                    witness_cells: self.witness(i).len(),
                    dilated_cells: n.dilated.len(),
                    alpha: n.alpha,
                }
            })
            .collect()
    }

    pub fn max_alpha(&self) -> f64 {
        self.nodes.iter().map(|n| n.alpha).fold(0.0, f64::max)
    }
}

fn masked(f: &GridField, cells: &[usize]) -> GridField {
    let mut g = GridField::zeros(&f.bx, &f.name);
    for &c in cells {
        g.values[c] = f.values[c];
    }
    g
}

fn mean_abs(f: &[f64], cells: &[usize]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    cells.iter().map(|&c| f[c].abs()).sum::<f64>() / cells.len() as f64
}

fn mean(f: &[f64], cells: &[usize]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    cells.iter().map(|&c| f[c]).sum::<f64>() / cells.len() as f64
}

/// Catalog maximal function of |g| at the targets only.
pub fn local_maximal(plan: &GrandMaximalPlan, g: &[f64], targets: &[usize]) -> Vec<f64> {
    let mut need: Vec<u32> = targets.iter().flat_map(|&t| plan.cell_balls[t].iter().cloned()).collect();
    need.sort_unstable();
    need.dedup();
    let mut avg = vec![0.0; plan.balls.len()];
    let vals: Vec<(u32, f64)> = need
        .par_iter()
        .map(|&b| {
            let ball = &plan.balls[b as usize];
            (b, ball.iter().map(|&c| g[c as usize].abs()).sum::<f64>() / ball.len() as f64)
        })
        .collect();
    for (b, v) in vals {
        avg[b as usize] = v;
    }
    targets.iter().map(|&t| plan.cell_balls[t].iter().map(|&b| avg[b as usize]).fold(0.0, f64::max)).collect()
}

/// max(M g, |T g|, M#_{T,s} g) / <|g|>_{P*} on the cells of P for g
/// supported in P*.
fn scores(setup: &SparseSetup, g: &GridField, pstar: &[usize], cells: &[usize]) -> Vec<f64> {
    let avg = mean_abs(&g.values, pstar);
    if avg == 0.0 {
        return vec![0.0; cells.len()];
    }
    let support: Vec<usize> = pstar.iter().cloned().filter(|&c| g.values[c] != 0.0).collect();
    let tg = setup.op.apply_at(&g.values, &support, cells);
    let ms = grand_maximal(setup.op, setup.plan, g, Some(cells));
    let mf = local_maximal(setup.plan, &g.values, cells);
    cells
        .iter()
        .enumerate()
        .map(|(i, &c)| mf[i].max(tg[i].abs()).max(ms.values[c]) / (setup.c_km * avg))
        .collect()
}

/// Stopping-time family for T(f chi_{P*}) (plain) or [b, T](f chi_{P*})
/// (commutator) below the cube (level, index) of grid `grid`.
pub fn build_sparse_family(setup: &SparseSetup, grid: usize, level: usize, index: usize, f: &GridField, mode: Mode, b: Option<&GridField>) -> Result<SparseFamily> {
    if mode == Mode::Commutator && b.is_none() {
        return Err(LabError::Domain("commutator mode needs b".into()));
    }
    let geom = &setup.family.geom;
    let g: &DyadicGrid = &setup.family.grids[grid];
    let mut nodes: Vec<SparseNode> = Vec::new();
    let mut queue: VecDeque<(usize, usize, Option<usize>)> = VecDeque::new();
    queue.push_back((level, index, None));
    while let Some((k, q, parent)) = queue.pop_front() {
        let cells = g.levels[k].cells[q].clone();
        let pstar = g.dilated_ball(geom, k, q, setup.s);
        let fp = masked(f, &pstar);
        let mut score = scores(setup, &fp, &pstar, &cells);
        if let (Mode::Commutator, Some(b)) = (mode, b) {
            let bm = mean(&b.values, &pstar);
            let mut g2 = fp.clone();
            for &c in &pstar {
                g2.values[c] *= b.values[c] - bm;
            }
            let s2 = scores(setup, &g2, &pstar, &cells);
            for (a, b) in score.iter_mut().zip(s2) {
                *a = a.max(b);
            }
        }
        let id = nodes.len();
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        let mut node = SparseNode { level: k, index: q, parent, children: Vec::new(), cells, dilated: pstar, alpha: setup.alpha0, bad_cells: 0 };
        if node.cells.len() < setup.min_cells || k + 1 >= g.n_levels() {
            node.bad_cells = 0;
            nodes.push(node);
            continue;
        }
        let half = 0.5 * node.cells.len() as f64;
        let mut alpha = setup.alpha0;
        let cover = loop {
            if alpha > 2f64.powi(60) {
                return Err(LabError::Construction(format!("threshold constant exceeded 2^60 at cube ({k}, {q})")));
            }
            let bad: Vec<usize> = node.cells.iter().zip(&score).filter(|(_, s)| **s > alpha).map(|(c, _)| *c).collect();
            if bad.len() as f64 <= half {
                if bad.is_empty() {
                    break (0, Vec::new());
                }
                let mut chi = GridField::zeros(&f.bx, "bad");
                for &c in &bad {
                    chi.values[c] = 1.0;
                }
                let cz = cz_local(g, k, q, &chi, setup.lambda);
                let covered: usize = cz.parts.iter().map(|p| g.levels[p.level].cells[p.index].len()).sum();
                if covered as f64 <= half {
                    break (bad.len(), cz.parts.iter().map(|p| (p.level, p.index)).collect());
                }
            }
            alpha *= 2.0;
        };
        node.alpha = alpha;
        node.bad_cells = cover.0;
        nodes.push(node);
        for (l, i) in cover.1 {
            queue.push_back((l, i, Some(id)));
        }
    }
    Ok(SparseFamily { grid, eta: 0.5, nodes })
}

/// Principal cubes of |f| below P: the children of a cube T are the maximal
/// subcubes with <|f|> > ratio <|f|>_T. For ratio >= 2 the children fill at
/// most half of T, so the family is sparse with eta = 1/2.
pub fn principal_family(grid: &DyadicGrid, level: usize, index: usize, f: &GridField, ratio: f64) -> SparseFamily {
    assert!(ratio >= 2.0, "principal cubes need ratio >= 2");
    let a = f.abs();
    let mut nodes: Vec<SparseNode> = Vec::new();
    let mut queue: VecDeque<(usize, usize, Option<usize>)> = VecDeque::new();
    queue.push_back((level, index, None));
    while let Some((k, q, parent)) = queue.pop_front() {
        let cells = grid.levels[k].cells[q].clone();
        let m = mean(&a.values, &cells);
        let id = nodes.len();
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        nodes.push(SparseNode { level: k, index: q, parent, children: Vec::new(), cells: cells.clone(), dilated: cells, alpha: ratio, bad_cells: 0 });
        if m <= 0.0 {
            continue;
        }
        for p in cz_local(grid, k, q, &a, ratio * m).parts {
            queue.push_back((p.level, p.index, Some(id)));
        }
    }
    SparseFamily { grid: grid.id, eta: 0.5, nodes }
}

/// Norm of f -> sum <f>_T chi_T on L^p(w) by Boyd's power iteration on the
/// nonnegative matrix w^{1/p} A w^{-1/p}. Each iterate is a lower bound for
/// the norm.
pub fn sparse_operator_norm(family: &SparseFamily, w: &[f64], p: f64, iters: usize) -> f64 {
    assert!(p > 1.0, "Boyd iteration needs p > 1");
    let q = p / (p - 1.0);
    let apply = |x: &[f64]| {
        let mut out = vec![0.0; x.len()];
        for node in &family.nodes {
            let m = node.cells.iter().map(|&c| x[c]).sum::<f64>() / node.cells.len() as f64;
            for &c in &node.cells {
                out[c] += m;
            }
        }
        out
    };
    let pnorm = |v: &[f64]| v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p);
    let a: Vec<f64> = w.iter().map(|v| v.powf(1.0 / p)).collect();
    let mut y = vec![1.0; w.len()];
    let mut best = 0.0f64;
    for _ in 0..iters {
        let x: Vec<f64> = y.iter().zip(&a).map(|(v, s)| v / s).collect();
        let by: Vec<f64> = apply(&x).iter().zip(&a).map(|(v, s)| v * s).collect();
        let est = pnorm(&by) / pnorm(&y);
        let done = (est - best).abs() <= 1e-10 * est;
        best = best.max(est);
        if done {
            break;
        }
        let z: Vec<f64> = by.iter().zip(&a).map(|(v, s)| v.powf(p - 1.0) * s).collect();
        y = apply(&z).iter().zip(&a).map(|(v, s)| (v / s).powf(q - 1.0)).collect();
        let n = pnorm(&y);
        if n == 0.0 {
            break;
        }
        y.iter_mut().for_each(|v| *v /= n);
    }
    best
}

/// Sparse operator of the given kind; averages run over the dilated cubes
/// when `dilated` is set.
pub fn apply_sparse(family: &SparseFamily, f: &GridField, kind: SparseKind, b: Option<&GridField>, dilated: bool) -> Result<GridField> {
    if kind != SparseKind::Plain && b.is_none() {
        return Err(LabError::Domain("oscillation kinds need b".into()));
    }
    let mut out = GridField::zeros(&f.bx, "sparse");
    for node in &family.nodes {
        let a = if dilated { &node.dilated } else { &node.cells };
        match kind {
            SparseKind::Plain => {
                let m = mean_abs(&f.values, a);
                for &c in &node.cells {
                    out.values[c] += m;
                }
            }
            SparseKind::Osc => {
                let b = b.unwrap();
                let m = mean_abs(&f.values, a);
                let bm = mean(&b.values, a);
                for &c in &node.cells {
                    out.values[c] += (b.values[c] - bm).abs() * m;
                }
            }
            SparseKind::OscAdjoint => {
                let b = b.unwrap();
                let bm = mean(&b.values, a);
                let m = a.iter().map(|&c| (b.values[c] - bm).abs() * f.values[c].abs()).sum::<f64>() / a.len() as f64;
                for &c in &node.cells {
                    out.values[c] += m;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominationReport {
    pub mode: Mode,
    /// minimal C with LHS <= C RHS on 99% of the compared cells
    pub constant: f64,
    pub max_ratio: f64,
    /// cells with LHS > constant * RHS
    pub exceptional_fraction: f64,
    /// cells with RHS = 0 < LHS
    pub unbounded_fraction: f64,
    pub family_size: usize,
    pub max_alpha: f64,
    pub sparse_ok: bool,
    pub passed: bool,
}

/// LHS/RHS comparison on the cells of P with the 99% budget.
pub fn domination_constant(lhs: &[f64], rhs: &[f64]) -> (f64, f64, f64, f64) {
    let scale = lhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-13 * scale;
    let mut ratios = Vec::new();
    let mut unbounded = 0usize;
    for (l, r) in lhs.iter().zip(rhs) {
        let l = l.abs();
        if l <= floor {
            continue;
        }
        if *r <= 0.0 {
            unbounded += 1;
        } else {
            ratios.push(l / r);
        }
    }
    let total = ratios.len() + unbounded;
    if total == 0 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let mut all = ratios.clone();
    all.extend(std::iter::repeat_n(f64::INFINITY, unbounded));
    let c = quantile_with_inf(&all, 0.99);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let exc = all.iter().filter(|r| **r > c).count() as f64 / total as f64;
    (c, if unbounded > 0 { f64::INFINITY } else { max }, exc, unbounded as f64 / total as f64)
}

fn quantile_with_inf(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let k = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Builds the family and compares |T(f chi_{P*})| (or the commutator) with
/// c_km times the sparse bound on every cell of P.
pub fn verify_domination(setup: &SparseSetup, grid: usize, level: usize, index: usize, f: &GridField, mode: Mode, b: Option<&GridField>) -> Result<(SparseFamily, DominationReport)> {
    let family = build_sparse_family(setup, grid, level, index, f, mode, b)?;
    let root = &family.nodes[0];
    let fp = masked(f, &root.dilated);
    let support: Vec<usize> = root.dilated.iter().cloned().filter(|&c| fp.values[c] != 0.0).collect();
    let cells = root.cells.clone();
    let (lhs, rhs) = match mode {
        Mode::Plain => {
            let t = setup.op.apply_at(&fp.values, &support, &cells);
            let a = apply_sparse(&family, f, SparseKind::Plain, None, true)?;
            (t, cells.iter().map(|&c| setup.c_km * a.values[c]).collect::<Vec<f64>>())
        }
        Mode::Commutator => {
            let b = b.unwrap();
            let bf: Vec<f64> = fp.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
            let t_bf = setup.op.apply_at(&bf, &support, &cells);
            let t_f = setup.op.apply_at(&fp.values, &support, &cells);
            let lhs: Vec<f64> = cells.iter().enumerate().map(|(i, &c)| t_bf[i] - b.values[c] * t_f[i]).collect();
            let o = apply_sparse(&family, f, SparseKind::Osc, Some(b), true)?;
            let oa = apply_sparse(&family, f, SparseKind::OscAdjoint, Some(b), true)?;
            (lhs, cells.iter().map(|&c| setup.c_km * (o.values[c] + oa.values[c])).collect())
        }
    };
    let (constant, max_ratio, exceptional_fraction, unbounded_fraction) = domination_constant(&lhs, &rhs);
    let check = family.check(f.len());
    let sparse_ok = check.passed(family.eta);
    let report = DominationReport {
        mode,
        constant,
        max_ratio,
        exceptional_fraction,
        unbounded_fraction,
        family_size: family.len(),
        max_alpha: family.max_alpha(),
        sparse_ok,
        passed: sparse_ok && constant.is_finite() && exceptional_fraction <= 0.01,
    };
    Ok((family, report))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationReport {
    /// largest threshold constant used
    pub alpha_n: f64,
    /// minimal C with |b - b_P| <= C sum Omega_T chi_T on 99% of cells
    pub constant: f64,
    pub exceptional_fraction: f64,
    pub family_size: usize,
    pub sparse_ok: bool,
}

/// Recursive median-oscillation decomposition of b below the cube P.
/// Omega_T(b) is the mean oscillation <|b - b_T|>_T.
pub fn oscillation_sparse(grid: &DyadicGrid, level: usize, index: usize, b: &GridField, lambda: f64, min_cells: usize) -> Result<(SparseFamily, OscillationReport)> {
    let mut nodes: Vec<SparseNode> = Vec::new();
    let mut omegas = Vec::new();
    let mut queue: VecDeque<(usize, usize, Option<usize>)> = VecDeque::new();
    queue.push_back((level, index, None));
    while let Some((k, q, parent)) = queue.pop_front() {
        let cells = grid.levels[k].cells[q].clone();
        let bp = mean(&b.values, &cells);
        let omega = cells.iter().map(|&c| (b.values[c] - bp).abs()).sum::<f64>() / cells.len() as f64;
        let id = nodes.len();
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        let mut node = SparseNode { level: k, index: q, parent, children: Vec::new(), cells: cells.clone(), dilated: cells.clone(), alpha: 2.0, bad_cells: 0 };
        omegas.push(omega);
        if omega <= 1e-14 * (1.0 + bp.abs()) || cells.len() < min_cells || k + 1 >= grid.n_levels() {
            nodes.push(node);
            continue;
        }
        let mut dev = GridField::zeros(&b.bx, "dev");
        for &c in &cells {
            dev.values[c] = b.values[c] - bp;
        }
        let mp = dyadic_maximal_within(grid, k, q, &dev);
        let half = 0.5 * cells.len() as f64;
        let mut alpha = 2.0;
        let cover = loop {
            if alpha > 2f64.powi(60) {
                return Err(LabError::Construction(format!("oscillation threshold exceeded 2^60 at cube ({k}, {q})")));
            }
            let bad: Vec<usize> = cells.iter().cloned().filter(|&c| mp.values[c] > alpha * omega).collect();
            if bad.is_empty() {
                break (0, Vec::new());
            }
            if bad.len() as f64 <= half {
                let mut chi = GridField::zeros(&b.bx, "bad");
                for &c in &bad {
                    chi.values[c] = 1.0;
                }
                let cz = cz_local(grid, k, q, &chi, lambda);
                let covered: usize = cz.parts.iter().map(|p| grid.levels[p.level].cells[p.index].len()).sum();
                if covered as f64 <= half {
                    break (bad.len(), cz.parts.iter().map(|p| (p.level, p.index)).collect::<Vec<_>>());
                }
            }
            alpha *= 2.0;
        };
        node.alpha = alpha;
        node.bad_cells = cover.0;
        nodes.push(node);
        for (l, i) in cover.1 {
            queue.push_back((l, i, Some(id)));
        }
    }
    let family = SparseFamily { grid: grid.id, eta: 0.5, nodes };
    // pointwise bound against sum Omega_T chi_T
    let root_cells = &family.nodes[0].cells;
    let bp = mean(&b.values, root_cells);
    let mut rhs = GridField::zeros(&b.bx, "osc_sum");
    for (node, om) in family.nodes.iter().zip(&omegas) {
        for &c in &node.cells {
            rhs.values[c] += om;
        }
    }
    let lhs: Vec<f64> = root_cells.iter().map(|&c| (b.values[c] - bp).abs()).collect();
    let r: Vec<f64> = root_cells.iter().map(|&c| rhs.values[c]).collect();
    let (constant, _, exceptional_fraction, _) = domination_constant(&lhs, &r);
    let check = family.check(b.len());
    let report = OscillationReport {
        alpha_n: family.max_alpha(),
        constant,
        exceptional_fraction,
        family_size: family.len(),
        sparse_ok: check.passed(0.5),
    };
    Ok((family, report))
}

/// max over cells of A^{b,*} f / A(A |f|) with both operators on the
/// oscillation family of b.
pub fn composition_ratio(family: &SparseFamily, b: &GridField, f: &GridField) -> Result<f64> {
    let lhs = apply_sparse(family, f, SparseKind::OscAdjoint, Some(b), false)?;
    let inner = apply_sparse(family, &f.abs(), SparseKind::Plain, None, false)?;
    let rhs = apply_sparse(family, &inner, SparseKind::Plain, None, false)?;
    Ok(lhs
        .values
        .iter()
        .zip(&rhs.values)
        .filter(|(_, r)| **r > 0.0)
        .map(|(l, r)| l / r)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{sample, LatticeBox, TestFunction};
    use crate::dyadic::build_grids;
    use crate::geometry::{OperatorShape, Point};
    use crate::harmonics::SphericalBasis;
    use crate::operators::{AngularKernel, SingularSpec};

    struct Fixture {
        fam: GridFamily,
        cat: BallCatalog,
        plan: GrandMaximalPlan,
        op: DiscreteOperator,
    }

    fn fixture() -> Fixture {
        let sh = OperatorShape::parabolic();
        let bx = LatticeBox::desk(&sh, 2.0, 4.0, 16);
        let fam = build_grids(&sh, &bx, 0.5, 1, 3).unwrap();
        let cat = BallCatalog::new(&fam);
        let plan = GrandMaximalPlan::new(&fam.geom, &cat, 5.0, 32, 1);
        let ker = AngularKernel::Harmonic(SphericalBasis::new(1, 2, 1));
        let spec = SingularSpec::for_kernels(&sh, &bx, std::slice::from_ref(&ker), 4.0);
        let op = DiscreteOperator::build(&spec, &ker, &bx).unwrap();
        Fixture { fam, cat, plan, op }
    }

    #[test]
    fn zero_input_gives_root_only() {
        let fx = fixture();
        let setup = SparseSetup::new(&fx.fam, &fx.cat, &fx.plan, &fx.op, 4.0);
        let f = GridField::zeros(&fx.fam.geom.bx, "0");
        let fam = build_sparse_family(&setup, 0, 0, 0, &f, Mode::Plain, None).unwrap();
        assert_eq!(fam.len(), 1);
        assert!(fam.nodes[0].children.is_empty());
    }

    #[test]
    fn bump_family_is_sparse_and_dominates() {
        let fx = fixture();
        let setup = SparseSetup::new(&fx.fam, &fx.cat, &fx.plan, &fx.op, 4.0);
        let sh = OperatorShape::parabolic();
        let mut c = Point::origin();
        c.t = 1.5;
        let u = TestFunction::bump(&sh, c, 0.8);
        let f = sample(|p| u.value(p, 1), &fx.fam.geom.bx, "f");
        let (fam, rep) = verify_domination(&setup, 0, 0, 0, &f, Mode::Plain, None).unwrap();
        assert!(fam.check(f.len()).passed(0.5));
        assert!(rep.constant.is_finite());
        let b = GridField::constant(&f.bx, 3.0, "b");
        let osc = apply_sparse(&fam, &f, SparseKind::Osc, Some(&b), true).unwrap();
        let adj = apply_sparse(&fam, &f, SparseKind::OscAdjoint, Some(&b), true).unwrap();
        assert!(osc.sup_abs() < 1e-14 && adj.sup_abs() < 1e-14);
    }

    #[test]
    fn single_cube_operator() {
        let fx = fixture();
        let g = &fx.fam.grids[0];
        let f = sample(|p| p.x[0] - p.t, &fx.fam.geom.bx, "f");
        let cells = g.levels[1].cells[0].clone();
        let fam = SparseFamily {
            grid: 0,
            eta: 0.5,
            nodes: vec![SparseNode { level: 1, index: 0, parent: None, children: vec![], cells: cells.clone(), dilated: cells.clone(), alpha: 2.0, bad_cells: 0 }],
        };
        let a = apply_sparse(&fam, &f, SparseKind::Plain, None, false).unwrap();
        let m = mean_abs(&f.values, &cells);
        for c in 0..f.len() {
            let want = if cells.contains(&c) { m } else { 0.0 };
            assert!((a.values[c] - want).abs() < 1e-14);
        }
    }
}

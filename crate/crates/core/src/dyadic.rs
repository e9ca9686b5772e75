//! Dyadic grids on the lattice, maximal functions and the
//! Calderon-Zygmund decomposition.
//!
//! Level k of a grid has scale r0 * delta^k for the symmetrized
//! quasi-distance d~(z, w) = d(z, w) + d(w, z), with r0 chosen so that level 0
//! is a single cube. Centers are greedy maximal r-separated nets, nested
//! across levels; every cell goes to its nearest center, and coarse
//! assignments are then rebuilt bottom-up from the parent links so that
//! cubes nest exactly. The finest level is the cell level.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{GridField, LatticeBox};
use crate::error::{LabError, Result};
use crate::geometry::{seeded_rng, OperatorShape, Point, MAX_N};

/// Cell centers with window queries for the quasi-distance.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub shape: OperatorShape,
    pub bx: LatticeBox,
    pub points: Vec<Point>,
}

impl CellGeometry {
    pub fn new(shape: &OperatorShape, bx: &LatticeBox) -> Self {
        assert_eq!(bx.dim(), shape.n() + 1, "box dimension must be N + 1");
        CellGeometry { shape: shape.clone(), bx: bx.clone(), points: bx.centers() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.shape.quasi_distance(&self.points[a], &self.points[b])
    }

    #[inline]
    pub fn dist_to(&self, p: &Point, b: usize) -> f64 {
        self.shape.quasi_distance(p, &self.points[b])
    }

    /// Cells that may satisfy d~(p, cell) < r. Uses d~ >= 2 max(|dt|^{1/2},
    /// |dx_i|) for the first block, where the group acts by plain translation.
    pub fn window(&self, p: &Point, r: f64) -> Vec<usize> {
        let bx = &self.bx;
        let d = bx.dim();
        let s0 = self.shape.s0();
        let c = LatticeBox::coords(p, d);
        let mut lo = [0usize; MAX_N + 1];
        let mut hi = [0usize; MAX_N + 1];
        for a in 0..d {
            let half = if a == d - 1 {
                r * r / 4.0
            } else if a < s0 {
                r / 2.0
            } else {
                f64::INFINITY
            };
            let n = bx.res[a];
            if half.is_infinite() {
                lo[a] = 0;
                hi[a] = n - 1;
                continue;
            }
            let h = bx.h(a);
            let l = ((c[a] - half - bx.lower[a]) / h - 0.5).ceil();
            let u = ((c[a] + half - bx.lower[a]) / h - 0.5).floor();
            if u < 0.0 || l > (n - 1) as f64 || l > u {
                return Vec::new();
            }
            lo[a] = l.max(0.0) as usize;
            hi[a] = (u as usize).min(n - 1);
        }
        let mut out = Vec::new();
        let mut idx = lo;
        loop {
            out.push(bx.flat_index(&idx[..d]));
            let mut a = 0;
            loop {
                if a == d {
                    return out;
                }
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = lo[a];
                a += 1;
            }
        }
    }

    /// Cells with d~(p, cell) < r.
    pub fn ball(&self, p: &Point, r: f64) -> Vec<usize> {
        self.window(p, r).into_iter().filter(|&c| self.dist_to(p, c) < r).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Level {
    pub scale: f64,
    /// center cell of each cube
    pub centers: Vec<usize>,
    /// cube index of every cell
    pub assign: Vec<u32>,
    pub cells: Vec<Vec<usize>>,
    /// parent cube at the previous level (empty at level 0)
    pub parent: Vec<u32>,
    pub children: Vec<Vec<u32>>,
    /// largest d~ from the center to a cell of the cube
    pub outer: Vec<f64>,
    /// smallest d~ from the center to a cell outside the cube (infinite if none)
    pub inner: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DyadicGrid {
    pub id: usize,
    pub delta: f64,
    pub r0: f64,
    pub levels: Vec<Level>,
    /// sandwich constants: B(z, c1 r_k) in U in B(z, big_c1 r_k)
    pub c1: f64,
    pub big_c1: f64,
    /// max |parent| / |child| over all cubes
    pub doubling: f64,
    /// cells whose coarse assignment changed in the nesting repair
    pub repaired: usize,
    pub cell_volume: f64,
}

/// Lightweight view of one cube.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicCube {
    pub grid: usize,
    pub level: usize,
    pub index: usize,
    pub center: Point,
    pub cells: Vec<usize>,
    pub measure: f64,
}

fn nearest(geom: &CellGeometry, cell: usize, is_center: &[i64], scale: f64) -> Option<u32> {
    let p = &geom.points[cell];
    let mut best: Option<(f64, i64)> = None;
    for c in geom.window(p, scale) {
        let id = is_center[c];
        if id < 0 {
            continue;
        }
        let dd = geom.dist_to(p, c);
        if dd < scale {
            match best {
                Some((bd, bi)) if dd > bd || (dd == bd && id > bi) => {}
                _ => best = Some((dd, id)),
            }
        }
    }
    best.map(|(_, i)| i as u32)
}

impl DyadicGrid {
    pub fn build(geom: &CellGeometry, delta: f64, id: usize, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LabError::Construction(format!("delta {delta} outside (0, 1)")));
        }
        let n = geom.len();
        let mut order: Vec<usize> = (0..n).collect();
        if id > 0 {
            let mut rng = seeded_rng(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(id as u64 + 1)));
            order.shuffle(&mut rng);
        }
        let first = order[0];
        let r0 = (0..n).map(|c| geom.dist(first, c)).fold(0.0, f64::max) * (1.0 + 1e-9) + 1e-12;

        // nested greedy nets
        let mut nets: Vec<Vec<usize>> = vec![vec![first]];
        let mut scales = vec![r0];
        while nets.last().map(|v| v.len()).unwrap_or(0) < n {
            let k = nets.len();
            let scale = r0 * delta.powi(k as i32);
            let mut centers = nets[k - 1].clone();
            let mut mark = vec![-1i64; n];
            for (i, &c) in centers.iter().enumerate() {
                mark[c] = i as i64;
            }
            for &cell in &order {
                if mark[cell] >= 0 {
                    continue;
                }
                let p = &geom.points[cell];
                let covered = geom.window(p, scale).into_iter().any(|c| mark[c] >= 0 && geom.dist_to(p, c) < scale);
                if !covered {
                    mark[cell] = centers.len() as i64;
                    centers.push(cell);
                }
            }
            nets.push(centers);
            scales.push(scale);
            if k > 64 {
                return Err(LabError::Construction("level count exceeded 64".into()));
            }
        }

        // nearest-center assignment per level
        let nl = nets.len();
        let mut assign: Vec<Vec<u32>> = Vec::with_capacity(nl);
        for k in 0..nl {
            let mut mark = vec![-1i64; n];
            for (i, &c) in nets[k].iter().enumerate() {
                mark[c] = i as i64;
            }
            let a: Vec<Option<u32>> = (0..n).into_par_iter().map(|cell| nearest(geom, cell, &mark, scales[k])).collect();
            let mut v = Vec::with_capacity(n);
            for (cell, x) in a.into_iter().enumerate() {
                v.push(x.ok_or_else(|| LabError::Construction(format!("cell {cell} has no center at level {k}")))?);
            }
            assign.push(v);
        }
        // parent links by center containment, then bottom-up rebuild
        let mut parents: Vec<Vec<u32>> = vec![Vec::new()];
        for k in 1..nl {
            parents.push(nets[k].iter().map(|&c| assign[k - 1][c]).collect());
        }
        let mut repaired = 0;
        for k in (0..nl - 1).rev() {
            for cell in 0..n {
                let a = parents[k + 1][assign[k + 1][cell] as usize];
                if a != assign[k][cell] {
                    repaired += 1;
                    assign[k][cell] = a;
                }
            }
        }

        let cell_volume = geom.bx.cell_volume();
        let mut levels = Vec::with_capacity(nl);
        for k in 0..nl {
            let nc = nets[k].len();
            let mut cells = vec![Vec::new(); nc];
            for cell in 0..n {
                cells[assign[k][cell] as usize].push(cell);
            }
            if let Some(e) = cells.iter().position(|c| c.is_empty()) {
                return Err(LabError::Construction(format!("empty cube {e} at level {k}")));
            }
            let mut children = vec![Vec::new(); nc];
            if k + 1 < nl {
                for (ci, &p) in parents[k + 1].iter().enumerate() {
                    children[p as usize].push(ci as u32);
                }
            }
            let radii: Vec<(f64, f64)> = (0..nc)
                .into_par_iter()
                .map(|q| {
                    let c = nets[k][q];
                    let outer = cells[q].iter().map(|&x| geom.dist(c, x)).fold(0.0, f64::max);
                    let search = 2.0 * outer + scales[k];
                    let mut inner = search;
                    let mut any_outside = false;
                    for x in geom.window(&geom.points[c], search) {
                        if assign[k][x] as usize != q {
                            any_outside = true;
                            inner = inner.min(geom.dist(c, x));
                        }
                    }
                    if !any_outside && cells[q].len() == n {
                        inner = f64::INFINITY;
                    }
                    (outer, inner)
                })
                .collect();
            levels.push(Level {
                scale: scales[k],
                centers: nets[k].clone(),
                assign: assign[k].clone(),
                cells,
                parent: parents[k].clone(),
                children,
                outer: radii.iter().map(|r| r.0).collect(),
                inner: radii.iter().map(|r| r.1).collect(),
            });
        }
        let mut c1 = f64::INFINITY;
        let mut big_c1 = 0.0f64;
        let mut doubling = 1.0f64;
        for (k, lv) in levels.iter().enumerate() {
            for q in 0..lv.centers.len() {
                if lv.inner[q].is_finite() {
                    c1 = c1.min(lv.inner[q] / lv.scale);
                }
                big_c1 = big_c1.max(lv.outer[q] / lv.scale);
                if k > 0 {
                    let p = lv.parent[q] as usize;
                    doubling = doubling.max(levels[k - 1].cells[p].len() as f64 / lv.cells[q].len() as f64);
                }
            }
        }
        // slightly shrink c1 so that the inner balls are strict
        let grid = DyadicGrid { id, delta, r0, levels, c1: c1 * (1.0 - 1e-9), big_c1, doubling, repaired, cell_volume };
        Ok(grid)
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_cells(&self) -> usize {
        self.levels[0].assign.len()
    }

    pub fn cube(&self, geom: &CellGeometry, level: usize, index: usize) -> DyadicCube {
        let lv = &self.levels[level];
        DyadicCube {
            grid: self.id,
            level,
            index,
            center: geom.points[lv.centers[index]],
            cells: lv.cells[index].clone(),
            measure: lv.cells[index].len() as f64 * self.cell_volume,
        }
    }

    pub fn root(&self, geom: &CellGeometry) -> DyadicCube {
        self.cube(geom, 0, 0)
    }

    pub fn measure(&self, level: usize, index: usize) -> f64 {
        self.levels[level].cells[index].len() as f64 * self.cell_volume
    }

    /// Whether cube (l, j) is contained in cube (k, i), k <= l.
    pub fn contains(&self, k: usize, i: usize, l: usize, j: usize) -> bool {
        if l < k {
            return false;
        }
        let cell = self.levels[l].centers[j];
        self.levels[k].assign[cell] as usize == i
    }

    /// Averages of |f| over every cube of one level.
    pub fn level_averages(&self, level: usize, f: &GridField) -> Vec<f64> {
        self.levels[level]
            .cells
            .iter()
            .map(|cs| cs.iter().map(|&c| f.values[c].abs()).sum::<f64>() / cs.len() as f64)
            .collect()
    }

    /// Cells of the sandwich ball of a cube dilated by `s`.
    pub fn dilated_ball(&self, geom: &CellGeometry, level: usize, index: usize, s: f64) -> Vec<usize> {
        let lv = &self.levels[level];
        let r = s * self.big_c1 * lv.scale;
        let mut v = geom.ball(&geom.points[lv.centers[index]], r);
        if v.is_empty() {
            v.push(lv.centers[index]);
        }
        v
    }

    /// Verifies the grid axioms on the cell complex.
    pub fn check_axioms(&self, geom: &CellGeometry) -> AxiomReport {
        let n = self.n_cells();
        let mut rep = AxiomReport { partition: true, nesting: true, sandwich: true, containment: true, lineage: true };
        for lv in &self.levels {
            let total: usize = lv.cells.iter().map(|c| c.len()).sum();
            let consistent = lv.cells.iter().enumerate().all(|(q, cs)| cs.iter().all(|&c| lv.assign[c] as usize == q));
            if total != n || !consistent {
                rep.partition = false;
            }
        }
        for k in 1..self.n_levels() {
            let (up, lv) = (&self.levels[k - 1], &self.levels[k]);
            for (q, cs) in lv.cells.iter().enumerate() {
                let p = lv.parent[q];
                if cs.iter().any(|&c| up.assign[c] != p) {
                    rep.nesting = false;
                }
            }
            for (q, &c) in up.centers.iter().enumerate() {
                // every center persists to the next level and keeps its cube
                let pos = lv.centers.iter().position(|&x| x == c);
                match pos {
                    Some(j) if lv.parent[j] as usize == q && lv.assign[c] as usize == j => {}
                    _ => rep.lineage = false,
                }
            }
        }
        for l in 1..self.n_levels() {
            for k in 0..l {
                for cs in &self.levels[l].cells {
                    let a = self.levels[k].assign[cs[0]];
                    if cs.iter().any(|&c| self.levels[k].assign[c] != a) {
                        rep.containment = false;
                    }
                }
            }
        }
        let ok: bool = self
            .levels
            .par_iter()
            .all(|lv| {
                (0..lv.centers.len()).all(|q| {
                    let c = lv.centers[q];
                    let p = &geom.points[c];
                    let inner = geom.ball(p, self.c1 * lv.scale);
                    let inside = inner.iter().all(|&x| lv.assign[x] as usize == q);
                    let outer = lv.cells[q].iter().all(|&x| geom.dist(c, x) <= self.big_c1 * lv.scale * (1.0 + 1e-12));
                    inside && outer
                })
            });
        rep.sandwich = ok;
        rep
    }

    pub fn manifest(&self, geom: &CellGeometry) -> GridManifest {
        GridManifest {
            id: self.id,
            delta: self.delta,
            r0: self.r0,
            c1: self.c1,
            big_c1: self.big_c1,
            doubling: self.doubling,
            repaired: self.repaired,
            levels: self
                .levels
                .iter()
                .map(|lv| LevelManifest {
                    scale: lv.scale,
                    cubes: lv.centers.len(),
                    centers: lv.centers.iter().map(|&c| LatticeBox::coords(&geom.points[c], geom.bx.dim())[..geom.bx.dim()].to_vec()).collect(),
                    cell_counts: lv.cells.iter().map(|c| c.len()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AxiomReport {
    pub partition: bool,
    pub nesting: bool,
    pub sandwich: bool,
    pub containment: bool,
    pub lineage: bool,
}

impl AxiomReport {
    pub fn all(&self) -> bool {
        self.partition && self.nesting && self.sandwich && self.containment && self.lineage
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelManifest {
    pub scale: f64,
    pub cubes: usize,
    pub centers: Vec<Vec<f64>>,
    pub cell_counts: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridManifest {
    pub id: usize,
    pub delta: f64,
    pub r0: f64,
    pub c1: f64,
    pub big_c1: f64,
    pub doubling: f64,
    pub repaired: usize,
    pub levels: Vec<LevelManifest>,
}

/// L dyadic grids on the same lattice.
#[derive(Clone, Debug)]
pub struct GridFamily {
    pub geom: CellGeometry,
    pub grids: Vec<DyadicGrid>,
}

pub fn build_grids(shape: &OperatorShape, bx: &LatticeBox, delta: f64, l: usize, seed: u64) -> Result<GridFamily> {
    if l == 0 {
        return Err(LabError::Construction("at least one grid is required".into()));
    }
    let geom = CellGeometry::new(shape, bx);
    let grids: Result<Vec<DyadicGrid>> = (0..l).into_par_iter().map(|id| DyadicGrid::build(&geom, delta, id, seed)).collect();
    let grids = grids?;
    for g in &grids {
        let rep = g.check_axioms(&geom);
        if !rep.all() {
            return Err(LabError::Construction(format!("grid {} violates axioms: {rep:?}", g.id)));
        }
    }
    Ok(GridFamily { geom, grids })
}

impl GridFamily {
    pub fn manifest(&self) -> Vec<GridManifest> {
        self.grids.iter().map(|g| g.manifest(&self.geom)).collect()
    }

    /// Largest over sampled balls of min_t diam(U)/r, U the smallest cube of
    /// grid t containing the ball; diam(U) is taken as twice its outer radius.
    pub fn covering_constant(&self, samples: usize, seed: u64) -> f64 {
        use rand::RngExt;
        let mut rng = seeded_rng(seed);
        let geom = &self.geom;
        let n = geom.len();
        let r_hi = self.grids[0].r0;
        let r_lo = self.grids[0].levels.last().map(|l| l.scale).unwrap_or(r_hi * 0.01).max(r_hi * 1e-3);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let z = rng.random_range(0..n);
            let r = r_lo * (r_hi / r_lo).powf(rng.random::<f64>());
            let ball = geom.ball(&geom.points[z], r);
            if ball.len() < 2 {
                continue;
            }
            let mut best = f64::INFINITY;
            for g in &self.grids {
                let mut found = None;
                for k in (0..g.n_levels()).rev() {
                    let a = g.levels[k].assign[ball[0]];
                    if ball.iter().all(|&c| g.levels[k].assign[c] == a) {
                        found = Some((k, a as usize));
                        break;
                    }
                }
                if let Some((k, q)) = found {
                    best = best.min(2.0 * g.levels[k].outer[q] / r);
                }
            }
            worst = worst.max(best);
        }
        worst
    }
}

/// M_U f: the largest cube average of |f| over cubes containing each cell.
pub fn dyadic_maximal(grid: &DyadicGrid, f: &GridField) -> GridField {
    let mut out = GridField::zeros(&f.bx, "M_dyadic");
    for k in 0..grid.n_levels() {
        let avg = grid.level_averages(k, f);
        let lv = &grid.levels[k];
        for (cell, v) in out.values.iter_mut().enumerate() {
            *v = v.max(avg[lv.assign[cell] as usize]);
        }
    }
    out
}

/// M^P f: the maximal function over dyadic subcubes of P; zero outside P.
pub fn dyadic_maximal_within(grid: &DyadicGrid, level: usize, index: usize, f: &GridField) -> GridField {
    let mut out = GridField::zeros(&f.bx, "M_P");
    let cells = &grid.levels[level].cells[index];
    for k in level..grid.n_levels() {
        let lv = &grid.levels[k];
        let mut sums: std::collections::HashMap<u32, (f64, usize)> = std::collections::HashMap::new();
        for &c in cells {
            let e = sums.entry(lv.assign[c]).or_insert((0.0, 0));
            e.0 += f.values[c].abs();
            e.1 += 1;
        }
        for &c in cells {
            let (s, m) = sums[&lv.assign[c]];
            out.values[c] = out.values[c].max(s / m as f64);
        }
    }
    out
}

/// Balls B(z_U, big_c1 r_k) of every cube of every grid.
#[derive(Clone, Debug)]
pub struct BallCatalog {
    pub balls: Vec<Vec<u32>>,
    pub radii: Vec<f64>,
    pub centers: Vec<usize>,
    /// max |B| / |U| over catalog balls and their cubes
    pub ratio: f64,
}

impl BallCatalog {
    pub fn new(family: &GridFamily) -> Self {
        let geom = &family.geom;
        let mut specs = Vec::new();
        for g in &family.grids {
            for lv in &g.levels {
                for (q, &c) in lv.centers.iter().enumerate() {
                    specs.push((c, g.big_c1 * lv.scale * (1.0 + 1e-9), lv.cells[q].len()));
                }
            }
        }
        let balls: Vec<Vec<u32>> = specs
            .par_iter()
            .map(|&(c, r, _)| {
                let mut b: Vec<u32> = geom.ball(&geom.points[c], r).into_iter().map(|x| x as u32).collect();
                if b.is_empty() {
                    b.push(c as u32);
                }
                b
            })
            .collect();
        let ratio = balls.iter().zip(&specs).map(|(b, s)| b.len() as f64 / s.2 as f64).fold(1.0, f64::max);
        BallCatalog {
            radii: specs.iter().map(|s| s.1).collect(),
            centers: specs.iter().map(|s| s.0).collect(),
            balls,
            ratio,
        }
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Uncentered maximal function over the catalog.
    pub fn maximal(&self, f: &GridField) -> GridField {
        let mut out = GridField::zeros(&f.bx, "M");
        for b in &self.balls {
            let avg = b.iter().map(|&c| f.values[c as usize].abs()).sum::<f64>() / b.len() as f64;
            for &c in b {
                let v = &mut out.values[c as usize];
                if avg > *v {
                    *v = avg;
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct HlResult {
    pub m: GridField,
    /// M f / sum_t M_{U^t} f (zero where both vanish)
    pub ratio: GridField,
    pub constant: f64,
}

pub fn hl_maximal(family: &GridFamily, catalog: &BallCatalog, f: &GridField) -> HlResult {
    let m = catalog.maximal(f);
    let mut sum = GridField::zeros(&f.bx, "sum_M_dyadic");
    for g in &family.grids {
        let md = dyadic_maximal(g, f);
        for (s, v) in sum.values.iter_mut().zip(&md.values) {
            *s += v;
        }
    }
    let ratio = m.zip(&sum, |a, b| if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 0.0 }, "M_ratio");
    let constant = ratio.max();
    HlResult { m, ratio, constant }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CzPart {
    pub level: usize,
    pub index: usize,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct CzResult {
    pub g: GridField,
    pub parts: Vec<CzPart>,
    pub lambda: f64,
    /// sum of the stopping-cube measures
    pub covered: f64,
    /// max <f>_B / lambda over stopping cubes (1 when there are none)
    pub d_tilde: f64,
}

impl CzResult {
    pub fn h(&self, grid: &DyadicGrid, i: usize, f: &GridField) -> GridField {
        let p = &self.parts[i];
        let mut out = GridField::zeros(&f.bx, "h");
        for &c in &grid.levels[p.level].cells[p.index] {
            out.values[c] = f.values[c] - p.mean;
        }
        out
    }

    /// max over cells of |f - g - sum h_i|.
    pub fn identity_defect(&self, grid: &DyadicGrid, f: &GridField) -> f64 {
        let mut acc = self.g.values.clone();
        for p in &self.parts {
            for &c in &grid.levels[p.level].cells[p.index] {
                acc[c] += f.values[c] - p.mean;
            }
        }
        acc.iter().zip(&f.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// D~ over a family: the largest max <f>_B / lambda over every grid, field
/// and lambda in {1/4, 1/2} sup |f|.
pub fn measure_d_tilde(family: &GridFamily, fields: &[GridField]) -> f64 {
    let mut d = 1.0f64;
    for f in fields {
        let a = f.abs();
        let m = a.max();
        if m <= 0.0 {
            continue;
        }
        for l in [0.25, 0.5] {
            for g in &family.grids {
                d = d.max(cz_decompose(g, &a, l * m).d_tilde);
            }
        }
    }
    d
}

/// Stopping cubes: maximal dyadic cubes with <f> > lambda.
pub fn cz_decompose(grid: &DyadicGrid, f: &GridField, lambda: f64) -> CzResult {
    cz_below(grid, 0, 0, f, lambda, true)
}

/// Local decomposition inside cube P over its proper subcubes; cells of P
/// outside the stopping cubes keep their values and g vanishes outside P.
pub fn cz_local(grid: &DyadicGrid, level: usize, index: usize, f: &GridField, lambda: f64) -> CzResult {
    cz_below(grid, level, index, f, lambda, false)
}

fn cz_below(grid: &DyadicGrid, level: usize, index: usize, f: &GridField, lambda: f64, include_root: bool) -> CzResult {
    assert!(lambda > 0.0, "lambda must be positive");
    let mut g = GridField::zeros(&f.bx, "g");
    for &c in &grid.levels[level].cells[index] {
        g.values[c] = f.values[c];
    }
    let mut parts = Vec::new();
    let mut d_tilde = 1.0f64;
    let mean = |k: usize, q: usize| {
        let cs = &grid.levels[k].cells[q];
        cs.iter().map(|&c| f.values[c]).sum::<f64>() / cs.len() as f64
    };
    // frontier of cubes not yet inside a stopping cube
    let mut frontier: Vec<usize> = vec![index];
    let mut k = level;
    if include_root {
        let m = mean(level, index);
        if m > lambda {
            parts.push(CzPart { level, index, mean: m });
            d_tilde = d_tilde.max(m / lambda);
            frontier.clear();
        }
    }
    while !frontier.is_empty() && k + 1 < grid.n_levels() {
        let mut next = Vec::new();
        for &q in &frontier {
            for &ch in &grid.levels[k].children[q] {
                let ch = ch as usize;
                let m = mean(k + 1, ch);
                if m > lambda {
                    parts.push(CzPart { level: k + 1, index: ch, mean: m });
                    d_tilde = d_tilde.max(m / lambda);
                } else {
                    next.push(ch);
                }
            }
        }
        frontier = next;
        k += 1;
    }
    let mut covered = 0.0;
    for p in &parts {
        for &c in &grid.levels[p.level].cells[p.index] {
            g.values[c] = p.mean;
        }
        covered += grid.measure(p.level, p.index);
    }
    CzResult { g, parts, lambda, covered, d_tilde }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(n: usize) -> GridFamily {
        let sh = OperatorShape::parabolic();
        let bx = LatticeBox::desk(&sh, 2.0, 4.0, n);
        build_grids(&sh, &bx, 0.125, 2, 7).unwrap()
    }

    #[test]
    fn axioms_and_partition() {
        let fam = family(16);
        for g in &fam.grids {
            assert!(g.check_axioms(&fam.geom).all());
            assert_eq!(g.levels[0].centers.len(), 1);
            assert_eq!(g.levels.last().unwrap().centers.len(), fam.geom.len());
            for lv in &g.levels {
                let s: usize = lv.cells.iter().map(|c| c.len()).sum();
                assert_eq!(s, fam.geom.len());
            }
            assert!(g.c1 > 0.0 && g.big_c1.is_finite());
        }
    }

    #[test]
    fn window_contains_ball() {
        let fam = family(12);
        let geom = &fam.geom;
        let p = geom.points[40];
        for r in [0.3, 0.9, 2.5] {
            let w = geom.window(&p, r);
            for c in 0..geom.len() {
                if geom.dist_to(&p, c) < r {
                    assert!(w.contains(&c));
                }
            }
        }
    }

    #[test]
    fn constant_maximal() {
        let fam = family(12);
        let f = GridField::constant(&fam.geom.bx, 3.0, "c");
        let m = dyadic_maximal(&fam.grids[0], &f);
        assert!(m.values.iter().all(|v| (v - 3.0).abs() < 1e-14));
        let cat = BallCatalog::new(&fam);
        let hl = cat.maximal(&f);
        assert!(hl.values.iter().all(|v| (v - 3.0).abs() < 1e-14));
    }

    #[test]
    fn cz_trivial_and_identity() {
        let fam = family(12);
        let g0 = &fam.grids[0];
        let one = GridField::constant(&fam.geom.bx, 1.0, "one");
        let cz = cz_decompose(g0, &one, 2.0);
        assert!(cz.parts.is_empty());
        assert_eq!(cz.g, GridField { name: "g".into(), ..one.clone() });
        let mut spike = GridField::zeros(&fam.geom.bx, "spike");
        spike.values[50] = 10.0;
        let cz = cz_decompose(g0, &spike, 0.01);
        assert!(cz.identity_defect(g0, &spike) < 1e-12);
        assert!(cz.covered <= spike.integral() / 0.01 + 1e-12);
        let covered_cell = cz.parts.iter().any(|p| g0.levels[p.level].cells[p.index].contains(&50));
        assert!(covered_cell);
    }
}

//! Uniform lattices, fields sampled at cell centers, analytic test functions
//! and the action of the operator on them.
//!
//! Axis order is x_1, ..., x_N, t. Flat indices run with axis 0 fastest.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{OperatorShape, Point, MAX_N};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub res: Vec<usize>,
}

impl LatticeBox {
    pub fn new(lower: &[f64], upper: &[f64], res: &[usize]) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != res.len() || lower.len() < 2 || lower.len() > MAX_N + 1 {
            return Err(LabError::Shape("box corners and resolution must agree in dimension".into()));
        }
        for a in 0..lower.len() {
            if !(upper[a] > lower[a]) || res[a] == 0 {
                return Err(LabError::Shape(format!("degenerate box along axis {a}")));
            }
        }
        Ok(LatticeBox { lower: lower.to_vec(), upper: upper.to_vec(), res: res.to_vec() })
    }

    /// [-half, half]^N x (0, t_max] with n cells per axis.
    pub fn desk(shape: &OperatorShape, half: f64, t_max: f64, n: usize) -> Self {
        let d = shape.n() + 1;
        let mut lower = vec![-half; d];
        let mut upper = vec![half; d];
        lower[d - 1] = 0.0;
        upper[d - 1] = t_max;
        LatticeBox { lower, upper, res: vec![n; d] }
    }

    pub fn dim(&self) -> usize {
        self.res.len()
    }

    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.res[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.h(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.upper[a] - self.lower[a]).product()
    }

    /// The same box with every axis resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        LatticeBox { lower: self.lower.clone(), upper: self.upper.clone(), res: self.res.iter().map(|r| r * factor).collect() }
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_N + 1] {
        let mut out = [0; MAX_N + 1];
        for (a, r) in self.res.iter().enumerate() {
            out[a] = flat % r;
            flat /= r;
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for a in (0..self.dim()).rev() {
            f = f * self.res[a] + idx[a];
        }
        f
    }

    pub fn center_coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + (i as f64 + 0.5) * self.h(axis)
    }

    pub fn center(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let d = self.dim();
        let mut p = Point::origin();
        for a in 0..d - 1 {
            p.x[a] = self.center_coord(a, idx[a]);
        }
        p.t = self.center_coord(d - 1, idx[d - 1]);
        p
    }

    pub fn coords(p: &Point, d: usize) -> [f64; MAX_N + 1] {
        let mut c = [0.0; MAX_N + 1];
        c[..d - 1].copy_from_slice(&p.x[..d - 1]);
        c[d - 1] = p.t;
        c
    }

    pub fn contains(&self, p: &Point) -> bool {
        let c = Self::coords(p, self.dim());
        (0..self.dim()).all(|a| c[a] >= self.lower[a] && c[a] <= self.upper[a])
    }

    /// Index of the cell containing p, if inside the box.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        let c = Self::coords(p, self.dim());
        let mut idx = [0usize; MAX_N + 1];
        for a in 0..self.dim() {
            let s = (c[a] - self.lower[a]) / self.h(a);
            if !(0.0..=self.res[a] as f64).contains(&s) {
                return None;
            }
            idx[a] = (s.floor() as usize).min(self.res[a] - 1);
        }
        Some(self.flat_index(&idx[..self.dim()]))
    }

    /// Lower interpolation corner (possibly outside the box) and fractional
    /// offsets of p on the zero-extended lattice of cell centers.
    pub fn interp_cell(&self, p: &Point) -> ([i64; MAX_N + 1], [f64; MAX_N + 1]) {
        let d = self.dim();
        let c = Self::coords(p, d);
        let mut base = [0i64; MAX_N + 1];
        let mut frac = [0.0; MAX_N + 1];
        for a in 0..d {
            let s = (c[a] - self.lower[a]) / self.h(a) - 0.5;
            let f = s.floor();
            base[a] = f as i64;
            frac[a] = s - f;
        }
        (base, frac)
    }

    /// Homogeneous size of a cell: max over axes of h_a^{1/e_a}, e_a the
    /// dilation exponent of the axis.
    pub fn hom_cell_size(&self, shape: &OperatorShape) -> f64 {
        let e = shape.exponents();
        (0..self.dim()).map(|a| self.h(a).powf(1.0 / e[a] as f64)).fold(0.0, f64::max)
    }

    /// Euclidean diameter of one cell.
    pub fn cell_diameter(&self) -> f64 {
        (0..self.dim()).map(|a| self.h(a).powi(2)).sum::<f64>().sqrt()
    }

    /// Homogeneous diameter of one cell: the norm of its half-diagonal
    /// doubled, a convenient upper bound for intrinsic cell size.
    pub fn cell_hom_diameter(&self, shape: &OperatorShape) -> f64 {
        let d = self.dim();
        let mut p = Point::origin();
        for a in 0..d - 1 {
            p.x[a] = self.h(a);
        }
        p.t = self.h(d - 1);
        shape.norm(&p)
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.center(k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub bx: LatticeBox,
    pub values: Vec<f64>,
    pub name: String,
}

impl GridField {
    pub fn zeros(bx: &LatticeBox, name: &str) -> Self {
        GridField { bx: bx.clone(), values: vec![0.0; bx.len()], name: name.into() }
    }

    pub fn constant(bx: &LatticeBox, c: f64, name: &str) -> Self {
        GridField { bx: bx.clone(), values: vec![c; bx.len()], name: name.into() }
    }

    pub fn from_values(bx: &LatticeBox, values: Vec<f64>, name: &str) -> Result<Self> {
        if values.len() != bx.len() {
            return Err(LabError::Shape(format!("{} values for {} cells", values.len(), bx.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Domain(format!("field {name} has non-finite values")));
        }
        Ok(GridField { bx: bx.clone(), values, name: name.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F, name: &str) -> Self {
        GridField { bx: self.bx.clone(), values: self.values.iter().map(|v| f(*v)).collect(), name: name.into() }
    }

    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &GridField, f: F, name: &str) -> Self {
        assert_eq!(self.bx, other.bx, "fields live on different lattices");
        GridField {
            bx: self.bx.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
            name: name.into(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs, &self.name)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Restriction to a cell set: values outside become zero.
    pub fn restrict(&self, cells: &[usize]) -> Self {
        let mut out = GridField::zeros(&self.bx, &self.name);
        for &c in cells {
            out.values[c] = self.values[c];
        }
        out
    }

    pub fn integral(&self) -> f64 {
        integrate(self, None, None)
    }

    /// Multilinear interpolation between cell centers of the lattice
    /// extended by zero beyond the box.
    pub fn interpolate(&self, p: &Point) -> f64 {
        let bx = &self.bx;
        let d = bx.dim();
        let (base, frac) = bx.interp_cell(p);
        let mut acc = 0.0;
        let mut idx = [0usize; MAX_N + 1];
        'corner: for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                let up = (corner >> a) & 1;
                let i = base[a] + up as i64;
                if i < 0 || i >= bx.res[a] as i64 {
                    continue 'corner;
                }
                idx[a] = i as usize;
                w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * self.values[bx.flat_index(&idx[..d])];
            }
        }
        acc
    }

    /// Flat CSV: a `#` metadata line, a header, then one row per cell.
    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let j = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        writeln!(
            f,
            "# name={};lower={};upper={};res={}",
            self.name,
            j(&self.bx.lower),
            j(&self.bx.upper),
            self.bx.res.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        )?;
        let d = self.bx.dim();
        let mut w = csv::Writer::from_writer(f);
        let mut header: Vec<String> = (1..d).map(|a| format!("x{a}")).collect();
        header.push("t".into());
        header.push("value".into());
        w.write_record(&header).map_err(csv_err)?;
        for k in 0..self.len() {
            let c = LatticeBox::coords(&self.bx.center(k), d);
            let mut row: Vec<String> = c[..d].iter().map(|v| format!("{v:?}")).collect();
            row.push(format!("{:?}", self.values[k]));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(std::fs::File::open(path)?);
        let mut meta = String::new();
        reader.read_line(&mut meta)?;
        let meta = meta.trim().strip_prefix('#').ok_or_else(|| LabError::Config("missing field metadata line".into()))?;
        let mut name = String::new();
        let (mut lower, mut upper, mut res) = (Vec::new(), Vec::new(), Vec::new());
        let parse = |s: &str| -> Result<Vec<f64>> {
            s.split_whitespace().map(|v| v.parse::<f64>().map_err(|e| LabError::Config(e.to_string()))).collect()
        };
        for part in meta.trim().split(';') {
            let (k, v) = part.split_once('=').ok_or_else(|| LabError::Config(format!("bad metadata {part}")))?;
            match k.trim() {
                "name" => name = v.to_string(),
                "lower" => lower = parse(v)?,
                "upper" => upper = parse(v)?,
                "res" => res = parse(v)?.into_iter().map(|r| r as usize).collect(),
                other => return Err(LabError::Config(format!("unknown metadata key {other}"))),
            }
        }
        let bx = LatticeBox::new(&lower, &upper, &res)?;
        let mut rdr = csv::Reader::from_reader(reader);
        let mut values = Vec::with_capacity(bx.len());
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let v = rec.get(rec.len() - 1).ok_or_else(|| LabError::Config("empty row".into()))?;
            values.push(v.trim().parse::<f64>().map_err(|e| LabError::Config(e.to_string()))?);
        }
        GridField::from_values(&bx, values, &name)
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Config(e.to_string())
}

/// Sample a closure at cell centers.
pub fn sample<F: Fn(&Point) -> f64 + Sync>(f: F, bx: &LatticeBox, name: &str) -> GridField {
    use rayon::prelude::*;
    let values = (0..bx.len()).into_par_iter().map(|k| f(&bx.center(k))).collect();
    GridField { bx: bx.clone(), values, name: name.into() }
}

/// Riemann sum. With `p` it returns (sum |f|^p w vol)^{1/p}, weight 1 if absent.
pub fn integrate(field: &GridField, weight: Option<&GridField>, p: Option<f64>) -> f64 {
    let vol = field.bx.cell_volume();
    let w = |k: usize| weight.map_or(1.0, |w| w.values[k]);
    match p {
        None => field.values.iter().enumerate().map(|(k, v)| v * w(k)).sum::<f64>() * vol,
        Some(p) => {
            assert!(p >= 1.0, "exponent must be at least 1");
            let s: f64 = field.values.iter().enumerate().map(|(k, v)| v.abs().powf(p) * w(k)).sum();
            (s * vol).powf(1.0 / p)
        }
    }
}

/// Pointwise derivative data of a smooth function of (x, t).
#[derive(Clone, Copy, Debug, Default)]
pub struct Jet {
    pub value: f64,
    pub dx: [f64; MAX_N],
    pub dxx: [[f64; MAX_N]; MAX_N],
    pub dt: f64,
}

impl Jet {
    fn add(&mut self, o: &Jet, s: f64) {
        self.value += s * o.value;
        self.dt += s * o.dt;
        for i in 0..MAX_N {
            self.dx[i] += s * o.dx[i];
            for j in 0..MAX_N {
                self.dxx[i][j] += s * o.dxx[i][j];
            }
        }
    }
}

/// Closed-form test functions with analytic derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TestFunction {
    /// amp * exp(-1/(1-s^2)) with s^2 = sum ((x_i-c_i)/r_i)^2 + ((t-c_t)/r_t)^2
    Bump { center: Point, radii: Vec<f64>, amp: f64 },
    /// x_axis * phi(t) with phi a one-dimensional bump in t
    LinearTimesBump { axis: usize, t_center: f64, t_radius: f64 },
    /// a constant plus linear and quadratic parts in x and t
    Quadratic { c: f64, lin: Vec<f64>, quad: Vec<Vec<f64>> },
    Sum(Vec<(f64, TestFunction)>),
}

fn bump_1d(s2: f64) -> (f64, f64, f64) {
    // value, d/ds2, d2/ds2^2 of exp(-1/(1-s2))
    if s2 >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s2;
    let u = (-1.0 / q).exp();
    let h = -1.0 / (q * q);
    let dh = -2.0 / (q * q * q);
    (u, u * h, u * (h * h + dh))
}

impl TestFunction {
    /// Standard bump of the desk corpus centered in the upper half-space.
    pub fn bump(shape: &OperatorShape, center: Point, radius: f64) -> Self {
        let mut radii = vec![radius; shape.n()];
        radii.push(radius);
        TestFunction::Bump { center, radii, amp: 1.0 }
    }

    pub fn jet(&self, p: &Point, n: usize) -> Jet {
        let mut j = Jet::default();
        match self {
            TestFunction::Bump { center, radii, amp } => {
                let mut d = [0.0; MAX_N];
                let mut s2 = 0.0;
                for i in 0..n {
                    let r = (p.x[i] - center.x[i]) / radii[i];
                    s2 += r * r;
                    d[i] = 2.0 * (p.x[i] - center.x[i]) / (radii[i] * radii[i]);
                }
                let rt = (p.t - center.t) / radii[n];
                s2 += rt * rt;
                let dt = 2.0 * (p.t - center.t) / (radii[n] * radii[n]);
                let (u, u1, u2) = bump_1d(s2);
                j.value = amp * u;
                j.dt = amp * u1 * dt;
                for a in 0..n {
                    j.dx[a] = amp * u1 * d[a];
                    for b in 0..n {
                        let diag = if a == b { 2.0 / (radii[a] * radii[a]) } else { 0.0 };
                        j.dxx[a][b] = amp * (u2 * d[a] * d[b] + u1 * diag);
                    }
                }
            }
            TestFunction::LinearTimesBump { axis, t_center, t_radius } => {
                let r = (p.t - t_center) / t_radius;
                let (u, u1, _) = bump_1d(r * r);
                let phi_t = u1 * 2.0 * (p.t - t_center) / (t_radius * t_radius);
                let x = p.x[*axis];
                j.value = x * u;
                j.dx[*axis] = u;
                j.dt = x * phi_t;
            }
            TestFunction::Quadratic { c, lin, quad } => {
                let mut z = [0.0; MAX_N + 1];
                z[..n].copy_from_slice(&p.x[..n]);
                z[n] = p.t;
                let mut v = *c;
                let mut g = [0.0; MAX_N + 1];
                for a in 0..=n {
                    v += lin[a] * z[a];
                    g[a] += lin[a];
                    for b in 0..=n {
                        v += 0.5 * quad[a][b] * z[a] * z[b];
                        g[a] += 0.5 * (quad[a][b] + quad[b][a]) * z[b];
                    }
                }
                j.value = v;
                j.dx[..n].copy_from_slice(&g[..n]);
                j.dt = g[n];
                for a in 0..n {
                    for b in 0..n {
                        j.dxx[a][b] = 0.5 * (quad[a][b] + quad[b][a]);
                    }
                }
            }
            TestFunction::Sum(parts) => {
                for (s, f) in parts {
                    j.add(&f.jet(p, n), *s);
                }
            }
        }
        j
    }

    pub fn value(&self, p: &Point, n: usize) -> f64 {
        self.jet(p, n).value
    }

    /// Whether the support is compact, inside the box interior and in t > 0.
    pub fn support_inside(&self, bx: &LatticeBox) -> bool {
        let d = bx.dim();
        match self {
            TestFunction::Bump { center, radii, .. } => {
                let c = LatticeBox::coords(center, d);
                (0..d).all(|a| c[a] - radii[a] > bx.lower[a] && c[a] + radii[a] < bx.upper[a]) && center.t - radii[d - 1] > 0.0
            }
            TestFunction::Sum(parts) => parts.iter().all(|(_, f)| f.support_inside(bx)),
            _ => false,
        }
    }
}

/// Coefficient matrix field A(z) sampled on the lattice (row-major s0 x s0).
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub s0: usize,
    pub lambda: f64,
    pub entries: Vec<Vec<f64>>,
    pub bx: LatticeBox,
}

impl CoefficientField {
    pub fn from_fn<F: Fn(&Point) -> Vec<f64> + Sync>(bx: &LatticeBox, s0: usize, lambda: f64, f: F) -> Result<Self> {
        use rayon::prelude::*;
        let entries: Vec<Vec<f64>> = (0..bx.len()).into_par_iter().map(|k| f(&bx.center(k))).collect();
        let cf = CoefficientField { s0, lambda, entries, bx: bx.clone() };
        cf.check()?;
        Ok(cf)
    }

    pub fn constant(bx: &LatticeBox, a: &[f64], s0: usize, lambda: f64) -> Result<Self> {
        Self::from_fn(bx, s0, lambda, |_| a.to_vec())
    }

    /// Ellipticity bounds 1/lambda <= eig <= lambda at every lattice point.
    pub fn check(&self) -> Result<()> {
        for (cell, a) in self.entries.iter().enumerate() {
            if a.len() != self.s0 * self.s0 {
                return Err(LabError::Shape("coefficient entry has wrong size".into()));
            }
            let m = DMatrix::from_row_slice(self.s0, self.s0, a);
            if (&m - m.transpose()).abs().max() > 1e-12 {
                return Err(LabError::Ellipticity { cell, eig: f64::NAN, lambda: self.lambda });
            }
            for e in m.symmetric_eigenvalues().iter() {
                if *e < 1.0 / self.lambda - 1e-12 || *e > self.lambda + 1e-12 {
                    return Err(LabError::Ellipticity { cell, eig: *e, lambda: self.lambda });
                }
            }
        }
        Ok(())
    }

    pub fn entry_field(&self, i: usize, j: usize) -> GridField {
        GridField {
            bx: self.bx.clone(),
            values: self.entries.iter().map(|a| a[i * self.s0 + j]).collect(),
            name: format!("a{}{}", i + 1, j + 1),
        }
    }
}

/// Returns (L u, Y u) on the lattice using analytic derivatives of u.
pub fn apply_l(shape: &OperatorShape, coeff: &CoefficientField, u: &TestFunction) -> Result<(GridField, GridField)> {
    coeff.check()?;
    if coeff.s0 != shape.s0() {
        return Err(LabError::Shape("coefficient block size differs from s0".into()));
    }
    let bx = &coeff.bx;
    let n = shape.n();
    let mut lu = Vec::with_capacity(bx.len());
    let mut yu = Vec::with_capacity(bx.len());
    for k in 0..bx.len() {
        let p = bx.center(k);
        let j = u.jet(&p, n);
        let y = y_of_jet(shape, &p, &j);
        let mut l = y;
        let a = &coeff.entries[k];
        for i in 0..coeff.s0 {
            for jj in 0..coeff.s0 {
                l += a[i * coeff.s0 + jj] * j.dxx[i][jj];
            }
        }
        lu.push(l);
        yu.push(y);
    }
    Ok((
        GridField { bx: bx.clone(), values: lu, name: "Lu".into() },
        GridField { bx: bx.clone(), values: yu, name: "Yu".into() },
    ))
}

/// Y u = sum b_ij x_i d_{x_j} u - d_t u.
pub fn y_of_jet(shape: &OperatorShape, p: &Point, j: &Jet) -> f64 {
    let n = shape.n();
    let mut y = -j.dt;
    for i in 0..n {
        for jj in 0..n {
            let b = shape.b(i, jj);
            if b != 0.0 {
                y += b * p.x[i] * j.dx[jj];
            }
        }
    }
    y
}

/// L u by centered finite differences of the sampled values of u, used as an
/// oracle for [`apply_l`]. Boundary cells are left at zero.
pub fn apply_l_fd(shape: &OperatorShape, coeff: &CoefficientField, u: &TestFunction, h: f64) -> GridField {
    let bx = &coeff.bx;
    let n = shape.n();
    let mut out = GridField::zeros(bx, "Lu_fd");
    for k in 0..bx.len() {
        let p = bx.center(k);
        let f = |dx: &[f64], dt: f64| {
            let mut q = p;
            for i in 0..n {
                q.x[i] += dx[i];
            }
            q.t += dt;
            u.value(&q, n)
        };
        let mut e = [[0.0; MAX_N]; MAX_N];
        for (i, row) in e.iter_mut().enumerate().take(n) {
            row[i] = h;
        }
        let zero = [0.0; MAX_N];
        let u0 = f(&zero, 0.0);
        let mut l = -(f(&zero, h) - f(&zero, -h)) / (2.0 * h);
        for jj in 0..n {
            let dj = (f(&e[jj], 0.0) - f(&e[jj].map(|v| -v), 0.0)) / (2.0 * h);
            for i in 0..n {
                l += shape.b(i, jj) * p.x[i] * dj;
            }
        }
        let a = &coeff.entries[k];
        for i in 0..coeff.s0 {
            for jj in 0..coeff.s0 {
                let d2 = if i == jj {
                    (f(&e[i], 0.0) - 2.0 * u0 + f(&e[i].map(|v| -v), 0.0)) / (h * h)
                } else {
                    let pp: Vec<f64> = (0..MAX_N).map(|a| e[i][a] + e[jj][a]).collect();
                    let pm: Vec<f64> = (0..MAX_N).map(|a| e[i][a] - e[jj][a]).collect();
                    let mp: Vec<f64> = pm.iter().map(|v| -v).collect();
                    let mm: Vec<f64> = pp.iter().map(|v| -v).collect();
                    (f(&pp, 0.0) - f(&pm, 0.0) - f(&mp, 0.0) + f(&mm, 0.0)) / (4.0 * h * h)
                };
                l += a[i * coeff.s0 + jj] * d2;
            }
        }
        out.values[k] = l;
    }
    out
}

/// Analytic second derivative u_{x_i x_j} sampled on the lattice.
pub fn sample_hessian(shape: &OperatorShape, u: &TestFunction, bx: &LatticeBox, i: usize, j: usize) -> GridField {
    let n = shape.n();
    sample(|p| u.jet(p, n).dxx[i][j], bx, &format!("u_x{}x{}", i + 1, j + 1))
}

/// Desk corpus on a box centered at the origin in x: smooth bumps, an
/// oscillating bump, a cube indicator, a one-cell near-atom and seeded noise.
pub fn corpus(shape: &OperatorShape, bx: &LatticeBox, seed: u64) -> Vec<GridField> {
    use rand::RngExt;
    let n = shape.n();
    let d = bx.dim();
    let mid: Vec<f64> = (0..d).map(|a| 0.5 * (bx.lower[a] + bx.upper[a])).collect();
    let span: Vec<f64> = (0..d).map(|a| bx.upper[a] - bx.lower[a]).collect();
    let at = |off: &[f64]| {
        let mut p = Point::origin();
        for a in 0..n {
            p.x[a] = mid[a] + off[a] * span[a];
        }
        p.t = mid[n] + off[n] * span[n];
        p
    };
    let r = 0.3 * span.iter().cloned().fold(f64::INFINITY, f64::min);
    let b0 = TestFunction::bump(shape, at(&[0.0; MAX_N + 1][..d]), r);
    let mut off = vec![0.12; d];
    off[n] = -0.1;
    let b1 = TestFunction::bump(shape, at(&off), 0.6 * r);
    let mut out = vec![sample(|p| b0.value(p, n), bx, "bump"), sample(|p| b1.value(p, n), bx, "bump_off")];
    out.push(sample(|p| (6.0 * p.x[0] / span[0]).sin() * b0.value(p, n), bx, "osc_bump"));
    out.push(sample(
        |p| {
            let c = LatticeBox::coords(p, d);
            if (0..d).all(|a| (c[a] - mid[a]).abs() < 0.125 * span[a]) {
                1.0
            } else {
                0.0
            }
        },
        bx,
        "cube",
    ));
    let mut atom = GridField::zeros(bx, "atom");
    let idx: Vec<usize> = (0..d).map(|a| bx.res[a] / 2).collect();
    atom.values[bx.flat_index(&idx)] = 1.0 / bx.cell_volume();
    out.push(atom);
    let mut rng = crate::geometry::seeded_rng(seed);
    let mut noise = GridField::zeros(bx, "noise");
    for k in 0..bx.len() {
        let c = LatticeBox::coords(&bx.center(k), d);
        let v: f64 = rng.random_range(-1.0..1.0);
        if (0..d).all(|a| (c[a] - mid[a]).abs() < 0.3 * span[a]) {
            noise.values[k] = v;
        }
    }
    out.push(noise);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> LatticeBox {
        LatticeBox::new(&[0.0, 0.0], &[1.0, 1.0], &[8, 8]).unwrap()
    }

    #[test]
    fn constant_integrates_to_volume() {
        let f = GridField::constant(&unit_box(), 1.0, "one");
        assert_eq!(f.integral(), 1.0);
    }

    #[test]
    fn index_round_trip() {
        let bx = LatticeBox::new(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], &[3, 4, 5]).unwrap();
        for k in 0..bx.len() {
            let idx = bx.multi_index(k);
            assert_eq!(bx.flat_index(&idx[..3]), k);
            assert_eq!(bx.locate(&bx.center(k)), Some(k));
        }
    }

    #[test]
    fn interpolation_is_exact_for_linear() {
        let bx = unit_box();
        let f = sample(|p| 2.0 * p.x[0] - p.t, &bx, "lin");
        let p = Point::new(&[0.37], 0.61);
        assert!((f.interpolate(&p) - (2.0 * 0.37 - 0.61)).abs() < 1e-14);
        // between the outermost center and the edge the field ramps to zero
        let edge = Point::new(&[0.5], 1.0);
        let last = f.interpolate(&Point::new(&[0.5], 1.0 - 1.0 / 16.0));
        assert!((f.interpolate(&edge) - 0.5 * last).abs() < 1e-14);
        assert_eq!(f.interpolate(&Point::new(&[1.5], 0.5)), 0.0);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let u = TestFunction::Bump { center: Point::new(&[0.1, -0.2], 2.0), radii: vec![0.9, 1.1, 1.3], amp: 1.0 };
        let p = Point::new(&[0.3, 0.1], 2.2);
        let j = u.jet(&p, 2);
        let h = 1e-4;
        let mut q = p;
        q.x[0] += h;
        let mut r = p;
        r.x[0] -= h;
        let d = (u.value(&q, 2) - u.value(&r, 2)) / (2.0 * h);
        assert!((d - j.dx[0]).abs() < 1e-7);
        let d2 = (u.jet(&q, 2).dx[1] - u.jet(&r, 2).dx[1]) / (2.0 * h);
        assert!((d2 - j.dxx[0][1]).abs() < 1e-7);
    }
}

//! Gauss-Legendre panels and quadrature rules on the unit spheres S^1 and S^2.
//!
//! Sphere nodes are stored with the time coordinate last, matching
//! [`OperatorShape::polar`](crate::geometry::OperatorShape::polar).

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("positive degree"));
    let mut pairs: Vec<(f64, f64)> = rule.nodes().cloned().zip(rule.weights().cloned()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss-Legendre rule over consecutive panels `edges`.
pub fn composite_gl(edges: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * edges.len());
    let mut weights = Vec::with_capacity(n * edges.len());
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let h = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(a + h * (1.0 + xi));
            weights.push(h * wi);
        }
    }
    (nodes, weights)
}

/// Panel edges on [a, b] halving toward `a`: a, a + (b-a)/2^levels, ..., b.
pub fn graded_edges(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mut e = vec![a];
    for k in (0..levels).rev() {
        e.push(a + (b - a) / 2f64.powi(k as i32));
    }
    e
}

/// Panel edges on [a, b] halving toward both ends.
pub fn two_sided_edges(a: f64, b: f64, levels: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let left = graded_edges(a, mid, levels);
    let right: Vec<f64> = graded_edges(b, mid, levels).into_iter().rev().collect();
    let mut e = left;
    e.extend_from_slice(&right[1..]);
    e
}

/// Panel edges on [c - half, c + half] halving toward the center c.
pub fn centered_edges(c: f64, half: f64, levels: usize) -> Vec<f64> {
    let right = graded_edges(c, c + half, levels);
    let mut e: Vec<f64> = right.iter().rev().map(|v| 2.0 * c - v).collect();
    e.extend_from_slice(&right[1..]);
    e
}

#[derive(Clone, Debug)]
pub struct SphereRule {
    /// sphere dimension N (the sphere sits in R^{N+1})
    pub dim: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Midpoint trapezoid rule on the circle; node angle phi measured from
    /// the first axis toward the time axis.
    pub fn circle(n: usize) -> Self {
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let nodes = (0..n)
            .map(|k| {
                let p = (k as f64 + 0.5) * h;
                [p.cos(), p.sin(), 0.0]
            })
            .collect();
        SphereRule { dim: 1, nodes, weights: vec![h; n] }
    }

    /// Product rule on S^2: Gauss-Legendre in the time coordinate (the polar
    /// axis) times the trapezoid rule in azimuth.
    pub fn product(n_polar: usize, n_azimuth: usize) -> Self {
        let (z, wz) = gauss_legendre(n_polar);
        let h = 2.0 * std::f64::consts::PI / n_azimuth as f64;
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).sqrt();
            for k in 0..n_azimuth {
                let p = (k as f64 + 0.5) * h;
                nodes.push([s * p.cos(), s * p.sin(), *zi]);
                weights.push(wi * h);
            }
        }
        SphereRule { dim: 2, nodes, weights }
    }

    /// Rule with exact integration of polynomials of degree <= 2 m_max + 3
    /// on the sphere of dimension `dim`.
    pub fn exact_for_degree(dim: usize, m_max: usize) -> Self {
        match dim {
            1 => Self::circle(4 * (m_max + 2)),
            2 => Self::product(2 * (m_max + 2), 4 * (m_max + 2)),
            _ => panic!("sphere dimension {dim} unsupported"),
        }
    }

    /// Rule adapted to the fundamental solution restricted to the sphere.
    ///
    /// The kernel vanishes on the closed lower half (t <= 0) and is flat but
    /// steep as t -> 0+, with a ridge close to the directions where the
    /// drift coordinates vanish. Panels are halved toward those places;
    /// `order` is the number of Gauss points per panel.
    pub fn kernel_adapted(dim: usize, order: usize) -> Self {
        use std::f64::consts::PI;
        match dim {
            1 => {
                let edges = two_sided_edges(0.0, PI, 14);
                let (p, w) = composite_gl(&edges, order);
                let nodes = p.iter().map(|a| [a.cos(), a.sin(), 0.0]).collect();
                SphereRule { dim: 1, nodes, weights: w }
            }
            2 => {
                let t_edges = graded_edges(0.0, 1.0, 12);
                let (t, wt) = composite_gl(&t_edges, order);
                let mut a_edges = centered_edges(0.0, 0.5 * PI, 12);
                let upper = centered_edges(PI, 0.5 * PI, 12);
                a_edges.extend_from_slice(&upper[1..]);
                let (phi, wphi) = composite_gl(&a_edges, order);
                let mut nodes = Vec::with_capacity(t.len() * phi.len());
                let mut weights = Vec::with_capacity(t.len() * phi.len());
                for (ti, wti) in t.iter().zip(&wt) {
                    let s = (1.0 - ti * ti).sqrt();
                    for (pj, wpj) in phi.iter().zip(&wphi) {
                        nodes.push([s * pj.cos(), s * pj.sin(), *ti]);
                        weights.push(wti * wpj);
                    }
                }
                SphereRule { dim: 2, nodes, weights }
            }
            _ => panic!("sphere dimension {dim} unsupported"),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node as a point of R^{N+1} with time last.
    #[inline]
    pub fn theta(&self, k: usize) -> &[f64] {
        &self.nodes[k][..=self.dim]
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len() {
            s += self.weights[k] * f(self.theta(k));
        }
        s
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gl_integrates_polynomials() {
        let (x, w) = composite_gl(&[0.0, 0.5, 2.0], 5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 2f64.powi(8) / 8.0).abs() < 1e-11);
    }

    #[test]
    fn sphere_areas() {
        assert!((SphereRule::circle(16).area() - 2.0 * PI).abs() < 1e-13);
        assert!((SphereRule::product(8, 16).area() - 4.0 * PI).abs() < 1e-12);
        // the adapted rules cover the upper half only
        assert!((SphereRule::kernel_adapted(1, 8).area() - PI).abs() < 1e-12);
        assert!((SphereRule::kernel_adapted(2, 8).area() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn product_rule_moments() {
        let r = SphereRule::product(6, 12);
        let m = r.integrate(|th| th[0] * th[0] * th[2] * th[2]);
        assert!((m - 4.0 * PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn edges_are_monotone() {
        let e = two_sided_edges(0.0, 1.0, 5);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        let c = centered_edges(1.0, 0.5, 4);
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        assert_eq!((c[0], c[c.len() - 1]), (0.5, 1.5));
        assert_eq!(e.first(), Some(&0.0));
        assert_eq!(e.last(), Some(&1.0));
    }
}

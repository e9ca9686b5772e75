//! Criterion 3: spherical harmonic bases, kernel coefficients and the
//! angular kernels K_km.

use kfp_core::geometry::seeded_rng;
use kfp_core::harmonics::{basis_dim, eval_k, expand_coeffs, kernel_sup, orthonormality_defect, SphericalBasis};
use kfp_core::kernels::{FrozenCoefficients, FundamentalSolution};
use kfp_core::quadrature::SphereRule;
use kfp_core::stats::loglog_slope;

use super::{shapes, tag};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.harmonics;
    let mut table = Table::new("coefficients", &["shape", "i", "j", "m", "max_abs_coeff"]);
    let dims_ok = basis_dim(2, 1) == 3 && basis_dim(2, 2) == 5 && (1..=8).all(|m| basis_dim(1, m) == 2);
    out.flag(3, "basis_dimensions", dims_ok);
    for sh in shapes(&cfg.run.shapes)? {
        let dim = sh.n();
        let q2 = sh.q() as i32 + 2;
        let rule = SphereRule::exact_for_degree(dim, c.m_max);
        out.le(3, format!("orthonormality[{}]", tag(&sh)), orthonormality_defect(&rule, c.m_max), c.orthonormality_tol);

        let fs = FundamentalSolution::new(&sh, &FrozenCoefficients::identity(sh.s0()));
        let [lo, hi] = c.decay_range;
        let (mut m0, mut slope) = (0.0f64, f64::NEG_INFINITY);
        for i in 0..sh.s0() {
            for j in 0..sh.s0() {
                let exp = expand_coeffs(&fs, i, j, hi.max(c.m_max))?;
                let by = exp.max_abs_by_degree();
                m0 = m0.max(by[0]);
                let top = by.iter().cloned().fold(0.0, f64::max);
                let (ms, cs): (Vec<f64>, Vec<f64>) = (lo..=hi).filter(|&m| by[m] > 1e-14 * top).map(|m| (m as f64, by[m])).unzip();
                slope = slope.max(loglog_slope(&ms, &cs));
                for (m, v) in by.iter().enumerate() {
                    table.push(vec![tag(&sh), i.to_string(), j.to_string(), m.to_string(), fmt(*v)]);
                }
            }
        }
        out.le(3, format!("m0_coefficients[{}]", tag(&sh)), m0, c.m0_tol);
        out.le(3, format!("coefficient_decay_slope[{}]", tag(&sh)), slope, c.decay_slope);

        let mut rng = seeded_rng(cfg.run.seed);
        let (mut hom, mut mean) = (0.0f64, 0.0f64);
        for m in 1..=c.m_max {
            for k in 1..=basis_dim(dim, m) {
                let b = SphericalBasis::new(dim, m, k);
                let ckm = kernel_sup(&b, &sh);
                for s in 0..c.samples {
                    let z = sh.random_point(&mut rng, 2.0);
                    let r = [0.31, 2.7, 11.0][s % 3];
                    if let (Ok(kz), Ok(krz)) = (eval_k(&b, &sh, &z), eval_k(&b, &sh, &sh.dilate(r, &z))) {
                        // relative to the kernel size c_km |delta_r z|^{-(Q+2)}
                        let want = r.powi(-q2) * kz;
                        let scale = ckm * (r * sh.norm(&z)).powi(-q2);
                        hom = hom.max((krz - want).abs() / scale);
                    }
                }
                let mu = rule.integrate(|th| eval_k(&b, &sh, &sh.from_polar(1.0, th)).unwrap_or(0.0) * sh.polar_jacobian(th));
                mean = mean.max(mu.abs());
            }
        }
        out.le(3, format!("kernel_homogeneity[{}]", tag(&sh)), hom, c.homogeneity_tol);
        out.le(3, format!("kernel_sphere_mean[{}]", tag(&sh)), mean, c.mean_tol);
    }
    out.table(table);
    Ok(())
}

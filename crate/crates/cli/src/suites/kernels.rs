//! Criterion 2: homogeneity, annulus cancellation, PDE residual order and
//! the closed-form anchors of the fundamental solution.

use kfp_core::kernels::{cancellation_check, pde_residual_probe, sample_points, FrozenCoefficients, FundamentalSolution};
use kfp_core::geometry::Point;

use super::{per_shape, shapes, tag};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

fn rel_err(got: f64, want: f64) -> Option<f64> {
    (want.abs() > 1e-250).then(|| (got - want).abs() / want.abs())
}

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.kernels;
    let mut table = Table::new("kernel_checks", &["shape", "frozen", "check", "value"]);
    for sh in shapes(&cfg.run.shapes)? {
        let n = sh.n();
        let s0 = sh.s0();
        let q = sh.q() as i32;
        let a = sh.spatial_exponents().to_vec();
        let pts = sample_points(&sh, c.samples, 0.3, 2.0, cfg.run.seed);
        for (label, frozen) in [("identity", FrozenCoefficients::identity(s0)), ("scalar", FrozenCoefficients::scalar(s0, c.frozen_scalar))] {
            let fs = FundamentalSolution::new(&sh, &frozen);
            let mut hom = 0.0f64;
            for z in &pts {
                for r in [0.37, 1.9, 4.2] {
                    let rz = sh.dilate(r, z);
                    let mut errs = vec![rel_err(fs.value(&rz), r.powi(-q) * fs.value(z))];
                    for i in 0..n {
                        errs.push(rel_err(fs.grad(&rz, i), r.powi(-q - a[i]) * fs.grad(z, i)));
                        for j in 0..n {
                            errs.push(rel_err(fs.hess(&rz, i, j), r.powi(-q - a[i] - a[j]) * fs.hess(z, i, j)));
                        }
                    }
                    hom = errs.into_iter().flatten().fold(hom, f64::max);
                }
            }
            out.le(2, format!("gamma_homogeneity[{},{label}]", tag(&sh)), hom, c.homogeneity_tol);
            table.push(vec![tag(&sh), label.into(), "homogeneity".into(), fmt(hom)]);

            let [lo, hi] = super::per_shape(&sh, c.annulus_parabolic, c.annulus_kolmogorov);
            let mut canc = 0.0f64;
            for i in 0..s0 {
                for j in 0..s0 {
                    canc = canc.max(cancellation_check(&fs, i, j, lo, hi).abs());
                }
            }
            out.le(2, format!("annulus_cancellation[{},{label}]", tag(&sh)), canc, c.cancellation_tol);
            table.push(vec![tag(&sh), label.into(), "cancellation".into(), fmt(canc)]);

            // t well above the step keeps the stencil off the causal cut
            let probe: Vec<_> = sample_points(&sh, 400, 0.5, 1.0, cfg.run.seed + 1).into_iter().filter(|p| p.t >= c.residual_t_min).take(50).collect();
            let r1 = pde_residual_probe(&fs, &probe, c.residual_h);
            let r2 = pde_residual_probe(&fs, &probe, 0.5 * c.residual_h);
            let ratio = r1 / r2;
            out.within(2, format!("pde_residual_order[{},{label}]", tag(&sh)), ratio, 4.0 * (1.0 - c.residual_band), 4.0 * (1.0 + c.residual_band));
            table.push(vec![tag(&sh), label.into(), "residual_h".into(), fmt(r1)]);
            table.push(vec![tag(&sh), label.into(), "residual_h_half".into(), fmt(r2)]);
        }
        // heat-kernel anchors at x = 0, t = 1 for A = I
        let fs = FundamentalSolution::new(&sh, &FrozenCoefficients::identity(s0));
        let mut p = Point::origin();
        p.t = 1.0;
        let want = per_shape(&sh, 1.0 / (4.0 * std::f64::consts::PI).sqrt(), 3f64.sqrt() / (2.0 * std::f64::consts::PI));
        let err = (fs.value(&p) - want).abs();
        out.le(2, format!("anchor[{}]", tag(&sh)), err, c.anchor_tol);
        table.push(vec![tag(&sh), "identity".into(), "anchor_error".into(), fmt(err)]);
    }
    out.table(table);
    Ok(())
}

//! Criterion 4: grid axioms and the Calderon-Zygmund decomposition.

use kfp_core::discretization::{corpus, integrate};
use kfp_core::dyadic::{build_grids, cz_decompose, measure_d_tilde};
use kfp_core::stats::relative_spread;

use super::{desk, keep, per_shape, shapes, tag};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.dyadic;
    let stable = cfg.sparse.stable_fields.clone();
    let mut table = Table::new("cz", &["shape", "n", "grid", "field", "stopping_cubes", "identity_defect", "mean_zero_defect", "covered", "l1_over_lambda", "g_sup_over_lambda"]);
    let mut dt_table = Table::new("d_tilde", &["shape", "n", "d_tilde_smooth", "d_tilde_all", "covering_constant"]);
    for sh in shapes(&cfg.run.shapes)? {
        let mut d_tilde = Vec::new();
        for n in per_shape(&sh, c.parabolic, c.kolmogorov) {
            let bx = desk(&sh, n);
            let fam = build_grids(&sh, &bx, c.delta, c.grids, cfg.run.seed)?;
            let axioms = fam.grids.iter().all(|g| g.check_axioms(&fam.geom).all());
            out.flag(4, format!("grid_axioms[{},{n}]", tag(&sh)), axioms);
            let fields = corpus(&sh, &bx, cfg.run.seed);
            let smooth: Vec<_> = keep(&fields, &stable).into_iter().cloned().collect();
            let dt = measure_d_tilde(&fam, &smooth);
            let dt_all = measure_d_tilde(&fam, &fields);
            let cover = fam.covering_constant(c.covering_samples, cfg.run.seed);
            dt_table.push(vec![tag(&sh), n.to_string(), fmt(dt), fmt(dt_all), fmt(cover)]);
            d_tilde.push(dt);
            let vol = bx.cell_volume();
            let (mut ident, mut zero, mut measure_ok, mut sup_ok) = (0.0f64, 0.0f64, true, true);
            for (gi, g) in fam.grids.iter().enumerate() {
                for f in &fields {
                    let a = f.abs();
                    let lambda = c.lambda_fraction * a.max();
                    if lambda <= 0.0 {
                        continue;
                    }
                    let cz = cz_decompose(g, &a, lambda);
                    let scale = a.max();
                    let id = cz.identity_defect(g, &a) / scale;
                    let mut mz = 0.0f64;
                    for i in 0..cz.parts.len() {
                        let h = cz.h(g, i, &a);
                        let part = &cz.parts[i];
                        let mass = part.mean * g.measure(part.level, part.index);
                        mz = mz.max((h.values.iter().sum::<f64>() * vol).abs() / mass);
                    }
                    let l1 = integrate(&a, None, Some(1.0));
                    let gsup = cz.g.max() / lambda;
                    ident = ident.max(id);
                    zero = zero.max(mz);
                    measure_ok &= cz.covered <= l1 / lambda * (1.0 + 1e-12);
                    sup_ok &= gsup <= dt_all * (1.0 + 1e-12);
                    table.push(vec![tag(&sh), n.to_string(), gi.to_string(), f.name.clone(), cz.parts.len().to_string(), fmt(id), fmt(mz), fmt(cz.covered), fmt(l1 / lambda), fmt(gsup)]);
                }
            }
            out.le(4, format!("cz_identity[{},{n}]", tag(&sh)), ident, 1e-14);
            out.le(4, format!("cz_mean_zero[{},{n}]", tag(&sh)), zero, 1e-12);
            out.flag(4, format!("cz_measure_bound[{},{n}]", tag(&sh)), measure_ok);
            out.flag(4, format!("cz_g_bound[{},{n}]", tag(&sh)), sup_ok);
        }
        out.le(4, format!("d_tilde_stability[{}]", tag(&sh)), relative_spread(d_tilde[0], d_tilde[1]), c.d_tilde_band);
        out.metric(format!("d_tilde[{}]", tag(&sh)), d_tilde[1]);
    }
    out.table(table);
    out.table(dt_table);
    Ok(())
}

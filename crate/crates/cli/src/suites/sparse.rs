//! Criterion 6: sparse families and pointwise sparse domination of T_km and
//! of its commutators.

use std::collections::BTreeMap;

use kfp_core::discretization::{corpus, sample};
use kfp_core::dyadic::{build_grids, measure_d_tilde, BallCatalog};
use kfp_core::harmonics::SphericalBasis;
use kfp_core::operators::{AngularKernel, DiscreteOperator, GrandMaximalPlan, SingularSpec};
use kfp_core::sparse::{verify_domination, Mode, SparseSetup};
use kfp_core::stats::relative_spread;

use super::{desk, keep, per_shape, shapes, tag};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.sparse;
    let mut table = Table::new(
        "domination",
        &["shape", "n", "m", "mode", "field", "family_size", "sparse_ok", "constant", "max_ratio", "exceptional_fraction", "max_alpha"],
    );
    for sh in shapes(&cfg.run.shapes)? {
        // (m, mode) -> uniform constant over the stable fields, per resolution
        let mut uniform: BTreeMap<(usize, &str), Vec<f64>> = BTreeMap::new();
        for n in per_shape(&sh, c.parabolic, c.kolmogorov) {
            let bx = desk(&sh, n);
            let fam = build_grids(&sh, &bx, cfg.dyadic.delta, cfg.dyadic.grids, cfg.run.seed)?;
            let cat = BallCatalog::new(&fam);
            let plan = GrandMaximalPlan::new(&fam.geom, &cat, cfg.operators.s, cfg.operators.pairs, cfg.run.seed);
            let fields = corpus(&sh, &bx, cfg.run.seed);
            let smooth: Vec<_> = keep(&fields, &c.stable_fields).into_iter().cloned().collect();
            let dt = measure_d_tilde(&fam, &smooth);
            let b = sample(|p| (2.0 * p.x[0]).sin() * p.t.cos(), &bx, "b");
            for &m in &c.m_list {
                let ker = AngularKernel::Harmonic(SphericalBasis::new(sh.n(), m, 1));
                let spec = SingularSpec::for_kernels(&sh, &bx, std::slice::from_ref(&ker), cfg.operators.split);
                let op = DiscreteOperator::build(&spec, &ker, &bx)?;
                let mut setup = SparseSetup::new(&fam, &cat, &plan, &op, dt);
                setup.lambda = c.lambda_factor / dt.max(1.0);
                setup.alpha0 = c.alpha0;
                setup.min_cells = c.min_cells;
                for (mode, label) in [(Mode::Plain, "plain"), (Mode::Commutator, "commutator")] {
                    let (mut all_sparse, mut worst_exc, mut all_finite, mut uni) = (true, 0.0f64, true, 0.0f64);
                    for f in &fields {
                        let (_, rep) = verify_domination(&setup, 0, 0, 0, f, mode, (mode == Mode::Commutator).then_some(&b))?;
                        all_sparse &= rep.sparse_ok;
                        worst_exc = worst_exc.max(rep.exceptional_fraction);
                        all_finite &= rep.constant.is_finite();
                        if c.stable_fields.contains(&f.name) {
                            uni = uni.max(rep.constant);
                        }
                        table.push(vec![
                            tag(&sh),
                            n.to_string(),
                            m.to_string(),
                            label.into(),
                            f.name.clone(),
                            rep.family_size.to_string(),
                            rep.sparse_ok.to_string(),
                            fmt(rep.constant),
                            fmt(rep.max_ratio),
                            fmt(rep.exceptional_fraction),
                            fmt(rep.max_alpha),
                        ]);
                    }
                    let key = format!("{},n={n},m={m},{label}", tag(&sh));
                    out.flag(6, format!("families_sparse[{key}]"), all_sparse);
                    out.le(6, format!("exceptional_fraction[{key}]"), worst_exc, c.budget);
                    out.flag(6, format!("constant_finite[{key}]"), all_finite);
                    uniform.entry((m, label)).or_default().push(uni);
                }
            }
        }
        for ((m, label), v) in &uniform {
            let key = format!("{},m={m},{label}", tag(&sh));
            out.le(6, format!("constant_stability[{key}]"), relative_spread(v[0], v[1]), c.stability);
            out.metric(format!("domination_constant[{key}]"), v[1]);
        }
    }
    out.table(table);
    Ok(())
}

//! Criterion 5: L^2 and weak-(1,1) ratios of T_km and M#_{T,s}, and the
//! pointwise comparison of M# with the maximal function.

use kfp_core::discretization::corpus;
use kfp_core::dyadic::{build_grids, BallCatalog};
use kfp_core::harmonics::SphericalBasis;
use kfp_core::operators::{grand_maximal, l2_ratio, weak_l1_probe, weak_ratio, AngularKernel, DiscreteOperator, GrandMaximalPlan, SingularSpec};
use kfp_core::stats::loglog_slope;

use super::{desk, per_shape, shapes, tag};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.operators;
    let mut table = Table::new("operator_ratios", &["shape", "n", "m", "field", "l2_ratio", "weak_ratio_t", "weak_ratio_msharp", "msharp_over_m", "center_defect"]);
    for sh in shapes(&cfg.run.shapes)? {
        let n = per_shape(&sh, c.parabolic, c.kolmogorov);
        let bx = desk(&sh, n);
        let fam = build_grids(&sh, &bx, cfg.dyadic.delta, cfg.dyadic.grids, cfg.run.seed)?;
        let cat = BallCatalog::new(&fam);
        let plan = GrandMaximalPlan::new(&fam.geom, &cat, c.s, c.pairs, cfg.run.seed);
        let fields = corpus(&sh, &bx, cfg.run.seed);
        let mut l2_by_m = Vec::new();
        for &m in &c.m_list {
            let ker = AngularKernel::Harmonic(SphericalBasis::new(sh.n(), m, 1));
            let spec = SingularSpec::for_kernels(&sh, &bx, std::slice::from_ref(&ker), c.split);
            let op = DiscreteOperator::build(&spec, &ker, &bx)?;
            let weak = weak_l1_probe(&op, &fields);
            let (mut l2, mut wsharp, mut cmax, mut everywhere) = (0.0f64, 0.0f64, 0.0f64, true);
            for (fi, f) in fields.iter().enumerate() {
                let r2 = l2_ratio(&op, f);
                let a = f.abs();
                let g = grand_maximal(&op, &plan, f, None);
                let mf = cat.maximal(&a);
                let ws = weak_ratio(&g, f);
                let mut cf = 0.0f64;
                for (gv, mv) in g.values.iter().zip(&mf.values) {
                    if *mv > 0.0 {
                        cf = cf.max(gv / mv);
                    } else if *gv > 0.0 {
                        everywhere = false;
                    }
                }
                l2 = l2.max(r2);
                wsharp = wsharp.max(ws);
                cmax = cmax.max(cf);
                table.push(vec![tag(&sh), n.to_string(), m.to_string(), f.name.clone(), fmt(r2), fmt(weak.ratios[fi]), fmt(ws), fmt(cf), fmt(op.center_defect())]);
            }
            out.finite(5, format!("l2_ratio[{},m={m}]", tag(&sh)), l2);
            out.finite(5, format!("weak_ratio_t[{},m={m}]", tag(&sh)), weak.max);
            out.finite(5, format!("weak_ratio_msharp[{},m={m}]", tag(&sh)), wsharp);
            out.finite(5, format!("msharp_le_c_m[{},m={m}]", tag(&sh)), if everywhere { cmax } else { f64::INFINITY });
            out.metric(format!("msharp_constant[{},m={m}]", tag(&sh)), cmax);
            l2_by_m.push(l2);
        }
        let ms: Vec<f64> = c.m_list.iter().map(|&m| m as f64).collect();
        if ms.len() >= 2 {
            let slope = loglog_slope(&ms, &l2_by_m);
            out.le(5, format!("l2_growth_slope[{}]", tag(&sh)), slope, (sh.n() as f64 + 1.0) / 2.0 + c.slope_margin);
        }
    }
    out.table(table);
    Ok(())
}

//! Criterion 7: A_p characteristics, the weighted sparse and PDE sweeps and
//! the commutator delta-sweep.

use kfp_core::discretization::{corpus, sample, GridField};
use kfp_core::dyadic::{build_grids, measure_d_tilde, BallCatalog};
use kfp_core::estimates::{commutator_delta_sweep, identity_coefficients, u_corpus, weighted_hessian_sweep, SweepInput};
use kfp_core::function_spaces::{ap_characteristic, CubeFamily, Weight};
use kfp_core::harmonics::SphericalBasis;
use kfp_core::operators::{AngularKernel, DiscreteOperator, GrandMaximalPlan, SingularSpec};
use kfp_core::sparse::SparseSetup;

use super::{desk, keep, per_shape, shapes, tag, weight_center};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.weights;
    let mut sweep_table = Table::new("weighted_sweep", &["shape", "p", "gamma", "ap", "sparse_ratio", "sparse_norm", "pde_ratio"]);
    let mut comm_table = Table::new("commutator_sweep", &["shape", "delta", "delta_k_bmo", "sparse_bound"]);
    for sh in shapes(&c.shapes)? {
        let n = per_shape(&sh, c.parabolic, c.kolmogorov);
        let bx = desk(&sh, n);
        let fam = build_grids(&sh, &bx, cfg.dyadic.delta, cfg.dyadic.grids, cfg.run.seed)?;
        let cubes = CubeFamily::from_grids(&fam);
        let z0 = weight_center(&sh);

        let one = Weight::one(&GridField::zeros(&bx, "z"));
        let mut unit_ok = true;
        for &p in &c.p {
            unit_ok &= ap_characteristic(&one, p, &cubes) == 1.0;
        }
        out.flag(7, format!("unit_weight_ap_one[{}]", tag(&sh)), unit_ok);
        let w = Weight::power(&fam.geom, &z0, c.duality_gamma)?;
        let mut dual = 0.0f64;
        for &p in &c.p {
            let a = ap_characteristic(&w, p, &cubes);
            let b = ap_characteristic(&w.dual(p), p / (p - 1.0), &cubes);
            let want = a.powf(1.0 / (p - 1.0));
            dual = dual.max((b - want).abs() / want);
        }
        out.le(7, format!("duality_identity[{}]", tag(&sh)), dual, c.duality_tol);

        let coeff = identity_coefficients(&sh, &bx)?;
        let fields = corpus(&sh, &bx, cfg.run.seed);
        let uc = u_corpus(&sh, &bx);
        let input = SweepInput { shape: &sh, family: &fam, cubes: &cubes, coeff: &coeff, corpus: &fields, u_corpus: &uc, z0, eps: c.eps.clone(), margin: c.margin };
        for &p in &c.p {
            let s = weighted_hessian_sweep(&input, p)?;
            for q in &s.points {
                sweep_table.push(vec![tag(&sh), fmt(p), fmt(q.gamma), fmt(q.ap), fmt(q.sparse_ratio), fmt(q.sparse_norm), fmt(q.pde_ratio)]);
            }
            let key = format!("{},p={p}", tag(&sh));
            let (lo, hi) = s.points.iter().fold((f64::INFINITY, 0.0f64), |(a, b), q| (a.min(q.ap), b.max(q.ap)));
            out.ge(7, format!("ap_span_decades[{key}]"), (hi / lo).log10(), c.min_decades);
            let lower = if (p - 2.0).abs() < 1e-12 { 0.5 } else { f64::NEG_INFINITY };
            out.within(7, format!("sparse_exponent[{key}]"), s.sparse_exponent, lower, s.target + 0.25);
            out.le(10, format!("thm11_pde_exponent_vs_sparse[{key}]"), s.pde_exponent - s.sparse_exponent, cfg.estimates.exponent_slack);
            out.metric(format!("sparse_exponent[{key}]"), s.sparse_exponent);
            out.metric(format!("norm_exponent[{key}]"), s.norm_exponent);
            out.metric(format!("pde_exponent[{key}]"), s.pde_exponent);
            out.metric(format!("kappa[{key}]"), s.kappa);
        }

        let cat = BallCatalog::new(&fam);
        let plan = GrandMaximalPlan::new(&fam.geom, &cat, cfg.operators.s, cfg.operators.pairs, cfg.run.seed);
        let smooth: Vec<_> = keep(&fields, &cfg.sparse.stable_fields).into_iter().cloned().collect();
        let dt = measure_d_tilde(&fam, &smooth);
        let ker = AngularKernel::Harmonic(SphericalBasis::new(sh.n(), c.commutator_m, 1));
        let spec = SingularSpec::for_kernels(&sh, &bx, std::slice::from_ref(&ker), cfg.operators.split);
        let op = DiscreteOperator::build(&spec, &ker, &bx)?;
        let mut setup = SparseSetup::new(&fam, &cat, &plan, &op, dt);
        setup.lambda = cfg.sparse.lambda_factor / dt.max(1.0);
        let b0 = sample(|p| (2.0 * p.x[0]).sin() * p.t.cos(), &bx, "b0");
        let cs = commutator_delta_sweep(&setup, &b0, &fields[0], &c.deltas, &cubes, c.k_cut, 2.0, None)?;
        for i in 0..cs.deltas.len() {
            comm_table.push(vec![tag(&sh), fmt(cs.deltas[i]), fmt(cs.bmo[i]), fmt(cs.sparse_bound[i])]);
        }
        out.within(7, format!("commutator_delta_slope[{}]", tag(&sh)), cs.slope, 1.0 - c.slope_band, 1.0 + c.slope_band);
    }
    out.table(sweep_table);
    out.table(comm_table);
    Ok(())
}

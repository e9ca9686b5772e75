//! Criterion 9: Luxemburg norms, the Phi-function catalog and maximal
//! function ratios in Orlicz, variable and weighted spaces.

use kfp_core::discretization::{corpus, integrate, sample, LatticeBox};
use kfp_core::dyadic::{build_grids, BallCatalog};
use kfp_core::function_spaces::{holder_ratio, maximal_probe, phi_checks, variable_ap_characteristic, CubeFamily, PhiFunction, Space, VariableExponent, Weight};
use kfp_core::stats::relative_spread;
use kfp_core::OperatorShape;

use super::{desk, per_shape, shapes, tag, weight_center};
use crate::config::OrliczConfig;
use crate::{fmt, CliError, Config, SuiteOutput, Table};

pub fn exponent_field(c: &OrliczConfig, bx: &LatticeBox) -> Vec<f64> {
    sample(|p| c.variable_base + c.variable_amp * p.x[0].sin() * p.t.cos(), bx, "p").values
}

pub fn catalog(c: &OrliczConfig, bx: &LatticeBox) -> Vec<PhiFunction> {
    let cells = bx.len();
    let a = sample(|p| 1.0 + 0.5 * p.x[0].sin() * p.t.cos(), bx, "a").values;
    vec![
        PhiFunction::power(2.0, cells),
        PhiFunction::DoublePhase { p: c.double_phase[0], q: c.double_phase[1], a },
        PhiFunction::Variable { p: exponent_field(c, bx) },
        PhiFunction::LogPower { p: 1.5, cells },
    ]
}

fn spaces(c: &OrliczConfig, sh: &OperatorShape, bx: &LatticeBox, geom: &kfp_core::dyadic::CellGeometry) -> Result<Vec<Space>, CliError> {
    let w = Weight::power(geom, &weight_center(sh), c.weight_gamma)?;
    let cat = catalog(c, bx);
    Ok(vec![
        Space::Weighted { p: 2.0, w: Some(w.w.values.clone()) },
        Space::Variable { p: exponent_field(c, bx), w: None },
        Space::Orlicz(cat[1].clone()),
    ])
}

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.orlicz;
    let mut table = Table::new("maximal_probe", &["shape", "n", "space", "field", "ratio"]);
    let mut phi_table = Table::new("phi_catalog", &["shape", "n", "phi", "checks_passed", "inc_p", "dec_q", "holder_ratio"]);
    for sh in shapes(&cfg.run.shapes)? {
        let mut probe_max: Vec<Vec<f64>> = Vec::new();
        let mut names = Vec::new();
        for n in per_shape(&sh, c.parabolic, c.kolmogorov) {
            let bx = desk(&sh, n);
            let fam = build_grids(&sh, &bx, cfg.dyadic.delta, cfg.dyadic.grids, cfg.run.seed)?;
            let cubes = CubeFamily::from_grids(&fam);
            let cat = BallCatalog::new(&fam);
            let fields = corpus(&sh, &bx, cfg.run.seed);
            let key = format!("{},{n}", tag(&sh));

            let mut lux = 0.0f64;
            for &p in &c.lp {
                let phi = PhiFunction::power(p, bx.len());
                for f in &fields {
                    let want = integrate(f, None, Some(p));
                    if want > 0.0 {
                        lux = lux.max((phi.norm(f)? - want).abs() / want);
                    }
                }
            }
            out.le(9, format!("luxemburg_vs_lp[{key}]"), lux, c.luxemburg_tol);

            let mut unit = true;
            for (k, phi) in catalog(c, &bx).iter().enumerate() {
                for f in &fields {
                    let nf = phi.norm(f)?;
                    if nf > 0.0 {
                        unit &= phi.modular(&f.map(|v| v / nf, "unit")) <= 1.0;
                    }
                }
                let rep = phi_checks(phi, &cubes, bx.cell_volume(), cfg.run.seed)?;
                let h = holder_ratio(phi, &bx, c.holder_pairs, cfg.run.seed + k as u64)?;
                out.flag(9, format!("phi_conditions[{key},{}]", phi.name()), rep.passed);
                out.le(9, format!("holder_ratio[{key},{}]", phi.name()), h, c.holder_bound);
                phi_table.push(vec![tag(&sh), n.to_string(), phi.name().into(), rep.passed.to_string(), fmt(rep.inc_p), fmt(rep.dec_q), fmt(h)]);
            }
            out.flag(9, format!("unit_ball[{key}]"), unit);

            let pv = VariableExponent::new(sample(|p| c.variable_base + c.variable_amp * p.x[0].sin() * p.t.cos(), &bx, "p"))?;
            out.finite(9, format!("log_holder[{key}]"), pv.log_holder_constant(&fam.geom, 2000, cfg.run.seed));
            let w = Weight::power(&fam.geom, &weight_center(&sh), c.weight_gamma)?;
            out.finite(9, format!("variable_ap[{key}]"), variable_ap_characteristic(&w, &pv, &cubes)?);

            let mut row = Vec::new();
            names.clear();
            for space in spaces(c, &sh, &bx, &fam.geom)? {
                let probe = maximal_probe(&space, &cat, &fields)?;
                let mut stable_max = 0.0f64;
                let nonzero: Vec<_> = fields.iter().filter(|f| f.sup_abs() > 0.0).collect();
                for (f, r) in nonzero.iter().zip(&probe.ratios) {
                    table.push(vec![tag(&sh), n.to_string(), space.name(), f.name.clone(), fmt(*r)]);
                    if c.stable_fields.contains(&f.name) {
                        stable_max = stable_max.max(*r);
                    }
                }
                out.finite(9, format!("maximal_ratio[{key},{}]", space.name()), probe.max);
                row.push(stable_max);
                names.push(space.name());
            }
            probe_max.push(row);
        }
        for (i, name) in names.iter().enumerate() {
            out.le(9, format!("maximal_stability[{},{name}]", tag(&sh)), relative_spread(probe_max[0][i], probe_max[1][i]), c.stability);
        }
    }
    out.table(table);
    out.table(phi_table);
    Ok(())
}

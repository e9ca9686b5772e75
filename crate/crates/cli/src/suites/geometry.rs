//! Criterion 1: group axioms, dilation compatibility and norm homogeneity.

use kfp_core::geometry::{order_beta_probe, quasi_symmetry_constant, seeded_rng, Point};
use rand::RngExt;

use super::{shapes, tag};
use crate::{fmt, CliError, Config, SuiteOutput, Table};

fn rel(a: &Point, b: &Point) -> f64 {
    a.euclid_dist(b) / (1.0 + a.euclid_dist(&Point::origin()).max(b.euclid_dist(&Point::origin())))
}

pub fn run(cfg: &Config, out: &mut SuiteOutput) -> Result<(), CliError> {
    let c = &cfg.geometry;
    let mut table = Table::new("group_residuals", &["shape", "axiom", "max_residual", "samples"]);
    for sh in shapes(&cfg.run.shapes)? {
        let mut rng = seeded_rng(cfg.run.seed);
        let mut worst = [0.0f64; 6];
        let e = Point::origin();
        for _ in 0..c.samples {
            let z = sh.random_point(&mut rng, 1.5);
            let w = sh.random_point(&mut rng, 1.5);
            let v = sh.random_point(&mut rng, 1.5);
            let r = (rng.random_range(-2.0..2.0f64)).exp();
            let assoc = rel(&sh.compose(&sh.compose(&z, &w), &v), &sh.compose(&z, &sh.compose(&w, &v)));
            let inv = rel(&sh.compose(&z, &sh.invert(&z)), &e).max(rel(&sh.compose(&sh.invert(&z), &z), &e));
            let ident = rel(&sh.compose(&e, &z), &z).max(rel(&sh.compose(&z, &e), &z));
            let dil = rel(&sh.dilate(r, &sh.compose(&z, &w)), &sh.compose(&sh.dilate(r, &z), &sh.dilate(r, &w)));
            let nz = sh.hom_norm(&z, c.norm_tol)?;
            let nrz = sh.hom_norm(&sh.dilate(r, &z), c.norm_tol)?;
            let hom = (nrz - r * nz).abs() / (r * nz);
            let dsym = (sh.quasi_distance(&z, &w) - sh.quasi_distance(&w, &z)).abs() / sh.quasi_distance(&z, &w).max(1e-300);
            for (o, x) in worst.iter_mut().zip([assoc, inv, ident, dil, hom, dsym]) {
                *o = o.max(x);
            }
        }
        let names = ["associativity", "inverse", "identity", "dilation_automorphism", "norm_homogeneity", "distance_symmetry"];
        for (name, w) in names.iter().zip(worst) {
            out.le(1, format!("{name}[{}]", tag(&sh)), w, c.tol);
            table.push(vec![tag(&sh), name.to_string(), fmt(w), c.samples.to_string()]);
        }
        let qs = quasi_symmetry_constant(&sh, c.samples, cfg.run.seed);
        out.metric(format!("quasi_symmetry[{}]", tag(&sh)), qs);
        let beta = order_beta_probe(&sh, c.beta_samples.max(1000), cfg.run.seed);
        out.metric(format!("order_beta[{}]", tag(&sh)), beta.beta);
        out.metric(format!("order_k_tilde[{}]", tag(&sh)), beta.k_tilde);
    }
    out.table(table);
    Ok(())
}

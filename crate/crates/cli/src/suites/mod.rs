//! One runner per suite. Every runner is deterministic in (config, seed).

mod dyadic;
mod estimates;
mod geometry;
mod harmonics;
mod kernels;
mod operators;
mod orlicz;
mod sparse;
mod weights;

use kfp_core::discretization::{GridField, LatticeBox};
use kfp_core::geometry::Point;
use kfp_core::OperatorShape;

use crate::{CliError, Config, SuiteOutput};

pub fn run_suite(name: &str, cfg: &Config) -> Result<SuiteOutput, CliError> {
    let mut out = SuiteOutput::new(name);
    match name {
        "geometry" => geometry::run(cfg, &mut out)?,
        "kernels" => kernels::run(cfg, &mut out)?,
        "harmonics" => harmonics::run(cfg, &mut out)?,
        "dyadic" => dyadic::run(cfg, &mut out)?,
        "operators" => operators::run(cfg, &mut out)?,
        "sparse" => sparse::run(cfg, &mut out)?,
        "weights" => weights::run(cfg, &mut out)?,
        "orlicz" => orlicz::run(cfg, &mut out)?,
        "estimates" => estimates::run(cfg, &mut out)?,
        other => return Err(CliError::Config(format!("unknown suite '{other}'"))),
    }
    Ok(out)
}

fn shapes(names: &[String]) -> Result<Vec<OperatorShape>, CliError> {
    names.iter().map(|s| OperatorShape::by_name(s).ok_or_else(|| CliError::Config(format!("unknown shape '{s}'")))).collect()
}

fn desk(shape: &OperatorShape, n: usize) -> LatticeBox {
    LatticeBox::desk(shape, 2.0, 4.0, n)
}

/// Pick the per-shape entry of a (parabolic, kolmogorov) config pair.
fn per_shape<T: Copy>(shape: &OperatorShape, parabolic: T, kolmogorov: T) -> T {
    if shape.n() == 1 {
        parabolic
    } else {
        kolmogorov
    }
}

/// Interior point near the box center, off the lattice symmetry planes.
fn weight_center(shape: &OperatorShape) -> Point {
    let mut z0 = Point::origin();
    z0.x[0] = 0.013;
    if shape.n() > 1 {
        z0.x[1] = 0.007;
    }
    z0.t = 2.011;
    z0
}

fn tag(shape: &OperatorShape) -> String {
    shape.name()
}

fn keep<'a>(fields: &'a [GridField], names: &[String]) -> Vec<&'a GridField> {
    fields.iter().filter(|f| names.contains(&f.name)).collect()
}

//! Shared fixtures for the criterion benchmarks.

use kfp_core::discretization::{corpus, GridField, LatticeBox};
use kfp_core::dyadic::{build_grids, measure_d_tilde, BallCatalog, GridFamily};
use kfp_core::harmonics::SphericalBasis;
use kfp_core::operators::{AngularKernel, DiscreteOperator, GrandMaximalPlan, SingularSpec};
use kfp_core::sparse::SparseSetup;
use kfp_core::OperatorShape;

pub const SEED: u64 = 7;

/// Everything the operator and sparse benches need at one resolution.
pub struct Fixture {
    pub shape: OperatorShape,
    pub bx: LatticeBox,
    pub family: GridFamily,
    pub catalog: BallCatalog,
    pub plan: GrandMaximalPlan,
    pub kernel: AngularKernel,
    pub spec: SingularSpec,
    pub op: DiscreteOperator,
    pub fields: Vec<GridField>,
    pub d_tilde: f64,
}

impl Fixture {
    pub fn new(shape: OperatorShape, n: usize, m: usize) -> Self {
        let bx = LatticeBox::desk(&shape, 2.0, 4.0, n);
        let family = build_grids(&shape, &bx, 0.5, 3, SEED).expect("grids");
        let catalog = BallCatalog::new(&family);
        let plan = GrandMaximalPlan::new(&family.geom, &catalog, 5.0, 32, SEED);
        let kernel = AngularKernel::Harmonic(SphericalBasis::new(shape.n(), m, 1));
        let spec = SingularSpec::for_kernels(&shape, &bx, std::slice::from_ref(&kernel), 4.0);
        let op = DiscreteOperator::build(&spec, &kernel, &bx).expect("operator");
        let fields = corpus(&shape, &bx, SEED);
        let d_tilde = measure_d_tilde(&family, &fields[..1]);
        Fixture { shape, bx, family, catalog, plan, kernel, spec, op, fields, d_tilde }
    }

    pub fn setup(&self) -> SparseSetup<'_> {
        let mut s = SparseSetup::new(&self.family, &self.catalog, &self.plan, &self.op, self.d_tilde);
        s.lambda = 0.25 / self.d_tilde.max(1.0);
        s
    }
}

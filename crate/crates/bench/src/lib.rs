//! Fixtures shared by the criterion benches.

use lshade_memetic::gnbg::ParamRange;
use lshade_memetic::{make_instance, InstanceSpec, ProblemInstance, RunRng};
use rand::{Rng, SeedableRng};

/// A rotated instance with `components` components in `dim` dimensions.
pub fn instance(dim: usize, components: usize) -> ProblemInstance {
    let spec = InstanceSpec {
        dim,
        components,
        rotation: true,
        ..InstanceSpec::default()
    };
    make_instance(&spec, 7).expect("valid bench spec")
}

/// A single smooth basin; the polish converges on it quickly.
pub fn smooth_instance(dim: usize) -> ProblemInstance {
    let spec = InstanceSpec {
        dim,
        components: 1,
        mu: ParamRange::new(0.0, 0.0),
        omega: ParamRange::new(0.0, 0.0),
        ..InstanceSpec::default()
    };
    make_instance(&spec, 11).expect("valid bench spec")
}

/// `count` uniform points inside the instance box.
pub fn points(inst: &ProblemInstance, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RunRng::seed_from_u64(seed);
    let b = inst.bounds();
    (0..count)
        .map(|_| (0..inst.dim()).map(|_| rng.random_range(b.lb..b.ub)).collect())
        .collect()
}

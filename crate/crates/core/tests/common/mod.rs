#![allow(dead_code)]

use std::sync::Arc;

use bdescent::experiments::{builtin_objective, ObjectiveName};
use bdescent::objectives::Objective;
use bdescent::poisson::Source;
use bdescent::VecP;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Builtin {
    pub label: &'static str,
    pub name: ObjectiveName,
    pub obj: Arc<dyn Objective>,
    /// Half-width of the cube random points are drawn from.
    pub spread: f64,
}

/// Every built-in objective at the sizes the experiments use.
pub fn builtins() -> Vec<Builtin> {
    let make = |label, name, dim, n, spread| Builtin {
        label,
        name,
        obj: builtin_objective(name, dim, n, Source::Sine).unwrap(),
        spread,
    };
    vec![
        make("identity/2", ObjectiveName::Identity, 2, 0, 2.0),
        make("indefinite/3", ObjectiveName::Indefinite, 3, 0, 2.0),
        make("quartic/2", ObjectiveName::Quartic, 2, 0, 2.0),
        make("quartic/3", ObjectiveName::Quartic, 3, 0, 2.0),
        make("poisson-1d/63", ObjectiveName::Poisson, 1, 63, 1.0),
        make("poisson-2d/15", ObjectiveName::Poisson, 2, 15, 1.0),
    ]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cube_point(dim: usize, spread: f64, rng: &mut ChaCha8Rng) -> VecP {
    let c = (0..dim).map(|_| rng.gen_range(-spread..=spread)).collect();
    VecP::euclidean(c).unwrap()
}

pub fn e(c: &[f64]) -> VecP {
    VecP::euclidean(c.to_vec()).unwrap()
}

//! Seeded fixtures shared by the benchmarks.

use daebvp_core::synth::{random_bvp, random_pencil, PencilShape, SyntheticBvp, SyntheticPencil};
use daebvp_core::Pencil;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS_CONDITION: f64 = 1e4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pencil(shape: PencilShape, seed: u64) -> SyntheticPencil {
    random_pencil(&mut rng(seed), shape, CORPUS_CONDITION)
}

pub fn bvp(shape: PencilShape, seed: u64) -> SyntheticBvp {
    random_bvp(&mut rng(seed), shape, CORPUS_CONDITION)
}

/// Dense matrix with entries in `[-scale, scale]` for exponential benchmarks.
pub fn dense(n: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let p: Pencil = pencil(PencilShape { n1: n, n2: 0, nu: 1 }, seed).pencil;
    let a = p.a();
    a * (scale / a.amax().max(f64::MIN_POSITIVE))
}

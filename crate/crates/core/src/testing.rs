//! Random instance generators shared by unit tests, integration tests and
//! the `selftest` subcommand.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::EffectiveChannel;
use crate::sumrate::Precoder;

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// i.i.d. CN(0, 1) effective channel.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize) -> EffectiveChannel {
    EffectiveChannel::new(random_matrix(rng, m, k))
}

/// Random precoder scaled to full power.
pub fn random_precoder<R: Rng + ?Sized>(rng: &mut R, m: usize, k: usize, power: f64) -> Precoder {
    let w = random_matrix(rng, m, k);
    let n = w.norm();
    Precoder::new(w * Complex64::from(power.sqrt() / n), power)
}

use rand::Rng;
use rand_distr::StandardNormal;

/// Coefficient of variation of the fingerstick meter.
pub const SMBG_CV: f64 = 0.05;
pub const SMBG_MIN: f64 = 20.0;
pub const SMBG_MAX: f64 = 600.0;

/// A meter reading of `glucose` with multiplicative Gaussian error.
pub fn read_smbg<R: Rng>(glucose: f64, cv: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (glucose * (1.0 + cv * z)).clamp(SMBG_MIN, SMBG_MAX)
}

//! Random input parameters `(alpha, t)` on `S^{n-1} x [-R, R]`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::sphere_area;
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// One sampled direction/offset pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionOffsetSample {
    pub alpha: Vec<f64>,
    pub t: f64,
}

impl DirectionOffsetSample {
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha^T x - t`.
    #[inline]
    pub fn preactivation(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, xi) in self.alpha.iter().zip(x) {
            s += a * xi;
        }
        s - self.t
    }

    fn check(&self, n: usize, radius: f64) -> Result<()> {
        if self.alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.alpha.len() });
        }
        let norm = self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!("direction has norm {norm}, expected 1")));
        }
        if !(self.t.abs() <= radius) {
            return Err(Error::InvalidArgument(format!("offset {} outside [-{radius}, {radius}]", self.t)));
        }
        Ok(())
    }
}

/// User-supplied sampler for a non-uniform density.
pub trait PairSampler: Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> DirectionOffsetSample;
}

#[derive(Clone)]
pub enum DensityKind {
    Uniform,
    Custom(Arc<dyn PairSampler>),
}

impl fmt::Debug for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Uniform => f.write_str("Uniform"),
            DensityKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Density on `S^{n-1} x [-R, R]` with a declared positive floor.
///
/// Custom densities only need a sampler and the floor `p_min`; the bounds
/// never evaluate the density itself.
#[derive(Clone, Debug)]
pub struct SamplingDensity {
    n: usize,
    radius: f64,
    kind: DensityKind,
    p_min: f64,
}

impl SamplingDensity {
    pub fn uniform(n: usize, radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        check_radius(radius)?;
        let p_min = 1.0 / (2.0 * radius * sphere_area(n)?);
        Ok(Self { n, radius, kind: DensityKind::Uniform, p_min })
    }

    pub fn custom(n: usize, radius: f64, p_min: f64, sampler: Arc<dyn PairSampler>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        check_radius(radius)?;
        if !(p_min.is_finite() && p_min > 0.0) {
            return Err(Error::InvalidDensity(format!("p_min = {p_min} must be positive")));
        }
        Ok(Self { n, radius, kind: DensityKind::Custom(sampler), p_min })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// The density floor `P_min`; `1 / (2 R A_{n-1})` for the uniform kind.
    pub fn density_floor(&self) -> Result<f64> {
        if self.p_min.is_finite() && self.p_min > 0.0 {
            Ok(self.p_min)
        } else {
            Err(Error::InvalidDensity(format!("p_min = {}", self.p_min)))
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("radius {radius} must be positive")))
    }
}

/// Uniform draw from the unit sphere in `R^n`.
///
/// For `n = 1` the sphere is `{-1, +1}`; otherwise a vector of independent
/// standard normals is normalized.
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::InvalidDimension(0)),
        1 => Ok(vec![if rng.random_bool(0.5) { 1.0 } else { -1.0 }]),
        _ => loop {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-150 {
                v.iter_mut().for_each(|x| *x /= norm);
                break Ok(v);
            }
        },
    }
}

/// Draw `m` i.i.d. pairs from `density`.
pub fn sample_pairs<R: RngCore>(
    density: &SamplingDensity,
    m: usize,
    rng: &mut R,
) -> Result<Vec<DirectionOffsetSample>> {
    if m == 0 {
        return Err(Error::Empty("requested zero samples"));
    }
    let r = density.radius;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let s = match &density.kind {
            DensityKind::Uniform => {
                let alpha = sample_sphere(density.n, rng)?;
                let t = rng.random_range(-r..=r);
                DirectionOffsetSample { alpha, t }
            }
            DensityKind::Custom(sampler) => {
                let s = sampler.sample(rng);
                s.check(density.n, r)?;
                s
            }
        };
        out.push(s);
    }
    Ok(out)
}

/// Independent stream for one trial of a sweep.
///
/// The root seed keys the generator and the trial index selects the ChaCha
/// stream, so trials can be drawn in any order or in parallel.
pub fn trial_rng(root_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(trial);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_sphere_is_two_points() {
        let mut rng = trial_rng(3, 0);
        let mut seen = [false; 2];
        for _ in 0..200 {
            let v = sample_sphere(1, &mut rng).unwrap();
            assert!(v == [1.0] || v == [-1.0]);
            seen[(v[0] > 0.0) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn sphere_samples_are_unit() {
        let mut rng = trial_rng(11, 0);
        for n in [2, 3, 5, 17] {
            for _ in 0..100 {
                let v = sample_sphere(n, &mut rng).unwrap();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
        assert!(matches!(sample_sphere(0, &mut rng), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn circle_mean_is_centered() {
        let mut rng = trial_rng(5, 0);
        let mut mean = [0.0; 2];
        let draws = 100_000;
        for _ in 0..draws {
            let v = sample_sphere(2, &mut rng).unwrap();
            mean[0] += v[0];
            mean[1] += v[1];
        }
        for m in mean {
            assert!((m / draws as f64).abs() < 0.02);
        }
    }

    #[test]
    fn support_of_small_draw() {
        let d = SamplingDensity::uniform(1, 1.0).unwrap();
        let s = sample_pairs(&d, 4, &mut trial_rng(7, 0)).unwrap();
        assert_eq!(s.len(), 4);
        for p in s {
            assert!(p.alpha == [1.0] || p.alpha == [-1.0]);
            assert!((-1.0..=1.0).contains(&p.t));
        }
    }

    #[test]
    fn offsets_are_uniform() {
        let d = SamplingDensity::uniform(1, 1.0).unwrap();
        let s = sample_pairs(&d, 100_000, &mut trial_rng(1, 2)).unwrap();
        let mean = s.iter().map(|p| p.t).sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.02);

        let d = SamplingDensity::uniform(2, 2.0).unwrap();
        let s = sample_pairs(&d, 100_000, &mut trial_rng(1, 3)).unwrap();
        let frac = s.iter().filter(|p| (0.0..=2.0).contains(&p.t)).count() as f64 / s.len() as f64;
        assert!((frac - 0.5).abs() < 0.01);
        assert!(s.iter().all(|p| p.t.abs() <= 2.0));
    }

    #[test]
    fn empty_request_rejected() {
        let d = SamplingDensity::uniform(2, 1.0).unwrap();
        assert!(matches!(sample_pairs(&d, 0, &mut trial_rng(0, 0)), Err(Error::Empty(_))));
    }

    #[test]
    fn deterministic_and_stream_separated() {
        let d = SamplingDensity::uniform(3, 1.5).unwrap();
        let a = sample_pairs(&d, 50, &mut trial_rng(42, 9)).unwrap();
        let b = sample_pairs(&d, 50, &mut trial_rng(42, 9)).unwrap();
        let c = sample_pairs(&d, 50, &mut trial_rng(42, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn density_floor_values() {
        let d = SamplingDensity::uniform(1, 1.0).unwrap();
        assert_eq!(d.density_floor().unwrap(), 0.25);
        let d = SamplingDensity::uniform(2, 1.0).unwrap();
        assert!((d.density_floor().unwrap() - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((d.density_floor().unwrap() - 0.079577).abs() < 1e-6);
    }

    struct HalfLine;
    impl PairSampler for HalfLine {
        fn sample(&self, rng: &mut dyn RngCore) -> DirectionOffsetSample {
            DirectionOffsetSample { alpha: vec![1.0], t: rng.random_range(0.0..=1.0) }
        }
    }

    struct Broken;
    impl PairSampler for Broken {
        fn sample(&self, _rng: &mut dyn RngCore) -> DirectionOffsetSample {
            DirectionOffsetSample { alpha: vec![0.5], t: 0.0 }
        }
    }

    #[test]
    fn custom_density() {
        let d = SamplingDensity::custom(1, 1.0, 0.1, Arc::new(HalfLine)).unwrap();
        assert_eq!(d.density_floor().unwrap(), 0.1);
        let s = sample_pairs(&d, 10, &mut trial_rng(0, 0)).unwrap();
        assert!(s.iter().all(|p| p.t >= 0.0));

        assert!(matches!(SamplingDensity::custom(1, 1.0, 0.0, Arc::new(HalfLine)), Err(Error::InvalidDensity(_))));
        let bad = SamplingDensity::custom(1, 1.0, 0.1, Arc::new(Broken)).unwrap();
        assert!(sample_pairs(&bad, 1, &mut trial_rng(0, 0)).is_err());
    }
}

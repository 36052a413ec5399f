//! Seedable instance generation and text file formats.
//!
//! The generator is ChaCha8 seeded from the 64-bit seed. Uniform draws are
//! `low + (high - low) * u` with `u` in `[0, 1)`, Gaussian draws use the
//! ziggurat sampler from `rand_distr`. Both are platform independent, so a
//! config always produces the same coordinates bit for bit.

pub mod format;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::eval::{l1_distance, CostMatrix, Instance, InstanceKind, SiteSet};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub kind: InstanceKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub box_low: f64,
    pub box_high: f64,
    pub blob_std: f64,
    /// Number of blob centers; `None` means `ceil(n / 3)`.
    pub blob_centers: Option<usize>,
}

impl GenConfig {
    pub fn new(kind: InstanceKind, n: usize, d: usize, seed: u64) -> Self {
        GenConfig {
            kind,
            n,
            d,
            seed,
            box_low: 0.0,
            box_high: 100.0,
            blob_std: 1.0,
            blob_centers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::usage("n and d must be at least 1"));
        }
        if !(self.box_low < self.box_high) || !self.box_low.is_finite() || !self.box_high.is_finite() {
            return Err(Error::usage("box_low must be below box_high"));
        }
        if !(self.blob_std > 0.0) || !self.blob_std.is_finite() {
            return Err(Error::usage("blob_std must be positive"));
        }
        if self.blob_centers == Some(0) {
            return Err(Error::usage("blob_centers must be at least 1"));
        }
        Ok(())
    }

    pub fn centers(&self) -> usize {
        self.blob_centers.unwrap_or(self.n.div_ceil(3))
    }
}

/// Dispatches on `config.kind`.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    match config.kind {
        InstanceKind::Random => gen_random(config),
        InstanceKind::Blobs => gen_blobs(config),
        InstanceKind::External => Err(Error::usage("external instances are read from files, not generated")),
    }
}

/// `n` i.i.d. uniform points in the box.
pub fn gen_random(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    if config.kind != InstanceKind::Random {
        return Err(Error::usage("gen_random needs kind=random"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points = (0..config.n)
        .map(|_| (0..config.d).map(|_| uniform(&mut rng, config)).collect())
        .collect();
    Instance::new(points, InstanceKind::Random, Some(config.seed))
}

/// Isotropic Gaussian blobs around uniform centers, clamped to the box.
///
/// Point `i` belongs to center `i mod centers`.
pub fn gen_blobs(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    if config.kind != InstanceKind::Blobs {
        return Err(Error::usage("gen_blobs needs kind=blobs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centers: Vec<Vec<f64>> = (0..config.centers())
        .map(|_| (0..config.d).map(|_| uniform(&mut rng, config)).collect())
        .collect();
    let points = (0..config.n)
        .map(|i| {
            centers[i % centers.len()]
                .iter()
                .map(|&c| {
                    let z: f64 = rng.sample(StandardNormal);
                    (c + config.blob_std * z).clamp(config.box_low, config.box_high)
                })
                .collect()
        })
        .collect();
    Instance::new(points, InstanceKind::Blobs, Some(config.seed))
}

/// Blob centers for `config`, as drawn by [`gen_blobs`].
pub fn blob_centers(config: &GenConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok((0..config.centers())
        .map(|_| (0..config.d).map(|_| uniform(&mut rng, config)).collect())
        .collect())
}

fn uniform(rng: &mut ChaCha8Rng, config: &GenConfig) -> f64 {
    config.box_low + (config.box_high - config.box_low) * rng.random::<f64>()
}

/// ℓ1 costs from every demand point to every site.
pub fn cost_matrix_from_sites(instance: &Instance, sites: &SiteSet) -> Result<CostMatrix> {
    if instance.dim() != sites.dim() {
        return Err(Error::usage(format!(
            "instance dimension {} differs from site dimension {}",
            instance.dim(),
            sites.dim()
        )));
    }
    let rows = instance
        .points()
        .iter()
        .map(|a| sites.sites().iter().map(|b| l1_distance(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    CostMatrix::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_deterministic_and_boxed() {
        let c = GenConfig::new(InstanceKind::Random, 10, 2, 1);
        assert_eq!(gen_random(&c).unwrap(), gen_random(&c).unwrap());
        let c3 = GenConfig::new(InstanceKind::Random, 10, 3, 1);
        let inst = gen_random(&c3).unwrap();
        assert!(inst.points().iter().flatten().all(|&v| (0.0..=100.0).contains(&v)));
        assert_eq!(inst.dim(), 3);
        let other = gen_random(&GenConfig::new(InstanceKind::Random, 10, 2, 2)).unwrap();
        assert_ne!(gen_random(&c).unwrap(), other);
    }

    #[test]
    fn random_mean_near_center() {
        let inst = gen_random(&GenConfig::new(InstanceKind::Random, 1000, 2, 7)).unwrap();
        // std of the mean of 1000 U(0,100) draws is 100/sqrt(12000) ~ 0.913
        for l in 0..2 {
            let mean = inst.points().iter().map(|p| p[l]).sum::<f64>() / 1000.0;
            assert!((mean - 50.0).abs() <= 3.0, "coordinate {l} mean {mean}");
        }
    }

    #[test]
    fn blobs_stay_near_centers() {
        let mut outside = 0;
        let mut total = 0;
        for seed in 0..100 {
            let c = GenConfig::new(InstanceKind::Blobs, 9, 2, seed);
            assert_eq!(c.centers(), 3);
            let centers = blob_centers(&c).unwrap();
            let inst = gen_blobs(&c).unwrap();
            for (i, p) in inst.points().iter().enumerate() {
                let ctr = &centers[i % 3];
                total += 1;
                if p.iter().zip(ctr).any(|(a, b)| (a - b).abs() > 5.0) {
                    outside += 1;
                }
            }
        }
        // P(|z| > 5) per coordinate is ~5.7e-7
        assert!(outside <= 1, "{outside} of {total} points beyond 5 sigma");
    }

    #[test]
    fn three_points_form_one_blob() {
        for seed in 0..5 {
            let c = GenConfig::new(InstanceKind::Blobs, 3, 2, seed);
            assert_eq!(c.centers(), 1);
            let inst = gen_blobs(&c).unwrap();
            assert_eq!(inst, gen_blobs(&c).unwrap());
            let ctr = &blob_centers(&c).unwrap()[0];
            for p in inst.points() {
                assert!(l1_distance(p, ctr).unwrap() < 12.0);
            }
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut c = GenConfig::new(InstanceKind::Random, 0, 2, 0);
        assert!(gen_random(&c).is_err());
        c.n = 3;
        c.box_high = c.box_low;
        assert!(gen_random(&c).is_err());
        let mut b = GenConfig::new(InstanceKind::Blobs, 3, 2, 0);
        b.blob_std = 0.0;
        assert!(gen_blobs(&b).is_err());
        assert!(gen_blobs(&GenConfig::new(InstanceKind::Random, 3, 2, 0)).is_err());
    }

    #[test]
    fn example1_cost_matrix() {
        let inst = Instance::from_points(
            [1.0, 2.0, 4.0, 6.0, 10.0, 14.0].iter().map(|&v| vec![v]).collect(),
        )
        .unwrap();
        let c = cost_matrix_from_sites(&inst, &inst.as_sites()).unwrap();
        assert_eq!(c.row(0), &[0.0, 1.0, 3.0, 5.0, 9.0, 13.0]);
        assert_eq!(c.row(5), &[13.0, 12.0, 10.0, 8.0, 4.0, 0.0]);
        for i in 0..6 {
            assert_eq!(c.get(i, i), 0.0);
        }
        let one = Instance::from_points(vec![vec![2.0, 3.0]]).unwrap();
        let c1 = cost_matrix_from_sites(&one, &one.as_sites()).unwrap();
        assert_eq!(c1.to_rows(), vec![vec![0.0]]);
        let bad = SiteSet::new(vec![vec![1.0]]).unwrap();
        assert!(cost_matrix_from_sites(&one, &bad).is_err());
    }

    #[test]
    fn triangle_inequality_on_generated_sites() {
        let inst = gen_random(&GenConfig::new(InstanceKind::Random, 12, 3, 5)).unwrap();
        let c = cost_matrix_from_sites(&inst, &inst.as_sites()).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                for k in 0..12 {
                    assert!(c.get(i, k) <= c.get(i, j) + c.get(j, k) + 1e-9);
                }
            }
        }
    }
}

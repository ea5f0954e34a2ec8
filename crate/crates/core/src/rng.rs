//! Seeded, stream-splittable randomness.
//!
//! Every run owns exactly one [`RngState`]. The generator is ChaCha8 keyed by
//! the 64-bit seed with the 64-bit stream id selecting an independent
//! keystream, so ensembles derive per-run streams from `(base_seed, index)`
//! without any shared state and replay bit-for-bit on any platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Derives a fresh, independent state from this state's identity (not its
    /// position), for sub-tasks that need their own stream.
    pub fn fork(&self, sub_stream: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(self.stream)), sub_stream)
    }

    /// Fair ±1 coin.
    pub fn rademacher(&mut self) -> f64 {
        if self.inner.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn gaussian_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.standard_normal()).collect()
    }

    /// Uniform point on the unit sphere in R^dim (normalized Gaussian).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        assert!(dim > 0, "unit_vector needs dim >= 1");
        loop {
            let v = self.gaussian_vec(dim);
            let n = crate::vector::norm(&v);
            if n > 1e-300 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn binomial(&mut self, trials: u64, p: f64) -> u64 {
        if trials == 0 || p <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return trials;
        }
        Binomial::new(trials, p)
            .expect("binomial parameters validated above")
            .sample(&mut self.inner)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

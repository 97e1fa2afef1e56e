//! Minibatch index sampling for the stochastic gradient oracle.

use super::FiniteSumProblem;
use crate::rng::SplitMix64;
use crate::vecmath::Vector;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Each batch draws `batch_size` indices independently and uniformly.
    UniformWithReplacement,
    /// Each epoch shuffles all indices once and serves consecutive batches;
    /// requires `batch_size` to divide the sample count so that the
    /// per-epoch batch average reproduces the full gradient exactly.
    EpochPartition,
}

impl Sampling {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Sampling::UniformWithReplacement),
            "epoch" => Ok(Sampling::EpochPartition),
            other => Err(Error::config(format!(
                "unknown sampling mode '{other}' (expected uniform | epoch)"
            ))),
        }
    }
}

/// Owns the sampling stream for one run. Batches are unbiased: the
/// expectation of the batch gradient over the sampling distribution equals
/// the full gradient at every point.
#[derive(Debug, Clone)]
pub struct MinibatchOracle {
    num_samples: usize,
    batch_size: usize,
    sampling: Sampling,
    rng: SplitMix64,
    perm: Vec<usize>,
    pos: usize,
    batch: Vec<usize>,
}

impl MinibatchOracle {
    pub fn new(
        num_samples: usize,
        batch_size: usize,
        sampling: Sampling,
        seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if batch_size > num_samples {
            return Err(Error::config(format!(
                "batch_size {batch_size} exceeds sample count {num_samples}"
            )));
        }
        if sampling == Sampling::EpochPartition && !num_samples.is_multiple_of(batch_size) {
            return Err(Error::config(format!(
                "epoch partitioning needs batch_size to divide the sample count \
                 ({num_samples} % {batch_size} != 0)"
            )));
        }
        Ok(MinibatchOracle {
            num_samples,
            batch_size,
            sampling,
            rng: SplitMix64::new(seed),
            perm: (0..num_samples).collect(),
            pos: 0,
            batch: vec![0; batch_size],
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Draws the next index batch, advancing the stream.
    pub fn next_batch(&mut self) -> &[usize] {
        match self.sampling {
            Sampling::UniformWithReplacement => {
                for slot in self.batch.iter_mut() {
                    *slot = self.rng.next_index(self.num_samples);
                }
            }
            Sampling::EpochPartition => {
                if self.pos == 0 {
                    self.rng.shuffle(&mut self.perm);
                }
                self.batch
                    .copy_from_slice(&self.perm[self.pos..self.pos + self.batch_size]);
                self.pos = (self.pos + self.batch_size) % self.num_samples;
            }
        }
        &self.batch
    }

    /// Unbiased stochastic gradient at `x`: the mean sample gradient over a
    /// fresh batch.
    pub fn sample_gradient<T: Scalar>(
        &mut self,
        problem: &dyn FiniteSumProblem<T>,
        x: &Vector<T>,
    ) -> Vector<T> {
        self.next_batch();
        problem.batch_loss_grad(x, &self.batch).1
    }

    /// Mean sampled loss and gradient over a fresh batch (one draw for
    /// both).
    pub fn sample_loss_grad<T: Scalar>(
        &mut self,
        problem: &dyn FiniteSumProblem<T>,
        x: &Vector<T>,
    ) -> (T, Vector<T>) {
        self.next_batch();
        problem.batch_loss_grad(x, &self.batch)
    }
}

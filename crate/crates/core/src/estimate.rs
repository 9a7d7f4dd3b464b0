//! Monte Carlo means with standard errors, reduced deterministically.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::sampling::Streams;

/// Replicates are grouped in fixed-size chunks; partial statistics are merged in
/// chunk order, so the result does not depend on the number of worker threads.
const CHUNK: usize = 256;

/// Sample mean with its standard error `sd / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<S> {
    pub value: S,
    pub stderr: S,
    pub n_samples: usize,
}

impl<S: Real> Estimate<S> {
    /// An exactly known value.
    pub fn exact(value: S) -> Self {
        Estimate {
            value,
            stderr: S::zero(),
            n_samples: 0,
        }
    }

    /// `|value - target| <= k·stderr + slack`.
    pub fn agrees_with(&self, target: S, k: S, slack: S) -> bool {
        (self.value - target).abs() <= k * self.stderr + slack
    }
}

/// Welford accumulator; merged with Chan's pairwise formula.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator<S> {
    n: usize,
    mean: S,
    m2: S,
}

impl<S: Real> Default for Accumulator<S> {
    fn default() -> Self {
        Accumulator {
            n: 0,
            mean: S::zero(),
            m2: S::zero(),
        }
    }
}

impl<S: Real> Accumulator<S> {
    #[inline]
    pub fn push(&mut self, x: S) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / S::from_usize_lossy(self.n);
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let na = S::from_usize_lossy(self.n);
        let nb = S::from_usize_lossy(other.n);
        let nt = S::from_usize_lossy(n);
        let delta = other.mean - self.mean;
        self.mean += delta * nb / nt;
        self.m2 += other.m2 + delta * delta * na * nb / nt;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn estimate(&self) -> Estimate<S> {
        let stderr = if self.n >= 2 {
            let var = self.m2 / S::from_usize_lossy(self.n - 1);
            (var.max(S::zero()) / S::from_usize_lossy(self.n)).sqrt()
        } else {
            S::infinity()
        };
        Estimate {
            value: self.mean,
            stderr,
            n_samples: self.n,
        }
    }
}

pub(crate) fn check_count(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::config(format!(
            "at least two samples are needed for a standard error, got {n}"
        )));
    }
    Ok(())
}

/// Runs `sample` for replicates `0..n` of `streams`, each writing `width`
/// outputs, and returns one estimate per output.
pub fn monte_carlo_multi<S, F>(n: usize, width: usize, streams: &Streams, sample: F) -> Result<Vec<Estimate<S>>>
where
    S: Real,
    F: Fn(&mut ChaCha8Rng, &mut [S]) -> Result<()> + Sync,
{
    check_count(n)?;
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Result<Vec<Accumulator<S>>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut accs = vec![Accumulator::default(); width];
            let mut out = vec![S::zero(); width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = streams.replicate(i as u64).rng();
                sample(&mut rng, &mut out)?;
                for (a, v) in accs.iter_mut().zip(&out) {
                    a.push(*v);
                }
            }
            Ok(accs)
        })
        .collect();
    let mut total = vec![Accumulator::default(); width];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            t.merge(&p);
        }
    }
    Ok(total.iter().map(Accumulator::estimate).collect())
}

/// Scalar version of [`monte_carlo_multi`].
pub fn monte_carlo<S, F>(n: usize, streams: &Streams, sample: F) -> Result<Estimate<S>>
where
    S: Real,
    F: Fn(&mut ChaCha8Rng) -> Result<S> + Sync,
{
    let est = monte_carlo_multi(n, 1, streams, |rng, out| {
        out[0] = sample(rng)?;
        Ok(())
    })?;
    Ok(est[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Purpose;
    use rand::Rng;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut acc = Accumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let e = acc.estimate();
        assert!((e.value - mean).abs() < 1e-12);
        assert!((e.stderr - (var / 1000.0).sqrt()).abs() < 1e-12);

        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.estimate().value - mean).abs() < 1e-12);
        assert!((a.estimate().stderr - e.stderr).abs() < 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let s = Streams::new(5, Purpose::Custom(1));
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(5000, &s, |rng| Ok(rng.random::<f64>())).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert!((a.value - 0.5).abs() < 4.0 * a.stderr);
    }

    #[test]
    fn rejects_single_sample() {
        let s = Streams::new(5, Purpose::Custom(1));
        assert!(monte_carlo::<f64, _>(1, &s, |_| Ok(0.0)).is_err());
    }
}

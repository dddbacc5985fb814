//! Exact sampling of turning times by thinning.
//!
//! Candidate events arrive as a homogeneous Poisson process at the bound
//! rate; a candidate at which the true rate is `λ` is kept with probability
//! `λ/λ_max`. As long as `λ ≤ λ_max` holds everywhere, the kept events form
//! the inhomogeneous process with intensity `λ` and no time discretization
//! enters the event times.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningClock {
    lambda_max: f64,
    // candidate rate in simulation time: λ_max / ε²
    candidate_rate: f64,
}

impl ThinningClock {
    /// Clock for rates measured in fast time, run in the scaled time
    /// `τ = ε²t` (so candidates arrive at `λ_max/ε²`).
    pub fn new(lambda_max: f64, epsilon: f64) -> Self {
        assert!(lambda_max > 0.0 && epsilon > 0.0);
        Self {
            lambda_max,
            candidate_rate: lambda_max / (epsilon * epsilon),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn candidate_rate(&self) -> f64 {
        self.candidate_rate
    }

    /// Waiting time to the next candidate.
    #[inline]
    pub fn gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        -(1.0 - u).ln() / self.candidate_rate
    }

    /// Keeps a candidate with probability `rate/λ_max`.
    #[inline]
    pub fn accept<R: Rng + ?Sized>(&self, rng: &mut R, rate: f64) -> bool {
        rng.random::<f64>() * self.lambda_max < rate
    }
}

/// Time to the first kept event for a rate that may depend on elapsed time.
pub fn sample_run_length<R, F>(rng: &mut R, clock: &ThinningClock, mut rate: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> f64,
{
    let mut t = 0.0;
    loop {
        t += clock.gap(rng);
        if clock.accept(rng, rate(t)) {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_rate_mean_run_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let clock = ThinningClock::new(4.0, 1.0);
        let n = 100_000;
        let lambda = 1.5;
        let samples: Vec<f64> = (0..n).map(|_| sample_run_length(&mut rng, &clock, |_| lambda)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        // Exp(λ) has standard deviation 1/λ
        let sigma = (1.0 / lambda) / (n as f64).sqrt();
        assert!((mean - 1.0 / lambda).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn kolmogorov_smirnov_against_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let clock = ThinningClock::new(3.0, 1.0);
        let lambda = 1.0;
        let n = 100_000;
        let mut samples: Vec<f64> = (0..n).map(|_| sample_run_length(&mut rng, &clock, |_| lambda)).collect();
        samples.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, x) in samples.iter().enumerate() {
            let cdf = 1.0 - (-lambda * x).exp();
            d = d.max((cdf - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - cdf).abs());
        }
        // 1% critical value 1.628/√n
        assert!(d < 1.628 / (n as f64).sqrt(), "KS distance {d}");
    }

    #[test]
    fn time_dependent_rate() {
        // λ(t) = 2t has survival exp(−t²): mean √π/2
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            // the bound only has to cover the rate up to the sampled time
            let clock = ThinningClock::new(20.0, 1.0);
            let t = sample_run_length(&mut rng, &clock, |t| (2.0 * t).min(20.0));
            sum += t;
            sumsq += t * t;
        }
        let mean = sum / n as f64;
        let sd = (sumsq / n as f64 - mean * mean).sqrt() / (n as f64).sqrt();
        let target = std::f64::consts::PI.sqrt() / 2.0;
        assert!((mean - target).abs() < 3.0 * sd, "{mean} vs {target}");
    }

    #[test]
    fn acceptance_rate_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clock = ThinningClock::new(5.0, 0.5);
        let n = 200_000;
        let rate = 1.75;
        let kept = (0..n).filter(|_| clock.accept(&mut rng, rate)).count() as f64;
        let p = rate / 5.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((kept - n as f64 * p).abs() < 3.0 * sd);
        assert_eq!(clock.candidate_rate(), 20.0);
    }
}

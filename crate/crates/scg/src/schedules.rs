//! Hyperparameter schedules for the optimizer: the four per-step sequences
//! `(alpha_n, beta_n, gamma_n, delta_n)` plus the fixed scalars `zeta`
//! (momentum bias-correction base) and `theta` (preconditioner decay).
//!
//! Admissible ranges, enforced at construction and never at evaluation time:
//!
//! ```text
//! alpha_n in (0,1)    beta_n in [0,1)    gamma_n >= 0    delta_n in [0,1/2]
//! zeta in [0,1)       theta in [0,1)
//! ```
//!
//! Two regimes are provided:
//!
//! - **Constant**: every step returns `(alpha0, beta0, gamma0, delta0)`.
//!   An optional cosine modulation of `alpha` with period `p` maps step `n`
//!   to `alpha0 * (1 + cos(pi * (n mod p) / p)) / 2`; it is offered for
//!   replication parity with common training setups and sits outside the
//!   schedule conditions the convergence analysis assumes.
//! - **Diminishing**: `alpha_n = alpha0 / (n+1)^eta` with `eta in (0,1)`,
//!   and geometric `beta_n = beta0 * decay_base^n` (likewise `gamma_n`,
//!   `delta_n`). Indexing starts at `n = 0`, so the initial values are the
//!   configured ones and must already be admissible; in particular
//!   `delta0 <= 1/2`. The step sizes sum to infinity for every
//!   `eta in (0,1)` and are square-summable for `eta > 1/2`; the products
//!   `alpha_n * beta_n` etc. are always summable because the other factor
//!   decays geometrically. `gamma_n` is nonincreasing by construction.
//!
//! The derived sequence `kappa_n = alpha_n * (1 - beta_n) * (1 + gamma_n)
//! / (1 - zeta^(n+1))` must be nonincreasing for the diminishing-rate bound
//! to apply; [`HyperSchedule::check_kappa_monotone`] reports the steps where
//! it is not. Violations are reported, never fatal.

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Constant,
    Diminishing,
}

/// The schedule evaluated at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperAt<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
}

/// Immutable schedule configuration; shareable across concurrent runs.
#[derive(Debug, Clone)]
pub struct HyperSchedule<T> {
    regime: Regime,
    alpha0: T,
    beta0: T,
    gamma0: T,
    delta0: T,
    zeta: T,
    theta: T,
    eta: T,
    decay_base: T,
    cosine_period: Option<u64>,
}

impl<T: Scalar> HyperSchedule<T> {
    /// Constant-rate schedule.
    pub fn constant(alpha0: T, beta0: T, gamma0: T, delta0: T, zeta: T, theta: T) -> Result<Self> {
        let s = HyperSchedule {
            regime: Regime::Constant,
            alpha0,
            beta0,
            gamma0,
            delta0,
            zeta,
            theta,
            eta: T::from_f64(0.5),
            decay_base: T::from_f64(0.5),
            cosine_period: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Diminishing-rate schedule: `alpha0 / (n+1)^eta` steps and geometric
    /// `beta`, `gamma`, `delta` with the given base.
    #[allow(clippy::too_many_arguments)]
    pub fn diminishing(
        alpha0: T,
        eta: T,
        beta0: T,
        gamma0: T,
        delta0: T,
        decay_base: T,
        zeta: T,
        theta: T,
    ) -> Result<Self> {
        let s = HyperSchedule {
            regime: Regime::Diminishing,
            alpha0,
            beta0,
            gamma0,
            delta0,
            zeta,
            theta,
            eta,
            decay_base,
            cosine_period: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Enables cosine modulation of `alpha` (constant regime only).
    pub fn with_cosine(mut self, period: u64) -> Result<Self> {
        if self.regime != Regime::Constant {
            return Err(Error::config(
                "cosine modulation is only available in the constant regime",
            ));
        }
        if period == 0 {
            return Err(Error::config("cosine period must be >= 1"));
        }
        self.cosine_period = Some(period);
        Ok(self)
    }

    /// Returns a copy with a different `gamma0` (used by reduction checks).
    pub fn with_gamma0(&self, gamma0: T) -> Result<Self> {
        let mut s = self.clone();
        s.gamma0 = gamma0;
        s.validate()?;
        Ok(s)
    }

    /// Returns a copy with a different `delta0` (used by reduction checks).
    pub fn with_delta0(&self, delta0: T) -> Result<Self> {
        let mut s = self.clone();
        s.delta0 = delta0;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        let half = T::from_f64(0.5);
        // In the diminishing regime alpha_n = alpha0 / (n+1)^eta, so the
        // closed upper boundary alpha0 = 1 is accepted there: every later
        // step is strictly interior.
        let alpha_ok = match self.regime {
            Regime::Constant => self.alpha0 > zero && self.alpha0 < one,
            Regime::Diminishing => self.alpha0 > zero && self.alpha0 <= one,
        };
        if !alpha_ok {
            return Err(Error::config(match self.regime {
                Regime::Constant => "alpha0 must lie in (0, 1)",
                Regime::Diminishing => "alpha0 must lie in (0, 1]",
            }));
        }
        if !(self.beta0 >= zero && self.beta0 < one) {
            return Err(Error::config("beta0 must lie in [0, 1)"));
        }
        if self.gamma0.is_nan() || self.gamma0 < zero {
            return Err(Error::config("gamma0 must be >= 0"));
        }
        if !(self.delta0 >= zero && self.delta0 <= half) {
            return Err(Error::config("delta0 must lie in [0, 1/2]"));
        }
        if !(self.zeta >= zero && self.zeta < one) {
            return Err(Error::config("zeta must lie in [0, 1)"));
        }
        if !(self.theta >= zero && self.theta < one) {
            return Err(Error::config("theta must lie in [0, 1)"));
        }
        if self.regime == Regime::Diminishing {
            if !(self.eta > zero && self.eta < one) {
                return Err(Error::config("eta must lie in (0, 1)"));
            }
            if !(self.decay_base > zero && self.decay_base < one) {
                return Err(Error::config("decay_base must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Evaluates the schedule at step `n`. Pure: equal inputs give
    /// bitwise-equal outputs.
    pub fn eval(&self, n: u64) -> HyperAt<T> {
        match self.regime {
            Regime::Constant => {
                let alpha = match self.cosine_period {
                    None => self.alpha0,
                    Some(p) => {
                        let t = T::from_f64((n % p) as f64);
                        let period = T::from_f64(p as f64);
                        let half = T::from_f64(0.5);
                        half * self.alpha0 * (T::one() + (T::PI() * t / period).cos())
                    }
                };
                HyperAt {
                    alpha,
                    beta: self.beta0,
                    gamma: self.gamma0,
                    delta: self.delta0,
                }
            }
            Regime::Diminishing => {
                let np1 = T::from_f64((n + 1) as f64);
                let decay = geometric(self.decay_base, n);
                HyperAt {
                    alpha: self.alpha0 / np1.powf(self.eta),
                    beta: self.beta0 * decay,
                    gamma: self.gamma0 * decay,
                    delta: self.delta0 * decay,
                }
            }
        }
    }

    /// `kappa_n = alpha_n * (1 - beta_n) * (1 + gamma_n) / (1 - zeta^(n+1))`.
    pub fn kappa(&self, n: u64) -> T {
        let h = self.eval(n);
        let zeta_corr = T::one() - geometric(self.zeta, n + 1);
        h.alpha * (T::one() - h.beta) * (T::one() + h.gamma) / zeta_corr
    }

    /// Every `n < n_max` where `kappa_{n+1} > kappa_n`. The diminishing-rate
    /// bound assumes this list is empty; callers report violations rather
    /// than abort.
    pub fn check_kappa_monotone(&self, n_max: u64) -> Vec<u64> {
        let mut violations = Vec::new();
        let mut prev = self.kappa(0);
        for n in 0..n_max {
            let next = self.kappa(n + 1);
            if next > prev {
                violations.push(n);
            }
            prev = next;
        }
        violations
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn zeta(&self) -> T {
        self.zeta
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn decay_base(&self) -> T {
        self.decay_base
    }

    pub fn gamma0(&self) -> T {
        self.gamma0
    }

    pub fn delta0(&self) -> T {
        self.delta0
    }

    /// Supremum of `beta_n` over all steps; attained at `n = 0` in both
    /// regimes.
    pub fn beta_sup(&self) -> T {
        self.beta0
    }
}

/// `base^n` for nonnegative integer `n`.
pub(crate) fn geometric<T: Scalar>(base: T, n: u64) -> T {
    if n == 0 {
        T::one()
    } else if n <= i32::MAX as u64 {
        base.powi(n as i32)
    } else {
        base.powf(T::from_f64(n as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cifar_constant() -> HyperSchedule<f64> {
        HyperSchedule::<f64>::constant(1e-3, 0.9, 1e-1, 1e-3, 0.9, 0.999).unwrap()
    }

    #[test]
    fn constant_returns_initial_values_every_step() {
        let s = cifar_constant();
        for n in [0u64, 1, 10, 1000, 123_456] {
            let h = s.eval(n);
            assert_eq!(h.alpha, 1e-3);
            assert_eq!(h.beta, 0.9);
            assert_eq!(h.gamma, 1e-1);
            assert_eq!(h.delta, 1e-3);
        }
    }

    #[test]
    fn diminishing_inverse_sqrt_step() {
        let s =
            HyperSchedule::<f64>::diminishing(1.0, 0.5, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).unwrap();
        let h = s.eval(3);
        assert_eq!(h.alpha, 0.5); // 1 / sqrt(4)
    }

    #[test]
    fn diminishing_geometric_delta() {
        let s =
            HyperSchedule::<f64>::diminishing(0.5, 0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.999).unwrap();
        assert_eq!(s.eval(0).delta, 0.5);
        assert_eq!(s.eval(1).delta, 0.25);
        assert_eq!(s.eval(2).delta, 0.125);
    }

    #[test]
    fn out_of_range_parameters_rejected_at_construction() {
        assert!(HyperSchedule::<f64>::constant(0.0, 0.9, 0.1, 1e-3, 0.9, 0.999).is_err());
        assert!(HyperSchedule::<f64>::constant(1.0, 0.9, 0.1, 1e-3, 0.9, 0.999).is_err());
        assert!(HyperSchedule::<f64>::constant(1e-3, 1.0, 0.1, 1e-3, 0.9, 0.999).is_err());
        assert!(HyperSchedule::<f64>::constant(1e-3, 0.9, -0.1, 1e-3, 0.9, 0.999).is_err());
        let err = HyperSchedule::<f64>::constant(1e-3, 0.9, 0.1, 0.6, 0.9, 0.999).unwrap_err();
        assert!(err.to_string().contains("delta0 must lie in [0, 1/2]"));
        assert!(HyperSchedule::<f64>::constant(1e-3, 0.9, 0.1, 1e-3, 1.0, 0.999).is_err());
        assert!(HyperSchedule::<f64>::constant(1e-3, 0.9, 0.1, 1e-3, 0.9, 1.0).is_err());
        assert!(
            HyperSchedule::<f64>::diminishing(0.5, 1.0, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).is_err()
        );
        assert!(
            HyperSchedule::<f64>::diminishing(0.5, 0.5, 0.9, 0.1, 0.5, 1.0, 0.9, 0.999).is_err()
        );
        // Diminishing accepts the closed boundary alpha0 = 1.
        assert!(HyperSchedule::<f64>::diminishing(1.0, 0.5, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).is_ok());
    }

    #[test]
    fn cosine_modulation_constant_regime_only() {
        let s = cifar_constant().with_cosine(100).unwrap();
        assert_eq!(s.eval(0).alpha, 1e-3); // cos(0) = 1
        let mid = s.eval(50).alpha;
        assert!((mid - 0.5e-3).abs() < 1e-18); // cos(pi/2) = 0
        for n in 0..300 {
            let a = s.eval(n).alpha;
            assert!(a > 0.0 && a <= 1e-3);
        }
        let d = HyperSchedule::<f64>::diminishing(0.5, 0.5, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).unwrap();
        assert!(d.with_cosine(100).is_err());
    }

    #[test]
    fn eval_is_pure_bitwise() {
        let s =
            HyperSchedule::<f64>::diminishing(0.7, 0.6, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).unwrap();
        for n in [0u64, 1, 17, 999, 100_000] {
            let a = s.eval(n);
            let b = s.eval(n);
            assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            assert_eq!(a.beta.to_bits(), b.beta.to_bits());
            assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
            assert_eq!(a.delta.to_bits(), b.delta.to_bits());
        }
    }

    #[test]
    fn kappa_constant_with_zero_zeta_has_no_violations() {
        let s = HyperSchedule::<f64>::constant(1e-3, 0.9, 0.1, 1e-3, 0.0, 0.999).unwrap();
        assert!(s.check_kappa_monotone(200).is_empty());
    }

    #[test]
    fn kappa_constant_with_positive_zeta_decreases() {
        let s = cifar_constant();
        assert!(s.check_kappa_monotone(200).is_empty());
        assert!(s.kappa(1) < s.kappa(0));
    }

    #[test]
    fn kappa_violations_match_direct_evaluation() {
        let s =
            HyperSchedule::<f64>::diminishing(1.0, 0.5, 0.9, 0.1, 0.5, 0.5, 0.9, 0.999).unwrap();
        let n_max = 100u64;
        // Independent transcription of the kappa formula.
        let kappa = |n: u64| -> f64 {
            let alpha = 1.0 / ((n + 1) as f64).sqrt();
            let beta = 0.9 * 0.5f64.powi(n as i32);
            let gamma = 0.1 * 0.5f64.powi(n as i32);
            let zeta_corr = 1.0 - 0.9f64.powi(n as i32 + 1);
            alpha * (1.0 - beta) * (1.0 + gamma) / zeta_corr
        };
        let expected: Vec<u64> = (0..n_max).filter(|&n| kappa(n + 1) > kappa(n)).collect();
        assert_eq!(s.check_kappa_monotone(n_max), expected);
        // The early large beta makes kappa rise at least once.
        assert!(expected.contains(&0));
    }

    #[test]
    fn diminishing_family_sweep_stays_admissible() {
        let s =
            HyperSchedule::<f64>::diminishing(1.0, 0.5, 0.9, 0.3, 0.5, 0.5, 0.9, 0.999).unwrap();
        let mut prev_gamma = f64::INFINITY;
        for n in 0..=1_000_000u64 {
            let h = s.eval(n);
            assert!(h.delta <= 0.5, "delta at n={n}");
            assert!(h.gamma <= prev_gamma, "gamma rose at n={n}");
            assert!(h.alpha > 0.0 && h.alpha <= 1.0);
            assert!(h.beta >= 0.0 && h.beta < 1.0);
            prev_gamma = h.gamma;
        }
    }
}

//! Per-iteration convergence records.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub k: usize,
    /// Designated Lyapunov value, or the residual when `x*` is unknown.
    pub lyapunov: f64,
    pub err_norm: Option<f64>,
    /// `|A(x_k)|` (or the KKT residual for saddle problems).
    pub residual: f64,
    pub inner_iters: Option<usize>,
    pub inner_residual: Option<f64>,
}

impl TraceEntry {
    pub fn new(k: usize, lyapunov: f64, residual: f64) -> Self {
        Self {
            k,
            lyapunov,
            err_norm: None,
            residual,
            inner_iters: None,
            inner_residual: None,
        }
    }

    pub fn with_err(mut self, err: Option<f64>) -> Self {
        self.err_norm = err;
        self
    }

    pub fn with_inner(mut self, iters: usize, residual: f64) -> Self {
        self.inner_iters = Some(iters);
        self.inner_residual = Some(residual);
        self
    }
}

/// Counts of the expensive operations performed by a solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCensus {
    pub gradient_evals: usize,
    /// Solves with a shifted symmetric part, e.g. `(alpha I + H)`.
    pub symmetric_solves: usize,
    /// Solves with a shifted skew-symmetric operator, e.g. `(beta I + N)`.
    pub skew_solves: usize,
    pub triangular_solves: usize,
    /// Solves with a general (unsplit) operator, e.g. `(I + alpha A)`.
    pub general_solves: usize,
    pub matvecs: usize,
}

impl OpCensus {
    pub fn merge(&mut self, other: &OpCensus) {
        self.gradient_evals += other.gradient_evals;
        self.symmetric_solves += other.symmetric_solves;
        self.skew_solves += other.skew_solves;
        self.triangular_solves += other.triangular_solves;
        self.general_solves += other.general_solves;
        self.matvecs += other.matvecs;
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceTrace {
    pub entries: Vec<TraceEntry>,
    pub fitted_rate: Option<f64>,
    pub census: OpCensus,
    /// Whether the step-size precondition of the scheme's rate guarantee held.
    pub guaranteed: bool,
    pub warnings: Vec<String>,
}

impl ConvergenceTrace {
    pub fn new(guaranteed: bool) -> Self {
        Self {
            guaranteed,
            ..Default::default()
        }
    }

    pub fn push(&mut self, entry: TraceEntry) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if entry.k <= last.k {
                return Err(Error::InvalidParameter {
                    name: "k",
                    reason: format!("iteration index {} does not follow {}", entry.k, last.k),
                });
            }
        }
        if !entry.lyapunov.is_finite() {
            return Err(Error::NonFinite("Lyapunov value"));
        }
        if entry.lyapunov < 0.0 {
            return Err(Error::InvalidParameter {
                name: "lyapunov",
                reason: format!(
                    "negative value {:e} at iteration {}",
                    entry.lyapunov, entry.k
                ),
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Number of completed steps.
    pub fn iterations(&self) -> usize {
        self.entries.last().map_or(0, |e| e.k)
    }

    pub fn lyapunov_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lyapunov).collect()
    }

    /// `E_{k+1} / E_k` for consecutive entries with `E_k > 0`.
    pub fn ratios(&self) -> Vec<f64> {
        self.entries
            .windows(2)
            .filter(|w| w[0].lyapunov > 0.0)
            .map(|w| w[1].lyapunov / w[0].lyapunov)
            .collect()
    }

    /// Steps violating `E_{k+1} <= rate * E_k + tol`, as `(k, E_k, E_{k+1})`.
    pub fn violations(&self, rate: f64, tol: f64) -> Vec<(usize, f64, f64)> {
        self.entries
            .windows(2)
            .filter(|w| w[1].lyapunov > rate * w[0].lyapunov + tol)
            .map(|w| (w[0].k, w[0].lyapunov, w[1].lyapunov))
            .collect()
    }
}

/// Tracks consecutive Lyapunov increases.
#[derive(Clone, Debug, Default)]
pub(crate) struct DivergenceGuard {
    run: usize,
    floor: f64,
}

pub(crate) const DIVERGENCE_STEPS: usize = 10;

impl DivergenceGuard {
    pub(crate) fn new(e0: f64) -> Self {
        Self {
            run: 0,
            floor: 1e-20 * e0.abs(),
        }
    }

    /// Returns an error after `DIVERGENCE_STEPS` consecutive increases above
    /// the round-off floor.
    pub(crate) fn observe(
        &mut self,
        k: usize,
        prev: f64,
        next: f64,
        guaranteed: bool,
    ) -> Result<()> {
        if next > prev && next > self.floor {
            self.run += 1;
        } else {
            self.run = 0;
        }
        if guaranteed && self.run >= DIVERGENCE_STEPS {
            return Err(Error::Divergence {
                iteration: k,
                steps: self.run,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_validates() {
        let mut t = ConvergenceTrace::new(true);
        t.push(TraceEntry::new(0, 1.0, 1.0)).unwrap();
        assert!(t.push(TraceEntry::new(0, 0.5, 1.0)).is_err());
        assert!(t.push(TraceEntry::new(1, -0.5, 1.0)).is_err());
        assert!(t.push(TraceEntry::new(1, f64::NAN, 1.0)).is_err());
        t.push(TraceEntry::new(1, 0.5, 1.0)).unwrap();
        assert_eq!(t.ratios(), vec![0.5]);
        assert!(t.violations(0.5, 0.0).is_empty());
        assert_eq!(t.violations(0.4, 0.0).len(), 1);
    }

    #[test]
    fn divergence_guard() {
        let mut g = DivergenceGuard::new(1.0);
        for k in 0..9 {
            g.observe(k, 1.0, 2.0, true).unwrap();
        }
        assert!(g.observe(9, 1.0, 2.0, true).is_err());
        let mut g = DivergenceGuard::new(1.0);
        for k in 0..20 {
            g.observe(k, 1.0, 2.0, false).unwrap();
        }
    }
}

use rand::Rng as _;
use serde::Serialize;

use crate::net::{Architecture, Sample};
use crate::rng::Rng;
use crate::{Error, Result};

/// Samples presented one after another in continuous time. Sample `j` is
/// active on `[T_j, T_j + hold_j)` where `T_j` is the sum of earlier holds;
/// the input is piecewise constant, so `Ẋ = 0` inside each hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSchedule {
    pub samples: Vec<Sample>,
}

impl SampleSchedule {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("sample schedule is empty"));
        }
        if let Some(s) = samples
            .iter()
            .find(|s| !(s.hold_duration.is_finite() && s.hold_duration > 0.0))
        {
            return Err(Error::validation(
                "hold_duration",
                format!("must be > 0, got {}", s.hold_duration),
            ));
        }
        Ok(Self { samples })
    }

    /// One sample held for the whole run.
    pub fn constant(sample: Sample, t_end: f64) -> Self {
        Self {
            samples: vec![sample.with_hold(t_end)],
        }
    }

    /// Random draws (with replacement) from `dataset`, each held for its own
    /// `hold_duration`, until `[0, t_end]` is covered.
    pub fn random_covering(dataset: &[Sample], t_end: f64, rng: &mut Rng) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::config("dataset is empty"));
        }
        let mut samples = Vec::new();
        let mut total = 0.0;
        while total < t_end {
            let s = dataset[rng.gen_range(0..dataset.len())].clone();
            total += s.hold_duration;
            samples.push(s);
        }
        Self::new(samples)
    }

    pub fn validate(&self, arch: &Architecture) -> Result<()> {
        self.samples.iter().try_for_each(|s| s.validate(arch))
    }

    pub fn total_duration(&self) -> f64 {
        self.samples.iter().map(|s| s.hold_duration).sum()
    }

    /// Interior switch times `T_1, T_2, ...` (excludes 0).
    pub fn switch_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.samples.len());
        for s in &self.samples[..self.samples.len() - 1] {
            t += s.hold_duration;
            out.push(t);
        }
        out
    }

    /// Index of the sample active at `t`. Times past the end map to the last sample.
    pub fn active_at(&self, t: f64) -> usize {
        self.switch_times()
            .iter()
            .position(|&s| t < s)
            .unwrap_or(self.samples.len() - 1)
    }

    pub fn check_covers(&self, t_end: f64) -> Result<()> {
        let total = self.total_duration();
        if total < t_end * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!(
                "sample schedule covers [0, {total}] but the run needs [0, {t_end}]"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_sample_is_half_open() {
        let s = SampleSchedule::new(vec![
            Sample::new(vec![0.0], vec![0.0]).with_hold(0.5),
            Sample::new(vec![1.0], vec![1.0]).with_hold(0.25),
            Sample::new(vec![2.0], vec![2.0]).with_hold(1.0),
        ])
        .unwrap();
        assert_eq!(s.switch_times(), vec![0.5, 0.75]);
        assert_eq!(s.active_at(0.0), 0);
        assert_eq!(s.active_at(0.4999), 0);
        assert_eq!(s.active_at(0.5), 1);
        assert_eq!(s.active_at(0.75), 2);
        assert_eq!(s.active_at(10.0), 2);
        assert!(s.check_covers(1.75).is_ok());
        assert!(s.check_covers(2.0).is_err());
    }
}

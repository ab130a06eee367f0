use super::anytime::AnytimePolicy;
use super::problem::{CocoPolicy, ProblemSpec, Round, RoundRecord};
use crate::error::Result;

/// Fixed-horizon policy restarted on phases of length 1, 2, 4, ...
///
/// Each phase forgets everything: the iterate goes back to the initial
/// point and the queue to zero. Cumulative violation carries across phases.
#[derive(Clone, Debug)]
pub struct DoublingPolicy {
    spec: ProblemSpec,
    inner: AnytimePolicy,
    phase: usize,
    /// Last round of the current phase.
    phase_end: usize,
    t: usize,
    ccv: f64,
}

impl DoublingPolicy {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        let inner = AnytimePolicy::fixed_horizon(spec.clone(), 1)?;
        Ok(Self {
            spec,
            inner,
            phase: 0,
            phase_end: 1,
            t: 0,
            ccv: 0.0,
        })
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    /// Horizon of the current phase.
    pub fn phase_length(&self) -> usize {
        1 << self.phase
    }
}

impl CocoPolicy for DoublingPolicy {
    fn current_action(&self) -> &[f64] {
        self.inner.current_action()
    }

    fn step(&mut self, round: &Round) -> Result<RoundRecord> {
        if self.t == self.phase_end {
            self.phase += 1;
            let len = 1usize << self.phase;
            self.phase_end += len;
            self.inner = AnytimePolicy::fixed_horizon(self.spec.clone(), len as u64)?;
        }
        self.t += 1;
        let mut rec = self.inner.step(round)?;
        self.ccv += rec.violation;
        rec.t = self.t;
        rec.ccv = self.ccv;
        rec.phase = Some(self.phase);
        Ok(rec)
    }
}

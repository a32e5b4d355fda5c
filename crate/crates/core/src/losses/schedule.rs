use serde::{Deserialize, Serialize};

/// Weight of the alignment term over training.
///
/// Epochs are 1-based. `λ` stays at zero through `start_epoch`, then grows
/// linearly to `lambda_max` over `ramp_epochs` epochs and holds there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaSchedule {
    pub start_epoch: u32,
    pub ramp_epochs: u32,
    pub lambda_max: f64,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule {
            start_epoch: 45,
            ramp_epochs: 10,
            lambda_max: 10.0,
        }
    }
}

impl LambdaSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if self.ramp_epochs < 1 {
            return Err("ramp_epochs must be at least 1".into());
        }
        if !(self.lambda_max >= 0.0 && self.lambda_max.is_finite()) {
            return Err("lambda_max must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn at(&self, epoch: u32) -> f64 {
        lambda_schedule(epoch, self)
    }
}

pub fn lambda_schedule(epoch: u32, sched: &LambdaSchedule) -> f64 {
    if epoch <= sched.start_epoch || sched.lambda_max == 0.0 {
        return 0.0;
    }
    let progress = f64::from(epoch - sched.start_epoch) / f64::from(sched.ramp_epochs.max(1));
    sched.lambda_max * progress.min(1.0)
}

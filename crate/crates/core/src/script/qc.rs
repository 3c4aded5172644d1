use serde::{Deserialize, Serialize};

use super::{ScriptError, TurnPlan};

/// Number of leading turns the filter averages over.
pub const QC_WINDOW: usize = 20;
/// Scripts whose mean instruction size over the window is below this are
/// rejected.
pub const QC_MIN_MEAN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum QcOutcome {
    Pass { mean: f64 },
    Reject { mean: f64, reason: String },
}

impl QcOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, QcOutcome::Pass { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            QcOutcome::Pass { mean } | QcOutcome::Reject { mean, .. } => *mean,
        }
    }
}

pub fn qc_filter(plans: &[TurnPlan]) -> Result<QcOutcome, ScriptError> {
    if plans.len() < QC_WINDOW {
        return Err(ScriptError::TooShort { needed: QC_WINDOW, got: plans.len() });
    }
    let total: usize = plans[..QC_WINDOW].iter().map(|p| p.instruction.len()).sum();
    let mean = total as f64 / QC_WINDOW as f64;
    if mean >= QC_MIN_MEAN {
        Ok(QcOutcome::Pass { mean })
    } else {
        Ok(QcOutcome::Reject {
            mean,
            reason: format!("mean of {mean:.2} constraints over the first {QC_WINDOW} turns is below {QC_MIN_MEAN}"),
        })
    }
}

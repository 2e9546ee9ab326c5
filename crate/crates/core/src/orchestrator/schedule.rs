use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision schedule of the alternative decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    /// Current precision in [0, 1].
    pub p: f64,
    /// Added to `p` after every decomposition level.
    pub p_increment: f64,
    pub th_min: f64,
    pub th_max: f64,
    /// Consecutive non-improving split visits before the level ends.
    /// `None` means twice the number of splits of the level.
    pub patience: Option<NonZeroU32>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            p: 0.0,
            p_increment: 0.25,
            th_min: 0.0,
            th_max: 1.0,
            patience: None,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p", "must be within [0, 1]"));
        }
        if !(self.p_increment > 0.0 && self.p_increment <= 1.0) {
            return Err(Error::invalid("p_increment", "must be within (0, 1]"));
        }
        if !(self.th_min.is_finite() && self.th_max.is_finite() && self.th_min >= 0.0) {
            return Err(Error::invalid("th_min", "thresholds must be finite and non-negative"));
        }
        if self.th_min > self.th_max {
            return Err(Error::invalid("th_max", "must not be below th_min"));
        }
        Ok(())
    }

    /// Patience for a level that produced `splits` alternative splits.
    pub fn patience_for(&self, splits: usize) -> u32 {
        match self.patience {
            Some(p) => p.get(),
            None => (2 * splits.max(1)) as u32,
        }
    }
}

/// Filtering threshold at the schedule's current precision.
pub fn threshold(s: &Schedule) -> f64 {
    s.th_min + (s.th_max - s.th_min) * s.p
}

/// Raises the precision by one increment, clamped at 1.
pub fn advance_precision(s: &Schedule) -> Result<Schedule> {
    if s.p >= 1.0 {
        return Err(Error::PrecisionExhausted);
    }
    let mut next = s.clone();
    let p = s.p + s.p_increment;
    // absorb accumulated rounding so that e.g. ten steps of 0.1 land on 1
    next.p = if p >= 1.0 - 1e-9 { 1.0 } else { p };
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(p: f64) -> Schedule {
        Schedule {
            p,
            p_increment: 0.25,
            th_min: 0.1,
            th_max: 0.9,
            patience: None,
        }
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold(&sched(0.5)) - 0.5).abs() < 1e-15);
        assert_eq!(threshold(&sched(0.0)), 0.1);
        assert_eq!(threshold(&sched(1.0)), 0.9);
    }

    #[test]
    fn advance_examples() {
        assert_eq!(advance_precision(&sched(0.0)).unwrap().p, 0.25);
        assert_eq!(advance_precision(&sched(0.9)).unwrap().p, 1.0);
        assert!(matches!(
            advance_precision(&sched(1.0)),
            Err(Error::PrecisionExhausted)
        ));
        let next = advance_precision(&sched(0.0)).unwrap();
        assert_eq!((next.th_min, next.th_max, next.p_increment), (0.1, 0.9, 0.25));
    }

    #[test]
    fn tenth_increments_reach_one() {
        let mut s = Schedule {
            p_increment: 0.1,
            ..Schedule::default()
        };
        let mut levels = 1;
        while s.p < 1.0 {
            s = advance_precision(&s).unwrap();
            levels += 1;
        }
        assert_eq!(levels, 11);
    }

    #[test]
    fn validation() {
        assert!(sched(0.0).validate().is_ok());
        assert!(Schedule { p_increment: 0.0, ..sched(0.0) }.validate().is_err());
        assert!(Schedule { th_min: 1.0, th_max: 0.5, ..sched(0.0) }.validate().is_err());
        assert!(Schedule { p: 1.5, ..sched(0.0) }.validate().is_err());
    }

    #[test]
    fn default_patience_scales_with_splits() {
        assert_eq!(sched(0.0).patience_for(3), 6);
        let fixed = Schedule {
            patience: NonZeroU32::new(4),
            ..sched(0.0)
        };
        assert_eq!(fixed.patience_for(3), 4);
    }
}

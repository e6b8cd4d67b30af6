/// Glucose-tablet controller: fires once when glucose drops below the
/// threshold and re-arms only after glucose is back at the re-arm level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescueController {
    pub threshold: f64,
    pub rearm: f64,
    /// g
    pub cho: f64,
    armed: bool,
}

impl RescueController {
    pub fn new(threshold: f64, rearm: f64, cho: f64) -> Self {
        RescueController { threshold, rearm, cho, armed: true }
    }

    pub fn is_armed(&self) -> bool {
        self.armed
    }

    /// Evaluate one minute; returns the rescue CHO when it fires.
    pub fn check(&mut self, g: f64) -> Option<f64> {
        if self.armed && g < self.threshold {
            self.armed = false;
            Some(self.cho)
        } else {
            if !self.armed && g >= self.rearm {
                self.armed = true;
            }
            None
        }
    }
}

/// Number of activations over a glucose trace.
pub fn count_rescues(trace: &[f64], threshold: f64, rearm: f64) -> usize {
    let mut c = RescueController::new(threshold, rearm, 0.0);
    trace.iter().filter(|&&g| c.check(g).is_some()).count()
}

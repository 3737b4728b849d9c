use super::{invalid, to_ticks, MobilityError};

/// SINR thresholds: `γ_out` starts T310 and gates handover commands,
/// `γ_in` cancels a running T310.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gamma_out_db: f64,
    pub gamma_in_db: f64,
}

/// A3 entry tracking: `l3(c) > l3(serving) + offset` held continuously for
/// the time-to-trigger.
///
/// A neighbour's timer starts at zero on the first tick the condition holds
/// and advances one tick per further tick it keeps holding, so a report fires
/// on the tick at which the condition has held for exactly the
/// time-to-trigger. Any tick where it fails resets that timer.
#[derive(Debug, Clone)]
pub struct A3Tracker {
    elapsed: Vec<Option<u32>>,
    offset_db: f64,
    ttt_ticks: u32,
    tick_s: f64,
}

impl A3Tracker {
    pub fn new(cells: usize, offset_db: f64, time_to_trigger_s: f64, tick_s: f64) -> Result<Self, MobilityError> {
        if !(tick_s.is_finite() && tick_s > 0.0) {
            return Err(invalid("tick_s", "must be positive"));
        }
        if !offset_db.is_finite() {
            return Err(invalid("a3_offset_db", "must be finite"));
        }
        Ok(Self {
            elapsed: vec![None; cells],
            offset_db,
            ttt_ticks: to_ticks("time_to_trigger_s", time_to_trigger_s, tick_s)?,
            tick_s,
        })
    }

    /// Time neighbour `cell` has satisfied the entry condition, seconds.
    pub fn elapsed_s(&self, cell: usize) -> f64 {
        self.elapsed[cell].map_or(0.0, |n| n as f64 * self.tick_s)
    }

    pub fn reset(&mut self) {
        self.elapsed.iter_mut().for_each(|e| *e = None);
    }

    /// Advances every timer by one tick. Returns the strongest neighbour among
    /// those whose timer reached the time-to-trigger; all timers then reset.
    pub fn check(&mut self, serving: usize, l3_db: &[f64]) -> Option<usize> {
        let threshold = l3_db[serving] + self.offset_db;
        let mut matured = false;
        for (c, e) in self.elapsed.iter_mut().enumerate() {
            if c == serving || !(l3_db[c] > threshold) {
                *e = None;
                continue;
            }
            let n = e.map_or(0, |n| n + 1);
            *e = Some(n);
            matured |= n >= self.ttt_ticks;
        }
        if !matured {
            return None;
        }
        // Name the strongest neighbour whose timer has matured.
        let best = (0..l3_db.len())
            .filter(|&c| self.elapsed[c].is_some_and(|n| n >= self.ttt_ticks))
            .max_by(|&a, &b| l3_db[a].total_cmp(&l3_db[b]).then(b.cmp(&a)));
        self.reset();
        best
    }
}

/// Phase in which a handover attempt failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoFailurePhase {
    Command,
    RandomAccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoProgress {
    InProgress,
    Succeeded,
    Failed,
}

/// A handover in its random-access phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandoverProcedure {
    pub target: usize,
    elapsed_ticks: u32,
    ra_ticks: u32,
    gamma_out_db: f64,
}

impl HandoverProcedure {
    /// Delivers the handover command: succeeds iff the serving SINR exceeds `γ_out`.
    pub fn command(
        target: usize,
        sinr_serving_db: f64,
        thresholds: &Thresholds,
        t_ho_s: f64,
        tick_s: f64,
    ) -> Result<Self, MobilityError> {
        let ra_ticks = to_ticks("t_ho_s", t_ho_s, tick_s)?;
        if sinr_serving_db > thresholds.gamma_out_db {
            Ok(Self { target, elapsed_ticks: 0, ra_ticks, gamma_out_db: thresholds.gamma_out_db })
        } else {
            Err(invalid("handover", "command not received"))
        }
    }

    /// One random-access tick: the target SINR must stay above `γ_out`
    /// throughout; after `T_HO` the handover completes.
    pub fn step(&mut self, sinr_target_db: f64) -> HoProgress {
        if !(sinr_target_db > self.gamma_out_db) {
            return HoProgress::Failed;
        }
        self.elapsed_ticks += 1;
        if self.elapsed_ticks >= self.ra_ticks {
            HoProgress::Succeeded
        } else {
            HoProgress::InProgress
        }
    }

    pub fn elapsed_ticks(&self) -> u32 {
        self.elapsed_ticks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlfEvent {
    None,
    Started,
    Stopped,
    Expired,
}

/// T310: starts below `γ_out`, cancels only above `γ_in`, and declares a
/// radio link failure once it has run for `T310`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlfTracker {
    elapsed: Option<u32>,
    t310_ticks: u32,
    thresholds: Thresholds,
}

impl RlfTracker {
    pub fn new(thresholds: Thresholds, t310_s: f64, tick_s: f64) -> Result<Self, MobilityError> {
        let t310_ticks = to_ticks("t310_s", t310_s, tick_s)?;
        if t310_ticks == 0 {
            return Err(invalid("t310_s", "must be at least one tick"));
        }
        if thresholds.gamma_in_db < thresholds.gamma_out_db {
            return Err(invalid("gamma_in_db", "must not be below gamma_out_db"));
        }
        Ok(Self { elapsed: None, t310_ticks, thresholds })
    }

    pub fn running(&self) -> bool {
        self.elapsed.is_some()
    }

    pub fn reset(&mut self) {
        self.elapsed = None;
    }

    pub fn update(&mut self, sinr_db: f64) -> RlfEvent {
        match self.elapsed {
            None if sinr_db < self.thresholds.gamma_out_db => {
                self.elapsed = Some(0);
                RlfEvent::Started
            }
            None => RlfEvent::None,
            Some(_) if sinr_db > self.thresholds.gamma_in_db => {
                self.elapsed = None;
                RlfEvent::Stopped
            }
            Some(n) => {
                let n = n + 1;
                if n >= self.t310_ticks {
                    self.elapsed = None;
                    RlfEvent::Expired
                } else {
                    self.elapsed = Some(n);
                    RlfEvent::None
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TICK: f64 = 0.01;

    fn tracker() -> A3Tracker {
        A3Tracker::new(3, 3.0, 0.08, TICK).unwrap()
    }

    #[test]
    fn a3_equality_never_triggers() {
        let mut a3 = tracker();
        for _ in 0..100 {
            assert_eq!(a3.check(0, &[-80.0, -77.0, -90.0]), None);
            assert_eq!(a3.elapsed_s(1), 0.0);
        }
    }

    #[test]
    fn a3_fires_exactly_at_ttt() {
        let mut a3 = tracker();
        let l3 = [-80.0, -76.9, -90.0];
        // First satisfying tick is t0; the report comes 8 ticks (80 ms) later.
        for k in 0..8 {
            assert_eq!(a3.check(0, &l3), None, "tick {k}");
        }
        assert!((a3.elapsed_s(1) - 0.07).abs() < 1e-12);
        assert_eq!(a3.check(0, &l3), Some(1));
        assert_eq!(a3.elapsed_s(1), 0.0);
    }

    #[test]
    fn a3_interruption_resets() {
        let mut a3 = tracker();
        let good = [-80.0, -76.0, -90.0];
        let bad = [-80.0, -78.0, -90.0];
        for _ in 0..8 {
            assert_eq!(a3.check(0, &good), None);
        }
        assert_eq!(a3.check(0, &bad), None);
        assert_eq!(a3.elapsed_s(1), 0.0);
        for _ in 0..8 {
            assert_eq!(a3.check(0, &good), None);
        }
        assert_eq!(a3.check(0, &good), Some(1));
    }

    #[test]
    fn a3_reports_strongest_matured_neighbour() {
        // Cell 2 qualifies later and is stronger, but only cell 1 has held for T_T.
        let mut a3 = tracker();
        for k in 0..9 {
            let l3 = if k < 3 { [-80.0, -76.0, -90.0] } else { [-80.0, -76.0, -70.0] };
            assert_eq!(a3.check(0, &l3), if k < 8 { None } else { Some(1) });
        }
        // Both matured together: the stronger one is named.
        let mut a3 = tracker();
        for k in 0..9 {
            assert_eq!(a3.check(0, &[-80.0, -76.0, -70.0]), if k < 8 { None } else { Some(2) });
        }
    }

    #[test]
    fn rlf_at_exactly_t310() {
        let th = Thresholds { gamma_out_db: -8.0, gamma_in_db: -6.0 };
        let mut rlf = RlfTracker::new(th, 0.6, TICK).unwrap();
        assert_eq!(rlf.update(-9.0), RlfEvent::Started);
        for _ in 1..60 {
            assert_eq!(rlf.update(-9.0), RlfEvent::None);
        }
        // 60 ticks after the start tick: 600 ms.
        assert_eq!(rlf.update(-9.0), RlfEvent::Expired);
        assert!(!rlf.running());
    }

    #[test]
    fn rlf_recovery_and_hysteresis() {
        let th = Thresholds { gamma_out_db: -8.0, gamma_in_db: -6.0 };
        let mut rlf = RlfTracker::new(th, 0.6, TICK).unwrap();
        assert_eq!(rlf.update(-10.0), RlfEvent::Started);
        assert_eq!(rlf.update(-5.0), RlfEvent::Stopped);
        assert_eq!(rlf.update(-7.0), RlfEvent::None);
        assert!(!rlf.running());

        // Oscillating between the thresholds keeps the timer alive.
        assert_eq!(rlf.update(-9.0), RlfEvent::Started);
        for k in 1..60 {
            let s = if k % 2 == 0 { -7.0 } else { -6.0 };
            assert_eq!(rlf.update(s), RlfEvent::None);
        }
        assert_eq!(rlf.update(-7.0), RlfEvent::Expired);
    }

    #[test]
    fn handover_phases() {
        let th = Thresholds { gamma_out_db: -8.0, gamma_in_db: -6.0 };
        assert!(HandoverProcedure::command(1, -9.0, &th, 0.04, TICK).is_err());
        assert!(HandoverProcedure::command(1, -8.0, &th, 0.04, TICK).is_err());
        let mut ho = HandoverProcedure::command(1, 5.0, &th, 0.04, TICK).unwrap();
        for _ in 0..3 {
            assert_eq!(ho.step(3.0), HoProgress::InProgress);
        }
        assert_eq!(ho.step(3.0), HoProgress::Succeeded);
        assert_eq!(ho.elapsed_ticks(), 4);

        let mut ho = HandoverProcedure::command(1, 5.0, &th, 0.04, TICK).unwrap();
        assert_eq!(ho.step(3.0), HoProgress::InProgress);
        assert_eq!(ho.step(-8.5), HoProgress::Failed);
    }

    #[test]
    fn rejects_non_tick_multiples() {
        assert!(A3Tracker::new(2, 3.0, 0.085, TICK).is_err());
        let th = Thresholds { gamma_out_db: -8.0, gamma_in_db: -6.0 };
        assert!(RlfTracker::new(th, 0.0, TICK).is_err());
        let bad = Thresholds { gamma_out_db: -6.0, gamma_in_db: -8.0 };
        assert!(RlfTracker::new(bad, 0.6, TICK).is_err());
    }
}

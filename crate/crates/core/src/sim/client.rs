//! Client-side transport state: AIMD interest window, smoothed RTT with
//! timeout handling, per-chunk retransmission accounting, and the playout
//! buffer.

/// Additive-increase / multiplicative-decrease window over interests in
/// flight: +1 after a full window of successes, halved on a loss event. A
/// halving epoch guard keeps one burst of timeouts from collapsing the
/// window repeatedly.
#[derive(Debug, Clone)]
pub struct AimdWindow {
    window: u32,
    min: u32,
    max: u32,
    successes: u32,
    halve_guard_until_us: u64,
}

impl AimdWindow {
    pub fn new(initial: u32, min: u32, max: u32) -> Self {
        Self {
            window: initial.clamp(min, max),
            min,
            max,
            successes: 0,
            halve_guard_until_us: 0,
        }
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn on_success(&mut self) {
        self.successes += 1;
        if self.successes >= self.window {
            self.window = (self.window + 1).min(self.max);
            self.successes = 0;
        }
    }

    /// Halve on a loss/congestion event, at most once per guard period.
    pub fn on_loss_event(&mut self, now_us: u64, guard_us: u64) {
        if now_us < self.halve_guard_until_us {
            return;
        }
        self.window = (self.window / 2).max(self.min);
        self.successes = 0;
        self.halve_guard_until_us = now_us + guard_us;
    }
}

/// Outcome of a retransmission timer firing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeoutAction {
    /// Re-express the interest; `attempt` is the retransmission count so far.
    Retransmit { attempt: u32 },
    /// Retransmission budget exhausted: suppress the chunk and mark the
    /// client downgrade-pending for the next interval.
    Abandon,
}

pub const MAX_RETRANSMISSIONS: u32 = 2;

/// Decide what a timeout does given how many retransmissions were already
/// spent on the chunk.
pub fn on_timeout(retransmissions_done: u32) -> TimeoutAction {
    if retransmissions_done < MAX_RETRANSMISSIONS {
        TimeoutAction::Retransmit {
            attempt: retransmissions_done + 1,
        }
    } else {
        TimeoutAction::Abandon
    }
}

/// Smoothed RTT estimator (EWMA 1/8) with a floor-clamped retransmission
/// timeout of four times the estimate. Samples from retransmitted chunks
/// are never fed in.
#[derive(Debug, Clone)]
pub struct RttEstimator {
    srtt_us: Option<f64>,
    rto_min_us: u64,
}

impl RttEstimator {
    pub fn new(rto_min_us: u64) -> Self {
        Self {
            srtt_us: None,
            rto_min_us,
        }
    }

    pub fn observe(&mut self, sample_us: u64) {
        let s = sample_us as f64;
        self.srtt_us = Some(match self.srtt_us {
            None => s,
            Some(prev) => prev + (s - prev) / 8.0,
        });
    }

    pub fn rto_us(&self) -> u64 {
        match self.srtt_us {
            None => self.rto_min_us.max(200_000),
            Some(srtt) => ((4.0 * srtt) as u64).max(self.rto_min_us),
        }
    }
}

/// Playout buffer. Fills by one chunk duration per arrival, drains in real
/// time once playback has started, never goes negative.
#[derive(Debug, Clone)]
pub struct PlayoutBuffer {
    level_s: f64,
    last_update_us: u64,
    playing: bool,
    start_threshold_s: f64,
    pub started_at_us: Option<u64>,
}

impl PlayoutBuffer {
    pub fn new(start_threshold_s: f64) -> Self {
        Self {
            level_s: 0.0,
            last_update_us: 0,
            playing: false,
            start_threshold_s,
            started_at_us: None,
        }
    }

    fn advance(&mut self, now_us: u64) {
        if self.playing {
            let elapsed = (now_us.saturating_sub(self.last_update_us)) as f64 / 1e6;
            self.level_s = (self.level_s - elapsed).max(0.0);
        }
        self.last_update_us = now_us;
    }

    pub fn on_chunk(&mut self, now_us: u64, chunk_duration_s: f64) {
        self.advance(now_us);
        self.level_s += chunk_duration_s;
        if !self.playing && self.level_s >= self.start_threshold_s {
            self.playing = true;
            self.started_at_us = Some(now_us);
        }
    }

    pub fn level_s(&mut self, now_us: u64) -> f64 {
        self.advance(now_us);
        self.level_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeout_budget_is_two_retransmissions() {
        assert_eq!(on_timeout(0), TimeoutAction::Retransmit { attempt: 1 });
        assert_eq!(on_timeout(1), TimeoutAction::Retransmit { attempt: 2 });
        assert_eq!(on_timeout(2), TimeoutAction::Abandon);
    }

    #[test]
    fn window_halves_and_regrows() {
        let mut w = AimdWindow::new(8, 1, 64);
        w.on_loss_event(0, 100);
        assert_eq!(w.window(), 4);
        // guard blocks an immediate second halving
        w.on_loss_event(50, 100);
        assert_eq!(w.window(), 4);
        w.on_loss_event(200, 100);
        assert_eq!(w.window(), 2);
        // growth: +1 per full window of successes
        w.on_success();
        w.on_success();
        assert_eq!(w.window(), 3);
    }

    #[test]
    fn window_respects_bounds() {
        let mut w = AimdWindow::new(2, 1, 64);
        for t in 0..10 {
            w.on_loss_event(t * 1_000_000, 100);
        }
        assert_eq!(w.window(), 1);
        let mut w = AimdWindow::new(64, 1, 64);
        for _ in 0..10_000 {
            w.on_success();
        }
        assert_eq!(w.window(), 64);
    }

    #[test]
    fn rto_floors_and_tracks_srtt() {
        let mut rtt = RttEstimator::new(50_000);
        assert_eq!(rtt.rto_us(), 200_000); // pre-sample default
        rtt.observe(10_000);
        assert_eq!(rtt.rto_us(), 50_000); // 4 * 10ms below the floor
        rtt.observe(100_000);
        assert!(rtt.rto_us() > 50_000);
    }

    #[test]
    fn buffer_starts_playback_at_threshold_and_drains() {
        let mut b = PlayoutBuffer::new(2.0);
        b.on_chunk(1_000_000, 2.0);
        assert_eq!(b.started_at_us, Some(1_000_000));
        // one second later, one second consumed
        assert!((b.level_s(2_000_000) - 1.0).abs() < 1e-9);
        // drains to zero, never negative
        assert_eq!(b.level_s(10_000_000), 0.0);
    }
}

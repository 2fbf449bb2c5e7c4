//! Optional platform counter hook.
//!
//! The harness brackets each timed lookup loop with `start` and `stop`.
//! Implementations may wrap hardware counters (cache misses, branch
//! mispredictions, instructions); the default reports nothing and the report
//! carries probe counts only.

pub trait CounterHook {
    /// Names of the counters `stop` returns, in order.
    fn names(&self) -> Vec<String>;

    fn start(&mut self);

    /// Counter deltas since the matching `start`.
    fn stop(&mut self) -> Vec<u64>;
}

/// Hook used when no platform counters are available.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCounters;

impl CounterHook for NoCounters {
    fn names(&self) -> Vec<String> {
        Vec::new()
    }

    fn start(&mut self) {}

    fn stop(&mut self) -> Vec<u64> {
        Vec::new()
    }
}

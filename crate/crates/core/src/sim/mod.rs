//! Clock and task-spawning abstraction shared by every simulated component.
//!
//! All latency (invocation overhead, cold starts, KV operations, task
//! delays) is charged through [`Runtime::sleep`], so the same protocol code
//! runs under the deterministic virtual clock and under real time.

mod virtual_rt;
mod wall;

use std::sync::Arc;
use std::time::Duration;

use futures::future::BoxFuture;

pub use virtual_rt::{Stalled, VirtualRuntime};
pub use wall::WallRuntime;

pub trait Runtime: Send + Sync + 'static {
    /// Time since the runtime was created. Monotonic.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration) -> BoxFuture<'static, ()>;
    fn spawn(&self, fut: BoxFuture<'static, ()>);
}

pub type Rt = Arc<dyn Runtime>;

/// Milliseconds to a `Duration`; negative and non-finite inputs clamp to zero.
pub fn ms(x: f64) -> Duration {
    if x.is_finite() && x > 0.0 {
        Duration::from_secs_f64(x / 1000.0)
    } else {
        Duration::ZERO
    }
}

pub fn as_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

use std::time::{Duration, Instant};

use futures::future::BoxFuture;
use tokio::runtime::Handle;

use super::Runtime;

/// Real time on a tokio runtime.
pub struct WallRuntime {
    handle: Handle,
    start: Instant,
}

impl WallRuntime {
    pub fn new(handle: Handle) -> Self {
        Self {
            handle,
            start: Instant::now(),
        }
    }
}

impl Runtime for WallRuntime {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, d: Duration) -> BoxFuture<'static, ()> {
        Box::pin(tokio::time::sleep(d))
    }

    fn spawn(&self, fut: BoxFuture<'static, ()>) {
        self.handle.spawn(fut);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sleeps_for_real() {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_time()
            .build()
            .unwrap();
        let wall = WallRuntime::new(rt.handle().clone());
        let elapsed = rt.block_on(async {
            wall.sleep(Duration::from_millis(20)).await;
            wall.now()
        });
        assert!(elapsed >= Duration::from_millis(20));
    }
}

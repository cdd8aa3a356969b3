use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::future::Future;
use std::pin::Pin;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::task::{Context, Poll, Waker};
use std::time::Duration;

use futures::future::BoxFuture;
use futures::task::{waker, ArcWake};
use parking_lot::Mutex;
use thiserror::Error;

use super::Runtime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("virtual runtime stalled at t={at_ms} ms: main future pending with no runnable task or timer")]
pub struct Stalled {
    pub at_ms: u64,
}

/// Single-threaded discrete-event executor.
///
/// Time only moves when no task is runnable; it then jumps to the earliest
/// pending timer. Timers with equal deadlines fire in registration order, and
/// ready tasks run FIFO, so a given program always produces the same
/// interleaving.
#[derive(Clone)]
pub struct VirtualRuntime {
    inner: Arc<Inner>,
}

struct Inner {
    now_ns: AtomicU64,
    seq: AtomicU64,
    tasks: Mutex<Slots>,
    ready: Arc<Mutex<VecDeque<usize>>>,
    timers: Mutex<BinaryHeap<Reverse<(u64, u64)>>>,
    timer_wakers: Mutex<std::collections::BTreeMap<u64, Waker>>,
}

#[derive(Default)]
struct Slots {
    futures: Vec<Option<BoxFuture<'static, ()>>>,
    free: Vec<usize>,
}

struct TaskWaker {
    id: usize,
    ready: Arc<Mutex<VecDeque<usize>>>,
}

impl ArcWake for TaskWaker {
    fn wake_by_ref(arc_self: &Arc<Self>) {
        arc_self.ready.lock().push_back(arc_self.id);
    }
}

impl Default for VirtualRuntime {
    fn default() -> Self {
        Self::new()
    }
}

impl VirtualRuntime {
    pub fn new() -> Self {
        Self {
            inner: Arc::new(Inner {
                now_ns: AtomicU64::new(0),
                seq: AtomicU64::new(0),
                tasks: Mutex::new(Slots::default()),
                ready: Arc::new(Mutex::new(VecDeque::new())),
                timers: Mutex::new(BinaryHeap::new()),
                timer_wakers: Mutex::new(Default::default()),
            }),
        }
    }

    fn now_ns(&self) -> u64 {
        self.inner.now_ns.load(Ordering::SeqCst)
    }

    /// Runs `fut` and everything it spawns until no task can make progress.
    /// Tasks still pending at that point (idle services) are dropped.
    pub fn block_on<T: Send + 'static>(
        &self,
        fut: impl Future<Output = T> + Send + 'static,
    ) -> Result<T, Stalled> {
        let out = Arc::new(Mutex::new(None));
        let slot = out.clone();
        self.spawn(Box::pin(async move {
            let v = fut.await;
            *slot.lock() = Some(v);
        }));
        self.run_until_idle();
        let v = out.lock().take();
        let stalled = Stalled {
            at_ms: self.now_ns() / 1_000_000,
        };
        let mut slots = self.inner.tasks.lock();
        slots.futures.clear();
        slots.free.clear();
        drop(slots);
        self.inner.timers.lock().clear();
        self.inner.timer_wakers.lock().clear();
        self.inner.ready.lock().clear();
        v.ok_or(stalled)
    }

    fn run_until_idle(&self) {
        loop {
            loop {
                let next = self.inner.ready.lock().pop_front();
                let Some(id) = next else { break };
                self.poll_task(id);
            }
            if !self.fire_next_timers() {
                break;
            }
        }
    }

    fn poll_task(&self, id: usize) {
        let fut = {
            let mut slots = self.inner.tasks.lock();
            match slots.futures.get_mut(id) {
                Some(f) => f.take(),
                None => None,
            }
        };
        // Spurious wake of a finished task, or a task already being polled.
        let Some(mut fut) = fut else { return };
        let w = waker(Arc::new(TaskWaker {
            id,
            ready: self.inner.ready.clone(),
        }));
        let mut cx = Context::from_waker(&w);
        let mut slots_done = false;
        if fut.as_mut().poll(&mut cx).is_ready() {
            slots_done = true;
        }
        let mut slots = self.inner.tasks.lock();
        if slots_done {
            slots.free.push(id);
        } else {
            slots.futures[id] = Some(fut);
        }
    }

    fn fire_next_timers(&self) -> bool {
        let mut timers = self.inner.timers.lock();
        let Some(&Reverse((deadline, _))) = timers.peek() else {
            return false;
        };
        let mut due = Vec::new();
        while let Some(&Reverse((d, seq))) = timers.peek() {
            if d != deadline {
                break;
            }
            timers.pop();
            due.push(seq);
        }
        drop(timers);
        if deadline > self.now_ns() {
            self.inner.now_ns.store(deadline, Ordering::SeqCst);
        }
        let mut wakers = self.inner.timer_wakers.lock();
        let to_wake: Vec<Waker> = due.iter().filter_map(|s| wakers.remove(s)).collect();
        drop(wakers);
        for w in to_wake {
            w.wake();
        }
        true
    }
}

struct Sleep {
    rt: VirtualRuntime,
    deadline: u64,
    timer: Option<u64>,
}

impl Future for Sleep {
    type Output = ();

    fn poll(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<()> {
        if self.rt.now_ns() >= self.deadline {
            return Poll::Ready(());
        }
        let inner = self.rt.inner.clone();
        match self.timer {
            Some(seq) => {
                inner.timer_wakers.lock().insert(seq, cx.waker().clone());
            }
            None => {
                let seq = inner.seq.fetch_add(1, Ordering::SeqCst);
                inner.timer_wakers.lock().insert(seq, cx.waker().clone());
                inner.timers.lock().push(Reverse((self.deadline, seq)));
                self.timer = Some(seq);
            }
        }
        Poll::Pending
    }
}

impl Drop for Sleep {
    fn drop(&mut self) {
        if let Some(seq) = self.timer {
            self.rt.inner.timer_wakers.lock().remove(&seq);
        }
    }
}

impl Runtime for VirtualRuntime {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.now_ns())
    }

    fn sleep(&self, d: Duration) -> BoxFuture<'static, ()> {
        let nanos = u64::try_from(d.as_nanos()).unwrap_or(u64::MAX);
        Box::pin(Sleep {
            rt: self.clone(),
            deadline: self.now_ns().saturating_add(nanos),
            timer: None,
        })
    }

    fn spawn(&self, fut: BoxFuture<'static, ()>) {
        let mut slots = self.inner.tasks.lock();
        let id = match slots.free.pop() {
            Some(id) => {
                slots.futures[id] = Some(fut);
                id
            }
            None => {
                slots.futures.push(Some(fut));
                slots.futures.len() - 1
            }
        };
        drop(slots);
        self.inner.ready.lock().push_back(id);
    }
}

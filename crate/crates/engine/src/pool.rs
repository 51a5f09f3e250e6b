//! Bounded thread pool shared by all executions on a worker. Work is served
//! FIFO; cancelling an execution purges its queued items.

use std::collections::VecDeque;
use std::sync::Arc;
use std::thread::JoinHandle;

use parking_lot::{Condvar, Mutex};

type Task = Box<dyn FnOnce() + Send>;

struct Queue {
    items: VecDeque<(u128, Task)>,
    shutdown: bool,
}

struct Shared {
    queue: Mutex<Queue>,
    ready: Condvar,
}

pub struct WorkerPool {
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl WorkerPool {
    pub fn new(width: usize) -> WorkerPool {
        let shared = Arc::new(Shared {
            queue: Mutex::new(Queue { items: VecDeque::new(), shutdown: false }),
            ready: Condvar::new(),
        });
        let threads = (0..width.max(1))
            .map(|i| {
                let shared = shared.clone();
                std::thread::Builder::new()
                    .name(format!("leaf-{i}"))
                    .spawn(move || run(&shared))
                    .expect("spawn pool thread")
            })
            .collect();
        WorkerPool { shared, threads }
    }

    pub fn width(&self) -> usize {
        self.threads.len()
    }

    pub fn submit(&self, execution: u128, task: impl FnOnce() + Send + 'static) {
        self.shared.queue.lock().items.push_back((execution, Box::new(task)));
        self.shared.ready.notify_one();
    }

    /// Drops queued tasks of `execution`; returns how many were dropped.
    pub fn purge(&self, execution: u128) -> usize {
        let mut q = self.shared.queue.lock();
        let before = q.items.len();
        q.items.retain(|(id, _)| *id != execution);
        before - q.items.len()
    }

    pub fn queued(&self) -> usize {
        self.shared.queue.lock().items.len()
    }
}

fn run(shared: &Shared) {
    loop {
        let task = {
            let mut q = shared.queue.lock();
            loop {
                if let Some((_, t)) = q.items.pop_front() {
                    break t;
                }
                if q.shutdown {
                    return;
                }
                shared.ready.wait(&mut q);
            }
        };
        task();
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.shared.queue.lock().shutdown = true;
        self.shared.ready.notify_all();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::time::Duration;

    #[test]
    fn runs_everything_in_order_on_one_thread() {
        let pool = WorkerPool::new(1);
        let log = Arc::new(Mutex::new(Vec::new()));
        for i in 0..20 {
            let log = log.clone();
            pool.submit(1, move || log.lock().push(i));
        }
        drop(pool);
        assert_eq!(*log.lock(), (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn purge_drops_only_that_execution() {
        let pool = WorkerPool::new(1);
        let (tx, rx) = crossbeam_channel::bounded::<()>(0);
        pool.submit(9, move || {
            let _ = rx.recv();
        });
        let ran = Arc::new(AtomicUsize::new(0));
        for id in [1, 2, 1, 2] {
            let ran = ran.clone();
            pool.submit(id, move || {
                ran.fetch_add(id as usize, Ordering::SeqCst);
            });
        }
        std::thread::sleep(Duration::from_millis(20));
        assert_eq!(pool.purge(1), 2);
        tx.send(()).unwrap();
        drop(pool);
        assert_eq!(ran.load(Ordering::SeqCst), 4);
    }
}

//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon
//! global pool; without it, or with [`Execution::Sequential`], every
//! helper runs a plain loop. Results are returned in index order either
//! way, so callers that derive per-item RNG streams from the index get
//! identical output under both modes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `f(0), …, f(n-1)` in order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Evaluate `f` over `items`, handing each result to `sink` on the
    /// calling thread in index order as soon as its predecessors are done.
    /// Stops early (returning the sink's error) if `sink` fails.
    pub fn for_each_ordered<I, T, E, F, S>(self, items: &[I], f: F, mut sink: S) -> Result<(), E>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
        S: FnMut(usize, T) -> Result<(), E>,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                use std::collections::BTreeMap;
                use std::sync::atomic::{AtomicBool, Ordering};
                use std::sync::mpsc;

                let stop = AtomicBool::new(false);
                let (tx, rx) = mpsc::channel::<(usize, T)>();
                std::thread::scope(|scope| {
                    let stop = &stop;
                    let f = &f;
                    scope.spawn(move || {
                        items.par_iter().enumerate().for_each_with(tx, |tx, (i, item)| {
                            if !stop.load(Ordering::Relaxed) {
                                let _ = tx.send((i, f(item)));
                            }
                        });
                    });
                    let mut pending = BTreeMap::new();
                    let mut next = 0;
                    for (i, value) in rx {
                        pending.insert(i, value);
                        while let Some(value) = pending.remove(&next) {
                            if let Err(e) = sink(next, value) {
                                stop.store(true, Ordering::Relaxed);
                                return Err(e);
                            }
                            next += 1;
                        }
                    }
                    Ok(())
                })
            }
            _ => {
                for (i, item) in items.iter().enumerate() {
                    sink(i, f(item))?;
                }
                Ok(())
            }
        }
    }
}

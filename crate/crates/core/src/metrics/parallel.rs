use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

// Units handed out per worker; more units smooth out degree skew.
const UNITS_PER_WORKER: usize = 8;

/// Splits `0..len` into contiguous units that `workers` threads pull from a
/// shared counter. Each worker builds one scratch state with `init` and
/// reuses it across its units. Results come back in unit order, so any
/// reduction done by the caller is independent of scheduling.
pub(crate) fn map_units<S, R, I, F>(len: usize, workers: usize, init: I, work: F) -> Vec<(Range<usize>, R)>
where
    R: Send,
    I: Fn() -> S + Sync,
    F: Fn(&mut S, Range<usize>) -> R + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || len < 2 {
        let mut scratch = init();
        return vec![(0..len, work(&mut scratch, 0..len))];
    }
    let unit = len.div_ceil(workers * UNITS_PER_WORKER).max(1);
    let units = len.div_ceil(unit);
    let next = AtomicUsize::new(0);

    let mut done: Vec<(usize, R)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers.min(units))
            .map(|_| {
                scope.spawn(|| {
                    let mut scratch = init();
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= units {
                            break;
                        }
                        let range = i * unit..((i + 1) * unit).min(len);
                        out.push((i, work(&mut scratch, range)));
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("metrics worker panicked"))
            .collect()
    });
    done.sort_unstable_by_key(|(i, _)| *i);
    done.into_iter()
        .map(|(i, r)| (i * unit..((i + 1) * unit).min(len), r))
        .collect()
}

//! Bounded fan-out of independent jobs over scoped threads.

use std::thread;

/// Runs `work(i)` for `i in 0..count` on at most `jobs` threads and returns
/// the results in index order. Worker `w` takes indices `w, w + jobs, ...`,
/// so the assignment depends only on `(jobs, count)` and nothing is shared
/// between workers.
pub fn fan_out<T: Send>(jobs: usize, count: usize, work: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = jobs.clamp(1, count.max(1));
    if workers == 1 {
        return (0..count).map(&work).collect();
    }
    let work = &work;
    let mut parts: Vec<Vec<(usize, T)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..count)
                        .step_by(workers)
                        .map(|i| (i, work(i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    for (i, r) in parts.iter_mut().flat_map(std::mem::take) {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .map(|r| r.expect("every index is assigned to exactly one worker"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_index_order() {
        for jobs in [1, 2, 3, 8, 50] {
            let out = fan_out(jobs, 17, |i| i * i);
            assert_eq!(out, (0..17).map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(fan_out(4, 0, |i| i).is_empty());
    }
}

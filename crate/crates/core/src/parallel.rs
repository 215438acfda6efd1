//! Minimal deterministic fork/join helper.
//!
//! Work items are distributed round-robin over scoped threads and results are
//! reassembled in input order, so output never depends on scheduling. Callers
//! must keep the per-item computation deterministic (seeds derived from item
//! identity, not from execution order).

/// Apply `f` to every item using up to `threads` worker threads. With
/// `threads <= 1` this degenerates to a plain sequential map.
pub fn parallel_map<T, U, F>(items: &[T], threads: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let workers = threads.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut out: Vec<Option<U>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    let mut part = Vec::new();
                    let mut i = w;
                    while i < items.len() {
                        part.push((i, f(&items[i])));
                        i += workers;
                    }
                    part
                })
            })
            .collect();
        for handle in handles {
            for (i, value) in handle.join().expect("worker panicked") {
                out[i] = Some(value);
            }
        }
    });
    out.into_iter().map(|v| v.expect("slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let items: Vec<u64> = (0..97).collect();
        let seq = parallel_map(&items, 1, |x| x * x);
        let par = parallel_map(&items, 4, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(par[10], 100);
    }

    #[test]
    fn handles_empty_input() {
        let items: Vec<u64> = Vec::new();
        let out = parallel_map(&items, 4, |x| x + 1);
        assert!(out.is_empty());
    }
}

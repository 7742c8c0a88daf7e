//! Largest-remainder apportionment.

/// Share `total` integer units across `weights` proportionally, rounding by
/// largest remainder (ties go to the lower index). Zero-weight entries get
/// nothing. Panics if all weights are zero and `total > 0`.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if total == 0 {
        return vec![0; weights.len()];
    }
    assert!(sum > 0.0, "apportionment needs a positive weight");
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

/// Like [`largest_remainder`] but never assigns more than `caps[i]` to entry
/// `i`; the excess is re-apportioned over the uncapped entries. Returns
/// `None` when the caps cannot absorb `total`.
pub fn capped_largest_remainder(total: usize, weights: &[f64], caps: &[usize]) -> Option<Vec<usize>> {
    if caps.iter().sum::<usize>() < total {
        return None;
    }
    let mut out = vec![0usize; weights.len()];
    let mut open: Vec<bool> = weights
        .iter()
        .zip(caps)
        .map(|(&w, &c)| w > 0.0 && c > 0)
        .collect();
    let mut remaining = total;
    while remaining > 0 {
        let w: Vec<f64> = weights
            .iter()
            .zip(&open)
            .map(|(&w, &o)| if o { w } else { 0.0 })
            .collect();
        if w.iter().all(|&v| v == 0.0) {
            // positive-weight bins are exhausted; fall back to any bin with room
            let w: Vec<f64> = out
                .iter()
                .zip(caps)
                .map(|(&o, &c)| if o < c { 1.0 } else { 0.0 })
                .collect();
            let extra = largest_remainder(remaining, &w);
            for (i, e) in extra.into_iter().enumerate() {
                let take = e.min(caps[i] - out[i]);
                out[i] += take;
                remaining -= take;
            }
            continue;
        }
        let share = largest_remainder(remaining, &w);
        for i in 0..out.len() {
            let room = caps[i] - out[i];
            let take = share[i].min(room);
            out[i] += take;
            remaining -= take;
            if out[i] == caps[i] {
                open[i] = false;
            }
        }
    }
    Some(out)
}

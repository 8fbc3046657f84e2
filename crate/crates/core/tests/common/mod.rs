//! Brute-force references shared by the integration tests.

/// Cheapest way to cover `block` with one hyperedge of at most k elements.
pub fn block_cost(block: usize, k: usize, n: usize, costs: &[Vec<f64>]) -> f64 {
    if (block.count_ones() as usize) > k {
        return f64::INFINITY;
    }
    let mut best = f64::INFINITY;
    for s in 0..(1usize << n) {
        if s & block == block && (s.count_ones() as usize) <= k {
            for row in costs {
                best = best.min(row[s]);
            }
        }
    }
    best
}

/// Minimum over every set partition of the left side.
pub fn enumerate_covers(n: usize, k: usize, costs: &[Vec<f64>]) -> f64 {
    fn go(rest: usize, n: usize, k: usize, costs: &[Vec<f64>]) -> f64 {
        if rest == 0 {
            return 0.0;
        }
        let low = rest & rest.wrapping_neg();
        let others = rest & !low;
        let mut best = f64::INFINITY;
        let mut sub = others;
        loop {
            let block = sub | low;
            let c = block_cost(block, k, n, costs);
            if c.is_finite() {
                best = best.min(c + go(rest & !block, n, k, costs));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        best
    }
    go((1 << n) - 1, n, k, costs)
}

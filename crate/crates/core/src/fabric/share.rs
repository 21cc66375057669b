/// Max-min fair division of `capacity` among flows with the given demands.
///
/// Water-filling: flows demanding less than the current fair level are fully
/// served and their leftover is redistributed among the rest.
pub fn max_min_fair(demands: &[f64], capacity: f64) -> Vec<f64> {
    let mut alloc = vec![0.0; demands.len()];
    let mut order: Vec<usize> = (0..demands.len()).filter(|&i| demands[i] > 0.0).collect();
    order.sort_by(|&a, &b| demands[a].total_cmp(&demands[b]).then(a.cmp(&b)));

    let mut remaining = capacity.max(0.0);
    let mut left = order.len();
    for &i in &order {
        let level = remaining / left as f64;
        let give = demands[i].min(level);
        alloc[i] = give;
        remaining -= give;
        left -= 1;
    }
    alloc
}

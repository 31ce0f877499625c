use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Phpfs,
    Optimal,
}

/// Worst-case operation count of a scheduler.
///
/// Exhaustive PF: `(N_C + N_D)^K`. Heuristic:
/// `(K log2 K + 5K) * (N_C^2 (N_C+1)/2 + N_D^2 (N_D+1)/2) * M`.
pub fn complexity_estimate(kind: SchedulerKind, n_c: u32, n_d: u32, k: u32, m: u32) -> f64 {
    let (nc, nd, kf, mf) = (n_c as f64, n_d as f64, k as f64, m as f64);
    match kind {
        SchedulerKind::Optimal => (nc + nd).powf(kf),
        SchedulerKind::Phpfs => {
            let per_alloc = kf * kf.log2() + 5.0 * kf;
            let per_adjust = nc * nc * (nc + 1.0) / 2.0 + nd * nd * (nd + 1.0) / 2.0;
            per_alloc * per_adjust * mf
        }
    }
}

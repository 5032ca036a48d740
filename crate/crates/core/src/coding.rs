//! MDS coded-caching reliability.
//!
//! A file of `Z` bits is split into `k` source fragments of `Z/k` bits and
//! expanded to `n` coded fragments held by distinct CUs; any `k` suffice.
//! Link successes are independent, so the recovery probability is a
//! Poisson-binomial tail.

use crate::channel::{distance, LinkStats};
use crate::config::{CellMode, RecoveryMode};
use crate::error::{Error, Result};
use crate::world::NodeState;

/// Per-file coding decision and its link-level outcome for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingPlan {
    pub su_id: usize,
    pub scheduled: bool,
    pub bandwidth_hz: f64,
    pub k: usize,
    pub n: usize,
    pub fragment_bits: f64,
    /// CU ids caching one fragment each, nearest first.
    pub holders: Vec<usize>,
    /// Holders whose mean SNR clears the threshold.
    pub eligible: Vec<usize>,
    /// The `k` eligible holders with the largest STP.
    pub selected: Vec<usize>,
    /// STP of every eligible holder, in `eligible` order.
    pub stp: Vec<(usize, f64)>,
    /// False when fewer than `k` eligible holders exist.
    pub feasible: bool,
    pub recovery_probability: f64,
}

impl CodingPlan {
    /// Whether CU `cu` sends its fragment to the ground vehicle.
    pub fn transmits(&self, cu: usize) -> bool {
        self.selected.contains(&cu)
    }

    pub fn stp_of(&self, cu: usize) -> Option<f64> {
        self.stp.iter().find(|(id, _)| *id == cu).map(|&(_, e)| e)
    }

    /// Product of STPs over the selected set.
    pub fn selected_stp_product(&self) -> f64 {
        self.selected.iter().map(|&e| self.stp_of(e).unwrap_or(0.0)).product()
    }
}

/// The `n` CUs nearest the SU (3-D distance, ties by id) hold the fragments.
pub fn assign_fragments(su: &NodeState, k: usize, n: usize, pool: &[NodeState]) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::Infeasible(format!("need 1 <= k <= n (k = {k}, n = {n})")));
    }
    if n > pool.len() {
        return Err(Error::Infeasible(format!("{n} holders requested from a pool of {}", pool.len())));
    }
    let mut ranked: Vec<(f64, usize)> = pool.iter().map(|cu| (distance(su.position, cu.position), cu.id)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(n).map(|(_, id)| id).collect())
}

/// Holders whose mean SNR is at least `gamma0` (linear).
pub fn eligible_cooperators(holders: &[(usize, LinkStats)], gamma0: f64) -> Vec<usize> {
    holders
        .iter()
        .filter(|(_, l)| l.mean_snr >= gamma0)
        .map(|&(id, _)| id)
        .collect()
}

/// Picks the `k` entries with the largest STP, ties to the smaller id.
/// Returns the selection and whether a full `k` was available.
pub fn select_cooperators(stp: &[(usize, f64)], k: usize) -> (Vec<usize>, bool) {
    let mut ranked = stp.to_vec();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let feasible = ranked.len() >= k;
    (ranked.into_iter().take(k).map(|(id, _)| id).collect(), feasible)
}

/// Probability that at least `k` of the independent links succeed.
///
/// Dynamic programming over the success-count distribution, `O(|S|²)`.
pub fn file_recovery_probability(etas: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1);
    if etas.len() < k {
        return 0.0;
    }
    let mut dist = vec![0.0; etas.len() + 1];
    dist[0] = 1.0;
    for (seen, &eta) in etas.iter().enumerate() {
        for j in (0..=seen + 1).rev() {
            let stay = dist[j] * (1.0 - eta);
            let up = if j > 0 { dist[j - 1] * eta } else { 0.0 };
            dist[j] = stay + up;
        }
    }
    dist[k..].iter().sum::<f64>().clamp(0.0, 1.0)
}

/// Brute-force counterpart of [`file_recovery_probability`]: sums the
/// probability of every success/failure pattern with at least `k` successes.
pub fn file_recovery_enumerated(etas: &[f64], k: usize) -> f64 {
    assert!(etas.len() < 31, "enumeration is exponential");
    let n = etas.len();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        if (mask.count_ones() as usize) < k {
            continue;
        }
        let p: f64 = etas
            .iter()
            .enumerate()
            .map(|(i, &e)| if mask >> i & 1 == 1 { e } else { 1.0 - e })
            .product();
        total += p;
    }
    total
}

/// Recovery probability of a file under the given transmission semantics.
///
/// `eligible_stp` holds every eligible holder's STP, `selected` the ids
/// chosen for transmission.
pub fn recovery_for_mode(mode: RecoveryMode, eligible_stp: &[(usize, f64)], selected: &[usize], k: usize) -> f64 {
    let stp_of = |id: usize| eligible_stp.iter().find(|e| e.0 == id).map_or(0.0, |e| e.1);
    match mode {
        RecoveryMode::AllEligible => {
            let etas: Vec<f64> = eligible_stp.iter().map(|e| e.1).collect();
            file_recovery_probability(&etas, k)
        }
        RecoveryMode::SelectedK => {
            let etas: Vec<f64> = selected.iter().map(|&id| stp_of(id)).collect();
            file_recovery_probability(&etas, k)
        }
        RecoveryMode::NonCoded => selected.first().map_or(0.0, |&id| stp_of(id)),
    }
}

/// One SU's contribution to a cell it covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellContribution {
    pub scheduled: bool,
    pub file_recovery: f64,
    pub selected_stp_product: f64,
}

impl From<&CodingPlan> for CellContribution {
    fn from(p: &CodingPlan) -> Self {
        Self {
            scheduled: p.scheduled,
            file_recovery: p.recovery_probability,
            selected_stp_product: p.selected_stp_product(),
        }
    }
}

/// Probability that at least one covering SU's map of the cell is recovered.
pub fn grid_recovery_probability(covering: &[CellContribution], mode: CellMode) -> f64 {
    let miss: f64 = covering
        .iter()
        .filter(|c| c.scheduled)
        .map(|c| {
            let hit = match mode {
                CellMode::Simplified => c.file_recovery,
                CellMode::LinkProduct => c.file_recovery * c.selected_stp_product,
            };
            1.0 - hit
        })
        .product();
    (1.0 - miss).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryArea {
    /// `Σ Pr_c · A`, square meters.
    pub area_m2: f64,
    /// `Σ Pr_c / C`.
    pub normalized: f64,
}

pub fn effective_recovery_area(pr: &[f64], cell_area: f64) -> RecoveryArea {
    let sum: f64 = pr.iter().sum();
    RecoveryArea {
        area_m2: sum * cell_area,
        normalized: if pr.is_empty() { 0.0 } else { sum / pr.len() as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::NodeKind;
    use proptest::prelude::*;

    fn cu(id: usize, x: f64, y: f64) -> NodeState {
        NodeState {
            id,
            kind: NodeKind::CoopUav,
            position: [x, y, 100.0],
            waypoint: [x, y],
            speed: 0.0,
            sensor: None,
        }
    }

    fn link_with_snr_db(db: f64) -> LinkStats {
        let snr = 10f64.powf(db / 10.0);
        LinkStats {
            distance_m: 150.0,
            mean_gain: snr / 0.15,
            mean_snr: snr,
            rician_factor: 3.0,
            zeta: 4.0 * 0.15 / snr,
        }
    }

    #[test]
    fn all_cus_hold_when_n_is_pool() {
        let pool: Vec<_> = (0..5).map(|i| cu(i, i as f64 * 100.0, 0.0)).collect();
        let su = cu(0, 0.0, 0.0);
        let mut h = assign_fragments(&su, 2, 5, &pool).unwrap();
        h.sort();
        assert_eq!(h, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn nearest_eight_of_sixteen() {
        let xs = [310.0, 20.0, 900.0, 450.0, 75.0, 610.0, 130.0, 880.0, 5.0, 520.0, 260.0, 700.0, 390.0, 45.0, 999.0, 160.0];
        let pool: Vec<_> = xs.iter().enumerate().map(|(i, &x)| cu(i, x, 30.0)).collect();
        let su = cu(0, 100.0, 0.0);
        let got = assign_fragments(&su, 3, 8, &pool).unwrap();
        let mut oracle: Vec<(f64, usize)> = pool.iter().map(|c| ((c.position[0] - 100.0).abs(), c.id)).collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect: Vec<usize> = oracle.iter().take(8).map(|x| x.1).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn ties_break_by_id() {
        let pool = vec![cu(3, 10.0, 0.0), cu(1, -10.0, 0.0), cu(2, 0.0, 10.0)];
        let su = cu(0, 0.0, 0.0);
        assert_eq!(assign_fragments(&su, 1, 2, &pool).unwrap(), vec![1, 2]);
    }

    #[test]
    fn k_above_n_or_pool_too_small() {
        let pool: Vec<_> = (0..4).map(|i| cu(i, i as f64, 0.0)).collect();
        let su = cu(0, 0.0, 0.0);
        assert!(assign_fragments(&su, 3, 2, &pool).is_err());
        assert!(assign_fragments(&su, 2, 5, &pool).is_err());
    }

    #[test]
    fn eligibility_threshold() {
        let holders = vec![(1, link_with_snr_db(30.0)), (2, link_with_snr_db(26.0)), (3, link_with_snr_db(28.0))];
        let gamma0 = 10f64.powf(2.7);
        assert_eq!(eligible_cooperators(&holders, gamma0), vec![1, 3]);
        assert_eq!(eligible_cooperators(&holders, 0.0), vec![1, 2, 3]);
        assert!(eligible_cooperators(&holders, 1e9).is_empty());
    }

    #[test]
    fn selection_order_statistics() {
        let stp = vec![(0, 0.9), (1, 0.5), (2, 0.7)];
        assert_eq!(select_cooperators(&stp, 2), (vec![0, 2], true));
        let (all, ok) = select_cooperators(&stp, 3);
        assert!(ok);
        assert_eq!(all.len(), 3);
        assert_eq!(select_cooperators(&[(5, 0.4), (2, 0.4)], 1), (vec![2], true));
        assert_eq!(select_cooperators(&stp, 4).1, false);
    }

    #[test]
    fn recovery_examples() {
        assert!((file_recovery_probability(&[0.7], 1) - 0.7).abs() < 1e-15);
        assert_eq!(file_recovery_probability(&[1.0, 1.0, 1.0], 2), 1.0);
        // Outcome enumeration: 0.9·0.8·0.5 + 0.9·0.8·0.5 + 0.9·0.2·0.5 + 0.1·0.8·0.5 = 0.85
        assert!((file_recovery_probability(&[0.9, 0.8, 0.5], 2) - 0.85).abs() < 1e-12);
        assert_eq!(file_recovery_probability(&[0.9], 2), 0.0);
    }

    #[test]
    fn mode_semantics() {
        let stp = vec![(4, 0.9), (7, 0.6), (9, 0.8)];
        let (sel, _) = select_cooperators(&stp, 2);
        let all = recovery_for_mode(RecoveryMode::AllEligible, &stp, &sel, 2);
        assert!((all - file_recovery_probability(&[0.9, 0.6, 0.8], 2)).abs() < 1e-15);
        let sk = recovery_for_mode(RecoveryMode::SelectedK, &stp, &sel, 2);
        assert!((sk - 0.72).abs() < 1e-15);
        let (best, _) = select_cooperators(&stp, 1);
        assert_eq!(recovery_for_mode(RecoveryMode::NonCoded, &stp, &best, 1), 0.9);
        assert_eq!(recovery_for_mode(RecoveryMode::NonCoded, &[], &[], 1), 0.0);
        assert_eq!(recovery_for_mode(RecoveryMode::NonCoded, &[(3, 0.4)], &[3], 1), 0.4);
    }

    #[test]
    fn cell_probability_examples() {
        assert_eq!(grid_recovery_probability(&[], CellMode::Simplified), 0.0);
        let off = CellContribution { scheduled: false, file_recovery: 0.9, selected_stp_product: 0.9 };
        assert_eq!(grid_recovery_probability(&[off], CellMode::Simplified), 0.0);
        let a = CellContribution { scheduled: true, file_recovery: 0.6, selected_stp_product: 1.0 };
        let b = CellContribution { scheduled: true, file_recovery: 0.5, selected_stp_product: 1.0 };
        assert!((grid_recovery_probability(&[a, b], CellMode::Simplified) - 0.8).abs() < 1e-15);
        let full = CellContribution { scheduled: true, file_recovery: 1.0, selected_stp_product: 1.0 };
        assert_eq!(grid_recovery_probability(&[full], CellMode::LinkProduct), 1.0);
    }

    #[test]
    fn cell_probability_matches_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cs = [
            CellContribution { scheduled: true, file_recovery: 0.6, selected_stp_product: 0.9 },
            CellContribution { scheduled: true, file_recovery: 0.5, selected_stp_product: 0.7 },
            CellContribution { scheduled: true, file_recovery: 0.3, selected_stp_product: 0.5 },
        ];
        let n = 400_000;
        let mut simp = 0usize;
        let mut lit = 0usize;
        for _ in 0..n {
            let mut any_s = false;
            let mut any_l = false;
            for c in &cs {
                let rec = rng.random_bool(c.file_recovery);
                any_s |= rec;
                any_l |= rec && rng.random_bool(c.selected_stp_product);
            }
            simp += any_s as usize;
            lit += any_l as usize;
        }
        let exact_s = grid_recovery_probability(&cs, CellMode::Simplified);
        let exact_l = grid_recovery_probability(&cs, CellMode::LinkProduct);
        assert!((simp as f64 / n as f64 - exact_s).abs() < 0.004);
        assert!((lit as f64 / n as f64 - exact_l).abs() < 0.004);
    }

    #[test]
    fn area_examples() {
        assert_eq!(effective_recovery_area(&[1.0; 400], 2500.0).area_m2, 1e6);
        assert_eq!(effective_recovery_area(&[0.0; 400], 2500.0).area_m2, 0.0);
        let r = effective_recovery_area(&[0.8, 0.2], 2500.0);
        assert!((r.area_m2 - 2500.0).abs() < 1e-9);
        assert!((r.normalized - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn dp_equals_enumeration(etas in prop::collection::vec(0.0f64..=1.0, 0..13), k in 1usize..14) {
            let dp = file_recovery_probability(&etas, k);
            let brute = file_recovery_enumerated(&etas, k);
            prop_assert!((dp - brute).abs() <= 1e-12, "{} vs {}", dp, brute);
        }

        #[test]
        fn nonincreasing_in_k(etas in prop::collection::vec(0.0f64..=1.0, 1..12)) {
            let mut prev = 1.0;
            for k in 1..=etas.len() {
                let p = file_recovery_probability(&etas, k);
                prop_assert!(p <= prev + 1e-12);
                prev = p;
            }
        }

        #[test]
        fn adding_a_link_never_hurts(etas in prop::collection::vec(0.0f64..=1.0, 1..11), extra in 0.0f64..=1.0, k in 1usize..6) {
            let before = file_recovery_probability(&etas, k);
            let mut more = etas.clone();
            more.push(extra);
            prop_assert!(file_recovery_probability(&more, k) >= before - 1e-12);
        }

        #[test]
        fn simplified_dominates_literal(
            items in prop::collection::vec((any::<bool>(), 0.0f64..=1.0, 0.0f64..=1.0), 0..6)
        ) {
            let cs: Vec<CellContribution> = items.iter()
                .map(|&(s, p, q)| CellContribution { scheduled: s, file_recovery: p, selected_stp_product: q })
                .collect();
            let simp = grid_recovery_probability(&cs, CellMode::Simplified);
            let lit = grid_recovery_probability(&cs, CellMode::LinkProduct);
            prop_assert!((0.0..=1.0).contains(&simp) && (0.0..=1.0).contains(&lit));
            prop_assert!(simp >= lit - 1e-15);
        }

        #[test]
        fn area_bounded(pr in prop::collection::vec(0.0f64..=1.0, 1..400)) {
            let a = effective_recovery_area(&pr, 2500.0);
            prop_assert!(a.area_m2 >= 0.0 && a.area_m2 <= pr.len() as f64 * 2500.0 + 1e-9);
        }
    }
}

//! Per-slot global-best particle swarm over a continuous relaxation of the
//! joint action.
//!
//! Each SU contributes three coordinates: a scheduling score in `[0, 1]`
//! (on when ≥ 0.5), a bandwidth level index and a `k` level index, the level
//! coordinates ranging over `[-0.5, L - 0.5]` so every level owns an equal
//! share of the box. Positions are rounded to the nearest levels at every
//! evaluation; a rounding over the
//! bandwidth budget is repaired by repeatedly lowering the largest scheduled
//! bandwidth (last SU first on ties) and, once every scheduled SU sits at the
//! lowest level, switching off the last scheduled SU.

use std::collections::HashMap;

use rand::Rng;

use crate::config::PsoConfig;
use crate::env::{ActionSpace, BandwidthRule, SlotContext, SuDecision};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub action: usize,
    pub reward: f64,
    /// Swarm-best reward after initialization and after every iteration.
    pub history: Vec<f64>,
}

struct Relaxation<'a> {
    space: &'a ActionSpace,
    bands: Vec<f64>,
    ks: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Relaxation<'a> {
    fn new(space: &'a ActionSpace, sus: usize) -> Result<Self> {
        if space.rule() != BandwidthRule::Levels {
            return Err(Error::Config("swarm search needs a leveled action space".into()));
        }
        let mut bands = space.bandwidth_levels().to_vec();
        bands.sort_by(f64::total_cmp);
        let mut ks = space.k_levels().to_vec();
        ks.sort_unstable();
        let lower = (0..sus).flat_map(|_| [0.0, -0.5, -0.5]).collect();
        let upper = (0..sus)
            .flat_map(|_| [1.0, bands.len() as f64 - 0.5, ks.len() as f64 - 0.5])
            .collect();
        Ok(Self { space, bands, ks, lower, upper })
    }

    fn level(x: f64, count: usize) -> usize {
        (x.round().max(0.0) as usize).min(count - 1)
    }

    fn round(&self, x: &[f64]) -> Result<usize> {
        let mut levels: Vec<Option<(usize, usize)>> = x
            .chunks(3)
            .map(|c| (c[0] >= 0.5).then(|| (Self::level(c[1], self.bands.len()), Self::level(c[2], self.ks.len()))))
            .collect();
        let total = self.space.total_bandwidth_hz() * (1.0 + 1e-9);
        loop {
            let used: f64 = levels.iter().flatten().map(|&(b, _)| self.bands[b]).sum();
            if used <= total {
                break;
            }
            let top = levels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.map(|(b, _)| (i, b)))
                .filter(|&(_, b)| b > 0)
                .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
            match top {
                Some((i, _)) => levels[i].as_mut().expect("scheduled").0 -= 1,
                None => {
                    let last = levels.iter().rposition(Option::is_some).expect("over budget implies scheduled");
                    levels[last] = None;
                }
            }
        }
        let decisions: Vec<SuDecision> = levels
            .iter()
            .map(|l| match *l {
                Some((b, k)) => SuDecision { scheduled: true, bandwidth_hz: self.bands[b], k: self.ks[k] },
                None => SuDecision { scheduled: false, bandwidth_hz: self.bands[0], k: self.ks[0] },
            })
            .collect();
        self.space
            .index_of(&decisions)
            .ok_or_else(|| Error::Infeasible("repaired swarm position is not a listed action".into()))
    }
}

/// Runs the swarm on one frozen slot.
pub fn pso_search<R: Rng + ?Sized>(ctx: &SlotContext, space: &ActionSpace, params: &PsoConfig, rng: &mut R) -> Result<PsoResult> {
    if params.particles == 0 {
        return Err(Error::Config("pso.particles must be positive".into()));
    }
    let relax = Relaxation::new(space, ctx.sus.len())?;
    let dims = relax.upper.len();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut score = |x: &[f64]| -> Result<(usize, f64)> {
        let idx = relax.round(x)?;
        if let Some(&r) = cache.get(&idx) {
            return Ok((idx, r));
        }
        let r = ctx.evaluate(space.get(idx)?)?.reward;
        cache.insert(idx, r);
        Ok((idx, r))
    };

    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(params.particles);
    let mut vel: Vec<Vec<f64>> = Vec::with_capacity(params.particles);
    let span: Vec<f64> = relax.upper.iter().zip(&relax.lower).map(|(u, l)| u - l).collect();
    for _ in 0..params.particles {
        pos.push((0..dims).map(|d| rng.random_range(relax.lower[d]..=relax.upper[d])).collect());
        vel.push(span.iter().map(|&s| rng.random_range(-s..=s)).collect());
    }
    let mut pbest = pos.clone();
    let mut pbest_val = Vec::with_capacity(params.particles);
    let (mut gbest, mut gbest_val, mut gbest_idx) = (pos[0].clone(), f64::NEG_INFINITY, 0);
    for x in &pos {
        let (idx, r) = score(x)?;
        pbest_val.push(r);
        if r > gbest_val {
            (gbest, gbest_val, gbest_idx) = (x.clone(), r, idx);
        }
    }
    let mut history = vec![gbest_val];

    for _ in 0..params.iterations {
        for p in 0..params.particles {
            for d in 0..dims {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = params.inertia * vel[p][d]
                    + params.cognitive * r1 * (pbest[p][d] - pos[p][d])
                    + params.social * r2 * (gbest[d] - pos[p][d]);
                vel[p][d] = v.clamp(-span[d], span[d]);
                pos[p][d] = (pos[p][d] + vel[p][d]).clamp(relax.lower[d], relax.upper[d]);
            }
            let (idx, r) = score(&pos[p])?;
            if r > pbest_val[p] {
                pbest_val[p] = r;
                pbest[p].clone_from(&pos[p]);
            }
            if r > gbest_val {
                (gbest, gbest_val, gbest_idx) = (pos[p].clone(), r, idx);
            }
        }
        history.push(gbest_val);
    }
    Ok(PsoResult {
        action: gbest_idx,
        reward: gbest_val,
        history,
    })
}

//! Frozen per-slot snapshot and action evaluation.
//!
//! Within a slot the geometry and files are fixed, so link statistics and
//! eligibility are computed once. STPs depend on the action only through
//! `(B, k)` and are memoized per SU.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::channel::{link_stats, LinkStats, RadioParams, StpEvaluator, Transfer};
use crate::coding::{
    assign_fragments, effective_recovery_area, eligible_cooperators, grid_recovery_probability, recovery_for_mode,
    select_cooperators, CellContribution, CodingPlan, RecoveryArea,
};
use crate::config::{CellMode, RecoveryMode, Scenario};
use crate::error::Result;
use crate::world::{MapFile, World};

use super::actions::{JointAction, SuDecision};

#[derive(Debug)]
pub struct SuSlot {
    pub file: MapFile,
    /// Fragment holders with their links to the ground vehicle.
    pub holders: Vec<(usize, LinkStats)>,
    pub eligible: Vec<usize>,
    stp_cache: Mutex<HashMap<(u64, usize), Vec<(usize, f64)>>>,
}

impl SuSlot {
    pub fn link(&self, cu: usize) -> Option<&LinkStats> {
        self.holders.iter().find(|(id, _)| *id == cu).map(|(_, l)| l)
    }
}

/// Everything needed to score any action in the current slot.
#[derive(Debug)]
pub struct SlotContext {
    pub slot: usize,
    pub sus: Vec<SuSlot>,
    pub cell_count: usize,
    pub cell_area: f64,
    /// For every cell, the SUs whose footprint covers it.
    pub coverage: Vec<Vec<usize>>,
    pub recovery_mode: RecoveryMode,
    pub cell_mode: CellMode,
    evaluator: StpEvaluator,
    contact_time_s: f64,
    power_w: f64,
    holders: usize,
}

#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub plans: Vec<CodingPlan>,
    pub cell_probability: Vec<f64>,
    pub area: RecoveryArea,
    /// `λ · Σ Pr_c · A` with `λ = 1/(C·A)`.
    pub reward: f64,
}

impl SlotOutcome {
    pub fn recovery(&self) -> Vec<f64> {
        self.plans.iter().map(|p| p.recovery_probability).collect()
    }
}

impl SlotContext {
    pub fn build(
        world: &World,
        files: Vec<MapFile>,
        scenario: &Scenario,
        evaluator: &StpEvaluator,
        recovery_mode: RecoveryMode,
        slot: usize,
    ) -> Result<Self> {
        let radio = RadioParams::from_scenario(scenario);
        let holders_n = scenario.config.effective_holders();
        let gv = world.ground.position;
        let mut sus = Vec::with_capacity(files.len());
        for (su, file) in world.sensing.iter().zip(files) {
            let ids = assign_fragments(su, 1, holders_n, &world.coop)?;
            let holders = ids
                .into_iter()
                .map(|id| Ok((id, link_stats(world.coop[id].position, gv, &radio)?)))
                .collect::<Result<Vec<_>>>()?;
            let eligible = eligible_cooperators(&holders, scenario.snr_threshold);
            sus.push(SuSlot {
                file,
                holders,
                eligible,
                stp_cache: Mutex::new(HashMap::new()),
            });
        }
        let cell_count = world.grid.cell_count();
        let mut coverage = vec![Vec::new(); cell_count];
        for (i, s) in sus.iter().enumerate() {
            for &c in &s.file.coverage {
                coverage[c].push(i);
            }
        }
        Ok(Self {
            slot,
            sus,
            cell_count,
            cell_area: world.grid.cell_area(),
            coverage,
            recovery_mode,
            cell_mode: scenario.config.coding.cell_mode,
            evaluator: evaluator.clone(),
            contact_time_s: scenario.contact_time_s,
            power_w: scenario.config.radio.transmit_power_w,
            holders: holders_n,
        })
    }

    /// STP of every eligible holder of SU `i` at bandwidth `bw` and code `k`.
    pub fn eligible_stp(&self, i: usize, bw: f64, k: usize) -> Result<Vec<(usize, f64)>> {
        let su = &self.sus[i];
        let key = (bw.to_bits(), k);
        if let Some(hit) = su.stp_cache.lock().expect("stp cache").get(&key) {
            return Ok(hit.clone());
        }
        let transfer = Transfer {
            file_bits: su.file.size_bits,
            k,
            bandwidth_hz: bw,
            contact_time_s: self.contact_time_s,
            power_w: self.power_w,
        };
        let etas = su
            .eligible
            .iter()
            .map(|&id| {
                let link = su.link(id).expect("eligible holder has a link");
                Ok((id, self.evaluator.stp(&transfer, link)?))
            })
            .collect::<Result<Vec<_>>>()?;
        su.stp_cache.lock().expect("stp cache").insert(key, etas.clone());
        Ok(etas)
    }

    /// Builds the coding plan of SU `i` under one decision.
    pub fn plan(&self, i: usize, decision: &SuDecision) -> Result<CodingPlan> {
        let su = &self.sus[i];
        let mode = self.recovery_mode;
        let k = if mode == RecoveryMode::NonCoded { 1 } else { decision.k };
        let schedulable = decision.scheduled && !su.file.coverage.is_empty();
        let stp = self.eligible_stp(i, decision.bandwidth_hz, k)?;
        let (selected, feasible) = select_cooperators(&stp, k);
        let recovery = if schedulable {
            recovery_for_mode(mode, &stp, &selected, k)
        } else {
            0.0
        };
        Ok(CodingPlan {
            su_id: su.file.owner_su,
            scheduled: schedulable,
            bandwidth_hz: decision.bandwidth_hz,
            k,
            n: self.holders,
            fragment_bits: su.file.size_bits / k as f64,
            holders: su.holders.iter().map(|h| h.0).collect(),
            eligible: su.eligible.clone(),
            selected,
            stp,
            feasible,
            recovery_probability: recovery,
        })
    }

    pub fn evaluate(&self, action: &JointAction) -> Result<SlotOutcome> {
        let plans = action
            .decisions
            .iter()
            .enumerate()
            .map(|(i, d)| self.plan(i, d))
            .collect::<Result<Vec<_>>>()?;
        let contributions: Vec<CellContribution> = plans.iter().map(CellContribution::from).collect();
        let mut scratch = Vec::new();
        let cell_probability: Vec<f64> = self
            .coverage
            .iter()
            .map(|covering| {
                scratch.clear();
                scratch.extend(covering.iter().map(|&i| contributions[i]));
                grid_recovery_probability(&scratch, self.cell_mode)
            })
            .collect();
        let area = effective_recovery_area(&cell_probability, self.cell_area);
        let reward = area.area_m2 / (self.cell_count as f64 * self.cell_area);
        Ok(SlotOutcome {
            plans,
            cell_probability,
            area,
            reward,
        })
    }
}

//! Deterministic SFC placement simulator.
//!
//! Stands in for a learned placement agent: each step completes requests
//! whose hold time has elapsed, then places arriving request bundles with a
//! greedy first-fit policy and records the resulting [`NetworkState`].

mod config;
mod state;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{ScenarioConfig, VnfProfile, VnfProfileOverride};
pub use state::{
    Binding, DcState, NetworkState, RequestStatus, SfcRequestRecord, StateError, VnfInstance,
    VnfStatus,
};

use crate::domain::{catalog, Bandwidth, SfcCatalogEntry, SfcType, VnfType};
use crate::num::Num;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("placement covers {got} of {expected} VNFs in the {sfc_type} chain")]
    IncompleteAssignment {
        sfc_type: SfcType,
        expected: usize,
        got: usize,
    },
    #[error("trajectory line {line}: {message}")]
    Trajectory { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A bundle of identical requests arriving in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub sfc_type: SfcType,
    pub bundle_size: u32,
}

/// Chain latency: per-VNF processing delay plus a fixed delay per inter-DC hop.
#[derive(Debug, Clone)]
pub struct LatencyModel {
    processing_ms: BTreeMap<VnfType, Num>,
    hop_delay_ms: Num,
}

impl LatencyModel {
    pub fn uniform(processing_delay_ms: Num, hop_delay_ms: Num) -> Self {
        LatencyModel {
            processing_ms: VnfType::ALL
                .into_iter()
                .map(|v| (v, processing_delay_ms))
                .collect(),
            hop_delay_ms,
        }
    }

    pub fn from_config(config: &ScenarioConfig) -> Self {
        LatencyModel {
            processing_ms: VnfType::ALL
                .into_iter()
                .map(|v| (v, config.profile(v).processing_delay_ms))
                .collect(),
            hop_delay_ms: config.hop_delay_ms,
        }
    }

    /// `placement[i]` is the DC hosting the i-th VNF of the chain.
    pub fn latency_of(&self, placement: &[u32], sfc_type: SfcType) -> Result<Num, SimError> {
        let entry = &catalog()[sfc_type.index()];
        self.chain_latency(entry, placement)
    }

    fn chain_latency(&self, entry: &SfcCatalogEntry, placement: &[u32]) -> Result<Num, SimError> {
        if placement.len() != entry.vnf_sequence.len() {
            return Err(SimError::IncompleteAssignment {
                sfc_type: entry.sfc_type,
                expected: entry.vnf_sequence.len(),
                got: placement.len(),
            });
        }
        let processing: Num = entry
            .vnf_sequence
            .iter()
            .map(|v| self.processing_ms[v])
            .sum();
        let hops = placement.windows(2).filter(|w| w[0] != w[1]).count() as i64;
        Ok(processing + self.hop_delay_ms * Num::from_int(hops))
    }
}

/// Where one VNF of a chain ends up during tentative placement.
enum Slot {
    Reuse(u64),
    Create { dc_id: u32 },
}

pub struct Simulator {
    config: ScenarioConfig,
    catalog: Vec<SfcCatalogEntry>,
    latency: LatencyModel,
    rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(config: ScenarioConfig, seed: u64) -> Result<Self, SimError> {
        config.validate()?;
        Ok(Simulator {
            latency: LatencyModel::from_config(&config),
            catalog: catalog(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn initial_state(&self) -> NetworkState {
        NetworkState::initial(&self.config.data_centers)
    }

    /// For each SFC type in catalog order, a bundle arrives with the configured
    /// probability; its size is uniform over the type's bundle range.
    pub fn draw_arrivals(&mut self) -> Vec<Arrival> {
        let mut arrivals = Vec::new();
        for entry in &self.catalog {
            let p = self.config.arrival_probability_for(entry.sfc_type);
            if self.rng.gen_bool(p) {
                let r = entry.bundle_range;
                arrivals.push(Arrival {
                    sfc_type: entry.sfc_type,
                    bundle_size: self.rng.gen_range(r.min..=r.max),
                });
            }
        }
        arrivals
    }

    fn sample_bandwidth(&mut self, bw: Bandwidth) -> Num {
        match bw {
            Bandwidth::Fixed(v) => v,
            Bandwidth::Range { min, max } => {
                // uniform on a 0.001 Mbps grid so values stay exact decimals
                let lo = (min * Num::from_int(1000)).to_i64().unwrap_or(1);
                let hi = (max * Num::from_int(1000)).to_i64().unwrap_or(lo);
                Num::new(self.rng.gen_range(lo..=hi), 1000)
            }
        }
    }

    /// Advances one time step. Completions are processed first, then each
    /// arrival bundle is placed request by request; a request that cannot be
    /// placed within its latency bound is rejected and leaves no trace.
    pub fn step(&mut self, state: &NetworkState, arrivals: &[Arrival]) -> NetworkState {
        let mut next = state.clone();
        next.time_step += 1;

        let mut by_id: HashMap<u64, usize> = next
            .vnf_instances
            .iter()
            .enumerate()
            .map(|(i, v)| (v.vnf_id, i))
            .collect();
        let dc_index: HashMap<u32, usize> = next
            .data_centers
            .iter()
            .enumerate()
            .map(|(i, d)| (d.dc_id(), i))
            .collect();

        let (due, kept): (Vec<Binding>, Vec<Binding>) = std::mem::take(&mut next.bindings)
            .into_iter()
            .partition(|b| b.release_step <= next.time_step);
        next.bindings = kept;
        let due_ids: BTreeSet<u64> = due.iter().map(|b| b.sfc_id).collect();
        for b in &due {
            for vnf_id in &b.vnf_ids {
                let v = &mut next.vnf_instances[by_id[vnf_id]];
                v.status = VnfStatus::Idle;
                let dc = &mut next.data_centers[dc_index[&v.dc_id]];
                dc.available_cpu_units = dc.available_cpu_units + v.cpu_req;
                dc.available_storage_gb = dc.available_storage_gb + v.storage_req;
            }
        }
        for r in next.sfc_requests.iter_mut() {
            if r.status == RequestStatus::Accepted && due_ids.contains(&r.sfc_id) {
                r.status = RequestStatus::Completed;
            }
        }

        // idle instances per type, ordered by (dc_id, vnf_id)
        let mut idle: BTreeMap<VnfType, BTreeSet<(u32, u64)>> = BTreeMap::new();
        for v in &next.vnf_instances {
            if v.status == VnfStatus::Idle {
                idle.entry(v.vnf_type).or_default().insert((v.dc_id, v.vnf_id));
            }
        }
        let mut next_vnf_id = next.vnf_instances.iter().map(|v| v.vnf_id).max().unwrap_or(0) + 1;
        let mut next_sfc_id = next.sfc_requests.iter().map(|r| r.sfc_id).max().unwrap_or(0) + 1;

        for arrival in arrivals {
            let entry = self.catalog[arrival.sfc_type.index()].clone();
            for _ in 0..arrival.bundle_size {
                let Some((slots, placement)) = self.tentative_placement(&next, &by_id, &idle, &entry)
                else {
                    // remaining requests in the bundle are identical and the state is unchanged
                    break;
                };
                let latency = self
                    .latency
                    .chain_latency(&entry, &placement)
                    .expect("placement covers the chain");
                if latency > entry.max_e2e_ms {
                    break;
                }
                let bandwidth = self.sample_bandwidth(entry.bandwidth_mbps);

                let mut held = Vec::with_capacity(slots.len());
                for (slot, vnf_type) in slots.into_iter().zip(&entry.vnf_sequence) {
                    let vnf_id = match slot {
                        Slot::Reuse(vnf_id) => {
                            let v = &mut next.vnf_instances[by_id[&vnf_id]];
                            idle.get_mut(vnf_type).map(|s| s.remove(&(v.dc_id, vnf_id)));
                            v.status = VnfStatus::Active;
                            vnf_id
                        }
                        Slot::Create { dc_id } => {
                            let profile = self.config.profile(*vnf_type);
                            let vnf_id = next_vnf_id;
                            next_vnf_id += 1;
                            by_id.insert(vnf_id, next.vnf_instances.len());
                            next.vnf_instances.push(VnfInstance {
                                vnf_id,
                                vnf_type: *vnf_type,
                                dc_id,
                                status: VnfStatus::Active,
                                cpu_req: profile.cpu_units,
                                storage_req: profile.storage_gb,
                            });
                            vnf_id
                        }
                    };
                    let v = &next.vnf_instances[by_id[&vnf_id]];
                    let dc = &mut next.data_centers[dc_index[&v.dc_id]];
                    dc.available_cpu_units = dc.available_cpu_units - v.cpu_req;
                    dc.available_storage_gb = dc.available_storage_gb - v.storage_req;
                    held.push(vnf_id);
                }

                let sfc_id = next_sfc_id;
                next_sfc_id += 1;
                next.sfc_requests.push(SfcRequestRecord {
                    sfc_id,
                    sfc_type: entry.sfc_type,
                    dc_id: placement[0],
                    e2e_latency_ms: latency,
                    bandwidth_mbps: bandwidth,
                    status: RequestStatus::Accepted,
                });
                next.bindings.push(Binding {
                    sfc_id,
                    vnf_ids: held,
                    release_step: next.time_step + self.config.hold_steps,
                });
            }
        }
        next
    }

    /// Greedy first-fit: per VNF, the lowest-(dc_id, vnf_id) idle instance of the
    /// right type whose DC can absorb its requirements, else a new instance on
    /// the lowest-dc_id DC with room. Works on a scratch copy of DC capacity.
    fn tentative_placement(
        &self,
        state: &NetworkState,
        by_id: &HashMap<u64, usize>,
        idle: &BTreeMap<VnfType, BTreeSet<(u32, u64)>>,
        entry: &SfcCatalogEntry,
    ) -> Option<(Vec<Slot>, Vec<u32>)> {
        let mut avail: Vec<(u32, Num, Num)> = state
            .data_centers
            .iter()
            .map(|d| (d.dc_id(), d.available_cpu_units, d.available_storage_gb))
            .collect();
        avail.sort_by_key(|a| a.0);
        let pos = |dc_id: u32, avail: &[(u32, Num, Num)]| {
            avail.iter().position(|a| a.0 == dc_id).expect("known dc")
        };
        let mut taken: Vec<u64> = Vec::new();
        let mut slots = Vec::with_capacity(entry.vnf_sequence.len());
        let mut placement = Vec::with_capacity(entry.vnf_sequence.len());

        for vnf_type in &entry.vnf_sequence {
            let reuse = idle.get(vnf_type).and_then(|set| {
                set.iter().find(|(dc_id, vnf_id)| {
                    if taken.contains(vnf_id) {
                        return false;
                    }
                    let v = &state.vnf_instances[by_id[vnf_id]];
                    let a = &avail[pos(*dc_id, &avail)];
                    a.1 >= v.cpu_req && a.2 >= v.storage_req
                })
            });
            if let Some(&(dc_id, vnf_id)) = reuse {
                let v = &state.vnf_instances[by_id[&vnf_id]];
                let i = pos(dc_id, &avail);
                avail[i].1 = avail[i].1 - v.cpu_req;
                avail[i].2 = avail[i].2 - v.storage_req;
                taken.push(vnf_id);
                slots.push(Slot::Reuse(vnf_id));
                placement.push(dc_id);
                continue;
            }
            let profile = self.config.profile(*vnf_type);
            let host = avail
                .iter_mut()
                .find(|a| a.1 >= profile.cpu_units && a.2 >= profile.storage_gb)?;
            host.1 = host.1 - profile.cpu_units;
            host.2 = host.2 - profile.storage_gb;
            slots.push(Slot::Create { dc_id: host.0 });
            placement.push(host.0);
        }
        Some((slots, placement))
    }
}

/// Runs `horizon` steps from the empty initial state; returns `horizon + 1` snapshots.
pub fn run(config: &ScenarioConfig, horizon: u64, seed: u64) -> Result<Vec<NetworkState>, SimError> {
    let mut sim = Simulator::new(config.clone(), seed)?;
    let mut states = Vec::with_capacity(horizon as usize + 1);
    states.push(sim.initial_state());
    for _ in 0..horizon {
        let arrivals = sim.draw_arrivals();
        let next = sim.step(states.last().expect("non-empty"), &arrivals);
        states.push(next);
    }
    Ok(states)
}

/// Writes one JSON-encoded [`NetworkState`] per line.
pub fn write_trajectory<W: Write>(mut out: W, states: &[NetworkState]) -> Result<(), SimError> {
    for s in states {
        serde_json::to_writer(&mut out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trajectory<R: BufRead>(input: R) -> Result<Vec<NetworkState>, SimError> {
    let mut states = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let state: NetworkState = serde_json::from_str(&line).map_err(|e| SimError::Trajectory {
            line: i + 1,
            message: e.to_string(),
        })?;
        states.push(state);
    }
    Ok(states)
}

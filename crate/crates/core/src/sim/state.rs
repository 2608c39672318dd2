use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{catalog, DataCenterSpec, SfcType, VnfType};
use crate::num::Num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VnfStatus {
    Idle,
    Active,
}

impl VnfStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VnfStatus::Idle => "idle",
            VnfStatus::Active => "active",
        }
    }
}

impl fmt::Display for VnfStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestStatus {
    Accepted,
    Rejected,
    Completed,
}

impl RequestStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestStatus::Accepted => "accepted",
            RequestStatus::Rejected => "rejected",
            RequestStatus::Completed => "completed",
        }
    }
}

impl fmt::Display for RequestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VnfInstance {
    pub vnf_id: u64,
    pub vnf_type: VnfType,
    pub dc_id: u32,
    pub status: VnfStatus,
    pub cpu_req: Num,
    pub storage_req: Num,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfcRequestRecord {
    pub sfc_id: u64,
    pub sfc_type: SfcType,
    /// DC hosting the first VNF of the chain.
    pub dc_id: u32,
    pub e2e_latency_ms: Num,
    pub bandwidth_mbps: Num,
    pub status: RequestStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcState {
    #[serde(flatten)]
    pub spec: DataCenterSpec,
    pub available_storage_gb: Num,
    pub available_cpu_units: Num,
}

impl DcState {
    pub fn fresh(spec: DataCenterSpec) -> Self {
        DcState {
            available_storage_gb: spec.total_storage_gb,
            available_cpu_units: spec.total_cpu_units,
            spec,
        }
    }

    pub fn dc_id(&self) -> u32 {
        self.spec.dc_id
    }
}

/// Simulator bookkeeping: which instances an accepted request holds and when it completes.
/// Not materialized in the relational store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub sfc_id: u64,
    pub vnf_ids: Vec<u64>,
    pub release_step: u64,
}

/// One snapshot of the network after a simulation step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkState {
    pub time_step: u64,
    pub data_centers: Vec<DcState>,
    pub vnf_instances: Vec<VnfInstance>,
    pub sfc_requests: Vec<SfcRequestRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bindings: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("duplicate {entity} id {id}")]
    DuplicateId { entity: &'static str, id: u64 },
    #[error("{entity} id must be positive")]
    NonPositiveId { entity: &'static str },
    #[error("{entity} {id} references unknown data center {dc_id}")]
    UnknownDataCenter {
        entity: &'static str,
        id: u64,
        dc_id: u32,
    },
    #[error("data center {dc_id}: available {resource} {available} outside [0, {total}]")]
    CapacityOutOfRange {
        dc_id: u32,
        resource: &'static str,
        available: Num,
        total: Num,
    },
    #[error("data center {dc_id}: active {resource} {used} does not match debited {debited}")]
    Conservation {
        dc_id: u32,
        resource: &'static str,
        used: Num,
        debited: Num,
    },
    #[error("vnf {vnf_id}: negative resource requirement")]
    NegativeRequirement { vnf_id: u64 },
    #[error("sfc request {sfc_id}: {what} must be positive")]
    NonPositiveValue { sfc_id: u64, what: &'static str },
    #[error("sfc request {sfc_id}: latency {latency} exceeds {sfc_type} bound {bound}")]
    LatencyBound {
        sfc_id: u64,
        sfc_type: SfcType,
        latency: Num,
        bound: Num,
    },
    #[error("binding inconsistency: {0}")]
    Binding(String),
}

impl NetworkState {
    pub fn initial(data_centers: &[DataCenterSpec]) -> Self {
        NetworkState {
            time_step: 0,
            data_centers: data_centers.iter().cloned().map(DcState::fresh).collect(),
            vnf_instances: Vec::new(),
            sfc_requests: Vec::new(),
            bindings: Vec::new(),
        }
    }

    pub fn dc(&self, dc_id: u32) -> Option<&DcState> {
        self.data_centers.iter().find(|d| d.dc_id() == dc_id)
    }

    pub fn idle_count(&self) -> usize {
        self.vnf_instances
            .iter()
            .filter(|v| v.status == VnfStatus::Idle)
            .count()
    }

    /// Checks every invariant of the materialized snapshot (ids, capacity
    /// bounds, resource conservation, latency bounds). Bindings are checked
    /// separately by [`NetworkState::validate_bindings`].
    pub fn validate(&self) -> Result<(), StateError> {
        let mut dcs: HashMap<u32, &DcState> = HashMap::new();
        for dc in &self.data_centers {
            let id = dc.dc_id();
            if id == 0 {
                return Err(StateError::NonPositiveId { entity: "data center" });
            }
            if dcs.insert(id, dc).is_some() {
                return Err(StateError::DuplicateId {
                    entity: "data center",
                    id: id as u64,
                });
            }
            for (resource, available, total) in [
                ("storage", dc.available_storage_gb, dc.spec.total_storage_gb),
                ("cpu", dc.available_cpu_units, dc.spec.total_cpu_units),
            ] {
                if available.is_negative() || available > total {
                    return Err(StateError::CapacityOutOfRange {
                        dc_id: id,
                        resource,
                        available,
                        total,
                    });
                }
            }
        }

        let mut used: BTreeMap<u32, (Num, Num)> = BTreeMap::new();
        let mut seen = HashSet::new();
        for v in &self.vnf_instances {
            if v.vnf_id == 0 {
                return Err(StateError::NonPositiveId { entity: "vnf" });
            }
            if !seen.insert(v.vnf_id) {
                return Err(StateError::DuplicateId {
                    entity: "vnf",
                    id: v.vnf_id,
                });
            }
            if !dcs.contains_key(&v.dc_id) {
                return Err(StateError::UnknownDataCenter {
                    entity: "vnf",
                    id: v.vnf_id,
                    dc_id: v.dc_id,
                });
            }
            if v.cpu_req.is_negative() || v.storage_req.is_negative() {
                return Err(StateError::NegativeRequirement { vnf_id: v.vnf_id });
            }
            if v.status == VnfStatus::Active {
                let e = used.entry(v.dc_id).or_insert((Num::ZERO, Num::ZERO));
                e.0 = e.0 + v.storage_req;
                e.1 = e.1 + v.cpu_req;
            }
        }
        for (id, dc) in &dcs {
            let (storage, cpu) = used.get(id).copied().unwrap_or((Num::ZERO, Num::ZERO));
            let debited_storage = dc.spec.total_storage_gb - dc.available_storage_gb;
            let debited_cpu = dc.spec.total_cpu_units - dc.available_cpu_units;
            if storage != debited_storage {
                return Err(StateError::Conservation {
                    dc_id: *id,
                    resource: "storage",
                    used: storage,
                    debited: debited_storage,
                });
            }
            if cpu != debited_cpu {
                return Err(StateError::Conservation {
                    dc_id: *id,
                    resource: "cpu",
                    used: cpu,
                    debited: debited_cpu,
                });
            }
        }

        let bounds: Vec<Num> = catalog().iter().map(|e| e.max_e2e_ms).collect();
        let mut seen = HashSet::new();
        for r in &self.sfc_requests {
            if r.sfc_id == 0 {
                return Err(StateError::NonPositiveId { entity: "sfc request" });
            }
            if !seen.insert(r.sfc_id) {
                return Err(StateError::DuplicateId {
                    entity: "sfc request",
                    id: r.sfc_id,
                });
            }
            if !dcs.contains_key(&r.dc_id) {
                return Err(StateError::UnknownDataCenter {
                    entity: "sfc request",
                    id: r.sfc_id,
                    dc_id: r.dc_id,
                });
            }
            if !r.e2e_latency_ms.is_positive() {
                return Err(StateError::NonPositiveValue {
                    sfc_id: r.sfc_id,
                    what: "e2e_latency_ms",
                });
            }
            if !r.bandwidth_mbps.is_positive() {
                return Err(StateError::NonPositiveValue {
                    sfc_id: r.sfc_id,
                    what: "bandwidth_mbps",
                });
            }
            let bound = bounds[r.sfc_type.index()];
            if r.status == RequestStatus::Accepted && r.e2e_latency_ms > bound {
                return Err(StateError::LatencyBound {
                    sfc_id: r.sfc_id,
                    sfc_type: r.sfc_type,
                    latency: r.e2e_latency_ms,
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Every active instance is held by exactly one accepted request, and
    /// every binding points at an accepted request and active instances.
    pub fn validate_bindings(&self) -> Result<(), StateError> {
        let status: HashMap<u64, VnfStatus> = self
            .vnf_instances
            .iter()
            .map(|v| (v.vnf_id, v.status))
            .collect();
        let requests: HashMap<u64, RequestStatus> = self
            .sfc_requests
            .iter()
            .map(|r| (r.sfc_id, r.status))
            .collect();
        let mut holders: HashMap<u64, u64> = HashMap::new();
        for b in &self.bindings {
            if requests.get(&b.sfc_id) != Some(&RequestStatus::Accepted) {
                return Err(StateError::Binding(format!(
                    "binding for sfc {} which is not an accepted request",
                    b.sfc_id
                )));
            }
            for vnf_id in &b.vnf_ids {
                if status.get(vnf_id) != Some(&VnfStatus::Active) {
                    return Err(StateError::Binding(format!(
                        "sfc {} holds vnf {vnf_id} which is not active",
                        b.sfc_id
                    )));
                }
                if let Some(prev) = holders.insert(*vnf_id, b.sfc_id) {
                    return Err(StateError::Binding(format!(
                        "vnf {vnf_id} held by both sfc {prev} and sfc {}",
                        b.sfc_id
                    )));
                }
            }
        }
        for v in &self.vnf_instances {
            if v.status == VnfStatus::Active && !holders.contains_key(&v.vnf_id) {
                return Err(StateError::Binding(format!(
                    "active vnf {} is not held by any request",
                    v.vnf_id
                )));
            }
        }
        let accepted = requests
            .values()
            .filter(|s| **s == RequestStatus::Accepted)
            .count();
        if accepted != self.bindings.len() {
            return Err(StateError::Binding(format!(
                "{accepted} accepted requests but {} bindings",
                self.bindings.len()
            )));
        }
        Ok(())
    }
}

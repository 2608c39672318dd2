//! SFC/VNF vocabulary and the built-in SFC characteristics catalog.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::num::Num;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("unknown SFC type {0:?}")]
    UnknownSfcType(String),
    #[error("unknown VNF type {0:?}")]
    UnknownVnfType(String),
}

/// Virtual network function kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VnfType {
    /// Network address translation.
    #[serde(rename = "NAT")]
    Nat,
    /// Firewall.
    #[serde(rename = "FW")]
    Fw,
    /// Intrusion detection and prevention.
    #[serde(rename = "IDPS")]
    Idps,
    /// Video optimization controller.
    #[serde(rename = "VOC")]
    Voc,
    /// Traffic monitor.
    #[serde(rename = "TM")]
    Tm,
    /// WAN optimizer.
    #[serde(rename = "WO")]
    Wo,
}

impl VnfType {
    pub const ALL: [VnfType; 6] = [
        VnfType::Nat,
        VnfType::Fw,
        VnfType::Idps,
        VnfType::Voc,
        VnfType::Tm,
        VnfType::Wo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VnfType::Nat => "NAT",
            VnfType::Fw => "FW",
            VnfType::Idps => "IDPS",
            VnfType::Voc => "VOC",
            VnfType::Tm => "TM",
            VnfType::Wo => "WO",
        }
    }
}

impl fmt::Display for VnfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VnfType {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        VnfType::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| DomainError::UnknownVnfType(s.to_string()))
    }
}

/// Service function chain (application) kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SfcType {
    /// Cloud gaming.
    #[serde(rename = "CG")]
    Cg,
    /// Augmented reality.
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "VoIP")]
    Voip,
    /// Video streaming.
    #[serde(rename = "VS")]
    Vs,
    /// Massive IoT.
    #[serde(rename = "MIoT")]
    Miot,
    /// Industry 4.0.
    #[serde(rename = "Ind4.0")]
    Ind40,
}

impl SfcType {
    pub const ALL: [SfcType; 6] = [
        SfcType::Cg,
        SfcType::Ar,
        SfcType::Voip,
        SfcType::Vs,
        SfcType::Miot,
        SfcType::Ind40,
    ];

    /// Canonical name, as stored in the database and rendered in SQL literals.
    pub fn as_str(self) -> &'static str {
        match self {
            SfcType::Cg => "CG",
            SfcType::Ar => "AR",
            SfcType::Voip => "VoIP",
            SfcType::Vs => "VS",
            SfcType::Miot => "MIoT",
            SfcType::Ind40 => "Ind4.0",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SfcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SfcType {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sfc_type(s)
    }
}

/// Case-insensitive SFC type lookup. "Ind 4.0" is accepted as an alias of "Ind4.0".
pub fn parse_sfc_type(text: &str) -> Result<SfcType, DomainError> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("ind 4.0") {
        return Ok(SfcType::Ind40);
    }
    SfcType::ALL
        .into_iter()
        .find(|s| s.as_str().eq_ignore_ascii_case(t))
        .ok_or_else(|| DomainError::UnknownSfcType(text.to_string()))
}

/// Per-request bandwidth: fixed, or a closed interval sampled per request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(Num),
    Range { min: Num, max: Num },
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Fixed(v) => write!(f, "{v}"),
            Bandwidth::Range { min, max } => write!(f, "{min}-{max}"),
        }
    }
}

/// Closed integer interval of requests per arriving bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleRange {
    pub min: u32,
    pub max: u32,
}

impl BundleRange {
    pub fn contains(&self, n: u32) -> bool {
        (self.min..=self.max).contains(&n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfcCatalogEntry {
    pub sfc_type: SfcType,
    pub vnf_sequence: Vec<VnfType>,
    pub bandwidth_mbps: Bandwidth,
    pub max_e2e_ms: Num,
    pub bundle_range: BundleRange,
}

impl SfcCatalogEntry {
    /// "NAT-FW-IDPS" style rendering.
    pub fn sequence_string(&self) -> String {
        self.vnf_sequence
            .iter()
            .map(|v| v.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataCenterSpec {
    pub dc_id: u32,
    pub total_storage_gb: Num,
    pub total_cpu_units: Num,
}

fn entry(
    sfc_type: SfcType,
    seq: &[VnfType],
    bandwidth_mbps: Bandwidth,
    max_e2e_ms: i64,
    bundle: (u32, u32),
) -> SfcCatalogEntry {
    SfcCatalogEntry {
        sfc_type,
        vnf_sequence: seq.to_vec(),
        bandwidth_mbps,
        max_e2e_ms: Num::from_int(max_e2e_ms),
        bundle_range: BundleRange {
            min: bundle.0,
            max: bundle.1,
        },
    }
}

/// The six SFC characteristics rows, in [`SfcType::ALL`] order.
pub fn catalog() -> Vec<SfcCatalogEntry> {
    use VnfType::*;
    let fixed = |n: i64, d: i64| Bandwidth::Fixed(Num::new(n, d));
    vec![
        entry(SfcType::Cg, &[Nat, Fw, Voc, Wo, Idps], fixed(4, 1), 80, (40, 55)),
        entry(SfcType::Ar, &[Nat, Fw, Tm, Voc, Idps], fixed(100, 1), 10, (1, 4)),
        entry(SfcType::Voip, &[Nat, Fw, Tm, Fw, Nat], fixed(64, 1000), 100, (100, 200)),
        entry(SfcType::Vs, &[Nat, Fw, Tm, Voc, Idps], fixed(4, 1), 100, (50, 100)),
        entry(
            SfcType::Miot,
            &[Nat, Fw, Idps],
            Bandwidth::Range {
                min: Num::from_int(1),
                max: Num::from_int(50),
            },
            5,
            (10, 15),
        ),
        entry(SfcType::Ind40, &[Nat, Fw], fixed(70, 1), 8, (1, 4)),
    ]
}

/// Catalog row for one SFC type.
pub fn catalog_entry(sfc_type: SfcType) -> SfcCatalogEntry {
    catalog().swap_remove(sfc_type.index())
}

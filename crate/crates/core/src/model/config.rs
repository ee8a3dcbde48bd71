use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chem::TaskKind;
use crate::gnn::HostKind;
use crate::gwm::GwmVariant;

/// Which module, if any, is attached to the host network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    None,
    Simple,
    NoGate,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::None, Variant::Simple, Variant::NoGate, Variant::Full];

    pub fn module(self) -> Option<GwmVariant> {
        match self {
            Variant::None => None,
            Variant::Simple => Some(GwmVariant::Simple),
            Variant::NoGate => Some(GwmVariant::NoGate),
            Variant::Full => Some(GwmVariant::Full),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::Simple => "simple",
            Variant::NoGate => "nogate",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected none, simple, nogate or full)"))
    }
}

/// Architecture and input widths. The supernode width equals `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub host: HostKind,
    pub variant: Variant,
    /// L
    pub layers: usize,
    /// D
    pub dim: usize,
    /// K, attention heads of the module and of RGAT.
    pub heads: usize,
    /// R, edge types.
    pub relations: usize,
    /// T
    pub tasks: usize,
    pub task: TaskKind,
    /// GIN dropout rate.
    pub dropout: f64,
    pub seed: u64,
    /// Width of the one-hot node rows.
    pub node_features: usize,
    /// Width of the raw graph-level feature vector.
    pub super_features: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("layers", self.layers),
            ("dim", self.dim),
            ("heads", self.heads),
            ("relations", self.relations),
            ("tasks", self.tasks),
            ("node feature width", self.node_features),
            ("supernode feature width", self.super_features),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

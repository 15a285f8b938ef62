//! JSON file formats for instances, outcomes and reports.

use std::fs;
use std::path::Path;

use auction_core::{
    AuctionError, MultiDimInstance, Outcome, Allocation, SingleDimInstance, SingleItemInstance,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    SingleItem,
    SingleDim,
    MultiDim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValuationData {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

/// On-disk instance. `divisible` defaults to true.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: Kind,
    pub budgets: Vec<f64>,
    pub valuations: ValuationData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub divisible: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    SingleItem(SingleItemInstance),
    SingleDim(SingleDimInstance),
    MultiDim(MultiDimInstance),
}

impl InstanceFile {
    pub fn build(&self) -> Result<Instance, AuctionError> {
        let bad = |msg: &str| AuctionError::InvalidInput(msg.to_string());
        match (self.kind, &self.valuations) {
            (Kind::SingleItem, ValuationData::Vector(v)) => {
                if self.alphas.is_some() {
                    return Err(bad("single_item instances take no alphas"));
                }
                Ok(Instance::SingleItem(SingleItemInstance::new(self.budgets.clone(), v.clone())?))
            }
            (Kind::SingleDim, ValuationData::Vector(v)) => {
                let alphas = self.alphas.clone().ok_or_else(|| bad("single_dim instances need alphas"))?;
                Ok(Instance::SingleDim(SingleDimInstance::new(alphas, v.clone(), self.budgets.clone())?))
            }
            (Kind::MultiDim, ValuationData::Matrix(v)) => {
                if self.alphas.is_some() {
                    return Err(bad("multi_dim instances take no alphas"));
                }
                Ok(Instance::MultiDim(MultiDimInstance::new(v.clone(), self.budgets.clone())?))
            }
            (Kind::MultiDim, ValuationData::Vector(_)) => Err(bad("multi_dim valuations must be a matrix")),
            (_, ValuationData::Matrix(_)) => Err(bad("valuations must be a vector for this kind")),
        }
    }
}

impl Instance {
    /// Single-dimensional view; a single-item instance becomes one item of quality 1.
    pub fn single_dim(&self) -> Result<SingleDimInstance, AuctionError> {
        match self {
            Instance::SingleDim(i) => Ok(i.clone()),
            Instance::SingleItem(i) => auction_core::hetero::as_single_dim(i),
            Instance::MultiDim(_) => Err(AuctionError::InvalidInput("expected a single_item or single_dim instance".into())),
        }
    }

    pub fn single_item(&self) -> Result<SingleItemInstance, AuctionError> {
        match self {
            Instance::SingleItem(i) => Ok(i.clone()),
            _ => Err(AuctionError::InvalidInput("expected a single_item instance".into())),
        }
    }

    pub fn multi_dim(&self) -> Result<MultiDimInstance, AuctionError> {
        match self {
            Instance::MultiDim(i) => Ok(i.clone()),
            _ => Err(AuctionError::InvalidInput("expected a multi_dim instance".into())),
        }
    }
}

/// On-disk outcome. `divisible` is optional on input; absent means "same as the
/// instance".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub allocation: Vec<Vec<f64>>,
    pub payments: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisible: Option<bool>,
    #[serde(default)]
    pub meta: Value,
}

impl OutcomeFile {
    pub fn from_outcome(outcome: &Outcome, meta: Value) -> Self {
        Self {
            allocation: outcome.allocation.rows().to_vec(),
            payments: outcome.payments.clone(),
            divisible: Some(outcome.allocation.is_divisible()),
            meta,
        }
    }

    pub fn build(&self, default_divisible: bool) -> Result<Outcome, AuctionError> {
        let alloc = Allocation::new(self.allocation.clone(), self.divisible.unwrap_or(default_divisible))?;
        Outcome::new(alloc, self.payments.clone())
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, AuctionError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AuctionError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AuctionError::InvalidInput(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline. Floats use the shortest representation that
/// parses back to the same binary64 value.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, AuctionError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| AuctionError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), AuctionError> {
    let text = to_json(value)?;
    match path {
        Some(p) => fs::write(p, text).map_err(|e| AuctionError::Internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

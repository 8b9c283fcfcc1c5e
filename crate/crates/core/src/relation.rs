//! Influencer/reactor relations for conflicting agent pairs.
//!
//! The default predictor labels the agent that reaches the pair's cross point
//! first as the influencer. Manual overrides take precedence over any predictor.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross_point, Dims, GeometryError};
use crate::scenario::{AgentId, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationSource {
    Oracle,
    Override,
}

/// The reactor yields to the influencer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationLabel {
    pub influencer: AgentId,
    pub reactor: AgentId,
    pub source: RelationSource,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("agents `{0}` and `{1}` are not in conflict")]
    NotInConflict(AgentId, AgentId),
    #[error("an agent cannot relate to itself (`{0}`)")]
    SelfRelation(AgentId),
    #[error("pair `{0}`/`{1}` already has an override")]
    DuplicateOverride(AgentId, AgentId),
    #[error("malformed relation `{0}`, expected `INFLUENCER>REACTOR`")]
    Malformed(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn pair_key(a: &AgentId, b: &AgentId) -> (AgentId, AgentId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Forced relations, at most one per unordered pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OverrideRegistry {
    pairs: BTreeMap<(AgentId, AgentId), RelationLabel>,
}

impl OverrideRegistry {
    pub const fn new() -> Self {
        Self {
            pairs: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, influencer: AgentId, reactor: AgentId) -> Result<(), RelationError> {
        if influencer == reactor {
            return Err(RelationError::SelfRelation(influencer));
        }
        let key = pair_key(&influencer, &reactor);
        if self.pairs.contains_key(&key) {
            return Err(RelationError::DuplicateOverride(key.0, key.1));
        }
        self.pairs.insert(
            key,
            RelationLabel {
                influencer,
                reactor,
                source: RelationSource::Override,
            },
        );
        Ok(())
    }

    /// Parses `A>B` (A influences B) and registers it.
    pub fn insert_spec(&mut self, spec: &str) -> Result<(), RelationError> {
        let (influencer, reactor) = parse_relation(spec)?;
        self.insert(influencer, reactor)
    }

    pub fn get(&self, a: &AgentId, b: &AgentId) -> Option<&RelationLabel> {
        self.pairs.get(&pair_key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RelationLabel> {
        self.pairs.values()
    }
}

pub fn parse_relation(spec: &str) -> Result<(AgentId, AgentId), RelationError> {
    let malformed = || RelationError::Malformed(spec.to_string());
    let (left, right) = spec.split_once('>').ok_or_else(malformed)?;
    let (left, right) = (left.trim(), right.trim());
    if left.is_empty() || right.is_empty() || right.contains('>') {
        return Err(malformed());
    }
    Ok((left.into(), right.into()))
}

/// One conflicting pair as seen by a predictor. Both trajectories start at the
/// current step and are index-aligned.
#[derive(Clone, Copy, Debug)]
pub struct PairContext<'a> {
    pub id_a: &'a AgentId,
    pub id_b: &'a AgentId,
    pub traj_a: &'a Trajectory,
    pub traj_b: &'a Trajectory,
    pub dims_a: Dims,
    pub dims_b: Dims,
}

impl<'a> PairContext<'a> {
    fn swapped(&self) -> PairContext<'a> {
        PairContext {
            id_a: self.id_b,
            id_b: self.id_a,
            traj_a: self.traj_b,
            traj_b: self.traj_a,
            dims_a: self.dims_b,
            dims_b: self.dims_a,
        }
    }
}

/// Anything that can label a conflicting pair.
pub trait RelationPredictor {
    fn predict(&self, pair: &PairContext<'_>) -> Result<RelationLabel, RelationError>;
}

impl<P: RelationPredictor + ?Sized> RelationPredictor for &P {
    fn predict(&self, pair: &PairContext<'_>) -> Result<RelationLabel, RelationError> {
        (**self).predict(pair)
    }
}

/// Earlier arrival at the cross point wins. Ties go to the faster agent at its
/// arrival step, then to the lexicographically smaller id.
#[derive(Clone, Copy, Debug, Default)]
pub struct CrossPointOracle;

impl RelationPredictor for CrossPointOracle {
    fn predict(&self, pair: &PairContext<'_>) -> Result<RelationLabel, RelationError> {
        if pair.id_a == pair.id_b {
            return Err(RelationError::SelfRelation(pair.id_a.clone()));
        }
        // Evaluate in id order so swapping the arguments cannot change the label.
        let p = if pair.id_a < pair.id_b {
            *pair
        } else {
            pair.swapped()
        };
        let cp = cross_point(p.traj_a, p.traj_b, p.dims_a, p.dims_b)?
            .ok_or_else(|| RelationError::NotInConflict(p.id_a.clone(), p.id_b.clone()))?;
        let a_first = match cp.index_a.cmp(&cp.index_b) {
            core::cmp::Ordering::Less => true,
            core::cmp::Ordering::Greater => false,
            core::cmp::Ordering::Equal => {
                let va = p.traj_a.states[cp.index_a].speed;
                let vb = p.traj_b.states[cp.index_b].speed;
                va >= vb
            }
        };
        let (influencer, reactor) = if a_first {
            (p.id_a, p.id_b)
        } else {
            (p.id_b, p.id_a)
        };
        Ok(RelationLabel {
            influencer: influencer.clone(),
            reactor: reactor.clone(),
            source: RelationSource::Oracle,
        })
    }
}

/// Always makes `agent` the influencer when it is part of the pair; other
/// pairs fall back to the cross-point oracle.
#[derive(Clone, Debug)]
pub struct FixedInfluencer {
    pub agent: AgentId,
}

impl RelationPredictor for FixedInfluencer {
    fn predict(&self, pair: &PairContext<'_>) -> Result<RelationLabel, RelationError> {
        let other = if *pair.id_a == self.agent {
            pair.id_b
        } else if *pair.id_b == self.agent {
            pair.id_a
        } else {
            return CrossPointOracle.predict(pair);
        };
        Ok(RelationLabel {
            influencer: self.agent.clone(),
            reactor: other.clone(),
            source: RelationSource::Oracle,
        })
    }
}

/// Consults the registry first and only falls through to `inner` for pairs
/// without an override.
pub struct WithOverrides<'a, P> {
    pub overrides: &'a OverrideRegistry,
    pub inner: P,
}

impl<P: RelationPredictor> RelationPredictor for WithOverrides<'_, P> {
    fn predict(&self, pair: &PairContext<'_>) -> Result<RelationLabel, RelationError> {
        match self.overrides.get(pair.id_a, pair.id_b) {
            Some(label) => Ok(label.clone()),
            None => self.inner.predict(pair),
        }
    }
}

/// Override if registered, otherwise the cross-point oracle.
pub fn infer_relation(
    traj_a: &Trajectory,
    traj_b: &Trajectory,
    ids: (&AgentId, &AgentId),
    dims: (Dims, Dims),
    overrides: &OverrideRegistry,
) -> Result<RelationLabel, RelationError> {
    let pair = PairContext {
        id_a: ids.0,
        id_b: ids.1,
        traj_a,
        traj_b,
        dims_a: dims.0,
        dims_b: dims.1,
    };
    WithOverrides {
        overrides,
        inner: CrossPointOracle,
    }
    .predict(&pair)
}

//! Scenario configuration: everything that pins down one deterministic run,
//! from the validator population to the scheduler seed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::committee::ProtocolParams;
use crate::types::{Address, Committee, ConfigError, Event, EventKind, Round, Stake};

/// Relative weights for picking the next event kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerWeights {
    pub create: u32,
    pub accept: u32,
    pub advance: u32,
    pub commit: u32,
}

impl Default for SchedulerWeights {
    fn default() -> Self {
        // Acceptance-heavy so random runs make progress; advances stay rare
        // enough that layers fill up before rounds move on.
        SchedulerWeights {
            create: 4,
            accept: 5,
            advance: 2,
            commit: 3,
        }
    }
}

impl SchedulerWeights {
    pub fn weight(&self, kind: EventKind) -> u32 {
        match kind {
            EventKind::Create => self.create,
            EventKind::Accept => self.accept,
            EventKind::Advance => self.advance,
            EventKind::Commit => self.commit,
        }
    }
}

/// Byzantine strategy for event proposal on behalf of faulty validators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    /// No adversary events.
    #[default]
    None,
    /// Propose pairs of distinct certificates per faulty author and round,
    /// endorsed by disjoint groups of correct validators.
    Equivocate,
    /// Propose certificates whose signers miss the quorum threshold; they
    /// enter the network but no correct validator may accept them.
    UnderQuorum,
}

impl AdversaryStrategy {
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name {
            "none" => Ok(AdversaryStrategy::None),
            "equivocate" => Ok(AdversaryStrategy::Equivocate),
            "under-quorum" => Ok(AdversaryStrategy::UnderQuorum),
            other => Err(ConfigError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Probabilities (in percent) that a generated transaction batch carries a
/// bond or unbond of a correct validator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicStakePolicy {
    pub bond_percent: u8,
    pub unbond_percent: u8,
}

impl Default for DynamicStakePolicy {
    fn default() -> Self {
        DynamicStakePolicy {
            bond_percent: 0,
            unbond_percent: 0,
        }
    }
}

/// A complete, self-contained run description. Equal scenarios (including
/// the seed) always produce byte-identical traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub correct_validators: BTreeSet<Address>,
    pub genesis_committee: BTreeMap<Address, Stake>,
    pub lookback: u64,
    #[serde(default)]
    pub faulty_validators: BTreeSet<Address>,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
    #[serde(default = "default_max_round")]
    pub max_round: Round,
    #[serde(default)]
    pub scheduler_weights: SchedulerWeights,
    #[serde(default)]
    pub adversary: AdversaryStrategy,
    #[serde(default)]
    pub dynamic_stake: DynamicStakePolicy,
    #[serde(default)]
    pub seed: u64,
    /// When present, the run replays exactly these events instead of
    /// sampling; the scheduler and seed are unused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<Vec<Event>>,
}

fn default_max_events() -> usize {
    200
}

fn default_max_round() -> Round {
    50
}

impl Scenario {
    /// A plain all-correct scenario over equal-stake validators.
    pub fn equal_stake(names: &[&str], lookback: u64) -> Self {
        let correct: BTreeSet<Address> = names.iter().map(|n| Address::from(*n)).collect();
        let genesis = correct.iter().map(|a| (a.clone(), 1)).collect();
        Scenario {
            correct_validators: correct,
            genesis_committee: genesis,
            lookback,
            faulty_validators: BTreeSet::new(),
            max_events: default_max_events(),
            max_round: default_max_round(),
            scheduler_weights: SchedulerWeights::default(),
            adversary: AdversaryStrategy::None,
            dynamic_stake: DynamicStakePolicy::default(),
            seed: 0,
            script: None,
        }
    }

    pub fn params(&self) -> ProtocolParams {
        ProtocolParams::new(
            Committee::new(self.genesis_committee.clone()),
            self.lookback,
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.correct_validators.is_empty() {
            return Err(ConfigError::NoCorrectValidators);
        }
        if self.lookback == 0 {
            return Err(ConfigError::ZeroLookback);
        }
        for (a, k) in &self.genesis_committee {
            if *k == 0 {
                return Err(ConfigError::ZeroStake(a.clone()));
            }
        }
        if let Some(a) = self
            .correct_validators
            .intersection(&self.faulty_validators)
            .next()
        {
            return Err(ConfigError::CorrectAndFaulty(a.clone()));
        }
        let w = &self.scheduler_weights;
        if w.create == 0 && w.accept == 0 && w.advance == 0 && w.commit == 0 {
            return Err(ConfigError::AllZeroWeights);
        }
        Ok(())
    }

    pub fn initial_state(&self) -> crate::types::SystemState {
        crate::types::initial_state(self.correct_validators.iter().cloned())
            .expect("validated scenario has correct validators")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_stake_scenario_is_valid() {
        let sc = Scenario::equal_stake(&["v1", "v2", "v3", "v4"], 4);
        sc.validate().unwrap();
        assert_eq!(sc.params().genesis_committee.members.len(), 4);
        assert_eq!(sc.initial_state().validators.len(), 4);
    }

    #[test]
    fn validation_errors() {
        let mut sc = Scenario::equal_stake(&["v1"], 4);
        sc.lookback = 0;
        assert!(matches!(sc.validate(), Err(ConfigError::ZeroLookback)));

        let mut sc = Scenario::equal_stake(&["v1"], 4);
        sc.genesis_committee.insert("v2".into(), 0);
        assert!(matches!(sc.validate(), Err(ConfigError::ZeroStake(_))));

        let mut sc = Scenario::equal_stake(&["v1"], 4);
        sc.faulty_validators.insert("v1".into());
        assert!(matches!(sc.validate(), Err(ConfigError::CorrectAndFaulty(_))));

        let mut sc = Scenario::equal_stake(&["v1"], 4);
        sc.scheduler_weights = SchedulerWeights {
            create: 0,
            accept: 0,
            advance: 0,
            commit: 0,
        };
        assert!(matches!(sc.validate(), Err(ConfigError::AllZeroWeights)));
    }

    #[test]
    fn json_round_trip() {
        let mut sc = Scenario::equal_stake(&["v1", "v2"], 2);
        sc.seed = 42;
        sc.adversary = AdversaryStrategy::Equivocate;
        sc.faulty_validators.insert("f3".into());
        sc.genesis_committee.insert("f3".into(), 4);
        let json = sc.to_json();
        let back = Scenario::from_json(&json).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!(
            AdversaryStrategy::parse("equivocate").unwrap(),
            AdversaryStrategy::Equivocate
        );
        assert_eq!(
            AdversaryStrategy::parse("under-quorum").unwrap(),
            AdversaryStrategy::UnderQuorum
        );
        assert!(AdversaryStrategy::parse("chaotic").is_err());
    }
}

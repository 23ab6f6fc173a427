//! Priority dispatching rules and the uniform random baseline.
//!
//! Deterministic rules break ties toward the lowest job index. `Lpt` is the
//! conventional counterpart of `Spt`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispatchRule {
    /// Shortest next processing time.
    Spt,
    /// Longest next processing time.
    Lpt,
    /// Most tasks remaining.
    Mtr,
    /// Uniform over valid jobs.
    Random,
}

impl DispatchRule {
    pub const ALL: [DispatchRule; 4] = [
        DispatchRule::Spt,
        DispatchRule::Lpt,
        DispatchRule::Mtr,
        DispatchRule::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DispatchRule::Spt => "spt",
            DispatchRule::Lpt => "lpt",
            DispatchRule::Mtr => "mtr",
            DispatchRule::Random => "random",
        }
    }
}

impl fmt::Display for DispatchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DispatchRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DispatchRule::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod {
                name: s.to_string(),
                valid: "spt, lpt, mtr, random".into(),
            })
    }
}

/// First valid job minimizing `key`.
fn argmin_by_key<K: Ord>(mask: &[bool], key: impl Fn(usize) -> K) -> Option<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &valid)| valid)
        .map(|(j, _)| j)
        .min_by_key(|&j| (key(j), j))
}

pub fn select_action(
    rule: DispatchRule,
    state: &EnvState,
    mask: &[bool],
    rng: &mut impl Rng,
) -> Result<usize> {
    let next_p = |j| state.next_processing_time(j).unwrap_or(0);
    let chosen = match rule {
        DispatchRule::Spt => argmin_by_key(mask, next_p),
        DispatchRule::Lpt => argmin_by_key(mask, |j| std::cmp::Reverse(next_p(j))),
        DispatchRule::Mtr => {
            argmin_by_key(mask, |j| std::cmp::Reverse(state.remaining_tasks(j)))
        }
        DispatchRule::Random => {
            let valid = mask.iter().filter(|&&v| v).count();
            if valid == 0 {
                None
            } else {
                let pick = rng.gen_range(0..valid as u64) as usize;
                mask.iter()
                    .enumerate()
                    .filter(|(_, &v)| v)
                    .nth(pick)
                    .map(|(j, _)| j)
            }
        }
    };
    chosen.ok_or(Error::NoValidAction)
}

impl Policy for DispatchRule {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn is_stochastic(&self) -> bool {
        *self == DispatchRule::Random
    }

    fn select(
        &mut self,
        state: &EnvState,
        _observation: &[f64],
        mask: &[bool],
        rng: &mut PolicyRng,
    ) -> Result<usize> {
        select_action(*self, state, mask, rng)
    }
}

//! The interface every dispatching method acts through: dispatching rules,
//! trained agents and external policies alike.

use rand_chacha::ChaCha8Rng;

use crate::env::EnvState;
use crate::error::Result;

/// Random source handed to policies. Seeded per episode by the caller.
pub type PolicyRng = ChaCha8Rng;

pub trait Policy {
    fn name(&self) -> String;

    /// Whether results depend on the random source; stochastic methods are
    /// evaluated over several seeds.
    fn is_stochastic(&self) -> bool {
        false
    }

    /// Picks a job index. Implementations must return an index whose mask
    /// entry is true; the evaluation harness rejects anything else.
    fn select(
        &mut self,
        state: &EnvState,
        observation: &[f64],
        mask: &[bool],
        rng: &mut PolicyRng,
    ) -> Result<usize>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn is_stochastic(&self) -> bool {
        (**self).is_stochastic()
    }

    fn select(
        &mut self,
        state: &EnvState,
        observation: &[f64],
        mask: &[bool],
        rng: &mut PolicyRng,
    ) -> Result<usize> {
        (**self).select(state, observation, mask, rng)
    }
}

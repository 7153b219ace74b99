//! Best-response search over finite candidate sets.
//!
//! Both searches evaluate every candidate exactly and keep the first strict
//! maximum, so ties resolve to the lowest candidate index.

use crate::error::GameError;
use crate::history::StateHistory;
use crate::spec::{AgentId, AgentPolicy, Beneficiary, GameSpec, Move, ReactionPolicy, WorldState};
use crate::value::{discounted_value, EvalMode, Objective, ValueParams};
use crate::Scalar;

/// The winning candidate together with every evaluated value.
#[derive(Clone)]
pub struct PolicyChoice<P, F> {
    pub index: usize,
    pub value: F,
    pub values: Vec<F>,
    pub policy: P,
}

fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// κ* = argmax_κ V_o over `candidates`, the system's own discounted benefit.
pub fn best_reaction_policy<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    candidates: &[ReactionPolicy<S, A, R, F>],
    history: &StateHistory<S>,
    params: &ValueParams<F>,
) -> Result<PolicyChoice<ReactionPolicy<S, A, R, F>, F>, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    if candidates.is_empty() {
        return Err(GameError::InvalidArgument("no candidate reaction policies".into()));
    }
    let values = candidates
        .iter()
        .map(|kappa| {
            let g = game.with_reaction(kappa.clone());
            discounted_value(&g, Objective::Of(Beneficiary::System), history, params, EvalMode::Exact)
                .map(|v| v.value)
        })
        .collect::<Result<Vec<F>, _>>()?;
    let index = argmax(&values);
    Ok(PolicyChoice { index, value: values[index], policy: candidates[index].clone(), values })
}

/// π* = argmax_{π_d} V_pop over `candidates` for the protector `protector`.
pub fn best_protector_policy<S, A, R, O, F>(
    game: &GameSpec<S, A, R, O, F>,
    protector: AgentId,
    candidates: &[AgentPolicy<S, A, F>],
    history: &StateHistory<S>,
    params: &ValueParams<F>,
) -> Result<PolicyChoice<AgentPolicy<S, A, F>, F>, GameError>
where
    S: WorldState,
    A: Move,
    R: Move,
    O: Clone + 'static,
    F: Scalar,
{
    if candidates.is_empty() {
        return Err(GameError::InvalidArgument("no candidate protector policies".into()));
    }
    let values = candidates
        .iter()
        .map(|pi| {
            let g = game.with_policy(protector, pi.clone())?;
            discounted_value(&g, Objective::Population, history, params, EvalMode::Exact).map(|v| v.value)
        })
        .collect::<Result<Vec<F>, _>>()?;
    let index = argmax(&values);
    Ok(PolicyChoice { index, value: values[index], policy: candidates[index].clone(), values })
}

//! Brute-force reference computations over `TabularGame` tables.
//!
//! Every quantity is obtained by enumerating complete paths with a
//! mixed-radix counter and multiplying table entries directly. Nothing here
//! goes through the engine's `GameSpec` machinery.

#![allow(dead_code)]

use potlab_game::{Combiner, TabularGame};

pub struct Oracle<'a> {
    pub game: &'a TabularGame,
    /// Deterministic κ `[state][action] -> reaction` replacing the reaction table.
    pub reaction: Option<&'a [Vec<usize>]>,
    /// Deterministic policy `[state] -> action` for one agent.
    pub protector: Option<(usize, &'a [usize])>,
}

pub enum Target {
    System,
    Agent(usize),
    Population,
}

impl<'a> Oracle<'a> {
    pub fn new(game: &'a TabularGame) -> Self {
        Self { game, reaction: None, protector: None }
    }

    fn policy(&self, agent: usize, s: usize, a: usize) -> f64 {
        match self.protector {
            Some((p, table)) if p == agent => f64::from(u8::from(table[s] == a)),
            _ => self.game.policies[agent][s][a],
        }
    }

    fn kappa(&self, s: usize, a: usize, r: usize) -> f64 {
        match self.reaction {
            Some(table) => f64::from(u8::from(table[s][a] == r)),
            None => self.game.reaction_probs[s][a][r],
        }
    }

    pub fn benefit(&self, target: &Target, s: usize) -> f64 {
        let g = self.game;
        match target {
            Target::System => g.system_benefit[s],
            Target::Agent(i) => g.agent_benefits[*i][s],
            Target::Population => {
                let vals: Vec<f64> = g.population.target.iter().map(|&i| g.agent_benefits[i][s]).collect();
                match g.population.combiner {
                    Combiner::Mean => {
                        if vals.is_empty() {
                            0.0
                        } else {
                            vals.iter().sum::<f64>() / vals.len() as f64
                        }
                    }
                    Combiner::Sum => vals.iter().sum(),
                    Combiner::System => g.system_benefit[s],
                    Combiner::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
                }
            }
        }
    }

    /// Σ over every (a, r, s') sequence of Pr[path] · Σ_t γ^t B(s'_t), t = k+1..=k+n.
    pub fn value(&self, target: &Target, start_state: usize, gamma: f64, k: usize, n: usize) -> f64 {
        let g = self.game;
        let (na, nr, ns) = (g.actions, g.reactions, g.states);
        let radix = na * nr * ns;
        let paths = radix.pow(n as u32);
        let mut total = 0.0;
        for code in 0..paths {
            let mut c = code;
            let mut s = start_state;
            let mut prob = 1.0;
            let mut sum = 0.0;
            for t in k + 1..=k + n {
                let digit = c % radix;
                c /= radix;
                let (a, r, next) = (digit / (nr * ns), (digit / ns) % nr, digit % ns);
                let agent = g.schedule[t % g.schedule.len()];
                prob *= self.policy(agent, s, a) * self.kappa(s, a, r) * g.transitions[s][a][r][next];
                if prob == 0.0 {
                    break;
                }
                sum += gamma.powi(t as i32) * self.benefit(target, next);
                s = next;
            }
            total += prob * sum;
        }
        total
    }

    /// Σ_{r, s'} B(s') κ(r | s, a) τ(s' | s, a, r).
    pub fn immediate(&self, target: &Target, s: usize, a: usize) -> f64 {
        let g = self.game;
        let mut total = 0.0;
        for r in 0..g.reactions {
            for next in 0..g.states {
                total += self.benefit(target, next) * self.kappa(s, a, r) * g.transitions[s][a][r][next];
            }
        }
        total
    }

    /// Unnormalized posterior of every history of length `observations.len()`
    /// under the dynamics prior, in lexicographic order.
    pub fn posteriors(&self, initial: &[f64], actions: &[usize], observations: &[usize]) -> Vec<(Vec<usize>, f64)> {
        let g = self.game;
        let obs = g.observation.as_ref().expect("observation table");
        let len = observations.len();
        let count = g.states.pow(len as u32);
        let mut out = Vec::with_capacity(count);
        for code in 0..count {
            // most significant digit first => lexicographic order
            let mut h = vec![0; len];
            let mut c = code;
            for j in (0..len).rev() {
                h[j] = c % g.states;
                c /= g.states;
            }
            let mut mass = initial[h[0]] * obs[h[0]][observations[0]];
            for j in 1..len {
                let a = actions[j - 1];
                let step: f64 = (0..g.reactions)
                    .map(|r| self.kappa(h[j - 1], a, r) * g.transitions[h[j - 1]][a][r][h[j]])
                    .sum();
                mass *= step * obs[h[j]][observations[j]];
            }
            out.push((h, mass));
        }
        out
    }
}

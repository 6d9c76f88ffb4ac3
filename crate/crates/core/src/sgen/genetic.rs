//! Genetic search over sets of `m` actions, scored by the set fitness.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{complement, empty_result, push_unique, EngineConfig, ExplanationSet, Problem};
use crate::data::{Action, CoordKind, Encoder};
use crate::objective::{self, MemberTerms, NeighborIndex};
use crate::predictors::Predictor;
use crate::{rng_for, Error, Result, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub generations: usize,
    /// Fixed population size; by default `population_per_m * m`.
    pub population: Option<usize>,
    pub population_per_m: usize,
    /// Probability of resampling a categorical gene.
    pub mutation_rate: f64,
    /// Gaussian mutation scale as a fraction of each feature's actionable range.
    pub mutation_sigma: f64,
    pub elites: usize,
    pub crossover_prob: f64,
    pub tournament: usize,
    /// Probability that an initial gene is drawn uniformly from its interval
    /// rather than starting near the individual's value.
    pub init_change_prob: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            generations: 20,
            population: None,
            population_per_m: 12,
            mutation_rate: 0.05,
            mutation_sigma: 0.05,
            elites: 4,
            crossover_prob: 0.5,
            tournament: 3,
            init_change_prob: 1.0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.mutation_rate) || !unit(self.crossover_prob) || !unit(self.init_change_prob) {
            return Err(Error::Config("genetic probabilities must lie in [0, 1]".into()));
        }
        if self.tournament == 0 || (self.population.is_none() && self.population_per_m == 0) {
            return Err(Error::Config("tournament and population must be positive".into()));
        }
        if self.mutation_sigma < 0.0 {
            return Err(Error::Config("mutation_sigma must be non-negative".into()));
        }
        Ok(())
    }

    pub fn population_for(&self, m: usize) -> usize {
        self.population.unwrap_or(self.population_per_m * m).max(self.elites + 1).max(2)
    }
}

#[derive(Debug, Clone)]
struct Member {
    terms: MemberTerms,
    theta: Vec<f64>,
    no_change: bool,
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<Action>,
    members: Vec<Member>,
    fitness: f64,
}

impl Individual {
    fn new(genes: Vec<Action>) -> Self {
        Individual {
            genes,
            members: Vec::new(),
            fitness: f64::NEG_INFINITY,
        }
    }
}

struct Evaluator<'p, 'a> {
    problem: &'p Problem<'a>,
    offsets: Vec<Vec<f64>>,
}

impl Evaluator<'_, '_> {
    fn member(&self, a: &Action) -> Member {
        let p = self.problem;
        let theta = p.space.apply(a);
        let robustness_mc = if p.ball_columns.is_empty() {
            f64::from(p.model.label(&theta))
        } else {
            let hits = self
                .offsets
                .iter()
                .filter(|o| {
                    let mut s = theta.clone();
                    for ((&c, &(lo, hi)), d) in p.ball_columns.iter().zip(&p.ball_bounds).zip(o.iter()) {
                        s[c] = (theta[c] + d).clamp(lo, hi);
                    }
                    p.model.label(&s) == 1
                })
                .count();
            hits as f64 / self.offsets.len() as f64
        };
        Member {
            terms: MemberTerms {
                plausibility: p.plausibility(&theta),
                gain: p.payoff.gain(&p.x, &theta),
                robustness_mc,
                robustness_abs: objective::robustness_absolute(p.model, &theta, p.threshold()),
            },
            no_change: p.space.is_no_change(a),
            theta,
        }
    }

    fn evaluate(&self, ind: &mut Individual) {
        if !ind.members.is_empty() {
            return;
        }
        ind.members = ind.genes.iter().map(|a| self.member(a)).collect();
        let terms: Vec<MemberTerms> = ind.members.iter().map(|m| m.terms).collect();
        let points: Vec<Vec<f64>> = ind.members.iter().map(|m| m.theta.clone()).collect();
        ind.fitness = objective::fitness(&terms, objective::diversity(&points), self.problem.cfg);
    }
}

fn initial_action(problem: &Problem, ga: &GaConfig, rng: &mut Rng) -> Action {
    let space = &problem.space;
    let mut a = space.identity();
    for (k, c) in space.coords().iter().enumerate() {
        if rng.random::<f64>() < ga.init_change_prob {
            a.values[k] = match c.kind {
                CoordKind::Real => rng.random_range(c.lo..=c.hi),
                CoordKind::Level => rng.random_range(c.lo as i64..=c.hi as i64) as f64,
            };
        } else if c.kind == CoordKind::Real {
            a.values[k] += gaussian(rng, ga.mutation_sigma * c.domain_width());
        }
    }
    space.clip(&a)
}

fn gaussian(rng: &mut Rng, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("sigma is positive").sample(rng)
}

fn tournament(pop: &[Individual], k: usize, rng: &mut Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let c = rng.random_range(0..pop.len());
        if pop[c].fitness > pop[best].fitness || (pop[c].fitness == pop[best].fitness && c < best) {
            best = c;
        }
    }
    best
}

fn breed(problem: &Problem, ga: &GaConfig, a: &Individual, b: &Individual, rng: &mut Rng) -> Individual {
    let space = &problem.space;
    let cross = rng.random::<f64>() < ga.crossover_prob;
    let genes = a
        .genes
        .iter()
        .zip(&b.genes)
        .map(|(ga_, gb)| {
            let mut child = ga_.clone();
            for (k, c) in space.coords().iter().enumerate() {
                if cross && rng.random::<bool>() {
                    child.values[k] = gb.values[k];
                }
                match c.kind {
                    CoordKind::Real => child.values[k] += gaussian(rng, ga.mutation_sigma * c.domain_width()),
                    CoordKind::Level => {
                        if rng.random::<f64>() < ga.mutation_rate {
                            child.values[k] = rng.random_range(c.lo as i64..=c.hi as i64) as f64;
                        }
                    }
                }
            }
            space.clip(&child)
        })
        .collect();
    Individual::new(genes)
}

fn rank(pop: &mut [Individual]) {
    // Stable: ties keep their previous order.
    pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}

/// Generates `m` semifactuals for `x` with a genetic search over action sets.
/// Training rows, when given, drive the plausibility term.
pub fn explain_noncausal(
    x: &[f64],
    model: &Predictor,
    encoder: &Encoder,
    training: Option<&NeighborIndex>,
    m: usize,
    cfg: &EngineConfig,
    seed: u64,
) -> Result<ExplanationSet> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    cfg.genetic.validate()?;
    let problem = Problem::new(x, model, encoder, &cfg.objective, training, false)?;
    let ga = &cfg.genetic;
    let obj = &cfg.objective;
    let mut rng = rng_for(seed, 1);
    let evaluator = Evaluator {
        offsets: objective::ball_offsets(
            problem.ball_columns.len(),
            obj.epsilon,
            obj.n_mc,
            obj.neighborhood_norm,
            &mut rng_for(seed, 2),
        ),
        problem: &problem,
    };

    let size = ga.population_for(m);
    let mut pop: Vec<Individual> = (0..size)
        .map(|_| Individual::new((0..m).map(|_| initial_action(&problem, ga, &mut rng)).collect()))
        .collect();
    pop.par_iter_mut().for_each(|ind| evaluator.evaluate(ind));
    rank(&mut pop);
    let mut best = vec![pop[0].fitness];

    for _ in 0..ga.generations {
        let mut next: Vec<Individual> = pop.iter().take(ga.elites.min(size - 1)).cloned().collect();
        while next.len() < size {
            let a = tournament(&pop, ga.tournament, &mut rng);
            let b = tournament(&pop, ga.tournament, &mut rng);
            next.push(breed(&problem, ga, &pop[a], &pop[b], &mut rng));
        }
        next.par_iter_mut().for_each(|ind| evaluator.evaluate(ind));
        pop = next;
        rank(&mut pop);
        best.push(pop[0].fitness);
    }

    let (mut evaluated, mut positive, mut positive_gain) = (0, 0, 0);
    let mut items = Vec::new();
    'collect: for ind in &pop {
        for (action, member) in ind.genes.iter().zip(&ind.members) {
            evaluated += 1;
            if member.terms.robustness_abs < 1.0 {
                continue;
            }
            positive += 1;
            if member.terms.gain <= 0.0 || member.no_change {
                continue;
            }
            positive_gain += 1;
            if items.len() < m {
                let candidate = problem.item(
                    action.clone(),
                    member.theta.clone(),
                    member.terms.robustness_mc,
                    None,
                )?;
                push_unique(&mut items, candidate);
            } else {
                break 'collect;
            }
        }
    }
    if items.is_empty() {
        return Err(empty_result(
            evaluated,
            positive,
            positive_gain,
            "every candidate either crossed the decision boundary or had no positive gain",
        ));
    }
    complement(&mut items, m, &mut rng_for(seed, 3));
    let mut set = problem.set("sgen", seed, m, items, serde_json::to_value(cfg)?);
    set.trace.generation_best = best;
    Ok(set)
}

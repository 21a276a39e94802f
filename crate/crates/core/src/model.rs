//! Reaction systems, states and mass-action propensities.
//!
//! A reaction `r_1 X_1 + ... + r_d X_d -> g_1 X_1 + ... + g_d X_d` with rate
//! `k` in a system of scale `Omega` fires with propensity
//!
//! ```text
//! a(X) = k * Omega * prod_j  X_j (X_j - 1) ... (X_j - r_j + 1) / Omega^r_j
//! ```
//!
//! and moves the state by the stoichiometric vector `nu = g - r`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("reaction {reaction} would drive species {species} negative")]
    IllegalFiring { reaction: usize, species: usize },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub id: usize,
    pub name: String,
}

/// One mass-action reaction channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    rate: f64,
    reactants: Vec<(usize, u32)>,
    products: Vec<(usize, u32)>,
    stoichiometry: Vec<i64>,
}

impl Reaction {
    /// `reactants` and `products` are sparse `(species, multiplicity)` lists;
    /// zero multiplicities are dropped.
    pub fn new(
        rate: f64,
        reactants: &[(usize, u32)],
        products: &[(usize, u32)],
        n_species: usize,
    ) -> Result<Self, ModelError> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(invalid(
                "rate",
                format!("must be finite and >= 0, got {rate}"),
            ));
        }
        let reactants = normalize_terms(reactants, n_species, "reactants")?;
        let products = normalize_terms(products, n_species, "products")?;

        let mut stoichiometry = vec![0i64; n_species];
        for &(j, r) in &reactants {
            stoichiometry[j] -= i64::from(r);
        }
        for &(j, g) in &products {
            stoichiometry[j] += i64::from(g);
        }
        Ok(Self {
            rate,
            reactants,
            products,
            stoichiometry,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn reactants(&self) -> &[(usize, u32)] {
        &self.reactants
    }

    pub fn products(&self) -> &[(usize, u32)] {
        &self.products
    }

    pub fn stoichiometry(&self) -> &[i64] {
        &self.stoichiometry
    }

    /// Largest single-species gain of one firing.
    fn max_gain(&self) -> i64 {
        self.stoichiometry.iter().copied().max().unwrap_or(0)
    }
}

fn normalize_terms(
    terms: &[(usize, u32)],
    n_species: usize,
    field: &str,
) -> Result<Vec<(usize, u32)>, ModelError> {
    let mut merged = BTreeMap::new();
    for &(j, m) in terms {
        if j >= n_species {
            return Err(invalid(field, format!("species index {j} out of range")));
        }
        if merged.insert(j, m).is_some() {
            return Err(invalid(field, format!("species index {j} listed twice")));
        }
    }
    Ok(merged.into_iter().filter(|&(_, m)| m > 0).collect())
}

/// An immutable set of species and reactions at system scale `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSystem {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    omega: u64,
}

impl ReactionSystem {
    pub fn new(
        species_names: &[&str],
        reactions: Vec<Reaction>,
        omega: u64,
    ) -> Result<Self, ModelError> {
        if omega < 1 {
            return Err(invalid("omega", "must be >= 1"));
        }
        let mut seen = HashMap::new();
        let mut species = Vec::with_capacity(species_names.len());
        for (id, name) in species_names.iter().enumerate() {
            if name.is_empty() {
                return Err(invalid(format!("species[{id}]"), "empty name"));
            }
            if seen.insert(*name, id).is_some() {
                return Err(invalid(
                    format!("species[{id}]"),
                    format!("duplicate name {name:?}"),
                ));
            }
            species.push(Species {
                id,
                name: (*name).to_string(),
            });
        }
        for (i, r) in reactions.iter().enumerate() {
            if r.stoichiometry.len() != species.len() {
                return Err(invalid(
                    format!("reactions[{i}]"),
                    "built for a different number of species",
                ));
            }
        }
        Ok(Self {
            species,
            reactions,
            omega,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn omega(&self) -> u64 {
        self.omega
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    /// Propensity of reaction `i` in `state`.
    ///
    /// Exactly zero whenever some reactant has fewer copies than its order.
    pub fn propensity(&self, state: &SystemState, i: usize) -> f64 {
        let reaction = &self.reactions[i];
        let omega = self.omega as f64;
        let mut a = reaction.rate * omega;
        for &(j, order) in &reaction.reactants {
            let x = state.counts[j];
            if x < u64::from(order) {
                return 0.0;
            }
            for m in 0..u64::from(order) {
                a *= (x - m) as f64 / omega;
            }
        }
        a
    }

    /// Sum of all propensities; zero marks an absorbing state.
    pub fn total_propensity(&self, state: &SystemState) -> f64 {
        (0..self.reactions.len())
            .map(|i| self.propensity(state, i))
            .sum()
    }

    /// Fills `out` with per-reaction propensities and returns their sum.
    pub fn fill_propensities(&self, state: &SystemState, out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.propensity(state, i);
            total += *slot;
        }
        total
    }

    fn max_gain(&self) -> u64 {
        self.reactions
            .iter()
            .map(Reaction::max_gain)
            .max()
            .unwrap_or(0)
            .max(1) as u64
    }
}

/// Copy numbers plus elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub counts: Vec<u64>,
    pub time: f64,
}

impl SystemState {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts, time: 0.0 }
    }

    /// Returns the state after one firing of `reaction`; time is unchanged.
    pub fn apply_reaction(&self, reaction: &Reaction) -> Result<SystemState, ModelError> {
        let mut next = self.clone();
        next.apply_in_place(reaction, 0)?;
        Ok(next)
    }

    /// In-place variant of [`apply_reaction`](Self::apply_reaction);
    /// `index` only labels the error.
    pub fn apply_in_place(&mut self, reaction: &Reaction, index: usize) -> Result<(), ModelError> {
        for (j, &nu) in reaction.stoichiometry.iter().enumerate() {
            if self.counts[j].checked_add_signed(nu).is_none() {
                return Err(ModelError::IllegalFiring {
                    reaction: index,
                    species: j,
                });
            }
        }
        for (c, &nu) in self.counts.iter_mut().zip(&reaction.stoichiometry) {
            *c = c.wrapping_add_signed(nu);
        }
        Ok(())
    }

    pub fn advance(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0);
        self.time += dt;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Equal,
}

impl Comparator {
    pub fn holds(self, value: u64, threshold: u64) -> bool {
        match self {
            Comparator::AtLeast => value >= threshold,
            Comparator::AtMost => value <= threshold,
            Comparator::Equal => value == threshold,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::AtLeast => ">=",
            Comparator::AtMost => "<=",
            Comparator::Equal => "==",
        })
    }
}

/// Boundary of the state space at which a trajectory stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitCondition {
    pub species: usize,
    pub comparator: Comparator,
    pub threshold: u64,
    /// Guard for trajectories that never reach the boundary.
    pub max_steps: u64,
}

impl ExitCondition {
    pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

    pub fn new(
        system: &ReactionSystem,
        species: usize,
        comparator: Comparator,
        threshold: u64,
        max_steps: u64,
    ) -> Result<Self, ModelError> {
        if species >= system.n_species() {
            return Err(invalid(
                "exit.species",
                format!("index {species} out of range"),
            ));
        }
        let bound = system.omega().saturating_mul(system.max_gain());
        if threshold > bound {
            return Err(invalid(
                "exit.value",
                format!("{threshold} exceeds the reachable bound {bound}"),
            ));
        }
        if max_steps < 1 {
            return Err(invalid("exit.max_steps", "must be >= 1"));
        }
        Ok(Self {
            species,
            comparator,
            threshold,
            max_steps,
        })
    }

    pub fn is_met(&self, state: &SystemState) -> bool {
        self.comparator
            .holds(state.counts[self.species], self.threshold)
    }
}

/// A complete simulation problem: system, starting state and exit boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub system: ReactionSystem,
    pub initial: SystemState,
    pub exit: ExitCondition,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    species: Vec<String>,
    omega: u64,
    reactions: Vec<ReactionDocument>,
    initial: BTreeMap<String, u64>,
    exit: ExitDocument,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionDocument {
    rate: f64,
    #[serde(default)]
    reactants: BTreeMap<String, u32>,
    #[serde(default)]
    products: BTreeMap<String, u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExitDocument {
    species: String,
    op: Comparator,
    value: u64,
    max_steps: Option<u64>,
}

impl Model {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let names: Vec<&str> = doc.species.iter().map(String::as_str).collect();
        let lookup = |field: String, name: &str| {
            names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| invalid(field, format!("unknown species {name:?}")))
        };

        let mut reactions = Vec::with_capacity(doc.reactions.len());
        for (i, r) in doc.reactions.iter().enumerate() {
            let mut reactants = Vec::new();
            for (name, &order) in &r.reactants {
                reactants.push((lookup(format!("reactions[{i}].reactants"), name)?, order));
            }
            let mut products = Vec::new();
            for (name, &count) in &r.products {
                products.push((lookup(format!("reactions[{i}].products"), name)?, count));
            }
            let reaction =
                Reaction::new(r.rate, &reactants, &products, names.len()).map_err(|e| match e {
                    ModelError::Invalid { field, reason } => {
                        invalid(format!("reactions[{i}].{field}"), reason)
                    }
                    other => other,
                })?;
            reactions.push(reaction);
        }
        let system = ReactionSystem::new(&names, reactions, doc.omega)?;

        for name in doc.initial.keys() {
            lookup("initial".into(), name)?;
        }
        let mut counts = Vec::with_capacity(names.len());
        for name in &names {
            let count = doc
                .initial
                .get(*name)
                .ok_or_else(|| invalid("initial", format!("missing count for species {name:?}")))?;
            counts.push(*count);
        }

        let exit_species = lookup("exit.species".into(), &doc.exit.species)?;
        let exit = ExitCondition::new(
            &system,
            exit_species,
            doc.exit.op,
            doc.exit.value,
            doc.exit
                .max_steps
                .unwrap_or(ExitCondition::DEFAULT_MAX_STEPS),
        )?;

        Ok(Model {
            system,
            initial: SystemState::new(counts),
            exit,
        })
    }
}

/// The SIR epidemic `S + I -> 2I` (rate `beta`), `I -> R` (rate `gamma`).
pub fn sir_system(beta: f64, gamma: f64, omega: u64) -> Result<ReactionSystem, ModelError> {
    let infection = Reaction::new(beta, &[(0, 1), (1, 1)], &[(1, 2)], 3)?;
    let recovery = Reaction::new(gamma, &[(1, 1)], &[(2, 1)], 3)?;
    ReactionSystem::new(&["S", "I", "R"], vec![infection, recovery], omega)
}

/// The reference SIR problem: beta = 3/2, gamma = 1, Omega = 100, start at
/// (95, 5, 0), exit once R >= 85.
pub fn sir_reference() -> Model {
    let system = sir_system(1.5, 1.0, 100).expect("valid SIR parameters");
    let exit = ExitCondition::new(
        &system,
        2,
        Comparator::AtLeast,
        85,
        ExitCondition::DEFAULT_MAX_STEPS,
    )
    .expect("valid SIR exit");
    Model {
        system,
        initial: SystemState::new(vec![95, 5, 0]),
        exit,
    }
}

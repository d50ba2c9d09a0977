//! Ground truth by brute force.
//!
//! A [`ResponseFunctionScm`] gives every observed variable a finite menu of
//! response functions (maps from parent values to a value). One unit draws a
//! response function per variable, jointly within each district, and keeps it
//! in every world; counterfactual probabilities are then sums over draws.
//!
//! Response function `r` of `V` maps parent configuration `c` (mixed radix,
//! last parent fastest) to `(r / |V|^c) % |V|`.

mod sample;
mod verify;

pub use sample::{sample_rng, sample_scm, LatentCardinality, ScmSamplerConfig};
pub use verify::{bound_width_study, spearman, verify_bounds, StudyRow, StudySummary, VerifyQuery, VerifyReport, VERIFY_TOL};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::events::{product, CfFormula, CounterfactualEvent, Intervention, Value};
use crate::graph::{Admg, VarId};
use crate::identify::DiscreteDistribution;

/// Enumeration cap on joint response-function states.
pub const STATE_CAP: u128 = 1 << 24;

/// Number of response functions of one variable.
pub fn response_count(g: &Admg, v: VarId) -> Result<usize> {
    let configs: usize = g.parents(v).map(|p| g.cardinality(p)).product();
    let card = g.cardinality(v) as u128;
    let n = (0..configs).try_fold(1u128, |acc, _| acc.checked_mul(card));
    match n {
        Some(n) if n <= STATE_CAP => Ok(n as usize),
        _ => Err(Error::OutcomeSpaceTooLarge {
            size: n.unwrap_or(u128::MAX),
            cap: STATE_CAP,
        }),
    }
}

/// Size of the full response-function class of a district.
pub fn canonical_latent_cardinality(g: &Admg, district: &[VarId]) -> Result<usize> {
    let mut total: u128 = 1;
    for &v in district {
        total = total.saturating_mul(response_count(g, v)? as u128);
    }
    if total > STATE_CAP {
        return Err(Error::OutcomeSpaceTooLarge {
            size: total,
            cap: STATE_CAP,
        });
    }
    Ok(total as usize)
}

/// Sparse law over response-function tuples of one district.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictLaw {
    pub members: Vec<VarId>,
    /// `(response index per member, probability)`, zero-mass tuples omitted.
    pub support: Vec<(Vec<usize>, f64)>,
}

#[derive(Debug, Clone)]
pub struct ResponseFunctionScm {
    g: Admg,
    districts: Vec<DistrictLaw>,
}

impl ResponseFunctionScm {
    /// Districts must match the graph's bidirected components.
    pub fn new(g: Admg, districts: Vec<DistrictLaw>) -> Result<Self> {
        let mut want = g.districts();
        let mut got: Vec<Vec<VarId>> = districts
            .iter()
            .map(|d| {
                let mut m = d.members.clone();
                m.sort();
                m
            })
            .collect();
        want.sort();
        got.sort();
        if want != got {
            return Err(Error::InvalidConfig(
                "latent blocks do not match the graph's districts".into(),
            ));
        }
        for d in &districts {
            let counts = d
                .members
                .iter()
                .map(|&v| response_count(&g, v))
                .collect::<Result<Vec<_>>>()?;
            let mut total = 0.0;
            for (tuple, p) in &d.support {
                if tuple.len() != counts.len() || tuple.iter().zip(&counts).any(|(r, n)| r >= n) {
                    return Err(Error::InvalidConfig(format!(
                        "response tuple {tuple:?} out of range"
                    )));
                }
                if !(*p >= 0.0) {
                    return Err(Error::InvalidConfig(format!("negative latent mass {p}")));
                }
                total += p;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("latent law sums to {total}")));
            }
        }
        Ok(Self { g, districts })
    }

    pub fn graph(&self) -> &Admg {
        &self.g
    }

    pub fn districts(&self) -> &[DistrictLaw] {
        &self.districts
    }

    /// Every joint latent state with its mass, as one response index per variable.
    pub fn states(&self) -> impl Iterator<Item = (f64, Vec<usize>)> + '_ {
        let sizes: Vec<usize> = self.districts.iter().map(|d| d.support.len()).collect();
        let n = self.g.len();
        product(&sizes).map(move |pick| {
            let mut resp = vec![0; n];
            let mut w = 1.0;
            for (d, &i) in self.districts.iter().zip(&pick) {
                let (tuple, p) = &d.support[i];
                w *= p;
                for (&v, &r) in d.members.iter().zip(tuple) {
                    resp[v.0] = r;
                }
            }
            (w, resp)
        })
    }

    pub fn observed_joint(&self) -> Result<DiscreteDistribution> {
        let vars = self.g.variables().to_vec();
        let cards: Vec<usize> = vars.iter().map(|v| v.cardinality()).collect();
        let mut probs = vec![0.0; cards.iter().product()];
        let empty = Intervention::new();
        for (w, resp) in self.states() {
            let values = solve(&self.g, &resp, &empty);
            let idx = values.iter().zip(&cards).fold(0, |acc, (&x, &c)| acc * c + x);
            probs[idx] += w;
        }
        DiscreteDistribution::new(vars, probs)
    }

    pub fn counterfactual_prob(&self, e: &CounterfactualEvent) -> f64 {
        self.formula_prob(&CfFormula::Event(e.clone()))
    }

    pub fn formula_prob(&self, f: &CfFormula) -> f64 {
        let mut total = 0.0;
        let mut cache: HashMap<Intervention, Vec<Value>> = HashMap::new();
        for (w, resp) in self.states() {
            if w == 0.0 {
                continue;
            }
            cache.clear();
            let holds = f.eval_with(&mut |e| {
                let values = cache
                    .entry(e.world.clone())
                    .or_insert_with(|| solve(&self.g, &resp, &e.world));
                e.outcome.iter().all(|(v, x)| values[v.0] == x)
            });
            if holds {
                total += w;
            }
        }
        total
    }
}

/// Value of response function `r` at parent configuration `config`.
pub fn response_value(r: usize, card: usize, config: usize) -> Value {
    (r / card.pow(config as u32)) % card
}

/// Recursive substitution: all variable values under `world` for one unit.
pub fn solve(g: &Admg, resp: &[usize], world: &Intervention) -> Vec<Value> {
    let mut values = vec![0; g.len()];
    for &v in g.topological_order() {
        values[v.0] = match world.get(v) {
            Some(x) => x,
            None => {
                let config = g
                    .parents(v)
                    .fold(0, |acc, p| acc * g.cardinality(p) + values[p.0]);
                response_value(resp[v.0], g.cardinality(v), config)
            }
        };
    }
    values
}

/// Whether some unit of the full response-function class satisfies `f`.
/// Any law with full support then gives `f` positive probability.
pub fn satisfiable(g: &Admg, f: &CfFormula) -> Result<bool> {
    let counts = g
        .ids()
        .map(|v| response_count(g, v))
        .collect::<Result<Vec<_>>>()?;
    let total = counts.iter().map(|&c| c as u128).product::<u128>();
    if total > STATE_CAP {
        return Err(Error::OutcomeSpaceTooLarge {
            size: total,
            cap: STATE_CAP,
        });
    }
    let mut cache: HashMap<Intervention, Vec<Value>> = HashMap::new();
    for resp in product(&counts) {
        cache.clear();
        let holds = f.eval_with(&mut |e| {
            let values = cache
                .entry(e.world.clone())
                .or_insert_with(|| solve(g, &resp, &e.world));
            e.outcome.iter().all(|(v, x)| values[v.0] == x)
        });
        if holds {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{parse_event, SingleWorldEvent};
    use crate::models;

    /// Deterministic IV unit: Z=1, A copies Z, Y copies A.
    fn copy_chain() -> ResponseFunctionScm {
        let g = models::iv().admg;
        let id = |n| g.var_id(n).unwrap();
        // response 2 of a binary variable with a binary parent is the identity (0->0, 1->1)
        let districts = vec![
            DistrictLaw {
                members: vec![id("Z")],
                support: vec![(vec![1], 1.0)],
            },
            DistrictLaw {
                members: vec![id("A"), id("Y")],
                support: vec![(vec![2, 2], 1.0)],
            },
        ];
        ResponseFunctionScm::new(g, districts).unwrap()
    }

    #[test]
    fn response_encoding() {
        assert_eq!((0..2).map(|c| response_value(2, 2, c)).collect::<Vec<_>>(), [0, 1]);
        assert_eq!((0..2).map(|c| response_value(1, 2, c)).collect::<Vec<_>>(), [1, 0]);
        assert_eq!(response_value(5, 3, 1), 1);
        let g = models::iv_covariates().admg;
        let ay = [g.var_id("A").unwrap(), g.var_id("Y").unwrap()];
        assert_eq!(canonical_latent_cardinality(&g, &ay).unwrap(), 256);
        assert_eq!(canonical_latent_cardinality(&g, &[g.var_id("C").unwrap()]).unwrap(), 2);
        let iv = models::iv().admg;
        assert_eq!(response_count(&iv, iv.var_id("A").unwrap()).unwrap(), 4);
    }

    #[test]
    fn deterministic_unit() {
        let scm = copy_chain();
        let g = scm.graph().clone();
        let joint = scm.observed_joint().unwrap();
        assert_eq!(joint.cells().iter().filter(|&&p| p > 0.0).count(), 1);
        assert_eq!(joint.cells()[7], 1.0);
        assert_eq!(scm.counterfactual_prob(&parse_event(&g, "Y(A=0)=0").unwrap()), 1.0);
        assert_eq!(scm.counterfactual_prob(&parse_event(&g, "Y(Z=0)=1").unwrap()), 0.0);
    }

    #[test]
    fn uniform_latents_by_hand() {
        // uniform over 2 * 4 * 4 units
        let g = models::iv().admg;
        let id = |n| g.var_id(n).unwrap();
        let ay: Vec<(Vec<usize>, f64)> = product(&[4, 4]).map(|t| (t, 1.0 / 16.0)).collect();
        let scm = ResponseFunctionScm::new(
            g.clone(),
            vec![
                DistrictLaw {
                    members: vec![id("Z")],
                    support: vec![(vec![0], 0.5), (vec![1], 0.5)],
                },
                DistrictLaw {
                    members: vec![id("A"), id("Y")],
                    support: ay,
                },
            ],
        )
        .unwrap();
        let joint = scm.observed_joint().unwrap();
        for p in joint.cells() {
            assert!((p - 0.125).abs() < 1e-12);
        }
        // A(z)=a and Y(a)=ybar and Y(z)=y never happen together
        let e = parse_event(&g, "A(Z=1)=1 & Y(Z=1)=1 & Y(A=1)=0").unwrap();
        assert_eq!(scm.counterfactual_prob(&e), 0.0);
        let e = parse_event(&g, "A(Z=0)=0 & A(Z=1)=1").unwrap();
        assert!((scm.counterfactual_prob(&e) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn satisfiability() {
        let g = models::iv().admg;
        let ev = |s| CfFormula::event(parse_event(&g, s).unwrap());
        assert!(!satisfiable(&g, &ev("A(Z=1)=1 & Y(Z=1)=1 & Y(A=1)=0")).unwrap());
        assert!(satisfiable(&g, &ev("A(Z=1)=1 & Y(Z=1)=1 & Y(A=0)=0")).unwrap());
        let e = SingleWorldEvent::new(Intervention::new(), Default::default());
        assert!(satisfiable(&g, &CfFormula::not(CfFormula::event(e))).is_ok());
    }

    #[test]
    fn rejects_mismatched_blocks() {
        let g = models::iv().admg;
        let id = |n| g.var_id(n).unwrap();
        let bad = vec![DistrictLaw {
            members: vec![id("Z"), id("A"), id("Y")],
            support: vec![(vec![0, 0, 0], 1.0)],
        }];
        assert!(ResponseFunctionScm::new(g.clone(), bad).is_err());
        let bad_mass = vec![
            DistrictLaw {
                members: vec![id("Z")],
                support: vec![(vec![0], 0.5)],
            },
            DistrictLaw {
                members: vec![id("A"), id("Y")],
                support: vec![(vec![0, 0], 1.0)],
            },
        ];
        assert!(ResponseFunctionScm::new(g, bad_mass).is_err());
    }
}

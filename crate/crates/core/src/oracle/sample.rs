use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{canonical_latent_cardinality, response_count, response_value, DistrictLaw, ResponseFunctionScm};
use crate::error::{Error, Result};
use crate::events::product;
use crate::graph::{Admg, VarId};

/// How a confounded district's latent law is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentCardinality {
    /// Dirichlet directly over every response-function tuple.
    Canonical,
    /// `K` latent states; each state gets its own conditional tables drawn
    /// from the Beta prior, and the mixture is folded into a tuple law.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmSamplerConfig {
    pub beta_alpha: f64,
    pub dirichlet_alpha: f64,
    pub latent: LatentCardinality,
    pub seed: u64,
}

impl Default for ScmSamplerConfig {
    fn default() -> Self {
        Self {
            beta_alpha: 1.0,
            dirichlet_alpha: 0.1,
            latent: LatentCardinality::Canonical,
            seed: 0,
        }
    }
}

impl ScmSamplerConfig {
    /// The covariates-model simulation setup: Beta(1) conditionals and a
    /// 16-state confounder with a Dirichlet(0.1) law.
    pub fn study() -> Self {
        Self {
            latent: LatentCardinality::Fixed(16),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_alpha > 0.0 && self.dirichlet_alpha > 0.0) {
            return Err(Error::InvalidConfig("prior parameters must be positive".into()));
        }
        if self.latent == LatentCardinality::Fixed(0) {
            return Err(Error::InvalidConfig("latent cardinality must be at least 1".into()));
        }
        Ok(())
    }
}

/// Independent stream `i` of the generator seeded by `seed`.
pub fn sample_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

fn dirichlet(rng: &mut impl Rng, alpha: f64, n: usize) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha checked positive");
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Conditional tables `p[config][value]` for one variable.
fn conditional_tables(g: &Admg, v: VarId, alpha: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let configs: usize = g.parents(v).map(|p| g.cardinality(p)).product();
    (0..configs)
        .map(|_| dirichlet(rng, alpha, g.cardinality(v)))
        .collect()
}

/// Probability that independent per-configuration draws from `tables`
/// realise response function `r`.
fn response_mass(tables: &[Vec<f64>], card: usize, r: usize) -> f64 {
    tables
        .iter()
        .enumerate()
        .map(|(c, t)| t[response_value(r, card, c)])
        .product()
}

fn sparse(support: impl Iterator<Item = (Vec<usize>, f64)>) -> Vec<(Vec<usize>, f64)> {
    let mut out: Vec<(Vec<usize>, f64)> = support.filter(|(_, p)| *p > 0.0).collect();
    let total: f64 = out.iter().map(|(_, p)| p).sum();
    for (_, p) in &mut out {
        *p /= total;
    }
    out
}

pub fn sample_scm(g: &Admg, cfg: &ScmSamplerConfig, rng: &mut impl Rng) -> Result<ResponseFunctionScm> {
    cfg.validate()?;
    let mut laws = Vec::new();
    for members in g.districts() {
        let counts = members
            .iter()
            .map(|&v| response_count(g, v))
            .collect::<Result<Vec<_>>>()?;
        let canonical = canonical_latent_cardinality(g, &members)?;
        let confounded = members.len() > 1;
        let support = if !confounded {
            let v = members[0];
            let tables = conditional_tables(g, v, cfg.beta_alpha, rng);
            let card = g.cardinality(v);
            sparse((0..counts[0]).map(|r| (vec![r], response_mass(&tables, card, r))))
        } else {
            match cfg.latent {
                LatentCardinality::Canonical => {
                    let w = dirichlet(rng, cfg.dirichlet_alpha, canonical);
                    sparse(product(&counts).zip(w))
                }
                LatentCardinality::Fixed(k) => {
                    let w = dirichlet(rng, cfg.dirichlet_alpha, k);
                    let tables: Vec<Vec<Vec<Vec<f64>>>> = (0..k)
                        .map(|_| {
                            members
                                .iter()
                                .map(|&v| conditional_tables(g, v, cfg.beta_alpha, rng))
                                .collect()
                        })
                        .collect();
                    sparse(product(&counts).map(|tuple| {
                        let p = (0..k)
                            .map(|u| {
                                let inner: f64 = members
                                    .iter()
                                    .zip(&tuple)
                                    .enumerate()
                                    .map(|(i, (&v, &r))| {
                                        response_mass(&tables[u][i], g.cardinality(v), r)
                                    })
                                    .product();
                                w[u] * inner
                            })
                            .sum();
                        (tuple, p)
                    }))
                }
            }
        };
        laws.push(DistrictLaw { members, support });
    }
    ResponseFunctionScm::new(g.clone(), laws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn reproducible() {
        let g = models::iv_covariates().admg;
        let cfg = ScmSamplerConfig::study();
        let a = sample_scm(&g, &cfg, &mut sample_rng(7, 3)).unwrap();
        let b = sample_scm(&g, &cfg, &mut sample_rng(7, 3)).unwrap();
        assert_eq!(a.districts(), b.districts());
        let c = sample_scm(&g, &cfg, &mut sample_rng(7, 4)).unwrap();
        assert_ne!(a.districts(), c.districts());
    }

    #[test]
    fn canonical_has_full_support() {
        let g = models::iv().admg;
        let scm = sample_scm(&g, &ScmSamplerConfig::default(), &mut sample_rng(1, 0)).unwrap();
        let ay = scm.districts().iter().find(|d| d.members.len() == 2).unwrap();
        assert!(ay.support.len() <= 16);
        let total: f64 = ay.support.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_one_marginals_near_uniform() {
        // Monte Carlo: under Beta(1, 1) the marginal P(Z = 1) averages 1/2.
        let g = models::iv().admg;
        let z = g.var_id("Z").unwrap();
        let cfg = ScmSamplerConfig::default();
        let n = 10_000;
        let mut mean = 0.0;
        for i in 0..n {
            let scm = sample_scm(&g, &cfg, &mut sample_rng(11, i)).unwrap();
            let d = scm.districts().iter().find(|d| d.members == [z]).unwrap();
            mean += d.support.iter().filter(|(t, _)| t[0] == 1).map(|(_, p)| p).sum::<f64>();
        }
        mean /= n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn bad_config() {
        let g = models::iv().admg;
        let cfg = ScmSamplerConfig {
            beta_alpha: 0.0,
            ..Default::default()
        };
        assert!(sample_scm(&g, &cfg, &mut sample_rng(0, 0)).is_err());
        let cfg = ScmSamplerConfig {
            latent: LatentCardinality::Fixed(0),
            ..Default::default()
        };
        assert!(sample_scm(&g, &cfg, &mut sample_rng(0, 0)).is_err());
    }
}

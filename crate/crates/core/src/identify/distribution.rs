use std::collections::BTreeMap;
use std::fmt::Debug;
use std::io::Read;

use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Assignment, Value};
use crate::graph::{Admg, VarId, Variable};

/// Numeric type a distribution can be evaluated in: `f64` for simulation,
/// `BigRational` for exact checks against hand arithmetic.
pub trait Probability:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync
{
}

impl<T> Probability for T where
    T: Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync
{
}

/// Joint law over observed variables, stored densely in lexicographic order
/// of the variables' value indices (last variable fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<P = f64> {
    vars: Vec<Variable>,
    cards: Vec<usize>,
    probs: Vec<P>,
}

impl<P: Probability> DiscreteDistribution<P> {
    pub fn new(vars: Vec<Variable>, probs: Vec<P>) -> Result<Self> {
        let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
        let size: usize = cards.iter().product();
        if probs.len() != size {
            return Err(Error::InvalidDistribution(format!(
                "expected {size} cells, got {}",
                probs.len()
            )));
        }
        let mut total = 0.0;
        for p in &probs {
            if *p < P::zero() {
                return Err(Error::InvalidDistribution(format!("negative probability {p:?}")));
            }
            total += p.to_f64().unwrap_or(f64::NAN);
        }
        if !((total - 1.0).abs() <= 1e-9) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { vars, cards, probs })
    }

    /// Builds a table from `(assignment, probability)` rows over all
    /// variables of `g`; unlisted cells are zero.
    pub fn from_cells(
        g: &Admg,
        cells: impl IntoIterator<Item = (Vec<Value>, P)>,
    ) -> Result<Self> {
        let vars = g.variables().to_vec();
        let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
        let mut probs = vec![P::zero(); cards.iter().product()];
        for (values, p) in cells {
            let idx = index_of(&cards, &values).ok_or_else(|| {
                Error::InvalidDistribution(format!("row {values:?} does not match the variables"))
            })?;
            probs[idx] = probs[idx].clone() + p;
        }
        Self::new(vars, probs)
    }

    pub fn uniform(g: &Admg) -> Self {
        let vars = g.variables().to_vec();
        let n: usize = vars.iter().map(Variable::cardinality).product();
        let p = P::one() / P::from_usize(n).expect("table size fits");
        Self::new(vars, vec![p; n]).expect("uniform table is valid")
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn cells(&self) -> &[P] {
        &self.probs
    }

    /// Full assignment of the `idx`-th cell.
    pub fn cell_values(&self, mut idx: usize) -> Vec<Value> {
        let mut out = vec![0; self.cards.len()];
        for (slot, &c) in out.iter_mut().zip(&self.cards).rev() {
            *slot = idx % c;
            idx /= c;
        }
        out
    }

    /// Checks that this table is over the same variables as `g`.
    pub fn check_matches(&self, g: &Admg) -> Result<()> {
        if self.vars.as_slice() != g.variables() {
            let names: Vec<&str> = self.vars.iter().map(|v| v.name.as_str()).collect();
            return Err(Error::InvalidDistribution(format!(
                "table over {names:?} does not match the graph's variables"
            )));
        }
        Ok(())
    }

    /// Marginal probability of a partial assignment (indexed by position).
    pub fn prob(&self, a: &Assignment) -> P {
        let fixed: Vec<Option<Value>> = (0..self.vars.len()).map(|i| a.get(VarId(i))).collect();
        let free: Vec<usize> = (0..self.vars.len()).filter(|&i| fixed[i].is_none()).collect();
        let free_cards: Vec<usize> = free.iter().map(|&i| self.cards[i]).collect();
        let mut values: Vec<Value> = fixed.iter().map(|v| v.unwrap_or(0)).collect();
        let mut total = P::zero();
        for combo in crate::events::product(&free_cards) {
            for (&i, &x) in free.iter().zip(&combo) {
                values[i] = x;
            }
            let idx = index_of(&self.cards, &values).expect("values in range");
            total = total + self.probs[idx].clone();
        }
        total
    }

    pub fn map<Q: Probability>(&self, f: impl Fn(&P) -> Q) -> Result<DiscreteDistribution<Q>> {
        DiscreteDistribution::new(self.vars.clone(), self.probs.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> DiscreteDistribution<f64> {
        DiscreteDistribution {
            vars: self.vars.clone(),
            cards: self.cards.clone(),
            probs: self.probs.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }
}

fn index_of(cards: &[usize], values: &[Value]) -> Option<usize> {
    if values.len() != cards.len() {
        return None;
    }
    let mut idx = 0;
    for (&v, &c) in values.iter().zip(cards) {
        if v >= c {
            return None;
        }
        idx = idx * c + v;
    }
    Some(idx)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonTable {
    variables: Vec<String>,
    rows: Vec<JsonRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRow {
    values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<f64>,
}

enum Weight {
    Prob,
    Count,
}

impl DiscreteDistribution<f64> {
    /// Reads a CSV table: one column per graph variable (any order, value
    /// labels as cells) plus either `prob` or `count`. Counts are normalized.
    pub fn from_csv<R: Read>(g: &Admg, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let weight_col = headers
            .iter()
            .position(|h| h == "prob" || h == "count")
            .ok_or_else(|| Error::InvalidDistribution("missing `prob` or `count` column".into()))?;
        let weight = if headers[weight_col] == "prob" { Weight::Prob } else { Weight::Count };
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != weight_col)
            .map(|(_, h)| h.clone())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut labels = Vec::new();
            let mut w = None;
            for (i, field) in rec.iter().enumerate() {
                if i == weight_col {
                    w = Some(field.parse::<f64>().map_err(|_| {
                        Error::InvalidDistribution(format!("bad number `{field}`"))
                    })?);
                } else {
                    labels.push(field.to_string());
                }
            }
            rows.push((labels, w.unwrap_or(f64::NAN)));
        }
        Self::from_labelled(g, &names, rows, weight)
    }

    /// Reads `{"variables": [...], "rows": [{"values": [...], "prob": p}]}`;
    /// rows may carry `count` instead of `prob`.
    pub fn from_json(g: &Admg, text: &str) -> Result<Self> {
        let table: JsonTable = serde_json::from_str(text)?;
        let counts = table.rows.iter().any(|r| r.count.is_some());
        let mut rows = Vec::new();
        for r in table.rows {
            let w = if counts { r.count } else { r.prob };
            let w = w.ok_or_else(|| {
                Error::InvalidDistribution("every row needs the same `prob` or `count` field".into())
            })?;
            rows.push((r.values, w));
        }
        let weight = if counts { Weight::Count } else { Weight::Prob };
        Self::from_labelled(g, &table.variables, rows, weight)
    }

    pub fn to_json(&self) -> String {
        let table = JsonTable {
            variables: self.vars.iter().map(|v| v.name.clone()).collect(),
            rows: (0..self.probs.len())
                .map(|i| JsonRow {
                    values: self
                        .cell_values(i)
                        .iter()
                        .zip(&self.vars)
                        .map(|(&x, v)| v.domain[x].clone())
                        .collect(),
                    prob: Some(self.probs[i]),
                    count: None,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&table).expect("table serializes")
    }

    fn from_labelled(
        g: &Admg,
        names: &[String],
        rows: Vec<(Vec<String>, f64)>,
        weight: Weight,
    ) -> Result<Self> {
        let mut ids = Vec::new();
        for n in names {
            ids.push(g.var_id(n)?);
        }
        for v in g.ids() {
            if !ids.contains(&v) {
                return Err(Error::InvalidDistribution(format!(
                    "no column for variable `{}`",
                    g.name(v)
                )));
            }
        }
        if ids.len() != g.len() {
            return Err(Error::InvalidDistribution("duplicate variable column".into()));
        }
        let mut cells: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (labels, w) in rows {
            if labels.len() != ids.len() {
                return Err(Error::InvalidDistribution(format!(
                    "row has {} values, expected {}",
                    labels.len(),
                    ids.len()
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
            }
            let mut values = vec![0; g.len()];
            for (&v, label) in ids.iter().zip(&labels) {
                values[v.0] = g.value_index(v, label)?;
            }
            if cells.insert(values, w).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate row {labels:?}")));
            }
            total += w;
        }
        let scale = match weight {
            Weight::Prob => 1.0,
            Weight::Count if total > 0.0 => total,
            Weight::Count => {
                return Err(Error::InvalidDistribution("counts sum to zero".into()));
            }
        };
        Self::from_cells(g, cells.into_iter().map(|(v, w)| (v, w / scale)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use num_rational::BigRational;

    #[test]
    fn marginals() {
        let m = models::iv();
        let d: DiscreteDistribution = DiscreteDistribution::uniform(&m.admg);
        let a: Assignment = [(VarId(1), 1)].into_iter().collect();
        assert!((d.prob(&a) - 0.5).abs() < 1e-15);
        assert!((d.prob(&Assignment::new()) - 1.0).abs() < 1e-15);
        assert_eq!(d.cell_values(5), vec![1, 0, 1]);
    }

    #[test]
    fn csv_with_counts_and_reordered_columns() {
        let m = models::iv();
        let csv = "Y,Z,A,count\n0,0,0,1\n1,1,1,3\n";
        let d = DiscreteDistribution::from_csv(&m.admg, csv.as_bytes()).unwrap();
        let zay: Assignment = [(VarId(0), 1), (VarId(1), 1), (VarId(2), 1)].into_iter().collect();
        assert!((d.prob(&zay) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_bad_input() {
        let m = models::iv();
        let g = &m.admg;
        assert!(DiscreteDistribution::from_csv(g, "Z,A,Y\n0,0,0\n".as_bytes()).is_err());
        assert!(DiscreteDistribution::from_csv(g, "Z,A,prob\n0,0,1\n".as_bytes()).is_err());
        assert!(DiscreteDistribution::from_csv(g, "Z,A,Y,prob\n0,0,0,0.5\n".as_bytes()).is_err());
        assert!(DiscreteDistribution::from_csv(g, "Z,A,Y,prob\n0,0,2,1\n".as_bytes()).is_err());
        assert!(
            DiscreteDistribution::from_csv(g, "Z,A,Y,prob\n0,0,0,0.5\n0,0,0,0.5\n".as_bytes())
                .is_err()
        );
    }

    #[test]
    fn json_round_trip() {
        let m = models::iv();
        let d: DiscreteDistribution = DiscreteDistribution::uniform(&m.admg);
        let back = DiscreteDistribution::from_json(&m.admg, &d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn exact_rational_table() {
        let m = models::iv();
        let d: DiscreteDistribution<BigRational> = DiscreteDistribution::uniform(&m.admg);
        let a: Assignment = [(VarId(0), 0), (VarId(2), 1)].into_iter().collect();
        assert_eq!(
            d.prob(&a),
            BigRational::new(1.into(), 4.into())
        );
    }
}

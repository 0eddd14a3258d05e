use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// ChaCha stream ids. Each quantity draws from its own stream so that changing
/// how many entries one of them consumes never shifts the others.
pub const STREAM_COST: u64 = 0;
pub const STREAM_A: u64 = 1;
pub const STREAM_B: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub cost_lo: f64,
    pub cost_hi: f64,
    pub weight_lo: f64,
    pub weight_hi: f64,
    pub normalize: bool,
}

impl GeneratorParams {
    /// Costs on [1, 10], weights on [1, 5], normalized.
    pub fn small_cost(n: usize) -> Self {
        Self {
            n,
            cost_lo: 1.0,
            cost_hi: 10.0,
            weight_lo: 1.0,
            weight_hi: 5.0,
            normalize: true,
        }
    }

    /// Costs on [1, 100], weights on [1, 10], normalized.
    pub fn wide_cost(n: usize) -> Self {
        Self {
            n,
            cost_lo: 1.0,
            cost_hi: 100.0,
            weight_lo: 1.0,
            weight_hi: 10.0,
            normalize: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let finite = [self.cost_lo, self.cost_hi, self.weight_lo, self.weight_hi]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.cost_lo > self.cost_hi {
            return Err(Error::InvalidParameter(format!(
                "invalid cost interval [{}, {}]",
                self.cost_lo, self.cost_hi
            )));
        }
        if !(self.weight_lo > 0.0) || self.weight_lo > self.weight_hi {
            return Err(Error::InvalidParameter(format!(
                "invalid weight interval [{}, {}]",
                self.weight_lo, self.weight_hi
            )));
        }
        Ok(())
    }
}

/// A cost matrix with its two marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub cost: CostMatrix,
    pub a: DiscreteMeasure,
    pub b: DiscreteMeasure,
    pub rng_seed: u64,
    pub generator_params: Option<GeneratorParams>,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    cost: CostMatrix,
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    seed: u64,
    #[serde(default)]
    generator_params: Option<GeneratorParams>,
}

impl ProblemInstance {
    pub fn new(cost: CostMatrix, a: DiscreteMeasure, b: DiscreteMeasure) -> Result<Self> {
        if a.len() != cost.rows() {
            return Err(Error::DimensionMismatch {
                context: "row measure vs cost rows",
                expected: cost.rows(),
                found: a.len(),
            });
        }
        if b.len() != cost.cols() {
            return Err(Error::DimensionMismatch {
                context: "column measure vs cost cols",
                expected: cost.cols(),
                found: b.len(),
            });
        }
        Ok(Self {
            cost,
            a,
            b,
            rng_seed: 0,
            generator_params: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn rows(&self) -> usize {
        self.cost.rows()
    }

    pub fn cols(&self) -> usize {
        self.cost.cols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = InstanceDoc {
            n: self.rows(),
            m: (!self.is_square()).then_some(self.cols()),
            cost: self.cost.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            seed: self.rng_seed,
            generator_params: self.generator_params.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        if doc.n != doc.cost.rows() {
            return Err(Error::DimensionMismatch {
                context: "declared n vs cost rows",
                expected: doc.n,
                found: doc.cost.rows(),
            });
        }
        let m = doc.m.unwrap_or(doc.n);
        if m != doc.cost.cols() {
            return Err(Error::DimensionMismatch {
                context: "declared m vs cost cols",
                expected: m,
                found: doc.cost.cols(),
            });
        }
        let mut inst = Self::new(doc.cost, doc.a, doc.b)?.with_seed(doc.seed);
        inst.generator_params = doc.generator_params;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws an n×n instance: i.i.d. uniform costs and weights, each from its own
/// ChaCha20 stream keyed by `seed`.
pub fn generate_instance(params: &GeneratorParams, seed: u64) -> Result<ProblemInstance> {
    params.validate()?;
    let n = params.n;
    let mut rc = stream(seed, STREAM_COST);
    let cost =
        Array2::from_shape_simple_fn((n, n), || uniform(&mut rc, params.cost_lo, params.cost_hi));
    let draw = |id| {
        let mut r = stream(seed, id);
        Array1::from_shape_simple_fn(n, || uniform(&mut r, params.weight_lo, params.weight_hi))
    };
    let (wa, wb) = (draw(STREAM_A), draw(STREAM_B));
    let (a, b) = if params.normalize {
        (
            DiscreteMeasure::normalized(wa)?,
            DiscreteMeasure::normalized(wb)?,
        )
    } else {
        (DiscreteMeasure::new(wa)?, DiscreteMeasure::new(wb)?)
    };
    let mut inst = ProblemInstance::new(CostMatrix::new(cost)?, a, b)?.with_seed(seed);
    inst.generator_params = Some(params.clone());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let p = GeneratorParams::small_cost(50);
        let x = generate_instance(&p, 7).unwrap();
        let y = generate_instance(&p, 7).unwrap();
        assert_eq!(x, y);
        assert!(x.cost.entries().iter().all(|&c| (1.0..=10.0).contains(&c)));
        assert!((x.a.total() - 1.0).abs() <= 1e-12);
        assert!((x.b.total() - 1.0).abs() <= 1e-12);
        let z = generate_instance(&p, 8).unwrap();
        assert_ne!(x.cost, z.cost);
    }

    #[test]
    fn streams_are_independent() {
        // A larger n extends each stream without disturbing its prefix.
        let small = generate_instance(&GeneratorParams::wide_cost(3), 1).unwrap();
        let mut p = GeneratorParams::wide_cost(4);
        p.normalize = false;
        let big = generate_instance(&p, 1).unwrap();
        let mut q = GeneratorParams::wide_cost(3);
        q.normalize = false;
        let raw = generate_instance(&q, 1).unwrap();
        assert_eq!(&big.a.as_slice()[..3], raw.a.as_slice());
        assert_eq!(&big.b.as_slice()[..3], raw.b.as_slice());
        assert_eq!(small.cost, raw.cost);
    }

    #[test]
    fn invalid_intervals() {
        let mut p = GeneratorParams::small_cost(5);
        p.cost_lo = 20.0;
        assert!(generate_instance(&p, 0).is_err());
        let mut p = GeneratorParams::small_cost(5);
        p.weight_lo = 0.0;
        assert!(generate_instance(&p, 0).is_err());
        let mut p = GeneratorParams::small_cost(0);
        p.n = 0;
        assert!(generate_instance(&p, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = generate_instance(&GeneratorParams::small_cost(6), 3).unwrap();
        let y = ProblemInstance::from_json(&x.to_json().unwrap()).unwrap();
        assert_eq!(x, y);
    }
}

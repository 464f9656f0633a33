use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How a parameter matrix is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform on `±sqrt(6 / (rows + cols))`.
    Glorot,
    Zeros,
    /// LSTM bias column of `4 * hidden` rows in gate order (i, f, g, o);
    /// the forget slice is set to 1.0, everything else to 0.
    LstmBias {
        hidden: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub init: Init,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, init: Init) -> Self {
        Self {
            name: name.into(),
            rows,
            cols,
            init,
        }
    }
}

/// A named row-major matrix with a gradient accumulator of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMatrix {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamMatrix {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            rows * cols,
            "parameter values must be rows * cols"
        );
        Self {
            name: name.into(),
            rows,
            cols,
            grad: vec![0.0; values.len()],
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    params: Vec<ParamMatrix>,
    by_name: HashMap<String, ParamId>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from `specs`, drawing values deterministically from `seed`.
    pub fn init(specs: &[ParamSpec], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = Self::new();
        for spec in specs {
            if spec.rows == 0 || spec.cols == 0 {
                return Err(Error::Config(format!(
                    "parameter {} has empty shape {}x{}",
                    spec.name, spec.rows, spec.cols
                )));
            }
            let n = spec.rows * spec.cols;
            let values = match spec.init {
                Init::Glorot => {
                    let bound = (6.0 / (spec.rows + spec.cols) as f64).sqrt();
                    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
                }
                Init::Zeros => vec![0.0; n],
                Init::LstmBias { hidden } => {
                    if n != 4 * hidden {
                        return Err(Error::Config(format!(
                            "LSTM bias {} must have 4*{hidden} entries, has {n}",
                            spec.name
                        )));
                    }
                    let mut v = vec![0.0; n];
                    v[hidden..2 * hidden].fill(1.0);
                    v
                }
            };
            store.push(ParamMatrix::new(
                spec.name.clone(),
                spec.rows,
                spec.cols,
                values,
            ))?;
        }
        Ok(store)
    }

    pub fn push(&mut self, param: ParamMatrix) -> Result<ParamId> {
        if self.by_name.contains_key(&param.name) {
            return Err(Error::Config(format!(
                "duplicate parameter name {}",
                param.name
            )));
        }
        let id = ParamId(self.params.len());
        self.by_name.insert(param.name.clone(), id);
        self.params.push(param);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<ParamId> {
        self.id(name)
            .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    }

    pub fn get(&self, id: ParamId) -> &ParamMatrix {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamMatrix {
        &mut self.params[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&ParamMatrix> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParamMatrix> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamMatrix> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar entries.
    pub fn num_values(&self) -> usize {
        self.params.iter().map(ParamMatrix::len).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn scale_grad(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn checksum(&self) -> f64 {
        self.params.iter().flat_map(|p| p.values.iter()).sum()
    }
}

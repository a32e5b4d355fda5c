use super::{NnError, Tensor2D};

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor2D,
    pub grad: Tensor2D,
}

/// Named parameters with matching gradient buffers, kept in insertion order.
/// That order is the update order used by [`super::AdamState`] and the
/// serialization order used by checkpoints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a parameter and returns its index.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2D) -> Result<usize, NnError> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(NnError::DuplicateParam(name));
        }
        let grad = Tensor2D::zeros(value.rows(), value.cols());
        self.params.push(Param { name, value, grad });
        Ok(self.params.len() - 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn value(&self, idx: usize) -> &Tensor2D {
        &self.params[idx].value
    }

    pub fn value_mut(&mut self, idx: usize) -> &mut Tensor2D {
        &mut self.params[idx].value
    }

    pub fn grad(&self, idx: usize) -> &Tensor2D {
        &self.params[idx].grad
    }

    /// Adds `g` into the gradient buffer of parameter `idx`.
    pub fn accumulate(&mut self, idx: usize, g: &Tensor2D) -> Result<(), NnError> {
        self.params[idx].grad.add_assign(g)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// All parameter scalars, concatenated in store order.
    pub fn flatten_values(&self) -> Vec<f64> {
        self.params
            .iter()
            .flat_map(|p| p.value.as_slice().iter().copied())
            .collect()
    }

    pub fn flatten_grads(&self) -> Vec<f64> {
        self.params
            .iter()
            .flat_map(|p| p.grad.as_slice().iter().copied())
            .collect()
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.num_scalars() {
            return Err(NnError::ShapeMismatch {
                op: "load_flat",
                left: (self.num_scalars(), 1),
                right: (flat.len(), 1),
            });
        }
        let mut offset = 0;
        for p in &mut self.params {
            let n = p.value.len();
            p.value.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

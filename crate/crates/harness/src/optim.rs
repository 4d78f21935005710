//! Adam optimizer with bias correction and checkpointable state.

use std::collections::BTreeMap;

use hlm_model::ParamStore;
use serde::{Deserialize, Serialize};
use tensor_core::{Matrix, NamedArray};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, keyed by parameter name.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Apply one update from per-parameter gradients.
    ///
    /// Moment buffers appear lazily on first use, so the same optimizer
    /// serves any layout. Gradients for unknown parameter names are an error
    /// in the caller; here every `(name, grad)` pair must match an entry in
    /// `params` by name and shape.
    pub fn update(
        &mut self,
        params: &mut ParamStore,
        grads: &[(String, Matrix)],
    ) -> Result<(), HarnessError> {
        self.step += 1;
        let t = self.step as i32;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (name, grad) in grads {
            let param = params
                .get_mut(name)
                .ok_or_else(|| HarnessError::CheckpointEntry(name.clone()))?;
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (vec![0.0; grad.len()], vec![0.0; grad.len()]));
            let p = param.data_mut();
            let g = grad.data();
            for i in 0..g.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
        Ok(())
    }

    /// Serialize moments and step counter for checkpointing.
    pub fn to_named_arrays(&self) -> Vec<NamedArray> {
        let mut arrays = vec![NamedArray::new("optim.step", [1, 1], vec![self.step as f64])];
        for (name, (m, v)) in &self.moments {
            arrays.push(NamedArray::new(
                format!("optim.m.{name}"),
                [1, m.len()],
                m.clone(),
            ));
            arrays.push(NamedArray::new(
                format!("optim.v.{name}"),
                [1, v.len()],
                v.clone(),
            ));
        }
        arrays
    }

    /// Rebuild optimizer state written by [`Adam::to_named_arrays`].
    pub fn from_named_arrays(
        config: AdamConfig,
        arrays: &[NamedArray],
    ) -> Result<Self, HarnessError> {
        let mut step = None;
        let mut m: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut v: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for a in arrays {
            if a.name == "optim.step" {
                step = Some(a.data[0] as u64);
            } else if let Some(name) = a.name.strip_prefix("optim.m.") {
                m.insert(name.to_string(), a.data.clone());
            } else if let Some(name) = a.name.strip_prefix("optim.v.") {
                v.insert(name.to_string(), a.data.clone());
            }
        }
        let step = step.ok_or_else(|| HarnessError::CheckpointEntry("optim.step".into()))?;
        let mut moments = BTreeMap::new();
        for (name, m_buf) in m {
            let v_buf = v
                .remove(&name)
                .ok_or_else(|| HarnessError::CheckpointEntry(format!("optim.v.{name}")))?;
            moments.insert(name, (m_buf, v_buf));
        }
        if let Some(name) = v.keys().next() {
            return Err(HarnessError::CheckpointEntry(format!("optim.m.{name}")));
        }
        Ok(Self {
            config,
            step,
            moments,
        })
    }
}

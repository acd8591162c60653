//! Decision variables: node-level selection `x` and edge-level transmission
//! `y`, stored as dense row-major matrices.

use serde::Serialize;

/// `x[node, level]` in `[0, 1]`: node selects/carries content of a level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionState {
    values: Vec<f64>,
    levels: usize,
}

/// `y[edge, level]` in `[0, 1]`: edge transmits content of a level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionState {
    values: Vec<f64>,
    levels: usize,
}

impl SelectionState {
    pub fn zeros(nodes: usize, levels: usize) -> Self {
        Self {
            values: vec![0.0; nodes * levels],
            levels,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn nodes(&self) -> usize {
        if self.levels == 0 { 0 } else { self.values.len() / self.levels }
    }

    /// Value at `(node idx, 0-based level)`.
    pub fn get(&self, node: usize, level: usize) -> f64 {
        self.values[node * self.levels + level]
    }

    pub fn set(&mut self, node: usize, level: usize, v: f64) {
        self.values[node * self.levels + level] = v;
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.levels..(node + 1) * self.levels]
    }

    pub fn row_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.levels..(node + 1) * self.levels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        self.values.iter().all(|v| (v - v.round()).abs() <= tol)
    }
}

impl TransmissionState {
    pub fn zeros(edges: usize, levels: usize) -> Self {
        Self {
            values: vec![0.0; edges * levels],
            levels,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn edges(&self) -> usize {
        if self.levels == 0 { 0 } else { self.values.len() / self.levels }
    }

    /// Value at `(edge idx, 0-based level)`.
    pub fn get(&self, edge: usize, level: usize) -> f64 {
        self.values[edge * self.levels + level]
    }

    pub fn set(&mut self, edge: usize, level: usize, v: f64) {
        self.values[edge * self.levels + level] = v;
    }

    pub fn row(&self, edge: usize) -> &[f64] {
        &self.values[edge * self.levels..(edge + 1) * self.levels]
    }

    pub fn row_mut(&mut self, edge: usize) -> &mut [f64] {
        &mut self.values[edge * self.levels..(edge + 1) * self.levels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        self.values.iter().all(|v| (v - v.round()).abs() <= tol)
    }
}

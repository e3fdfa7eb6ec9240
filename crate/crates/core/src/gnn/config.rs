use serde::{Deserialize, Serialize};

use super::GnnError;
use crate::molio::IonMode;

/// Architecture and fragmentation settings shared by training and inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    /// Molecule GNN layers.
    pub l1: usize,
    /// Fragment GNN layers.
    pub l2: usize,
    /// Fragmentation depth.
    pub depth: u32,
    /// Hydrogen tolerance.
    pub j: u32,
    pub fourier_t: usize,
    pub use_frag_edges: bool,
    pub use_collision_energy: bool,
    pub mode: IonMode,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden_dim: 64,
            l1: 3,
            l2: 2,
            depth: 3,
            j: 4,
            fourier_t: 10,
            use_frag_edges: false,
            use_collision_energy: true,
            mode: IonMode::Protonated,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        let bad = |m: &str| Err(GnnError::Config(m.to_string()));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be at least 1");
        }
        if self.l1 == 0 || self.l2 == 0 {
            return bad("l1 and l2 must be at least 1");
        }
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if self.fourier_t == 0 {
            return bad("fourier_t must be at least 1");
        }
        Ok(())
    }

    /// Output columns per node.
    pub fn width(&self) -> usize {
        2 * self.j as usize + 1
    }

    /// Collision-energy embedding width (0 when disabled).
    pub fn ce_width(&self) -> usize {
        if self.use_collision_energy {
            self.fourier_t
        } else {
            0
        }
    }

    /// Fourier formula embedding width over the heavy elements.
    pub fn formula_width(&self) -> usize {
        crate::molio::NUM_ELEMENTS.saturating_sub(1) * self.fourier_t
    }

    pub fn depth_width(&self) -> usize {
        self.depth as usize + 1
    }
}

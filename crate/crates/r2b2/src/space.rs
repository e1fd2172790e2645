//! Discrete action spaces on the unit hypercube and their joint products.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("action space must contain at least one point")]
    Empty,
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("coordinate {value} of point {index} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

/// One agent's discrete action space: an ordered, index-stable list of
/// points in `[0, 1]^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl ActionSpace {
    /// Builds a space from an explicit point list. Ordering is preserved.
    pub fn from_points(dim: usize, points: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(SpaceError::DimensionMismatch {
                    index,
                    got: p.len(),
                    expected: dim,
                });
            }
            if let Some(&value) = p.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                return Err(SpaceError::OutOfRange { index, value });
            }
        }
        Ok(Self { dim, points })
    }

    /// Regular grid with `points_per_axis` equally spaced points per axis,
    /// endpoints included, enumerated row-major (last axis fastest).
    /// A single-point axis sits at 0.5.
    pub fn grid(dim: usize, points_per_axis: usize) -> Result<Self, SpaceError> {
        if dim == 0 || points_per_axis == 0 {
            return Err(SpaceError::Empty);
        }
        let axis: Vec<f64> = if points_per_axis == 1 {
            vec![0.5]
        } else {
            (0..points_per_axis)
                .map(|i| i as f64 / (points_per_axis - 1) as f64)
                .collect()
        };
        let size = points_per_axis.pow(dim as u32);
        let mut points = Vec::with_capacity(size);
        for flat in 0..size {
            let mut p = vec![0.0; dim];
            let mut rem = flat;
            for d in (0..dim).rev() {
                p[d] = axis[rem % points_per_axis];
                rem /= points_per_axis;
            }
            points.push(p);
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.as_slice())
    }
}

/// Cross product of per-agent action spaces. A joint action is the
/// concatenation of the per-agent coordinate blocks in agent order; flat
/// indices enumerate the product row-major (last agent fastest).
#[derive(Debug, Clone)]
pub struct JointSpace {
    spaces: Vec<ActionSpace>,
}

impl JointSpace {
    pub fn new(spaces: Vec<ActionSpace>) -> Result<Self, SpaceError> {
        if spaces.is_empty() {
            return Err(SpaceError::Empty);
        }
        Ok(Self { spaces })
    }

    pub fn num_agents(&self) -> usize {
        self.spaces.len()
    }

    pub fn agent_space(&self, agent: usize) -> &ActionSpace {
        &self.spaces[agent]
    }

    pub fn spaces(&self) -> &[ActionSpace] {
        &self.spaces
    }

    /// Total joint dimension `sum_i d_i`.
    pub fn joint_dim(&self) -> usize {
        self.spaces.iter().map(|s| s.dim()).sum()
    }

    /// Number of joint actions `prod_i |X_i|`.
    pub fn len(&self) -> usize {
        self.spaces.iter().map(|s| s.size()).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn flat_index(&self, indices: &[usize]) -> usize {
        debug_assert_eq!(indices.len(), self.spaces.len());
        let mut flat = 0;
        for (space, &i) in self.spaces.iter().zip(indices) {
            debug_assert!(i < space.size());
            flat = flat * space.size() + i;
        }
        flat
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut indices = vec![0; self.spaces.len()];
        for (slot, space) in indices.iter_mut().zip(&self.spaces).rev() {
            *slot = flat % space.size();
            flat /= space.size();
        }
        indices
    }

    /// Concatenated coordinates of the joint action at `indices`.
    pub fn joint_point(&self, indices: &[usize]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.joint_dim());
        for (space, &i) in self.spaces.iter().zip(indices) {
            z.extend_from_slice(space.point(i));
        }
        z
    }

    pub fn joint_point_flat(&self, flat: usize) -> Vec<f64> {
        self.joint_point(&self.multi_index(flat))
    }
}

/// Concatenates one agent's candidate point with the fixed coordinate
/// blocks of all other agents (given in agent order, own slot skipped)
/// into a joint point.
pub fn assemble_joint(own_position: usize, own: &[f64], others: &[&[f64]], out: &mut Vec<f64>) {
    out.clear();
    for block in &others[..own_position] {
        out.extend_from_slice(block);
    }
    out.extend_from_slice(own);
    for block in &others[own_position..] {
        out.extend_from_slice(block);
    }
}

use crate::error::{Error, Result};

/// `n` observations `(xᵢ, yᵢ)` with `xᵢ ∈ ℝᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        let dim = x.first().map_or(0, Vec::len);
        if let Some(row) = x.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: row.len(),
            });
        }
        if x.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("data contains non-finite values".into()));
        }
        Ok(Dataset { x, y, dim })
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            dim: self.dim,
        }
    }

    pub fn mean_y(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(self.y.iter().sum::<f64>() / self.len() as f64)
    }

    /// Inputs clamped into `[-h, h]^d`, plus how many rows were moved.
    pub fn clamped_inputs(&self, h: f64) -> (Vec<Vec<f64>>, usize) {
        let mut moved = 0;
        let x = self
            .x
            .iter()
            .map(|row| {
                if row.iter().any(|v| v.abs() > h) {
                    moved += 1;
                }
                row.iter().map(|v| v.clamp(-h, h)).collect()
            })
            .collect();
        (x, moved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shapes() {
        assert!(Dataset::new(vec![vec![1.0], vec![2.0]], vec![1.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![2.0, 3.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
        let d = Dataset::new(vec![vec![1.0, 2.0], vec![-3.0, 0.5]], vec![1.0, 3.0]).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.mean_y().unwrap(), 2.0);
        assert_eq!(d.subset(&[1]).y(), &[3.0]);
        let (c, moved) = d.clamped_inputs(1.0);
        assert_eq!(moved, 2);
        assert_eq!(c[1], vec![-1.0, 0.5]);
    }
}

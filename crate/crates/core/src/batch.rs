//! Row-at-a-time evaluation of a whole feature list.
//!
//! When every feature shares one parameter set and one layout (the case for
//! any enumeration), the identity and hat leaves of a row are computed once
//! and reused across features. The product trees are then reduced with the
//! same gate as [`eval_feature`], so results are bitwise identical to
//! evaluating each feature on its own.

use crate::error::{Error, Result};
use crate::features::{dot, eval_feature, grid_point, reduce_tree, FeatureDescriptor, GridAnchor};
use crate::netblocks::NetBlocks;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum Plan<T> {
    /// Per-feature evaluation, for mixed lists.
    Generic,
    Cube {
        blocks: NetBlocks<T>,
        /// Grid coordinates, shared by every axis.
        grid: Vec<T>,
        /// `(multi-index, anchor index)` per feature.
        items: Vec<(Vec<u32>, Vec<usize>)>,
    },
    Projection {
        blocks: NetBlocks<T>,
        directions: Vec<Vec<T>>,
        positions: Vec<T>,
        /// `(multi-index, direction slot, anchor index)` per feature.
        items: Vec<(Vec<u32>, usize, usize)>,
    },
}

/// Evaluator for an ordered feature list.
#[derive(Debug, Clone)]
pub struct FeatureBatch<T> {
    features: Vec<FeatureDescriptor<T>>,
    dim: usize,
    leaf_count: usize,
    plan: Plan<T>,
}

impl<T: Scalar> FeatureBatch<T> {
    pub fn new(features: Vec<FeatureDescriptor<T>>) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::Parameter("feature list is empty".into()))?;
        let dim = first.dim();
        if let Some(f) = features.iter().find(|f| f.dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: f.dim(),
            });
        }
        let leaf_count = features.iter().map(|f| f.leaf_count()).max().unwrap_or(1);
        let plan = plan_for(&features).unwrap_or(Plan::Generic);
        Ok(FeatureBatch {
            features,
            dim,
            leaf_count,
            plan,
        })
    }

    pub fn features(&self) -> &[FeatureDescriptor<T>] {
        &self.features
    }

    pub fn into_features(self) -> Vec<FeatureDescriptor<T>> {
        self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes feature `j` evaluated at `x` into `out[j]`.
    pub fn eval_row(&self, x: &[T], out: &mut [T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if out.len() != self.features.len() {
            return Err(Error::Dimension {
                expected: self.features.len(),
                got: out.len(),
            });
        }
        let mut leaves = Vec::with_capacity(self.leaf_count);
        match &self.plan {
            Plan::Generic => {
                for (o, f) in out.iter_mut().zip(&self.features) {
                    *o = eval_feature(x, f)?;
                }
            }
            Plan::Cube {
                blocks,
                grid,
                items,
            } => {
                let g = grid.len();
                let mut ids = Vec::with_capacity(self.dim * g);
                let mut hats = Vec::with_capacity(self.dim * g);
                for &xl in x {
                    for &p in grid {
                        ids.push(blocks.id(blocks.id(xl - p)));
                        hats.push(blocks.hat(xl, p));
                    }
                }
                for (o, (mi, index)) in out.iter_mut().zip(items) {
                    leaves.clear();
                    for (l, (&j, &i)) in mi.iter().zip(index).enumerate() {
                        let v = ids[l * g + i];
                        leaves.extend(std::iter::repeat_n(v, j as usize));
                    }
                    for (l, &i) in index.iter().enumerate() {
                        leaves.push(hats[l * g + i]);
                    }
                    leaves.resize(self.leaf_count, T::one());
                    *o = reduce_tree(blocks, &mut leaves);
                }
            }
            Plan::Projection {
                blocks,
                directions,
                positions,
                items,
            } => {
                let ids: Vec<T> = x.iter().map(|&xl| blocks.id(blocks.id(xl))).collect();
                let g = positions.len();
                let mut hats = Vec::with_capacity(directions.len() * g);
                for b in directions {
                    let z = dot(b, x);
                    hats.extend(positions.iter().map(|&u| blocks.hat(z, u)));
                }
                for (o, (mi, slot, i)) in out.iter_mut().zip(items) {
                    leaves.clear();
                    for (&j, &v) in mi.iter().zip(&ids) {
                        leaves.extend(std::iter::repeat_n(v, j as usize));
                    }
                    leaves.push(hats[slot * g + i]);
                    leaves.resize(self.leaf_count, T::one());
                    *o = reduce_tree(blocks, &mut leaves);
                }
            }
        }
        Ok(())
    }

    /// Convenience wrapper returning a fresh vector.
    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.features.len()];
        self.eval_row(x, &mut out)?;
        Ok(out)
    }
}

// Returns a shared-leaf plan when all features agree on parameters, depth and
// layout and their anchors sit exactly on the enumeration grid.
fn plan_for<T: Scalar>(features: &[FeatureDescriptor<T>]) -> Option<Plan<T>> {
    let first = &features[0];
    let params = first.params;
    if features
        .iter()
        .any(|f| f.params != params || f.depth != first.depth || f.kind() != first.kind())
    {
        return None;
    }
    let m = params.resolution;
    let blocks = NetBlocks::new(params);
    match &first.anchor {
        GridAnchor::Cube { .. } => {
            let grid: Vec<T> = (0..=m)
                .map(|i| grid_point(i, params.half_width, m))
                .collect();
            let mut items = Vec::with_capacity(features.len());
            for f in features {
                let GridAnchor::Cube { index, point } = &f.anchor else {
                    return None;
                };
                let on_grid = index
                    .iter()
                    .zip(point)
                    .all(|(&i, &p)| i <= m && grid[i] == p);
                if !on_grid {
                    return None;
                }
                items.push((f.multi_index.entries().to_vec(), index.clone()));
            }
            Some(Plan::Cube {
                blocks,
                grid,
                items,
            })
        }
        GridAnchor::Line { .. } => {
            let positions: Vec<T> = (0..=m)
                .map(|i| grid_point(i, params.half_width, m))
                .collect();
            let mut directions: Vec<Vec<T>> = Vec::new();
            let mut slots: Vec<usize> = Vec::new();
            let mut items = Vec::with_capacity(features.len());
            for f in features {
                let (GridAnchor::Line { index, position }, Some((key, b))) =
                    (&f.anchor, &f.direction)
                else {
                    return None;
                };
                if *index > m || positions[*index] != *position {
                    return None;
                }
                let slot = match slots.iter().position(|k| k == key) {
                    Some(s) if directions[s] == *b => s,
                    Some(_) => return None,
                    None => {
                        slots.push(*key);
                        directions.push(b.clone());
                        directions.len() - 1
                    }
                };
                items.push((f.multi_index.entries().to_vec(), slot, *index));
            }
            Some(Plan::Projection {
                blocks,
                directions,
                positions,
                items,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{enumerate_features_cube, enumerate_features_pp};

    fn probe_points(d: usize) -> Vec<Vec<f64>> {
        (0..17)
            .map(|k| {
                (0..d)
                    .map(|l| ((k * 7 + l * 3) % 17) as f64 / 8.0 - 1.0)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn cube_batch_is_bitwise_identical() {
        let feats = enumerate_features_cube(2, 2, 3, 1.0f64, 1e5).unwrap();
        let batch = FeatureBatch::new(feats.clone()).unwrap();
        assert!(matches!(batch.plan, Plan::Cube { .. }));
        for x in probe_points(2) {
            let got = batch.eval(&x).unwrap();
            for (g, f) in got.iter().zip(&feats) {
                assert_eq!(g.to_bits(), eval_feature(&x, f).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn projection_batch_is_bitwise_identical() {
        let dirs = vec![vec![0.3, -0.9, 0.2], vec![-0.5, 0.1, 0.7]];
        let feats = enumerate_features_pp(3, 2, 4, 1.0f64, 1e6, &dirs).unwrap();
        let batch = FeatureBatch::new(feats.clone()).unwrap();
        assert!(matches!(batch.plan, Plan::Projection { .. }));
        for x in probe_points(3) {
            let got = batch.eval(&x).unwrap();
            for (g, f) in got.iter().zip(&feats) {
                assert_eq!(g.to_bits(), eval_feature(&x, f).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn mixed_lists_fall_back() {
        let mut feats = enumerate_features_cube(2, 1, 2, 1.0f64, 1e4).unwrap();
        feats.extend(enumerate_features_cube(2, 1, 2, 1.0f64, 1e5).unwrap());
        let batch = FeatureBatch::new(feats.clone()).unwrap();
        assert!(matches!(batch.plan, Plan::Generic));
        let x = [0.2, -0.4];
        let got = batch.eval(&x).unwrap();
        for (g, f) in got.iter().zip(&feats) {
            assert_eq!(*g, eval_feature(&x, f).unwrap());
        }
        assert!(batch.eval(&[0.1]).is_err());
        assert!(FeatureBatch::<f64>::new(Vec::new()).is_err());
    }
}

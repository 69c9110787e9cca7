use rand::Rng;

use super::init::glorot_uniform;
use crate::error::{Error, Result};
use crate::tensor::{Graph, ParamId, ParamStore, Tensor, Var};

/// Square map `H ↦ W·H + b ⊗ 1ᵀ`.
#[derive(Clone, Debug)]
pub struct AffineParams {
    pub w: ParamId,
    pub b: ParamId,
    pub dim: usize,
}

impl AffineParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w = glorot_uniform(&[dim, dim], dim, dim, rng);
        Self::register(store, prefix, w, Tensor::zeros(&[dim]))
    }

    pub fn register(store: &mut ParamStore, prefix: &str, w: Tensor, b: Tensor) -> Result<Self> {
        let dim = match w.dims2() {
            Some((r, c)) if r == c && b.shape() == [r] => r,
            _ => return Err(Error::dim("affine", w.shape(), b.shape())),
        };
        Ok(AffineParams {
            w: store.add(format!("{prefix}.W"), w)?,
            b: store.add(format!("{prefix}.b"), b)?,
            dim,
        })
    }

    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let w = store
            .id(&format!("{prefix}.W"))
            .ok_or_else(|| Error::Format(format!("missing parameter {prefix}.W")))?;
        let b = store
            .id(&format!("{prefix}.b"))
            .ok_or_else(|| Error::Format(format!("missing parameter {prefix}.b")))?;
        let dim = match store.get(w).dims2() {
            Some((r, c)) if r == c && store.get(b).shape() == [r] => r,
            _ => {
                return Err(Error::Format(format!(
                    "inconsistent affine shapes under {prefix}"
                )))
            }
        };
        Ok(AffineParams { w, b, dim })
    }
}

pub fn affine_map(g: &mut Graph, params: &AffineParams, h: Var) -> Result<Var> {
    let w = g.param(params.w);
    let b = g.param(params.b);
    let wh = g.matmul(w, h)?;
    g.add_column_bias(wh, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(w: Tensor, b: Tensor, h: Tensor) -> Tensor {
        let mut store = ParamStore::new();
        let p = AffineParams::register(&mut store, "a", w, b).unwrap();
        let mut g = Graph::new(&store);
        let hv = g.constant(h);
        let out = affine_map(&mut g, &p, hv).unwrap();
        g.value(out).clone()
    }

    #[test]
    fn identity_and_bias_only() {
        let h = Tensor::matrix(&[&[1.0, -2.0, 3.0], &[0.5, 0.25, -1.0]]);
        assert_eq!(
            apply(Tensor::identity(2), Tensor::zeros(&[2]), h.clone()),
            h
        );
        let ones = apply(Tensor::zeros(&[2, 2]), Tensor::vector(&[1.0, 1.0]), h);
        assert!(ones.data().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn single_column_is_matvec_plus_bias() {
        let w = Tensor::matrix(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let out = apply(
            w,
            Tensor::vector(&[0.5, -0.5]),
            Tensor::matrix(&[&[1.0], &[1.0]]),
        );
        assert_eq!(out.data(), &[3.5, 6.5]);
    }

    #[test]
    fn rejects_non_square() {
        let mut store = ParamStore::new();
        assert!(AffineParams::register(
            &mut store,
            "a",
            Tensor::zeros(&[2, 3]),
            Tensor::zeros(&[2])
        )
        .is_err());
        let p =
            AffineParams::register(&mut store, "b", Tensor::zeros(&[2, 2]), Tensor::zeros(&[2]))
                .unwrap();
        let mut g = Graph::new(&store);
        let h = g.constant(Tensor::zeros(&[3, 1]));
        assert!(affine_map(&mut g, &p, h).is_err());
    }
}

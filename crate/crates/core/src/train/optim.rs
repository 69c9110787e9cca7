use crate::error::{Error, Result};
use crate::tensor::{Gradients, ParamStore};

use super::TrainConfig;

/// Adamax moments: first moment `m`, infinity-norm accumulator `u`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamaxState {
    pub m: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamaxState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
        AdamaxState {
            m: zeros.clone(),
            u: zeros,
            t: 0,
        }
    }
}

/// One Adamax update over every parameter. Parameters absent from `grads`
/// see a zero gradient. The whole step is rejected before any write if a
/// gradient is not finite.
pub fn adamax_step(
    state: &mut AdamaxState,
    store: &mut ParamStore,
    grads: &Gradients,
    cfg: &TrainConfig,
) -> Result<()> {
    if state.m.len() != store.len() {
        *state = AdamaxState::new(store);
    }
    for (id, g) in grads.iter() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(store.name(id).to_string()));
        }
    }
    state.t += 1;
    let step = cfg.lr / (1.0 - cfg.beta1.powi(state.t as i32));
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let k = id.index();
        let g = grads.param(id);
        let (m, u) = (&mut state.m[k], &mut state.u[k]);
        let theta = store.get_mut(id).data_mut();
        for c in 0..theta.len() {
            let gc = g.map_or(0.0, |g| g[c]);
            m[c] = cfg.beta1 * m[c] + (1.0 - cfg.beta1) * gc;
            u[c] = (cfg.beta2 * u[c]).max(gc.abs());
            theta[c] -= step * m[c] / (u[c] + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Graph, Tensor};

    fn one_param(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.add("theta", Tensor::vector(&[v])).unwrap();
        s
    }

    /// Gradient `g` on `theta` through `sum(g * theta)`.
    fn grads_for(store: &ParamStore, g: f64) -> Gradients {
        let mut graph = Graph::new(store);
        let p = graph.param(store.id("theta").unwrap());
        let c = graph.constant(Tensor::vector(&[g]));
        let l = graph.dot(p, c).unwrap();
        graph.backward(l).unwrap()
    }

    #[test]
    fn first_step_by_hand() {
        let mut s = one_param(1.0);
        let mut st = AdamaxState::new(&s);
        let gr = grads_for(&s, 1.0);
        adamax_step(&mut st, &mut s, &gr, &TrainConfig::default()).unwrap();
        assert!((st.m[0][0] - 0.1).abs() < 1e-15);
        assert_eq!(st.u[0][0], 1.0);
        assert!((s.get(s.id("theta").unwrap()).data()[0] - 0.998).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = one_param(0.3);
        let mut st = AdamaxState::new(&s);
        let gr = grads_for(&s, 0.0);
        adamax_step(&mut st, &mut s, &gr, &TrainConfig::default()).unwrap();
        assert_eq!(s.get(s.id("theta").unwrap()).data()[0], 0.3);
    }

    #[test]
    fn repeated_gradient_keeps_u_at_its_magnitude() {
        let mut s = one_param(0.0);
        let mut st = AdamaxState::new(&s);
        for _ in 0..2 {
            let gr = grads_for(&s, -2.0);
            adamax_step(&mut st, &mut s, &gr, &TrainConfig::default()).unwrap();
        }
        assert_eq!(st.u[0][0], 2.0);
        assert_eq!(st.t, 2);
    }

    #[test]
    fn nan_gradient_names_the_parameter() {
        let mut s = one_param(1.0);
        let mut st = AdamaxState::new(&s);
        let gr = grads_for(&s, f64::NAN);
        match adamax_step(&mut st, &mut s, &gr, &TrainConfig::default()) {
            Err(Error::NonFinite(name)) => assert_eq!(name, "theta"),
            other => panic!("{other:?}"),
        }
        assert_eq!(st.t, 0);
        assert_eq!(s.get(s.id("theta").unwrap()).data()[0], 1.0);
    }
}

use rand::Rng;

use super::init::glorot_uniform;
use crate::error::{Error, Result};
use crate::tensor::{Graph, ParamId, ParamStore, Tensor, Var};

/// Weights of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, cell, output.
#[derive(Clone, Debug)]
pub struct LstmParams {
    /// `4h × d`
    pub u: ParamId,
    /// `4h × h`
    pub w: ParamId,
    /// `4h`
    pub b: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl LstmParams {
    /// Glorot-uniform `U`, `W`; zero bias except the forget block, set to 1.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Config("LSTM dimensions must be positive".into()));
        }
        let u = glorot_uniform(&[4 * hidden, input_dim], input_dim, 4 * hidden, rng);
        let w = glorot_uniform(&[4 * hidden, hidden], hidden, 4 * hidden, rng);
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(1.0);
        Self::register(store, prefix, u, w, b)
    }

    pub fn zeros(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
    ) -> Result<Self> {
        Self::register(
            store,
            prefix,
            Tensor::zeros(&[4 * hidden, input_dim]),
            Tensor::zeros(&[4 * hidden, hidden]),
            Tensor::zeros(&[4 * hidden]),
        )
    }

    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        u: Tensor,
        w: Tensor,
        b: Tensor,
    ) -> Result<Self> {
        let (rows, input_dim) = u
            .dims2()
            .ok_or_else(|| Error::dim("lstm", u.shape(), w.shape()))?;
        if rows % 4 != 0 || w.shape() != [rows, rows / 4] || b.shape() != [rows] {
            return Err(Error::dim("lstm", u.shape(), w.shape()));
        }
        Ok(LstmParams {
            u: store.add(format!("{prefix}.U"), u)?,
            w: store.add(format!("{prefix}.W"), w)?,
            b: store.add(format!("{prefix}.b"), b)?,
            input_dim,
            hidden: rows / 4,
        })
    }

    /// Re-binds parameters saved under `prefix`.
    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |suffix: &str| {
            store
                .id(&format!("{prefix}.{suffix}"))
                .ok_or_else(|| Error::Format(format!("missing parameter {prefix}.{suffix}")))
        };
        let (u, w, b) = (get("U")?, get("W")?, get("b")?);
        let (rows, input_dim) = store
            .get(u)
            .dims2()
            .ok_or_else(|| Error::Format(format!("{prefix}.U is not a matrix")))?;
        let hidden = rows / 4;
        if rows % 4 != 0 || store.get(w).shape() != [rows, hidden] || store.get(b).shape() != [rows]
        {
            return Err(Error::Format(format!(
                "inconsistent LSTM shapes under {prefix}"
            )));
        }
        Ok(LstmParams {
            u,
            w,
            b,
            input_dim,
            hidden,
        })
    }
}

/// Runs one direction over the columns of `inputs` (`d × T`) from a zero
/// state. Output column `t` is the state at original position `t` in
/// either direction.
pub fn lstm_forward(
    g: &mut Graph,
    params: &LstmParams,
    inputs: Var,
    direction: Direction,
) -> Result<Var> {
    let shape = g.shape(inputs).to_vec();
    let steps = match shape[..] {
        [d, t] if d == params.input_dim => t,
        _ => return Err(Error::dim("lstm_forward", &[params.input_dim], &shape)),
    };
    let h = params.hidden;
    let u = g.param(params.u);
    let w = g.param(params.w);
    let b = g.param(params.b);
    let projected = g.matmul(u, inputs)?;
    let pre = g.add_column_bias(projected, b)?;

    let order: Vec<usize> = match direction {
        Direction::Forward => (0..steps).collect(),
        Direction::Backward => (0..steps).rev().collect(),
    };
    let mut states = vec![None; steps];
    let mut prev: Option<(Var, Var)> = None;
    for t in order {
        let mut z = g.slice(pre, 1, t, t + 1)?;
        if let Some((h_prev, _)) = prev {
            let rec = g.matmul(w, h_prev)?;
            z = g.add(z, rec)?;
        }
        let zi = g.slice(z, 0, 0, h)?;
        let zf = g.slice(z, 0, h, 2 * h)?;
        let zg = g.slice(z, 0, 2 * h, 3 * h)?;
        let zo = g.slice(z, 0, 3 * h, 4 * h)?;
        let i = g.sigmoid(zi);
        let cand = g.tanh(zg);
        let o = g.sigmoid(zo);
        let ig = g.mul(i, cand)?;
        let c = match prev {
            Some((_, c_prev)) => {
                let f = g.sigmoid(zf);
                let kept = g.mul(f, c_prev)?;
                g.add(kept, ig)?
            }
            None => ig,
        };
        let tc = g.tanh(c);
        let h_t = g.mul(o, tc)?;
        states[t] = Some(h_t);
        prev = Some((h_t, c));
    }
    let cols: Vec<Var> = states
        .into_iter()
        .map(|s| s.expect("every step visited"))
        .collect();
    g.concat(&cols, 1)
}

/// Forward and backward directions over the same input.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstm {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(BiLstm {
            fwd: LstmParams::init(store, &format!("{prefix}.fwd"), input_dim, hidden, rng)?,
            bwd: LstmParams::init(store, &format!("{prefix}.bwd"), input_dim, hidden, rng)?,
        })
    }

    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        Ok(BiLstm {
            fwd: LstmParams::from_store(store, &format!("{prefix}.fwd"))?,
            bwd: LstmParams::from_store(store, &format!("{prefix}.bwd"))?,
        })
    }

    /// Output width `l = 2h`.
    pub fn output_dim(&self) -> usize {
        self.fwd.hidden + self.bwd.hidden
    }
}

/// `2h × T`: column `t` stacks the forward state over the backward state.
pub fn bilstm_forward(g: &mut Graph, params: &BiLstm, inputs: Var) -> Result<Var> {
    if params.fwd.hidden != params.bwd.hidden || params.fwd.input_dim != params.bwd.input_dim {
        return Err(Error::Config(format!(
            "bi-LSTM directions disagree: hidden {} vs {}, input {} vs {}",
            params.fwd.hidden, params.bwd.hidden, params.fwd.input_dim, params.bwd.input_dim
        )));
    }
    let f = lstm_forward(g, &params.fwd, inputs, Direction::Forward)?;
    let b = lstm_forward(g, &params.bwd, inputs, Direction::Backward)?;
    g.concat(&[f, b], 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sigmoid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(store: &ParamStore, p: &LstmParams, x: &Tensor, dir: Direction) -> Tensor {
        let mut g = Graph::new(store);
        let xv = g.constant(x.clone());
        let h = lstm_forward(&mut g, p, xv, dir).unwrap();
        g.value(h).clone()
    }

    fn random_input(d: usize, t: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::new(
            vec![d, t],
            (0..d * t).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_params_give_zero_states() {
        let mut store = ParamStore::new();
        let p = LstmParams::zeros(&mut store, "l", 3, 4).unwrap();
        let out = run(&store, &p, &random_input(3, 5, 1), Direction::Forward);
        assert_eq!(out.shape(), &[4, 5]);
        assert!(out.data().iter().all(|v| *v == 0.0));
    }

    /// Scalar recurrence unrolled by hand.
    #[test]
    fn matches_hand_unrolled_recurrence() {
        let (ui, uf, ug, uo) = (0.5, -0.3, 0.8, 0.2);
        let (wi, wf, wg, wo) = (0.1, 0.4, -0.6, 0.9);
        let (bi, bf, bg, bo) = (0.05, 1.0, -0.1, 0.0);
        let xs = [0.7, -1.2];

        let mut store = ParamStore::new();
        let p = LstmParams::register(
            &mut store,
            "l",
            Tensor::new(vec![4, 1], vec![ui, uf, ug, uo]).unwrap(),
            Tensor::new(vec![4, 1], vec![wi, wf, wg, wo]).unwrap(),
            Tensor::vector(&[bi, bf, bg, bo]),
        )
        .unwrap();
        let out = run(
            &store,
            &p,
            &Tensor::new(vec![1, 2], xs.to_vec()).unwrap(),
            Direction::Forward,
        );

        let (mut h, mut c) = (0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for x in xs {
            let i = sigmoid(ui * x + wi * h + bi);
            let f = sigmoid(uf * x + wf * h + bf);
            let gg = (ug * x + wg * h + bg).tanh();
            let o = sigmoid(uo * x + wo * h + bo);
            c = f * c + i * gg;
            h = o * c.tanh();
            expected.push(h);
        }
        for (a, e) in out.data().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-15, "{a} vs {e}");
        }
    }

    #[test]
    fn backward_direction_is_reversed_forward() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = LstmParams::init(&mut store, "l", 3, 4, &mut rng).unwrap();
        let x = random_input(3, 6, 9);
        let mut rev = Tensor::zeros(&[3, 6]);
        for r in 0..3 {
            for t in 0..6 {
                rev.data_mut()[r * 6 + t] = x.at(r, 5 - t);
            }
        }
        let fwd = run(&store, &p, &x, Direction::Forward);
        let bwd_rev = run(&store, &p, &rev, Direction::Backward);
        for r in 0..4 {
            for t in 0..6 {
                assert_eq!(bwd_rev.at(r, t), fwd.at(r, 5 - t));
            }
        }
    }

    #[test]
    fn bilstm_shapes_and_degenerate_length() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bi = BiLstm::init(&mut store, "enc", 2, 3, &mut rng).unwrap();
        assert_eq!(bi.output_dim(), 6);
        let x = random_input(2, 1, 2);
        let mut g = Graph::new(&store);
        let xv = g.constant(x.clone());
        let out = bilstm_forward(&mut g, &bi, xv).unwrap();
        let out = g.value(out).clone();
        let f = run(&store, &bi.fwd, &x, Direction::Forward);
        let b = run(&store, &bi.bwd, &x, Direction::Forward);
        assert_eq!(out.column(0), [f.column(0), b.column(0)].concat());
    }

    #[test]
    fn bilstm_zero_and_width() {
        let mut store = ParamStore::new();
        let bi = BiLstm {
            fwd: LstmParams::zeros(&mut store, "f", 300, 300).unwrap(),
            bwd: LstmParams::zeros(&mut store, "b", 300, 300).unwrap(),
        };
        assert_eq!(bi.output_dim(), 600);
        let mut g = Graph::new(&store);
        let xv = g.constant(Tensor::filled(&[300, 2], 0.3));
        let out = bilstm_forward(&mut g, &bi, xv).unwrap();
        assert_eq!(g.shape(out), &[600, 2]);
        assert!(g.value(out).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bilstm_rejects_mismatched_directions() {
        let mut store = ParamStore::new();
        let bi = BiLstm {
            fwd: LstmParams::zeros(&mut store, "f", 2, 3).unwrap(),
            bwd: LstmParams::zeros(&mut store, "b", 2, 4).unwrap(),
        };
        let mut g = Graph::new(&store);
        let xv = g.constant(Tensor::zeros(&[2, 2]));
        assert!(matches!(
            bilstm_forward(&mut g, &bi, xv),
            Err(Error::Config(_))
        ));
    }
}

use crate::numerics::{Graph, NumericsError, ParamId, Tensor, Var};
use crate::scalar::Scalar;

/// Weights of one LSTM direction. Gate columns are ordered input, forget,
/// candidate, output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmIds {
    /// `[input_dim, 4 * hidden]`
    pub w_input: ParamId,
    /// `[hidden, 4 * hidden]`
    pub w_hidden: ParamId,
    /// `[1, 4 * hidden]`
    pub bias: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BiLstmIds {
    pub forward: LstmIds,
    pub backward: LstmIds,
}

/// Runs one direction over the rows of `inputs` (`[m, input_dim]`) from a
/// zero state. Returns the hidden state for every position, in position
/// order regardless of direction.
pub fn run_lstm<T: Scalar>(
    g: &mut Graph<'_, T>,
    ids: &LstmIds,
    inputs: Var,
    hidden: usize,
    reverse: bool,
) -> Result<Vec<Var>, NumericsError> {
    let m = g.shape(inputs)[0];
    let w_input = g.param(ids.w_input);
    let w_hidden = g.param(ids.w_hidden);
    let bias = g.param(ids.bias);

    let projected = g.matmul(inputs, w_input)?;
    let projected = g.add_bias(projected, bias)?;

    let mut h = g.constant(Tensor::zeros(vec![1, hidden]))?;
    let mut c = g.constant(Tensor::zeros(vec![1, hidden]))?;
    let mut outputs = vec![h; m];

    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..m).rev())
    } else {
        Box::new(0..m)
    };
    for t in order {
        let x_t = g.gather_rows(projected, &[t])?;
        let recurrent = g.matmul(h, w_hidden)?;
        let z = g.add(x_t, recurrent)?;

        let i = g.slice_cols(z, 0, hidden)?;
        let i = g.sigmoid(i)?;
        let f = g.slice_cols(z, hidden, 2 * hidden)?;
        let f = g.sigmoid(f)?;
        let cand = g.slice_cols(z, 2 * hidden, 3 * hidden)?;
        let cand = g.tanh(cand)?;
        let o = g.slice_cols(z, 3 * hidden, 4 * hidden)?;
        let o = g.sigmoid(o)?;

        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        c = g.add(keep, write)?;
        let squashed = g.tanh(c)?;
        h = g.mul(o, squashed)?;
        outputs[t] = h;
    }
    Ok(outputs)
}

/// `[m, 2 * hidden]`: forward state ⊕ backward state per position.
pub fn run_bilstm<T: Scalar>(
    g: &mut Graph<'_, T>,
    ids: &BiLstmIds,
    inputs: Var,
    hidden: usize,
) -> Result<Var, NumericsError> {
    let fwd = run_lstm(g, &ids.forward, inputs, hidden, false)?;
    let bwd = run_lstm(g, &ids.backward, inputs, hidden, true)?;
    let fwd = g.concat_rows(&fwd)?;
    let bwd = g.concat_rows(&bwd)?;
    g.concat_cols(&[fwd, bwd])
}

/// `[1, 2 * hidden]`: final forward state ⊕ final backward state.
pub fn bilstm_final_states<T: Scalar>(
    g: &mut Graph<'_, T>,
    ids: &BiLstmIds,
    inputs: Var,
    hidden: usize,
) -> Result<Var, NumericsError> {
    let fwd = run_lstm(g, &ids.forward, inputs, hidden, false)?;
    let bwd = run_lstm(g, &ids.backward, inputs, hidden, true)?;
    let last = *fwd.last().expect("at least one position");
    g.concat_cols(&[last, bwd[0]])
}

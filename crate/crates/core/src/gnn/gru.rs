use crate::tensor::{Result, Tensor};

use super::{ParamId, ParamStore};

/// GRU weights with the three gates fused along the output axis in the
/// order update, reset, candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruParams {
    /// `[input, 3·state]`
    pub w: ParamId,
    /// `[state, 2·state]`, update and reset.
    pub u_gates: ParamId,
    /// `[state, state]`, candidate.
    pub u_cand: ParamId,
    /// `[3·state]`
    pub bias: ParamId,
    pub state: usize,
}

impl GruParams {
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, state: usize) -> Self {
        GruParams {
            w: store.glorot(&format!("{prefix}.w"), [input, 3 * state]),
            u_gates: store.glorot(&format!("{prefix}.u_gates"), [state, 2 * state]),
            u_cand: store.glorot(&format!("{prefix}.u_cand"), [state, state]),
            bias: store.zeros(&format!("{prefix}.bias"), &[3 * state]),
            state,
        }
    }
}

/// Standard GRU update over the last axis:
/// `u = σ(x Wu + s Uu + bu)`, `r = σ(x Wr + s Ur + br)`,
/// `c = tanh(x Wc + (r ⊙ s) Uc + bc)`, `out = (1 - u) ⊙ s + u ⊙ c`.
pub fn gru_cell(state: &Tensor, input: &Tensor, p: &GruParams, params: &[Tensor]) -> Result<Tensor> {
    let d = p.state;
    let x = input.matmul(&params[p.w])?.add_bias(&params[p.bias])?;
    let s = state.matmul(&params[p.u_gates])?;
    let u = x.slice(0, d)?.add(&s.slice(0, d)?)?.sigmoid();
    let r = x.slice(d, d)?.add(&s.slice(d, d)?)?.sigmoid();
    let c = x
        .slice(2 * d, d)?
        .add(&r.mul(state)?.matmul(&params[p.u_cand])?)?
        .tanh();
    u.one_minus().mul(state)?.add(&u.mul(&c)?)
}

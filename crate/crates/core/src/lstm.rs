//! LSTM cell without peepholes.
//!
//! Gate pre-activations for a batch are computed in one product,
//! `z = x W + h U + b`, with the four gate blocks laid out along the columns
//! in the order input, forget, output, candidate.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::sigmoid;
use crate::dense::glorot;
use crate::error::{Error, Result};
use crate::tensor::{gemm, Tensor2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    input_dim: usize,
    hidden_dim: usize,
    /// `input_dim x 4H`.
    w: Tensor2D,
    /// `H x 4H`.
    u: Tensor2D,
    /// `4H`.
    b: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w: Tensor2D::zeros(input_dim, 4 * hidden_dim),
            u: Tensor2D::zeros(hidden_dim, 4 * hidden_dim),
            b: vec![0.0; 4 * hidden_dim],
        }
    }

    /// Glorot-uniform weights per gate, forget-gate bias `forget_bias`, all
    /// other biases zero.
    pub fn glorot(
        input_dim: usize,
        hidden_dim: usize,
        forget_bias: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = glorot(input_dim, 4 * hidden_dim, input_dim, hidden_dim, rng);
        let u = glorot(hidden_dim, 4 * hidden_dim, hidden_dim, hidden_dim, rng);
        let mut b = vec![0.0; 4 * hidden_dim];
        b[hidden_dim..2 * hidden_dim].fill(forget_bias);
        Self {
            input_dim,
            hidden_dim,
            w,
            u,
            b,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn w(&self) -> &Tensor2D {
        &self.w
    }

    pub fn u(&self) -> &Tensor2D {
        &self.u
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Input weights of one gate, `input_dim x H`.
    pub fn gate_w(&self, gate: Gate) -> Tensor2D {
        self.w
            .column_block(gate as usize * self.hidden_dim, self.hidden_dim)
    }

    /// Recurrent weights of one gate, `H x H`.
    pub fn gate_u(&self, gate: Gate) -> Tensor2D {
        self.u
            .column_block(gate as usize * self.hidden_dim, self.hidden_dim)
    }

    pub fn gate_b(&self, gate: Gate) -> &[f64] {
        let h = self.hidden_dim;
        &self.b[gate as usize * h..(gate as usize + 1) * h]
    }

    pub fn gate_b_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.hidden_dim;
        &mut self.b[gate as usize * h..(gate as usize + 1) * h]
    }

    pub(crate) fn params(&self) -> [&[f64]; 3] {
        [self.w.data(), self.u.data(), &self.b]
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [f64]; 3] {
        [self.w.data_mut(), self.u.data_mut(), &mut self.b]
    }

    /// `x W + b` for a `B x input_dim` batch.
    pub(crate) fn input_projection(&self, x: &Tensor2D) -> Result<Tensor2D> {
        if x.cols() != self.input_dim {
            return Err(Error::shape(
                "lstm input",
                x.shape(),
                (x.rows(), self.input_dim),
            ));
        }
        let mut z = Tensor2D::zeros(x.rows(), 4 * self.hidden_dim);
        gemm(1.0, x, false, &self.w, false, 0.0, &mut z)?;
        z.add_row_vector(&self.b)?;
        Ok(z)
    }

    /// One step for a batch given the input projection `zx = x W + b`.
    pub(crate) fn step_batch(
        &self,
        mut zx: Tensor2D,
        h_prev: &Tensor2D,
        c_prev: &Tensor2D,
    ) -> Result<StepCache> {
        let hd = self.hidden_dim;
        let rows = h_prev.rows();
        if h_prev.shape() != (rows, hd) || c_prev.shape() != (rows, hd) {
            return Err(Error::shape("lstm state", h_prev.shape(), c_prev.shape()));
        }
        if zx.shape() != (rows, 4 * hd) {
            return Err(Error::shape("lstm gates", zx.shape(), (rows, 4 * hd)));
        }
        gemm(1.0, h_prev, false, &self.u, false, 1.0, &mut zx)?;
        let mut c = Tensor2D::zeros(rows, hd);
        let mut tanh_c = Tensor2D::zeros(rows, hd);
        let mut h = Tensor2D::zeros(rows, hd);
        for r in 0..rows {
            let z = zx.row_mut(r);
            let cp = c_prev.row(r);
            let (ci, ti, hi) = (c.row_mut(r), tanh_c.row_mut(r), h.row_mut(r));
            for j in 0..hd {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[hd + j]);
                let o = sigmoid(z[2 * hd + j]);
                let g = z[3 * hd + j].tanh();
                z[j] = i;
                z[hd + j] = f;
                z[2 * hd + j] = o;
                z[3 * hd + j] = g;
                let cv = f * cp[j] + i * g;
                let tc = cv.tanh();
                ci[j] = cv;
                ti[j] = tc;
                hi[j] = o * tc;
            }
        }
        Ok(StepCache {
            gates: zx,
            c,
            tanh_c,
            h,
        })
    }
}

/// Everything one step needs to be differentiated later.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    /// Post-activation gates `[i | f | o | g]`, `B x 4H`.
    pub gates: Tensor2D,
    pub c: Tensor2D,
    pub tanh_c: Tensor2D,
    pub h: Tensor2D,
}

/// Backward through one step. Given `dh` and `dc` flowing into this step's
/// outputs, returns the gate pre-activation gradient `dz` (`B x 4H`) and the
/// gradient w.r.t. the previous cell state.
pub(crate) fn step_backward(
    cache: &StepCache,
    c_prev: &Tensor2D,
    dh: &Tensor2D,
    dc: &Tensor2D,
) -> (Tensor2D, Tensor2D) {
    let (rows, hd) = dh.shape();
    let mut dz = Tensor2D::zeros(rows, 4 * hd);
    let mut dc_prev = Tensor2D::zeros(rows, hd);
    for r in 0..rows {
        let gates = cache.gates.row(r);
        let tc = cache.tanh_c.row(r);
        let cp = c_prev.row(r);
        let (dhr, dcr) = (dh.row(r), dc.row(r));
        let dzr = dz.row_mut(r);
        let mut dcp = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, o, g) = (
                gates[j],
                gates[hd + j],
                gates[2 * hd + j],
                gates[3 * hd + j],
            );
            let d_o = dhr[j] * tc[j];
            let dcell = dcr[j] + dhr[j] * o * (1.0 - tc[j] * tc[j]);
            dzr[j] = dcell * g * i * (1.0 - i);
            dzr[hd + j] = dcell * cp[j] * f * (1.0 - f);
            dzr[2 * hd + j] = d_o * o * (1.0 - o);
            dzr[3 * hd + j] = dcell * i * (1.0 - g * g);
            dcp[j] = dcell * f;
        }
        dc_prev.row_mut(r).copy_from_slice(&dcp);
    }
    (dz, dc_prev)
}

/// Single-sample LSTM step: returns the new hidden and cell states.
pub fn lstm_step(
    params: &LstmCellParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hd = params.hidden_dim;
    if x.len() != params.input_dim {
        return Err(Error::shape(
            "lstm_step input",
            (1, x.len()),
            (1, params.input_dim),
        ));
    }
    if h_prev.len() != hd || c_prev.len() != hd {
        return Err(Error::shape(
            "lstm_step state",
            (1, h_prev.len()),
            (1, c_prev.len()),
        ));
    }
    let zx = params.input_projection(&Tensor2D::new(1, x.len(), x.to_vec())?)?;
    let h = Tensor2D::new(1, hd, h_prev.to_vec())?;
    let c = Tensor2D::new(1, hd, c_prev.to_vec())?;
    let step = params.step_batch(zx, &h, &c)?;
    Ok((step.h.into_data(), step.c.into_data()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_params(input: usize, hidden: usize, seed: u64) -> LstmCellParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = LstmCellParams::zeros(input, hidden);
        for v in
            p.w.data_mut()
                .iter_mut()
                .chain(p.u.data_mut())
                .chain(p.b.iter_mut())
        {
            *v = rng.random_range(-1.0..1.0);
        }
        p
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Reference step written gate by gate with scalar loops.
    fn reference_step(p: &LstmCellParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = p.hidden_dim();
        let pre = |gate: Gate, j: usize| {
            let wg = p.gate_w(gate);
            let ug = p.gate_u(gate);
            let mut s = p.gate_b(gate)[j];
            for k in 0..x.len() {
                s += x[k] * wg.get(k, j);
            }
            for k in 0..hd {
                s += h[k] * ug.get(k, j);
            }
            s
        };
        let mut h_new = vec![0.0; hd];
        let mut c_new = vec![0.0; hd];
        for j in 0..hd {
            let i = sig(pre(Gate::Input, j));
            let f = sig(pre(Gate::Forget, j));
            let o = sig(pre(Gate::Output, j));
            let g = pre(Gate::Candidate, j).tanh();
            c_new[j] = f * c[j] + i * g;
            h_new[j] = o * c_new[j].tanh();
        }
        (h_new, c_new)
    }

    #[test]
    fn zero_params_zero_state() {
        let p = LstmCellParams::zeros(3, 4);
        let (h, c) = lstm_step(&p, &[0.3, 0.1, 0.9], &[0.0; 4], &[0.0; 4]).unwrap();
        assert!(h.iter().chain(&c).all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_keeps_cell() {
        let mut p = LstmCellParams::zeros(2, 3);
        p.gate_b_mut(Gate::Forget).fill(1e6);
        let c_prev = [0.4, -0.7, 2.0];
        let (_, c) = lstm_step(&p, &[1.0, 1.0], &[0.1, 0.2, 0.3], &c_prev).unwrap();
        for (a, b) in c.iter().zip(&c_prev) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..5 {
            let p = random_params(5, 7, seed);
            let x: Vec<f64> = (0..5).map(|_| rng.random()).collect();
            let h: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (h1, c1) = lstm_step(&p, &x, &h, &c).unwrap();
            let (h2, c2) = reference_step(&p, &x, &h, &c);
            for (a, b) in h1.iter().zip(&h2).chain(c1.iter().zip(&c2)) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(h1.iter().all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = LstmCellParams::zeros(3, 4);
        assert!(matches!(
            lstm_step(&p, &[0.0; 2], &[0.0; 4], &[0.0; 4]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            lstm_step(&p, &[0.0; 3], &[0.0; 3], &[0.0; 4]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn glorot_sets_forget_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = LstmCellParams::glorot(30, 8, 1.0, &mut rng);
        assert!(p.gate_b(Gate::Forget).iter().all(|&b| b == 1.0));
        assert!(p.gate_b(Gate::Input).iter().all(|&b| b == 0.0));
        let limit = (6.0f64 / 38.0).sqrt();
        assert!(p.w().data().iter().all(|w| w.abs() <= limit));
    }
}

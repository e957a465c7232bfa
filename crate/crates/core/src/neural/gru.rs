use super::config::GruConfig;
use super::ops::{affine, affine_backward, head_backward, head_forward, sigmoid, HeadCache};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
struct Step<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    r: Vec<T>,
    z: Vec<T>,
    n: Vec<T>,
    /// `W_hn h + b_hn`, needed for the reset-gate gradient.
    ghn: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct GruCache<T> {
    layers: Vec<Vec<Step<T>>>,
    head: HeadCache<T>,
}

struct LayerView<'a, T> {
    wi: &'a [T],
    wh: &'a [T],
    bi: &'a [T],
    bh: &'a [T],
}

/// Parameter slices per layer, then the head weight and bias offsets.
fn layout(cfg: &GruConfig) -> (Vec<[usize; 4]>, usize, usize) {
    let h = cfg.hidden_dim;
    let mut off = 0;
    let mut layers = Vec::with_capacity(cfg.num_layers);
    for l in 0..cfg.num_layers {
        let i = cfg.layer_input(l);
        let wi = off;
        let wh = wi + 3 * h * i;
        let bi = wh + 3 * h * h;
        let bh = bi + 3 * h;
        off = bh + 3 * h;
        layers.push([wi, wh, bi, bh]);
    }
    let fc_b = off + cfg.head.n_out() * h;
    (layers, off, fc_b)
}

fn view<'a, T>(cfg: &GruConfig, p: &'a [T], l: usize, at: [usize; 4]) -> LayerView<'a, T> {
    let h = cfg.hidden_dim;
    let i = cfg.layer_input(l);
    LayerView {
        wi: &p[at[0]..at[0] + 3 * h * i],
        wh: &p[at[1]..at[1] + 3 * h * h],
        bi: &p[at[2]..at[2] + 3 * h],
        bh: &p[at[3]..at[3] + 3 * h],
    }
}

/// Gate order in the stacked weights is reset, update, candidate.
pub(crate) fn forward<T: Scalar>(
    cfg: &GruConfig,
    params: &[T],
    obs: &Matrix<T>,
    rng: Option<&mut Rng>,
) -> (Vec<T>, GruCache<T>) {
    let h = cfg.hidden_dim;
    let (offsets, fc_w, fc_b) = layout(cfg);
    let mut inputs: Vec<Vec<T>> = (0..obs.rows()).map(|t| obs.row(t).to_vec()).collect();
    let mut layers = Vec::with_capacity(cfg.num_layers);
    for (l, &at) in offsets.iter().enumerate() {
        let v = view(cfg, params, l, at);
        let mut hid = vec![T::zero(); h];
        let mut steps = Vec::with_capacity(inputs.len());
        let mut gi = vec![T::zero(); 3 * h];
        let mut gh = vec![T::zero(); 3 * h];
        for x in inputs {
            affine(v.wi, v.bi, &x, &mut gi);
            affine(v.wh, v.bh, &hid, &mut gh);
            let r: Vec<T> = (0..h).map(|k| sigmoid(gi[k] + gh[k])).collect();
            let z: Vec<T> = (0..h).map(|k| sigmoid(gi[h + k] + gh[h + k])).collect();
            let ghn = gh[2 * h..].to_vec();
            let n: Vec<T> = (0..h).map(|k| (gi[2 * h + k] + r[k] * ghn[k]).tanh()).collect();
            let next: Vec<T> = (0..h).map(|k| (T::one() - z[k]) * n[k] + z[k] * hid[k]).collect();
            steps.push(Step { x, h_prev: std::mem::replace(&mut hid, next), r, z, n, ghn });
        }
        inputs = steps.iter().skip(1).map(|s| s.h_prev.clone()).chain(std::iter::once(hid)).collect();
        layers.push(steps);
    }
    let last = inputs.pop().unwrap_or_else(|| vec![T::zero(); h]);
    let n_out = cfg.head.n_out();
    let (logits, head) = head_forward(&params[fc_w..fc_b], &params[fc_b..fc_b + n_out], last, cfg.dropout, rng);
    (logits, GruCache { layers, head })
}

pub(crate) fn backward<T: Scalar>(cfg: &GruConfig, params: &[T], cache: &GruCache<T>, dlogits: &[T]) -> Vec<T> {
    let h = cfg.hidden_dim;
    let (offsets, fc_w, fc_b) = layout(cfg);
    let mut grad = vec![T::zero(); params.len()];
    let n_out = cfg.head.n_out();
    let (head_g, bias_g) = grad[fc_w..].split_at_mut(fc_b - fc_w);
    let dlast = head_backward(&params[fc_w..fc_b], &cache.head, dlogits, head_g, &mut bias_g[..n_out]);

    let seq = cache.layers.first().map_or(0, Vec::len);
    // Gradient arriving at each step's hidden output from above.
    let mut dh_out = vec![vec![T::zero(); h]; seq];
    if let Some(last) = dh_out.last_mut() {
        *last = dlast;
    }
    for l in (0..cfg.num_layers).rev() {
        let at = offsets[l];
        let v = view(cfg, params, l, at);
        let i_dim = cfg.layer_input(l);
        let mut gwi = vec![T::zero(); 3 * h * i_dim];
        let mut gwh = vec![T::zero(); 3 * h * h];
        let mut gbi = vec![T::zero(); 3 * h];
        let mut gbh = vec![T::zero(); 3 * h];
        let mut dx_all = vec![vec![T::zero(); i_dim]; seq];
        let mut dh_next = vec![T::zero(); h];
        for t in (0..seq).rev() {
            let s = &cache.layers[l][t];
            let dh: Vec<T> = (0..h).map(|k| dh_out[t][k] + dh_next[k]).collect();
            let mut dgi = vec![T::zero(); 3 * h];
            let mut dgh = vec![T::zero(); 3 * h];
            let mut dprev = vec![T::zero(); h];
            for k in 0..h {
                let (r, z, n) = (s.r[k], s.z[k], s.n[k]);
                let dn = dh[k] * (T::one() - z);
                let dz = dh[k] * (s.h_prev[k] - n);
                dprev[k] = dh[k] * z;
                let dan = dn * (T::one() - n * n);
                let dar = dan * s.ghn[k] * r * (T::one() - r);
                let daz = dz * z * (T::one() - z);
                dgi[k] = dar;
                dgh[k] = dar;
                dgi[h + k] = daz;
                dgh[h + k] = daz;
                dgi[2 * h + k] = dan;
                dgh[2 * h + k] = dan * r;
            }
            affine_backward(v.wi, &s.x, &dgi, &mut gwi, &mut gbi, Some(&mut dx_all[t]));
            affine_backward(v.wh, &s.h_prev, &dgh, &mut gwh, &mut gbh, Some(&mut dprev));
            dh_next = dprev;
        }
        for (dst, src) in [(at[0], &gwi), (at[1], &gwh), (at[2], &gbi), (at[3], &gbh)] {
            grad[dst..dst + src.len()].copy_from_slice(src);
        }
        dh_out = dx_all;
    }
    grad
}

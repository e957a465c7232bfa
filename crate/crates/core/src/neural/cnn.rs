use super::config::{CnnConfig, ConvSpec};
use super::ops::{head_backward, head_forward, HeadCache};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

type Shape = (usize, usize, usize);

#[derive(Debug, Clone)]
struct ConvCache<T> {
    input: Vec<T>,
    in_shape: Shape,
    /// Post-ReLU output.
    out: Vec<T>,
}

#[derive(Debug, Clone)]
struct PoolCache {
    argmax: Vec<usize>,
    in_len: usize,
}

#[derive(Debug, Clone)]
pub struct CnnCache<T> {
    convs: Vec<ConvCache<T>>,
    pools: Vec<PoolCache>,
    head: HeadCache<T>,
}

fn out_shape(spec: &ConvSpec, (_, h, w): Shape) -> Shape {
    (spec.out_ch, h + 2 * spec.padding + 1 - spec.kernel, w + 2 * spec.padding + 1 - spec.kernel)
}

/// Valid output-column range for kernel column `kx`, and the input offset.
#[inline]
fn col_range(kx: usize, p: usize, w_in: usize, w_out: usize) -> (usize, usize) {
    let lo = p.saturating_sub(kx);
    let hi = w_out.min((w_in + p).saturating_sub(kx));
    (lo, hi.max(lo))
}

/// Zero-padded, stride-1 cross-correlation followed by ReLU.
pub(crate) fn conv_relu<T: Scalar>(spec: &ConvSpec, w: &[T], b: &[T], input: &[T], in_shape: Shape) -> (Vec<T>, Shape) {
    let (ci, h, wd) = in_shape;
    let (co, ho, wo) = out_shape(spec, in_shape);
    let (k, p) = (spec.kernel, spec.padding);
    let mut out = vec![T::zero(); co * ho * wo];
    for o in 0..co {
        let plane = &mut out[o * ho * wo..(o + 1) * ho * wo];
        plane.iter_mut().for_each(|v| *v = b[o]);
        for i in 0..ci {
            let src = &input[i * h * wd..(i + 1) * h * wd];
            for ky in 0..k {
                for kx in 0..k {
                    let wt = w[((o * ci + i) * k + ky) * k + kx];
                    let (x0, x1) = col_range(kx, p, wd, wo);
                    for y in 0..ho {
                        let iy = y + ky;
                        if iy < p || iy - p >= h {
                            continue;
                        }
                        let row = &src[(iy - p) * wd..];
                        let dst = &mut plane[y * wo + x0..y * wo + x1];
                        for (d, &s) in dst.iter_mut().zip(&row[x0 + kx - p..]) {
                            *d += wt * s;
                        }
                    }
                }
            }
        }
    }
    for v in &mut out {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    (out, (co, ho, wo))
}

fn conv_relu_backward<T: Scalar>(
    spec: &ConvSpec,
    w: &[T],
    cache: &ConvCache<T>,
    dout: &[T],
    dw: &mut [T],
    db: &mut [T],
    want_dx: bool,
) -> Vec<T> {
    let (ci, h, wd) = cache.in_shape;
    let (co, ho, wo) = out_shape(spec, cache.in_shape);
    let (k, p) = (spec.kernel, spec.padding);
    let dpre: Vec<T> = dout
        .iter()
        .zip(&cache.out)
        .map(|(&g, &o)| if o > T::zero() { g } else { T::zero() })
        .collect();
    let mut dx = vec![T::zero(); if want_dx { ci * h * wd } else { 0 }];
    for o in 0..co {
        let g = &dpre[o * ho * wo..(o + 1) * ho * wo];
        db[o] += g.iter().copied().sum::<T>();
        for i in 0..ci {
            let src = &cache.input[i * h * wd..(i + 1) * h * wd];
            for ky in 0..k {
                for kx in 0..k {
                    let widx = ((o * ci + i) * k + ky) * k + kx;
                    let wt = w[widx];
                    let (x0, x1) = col_range(kx, p, wd, wo);
                    let mut acc = T::zero();
                    for y in 0..ho {
                        let iy = y + ky;
                        if iy < p || iy - p >= h {
                            continue;
                        }
                        let grow = &g[y * wo + x0..y * wo + x1];
                        let base = (iy - p) * wd + x0 + kx - p;
                        acc += grow.iter().zip(&src[base..]).map(|(&a, &b)| a * b).sum::<T>();
                        if want_dx {
                            let drow = &mut dx[i * h * wd + base..];
                            for (d, &gv) in drow.iter_mut().zip(grow) {
                                *d += wt * gv;
                            }
                        }
                    }
                    dw[widx] += acc;
                }
            }
        }
    }
    dx
}

/// Non-overlapping max-pool; ties go to the first element in row-major order.
pub(crate) fn max_pool<T: Scalar>(input: &[T], (c, h, w): Shape, (ph, pw): (usize, usize)) -> (Vec<T>, Vec<usize>, Shape) {
    let (ho, wo) = (h / ph, w / pw);
    let mut out = Vec::with_capacity(c * ho * wo);
    let mut arg = Vec::with_capacity(c * ho * wo);
    for ch in 0..c {
        for y in 0..ho {
            for x in 0..wo {
                let mut best = ch * h * w + y * ph * w + x * pw;
                for dy in 0..ph {
                    for dx in 0..pw {
                        let idx = ch * h * w + (y * ph + dy) * w + x * pw + dx;
                        if input[idx] > input[best] {
                            best = idx;
                        }
                    }
                }
                out.push(input[best]);
                arg.push(best);
            }
        }
    }
    (out, arg, (c, ho, wo))
}

pub(crate) fn forward<T: Scalar>(cfg: &CnnConfig, params: &[T], obs: &Matrix<T>, rng: Option<&mut Rng>) -> (Vec<T>, CnnCache<T>) {
    let mut x = obs.as_slice().to_vec();
    let mut shape = (1, obs.rows(), obs.cols());
    let mut off = 0;
    let mut convs = Vec::new();
    let mut pools = Vec::new();
    for stack in &cfg.stacks {
        for spec in &stack.convs {
            let nw = spec.out_ch * spec.in_ch * spec.kernel * spec.kernel;
            let (w, b) = (&params[off..off + nw], &params[off + nw..off + nw + spec.out_ch]);
            off += nw + spec.out_ch;
            let (out, s) = conv_relu(spec, w, b, &x, shape);
            convs.push(ConvCache { input: std::mem::replace(&mut x, out.clone()), in_shape: shape, out });
            shape = s;
        }
        let (out, argmax, s) = max_pool(&x, shape, stack.pool);
        pools.push(PoolCache { argmax, in_len: x.len() });
        x = out;
        shape = s;
    }
    let n_out = cfg.head.n_out();
    let fc_b = off + n_out * x.len();
    let (logits, head) = head_forward(&params[off..fc_b], &params[fc_b..fc_b + n_out], x, cfg.dropout, rng);
    (logits, CnnCache { convs, pools, head })
}

pub(crate) fn backward<T: Scalar>(cfg: &CnnConfig, params: &[T], cache: &CnnCache<T>, dlogits: &[T]) -> Vec<T> {
    let mut grad = vec![T::zero(); params.len()];
    let specs: Vec<&ConvSpec> = cfg.stacks.iter().flat_map(|s| &s.convs).collect();
    let mut offsets = Vec::with_capacity(specs.len());
    let mut off = 0;
    for spec in &specs {
        offsets.push(off);
        off += spec.param_count();
    }
    let n_out = cfg.head.n_out();
    let flat = cache.head.features.len();
    let fc_b = off + n_out * flat;
    let (gw, gb) = grad[off..].split_at_mut(fc_b - off);
    let mut d = head_backward(&params[off..fc_b], &cache.head, dlogits, gw, &mut gb[..n_out]);

    let mut conv_idx = specs.len();
    for (s, stack) in cfg.stacks.iter().enumerate().rev() {
        let pool = &cache.pools[s];
        let mut dx = vec![T::zero(); pool.in_len];
        for (&i, &g) in pool.argmax.iter().zip(&d) {
            dx[i] += g;
        }
        d = dx;
        for _ in &stack.convs {
            conv_idx -= 1;
            let spec = specs[conv_idx];
            let o = offsets[conv_idx];
            let nw = spec.out_ch * spec.in_ch * spec.kernel * spec.kernel;
            let (gw, gb) = grad[o..o + nw + spec.out_ch].split_at_mut(nw);
            d = conv_relu_backward(spec, &params[o..o + nw], &cache.convs[conv_idx], &d, gw, gb, conv_idx > 0);
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng as _;

    /// Direct sliding dot product with explicit zero padding.
    fn naive(input: &[f64], h: usize, w: usize, kernel: &[f64], k: usize, p: usize, bias: f64) -> Vec<f64> {
        let ho = h + 2 * p + 1 - k;
        let wo = w + 2 * p + 1 - k;
        let at = |y: isize, x: isize| {
            if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
                0.0
            } else {
                input[y as usize * w + x as usize]
            }
        };
        let mut out = Vec::new();
        for y in 0..ho {
            for x in 0..wo {
                let mut s = bias;
                for ky in 0..k {
                    for kx in 0..k {
                        s += kernel[ky * k + kx] * at((y + ky) as isize - p as isize, (x + kx) as isize - p as isize);
                    }
                }
                out.push(s.max(0.0));
            }
        }
        out
    }

    #[test]
    fn toy_conv_matches_naive() {
        let mut rng = seeded(3);
        for (k, p) in [(3, 1), (3, 0), (2, 1), (1, 0)] {
            let input: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let kern: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let spec = ConvSpec::new(1, 1, k, p);
            let (out, _) = conv_relu(&spec, &kern, &[0.1], &input, (1, 4, 4));
            let want = naive(&input, 4, 4, &kern, k, p, 0.1);
            assert_eq!(out.len(), want.len());
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pool_picks_block_maxima() {
        let input: Vec<f64> = (0..24).map(|v| ((v * 7) % 24) as f64).collect();
        let (out, arg, shape) = max_pool(&input, (1, 4, 6), (2, 3));
        assert_eq!(shape, (1, 2, 2));
        for (j, (&o, &a)) in out.iter().zip(&arg).enumerate() {
            let (y, x) = (j / 2, j % 2);
            let block: Vec<f64> = (0..2).flat_map(|dy| (0..3).map(move |dx| (y * 2 + dy) * 6 + x * 3 + dx)).map(|i| input[i]).collect();
            assert_eq!(o, block.iter().cloned().fold(f64::MIN, f64::max));
            assert_eq!(input[a], o);
        }
    }
}

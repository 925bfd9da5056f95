//! Negative-sampling loss, its gradient, and the in-place SGD update.
//!
//! Matrices are flat row-major slices of `V * dim` entries. Everything is
//! generic over the float type so the trainer can run in `f32` while
//! gradient checks run in `f64`.

use num_traits::Float;

pub fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// `-ln(sigmoid(x))` without overflow for large `|x|`.
pub fn neg_log_sigmoid<F: Float>(x: F) -> F {
    if x >= F::zero() {
        (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p() - x
    }
}

#[inline]
fn row<F>(m: &[F], i: usize, dim: usize) -> &[F] {
    &m[i * dim..(i + 1) * dim]
}

#[inline]
fn row_mut<F>(m: &mut [F], i: usize, dim: usize) -> &mut [F] {
    &mut m[i * dim..(i + 1) * dim]
}

#[inline]
fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Mean of the context rows of `syn0`, written into `h`.
pub fn context_mean<F: Float>(syn0: &[F], dim: usize, context: &[usize], h: &mut [F]) {
    h.iter_mut().for_each(|x| *x = F::zero());
    for &c in context {
        for (a, &b) in h.iter_mut().zip(row(syn0, c, dim)) {
            *a = *a + b;
        }
    }
    let inv = F::one() / F::from(context.len()).unwrap();
    h.iter_mut().for_each(|x| *x = *x * inv);
}

/// `-ln σ(h·v'_t) - Σ_k ln σ(-h·v'_k)` with `h` the mean context row.
pub fn nce_loss<F: Float>(
    syn0: &[F],
    syn1neg: &[F],
    dim: usize,
    context: &[usize],
    target: usize,
    negatives: &[usize],
) -> F {
    let mut h = vec![F::zero(); dim];
    context_mean(syn0, dim, context, &mut h);
    let mut loss = neg_log_sigmoid(dot(&h, row(syn1neg, target, dim)));
    for &k in negatives {
        loss = loss + neg_log_sigmoid(-dot(&h, row(syn1neg, k, dim)));
    }
    loss
}

/// Gradient of [`nce_loss`] with respect to one matrix row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGradient<F> {
    pub ordinal: usize,
    pub grad: Vec<F>,
}

/// Gradients with respect to every row the loss touches, one entry per
/// distinct row, ordered by ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct NceGradients<F> {
    pub syn0: Vec<RowGradient<F>>,
    pub syn1neg: Vec<RowGradient<F>>,
}

fn accumulate<F: Float>(rows: &mut Vec<RowGradient<F>>, ordinal: usize, scale: F, v: &[F]) {
    let pos = match rows.binary_search_by_key(&ordinal, |r| r.ordinal) {
        Ok(p) => p,
        Err(p) => {
            rows.insert(
                p,
                RowGradient {
                    ordinal,
                    grad: vec![F::zero(); v.len()],
                },
            );
            p
        }
    };
    for (g, &x) in rows[pos].grad.iter_mut().zip(v) {
        *g = *g + scale * x;
    }
}

/// Exact gradient of [`nce_loss`].
pub fn nce_gradients<F: Float>(
    syn0: &[F],
    syn1neg: &[F],
    dim: usize,
    context: &[usize],
    target: usize,
    negatives: &[usize],
) -> NceGradients<F> {
    let mut h = vec![F::zero(); dim];
    context_mean(syn0, dim, context, &mut h);
    let mut grad_h = vec![F::zero(); dim];
    let mut out = NceGradients {
        syn0: Vec::new(),
        syn1neg: Vec::new(),
    };
    let outputs = std::iter::once((target, F::one())).chain(negatives.iter().map(|&k| (k, F::zero())));
    for (u, label) in outputs {
        let v = row(syn1neg, u, dim);
        // d/df of the per-output loss term is sigma(f) - label.
        let coef = sigmoid(dot(&h, v)) - label;
        accumulate(&mut out.syn1neg, u, coef, &h);
        for (g, &x) in grad_h.iter_mut().zip(v) {
            *g = *g + coef * x;
        }
    }
    let share = F::one() / F::from(context.len()).unwrap();
    for &c in context {
        accumulate(&mut out.syn0, c, share, &grad_h);
    }
    out
}

/// One CBOW negative-sampling step, in place. Returns the loss at the
/// pre-update parameters.
///
/// Outputs are processed in order (target first): `g = (label - σ(h·v'))·lr`,
/// `e += g·v'`, then `v' += g·h`. Finally `e` is added to every context
/// row, once per occurrence. The output rows thus move by `-lr` times their
/// gradient while each context row moves by `-lr·|C|` times its gradient,
/// the usual CBOW convention of applying the hidden-layer error undivided.
#[allow(clippy::too_many_arguments)]
pub fn sgd_update<F: Float>(
    syn0: &mut [F],
    syn1neg: &mut [F],
    dim: usize,
    context: &[usize],
    target: usize,
    negatives: &[usize],
    lr: F,
    h: &mut [F],
    e: &mut [F],
) -> F {
    context_mean(syn0, dim, context, h);
    e.iter_mut().for_each(|x| *x = F::zero());
    let mut loss = F::zero();
    let outputs = std::iter::once((target, F::one())).chain(negatives.iter().map(|&k| (k, F::zero())));
    for (u, label) in outputs {
        let v = row_mut(syn1neg, u, dim);
        let f = dot(h, v);
        loss = loss + if label > F::zero() { neg_log_sigmoid(f) } else { neg_log_sigmoid(-f) };
        let g = (label - sigmoid(f)) * lr;
        for ((ei, vi), &hi) in e.iter_mut().zip(v.iter_mut()).zip(h.iter()) {
            *ei = *ei + g * *vi;
            *vi = *vi + g * hi;
        }
    }
    for &c in context {
        for (a, &b) in row_mut(syn0, c, dim).iter_mut().zip(e.iter()) {
            *a = *a + b;
        }
    }
    loss
}

//! Central finite differences and gradient checking against the tape.
//!
//! These are the oracle side of every gradient claim in the crate: the
//! finite-difference path never touches [`Tape::backward`].

use crate::tape::{NodeId, Tape};
use crate::tensor::{Tensor, TensorError};

/// Builds a scalar loss node from parameter leaves. The closure must be
/// deterministic: any randomness has to be captured as fixed tensors.
pub trait LossBuilder: Fn(&mut Tape, &[NodeId]) -> Result<NodeId, TensorError> {}
impl<F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId, TensorError>> LossBuilder for F {}

fn eval_loss<F: LossBuilder>(build: &F, params: &[Tensor]) -> Result<f64, TensorError> {
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let loss = build(&mut tape, &ids)?;
    let v = tape.value(loss).as_scalar()?;
    if !v.is_finite() {
        return Err(TensorError::NonFinite { op: "finite_diff" });
    }
    Ok(v)
}

/// Reverse-mode gradients of the loss with respect to every parameter.
pub fn tape_grad<F: LossBuilder>(build: &F, params: &[Tensor]) -> Result<Vec<Tensor>, TensorError> {
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let loss = build(&mut tape, &ids)?;
    let grads = tape.backward(loss)?;
    Ok(ids
        .iter()
        .zip(params)
        .map(|(&id, p)| grads.get_or_zero(id, p.shape()))
        .collect())
}

/// Central differences (f(p+eps) - f(p-eps)) / (2 eps) per coordinate.
pub fn finite_diff_grad<F: LossBuilder>(
    build: &F,
    params: &[Tensor],
    eps: f64,
) -> Result<Vec<Tensor>, TensorError> {
    if eps <= 0.0 {
        return Err(TensorError::Invalid("eps must be positive".into()));
    }
    let mut work: Vec<Tensor> = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut grad = Tensor::zeros(params[pi].shape().to_vec());
        for k in 0..params[pi].numel() {
            let orig = work[pi].data()[k];
            work[pi].data_mut()[k] = orig + eps;
            let fp = eval_loss(build, &work)?;
            work[pi].data_mut()[k] = orig - eps;
            let fm = eval_loss(build, &work)?;
            work[pi].data_mut()[k] = orig;
            grad.data_mut()[k] = (fp - fm) / (2.0 * eps);
        }
        out.push(grad);
    }
    Ok(out)
}

/// Outcome of [`grad_check`]: worst coordinate and its relative error.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// (parameter index, flat coordinate) of the worst disagreement.
    pub worst: (usize, usize),
    pub pass: bool,
    pub tol: f64,
}

/// Compares reverse-mode gradients with central differences coordinate by
/// coordinate using |g_ad - g_fd| / max(1e-12, |g_ad| + |g_fd|).
pub fn grad_check<F: LossBuilder>(
    build: &F,
    params: &[Tensor],
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport, TensorError> {
    let ad = tape_grad(build, params)?;
    let fd = finite_diff_grad(build, params, eps)?;
    let mut max_rel_err = 0.0;
    let mut worst = (0, 0);
    for (pi, (ga, gf)) in ad.iter().zip(&fd).enumerate() {
        for (k, (a, f)) in ga.data().iter().zip(gf.data()).enumerate() {
            let rel = (a - f).abs() / (a.abs() + f.abs()).max(1e-12);
            if rel > max_rel_err {
                max_rel_err = rel;
                worst = (pi, k);
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        worst,
        pass: max_rel_err <= tol,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_matches() {
        let build = |t: &mut Tape, ids: &[NodeId]| {
            let s = t.square(ids[0]);
            Ok(t.sum(s))
        };
        let params = vec![Tensor::scalar(3.0)];
        let fd = finite_diff_grad(&build, &params, 1e-5).unwrap();
        assert!((fd[0].data()[0] - 6.0).abs() < 1e-9);
        let report = grad_check(&build, &params, 1e-5, 1e-6).unwrap();
        assert!(report.pass, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let build = |t: &mut Tape, ids: &[NodeId]| {
            let z = t.scale(ids[0], 0.0);
            Ok(t.sum(z))
        };
        let params = vec![Tensor::vector(vec![1.0, -2.0, 3.0])];
        let fd = finite_diff_grad(&build, &params, 1e-5).unwrap();
        for g in fd[0].data() {
            assert!(g.abs() < 1e-10);
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        // Loss whose tape gradient is deliberately wrong on one coordinate:
        // clamp_min treats its input as flat below the floor, so routing one
        // coordinate through a region where FD sees curvature breaks agreement.
        // Simpler: compare two different losses under one report by hand.
        let build_ad = |t: &mut Tape, ids: &[NodeId]| {
            let s = t.square(ids[0]);
            Ok(t.sum(s))
        };
        let params = vec![Tensor::vector(vec![1.0, 2.0])];
        let ad = tape_grad(&build_ad, &params).unwrap();
        let mut corrupted = ad.clone();
        corrupted[0].data_mut()[1] += 1.0;
        let fd = finite_diff_grad(&build_ad, &params, 1e-5).unwrap();
        // replicate grad_check arithmetic on the corrupted gradient
        let mut max_rel = 0.0;
        let mut worst = (0, 0);
        for (k, (a, f)) in corrupted[0].data().iter().zip(fd[0].data()).enumerate() {
            let rel = (a - f).abs() / (a.abs() + f.abs()).max(1e-12);
            if rel > max_rel {
                max_rel = rel;
                worst = (0, k);
            }
        }
        assert!(max_rel > 1e-2);
        assert_eq!(worst, (0, 1));
    }

    #[test]
    fn two_layer_mlp_loss_matches_backward() {
        // random-ish fixed 2-layer MLP loss; FD is the oracle
        let x = Tensor::matrix(3, 2, vec![0.5, -0.2, 1.0, 0.3, -0.7, 0.9]).unwrap();
        let w1 = Tensor::matrix(2, 4, (0..8).map(|i| 0.1 * i as f64 - 0.35).collect()).unwrap();
        let b1 = Tensor::vector(vec![0.01, -0.02, 0.03, 0.0]);
        let w2 = Tensor::matrix(4, 1, vec![0.2, -0.4, 0.6, -0.8]).unwrap();
        let b2 = Tensor::vector(vec![0.05]);
        let xc = x.clone();
        let build = move |t: &mut Tape, ids: &[NodeId]| {
            let xid = t.leaf(xc.clone());
            let h = t.affine(xid, ids[0], ids[1])?;
            let a = t.leaky_relu(h, 0.01);
            let o = t.affine(a, ids[2], ids[3])?;
            let s = t.square(o);
            Ok(t.mean(s))
        };
        let params = vec![w1, b1, w2, b2];
        let report = grad_check(&build, &params, 1e-5, 1e-6).unwrap();
        assert!(report.pass, "rel err {}", report.max_rel_err);
    }
}

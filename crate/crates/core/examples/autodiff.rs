//! Fits a tiny logistic-regression model with the tape-based autodiff and
//! clipped Adam, then checks one gradient against finite differences.
//!
//! Usage: cargo run --example autodiff

use ctxnmt::tensor::{adam_step, AdamConfig, AdamState, Graph, Tensor};

fn loss(w: &Tensor, xs: &[[f64; 2]], ys: &[usize]) -> (Graph, ctxnmt::tensor::Var) {
    let mut g = Graph::new();
    let wv = g.param(0, w);
    let mut terms = Vec::new();
    for (x, &y) in xs.iter().zip(ys) {
        let xv = g.input(&Tensor::new(vec![2], x.to_vec()).unwrap());
        let logits = g.matmul(wv, xv).unwrap();
        terms.push(g.nll(logits, y).unwrap());
    }
    let total = g.sum_scalars(&terms).unwrap();
    (g, total)
}

fn main() {
    let xs = [[1.0, 0.2], [0.9, -0.1], [-1.0, 0.3], [-0.8, -0.2]];
    let ys = [0, 0, 1, 1];
    let mut w = Tensor::new(vec![2, 2], vec![0.1, -0.2, 0.05, 0.3]).unwrap();
    w.requires_grad = true;
    let mut state = AdamState::new(AdamConfig { learning_rate: 0.1, ..AdamConfig::default() }, [&w]);
    for step in 0..=50 {
        let (g, l) = loss(&w, &xs, &ys);
        let grads = g.backward(l).unwrap();
        w.grad = None;
        grads.accumulate_into(&mut [&mut w]);
        if step % 10 == 0 {
            println!("step {step:2}  loss {:.5}", g.scalar(l));
        }
        adam_step(&mut [&mut w], &mut state).unwrap();
    }

    let (g, l) = loss(&w, &xs, &ys);
    let analytic = g.backward(l).unwrap().params()[0].1[0];
    let h = 1e-5;
    let mut plus = w.clone();
    plus.values_mut()[0] += h;
    let mut minus = w.clone();
    minus.values_mut()[0] -= h;
    let (gp, lp) = loss(&plus, &xs, &ys);
    let (gm, lm) = loss(&minus, &xs, &ys);
    let numeric = (gp.scalar(lp) - gm.scalar(lm)) / (2.0 * h);
    println!("dL/dw[0,0]: backprop {analytic:.8}, central difference {numeric:.8}");
}

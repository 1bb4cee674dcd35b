//! Central finite differences against the hand-written backward pass, first on
//! a single tape op and then on the whole detector loss.

use hetbot::experiments::toy_grad_check;
use hetbot::numcore::{grad_check, Activation, Matrix, ParamStore, Tape, DEFAULT_STEP};

fn main() -> hetbot::Result<()> {
    let mut store = ParamStore::new();
    let w = store.add("w", Matrix::from_rows(&[[0.3, -0.7], [1.1, 0.2]]));
    let x = Matrix::from_rows(&[[1.0, 2.0], [-0.5, 0.4], [0.9, -1.3]]);
    let report = grad_check(&store, DEFAULT_STEP, |s| {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let wv = tape.param(s, w);
        let y = tape.matmul(xv, wv)?;
        let t = tape.act(y, Activation::Tanh);
        let loss = tape.sum_squares(t);
        let value = tape.value(loss).item();
        Ok((value, tape.backward(loss)?.for_store(s)))
    })?;
    println!("tanh(xW): max relative error {:.2e}", report.max_rel_err);

    for (residual, r) in toy_grad_check()? {
        println!(
            "full model, {residual:?} residual: max relative error {:.2e} over {} entries",
            r.max_rel_err, r.entries_checked
        );
    }
    Ok(())
}

//! Plain GP regression at fixed length scales: fit on a coarse grid of
//! sin(x), predict in between, and compare the log marginal likelihood of a
//! few length scales.

use inhomo::gp::{log_likelihood, points, GpPosterior, JitterLadder, PairwiseSqDiffs, SqeKernel};

fn main() -> inhomo::Result<()> {
    let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.5]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x[0].sin()).collect();
    let x = points(&xs);
    let ladder = JitterLadder::default();

    let diffs = PairwiseSqDiffs::new(&x);
    for ell in [0.01, 0.1, 1.0, 4.0, 20.0] {
        let chol = diffs.factor(&SqeKernel::new(vec![ell])?, &ladder)?;
        println!("ell = {ell:>5}: log L = {:>10.3}  (jitter {:e})", log_likelihood(&chol, &ys)?, chol.jitter());
    }

    let post = GpPosterior::fit(&x, &ys, SqeKernel::new(vec![4.0])?, &ladder)?;
    println!("\n    x   sin(x)     mean       sd");
    for i in 0..8 {
        let t = 0.35 + i as f64 * 0.7;
        let p = post.predict(&[t])?;
        println!("{t:>5.2} {:>8.4} {:>8.4} {:>8.4}", t.sin(), p.mean, p.sd());
    }
    Ok(())
}

//! Check residual-network backpropagation against central finite differences.

use coevolve::problems::stability::{residual_backward, residual_forward, ResidualNet};

fn objective(net: &ResidualNet, x: &[f64], upstream: &[f64]) -> f64 {
    let out = residual_forward(net, x).expect("shapes match").output;
    out.iter().zip(upstream).map(|(o, u)| o * u).sum()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 1e-6;
    for (seed, residual) in [(1u64, true), (2, false), (3, true)] {
        let mut net = ResidualNet::init(2, 5, 3, 2, residual, seed);
        let x = [0.3, -0.7];
        let upstream = [1.0, -0.5];
        let analytic = residual_backward(&net, &x, &upstream)?.flat();
        let theta = net.params_flat();
        let mut worst = 0.0f64;
        for i in 0..theta.len() {
            let mut p = theta.clone();
            p[i] = theta[i] + h;
            net.set_params_flat(&p);
            let up = objective(&net, &x, &upstream);
            p[i] = theta[i] - h;
            net.set_params_flat(&p);
            let down = objective(&net, &x, &upstream);
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        net.set_params_flat(&theta);
        println!(
            "seed {seed} residual={residual:<5} params={:<3} max relative error {worst:.2e}",
            theta.len()
        );
    }
    Ok(())
}

use yde_core::linalg::tradeoff_curve;
use yde_core::pendulum::PendulumParams;

fn main() {
    let p = PendulumParams::default();
    let c_f = p.g_grav / p.l_bar;
    let deltas: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
    for s in tradeoff_curve(&p.a_matrix(), &deltas).unwrap() {
        println!("delta {:.2} lambda_a {:.5} c_a {:.5} lambda {:.5}", s.delta, s.lambda_a, s.c_a, s.lambda_a - s.c_a * c_f);
    }
}

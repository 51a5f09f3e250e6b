use vizketch_verify::calibrate;

fn show(name: &str, points: &[calibrate::Point]) {
    for p in points {
        println!("{name:<10} C={:<8} n={:<9} rate={:.3}", p.constant, p.sample_size, p.rate);
    }
}

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    show("quantile", &calibrate::quantile(&[0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5], trials));
    show("cdf", &calibrate::cdf(&[4.0, 8.0, 12.0, 16.0, 20.0, 25.0, 35.0, 50.0], trials));
    show("histogram", &calibrate::histogram(&[0.002, 0.003, 0.005, 0.0075, 0.01, 0.015, 0.02], trials));
}

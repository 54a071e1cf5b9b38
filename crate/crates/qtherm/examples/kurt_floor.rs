// kurtosis of an exactly-sampled Gaussian: pure quadrature artifact
use qtherm::evolution::StateField;
use qtherm::grid::RectGrid;

fn main() {
    for n in [128usize, 256, 512] {
        for half in [5.0, 6.0, 8.0] {
            let sig = 0.7071067811865476f64; // sqrt(0.5)
            let grid = RectGrid::line(-half * sig, half * sig, n);
            let f = StateField::from_fn(grid, |a| (-0.5 * (a[0] / sig).powi(2)).exp()).normalized();
            println!(
                "n={n:4} half={half} kurt={:+.3e} var_err={:+.3e}",
                f.excess_kurtosis(0),
                (f.variance(0) - sig * sig) / (sig * sig)
            );
        }
    }
}

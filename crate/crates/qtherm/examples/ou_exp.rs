// quick OU experiment: box width & scheme vs variance error and kurtosis
use nalgebra::DMatrix;
use qtherm::evolution::{cfl_bound, fp_evolve, DriftDiffusionSpec, FpOptions, StateField};
use qtherm::grid::RectGrid;

fn main() {
    let gamma = 1.0f64;
    let d0 = 0.5f64;
    let sig = (d0 / gamma).sqrt();
    for half in [5.0, 5.5, 6.0] {
        for scheme in ["centered", "linear-upwind"] {
            let grid = RectGrid::line(-half * sig, half * sig, 256);
            let state = StateField::from_fn(grid, |a| {
                let s = 0.6 * sig;
                (-0.5 * (a[0] / s).powi(2)).exp()
            })
            .normalized();
            let spec = DriftDiffusionSpec::new(
                1,
                move |a| vec![-gamma * a[0]],
                move |_| DMatrix::from_element(1, 1, d0),
            );
            let dt = 0.8 * cfl_bound(&state.grid, &spec);
            let opts = FpOptions { scheme: scheme.into(), ..Default::default() };
            let out = fp_evolve(&state, &spec, 5.0 / gamma, dt, &opts).unwrap();
            let var_err = (out.final_state.variance(0) - d0 / gamma).abs() / (d0 / gamma);
            let kurt = out.final_state.excess_kurtosis(0).abs();
            println!("half={half} scheme={scheme:14} var_err={var_err:.3e} kurt={kurt:.3e}");
        }
    }
}

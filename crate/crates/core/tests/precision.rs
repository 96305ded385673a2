use spinboson_core::dynamics::{uniform_times, QuadratureConfig};
use spinboson_core::self_energy::evaluator;
use spinboson_core::{Dynamics, Dynamics32};

#[test]
fn single_precision_follows_double() {
    let times64 = uniform_times(60.0_f64, 5.0);
    let times32 = uniform_times(60.0_f32, 5.0);
    let d64 =
        Dynamics::new(evaluator(0.1, 0.1).unwrap(), QuadratureConfig::default()).expect("dyn");
    let d32 =
        Dynamics32::new(evaluator(0.1, 0.1).unwrap(), QuadratureConfig::default()).expect("dyn");
    let a = d64.trajectory(&times64).unwrap();
    let b = d32.trajectory(&times32).unwrap();
    for i in 0..a.len() {
        assert!(
            (a.sz[i] - b.sz[i] as f64).abs() < 1e-3,
            "sz at {}",
            a.times[i]
        );
        assert!(
            (a.sx[i] - b.sx[i] as f64).abs() < 1e-3,
            "sx at {}",
            a.times[i]
        );
        assert!(b.norm(i) <= 1.0 + 1e-4);
    }
}

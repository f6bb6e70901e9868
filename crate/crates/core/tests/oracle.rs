use splitdre::experiments::{build_problem, ExperimentConfig};
use splitdre::oracle::{dense_rk_reference, DenseProblem};

#[test]
fn rk4_reference_is_fourth_order_at_the_final_time() {
    let config = ExperimentConfig::desk(1).unwrap();
    let problem = build_problem(&config, 8).unwrap();
    let dense = DenseProblem::from_problem(&problem).unwrap();
    let finest = 1usize << 12;
    let exact = dense_rk_reference(&dense, finest).unwrap();
    let mut points = Vec::new();
    for k in 6..=9u32 {
        let steps = 1usize << k;
        let states = dense_rk_reference(&dense, steps).unwrap();
        let err = (&states.last().unwrap().p - &exact.last().unwrap().p).amax();
        points.push(((dense.horizon / steps as f64).log2(), err.log2()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((3.7..=4.3).contains(&slope), "slope {slope}, points {points:?}");
}

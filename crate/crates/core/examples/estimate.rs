//! Estimate the mean cost and one gradient variance of a small ansatz,
//! going through the full pipeline: JSON -> canonical form -> symmetry
//! centers -> sample plan -> Clifford sampling, with the dense engine as a
//! cross-check.

use cliffvar::{
    circuit_from_json, enumerate_exact, estimate_first_order, estimate_gradient_variance,
    gamma_total, mc_average, param_mixtures, plan_samples, DenseQuantity, ExactSpec,
};
use rand::SeedableRng;

const DOC: &str = r#"{
  "n": 3,
  "layers": [
    {
      "fixed": [{"kind": "H", "q": [0]}, {"kind": "CZ", "q": [0, 1]}],
      "rotation": {"qubit": 0, "axis": "Y", "dist": {"dist": "uniform"}}
    },
    {
      "fixed": [{"kind": "CNOT", "q": [1, 2]}],
      "rotation": {"qubit": 1, "axis": "Z", "dist": {"dist": "gaussian", "mean": 0.0, "var": 0.5}}
    },
    {
      "fixed": [{"kind": "H", "q": [2]}],
      "rotation": {"qubit": 2, "axis": "X", "dist": {"dist": "dirac", "atoms": [[0.7853981633974483, 0.5], [-0.7853981633974483, 0.5]]}}
    }
  ],
  "observable": {"kind": "pauli_sum", "terms": [[1.0, "ZZI"], [0.5, "IXX"]]}
}"#;

fn main() {
    let (circuit, dists, observable) = circuit_from_json(DOC).expect("parse");
    let canonical = circuit.canonicalize_to_z();
    let (prepared, laws) = canonical.extract_symmetry_center(&dists).expect("centers");

    let mixtures = param_mixtures(&prepared, &laws, 1).expect("mixtures");
    let gamma = gamma_total(&mixtures);
    let plan = plan_samples(0.05, 0.05, prepared.m(), observable.norm_bound(), gamma)
        .expect("plan");
    println!(
        "plan: k = {} (gamma = {:.6}, mode = {:?})",
        plan.k, plan.gamma_total, plan.mode
    );

    let report = estimate_first_order(&prepared, &observable, &laws, None, &plan, 7).expect("run");
    let exact = enumerate_exact(&prepared, &observable, &laws, ExactSpec::FirstOrder(None))
        .expect("enumerate");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (dense, dense_se) =
        mc_average(&circuit, &observable, &dists, DenseQuantity::Cost, 20_000, &mut rng)
            .expect("dense");
    println!(
        "mean cost: sampled {:+.5} +- {:.5} | enumerated {:+.5} | dense mc {:+.5} +- {:.5}",
        report.estimate, report.stderr, exact, dense, dense_se
    );
    assert!((report.estimate - exact).abs() < 5.0 * report.stderr.max(1e-9));
    assert!((dense - exact).abs() < 5.0 * dense_se.max(1e-9));

    let variance =
        estimate_gradient_variance(&prepared, &observable, &laws, 0, &plan, 11).expect("variance");
    println!(
        "gradient variance (parameter 0): {:+.5} +- {:.5} over {} draws in {:.2}s",
        variance.estimate, variance.stderr, variance.k_used, variance.wall_time_s
    );
    println!("estimate report json: {}", serde_json::to_string(&report).expect("serialize"));
}

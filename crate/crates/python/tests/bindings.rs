use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<T>(f: impl FnOnce(&Bound<'_, PyModule>) -> PyResult<T>) -> T {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(idstress_py::idstress_py)(py);
        f(m.bind(py).cast::<PyModule>().unwrap()).unwrap()
    })
}

#[test]
fn evaluate_scores_a_permuted_copy() {
    let scores: Vec<(String, Option<f64>)> = with_module(|m| {
        let z: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let zhat: Vec<Vec<f64>> = z.iter().map(|r| vec![3.0 * r[1], -r[0]]).collect();
        let kwargs = PyDict::new(m.py());
        kwargs.set_item("metrics", vec!["mcc_p", "mcc_s"])?;
        m.getattr("evaluate")?.call((z, zhat), Some(&kwargs))?.extract()
    });
    assert_eq!(scores.len(), 2);
    for (name, v) in scores {
        assert!((v.unwrap() - 1.0).abs() < 1e-12, "{name}");
    }
}

#[test]
fn bad_input_raises_value_error() {
    with_module(|m| {
        let err = m.getattr("null_mcc_floor")?.call1((0usize, 10usize)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(m.py()));
        let err = m.getattr("preset_config")?.call1(("nope",)).unwrap_err();
        assert!(err.to_string().contains("nope"));
        Ok(())
    });
}

#[test]
fn suite_json_round_trips() {
    let text: String = with_module(|m| {
        m.getattr("run_properties")?
            .call1((r#"{"seeds": [0], "metrics": ["mcc_p"], "properties": ["P4"],
                "null": {"d": 3, "dim_ratios": [1], "sample_ratios": [0.1]}}"#,))?
            .extract()
    });
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(text.contains("\"P4\""), "{v}");
}

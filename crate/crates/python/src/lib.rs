use pyo3::prelude::*;

#[pymodule]
fn kgbench_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}

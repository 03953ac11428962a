use pyo3::prelude::*;

#[pymodule]
fn arbocode_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
